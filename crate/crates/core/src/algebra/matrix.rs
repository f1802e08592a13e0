//! Small dense matrices over symbolic expressions.

use super::ratexpr::RationalExpr;
use super::spectral::SpectralPoly;
use std::fmt;

#[derive(Clone, PartialEq, Eq)]
pub struct PolyMatrix {
    n: usize,
    m: usize,
    data: Vec<RationalExpr>,
}

impl PolyMatrix {
    pub fn zeros(n: usize, m: usize) -> PolyMatrix {
        PolyMatrix { n, m, data: vec![RationalExpr::zero(); n * m] }
    }

    pub fn identity(n: usize) -> PolyMatrix {
        let mut a = PolyMatrix::zeros(n, n);
        for i in 0..n {
            a.set(i, i, RationalExpr::one());
        }
        a
    }

    pub fn from_fn(n: usize, m: usize, f: impl Fn(usize, usize) -> RationalExpr) -> PolyMatrix {
        let mut data = Vec::with_capacity(n * m);
        for i in 0..n {
            for j in 0..m {
                data.push(f(i, j));
            }
        }
        PolyMatrix { n, m, data }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> &RationalExpr {
        &self.data[i * self.m + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: RationalExpr) {
        self.data[i * self.m + j] = v;
    }

    pub fn transpose(&self) -> PolyMatrix {
        PolyMatrix::from_fn(self.m, self.n, |i, j| self.get(j, i).clone())
    }

    pub fn add(&self, o: &PolyMatrix) -> PolyMatrix {
        assert_eq!((self.n, self.m), (o.n, o.m));
        PolyMatrix::from_fn(self.n, self.m, |i, j| self.get(i, j).add(o.get(i, j)))
    }

    pub fn sub(&self, o: &PolyMatrix) -> PolyMatrix {
        assert_eq!((self.n, self.m), (o.n, o.m));
        PolyMatrix::from_fn(self.n, self.m, |i, j| self.get(i, j).sub(o.get(i, j)))
    }

    pub fn scale(&self, k: &RationalExpr) -> PolyMatrix {
        PolyMatrix::from_fn(self.n, self.m, |i, j| self.get(i, j).mul(k))
    }

    pub fn mul(&self, o: &PolyMatrix) -> PolyMatrix {
        assert_eq!(self.m, o.n);
        PolyMatrix::from_fn(self.n, o.m, |i, j| {
            let mut acc = RationalExpr::zero();
            for k in 0..self.m {
                let (a, b) = (self.get(i, k), o.get(k, j));
                if !a.is_zero() && !b.is_zero() {
                    acc = acc.add(&a.mul(b));
                }
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[RationalExpr]) -> Vec<RationalExpr> {
        assert_eq!(self.m, v.len());
        (0..self.n)
            .map(|i| {
                let mut acc = RationalExpr::zero();
                for (k, x) in v.iter().enumerate() {
                    let a = self.get(i, k);
                    if !a.is_zero() && !x.is_zero() {
                        acc = acc.add(&a.mul(x));
                    }
                }
                acc
            })
            .collect()
    }

    /// Bilinear form `x^T A y`.
    pub fn bilinear(&self, x: &[RationalExpr], y: &[RationalExpr]) -> RationalExpr {
        let ay = self.mul_vec(y);
        x.iter().zip(&ay).fold(RationalExpr::zero(), |acc, (a, b)| acc.add(&a.mul(b)))
    }

    /// Determinant by cofactor expansion along the first row.
    pub fn det(&self) -> RationalExpr {
        assert_eq!(self.n, self.m);
        match self.n {
            0 => RationalExpr::one(),
            1 => self.get(0, 0).clone(),
            _ => {
                let mut acc = RationalExpr::zero();
                for j in 0..self.n {
                    let a = self.get(0, j);
                    if a.is_zero() {
                        continue;
                    }
                    let minor = self.minor(0, j);
                    let t = a.mul(&minor.det());
                    acc = if j % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
                }
                acc
            }
        }
    }

    pub fn minor(&self, r: usize, c: usize) -> PolyMatrix {
        PolyMatrix::from_fn(self.n - 1, self.m - 1, |i, j| {
            let ii = if i < r { i } else { i + 1 };
            let jj = if j < c { j } else { j + 1 };
            self.get(ii, jj).clone()
        })
    }

    /// `f(A)` by Horner's scheme on actual matrix products.
    pub fn apply_poly(&self, f: &SpectralPoly) -> PolyMatrix {
        let mut acc = PolyMatrix::zeros(self.n, self.n);
        for c in f.coeffs().iter().rev() {
            acc = acc.mul(self).add(&PolyMatrix::identity(self.n).scale(c));
        }
        acc
    }

    /// Characteristic polynomial `det(mu I - A)` by Faddeev-LeVerrier.
    pub fn char_poly(&self) -> SpectralPoly {
        let n = self.n;
        let mut coeffs = vec![RationalExpr::one()];
        let mut mk = PolyMatrix::zeros(n, n);
        let mut ck = RationalExpr::one();
        for k in 1..=n {
            mk = self.mul(&mk).add(&PolyMatrix::identity(n).scale(&ck));
            let tr = self.mul(&mk).trace();
            ck = tr.scale(&crate::algebra::rational::qr(-1, k as i64));
            coeffs.push(ck.clone());
        }
        SpectralPoly::from_high(coeffs)
    }

    pub fn trace(&self) -> RationalExpr {
        (0..self.n.min(self.m)).fold(RationalExpr::zero(), |acc, i| acc.add(self.get(i, i)))
    }
}

impl fmt::Display for PolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.m).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for PolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> RationalExpr {
        RationalExpr::parse(s).unwrap()
    }

    #[test]
    fn det_and_char_poly_agree() {
        let a = PolyMatrix::from_fn(3, 3, |i, j| r(&format!("w{} + {}", i + 1, j)));
        let mu = r("lambda");
        let shifted = PolyMatrix::identity(3).scale(&mu).sub(&a);
        assert_eq!(a.char_poly().eval(&mu), shifted.det());
    }
}
