//! Univariate polynomials in the spectral parameter `mu` with symbolic
//! coefficients, and arithmetic in the quotient ring modulo a monic
//! polynomial.

use super::ratexpr::RationalExpr;
use super::rational::Q;
use crate::error::{Error, Result};
use std::fmt;

/// `coeffs[k]` is the coefficient of `mu^k`; no trailing zeros.
#[derive(Clone, PartialEq, Eq)]
pub struct SpectralPoly {
    coeffs: Vec<RationalExpr>,
}

impl SpectralPoly {
    pub fn zero() -> SpectralPoly {
        SpectralPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: RationalExpr) -> SpectralPoly {
        SpectralPoly::new(vec![c])
    }

    /// `mu^k`.
    pub fn monomial(k: usize) -> SpectralPoly {
        let mut coeffs = vec![RationalExpr::zero(); k + 1];
        coeffs[k] = RationalExpr::one();
        SpectralPoly { coeffs }
    }

    /// From low-to-high coefficients.
    pub fn new(mut coeffs: Vec<RationalExpr>) -> SpectralPoly {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        SpectralPoly { coeffs }
    }

    /// From high-to-low coefficients.
    pub fn from_high(mut coeffs: Vec<RationalExpr>) -> SpectralPoly {
        coeffs.reverse();
        SpectralPoly::new(coeffs)
    }

    /// `mu^n + a_1 mu^{n-1} + ... + a_n`.
    pub fn monic(a: &[RationalExpr]) -> SpectralPoly {
        let mut c = vec![RationalExpr::one()];
        c.extend(a.iter().cloned());
        SpectralPoly::from_high(c)
    }

    /// `mu - r`.
    pub fn linear_root(r: &RationalExpr) -> SpectralPoly {
        SpectralPoly::new(vec![r.neg(), RationalExpr::one()])
    }

    pub fn coeffs(&self) -> &[RationalExpr] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> RationalExpr {
        self.coeffs.get(k).cloned().unwrap_or_else(RationalExpr::zero)
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Option<&RationalExpr> {
        self.coeffs.last()
    }

    pub fn add(&self, o: &SpectralPoly) -> SpectralPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        SpectralPoly::new((0..n).map(|k| self.coeff(k).add(&o.coeff(k))).collect())
    }

    pub fn sub(&self, o: &SpectralPoly) -> SpectralPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        SpectralPoly::new((0..n).map(|k| self.coeff(k).sub(&o.coeff(k))).collect())
    }

    pub fn neg(&self) -> SpectralPoly {
        SpectralPoly { coeffs: self.coeffs.iter().map(|c| c.neg()).collect() }
    }

    pub fn scale(&self, k: &RationalExpr) -> SpectralPoly {
        SpectralPoly::new(self.coeffs.iter().map(|c| c.mul(k)).collect())
    }

    pub fn scale_q(&self, k: &Q) -> SpectralPoly {
        SpectralPoly::new(self.coeffs.iter().map(|c| c.scale(k)).collect())
    }

    pub fn mul(&self, o: &SpectralPoly) -> SpectralPoly {
        if self.is_zero() || o.is_zero() {
            return SpectralPoly::zero();
        }
        let mut out = vec![RationalExpr::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] = out[i + j].add(&a.mul(b));
                }
            }
        }
        SpectralPoly::new(out)
    }

    pub fn pow(&self, e: u32) -> SpectralPoly {
        let mut acc = SpectralPoly::constant(RationalExpr::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Multiply by `mu^k`.
    pub fn shift_up(&self, k: usize) -> SpectralPoly {
        if self.is_zero() {
            return SpectralPoly::zero();
        }
        let mut c = vec![RationalExpr::zero(); k];
        c.extend(self.coeffs.iter().cloned());
        SpectralPoly { coeffs: c }
    }

    /// Horner evaluation at a symbolic point.
    pub fn eval(&self, x: &RationalExpr) -> RationalExpr {
        let mut acc = RationalExpr::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    /// Substitute `mu -> mu + s`.
    pub fn translate(&self, s: &RationalExpr) -> SpectralPoly {
        let lin = SpectralPoly::new(vec![s.clone(), RationalExpr::one()]);
        let mut acc = SpectralPoly::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(&lin).add(&SpectralPoly::constant(c.clone()));
        }
        acc
    }

    /// Euclidean division over the coefficient field.
    pub fn divrem(&self, d: &SpectralPoly) -> Result<(SpectralPoly, SpectralPoly)> {
        let dd = d.degree().ok_or_else(|| Error::Math("division by the zero polynomial".into()))?;
        let lc_inv = d.leading().unwrap().inv().ok_or_else(|| Error::Math("zero leading coefficient".into()))?;
        let mut rem = self.coeffs.clone();
        let nq = if rem.len() > dd { rem.len() - dd } else { 0 };
        let mut quot = vec![RationalExpr::zero(); nq];
        for k in (0..nq).rev() {
            let top = rem[k + dd].clone();
            if top.is_zero() {
                continue;
            }
            let qk = top.mul(&lc_inv);
            for (j, dc) in d.coeffs.iter().enumerate() {
                if !dc.is_zero() {
                    rem[k + j] = rem[k + j].sub(&qk.mul(dc));
                }
            }
            quot[k] = qk;
        }
        rem.truncate(dd);
        Ok((SpectralPoly::new(quot), SpectralPoly::new(rem)))
    }

    /// Reduce modulo a monic polynomial without divisions.
    pub fn quotient_reduce(&self, modulus: &SpectralPoly) -> SpectralPoly {
        let n = modulus.degree().expect("nonzero modulus");
        debug_assert!(modulus.leading().unwrap().as_constant().is_some_and(|c| c == Q::from_integer(1.into())));
        let mut c = self.coeffs.clone();
        for k in (n..c.len()).rev() {
            let top = std::mem::replace(&mut c[k], RationalExpr::zero());
            if top.is_zero() {
                continue;
            }
            for j in 0..n {
                let mj = &modulus.coeffs[j];
                if !mj.is_zero() {
                    c[k - n + j] = c[k - n + j].sub(&top.mul(mj));
                }
            }
        }
        c.truncate(n);
        SpectralPoly::new(c)
    }

    /// Inverse modulo `modulus` via the extended Euclidean algorithm.
    pub fn quotient_invert(&self, modulus: &SpectralPoly) -> Result<SpectralPoly> {
        let not_inv = || Error::Math("element is not invertible in the quotient ring".into());
        let (mut r0, mut r1) = (modulus.clone(), self.divrem(modulus)?.1);
        let (mut s0, mut s1) = (SpectralPoly::zero(), SpectralPoly::constant(RationalExpr::one()));
        loop {
            match r1.degree() {
                None => return Err(not_inv()),
                Some(0) => {
                    let inv = r1.coeffs[0].inv().ok_or_else(not_inv)?;
                    return Ok(s1.scale(&inv).divrem(modulus)?.1);
                }
                Some(_) => {
                    let (q, r) = r0.divrem(&r1)?;
                    let s = s0.sub(&q.mul(&s1));
                    r0 = std::mem::replace(&mut r1, r);
                    s0 = std::mem::replace(&mut s1, s);
                }
            }
        }
    }

    /// Multiply in the quotient ring.
    pub fn quotient_mul(&self, o: &SpectralPoly, modulus: &SpectralPoly) -> SpectralPoly {
        self.mul(o).quotient_reduce(modulus)
    }
}

impl fmt::Display for SpectralPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let cs = c.to_string();
            let simple = c.as_constant().is_some() || (!cs.contains(' ') && !cs.starts_with('('));
            match k {
                0 => write!(f, "{}", if simple { cs } else { format!("({cs})") })?,
                _ => {
                    let mu = if k == 1 { "mu".to_string() } else { format!("mu^{k}") };
                    if c.as_constant().is_some_and(|x| x == Q::from_integer(1.into())) {
                        write!(f, "{mu}")?;
                    } else if simple {
                        write!(f, "{cs}*{mu}")?;
                    } else {
                        write!(f, "({cs})*{mu}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for SpectralPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
