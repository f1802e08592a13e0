//! Truncated Taylor series over exact rationals or `f64`.

use crate::algebra::rational::{factorial, to_f64};
use crate::algebra::{MultiPoly, RationalExpr, Var, Q};
use num_traits::{One, Signed, Zero};
use std::fmt::Debug;

pub trait Scalar: Clone + Debug + PartialEq {
    fn sc_zero() -> Self;
    fn sc_one() -> Self;
    fn from_q(x: &Q) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn sc_is_zero(&self) -> bool;
    fn sc_sqrt(&self) -> Option<Self>;
    fn to_f64(&self) -> f64;
    fn to_q(&self) -> Q;
    /// Exact text for rationals, 17 significant digits for floats.
    fn to_text(&self) -> String;

    fn from_i64(n: i64) -> Self {
        Self::from_q(&Q::from_integer(n.into()))
    }
}

impl Scalar for Q {
    fn sc_zero() -> Self {
        Zero::zero()
    }
    fn sc_one() -> Self {
        One::one()
    }
    fn from_q(x: &Q) -> Self {
        x.clone()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sc_is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    /// Exact square roots of squares of rationals only.
    fn sc_sqrt(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let n = self.numer().sqrt();
        let d = self.denom().sqrt();
        let r = Q::new(n, d);
        (&r * &r == *self).then_some(r)
    }
    fn to_f64(&self) -> f64 {
        to_f64(self)
    }
    fn to_q(&self) -> Q {
        self.clone()
    }
    fn to_text(&self) -> String {
        self.to_string()
    }
}

impl Scalar for f64 {
    fn sc_zero() -> Self {
        0.0
    }
    fn sc_one() -> Self {
        1.0
    }
    fn from_q(x: &Q) -> Self {
        to_f64(x)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sc_is_zero(&self) -> bool {
        *self == 0.0
    }
    fn sc_sqrt(&self) -> Option<Self> {
        (*self >= 0.0).then(|| f64::sqrt(*self))
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_q(&self) -> Q {
        Q::from_float(*self).unwrap_or_else(Zero::zero)
    }
    fn to_text(&self) -> String {
        format!("{self:.16e}")
    }
}

/// `c[j]` is the coefficient of `x^j`, `j = 0..=order`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries<T: Scalar> {
    c: Vec<T>,
}

impl<T: Scalar> TruncatedSeries<T> {
    pub fn new(c: Vec<T>) -> Self {
        assert!(!c.is_empty(), "series needs at least the constant term");
        TruncatedSeries { c }
    }

    pub fn constant(x: T, order: usize) -> Self {
        let mut c = vec![T::sc_zero(); order + 1];
        c[0] = x;
        TruncatedSeries { c }
    }

    /// The series of `x` itself.
    pub fn identity(order: usize) -> Self {
        let mut c = vec![T::sc_zero(); order + 1];
        if order >= 1 {
            c[1] = T::sc_one();
        }
        TruncatedSeries { c }
    }

    /// From derivative values `f(0), f'(0), ..., f^{(k)}(0)`.
    pub fn from_derivatives(d: &[T]) -> Self {
        TruncatedSeries::new(d.iter().enumerate().map(|(j, x)| x.div(&T::from_q(&Q::from_integer(factorial(j as u64))))).collect())
    }

    pub fn to_derivatives(&self) -> Vec<T> {
        self.c.iter().enumerate().map(|(j, x)| x.mul(&T::from_q(&Q::from_integer(factorial(j as u64))))).collect()
    }

    pub fn coeffs(&self) -> &[T] {
        &self.c
    }

    pub fn coeff(&self, j: usize) -> &T {
        &self.c[j]
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn truncate(&self, order: usize) -> Self {
        TruncatedSeries::new(self.c[..=order.min(self.order())].to_vec())
    }

    fn zip(&self, o: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        let k = self.order().min(o.order());
        TruncatedSeries::new((0..=k).map(|j| f(&self.c[j], &o.c[j])).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.add(b))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.sub(b))
    }

    pub fn neg(&self) -> Self {
        TruncatedSeries::new(self.c.iter().map(|x| x.neg()).collect())
    }

    pub fn scale(&self, k: &T) -> Self {
        TruncatedSeries::new(self.c.iter().map(|x| x.mul(k)).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let k = self.order().min(o.order());
        let mut out = vec![T::sc_zero(); k + 1];
        for i in 0..=k {
            if self.c[i].sc_is_zero() {
                continue;
            }
            for j in 0..=k - i {
                out[i + j] = out[i + j].add(&self.c[i].mul(&o.c[j]));
            }
        }
        TruncatedSeries::new(out)
    }

    /// `1/f`; `None` if `f(0) = 0`.
    pub fn recip(&self) -> Option<Self> {
        if self.c[0].sc_is_zero() {
            return None;
        }
        let k = self.order();
        let inv0 = T::sc_one().div(&self.c[0]);
        let mut out = vec![T::sc_zero(); k + 1];
        out[0] = inv0.clone();
        for j in 1..=k {
            let mut s = T::sc_zero();
            for i in 1..=j {
                s = s.add(&self.c[i].mul(&out[j - i]));
            }
            out[j] = s.mul(&inv0).neg();
        }
        Some(TruncatedSeries::new(out))
    }

    pub fn div(&self, o: &Self) -> Option<Self> {
        Some(self.mul(&o.recip()?))
    }

    /// Square root with `sqrt(f)(0) = +sqrt(f(0))`; `None` if that does not exist or vanishes.
    pub fn sqrt(&self) -> Option<Self> {
        let r0 = self.c[0].sc_sqrt()?;
        if r0.sc_is_zero() {
            return None;
        }
        let k = self.order();
        let two_r0 = r0.add(&r0);
        let mut out = vec![T::sc_zero(); k + 1];
        out[0] = r0;
        for j in 1..=k {
            let mut s = self.c[j].clone();
            for i in 1..j {
                s = s.sub(&out[i].mul(&out[j - i]));
            }
            out[j] = s.div(&two_r0);
        }
        Some(TruncatedSeries::new(out))
    }

    pub fn powi(&self, e: i32) -> Option<Self> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut acc = TruncatedSeries::constant(T::sc_one(), self.order());
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(&base);
        }
        Some(acc)
    }

    /// `outer(inner(x))` for `inner(0) = 0`, where `outer` is given by its
    /// Taylor coefficients.
    pub fn compose(outer: &[T], inner: &Self) -> Option<Self> {
        if !inner.c[0].sc_is_zero() {
            return None;
        }
        let k = inner.order();
        let mut acc = TruncatedSeries::constant(T::sc_zero(), k);
        for a in outer.iter().take(k + 1).rev() {
            acc = acc.mul(inner).add(&TruncatedSeries::constant(a.clone(), k));
        }
        Some(acc)
    }

    /// `f(a x)`.
    pub fn rescale(&self, a: &T) -> Self {
        let mut p = T::sc_one();
        let mut out = Vec::with_capacity(self.c.len());
        for x in &self.c {
            out.push(x.mul(&p));
            p = p.mul(a);
        }
        TruncatedSeries::new(out)
    }

    /// `f'` (order drops by one).
    pub fn derivative(&self) -> Self {
        if self.order() == 0 {
            return TruncatedSeries::constant(T::sc_zero(), 0);
        }
        TruncatedSeries::new((1..=self.order()).map(|j| self.c[j].mul(&T::from_i64(j as i64))).collect())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> TruncatedSeries<U> {
        TruncatedSeries::new(self.c.iter().map(f).collect())
    }
}

/// Evaluate a Laurent polynomial with series arguments. Variables not given a
/// series are looked up as constants.
pub fn eval_poly_series<T: Scalar>(
    p: &MultiPoly,
    series: &dyn Fn(Var) -> Option<TruncatedSeries<T>>,
    consts: &dyn Fn(Var) -> Option<T>,
    order: usize,
) -> Option<TruncatedSeries<T>> {
    let mut acc = TruncatedSeries::constant(T::sc_zero(), order);
    let mut cache: rustc_hash::FxHashMap<(Var, i32), TruncatedSeries<T>> = rustc_hash::FxHashMap::default();
    for (m, c) in p.terms() {
        let mut coeff = T::from_q(c);
        let mut term: Option<TruncatedSeries<T>> = None;
        for &(v, e) in m.factors() {
            match series(v) {
                Some(s) => {
                    let pw = match cache.get(&(v, e)) {
                        Some(x) => x.clone(),
                        None => {
                            let x = s.truncate(order).powi(e)?;
                            cache.insert((v, e), x.clone());
                            x
                        }
                    };
                    term = Some(match term {
                        Some(t) => t.mul(&pw),
                        None => pw,
                    });
                }
                None => {
                    let x = consts(v)?;
                    let mut pw = T::sc_one();
                    let base = if e < 0 { T::sc_one().div(&x) } else { x };
                    for _ in 0..e.unsigned_abs() {
                        pw = pw.mul(&base);
                    }
                    coeff = coeff.mul(&pw);
                }
            }
        }
        let t = match term {
            Some(t) => t.scale(&coeff),
            None => TruncatedSeries::constant(coeff, order),
        };
        acc = acc.add(&t);
    }
    Some(acc)
}

pub fn eval_series<T: Scalar>(
    e: &RationalExpr,
    series: &dyn Fn(Var) -> Option<TruncatedSeries<T>>,
    consts: &dyn Fn(Var) -> Option<T>,
    order: usize,
) -> Option<TruncatedSeries<T>> {
    let n = eval_poly_series(e.num(), series, consts, order)?;
    if e.is_poly() {
        return Some(n);
    }
    let d = eval_poly_series(e.den(), series, consts, order)?;
    n.div(&d)
}

/// Taylor-mode solution of `z' = F(z)` to the given order from `z(0)`.
pub fn solve_ode_series<T: Scalar>(
    vars: &[Var],
    rhs: &[RationalExpr],
    z0: &[T],
    consts: &dyn Fn(Var) -> Option<T>,
    order: usize,
) -> Option<Vec<TruncatedSeries<T>>> {
    let mut sol: Vec<Vec<T>> = z0.iter().map(|x| vec![x.clone()]).collect();
    for j in 0..order {
        let cur: Vec<TruncatedSeries<T>> = sol.iter().map(|c| TruncatedSeries::new(c.clone())).collect();
        let lookup = |v: Var| vars.iter().position(|&z| z == v).map(|i| cur[i].clone());
        for (i, f) in rhs.iter().enumerate() {
            let s = eval_series(f, &lookup, consts, j)?;
            let next = s.coeff(j).div(&T::from_i64(j as i64 + 1));
            sol[i].push(next);
        }
    }
    Some(sol.into_iter().map(TruncatedSeries::new).collect())
}
