//! Quotients of Laurent polynomials.
//!
//! The denominator is kept free of monomial factors (they move into the
//! numerator as negative exponents) and normalized to coprime integer
//! coefficients with a positive leading coefficient. In the common case of
//! a monomial denominator this makes `den == 1`.

use super::poly::{Monomial, MultiPoly};
use super::rational::Q;
use super::var::Var;
use num_traits::One;
use std::fmt;

#[derive(Clone)]
pub struct RationalExpr {
    num: MultiPoly,
    den: MultiPoly,
}

impl RationalExpr {
    pub fn new(num: MultiPoly, den: MultiPoly) -> RationalExpr {
        assert!(!den.is_zero(), "zero denominator");
        let mut r = RationalExpr { num, den };
        r.normalize();
        r
    }

    pub fn poly(num: MultiPoly) -> RationalExpr {
        RationalExpr { num, den: MultiPoly::one() }
    }

    pub fn zero() -> RationalExpr {
        RationalExpr::poly(MultiPoly::zero())
    }

    pub fn one() -> RationalExpr {
        RationalExpr::poly(MultiPoly::one())
    }

    pub fn constant(c: Q) -> RationalExpr {
        RationalExpr::poly(MultiPoly::constant(c))
    }

    pub fn var(v: Var) -> RationalExpr {
        RationalExpr::poly(MultiPoly::var(v))
    }

    pub fn parse(s: &str) -> Option<RationalExpr> {
        match s.split_once(")/(") {
            Some((a, b)) => {
                let a = a.trim().strip_prefix('(')?;
                let b = b.trim().strip_suffix(')')?;
                let den = MultiPoly::parse(b)?;
                if den.is_zero() {
                    return None;
                }
                Some(RationalExpr::new(MultiPoly::parse(a)?, den))
            }
            None => Some(RationalExpr::poly(MultiPoly::parse(s)?)),
        }
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.den = MultiPoly::one();
            return;
        }
        if self.den.as_constant().is_some_and(|c| c.is_one()) {
            return;
        }
        let g = self.den.monomial_content();
        if !g.is_one() {
            let ginv = g.inv();
            self.den = self.den.mul_term(&ginv, &Q::one());
            self.num = self.num.mul_term(&ginv, &Q::one());
        }
        let k = self.den.content();
        if !k.is_one() {
            let kinv = Q::one() / k;
            self.den = self.den.scale(&kinv);
            self.num = self.num.scale(&kinv);
        }
        if self.den.as_constant().is_none() && self.num.len() >= self.den.len() {
            if let Some(q) = self.num.div_exact(&self.den) {
                self.num = q;
                self.den = MultiPoly::one();
            }
        }
    }

    pub fn num(&self) -> &MultiPoly {
        &self.num
    }

    pub fn den(&self) -> &MultiPoly {
        &self.den
    }

    /// The numerator if the denominator is 1.
    pub fn as_poly(&self) -> Option<&MultiPoly> {
        self.den.as_constant().is_some_and(|c| c.is_one()).then_some(&self.num)
    }

    pub fn as_constant(&self) -> Option<Q> {
        self.as_poly().and_then(|p| p.as_constant())
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_poly(&self) -> bool {
        self.as_poly().is_some()
    }

    pub fn add(&self, o: &RationalExpr) -> RationalExpr {
        if self.den == o.den {
            let mut r = RationalExpr { num: self.num.add(&o.num), den: self.den.clone() };
            r.normalize();
            return r;
        }
        RationalExpr::new(self.num.mul(&o.den).add(&o.num.mul(&self.den)), self.den.mul(&o.den))
    }

    pub fn sub(&self, o: &RationalExpr) -> RationalExpr {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> RationalExpr {
        RationalExpr { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn mul(&self, o: &RationalExpr) -> RationalExpr {
        if self.is_poly() && o.is_poly() {
            return RationalExpr::poly(self.num.mul(&o.num));
        }
        RationalExpr::new(self.num.mul(&o.num), self.den.mul(&o.den))
    }

    pub fn scale(&self, k: &Q) -> RationalExpr {
        RationalExpr { num: self.num.scale(k), den: self.den.clone() }.normalized()
    }

    fn normalized(mut self) -> RationalExpr {
        self.normalize();
        self
    }

    pub fn mul_poly(&self, p: &MultiPoly) -> RationalExpr {
        RationalExpr { num: self.num.mul(p), den: self.den.clone() }.normalized()
    }

    /// `None` on division by zero.
    pub fn div(&self, o: &RationalExpr) -> Option<RationalExpr> {
        if o.is_zero() {
            return None;
        }
        Some(RationalExpr::new(self.num.mul(&o.den), self.den.mul(&o.num)))
    }

    pub fn inv(&self) -> Option<RationalExpr> {
        RationalExpr::one().div(self)
    }

    pub fn pow(&self, e: i32) -> Option<RationalExpr> {
        if e >= 0 {
            Some(RationalExpr::new(self.num.pow(e as u32), self.den.pow(e as u32)))
        } else {
            self.inv().and_then(|r| r.pow(-e))
        }
    }

    pub fn derivative(&self, v: Var) -> RationalExpr {
        if self.is_poly() {
            return RationalExpr::poly(self.num.derivative(v));
        }
        let dn = self.num.derivative(v);
        let dd = self.den.derivative(v);
        if dd.is_zero() {
            return RationalExpr { num: dn, den: self.den.clone() }.normalized();
        }
        RationalExpr::new(dn.mul(&self.den).sub(&self.num.mul(&dd)), self.den.mul(&self.den))
    }

    pub fn contains(&self, v: Var) -> bool {
        self.num.contains(v) || self.den.contains(v)
    }

    pub fn variables(&self) -> Vec<Var> {
        let mut vs = self.num.variables();
        vs.extend(self.den.variables());
        vs.sort();
        vs.dedup();
        vs
    }

    /// Partial evaluation; `None` if the denominator vanishes.
    pub fn eval_partial(&self, vals: &dyn Fn(Var) -> Option<Q>) -> Option<RationalExpr> {
        let den = self.den.eval_partial(vals);
        if den.is_zero() {
            return None;
        }
        Some(RationalExpr::new(self.num.eval_partial(vals), den))
    }

    pub fn eval(&self, vals: &dyn Fn(Var) -> Option<Q>) -> Option<Q> {
        self.eval_partial(vals)?.as_constant()
    }

    pub fn eval_f64(&self, vals: &dyn Fn(Var) -> f64) -> f64 {
        let n = self.num.eval_f64(vals);
        if self.is_poly() {
            n
        } else {
            n / self.den.eval_f64(vals)
        }
    }

    pub fn substitute(&self, map: &dyn Fn(Var) -> Option<MultiPoly>) -> RationalExpr {
        RationalExpr::new(self.num.substitute(map), self.den.substitute(map))
    }

    /// Substitute rational expressions for variables.
    pub fn substitute_rat(&self, map: &dyn Fn(Var) -> Option<RationalExpr>) -> Option<RationalExpr> {
        let n = subst_poly_rat(&self.num, map)?;
        let d = subst_poly_rat(&self.den, map)?;
        n.div(&d)
    }

    /// Keep only the numerator terms satisfying `pred` (denominator unchanged).
    pub fn filter_num(&self, pred: impl Fn(&Monomial) -> bool) -> RationalExpr {
        RationalExpr { num: self.num.filter(pred), den: self.den.clone() }.normalized()
    }
}

fn subst_poly_rat(p: &MultiPoly, map: &dyn Fn(Var) -> Option<RationalExpr>) -> Option<RationalExpr> {
    let mut acc = RationalExpr::zero();
    for (m, c) in p.terms() {
        let mut t = RationalExpr::constant(c.clone());
        let mut kept = Vec::new();
        for &(v, e) in m.factors() {
            match map(v) {
                Some(r) => t = t.mul(&r.pow(e)?),
                None => kept.push((v, e)),
            }
        }
        t = t.mul_poly(&MultiPoly::term(Monomial::from_factors(kept), Q::one()));
        acc = acc.add(&t);
    }
    Some(acc)
}

impl PartialEq for RationalExpr {
    fn eq(&self, o: &Self) -> bool {
        if self.den == o.den {
            return self.num == o.num;
        }
        self.num.mul(&o.den) == o.num.mul(&self.den)
    }
}

impl Eq for RationalExpr {}

impl fmt::Display for RationalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_poly() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for RationalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<MultiPoly> for RationalExpr {
    fn from(p: MultiPoly) -> Self {
        RationalExpr::poly(p)
    }
}

impl From<Var> for RationalExpr {
    fn from(v: Var) -> Self {
        RationalExpr::var(v)
    }
}

impl From<Q> for RationalExpr {
    fn from(c: Q) -> Self {
        RationalExpr::constant(c)
    }
}
