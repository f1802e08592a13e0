//! Weighted degrees on phase-space variables and constants.
//!
//! `deg w_i = i`, `deg p_i = N + 1 - i + alpha`, `deg c_j = j`, where
//! `alpha = n/2` when `m` is constant and `alpha = 0` for `m(mu) = mu`.

use crate::algebra::{Monomial, MultiPoly, RationalExpr, Var, VarKind, Q};
use num_traits::Zero;

#[derive(Clone, Debug)]
pub struct GradingScheme {
    pub big_n: usize,
    pub n: usize,
    pub deg_m: usize,
    pub alpha: Q,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Degree {
    /// The zero expression has any degree.
    Any,
    Homogeneous(Q),
    /// Two monomials of different degree.
    Inhomogeneous(Monomial, Monomial),
}

impl GradingScheme {
    /// `deg(m) = 0`: `alpha = n/2`.
    pub fn constant_m(big_n: usize, n: usize) -> GradingScheme {
        GradingScheme { big_n, n, deg_m: 0, alpha: crate::algebra::qr(n as i64, 2) }
    }

    /// `m(mu) = mu`, `n = 1`: `alpha = 0`.
    pub fn linear_m(big_n: usize) -> GradingScheme {
        GradingScheme { big_n, n: 1, deg_m: 1, alpha: Q::zero() }
    }

    /// Degree of a single variable. The level constant `d_i` gets the
    /// degree of the coefficient of `c` it occupies, so every `H_i` is
    /// homogeneous; `lambda` and the `m_i` have degree 0.
    pub fn var_degree(&self, v: Var) -> Q {
        let i = v.index() as i64;
        let nn = self.big_n as i64;
        match v.kind() {
            VarKind::W | VarKind::V | VarKind::U => Q::from_integer(i.into()),
            VarKind::P | VarKind::Pv => Q::from_integer((nn + 1 - i).into()) + &self.alpha,
            VarKind::C => Q::from_integer(i.into()),
            VarKind::D => Q::from_integer((nn + self.n as i64 + i - self.deg_m as i64).into()),
            VarKind::M | VarKind::Lambda => Q::zero(),
        }
    }

    pub fn monomial_degree(&self, m: &Monomial) -> Q {
        m.factors().iter().fold(Q::zero(), |acc, &(v, e)| acc + self.var_degree(v) * Q::from_integer(e.into()))
    }

    pub fn poly_degree(&self, p: &MultiPoly) -> Degree {
        let mut it = p.terms().iter();
        let (m0, _) = match it.next() {
            Some(t) => t,
            None => return Degree::Any,
        };
        let d0 = self.monomial_degree(m0);
        for (m, _) in it {
            if self.monomial_degree(m) != d0 {
                return Degree::Inhomogeneous(m0.clone(), m.clone());
            }
        }
        Degree::Homogeneous(d0)
    }

    /// Degree of a fraction: numerator degree minus denominator degree.
    pub fn degree(&self, e: &RationalExpr) -> Degree {
        match (self.poly_degree(e.num()), self.poly_degree(e.den())) {
            (Degree::Any, _) => Degree::Any,
            (Degree::Homogeneous(a), Degree::Homogeneous(b)) => Degree::Homogeneous(a - b),
            (Degree::Inhomogeneous(a, b), _) | (_, Degree::Inhomogeneous(a, b)) => Degree::Inhomogeneous(a, b),
            (_, Degree::Any) => unreachable!("nonzero denominator"),
        }
    }

    /// Degree gained by one x-derivative: `n/2` for constant `m`, 0 otherwise.
    pub fn derivative_shift(&self) -> Q {
        if self.deg_m == 0 {
            crate::algebra::qr(self.n as i64, 2)
        } else {
            Q::zero()
        }
    }

    /// Expected degree of `h_{kx}` given `deg h`.
    pub fn derivative_degree(&self, deg_h: &Q, k: usize) -> Q {
        deg_h + self.derivative_shift() * Q::from_integer((k as i64).into())
    }
}

/// Number of factors (with multiplicity) among variables selected by `small`;
/// the minimum over all terms. `None` for the zero polynomial.
pub fn min_factor_count(p: &MultiPoly, small: impl Fn(Var) -> bool) -> Option<i32> {
    p.terms().iter().map(|(m, _)| m.count(&small)).min()
}

/// Drop every term with more than `keep` small factors.
pub fn truncate_factors(p: &MultiPoly, keep: i32, small: impl Fn(Var) -> bool) -> MultiPoly {
    p.filter(|m| m.count(&small) <= keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::qr;

    #[test]
    fn degrees() {
        let g = GradingScheme::constant_m(4, 1);
        assert_eq!(g.var_degree(Var::p(4)), qr(3, 2));
        let e = RationalExpr::parse("-3/2*w1^2 + w2").unwrap();
        assert_eq!(g.degree(&e), Degree::Homogeneous(qr(2, 1)));
        assert_eq!(g.degree(&RationalExpr::zero()), Degree::Any);
        let bad = RationalExpr::parse("w1 + w2").unwrap();
        assert!(matches!(g.degree(&bad), Degree::Inhomogeneous(..)));
        let ch = GradingScheme::linear_m(6);
        let e = RationalExpr::parse("c13*w6^-2").unwrap();
        assert_eq!(ch.degree(&e), Degree::Homogeneous(qr(1, 1)));
        assert_eq!(ch.var_degree(Var::p(6)), qr(1, 1));
    }

    #[test]
    fn factor_counts() {
        let p = MultiPoly::parse("w1*p6 + w6^-2*c13 + w1^2*p5").unwrap();
        let small = |v: Var| matches!(v.kind(), VarKind::P) || (v.kind() == VarKind::W && v.index() < 6);
        assert_eq!(min_factor_count(&p, small), Some(0));
        assert_eq!(truncate_factors(&p, 2, small).len(), 2);
    }
}
