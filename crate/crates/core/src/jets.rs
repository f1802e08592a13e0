//! Prolongation of the `x`-flow: exact expressions for `(z)_{kx}` in terms of
//! the initial data, Taylor tables, all-0 specializations and Jacobians.

use crate::algebra::{Monomial, MultiPoly, Q, RationalExpr, Var, VarKind};
use crate::algebra::rational::factorial;
use crate::error::{Error, Result};
use crate::stackel::StackelSystem;
use num_traits::{One, Zero};
use rustc_hash::FxHashMap;
use std::sync::{Arc, Mutex};

/// `D_x e = sum_z (de/dz) rhs_z` for Laurent polynomials, fused into one
/// accumulation. With `keep = Some((k, small))` only terms with at most `k`
/// factors from `small` are produced.
pub fn dx_poly(e: &MultiPoly, vars: &[Var], rhs: &[MultiPoly], keep: Option<(i32, &dyn Fn(Var) -> bool)>) -> MultiPoly {
    let mut map: FxHashMap<Monomial, Q> = FxHashMap::default();
    let rhs_counts: Vec<Vec<i32>> = match keep {
        Some((_, small)) => rhs.iter().map(|r| r.terms().iter().map(|(m, _)| m.count(small)).collect()).collect(),
        None => Vec::new(),
    };
    for (m, c) in e.terms() {
        let base_count = keep.map(|(_, small)| m.count(small)).unwrap_or(0);
        for &(v, ex) in m.factors() {
            let idx = match vars.iter().position(|&z| z == v) {
                Some(i) => i,
                None => continue,
            };
            let rest = m.mul_var(v, -1);
            let coeff = c * Q::from_integer(ex.into());
            let rest_count = match keep {
                Some((_, small)) => base_count - if small(v) { 1 } else { 0 },
                None => 0,
            };
            for (t, (rm, rc)) in rhs[idx].terms().iter().enumerate() {
                if let Some((k, _)) = keep {
                    if rest_count + rhs_counts[idx][t] > k {
                        continue;
                    }
                }
                let prod = rest.mul(rm);
                let val = &coeff * rc;
                match map.get_mut(&prod) {
                    Some(x) => *x += val,
                    None => {
                        map.insert(prod, val);
                    }
                }
            }
        }
    }
    MultiPoly::from_terms(map.into_iter().filter(|(_, c)| !c.is_zero()))
}

/// Memoized prolongation for one system.
pub struct JetEngine<'a> {
    sys: &'a StackelSystem,
    vars: Vec<Var>,
    /// Equations of motion as Laurent polynomials when every denominator is 1.
    poly_rhs: Option<Vec<MultiPoly>>,
    memo: Mutex<FxHashMap<(usize, usize), Arc<RationalExpr>>>,
}

impl<'a> JetEngine<'a> {
    pub fn new(sys: &'a StackelSystem) -> JetEngine<'a> {
        let vars = sys.phase_vars();
        let poly_rhs = sys.eom().iter().map(|e| e.as_poly().cloned()).collect::<Option<Vec<_>>>();
        JetEngine { sys, vars, poly_rhs, memo: Mutex::new(FxHashMap::default()) }
    }

    pub fn system(&self) -> &StackelSystem {
        self.sys
    }

    /// Total derivative along the `x`-flow.
    pub fn total_derivative(&self, e: &RationalExpr) -> RationalExpr {
        if let (Some(p), Some(rhs)) = (e.as_poly(), &self.poly_rhs) {
            return RationalExpr::poly(dx_poly(p, &self.vars, rhs, None));
        }
        let mut acc = RationalExpr::zero();
        for (v, rhs) in self.vars.iter().zip(self.sys.eom()) {
            let d = e.derivative(*v);
            if !d.is_zero() {
                acc = acc.add(&d.mul(rhs));
            }
        }
        acc
    }

    /// `D_x^k e`.
    pub fn prolong(&self, e: &RationalExpr, k: usize) -> RationalExpr {
        let mut cur = e.clone();
        for _ in 0..k {
            cur = self.total_derivative(&cur);
        }
        cur
    }

    /// `(v)_{jx}` for a phase variable, memoized.
    pub fn component(&self, v: Var, j: usize) -> Result<Arc<RationalExpr>> {
        let idx = self.sys.phase_index(v).ok_or_else(|| Error::Config(format!("{v} is not a phase variable")))?;
        if let Some(e) = self.memo.lock().unwrap().get(&(idx, j)) {
            return Ok(e.clone());
        }
        let e = if j == 0 {
            Arc::new(RationalExpr::var(v))
        } else {
            let prev = self.component(v, j - 1)?;
            Arc::new(self.total_derivative(&prev))
        };
        self.memo.lock().unwrap().entry((idx, j)).or_insert_with(|| e.clone());
        Ok(e)
    }

    /// Coefficients of `x^0..x^order` in the Taylor expansion of `v(x)` at 0.
    pub fn taylor_coeffs(&self, v: Var, order: usize) -> Result<Vec<RationalExpr>> {
        (0..=order)
            .map(|j| {
                let e = self.component(v, j)?;
                Ok(e.scale(&(Q::one() / Q::from_integer(factorial(j as u64)))))
            })
            .collect()
    }

    /// Small variables of the all-0 specialization: every phase variable
    /// except the last coordinate.
    pub fn small_var(&self) -> impl Fn(Var) -> bool + '_ {
        let last = *self.sys.coords().last().unwrap();
        move |v: Var| v.is_phase() && v != last
    }

    /// Orders `0..=kmax` of `(v)_{jx}`, each truncated to the terms that can
    /// still contribute to first-order information at all-0 by order `kmax`.
    pub fn linear_chain(&self, v: Var, kmax: usize) -> Result<Vec<MultiPoly>> {
        let rhs = self.poly_rhs.as_ref().ok_or_else(|| Error::Math("linearized prolongation needs polynomial equations".into()))?;
        self.sys.phase_index(v).ok_or_else(|| Error::Config(format!("{v} is not a phase variable")))?;
        let small = self.small_var();
        let mut out = vec![MultiPoly::var(v)];
        for k in 1..=kmax {
            let keep = (kmax - k + 1) as i32;
            let next = dx_poly(out.last().unwrap(), &self.vars, rhs, Some((keep, &small)));
            out.push(next);
        }
        Ok(out)
    }
}

/// Substitute zero for every small variable; errors on a negative power of one.
pub fn eval_all0(e: &RationalExpr, small: &dyn Fn(Var) -> bool) -> Result<RationalExpr> {
    let sub = |p: &MultiPoly| -> Result<MultiPoly> {
        let mut out = Vec::new();
        for (m, c) in p.terms() {
            if m.factors().iter().any(|&(v, e)| small(v) && e < 0) {
                return Err(Error::Math(format!("singular all-0 evaluation at {m}")));
            }
            if m.count(small) == 0 {
                out.push((m.clone(), c.clone()));
            }
        }
        Ok(MultiPoly::from_terms(out))
    };
    let den = sub(e.den())?;
    if den.is_zero() {
        return Err(Error::Math("denominator vanishes at all-0".into()));
    }
    Ok(RationalExpr::new(sub(e.num())?, den))
}

/// Value at all-0 and first partials at all-0 of a truncated polynomial.
pub struct Linearization {
    pub value: MultiPoly,
    pub partials: FxHashMap<Var, MultiPoly>,
}

impl Linearization {
    pub fn of(p: &MultiPoly, small: &dyn Fn(Var) -> bool, last: Var) -> Linearization {
        let value = p.filter(|m| m.count(small) == 0);
        let mut partials: FxHashMap<Var, MultiPoly> = FxHashMap::default();
        let mut buckets: FxHashMap<Var, Vec<(Monomial, Q)>> = FxHashMap::default();
        for (m, c) in p.terms() {
            if m.count(small) != 1 {
                continue;
            }
            let z = m.factors().iter().find(|f| small(f.0)).unwrap();
            if z.1 != 1 {
                continue;
            }
            buckets.entry(z.0).or_default().push((m.mul_var(z.0, -1), c.clone()));
        }
        for (z, ts) in buckets {
            partials.insert(z, MultiPoly::from_terms(ts));
        }
        let dl = value.derivative(last);
        if !dl.is_zero() {
            partials.insert(last, dl);
        }
        Linearization { value, partials }
    }

    pub fn partial(&self, z: Var) -> MultiPoly {
        self.partials.get(&z).cloned().unwrap_or_else(MultiPoly::zero)
    }
}

/// First-order data at all-0 of `(v)_{jx}` for `j = 0..=kmax`.
pub fn linearize_chain(engine: &JetEngine, v: Var, kmax: usize) -> Result<Vec<Linearization>> {
    let chain = engine.linear_chain(v, kmax)?;
    let small = engine.small_var();
    let last = *engine.system().coords().last().unwrap();
    Ok(chain.iter().map(|p| Linearization::of(p, &small, last)).collect())
}

/// Ordering `v_1..v_{2N-2}` of the unknowns of the Camassa-Holm matching
/// problem: `w_{(j+1)/2}` for odd `j`, `p_{N-j/2}` for even `j`.
pub fn ch_unknowns(sys: &StackelSystem) -> Vec<Var> {
    let n = sys.big_n();
    (1..=2 * n - 2).map(|j| if j % 2 == 1 { sys.coord(j.div_ceil(2)) } else { sys.mom(n - j / 2) }).collect()
}

/// The `(2N-2) x (2N-2)` matrix `d (w_N)_{ix} / d v_j` at all-0.
pub fn jacobian_all0(engine: &JetEngine) -> Result<Vec<Vec<MultiPoly>>> {
    let sys = engine.system();
    let n = sys.big_n();
    if n < 2 {
        return Err(Error::Config("the all-0 Jacobian needs N >= 2".into()));
    }
    let lin = linearize_chain(engine, sys.coord(n), 2 * n - 2)?;
    let unknowns = ch_unknowns(sys);
    Ok((1..=2 * n - 2).map(|i| unknowns.iter().map(|&z| lin[i].partial(z)).collect()).collect())
}

/// Full symbolic partial derivatives at all-0, without truncation.
pub fn partial_all0(engine: &JetEngine, v: Var, j: usize, z: Var) -> Result<RationalExpr> {
    let e = engine.component(v, j)?;
    let small = engine.small_var();
    eval_all0(&e.derivative(z), &small)
}

pub fn is_coordinate(v: Var) -> bool {
    matches!(v.kind(), VarKind::W | VarKind::V)
}
