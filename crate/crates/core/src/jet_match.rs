//! Matching a prescribed `k`-jet of initial data `u(x, 0)` at `x = 0` by a
//! finite-gap solution.
//!
//! Constant `m`: exact triangular back-substitution in the order
//! `w_1..w_n, p_N..p_{N-n+1}, w_{n+1}..w_{2n}, ...`. Linear `m`, `n = 1`:
//! Newton iteration on the derivatives of the last coordinate, seeded at the
//! all-0 point.

use crate::algebra::rational::{factorial, from_f64, to_f64};
use crate::algebra::{q, RationalExpr, SpectralPoly, Var, Q};
use crate::error::{Error, Result};
use crate::jets::{ch_unknowns, JetEngine};
use crate::reduction::{c_coeffs_top, gauge_normalize, invert_reduction_jet, jet_pushforward, reduce, v_coordinates, Gauge, InvertedJet};
use crate::series::{eval_series, solve_ode_series, Scalar, TruncatedSeries};
use crate::stackel::{BkmData, CForm, Lambda, StackelSystem};
use crate::tape::{Compiled, CompiledVec};
use nalgebra::{DMatrix, DVector};
use num_traits::{Signed, Zero};
use serde::Serialize;

/// Initial condition of a matched finite-gap solution, in the standard chart.
#[derive(Clone, Debug)]
pub struct MatchResult<T: Scalar> {
    pub data: BkmData,
    pub big_n: usize,
    /// Coefficients of the tail `r(mu)`, lowest degree first.
    pub c_tail: Vec<Q>,
    pub w0: Vec<T>,
    pub p0: Vec<T>,
    /// Level constants placing the initial point on the zero level.
    pub d: Vec<T>,
    /// Initial condition in the chart centered at the root of `m`, when the
    /// solve ran there.
    pub shifted: Option<(Vec<T>, Vec<T>)>,
    pub gauge: Option<Gauge>,
    /// Max deviation of the achieved `u`-jet from the target (derivative
    /// values; for odd `k` the target is padded with zeros to order `2N - 2`).
    pub residual: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    /// Deg(m) = 0: the coefficient of the new variable at each step.
    pub leading_coefficients: Vec<Q>,
    /// Newton seed, for linear `m`.
    pub seed: Option<SeedKind>,
}

/// JSON view of a [`MatchResult`].
#[derive(Clone, Debug, Serialize)]
pub struct MatchReport {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub m: Vec<String>,
    pub c_tail: Vec<String>,
    pub w0: Vec<String>,
    pub p0: Vec<String>,
    pub d: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pv0: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gauge_shift: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gauge_scale: Option<String>,
    pub residual: String,
    pub iterations: usize,
    pub residual_history: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<SeedKind>,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl<T: Scalar> MatchResult<T> {
    pub fn report(&self) -> MatchReport {
        let s = |v: &[T]| v.iter().map(|x| x.to_text()).collect::<Vec<_>>();
        MatchReport {
            n: self.data.n,
            big_n: self.big_n,
            m: self.data.m.coeffs().iter().rev().map(|c| c.to_string()).collect(),
            c_tail: self.c_tail.iter().map(|c| c.to_string()).collect(),
            w0: s(&self.w0),
            p0: s(&self.p0),
            d: s(&self.d),
            v0: self.shifted.as_ref().map(|(v, _)| s(v)),
            pv0: self.shifted.as_ref().map(|(_, p)| s(p)),
            gauge_shift: self.gauge.as_ref().map(|g| g.lambda0.to_string()),
            gauge_scale: self.gauge.as_ref().map(|g| fmt_f64(g.a)),
            residual: fmt_f64(self.residual),
            iterations: self.iterations,
            residual_history: self.residual_history.iter().map(|&r| fmt_f64(r)).collect(),
            seed: self.seed,
        }
    }

    /// The matched system in the standard chart, with the level constants set.
    pub fn system(&self) -> Result<StackelSystem> {
        let mut cform = CForm::with_tail(&self.data, self.big_n, self.c_tail.iter().cloned().map(RationalExpr::constant).collect())?;
        cform.d = self.d.iter().map(|x| RationalExpr::constant(x.to_q())).collect();
        StackelSystem::new(self.data.clone(), cform)
    }
}

/// Target jets are given as Taylor coefficients; comparisons are made on
/// derivative values `j! * coeff_j`.
fn derivative_values<T: Scalar>(s: &TruncatedSeries<T>) -> Vec<T> {
    s.to_derivatives()
}

/// Smallest `N` for constant `m`: every order `j <= k` must find its new
/// variable `w_{n j/2 + i}` or `p_{N+1-(n(j-1)/2+i)}`, so `N = n * ceil((k+1)/2)`.
pub fn min_gap_deg0(n: usize, k: usize) -> usize {
    n * (k + 1).div_ceil(2)
}

/// Smallest `N` for linear `m`: `2N - 2 >= k`.
pub fn min_gap_linear(k: usize) -> usize {
    k.div_ceil(2) + 1
}

/// Exact matcher for constant `m`, holding the symbolic Taylor table of
/// `w_1..w_n` up to order `k`.
pub struct Deg0Matcher {
    pub sys: StackelSystem,
    pub order: usize,
    /// `table[j][i-1]`: Taylor coefficient of `x^j` in `w_i(x)`.
    table: Vec<Vec<RationalExpr>>,
}

impl Deg0Matcher {
    pub fn new(n: usize, m0: &Q, order: usize, big_n: Option<usize>) -> Result<Deg0Matcher> {
        if m0.is_zero() {
            return Err(Error::Config("m0 must be nonzero".into()));
        }
        let big_n = big_n.unwrap_or_else(|| min_gap_deg0(n, order));
        let data = BkmData::new(n, SpectralPoly::constant(RationalExpr::constant(m0.clone())), Lambda::Infinity)?;
        let sys = StackelSystem::symbolic(data, big_n)?;
        let table = {
            let eng = JetEngine::new(&sys);
            let cols: Vec<Vec<RationalExpr>> = (1..=n).map(|i| eng.taylor_coeffs(sys.coord(i), order)).collect::<Result<_>>()?;
            (0..=order).map(|j| cols.iter().map(|c| c[j].clone()).collect()).collect()
        };
        Ok(Deg0Matcher { sys, order, table })
    }

    /// The variable fixed by the equation for `(w_i)` at order `j`.
    pub fn new_variable(&self, i: usize, j: usize) -> Option<Var> {
        let (n, big_n) = (self.sys.n(), self.sys.big_n());
        if j.is_multiple_of(2) {
            let idx = n * j / 2 + i;
            (idx <= big_n).then(|| Var::w(idx))
        } else {
            let l = n * (j - 1) / 2 + i;
            (l <= big_n).then(|| Var::p(big_n + 1 - l))
        }
    }

    /// Solve for the initial condition. `target[i]` holds Taylor coefficients of `u_{i+1}`.
    pub fn solve(&self, target: &[TruncatedSeries<Q>]) -> Result<MatchResult<Q>> {
        let (n, big_n) = (self.sys.n(), self.sys.big_n());
        if target.len() != n || target.iter().any(|t| t.order() < self.order) {
            return Err(Error::Config(format!("expected {n} target jets of order {}", self.order)));
        }
        let target: Vec<TruncatedSeries<Q>> = target.iter().map(|t| t.truncate(self.order)).collect();
        let c_top: Vec<Q> = c_coeffs_top(&self.sys, n)
            .iter()
            .map(|e| e.as_constant().ok_or_else(|| Error::Math("top coefficients of c must be constant".into())))
            .collect::<Result<_>>()?;
        let InvertedJet::Leading(wt) = invert_reduction_jet(&self.sys, &target, &c_top, &Q::zero())? else {
            unreachable!("constant m inverts to leading coordinates")
        };
        let mut fixed: Vec<(Var, Q)> = Vec::new();
        let mut leading = Vec::new();
        for j in 0..=self.order {
            for i in 1..=n {
                let new = self.new_variable(i, j).ok_or_else(|| {
                    Error::Config(format!("N = {big_n} is too small for order {j} with n = {n} (need N >= {})", min_gap_deg0(n, j)))
                })?;
                let expr = &self.table[j][i - 1];
                for v in expr.variables() {
                    if v.is_phase() && v != new && !fixed.iter().any(|(f, _)| *f == v) {
                        return Err(Error::Math(format!("triangularity fails: order {j}, w{i} depends on unassigned {v}")));
                    }
                }
                let a = expr.derivative(new).as_constant().filter(|a| !a.is_zero()).ok_or_else(|| {
                    Error::Math(format!("order {j}, w{i}: {new} does not enter linearly with a nonzero constant coefficient"))
                })?;
                let rest = expr
                    .eval(&|v| if v == new { Some(Q::zero()) } else { fixed.iter().find(|(f, _)| *f == v).map(|(_, x)| x.clone()) })
                    .ok_or_else(|| Error::Math("could not evaluate the fixed part".into()))?;
                let val = (wt[i - 1].coeff(j) - rest) / &a;
                fixed.push((new, val));
                leading.push(a);
            }
        }
        let get = |v: Var| fixed.iter().find(|(f, _)| *f == v).map(|(_, x)| x.clone()).unwrap_or_else(Q::zero);
        let w0: Vec<Q> = (1..=big_n).map(|i| get(Var::w(i))).collect();
        let p0: Vec<Q> = (1..=big_n).map(|i| get(Var::p(i))).collect();
        let d = self.sys.place_on_zero_level(&w0, &p0)?;
        let mut res = MatchResult {
            data: self.sys.data.clone(),
            big_n,
            c_tail: Vec::new(),
            w0,
            p0,
            d,
            shifted: None,
            gauge: None,
            residual: 0.0,
            iterations: 0,
            residual_history: Vec::new(),
            leading_coefficients: leading,
            seed: None,
        };
        let report = verify_match(&res, &target)?;
        res.residual = report.max_deviation;
        Ok(res)
    }
}

/// Exact matching for constant `m = m0`.
pub fn match_deg_m0(n: usize, m0: &Q, target: &[TruncatedSeries<Q>], big_n: Option<usize>) -> Result<MatchResult<Q>> {
    let order = target.iter().map(|t| t.order()).min().ok_or_else(|| Error::Config("empty target".into()))?;
    Deg0Matcher::new(n, m0, order, big_n)?.solve(target)
}

/// Starting point of the Newton iteration for linear `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedKind {
    /// `z_1..z_{N-1} = 0`, all momenta 0, `z_N` from the target. Its orbit has
    /// `u''(0) = -4 u(0)` whatever `c` is, so it suits targets near that jet.
    AllZero,
    /// The rest point of the `x`-flow with the target `u(0)`; its orbit is
    /// the constant jet, and `c(s)` is fixed by the rest point.
    Equilibrium,
}

#[derive(Clone, Debug)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub big_n: Option<usize>,
    /// `None` tries the equilibrium seed, then the all-0 seed.
    pub seed: Option<SeedKind>,
    /// `|c(s)|` at the root `s` of `m` for the all-0 seed; defaults to
    /// `|u(0) + s|`, which puts the last coordinate at 1 initially.
    pub c_abs: Option<Q>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-9, max_iter: 12, max_halvings: 8, big_n: None, seed: None, c_abs: None }
    }
}

/// Outcome of a Newton solve on `(z_N)_{jx} = t_j`, `j = 1..2N-2`.
#[derive(Clone, Debug)]
pub struct NewtonSolution {
    pub state: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

/// Compiled derivatives of the last coordinate and their partials in the unknowns.
pub struct LastCoordinateJets {
    pub slots: Vec<Var>,
    pub unknowns: Vec<usize>,
    values: CompiledVec,
    partials: Vec<Vec<Compiled>>,
}

impl LastCoordinateJets {
    pub fn new(sys: &StackelSystem) -> Result<LastCoordinateJets> {
        let big_n = sys.big_n();
        if big_n < 2 {
            return Err(Error::Config("Newton matching needs N >= 2".into()));
        }
        let eng = JetEngine::new(sys);
        let last = sys.coord(big_n);
        let slots = sys.phase_vars();
        let unknown_vars = ch_unknowns(sys);
        let unknowns: Vec<usize> = unknown_vars.iter().map(|&v| sys.phase_index(v).unwrap()).collect();
        let none = |_: Var| None;
        let mut exprs = Vec::new();
        let mut partials = Vec::new();
        for j in 1..=2 * big_n - 2 {
            let e = eng.component(last, j)?;
            partials.push(unknown_vars.iter().map(|&v| Compiled::new(&e.derivative(v), &slots, &none)).collect::<Result<Vec<_>>>()?);
            exprs.push((*e).clone());
        }
        Ok(LastCoordinateJets { values: CompiledVec::new(&exprs, &slots, &none)?, slots, unknowns, partials })
    }

    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        self.values.eval(x)
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.partials.len();
        DMatrix::from_fn(m, m, |i, j| self.partials[i][j].eval(x))
    }
}

/// Damped Newton from `seed` (full phase-space state) towards derivative
/// targets `t_1..t_{2N-2}`. `measure` maps the achieved values to the reported
/// residual; by default it is `max |F - t|`.
pub fn newton_solve(
    jets: &LastCoordinateJets,
    seed: Vec<f64>,
    targets: &[f64],
    opts: &NewtonOptions,
    measure: Option<&dyn Fn(&[f64]) -> f64>,
) -> Result<NewtonSolution> {
    let resid = |x: &[f64]| -> (Vec<f64>, f64) {
        let vals = jets.values(x);
        let f: Vec<f64> = vals.iter().zip(targets).map(|(a, b)| a - b).collect();
        let r = match measure {
            Some(m) => m(&vals),
            None => f.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        };
        (f, if r.is_nan() { f64::INFINITY } else { r })
    };
    let mut x = seed;
    let (mut f, mut r) = resid(&x);
    let mut history = vec![r];
    let mut it = 0;
    loop {
        if r <= opts.tol {
            return Ok(NewtonSolution { state: x, residual: r, iterations: it, history });
        }
        if it >= opts.max_iter {
            return Err(Error::NoConvergence { iterations: it, residual: r });
        }
        let jac = jets.jacobian(&x);
        let step = jac.lu().solve(&DVector::from_vec(f.clone())).ok_or(Error::NoConvergence { iterations: it, residual: r })?;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let mut y = x.clone();
            for (k, &slot) in jets.unknowns.iter().enumerate() {
                y[slot] -= scale * step[k];
            }
            let (fy, ry) = resid(&y);
            if ry < r {
                accepted = Some((y, fy, ry));
                break;
            }
            scale *= 0.5;
        }
        it += 1;
        match accepted {
            Some((y, fy, ry)) => {
                x = y;
                f = fy;
                r = ry;
                history.push(r);
            }
            None => return Err(Error::NoConvergence { iterations: it, residual: r }),
        }
    }
}

/// Pad or cut a Taylor series to `order`, filling with zeros.
fn pad(s: &TruncatedSeries<f64>, order: usize) -> TruncatedSeries<f64> {
    let mut c: Vec<f64> = s.coeffs().to_vec();
    c.resize(order + 1, 0.0);
    TruncatedSeries::new(c)
}

/// System for linear `m` with `c(s) = c_root`, in the chart centered at `s`
/// (the standard chart when `s = 0`).
fn linear_system(data: &BkmData, big_n: usize, s: &Q, c_root: &Q) -> Result<(StackelSystem, Q)> {
    // c(s) = s^{2N+1} + r_0
    let r0 = c_root - crate::algebra::poly::qpow(s, (2 * big_n + 1) as i32);
    let cform = CForm::with_tail(data, big_n, vec![RationalExpr::constant(r0.clone())])?;
    let sys = if s.is_zero() { StackelSystem::new(data.clone(), cform)? } else { StackelSystem::shifted(data.clone(), cform)? };
    Ok((sys, r0))
}

/// Damped Newton for a square system `f(x) = 0` in the first `n` entries of
/// `x`; the remaining entries are parameters.
fn newton_square_fixed(f: &CompiledVec, jac: &[Vec<Compiled>], mut x: Vec<f64>, n: usize, tol: f64, max_iter: usize) -> Option<Vec<f64>> {
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, a| if a.is_nan() { f64::INFINITY } else { m.max(a.abs()) });
    let mut fx = f.eval(&x);
    for _ in 0..max_iter {
        if norm(&fx) <= tol {
            return Some(x);
        }
        let j = DMatrix::from_fn(n, n, |a, b| jac[a][b].eval(&x));
        let step = j.lu().solve(&DVector::from_vec(fx.clone()))?;
        let mut scale = 1.0;
        loop {
            let mut y = x.clone();
            for (a, d) in y.iter_mut().zip(step.iter()) {
                *a -= scale * d;
            }
            let fy = f.eval(&y);
            if norm(&fy) < norm(&fx) || scale < 1e-3 {
                x = y;
                fx = fy;
                break;
            }
            scale *= 0.5;
        }
    }
    (norm(&fx) <= tol).then_some(x)
}

/// Rest point of the Camassa-Holm `x`-flow at `c = 0` normalized by `w_N = 1`:
/// `dV_1/dw_i = 0` for `i < N`. Returns `(w, -dV_1/dw_N)`; the second entry is
/// the value of `u` on the constant solution through this point.
pub fn ch_rest_point(big_n: usize) -> Result<(Vec<f64>, f64)> {
    let data = BkmData::camassa_holm();
    let (sys, _) = linear_system(&data, big_n, &Q::zero(), &Q::zero())?;
    let v1 = sys.potential_tilde(1);
    let coords = sys.coords().to_vec();
    let unknowns = &coords[..big_n - 1];
    let fix = |v: Var| (v == coords[big_n - 1]).then_some(1.0);
    let grad: Vec<RationalExpr> = unknowns.iter().map(|&z| v1.derivative(z)).collect();
    let f = CompiledVec::new(&grad, unknowns, &fix)?;
    let jac = grad.iter().map(|g| unknowns.iter().map(|&z| Compiled::new(&g.derivative(z), unknowns, &fix)).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
    let w = newton_square_fixed(&f, &jac, vec![0.7; big_n - 1], big_n - 1, 1e-14, 100)
        .ok_or(Error::NoConvergence { iterations: 100, residual: f64::NAN })?;
    let mut full = w.clone();
    full.push(1.0);
    let u = -v1.derivative(coords[big_n - 1]).eval_f64(&|v| coords.iter().position(|&c| c == v).map_or(f64::NAN, |i| full[i]));
    Ok((full, u))
}

/// Rest point of the `x`-flow for `m = m1 mu + m0` in the chart centered at the
/// root `s`, on which `u = shifted_u0 - s`. Returns the coordinates and `c(s)`.
pub fn linear_rest_point(m1: &Q, m0: &Q, big_n: usize, shifted_u0: f64) -> Result<(Vec<f64>, f64)> {
    let gauge = gauge_normalize(m1, m0)?;
    let s = -&gauge.lambda0;
    let data = BkmData::linear(m1.clone(), m0.clone());
    // With c(s) = 0 the potential is the polynomial part A; the full one is
    // A - c(s)/(m1 z_N), and u + s = c(s)/z_N^2.
    let (sys, _) = linear_system(&data, big_n, &s, &Q::zero())?;
    let a = sys.potential_tilde(1);
    let coords = sys.coords().to_vec();
    let mut grad: Vec<RationalExpr> = coords.iter().map(|&z| a.derivative(z)).collect();
    let jac_e: Vec<Vec<RationalExpr>> = grad.iter().map(|g| coords.iter().map(|&z| g.derivative(z)).collect()).collect();
    // The last equation carries the constant (u + s)/m1, fed in through an extra slot.
    let knob = Var::lambda();
    grad[big_n - 1] = grad[big_n - 1].add(&RationalExpr::var(knob));
    let mut slots = coords.clone();
    slots.push(knob);
    let none = |_: Var| None;
    let f = CompiledVec::new(&grad, &slots, &none)?;
    let jac = jac_e.iter().map(|r| r.iter().map(|e| Compiled::new(e, &slots, &none)).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
    // Top-degree part of A is the Camassa-Holm potential over m1, so for
    // |u + s| >> |s| the scaled Camassa-Holm rest point (u -> lambda u) is
    // close; from there follow the branch down to the requested value.
    let (w, u_ch) = ch_rest_point(big_n)?;
    let s_f = to_f64(&s).abs();
    let mut steps = 0;
    while shifted_u0.abs() * 2f64.powi(steps) < 100.0 * s_f.max(1.0) {
        steps += 1;
    }
    let mut z: Vec<f64> = Vec::new();
    for j in (0..=steps).rev() {
        let target = shifted_u0 * 2f64.powi(j);
        let seed: Vec<f64> = if z.is_empty() {
            let lambda = target / u_ch;
            w.iter().enumerate().map(|(i, x)| x * lambda.powi(i as i32 + 1)).collect()
        } else {
            z.iter().enumerate().map(|(i, x)| x * 0.5f64.powi(i as i32 + 1)).collect()
        };
        let scale = seed.iter().fold(target.abs(), |m, x| m.max(x.abs()));
        let mut x = seed;
        x.push(target / to_f64(m1));
        let mut sol = newton_square_fixed(&f, &jac, x, big_n, 1e-13 * scale, 100)
            .ok_or(Error::NoConvergence { iterations: 100, residual: f64::NAN })?;
        sol.truncate(big_n);
        z = sol;
    }
    let c_root = shifted_u0 * z[big_n - 1] * z[big_n - 1];
    Ok((z, c_root))
}

/// Newton matching for `m = m1 mu + m0`, `n = 1`. The solve runs in the chart
/// centered at the root `s` of `m` (the standard chart when `s = 0`), where
/// `u = c(s)/z_N^2 - s`.
pub fn match_linear_m(m1: &Q, m0: &Q, target: &TruncatedSeries<f64>, opts: &NewtonOptions) -> Result<MatchResult<f64>> {
    match opts.seed {
        Some(kind) => match_linear_seeded(m1, m0, target, opts, kind),
        None => match_linear_seeded(m1, m0, target, opts, SeedKind::Equilibrium).or_else(|e| match e {
            Error::NoConvergence { .. } => match_linear_seeded(m1, m0, target, opts, SeedKind::AllZero),
            e => Err(e),
        }),
    }
}

fn match_linear_seeded(m1: &Q, m0: &Q, target: &TruncatedSeries<f64>, opts: &NewtonOptions, kind: SeedKind) -> Result<MatchResult<f64>> {
    let gauge = gauge_normalize(m1, m0)?;
    let s = -&gauge.lambda0;
    let k = target.order();
    let big_n = opts.big_n.unwrap_or_else(|| min_gap_linear(k));
    if 2 * big_n < k + 2 {
        return Err(Error::Config(format!("N = {big_n} reaches order {} only; order {k} needs N >= {}", 2 * big_n - 2, min_gap_linear(k))));
    }
    let shifted_u0 = target.coeff(0) + to_f64(&s);
    if shifted_u0 == 0.0 || !shifted_u0.is_finite() {
        return Err(Error::Math("u(0) equals the gauge shift; no finite-gap solution through this jet".into()));
    }
    let data = BkmData::linear(m1.clone(), m0.clone());
    let (c_root, rest) = match kind {
        SeedKind::AllZero => {
            let c_abs = match &opts.c_abs {
                Some(c) => c.abs(),
                None => from_f64(shifted_u0.abs()).ok_or_else(|| Error::Config("non-finite target".into()))?,
            };
            if c_abs.is_zero() {
                return Err(Error::Config("|c| must be positive".into()));
            }
            (if shifted_u0 > 0.0 { c_abs } else { -c_abs }, None)
        }
        SeedKind::Equilibrium => {
            let (z, c) = linear_rest_point(m1, m0, big_n, shifted_u0)?;
            (from_f64(c).ok_or_else(|| Error::Math("rest point is not finite".into()))?, Some(z))
        }
    };
    let (sys, r0) = linear_system(&data, big_n, &s, &c_root)?;

    let padded = pad(target, 2 * big_n - 2);
    let InvertedJet::Last { mut series, .. } = invert_reduction_jet(&sys, std::slice::from_ref(&padded), &[], &to_f64(&c_root.abs()))? else {
        unreachable!("linear m inverts to the last coordinate")
    };
    let mut seed = vec![0.0; 2 * big_n];
    if let Some(z) = rest {
        if z[big_n - 1] < 0.0 {
            series = series.neg();
        }
        seed[..big_n].copy_from_slice(&z);
    }
    let tder = series.to_derivatives();
    seed[big_n - 1] = tder[0];
    let jets = LastCoordinateJets::new(&sys)?;
    // Residual on the u-jet: u = c(s)/z_N^2 - s against the padded target.
    let c_f = to_f64(&c_root);
    let s_f = to_f64(&s);
    let u_target = padded.to_derivatives();
    let measure = |vals: &[f64]| -> f64 {
        let mut d = vec![tder[0]];
        d.extend_from_slice(vals);
        let z = TruncatedSeries::from_derivatives(&d);
        match z.mul(&z).recip() {
            Some(inv) => {
                let u = inv.scale(&c_f).add(&TruncatedSeries::constant(-s_f, z.order())).to_derivatives();
                u.iter().zip(&u_target).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            }
            None => f64::INFINITY,
        }
    };
    let sol = newton_solve(&jets, seed, &tder[1..], opts, Some(&measure))?;

    let (z0, pz0) = (sol.state[..big_n].to_vec(), sol.state[big_n..].to_vec());
    let (w0, p0, shifted) = if s.is_zero() {
        (z0, pz0, None)
    } else {
        let vc = v_coordinates(&s, big_n);
        let (w, p) = vc.to_w(&z0, &pz0);
        (w, p, Some((z0, pz0)))
    };
    let std_sys = StackelSystem::new(data.clone(), CForm::with_tail(&data, big_n, vec![RationalExpr::constant(r0.clone())])?)?;
    let d = std_sys.place_on_zero_level_f64(&w0, &p0, &|_| f64::NAN);
    Ok(MatchResult {
        data,
        big_n,
        c_tail: vec![r0],
        w0,
        p0,
        d,
        shifted,
        gauge: Some(gauge),
        residual: sol.residual,
        iterations: sol.iterations,
        residual_history: sol.history,
        leading_coefficients: Vec::new(),
        seed: Some(kind),
    })
}

/// Camassa-Holm (`m = mu`).
pub fn match_ch_newton(target: &TruncatedSeries<f64>, opts: &NewtonOptions) -> Result<MatchResult<f64>> {
    match_linear_m(&q(1), &Q::zero(), target, opts)
}

/// Independent check of a match: Taylor-mode solution of the equations of
/// motion from the initial condition in the standard chart, pushed through `R`.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    /// `per_order[j]`: max over components of the deviation of the `j`-th derivative.
    pub per_order: Vec<f64>,
    pub max_deviation: f64,
    /// `max_i |H_i|` at the initial point.
    pub level_residual: f64,
    /// Achieved derivative values, per component.
    pub achieved: Vec<Vec<f64>>,
}

pub fn verify_match<T: Scalar>(res: &MatchResult<T>, target: &[TruncatedSeries<T>]) -> Result<VerifyReport> {
    let sys = res.system()?;
    let order = target.iter().map(|t| t.order()).min().unwrap_or(0);
    let z0: Vec<T> = res.w0.iter().chain(&res.p0).cloned().collect();
    let sol = solve_ode_series(&sys.phase_vars(), sys.eom(), &z0, &|_| None, order)
        .ok_or_else(|| Error::Math("the equations of motion are singular at the initial point".into()))?;
    let map = reduce(&sys)?;
    let u = jet_pushforward(&map, sys.coords(), &sol[..sys.big_n()], &|_| None)?;
    let mut per_order = vec![0.0f64; order + 1];
    let mut achieved = Vec::new();
    for (ui, ti) in u.iter().zip(target) {
        let a = derivative_values(ui);
        let t = derivative_values(&ti.truncate(order));
        for j in 0..=order {
            per_order[j] = per_order[j].max(a[j].sub(&t[j]).to_f64().abs());
        }
        achieved.push(a.iter().map(|x| x.to_f64()).collect());
    }
    let point = |v: Var| sys.phase_index(v).map(|i| TruncatedSeries::constant(z0[i].clone(), 0));
    let level_residual = (1..=sys.big_n())
        .map(|i| eval_series(&sys.hamiltonian(i), &point, &|_| None, 0).map_or(f64::INFINITY, |h| h.coeff(0).to_f64().abs()))
        .fold(0.0, f64::max);
    let max_deviation = per_order.iter().cloned().fold(0.0, f64::max);
    Ok(VerifyReport { per_order, max_deviation, level_residual, achieved })
}

/// Taylor coefficients from derivative values.
pub fn jet_from_derivatives<T: Scalar>(d: &[T]) -> TruncatedSeries<T> {
    TruncatedSeries::from_derivatives(d)
}

/// Derivative values of an exact rational jet, as `f64`.
pub fn derivatives_f64(s: &TruncatedSeries<Q>) -> Vec<f64> {
    s.coeffs().iter().enumerate().map(|(j, c)| to_f64(&(c * Q::from_integer(factorial(j as u64))))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::qr;

    fn series(v: &[i64]) -> TruncatedSeries<Q> {
        TruncatedSeries::new(v.iter().map(|&x| q(x)).collect())
    }

    #[test]
    fn kdv_example() {
        // w_1 Taylor coefficients (1, 2, 3, 4) <=> u = -2 w_1.
        let target = series(&[-2, -4, -6, -8]);
        let res = match_deg_m0(1, &q(1), std::slice::from_ref(&target), Some(4)).unwrap();
        assert_eq!(res.big_n, 4);
        assert_eq!(res.w0[0], q(1));
        assert_eq!(res.p0[3], q(-2));
        assert_eq!(res.w0[1], qr(9, 2));
        assert_eq!(res.p0[2], q(-16));
        assert_eq!(res.residual, 0.0);
        let rep = verify_match(&res, &[target]).unwrap();
        assert!(rep.per_order.iter().all(|&x| x == 0.0));
        assert_eq!(rep.level_residual, 0.0);
    }

    #[test]
    fn kdv_constant() {
        let res = match_deg_m0(1, &q(1), &[series(&[6])], None).unwrap();
        assert_eq!(res.big_n, 1);
        assert_eq!(res.w0, vec![q(-3)]);
        assert_eq!(res.p0, vec![q(0)]);
    }

    #[test]
    fn kb_order_one() {
        let target = [series(&[1, 2]), series(&[3, -1])];
        let res = match_deg_m0(2, &q(1), &target, None).unwrap();
        assert_eq!(res.big_n, 2);
        assert_eq!(verify_match(&res, &target).unwrap().max_deviation, 0.0);
        assert_eq!(res.leading_coefficients, vec![q(1), q(1), q(-1), q(-1)]);
    }

    #[test]
    fn even_order_needs_full_block() {
        // n = 2, k = 2 needs w_3 and w_4 at order 2.
        assert!(match_deg_m0(2, &q(1), &[series(&[1, 0, 1]), series(&[0, 1, 0])], Some(3)).is_err());
        assert!(match_deg_m0(2, &q(1), &[series(&[1, 0, 1]), series(&[0, 1, 0])], None).is_ok());
    }

    #[test]
    fn corrupted_start_is_detected() {
        let target = series(&[-2, -4, -6, -8]);
        let mut res = match_deg_m0(1, &q(1), std::slice::from_ref(&target), None).unwrap();
        res.w0[1] += q(1);
        let rep = verify_match(&res, &[target]).unwrap();
        assert_eq!(rep.per_order[0], 0.0);
        assert_eq!(rep.per_order[1], 0.0);
        assert!(rep.per_order[2] > 0.0);
    }

    #[test]
    fn ch_constant_jet_is_the_rest_point() {
        let target = TruncatedSeries::new(vec![2.0, 0.0, 0.0, 0.0, 0.0]);
        let opts = NewtonOptions { seed: Some(SeedKind::Equilibrium), ..Default::default() };
        let res = match_ch_newton(&target, &opts).unwrap();
        assert_eq!(res.iterations, 0);
        assert!(res.residual < 1e-12);
        assert!(res.p0.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn all_zero_orbit() {
        // At the all-0 point (w_N)_{2x} = 2 w_N and (w_N)_{4x} = 4 w_N, so
        // u = c/w_N^2 has derivative values (u0, 0, -4 u0, 0, 64 u0) for N = 3,
        // whatever c is.
        for c_abs in [q(1), q(7)] {
            let opts = NewtonOptions { seed: Some(SeedKind::AllZero), c_abs: Some(c_abs), ..Default::default() };
            let target = jet_from_derivatives(&[-3.0, 0.0, 12.0, 0.0, -192.0]);
            let res = match_ch_newton(&target, &opts).unwrap();
            assert_eq!(res.iterations, 0);
            assert!(res.residual < 1e-12, "{}", res.residual);
        }
    }

    #[test]
    fn zero_iterations_report_the_seed_mismatch() {
        let target = jet_from_derivatives(&[1.0, 0.1, 0.0, 0.0]);
        let opts = NewtonOptions { seed: Some(SeedKind::AllZero), max_iter: 0, ..Default::default() };
        match match_ch_newton(&target, &opts).unwrap_err() {
            Error::NoConvergence { iterations, residual } => {
                assert_eq!(iterations, 0);
                // seed jet (1, 0, -4, 0, 64) against the padded target (1, 0.1, 0, 0, 0)
                assert!((residual - 64.0).abs() < 1e-9, "{residual}");
            }
            e => panic!("{e}"),
        }
        let zero = TruncatedSeries::new(vec![0.0, 1.0]);
        assert!(match_ch_newton(&zero, &NewtonOptions::default()).is_err());
    }

    #[test]
    fn ch_rest_points() {
        // N = 2: V_1 = -w_1^3 + 2 w_1 w_2 - c/w_2, so w_1^2 = 2/3 at w_2 = 1.
        let (w, u) = ch_rest_point(2).unwrap();
        assert!((w[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-13);
        assert!((u + 2.0 * (2.0f64 / 3.0).sqrt()).abs() < 1e-13);
        for big_n in 2..=5 {
            let (z, c) = linear_rest_point(&q(1), &q(0), big_n, -3.0).unwrap();
            let sys = crate::stackel::preset("ch", big_n).unwrap();
            let vals = |v: Var| sys.phase_index(v).map_or(c, |i| if i < big_n { z[i] } else { 0.0 });
            for e in sys.eom() {
                assert!(e.eval_f64(&vals).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn near_constant_ch_targets_converge() {
        for (k, u0) in [(4usize, 1.0f64), (5, -10.0), (6, 10.0)] {
            let d: Vec<f64> = (0..=k).map(|j| if j == 0 { u0 } else { u0 * 0.01 * if j % 2 == 0 { 1.0 } else { -0.5 } }).collect();
            let target = jet_from_derivatives(&d);
            let res = match_ch_newton(&target, &NewtonOptions::default()).unwrap();
            assert_eq!(res.seed, Some(SeedKind::Equilibrium));
            assert!(res.iterations <= 12 && res.residual <= 1e-9);
            let rep = verify_match(&res, &[target]).unwrap();
            assert!(rep.max_deviation < 1e-8, "{}", rep.max_deviation);
        }
    }

    #[test]
    fn general_linear_m_relation() {
        // m = 2 mu + 3: u(0) = c(s)/v_N(0)^2 + lambda0, lambda0 = 3/2.
        let target = jet_from_derivatives(&[5.0, 0.02, -0.03, 0.01]);
        let res = match_linear_m(&q(2), &q(3), &target, &NewtonOptions::default()).unwrap();
        let (v, _) = res.shifted.clone().unwrap();
        let s = -1.5f64;
        let c_s = s.powi(2 * res.big_n as i32 + 1) + to_f64(&res.c_tail[0]);
        assert!((c_s / (v[res.big_n - 1] * v[res.big_n - 1]) + 1.5 - 5.0).abs() < 1e-10);
        assert!(verify_match(&res, &[target]).unwrap().max_deviation < 1e-8);
    }
}
