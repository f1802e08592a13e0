//! Numerical integration of the Hamiltonian flows, finite-gap fields
//! `u = R(w)` on `(x, t)` grids, and finite-difference PDE residuals.
//!
//! The integrator is the Dormand-Prince 5(4) pair with per-step mixed error
//! control. Requested output nodes are hit exactly; between accepted steps
//! the trajectory is available through cubic Hermite interpolation.

use crate::algebra::{RationalExpr, Var};
use crate::error::{Error, Result};
use crate::jet_match::fmt_f64;
use crate::reduction::{constraint_q, reduce, v_coordinates, Constraint, VCoordinates};
use crate::stackel::{BkmData, BkmType, Chart, StackelSystem};
use crate::tape::{Compiled, CompiledVec};
use serde::Serialize;

/// A fully numeric Stäckel system: compiled flows of `H_1` (in `x`) and
/// `H_2` (in `t`), the Hamiltonians, the reduction map and the constraint.
#[derive(Clone, Debug)]
pub struct NumericSystem {
    big_n: usize,
    n: usize,
    x_rhs: CompiledVec,
    t_rhs: Option<CompiledVec>,
    h_tilde: CompiledVec,
    u: CompiledVec,
    q: QEval,
    vcoords: Option<VCoordinates>,
    /// Level constants `d_1..d_N`.
    pub d: Vec<f64>,
}

#[derive(Clone, Debug)]
enum QEval {
    FirstCoordinate,
    Expr(Compiled),
    InverseSqrt(Compiled),
}

impl NumericSystem {
    /// Compile `sys`; `consts` supplies every remaining constant (`c_j`, and
    /// `d_i` unless they are numeric already).
    pub fn new(sys: &StackelSystem, consts: &dyn Fn(Var) -> Option<f64>) -> Result<NumericSystem> {
        let slots = sys.phase_vars();
        let x_rhs = CompiledVec::new(sys.eom(), &slots, consts)?;
        let t_rhs = if sys.big_n() >= 2 { Some(CompiledVec::new(&sys.flow(2), &slots, consts)?) } else { None };
        let hs: Vec<RationalExpr> = (1..=sys.big_n()).map(|i| sys.hamiltonian_tilde(i)).collect();
        let h_tilde = CompiledVec::new(&hs, &slots, consts)?;
        let map = reduce(sys)?;
        let u = CompiledVec::new(&map.u, &slots, consts)?;
        let q = match constraint_q(sys, &map) {
            Ok(Constraint::FirstCoordinate) => QEval::FirstCoordinate,
            Ok(Constraint::HalfTrace(e)) => QEval::Expr(Compiled::new(&e, &slots, consts)?),
            Ok(Constraint::InverseSqrtSigma(e)) => QEval::InverseSqrt(Compiled::new(&e, &slots, consts)?),
            Err(_) => QEval::FirstCoordinate,
        };
        let vcoords = match &sys.chart {
            Chart::Standard => None,
            Chart::Shifted(s) => {
                let s = s.as_constant().ok_or_else(|| Error::Config("the chart shift must be numeric".into()))?;
                Some(v_coordinates(&s, sys.big_n()))
            }
        };
        let d = sys
            .cform
            .d
            .iter()
            .map(|e| Compiled::new(e, &[], consts).map(|c| c.eval(&[])))
            .collect::<Result<Vec<f64>>>()
            .unwrap_or_else(|_| vec![0.0; sys.big_n()]);
        Ok(NumericSystem { big_n: sys.big_n(), n: sys.n(), x_rhs, t_rhs, h_tilde, u, q, vcoords, d })
    }

    pub fn big_n(&self) -> usize {
        self.big_n
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Choose `d_i = -H~_i(state)` so that the state lies on the zero level.
    pub fn set_zero_level(&mut self, state: &[f64]) {
        self.d = self.h_tilde.eval(state).iter().map(|h| -h).collect();
    }

    pub fn hamiltonians(&self, state: &[f64]) -> Vec<f64> {
        self.h_tilde.eval(state).iter().zip(&self.d).map(|(h, d)| h + d).collect()
    }

    /// `sum |term|` of each `H_i`: the size of the quantities cancelling in `H_i`.
    pub fn hamiltonian_scales(&self, state: &[f64]) -> Vec<f64> {
        self.h_tilde.eval_abs(state).iter().zip(&self.d).map(|(h, d)| h + d.abs()).collect()
    }

    pub fn u(&self, state: &[f64]) -> Vec<f64> {
        self.u.eval(state)
    }

    /// `(w, p)` in the standard chart.
    pub fn standard(&self, state: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (z, p) = state.split_at(self.big_n);
        match &self.vcoords {
            None => (z.to_vec(), p.to_vec()),
            Some(vc) => vc.to_w(z, p),
        }
    }

    pub fn q(&self, state: &[f64]) -> f64 {
        match &self.q {
            QEval::FirstCoordinate => self.standard(state).0[0],
            QEval::Expr(c) => c.eval(state),
            QEval::InverseSqrt(c) => 1.0 / c.eval(state).sqrt(),
        }
    }

    fn rhs(&self, flow: Flow) -> Result<&CompiledVec> {
        match flow {
            Flow::X => Ok(&self.x_rhs),
            Flow::T => self.t_rhs.as_ref().ok_or_else(|| Error::Config("the t-flow needs N >= 2".into())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    /// Flow of `H_1`.
    X,
    /// Flow of `H_2`.
    T,
}

#[derive(Clone, Copy, Debug)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Escape when the max-norm of the state exceeds this.
    pub max_norm: f64,
    /// Escape when the step falls below `min_step * max(1, |x|)`.
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions { rel_tol: 1e-10, abs_tol: 1e-12, max_norm: 1e6, min_step: 1e-12, max_steps: 1_000_000 }
    }
}

impl IntegratorOptions {
    pub fn with_tol(rel_tol: f64, abs_tol: f64) -> Self {
        IntegratorOptions { rel_tol, abs_tol, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Escape {
    StepUnderflow,
    NormBound,
    NonFinite,
    StepLimit,
}

/// Accepted steps of one integration, in grid order.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub big_n: usize,
    pub xs: Vec<f64>,
    /// `(w, p)` in the chart of the system, coordinates first.
    pub states: Vec<Vec<f64>>,
    /// Right-hand side at each sample, for the Hermite interpolant.
    pub slopes: Vec<Vec<f64>>,
    /// `H_1..H_N` at each sample.
    pub hamiltonians: Vec<Vec<f64>>,
    /// Term magnitudes of `H_1..H_N` at each sample.
    pub scales: Vec<Vec<f64>>,
    pub escape: Option<Escape>,
    /// Last accepted `x`.
    pub last_valid_x: f64,
}

impl Trajectory {
    pub fn escaped(&self) -> bool {
        self.escape.is_some()
    }

    /// `max_i |H_i(x) - H_i(x_0)|` over all samples.
    pub fn max_drift(&self) -> f64 {
        let h0 = &self.hamiltonians[0];
        self.hamiltonians
            .iter()
            .flat_map(|h| h.iter().zip(h0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }

    /// Drift of each `H_i` measured against `max(1, sum |term|)`, the
    /// largest size of the terms of `H_i` met so far along the trajectory.
    /// Equal to [`max_drift`](Self::max_drift) while the terms stay below 1.
    pub fn max_relative_drift(&self) -> f64 {
        let h0 = &self.hamiltonians[0];
        let mut peak = vec![1.0f64; h0.len()];
        let mut worst = 0.0f64;
        for (h, s) in self.hamiltonians.iter().zip(&self.scales) {
            for i in 0..h.len() {
                peak[i] = peak[i].max(s[i]);
                worst = worst.max((h[i] - h0[i]).abs() / peak[i]);
            }
        }
        worst
    }

    /// Cubic Hermite interpolation; `None` outside the integrated range.
    pub fn at(&self, x: f64) -> Option<Vec<f64>> {
        let dir = if self.xs.len() > 1 && self.xs[1] < self.xs[0] { -1.0 } else { 1.0 };
        let k = self.xs.windows(2).position(|w| dir * (x - w[0]) >= 0.0 && dir * (w[1] - x) >= 0.0)?;
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let h = x1 - x0;
        let s = (x - x0) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        Some(
            (0..self.states[k].len())
                .map(|i| {
                    h00 * self.states[k][i]
                        + h10 * h * self.slopes[k][i]
                        + h01 * self.states[k + 1][i]
                        + h11 * h * self.slopes[k + 1][i]
                })
                .collect(),
        )
    }

    /// CSV with columns `x, w_1..w_N, p_1..p_N, H_1..H_N, u_1..u_n, q`
    /// (standard chart).
    pub fn to_csv(&self, sys: &NumericSystem) -> String {
        let mut out = csv_header(sys, false);
        for (x, s) in self.xs.iter().zip(&self.states) {
            out.push_str(&csv_row(sys, &[*x], s));
        }
        out
    }
}

fn csv_header(sys: &NumericSystem, with_t: bool) -> String {
    let mut cols = vec!["x".to_string()];
    if with_t {
        cols.push("t".into());
    }
    let nn = sys.big_n;
    cols.extend((1..=nn).map(|i| format!("w_{i}")));
    cols.extend((1..=nn).map(|i| format!("p_{i}")));
    cols.extend((1..=nn).map(|i| format!("H_{i}")));
    cols.extend((1..=sys.n).map(|i| format!("u_{i}")));
    cols.push("q".into());
    cols.join(",") + "\n"
}

fn csv_row(sys: &NumericSystem, lead: &[f64], state: &[f64]) -> String {
    let (w, p) = sys.standard(state);
    let mut vals: Vec<f64> = lead.to_vec();
    vals.extend(w);
    vals.extend(p);
    vals.extend(sys.hamiltonians(state));
    vals.extend(sys.u(state));
    vals.push(sys.q(state));
    vals.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",") + "\n"
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Run {
    traj: Trajectory,
    /// States at the reached stops, in order.
    at_stops: Vec<Vec<f64>>,
}

fn error_norm(y: &[f64], y1: &[f64], e: &[f64], o: &IntegratorOptions) -> f64 {
    (0..y.len())
        .map(|i| (e[i] / (o.abs_tol + o.rel_tol * y[i].abs().max(y1[i].abs()))).abs())
        .fold(0.0, f64::max)
}

fn initial_step(f: &CompiledVec, y: &[f64], f0: &[f64], o: &IntegratorOptions) -> f64 {
    let sc: Vec<f64> = y.iter().map(|v| o.abs_tol + o.rel_tol * v.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
    let (d0, d1) = (rms(y), rms(f0));
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let f1 = f.eval(&y1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1)
}

/// Integrate `f` from `x0` through the `stops`, which must be strictly
/// monotone and on one side of `x0`.
fn integrate_stops(sys: &NumericSystem, f: &CompiledVec, y0: &[f64], x0: f64, stops: &[f64], o: &IntegratorOptions) -> Result<Run> {
    let dim = y0.len();
    let mut f0 = vec![0.0; dim];
    f.eval_into(y0, &mut f0);
    if f0.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularStart("the right-hand side is not finite at the initial point".into()));
    }
    let mut traj = Trajectory {
        big_n: sys.big_n,
        xs: vec![x0],
        states: vec![y0.to_vec()],
        slopes: vec![f0.clone()],
        hamiltonians: vec![sys.hamiltonians(y0)],
        scales: vec![sys.hamiltonian_scales(y0)],
        escape: None,
        last_valid_x: x0,
    };
    let mut at_stops = Vec::with_capacity(stops.len());
    let Some(&end) = stops.last() else {
        return Ok(Run { traj, at_stops });
    };
    let dir = if end >= x0 { 1.0 } else { -1.0 };
    let (mut x, mut y) = (x0, y0.to_vec());
    let mut h = initial_step(f, &y, &f0, o).min((end - x0).abs()).max(1e-10);
    let mut k = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut next = 0;
    let mut steps = 0;
    while next < stops.len() {
        if steps >= o.max_steps {
            traj.escape = Some(Escape::StepLimit);
            break;
        }
        if h < o.min_step * x.abs().max(1.0) {
            traj.escape = Some(Escape::StepUnderflow);
            break;
        }
        let target = stops[next];
        let lands = h >= (target - x).abs() * (1.0 - 1e-12);
        let step = if lands { target - x } else { dir * h };
        k[0].copy_from_slice(&f0);
        let mut finite = true;
        for s in 1..7 {
            for i in 0..dim {
                tmp[i] = y[i] + step * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
            }
            let rest = &mut k[s];
            f.eval_into(&tmp, rest);
            if rest.iter().any(|v| !v.is_finite()) {
                finite = false;
                break;
            }
        }
        if !finite {
            h *= 0.25;
            if h < o.min_step * x.abs().max(1.0) {
                traj.escape = Some(Escape::NonFinite);
                break;
            }
            continue;
        }
        // The last stage is evaluated at the fifth-order solution (FSAL).
        let y1 = tmp.clone();
        let err: Vec<f64> = (0..dim).map(|i| step * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>()).collect();
        let en = error_norm(&y, &y1, &err, o);
        let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        if en <= 1.0 {
            steps += 1;
            x = if lands { target } else { x + step };
            y = y1;
            f0.copy_from_slice(&k[6]);
            traj.xs.push(x);
            traj.states.push(y.clone());
            traj.slopes.push(f0.clone());
            traj.hamiltonians.push(sys.hamiltonians(&y));
            traj.scales.push(sys.hamiltonian_scales(&y));
            traj.last_valid_x = x;
            if lands {
                at_stops.push(y.clone());
                next += 1;
            }
            if y.iter().any(|v| v.abs() > o.max_norm) {
                traj.escape = Some(Escape::NormBound);
                break;
            }
            h = step.abs().max(if lands { h } else { 0.0 }) * fac;
        } else {
            h = step.abs() * fac.min(1.0);
        }
    }
    Ok(Run { traj, at_stops })
}

fn state_of(sys: &NumericSystem, w0: &[f64], p0: &[f64]) -> Result<Vec<f64>> {
    if w0.len() != sys.big_n || p0.len() != sys.big_n {
        return Err(Error::Config(format!("expected {} coordinates and {} momenta", sys.big_n, sys.big_n)));
    }
    Ok(w0.iter().chain(p0).copied().collect())
}

/// Integrate the `x`-flow of `H_1` from `x = x_span.0` to `x_span.1`.
/// `(w0, p0)` are in the chart of the system.
pub fn integrate_x(sys: &NumericSystem, w0: &[f64], p0: &[f64], x_span: (f64, f64), rel_tol: f64, abs_tol: f64) -> Result<Trajectory> {
    integrate_flow(sys, Flow::X, &state_of(sys, w0, p0)?, x_span, &IntegratorOptions::with_tol(rel_tol, abs_tol))
}

pub fn integrate_flow(sys: &NumericSystem, flow: Flow, y0: &[f64], span: (f64, f64), o: &IntegratorOptions) -> Result<Trajectory> {
    let stops = if span.1 == span.0 { vec![] } else { vec![span.1] };
    Ok(integrate_stops(sys, sys.rhs(flow)?, y0, span.0, &stops, o)?.traj)
}

/// States at the nodes of `grid`, integrating outward from `x = 0`; `None`
/// past an escape.
pub fn sample_flow(sys: &NumericSystem, flow: Flow, y0: &[f64], grid: &[f64], o: &IntegratorOptions) -> Result<Vec<Option<Vec<f64>>>> {
    let f = sys.rhs(flow)?;
    let mut out: Vec<Option<Vec<f64>>> = vec![None; grid.len()];
    let mut fwd: Vec<usize> = (0..grid.len()).filter(|&i| grid[i] > 0.0).collect();
    let mut bwd: Vec<usize> = (0..grid.len()).filter(|&i| grid[i] < 0.0).collect();
    fwd.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
    bwd.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]));
    for i in (0..grid.len()).filter(|&i| grid[i] == 0.0) {
        out[i] = Some(y0.to_vec());
    }
    for side in [fwd, bwd] {
        let mut stops: Vec<f64> = side.iter().map(|&i| grid[i]).collect();
        stops.dedup();
        let run = integrate_stops(sys, f, y0, 0.0, &stops, o)?;
        for &i in &side {
            if let Some(j) = stops.iter().position(|&s| s == grid[i]) {
                out[i] = run.at_stops.get(j).cloned();
            }
        }
    }
    Ok(out)
}

/// Richardson levels used by [`numeric_derivatives`].
pub const RICHARDSON_LEVELS: usize = 5;

/// Derivatives at `x = 0` of an observable along a flow, from central
/// differences on the stencils `j h / 2^l` (`|j| <= 2`, `l < RICHARDSON_LEVELS`)
/// combined by Richardson extrapolation in powers of `h^2`. `out[i][k]` is
/// the `k`-th derivative of component `i`, `k <= order <= 4`. The flow must
/// exist on `[-2h, 2h]`; `h = 0.2` keeps the finest step at `0.0125`.
pub fn numeric_derivatives(
    sys: &NumericSystem,
    flow: Flow,
    y0: &[f64],
    order: usize,
    h: f64,
    o: &IntegratorOptions,
    observe: &dyn Fn(&[f64]) -> Vec<f64>,
) -> Result<Vec<Vec<f64>>> {
    if order > 4 {
        return Err(Error::Config("numeric derivatives are available through order 4".into()));
    }
    let level = |h: f64| -> Result<Vec<Vec<f64>>> {
        let grid: Vec<f64> = (-2..=2).map(|j| j as f64 * h).collect();
        let f: Vec<Vec<f64>> = sample_flow(sys, flow, y0, &grid, o)?
            .into_iter()
            .map(|s| s.map(|s| observe(&s)).ok_or_else(|| Error::Math("the flow escaped near x = 0".into())))
            .collect::<Result<_>>()?;
        Ok((0..f[2].len())
            .map(|i| {
                let v = |j: usize| f[j][i];
                vec![
                    v(2),
                    (v(3) - v(1)) / (2.0 * h),
                    (v(3) - 2.0 * v(2) + v(1)) / (h * h),
                    (v(4) - 2.0 * v(3) + 2.0 * v(1) - v(0)) / (2.0 * h.powi(3)),
                    (v(4) - 4.0 * v(3) + 6.0 * v(2) - 4.0 * v(1) + v(0)) / h.powi(4),
                ]
            })
            .collect())
    };
    let levels: Vec<Vec<Vec<f64>>> = (0..RICHARDSON_LEVELS).map(|l| level(h / f64::from(1u32 << l))).collect::<Result<_>>()?;
    Ok((0..levels[0].len())
        .map(|i| {
            (0..=order)
                .map(|k| {
                    let mut t: Vec<f64> = levels.iter().map(|d| d[i][k]).collect();
                    for m in 1..t.len() {
                        let f = 4f64.powi(m as i32);
                        for j in (m..t.len()).rev() {
                            t[j] = (f * t[j] - t[j - 1]) / (f - 1.0);
                        }
                    }
                    t[t.len() - 1]
                })
                .collect()
        })
        .collect())
}

/// `max |phi_1^x(phi_2^t(y0)) - phi_2^t(phi_1^x(y0))|` over the grid.
pub fn commutation_defect(sys: &NumericSystem, y0: &[f64], xs: &[f64], ts: &[f64], o: &IntegratorOptions) -> Result<f64> {
    let end = |y: &[f64], flow: Flow, s: f64| -> Result<Vec<f64>> {
        sample_flow(sys, flow, y, &[s], o)?.pop().flatten().ok_or_else(|| Error::Math("the flow escaped".into()))
    };
    let mut worst = 0.0f64;
    for &x in xs {
        for &t in ts {
            let a = end(&end(y0, Flow::T, t)?, Flow::X, x)?;
            let b = end(&end(y0, Flow::X, x)?, Flow::T, t)?;
            worst = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(worst, f64::max);
        }
    }
    Ok(worst)
}

/// Finite-gap field on a rectangular `(x, t)` grid.
#[derive(Clone, Debug)]
pub struct FieldSample {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    /// `states[a][b]`: phase point at `(xs[b], ts[a])`; NaN past an escape.
    pub states: Vec<Vec<Vec<f64>>>,
    /// `u[a][b][i]`: `u_{i+1}(xs[b], ts[a])`.
    pub u: Vec<Vec<Vec<f64>>>,
    pub q: Vec<Vec<f64>>,
    /// Spatial step.
    pub h: f64,
    pub escaped: bool,
}

impl FieldSample {
    /// CSV with columns `x, t, w_1..w_N, p_1..p_N, H_1..H_N, u_1..u_n, q`.
    pub fn to_csv(&self, sys: &NumericSystem) -> String {
        let mut out = csv_header(sys, true);
        for (a, t) in self.ts.iter().enumerate() {
            for (b, x) in self.xs.iter().enumerate() {
                out.push_str(&csv_row(sys, &[*x, *t], &self.states[a][b]));
            }
        }
        out
    }
}

fn uniform_step(g: &[f64]) -> Option<f64> {
    if g.len() < 2 {
        return None;
    }
    let h = g[1] - g[0];
    let ok = h > 0.0 && g.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.max(1.0));
    ok.then_some(h)
}

/// Joint flow `(x, t) -> phi_1^x(phi_2^t(w0, p0))`: the `H_2`-flow along
/// `t_grid`, then the `H_1`-flow along `x_grid` from every `t`-slice.
/// The system should already be on the zero level.
pub fn joint_flow(sys: &NumericSystem, w0: &[f64], p0: &[f64], x_grid: &[f64], t_grid: &[f64], tol: f64) -> Result<FieldSample> {
    let y0 = state_of(sys, w0, p0)?;
    let o = IntegratorOptions::with_tol(tol, tol * 1e-2);
    let h = uniform_step(x_grid).ok_or_else(|| Error::Config("x_grid must be increasing and uniform".into()))?;
    let slices = if t_grid.iter().all(|&t| t == 0.0) {
        vec![Some(y0.clone()); t_grid.len()]
    } else {
        sample_flow(sys, Flow::T, &y0, t_grid, &o)?
    };
    let nan = vec![f64::NAN; 2 * sys.big_n];
    let mut escaped = false;
    let mut states = Vec::with_capacity(t_grid.len());
    for s in &slices {
        let row: Vec<Vec<f64>> = match s {
            Some(y) => sample_flow(sys, Flow::X, y, x_grid, &o)?
                .into_iter()
                .map(|v| {
                    escaped |= v.is_none();
                    v.unwrap_or_else(|| nan.clone())
                })
                .collect(),
            None => {
                escaped = true;
                vec![nan.clone(); x_grid.len()]
            }
        };
        states.push(row);
    }
    let u = states.iter().map(|r| r.iter().map(|s| sys.u(s)).collect()).collect();
    let q = states.iter().map(|r| r.iter().map(|s| sys.q(s)).collect()).collect();
    Ok(FieldSample { xs: x_grid.to_vec(), ts: t_grid.to_vec(), states, u, q, h, escaped })
}

/// Max and root-mean-square of residual samples.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Norms {
    pub max: f64,
    pub l2: f64,
}

impl Norms {
    fn of(v: &[f64]) -> Norms {
        if v.is_empty() {
            return Norms::default();
        }
        Norms { max: v.iter().fold(0.0, |a, b| a.max(b.abs())), l2: (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PdeResidual {
    /// One entry per `u` component; empty for a single time slice.
    pub evolution: Vec<Norms>,
    pub constraint: Option<Norms>,
}

/// Equations checked by [`pde_residual_with`].
///
/// Fields produced by the real `x`- and `t`-flows of `H_1`, `H_2` carry the
/// opposite sign on the dispersive terms compared with the usual way of
/// writing these systems (the two conventions are related by
/// `(x, t) -> (ix, it)`). The forms below are the ones the fields satisfy.
#[derive(Clone, Debug)]
pub enum PdeForm {
    /// The type III/IV system built from the data:
    /// `u_t = -q_xxx zeta + (L + q) u_x` with `zeta = m(L) e_n`, and
    /// `0 = 2q - m_n q_xx - tr L` (type III) or `q = tr L / 2` (type IV).
    Bkm(BkmData),
    /// `u_t = u_xxx/2 - 3 u u_x / 2`, which is `u_t = -u_xxx/2 + 3 u u_x / 2`
    /// in reversed time.
    Kdv,
    /// `u1_t = u2_x - 3 u1 u1_x / 2`, `u2_t = u1_xxx/2 - u2 u1_x - u1 u2_x / 2`.
    KaupBoussinesq,
    /// `u_t = 2 u q_x + q u_x`, `-u = 2q - q_xx`: the Camassa-Holm pair for
    /// `-u`, whose evolution equation is invariant under `u -> -u`.
    CamassaHolm,
}

struct Stencil<'a> {
    f: &'a FieldSample,
    h: f64,
    k: f64,
}

impl Stencil<'_> {
    fn u(&self, a: usize, b: usize, i: usize) -> f64 {
        self.f.u[a][b][i]
    }
    fn ux(&self, a: usize, b: usize, i: usize) -> f64 {
        (self.u(a, b + 1, i) - self.u(a, b - 1, i)) / (2.0 * self.h)
    }
    fn uxxx(&self, a: usize, b: usize, i: usize) -> f64 {
        (self.u(a, b + 2, i) - 2.0 * self.u(a, b + 1, i) + 2.0 * self.u(a, b - 1, i) - self.u(a, b - 2, i)) / (2.0 * self.h.powi(3))
    }
    fn ut(&self, a: usize, b: usize, i: usize) -> f64 {
        (self.u(a + 1, b, i) - self.u(a - 1, b, i)) / (2.0 * self.k)
    }
    fn q(&self, a: usize, b: usize) -> f64 {
        self.f.q[a][b]
    }
    fn qx(&self, a: usize, b: usize) -> f64 {
        (self.q(a, b + 1) - self.q(a, b - 1)) / (2.0 * self.h)
    }
    fn qxx(&self, a: usize, b: usize) -> f64 {
        (self.q(a, b + 1) - 2.0 * self.q(a, b) + self.q(a, b - 1)) / (self.h * self.h)
    }
    fn qxxx(&self, a: usize, b: usize) -> f64 {
        (self.q(a, b + 2) - 2.0 * self.q(a, b + 1) + 2.0 * self.q(a, b - 1) - self.q(a, b - 2)) / (2.0 * self.h.powi(3))
    }
}

/// Residuals of the system of type III/IV attached to `data`.
pub fn pde_residual(field: &FieldSample, data: &BkmData) -> Result<PdeResidual> {
    pde_residual_with(field, &PdeForm::Bkm(data.clone()))
}

/// Central-difference residuals at interior nodes (two nodes away from the
/// `x` boundary, one from the `t` boundary).
pub fn pde_residual_with(field: &FieldSample, form: &PdeForm) -> Result<PdeResidual> {
    let (nx, nt) = (field.xs.len(), field.ts.len());
    if nx < 5 {
        return Err(Error::GridTooCoarse(nx));
    }
    if nt > 1 && nt < 5 {
        return Err(Error::GridTooCoarse(nt));
    }
    let h = uniform_step(&field.xs).ok_or_else(|| Error::Config("x grid must be increasing and uniform".into()))?;
    let k = if nt > 1 { uniform_step(&field.ts).ok_or_else(|| Error::Config("t grid must be increasing and uniform".into()))? } else { 0.0 };
    let st = Stencil { f: field, h, k };
    let ncomp = field.u[0][0].len();
    let mut constraint = Vec::new();
    for a in 0..nt {
        for b in 2..nx - 2 {
            let c = match form {
                PdeForm::Bkm(data) => {
                    let tr = -st.u(a, b, 0);
                    match data.bkm_type() {
                        BkmType::III => {
                            let mn = numeric_m(data)?[data.n];
                            2.0 * st.q(a, b) - mn * st.qxx(a, b) - tr
                        }
                        BkmType::IV => st.q(a, b) - tr / 2.0,
                        t => return Err(Error::Config(format!("no residual for type {t:?}"))),
                    }
                }
                PdeForm::CamassaHolm => st.u(a, b, 0) + (2.0 * st.q(a, b) - st.qxx(a, b)),
                PdeForm::Kdv | PdeForm::KaupBoussinesq => continue,
            };
            constraint.push(c);
        }
    }
    let mut evolution = Vec::new();
    if nt > 1 {
        let mut res: Vec<Vec<f64>> = vec![Vec::new(); ncomp];
        let m_coeffs = match form {
            PdeForm::Bkm(data) => numeric_m(data)?,
            _ => Vec::new(),
        };
        for a in 1..nt - 1 {
            for b in 2..nx - 2 {
                let r: Vec<f64> = match form {
                    PdeForm::Bkm(_) => {
                        let uv: Vec<f64> = (0..ncomp).map(|i| st.u(a, b, i)).collect();
                        let ux: Vec<f64> = (0..ncomp).map(|i| st.ux(a, b, i)).collect();
                        let zeta = zeta_at(&m_coeffs, &uv);
                        let lux = companion_apply(&uv, &ux);
                        let (q, qxxx) = (st.q(a, b), st.qxxx(a, b));
                        (0..ncomp).map(|i| st.ut(a, b, i) - (-qxxx * zeta[i] + lux[i] + q * ux[i])).collect()
                    }
                    PdeForm::Kdv => vec![st.ut(a, b, 0) - (0.5 * st.uxxx(a, b, 0) - 1.5 * st.u(a, b, 0) * st.ux(a, b, 0))],
                    PdeForm::KaupBoussinesq => {
                        let (u1, u2) = (st.u(a, b, 0), st.u(a, b, 1));
                        let (u1x, u2x) = (st.ux(a, b, 0), st.ux(a, b, 1));
                        vec![
                            st.ut(a, b, 0) - (u2x - 1.5 * u1 * u1x),
                            st.ut(a, b, 1) - (0.5 * st.uxxx(a, b, 0) - u2 * u1x - 0.5 * u1 * u2x),
                        ]
                    }
                    PdeForm::CamassaHolm => {
                        let (u, q) = (st.u(a, b, 0), st.q(a, b));
                        vec![st.ut(a, b, 0) - (2.0 * u * st.qx(a, b) + q * st.ux(a, b, 0))]
                    }
                };
                for (i, v) in r.into_iter().enumerate() {
                    res[i].push(v);
                }
            }
        }
        evolution = res.iter().map(|v| Norms::of(v)).collect();
    }
    let constraint = (!constraint.is_empty()).then(|| Norms::of(&constraint));
    Ok(PdeResidual { evolution, constraint })
}

fn numeric_m(data: &BkmData) -> Result<Vec<f64>> {
    (0..=data.n)
        .map(|j| {
            data.m_coeff(j)
                .as_constant()
                .map(|c| crate::algebra::rational::to_f64(&c))
                .ok_or_else(|| Error::Config("m must be numeric".into()))
        })
        .collect()
}

/// `L v` for `L` the companion matrix of `sigma_u`.
fn companion_apply(u: &[f64], v: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n).map(|i| -u[i] * v[0] + if i + 1 < n { v[i + 1] } else { 0.0 }).collect()
}

/// `zeta = m(L) e_n`, by Horner's rule; `m` is given lowest degree first.
fn zeta_at(m: &[f64], u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let e = |c: f64| (0..n).map(|i| if i + 1 == n { c } else { 0.0 }).collect::<Vec<f64>>();
    let mut z = e(m[n]);
    for j in (0..n).rev() {
        z = companion_apply(u, &z);
        z[n - 1] += m[j];
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::JetEngine;
    use crate::stackel::preset;

    fn numeric(name: &str, big_n: usize, c: f64, y0: &[f64]) -> NumericSystem {
        let sys = preset(name, big_n).unwrap();
        let mut num = NumericSystem::new(&sys, &|v| (v.kind() == crate::algebra::VarKind::C).then_some(c)).unwrap();
        num.set_zero_level(y0);
        num
    }

    fn grid(n: usize, h: f64) -> Vec<f64> {
        (0..n).map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * h).collect()
    }

    #[test]
    fn first_integral_for_one_gap() {
        let (w0, p0) = (0.4, -0.3);
        let num = numeric("kdv", 1, 0.0, &[w0, p0]);
        let d1 = num.d[0];
        assert!((d1 - (p0 * p0 / 2.0 + w0 * w0 * w0)).abs() < 1e-15);
        let tr = integrate_x(&num, &[w0], &[p0], (0.0, 3.0), 1e-10, 1e-12).unwrap();
        assert!(!tr.escaped());
        for (s, f) in tr.states.iter().zip(&tr.slopes) {
            let w = s[0];
            assert!((f[0] * f[0] - (2.0 * d1 - 2.0 * w.powi(3))).abs() < 1e-8);
        }
    }

    #[test]
    fn hamiltonians_are_conserved() {
        for (name, big_n) in [("kdv", 3), ("kb", 4), ("ch", 3)] {
            let y0: Vec<f64> = (0..2 * big_n).map(|i| 0.6 + 0.1 * (i as f64) * if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            let num = numeric(name, big_n, 0.7, &y0);
            let tr = integrate_x(&num, &y0[..big_n], &y0[big_n..], (0.0, 2.0), 1e-10, 1e-12).unwrap();
            assert!(tr.max_relative_drift() <= 1e-8, "{name}: {}", tr.max_relative_drift());
            if tr.states.iter().flatten().all(|v| v.abs() <= 1.0) {
                assert!(tr.max_drift() <= 1e-8);
            }
            let back = integrate_x(&num, &y0[..big_n], &y0[big_n..], (0.0, -2.0), 1e-10, 1e-12).unwrap();
            assert!(back.max_relative_drift() <= 1e-8);
            assert!(back.xs.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn small_last_coordinate_escapes() {
        let y0 = [0.0, 1e-3, 0.0, 0.0];
        let num = numeric("ch", 2, 1.0, &y0);
        let tr = integrate_x(&num, &y0[..2], &y0[2..], (0.0, 10.0), 1e-10, 1e-12).unwrap();
        assert!(tr.escaped());
        assert!(tr.last_valid_x > 0.0 && tr.last_valid_x < 10.0);
        assert_eq!(*tr.xs.last().unwrap(), tr.last_valid_x);
        let singular = numeric("ch", 2, 1.0, &[0.5, 0.5, 0.0, 0.0]);
        assert!(matches!(integrate_x(&singular, &[0.5, 0.0], &[0.0, 0.0], (0.0, 1.0), 1e-10, 1e-12), Err(Error::SingularStart(_))));
    }

    #[test]
    fn hermite_interpolation_between_steps() {
        let y0 = [0.2, 0.1, -0.1, 0.3];
        let num = numeric("kdv", 2, 0.0, &y0);
        let tr = integrate_x(&num, &y0[..2], &y0[2..], (0.0, 1.0), 1e-12, 1e-14).unwrap();
        let at = tr.at(0.37).unwrap();
        let exact = sample_flow(&num, Flow::X, &y0, &[0.37], &IntegratorOptions::with_tol(1e-12, 1e-14)).unwrap();
        let e = exact[0].as_ref().unwrap();
        assert!(at.iter().zip(e).all(|(a, b)| (a - b).abs() < 1e-6));
        assert!(tr.at(1.5).is_none());
    }

    #[test]
    fn derivatives_agree_with_symbolic_jets() {
        let sys = preset("kb", 4).unwrap();
        let y0 = [0.3, -0.2, 0.1, 0.4, 0.2, 0.1, -0.3, 0.25];
        let mut num = NumericSystem::new(&sys, &|_| None).unwrap();
        num.set_zero_level(&y0);
        let o = IntegratorOptions::with_tol(1e-13, 1e-15);
        let nd = numeric_derivatives(&num, Flow::X, &y0, 4, 0.2, &o, &|s| s.to_vec()).unwrap();
        let engine = JetEngine::new(&sys);
        let vals = |v: Var| sys.phase_index(v).map_or_else(|| num.d[v.index() - 1], |i| y0[i]);
        let mut fact = 1.0;
        for k in 0..=4 {
            if k > 0 {
                fact *= k as f64;
            }
            for (i, &v) in sys.phase_vars().iter().enumerate() {
                let c = engine.taylor_coeffs(v, k).unwrap()[k].eval_f64(&vals);
                assert!((nd[i][k] - fact * c).abs() < 1e-6, "{v} order {k}: {} vs {}", nd[i][k], fact * c);
            }
        }
    }

    #[test]
    fn joint_flow_slices_and_commutation() {
        let y0 = [0.3, 0.8, -0.1, -0.05];
        let num = numeric("ch", 2, 1.3, &y0);
        let xs = grid(9, 0.05);
        let f = joint_flow(&num, &y0[..2], &y0[2..], &xs, &[0.0], 1e-12).unwrap();
        let tr = sample_flow(&num, Flow::X, &y0, &xs, &IntegratorOptions::with_tol(1e-12, 1e-14)).unwrap();
        for (b, s) in tr.iter().enumerate() {
            let s = s.as_ref().unwrap();
            assert_eq!(f.u[0][b], num.u(s));
            assert_eq!(f.q[0][b], s[0]);
        }
        let g = joint_flow(&num, &y0[..2], &y0[2..], &xs, &grid(5, 0.05), 1e-12).unwrap();
        for (a, row) in g.states.iter().enumerate() {
            for (b, s) in row.iter().enumerate() {
                assert_eq!(g.q[a][b], s[0]);
            }
        }
        let o = IntegratorOptions::with_tol(1e-12, 1e-14);
        assert!(commutation_defect(&num, &y0, &[-0.2, 0.0, 0.2], &[-0.2, 0.0, 0.2], &o).unwrap() <= 1e-6);
    }

    #[test]
    fn residuals_converge_at_second_order() {
        let y0 = [0.3, 0.8, -0.1, -0.05];
        for (name, form) in [("kdv", PdeForm::Kdv), ("ch", PdeForm::CamassaHolm)] {
            let num = numeric(name, 2, 1.3, &y0);
            let res: Vec<PdeResidual> = [33usize, 65]
                .iter()
                .map(|&n| {
                    let g = grid(n, 0.8 / (n - 1) as f64);
                    pde_residual_with(&joint_flow(&num, &y0[..2], &y0[2..], &g, &g, 1e-13).unwrap(), &form).unwrap()
                })
                .collect();
            let ratio = res[0].evolution[0].max / res[1].evolution[0].max;
            assert!((3.0..=5.0).contains(&ratio), "{name}: {ratio}");
        }
    }

    #[test]
    fn zero_field_and_coarse_grids() {
        let xs = grid(7, 0.1);
        let zero = FieldSample {
            xs: xs.clone(),
            ts: xs.clone(),
            states: vec![vec![vec![0.0; 2]; 7]; 7],
            u: vec![vec![vec![0.0]; 7]; 7],
            q: vec![vec![0.0; 7]; 7],
            h: 0.1,
            escaped: false,
        };
        for form in [PdeForm::Kdv, PdeForm::CamassaHolm, PdeForm::Bkm(BkmData::camassa_holm()), PdeForm::Bkm(BkmData::constant(1))] {
            let r = pde_residual_with(&zero, &form).unwrap();
            assert_eq!(r.evolution[0].max, 0.0);
            assert!(r.constraint.is_none_or(|c| c.max == 0.0));
        }
        let mut coarse = zero.clone();
        coarse.xs.truncate(4);
        assert!(matches!(pde_residual_with(&coarse, &PdeForm::Kdv), Err(Error::GridTooCoarse(4))));
    }

    #[test]
    fn zeta_and_companion() {
        // n = 2, m = 1: zeta = e_2; m = mu: zeta = L e_2 = e_1.
        assert_eq!(zeta_at(&[1.0, 0.0, 0.0], &[2.0, 3.0]), vec![0.0, 1.0]);
        assert_eq!(zeta_at(&[0.0, 1.0, 0.0], &[2.0, 3.0]), vec![1.0, 0.0]);
        assert_eq!(zeta_at(&[0.0, 1.0], &[2.0]), vec![-2.0]);
        assert_eq!(companion_apply(&[2.0, 3.0], &[1.0, 1.0]), vec![-1.0, -3.0]);
    }

    #[test]
    fn csv_columns() {
        let y0 = [0.3, 0.8, -0.1, -0.05];
        let num = numeric("ch", 2, 1.3, &y0);
        let tr = integrate_x(&num, &y0[..2], &y0[2..], (0.0, 0.1), 1e-10, 1e-12).unwrap();
        let csv = tr.to_csv(&num);
        assert_eq!(csv.lines().next().unwrap(), "x,w_1,w_2,p_1,p_2,H_1,H_2,u_1,q");
        assert_eq!(csv.lines().count(), tr.xs.len() + 1);
    }
}
