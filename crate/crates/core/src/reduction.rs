//! The finite-reduction map `u = R(w)`, its action on jets, and the gauge
//! and coordinate changes used for a general linear `m`.
//!
//! `R` is defined by two conditions on `P = sigma_u sigma_w^2 - c`: `P` is
//! divisible by `m`, and `P / m` has degree at most `2N - 1`. Both are linear
//! in `u_1..u_n`.

use crate::algebra::rational::binomial;
use crate::algebra::{MultiPoly, PolyMatrix, Q, RationalExpr, SpectralPoly, Var};
use crate::error::{Error, Result};
use crate::series::{eval_series, Scalar, TruncatedSeries};
use crate::stackel::{BkmType, Chart, StackelSystem};
use num_traits::{Signed, Zero};

/// `u_1..u_n` as functions of the configuration coordinates of a system.
#[derive(Clone, Debug)]
pub struct ReductionMap {
    pub n: usize,
    pub big_n: usize,
    pub chart: Chart,
    pub u: Vec<RationalExpr>,
}

/// Solve the defining conditions for `u` given `sigma_w` (in `mu`), `c` and `m`.
pub fn reduce_sigma(n: usize, m: &SpectralPoly, c: &SpectralPoly, sigma_w: &SpectralPoly) -> Result<Vec<RationalExpr>> {
    let big_n = sigma_w.degree().ok_or_else(|| Error::Config("sigma_w must be nonzero".into()))?;
    let dm = m.degree().ok_or_else(|| Error::Config("m must be nonzero".into()))?;
    let us: Vec<Var> = (1..=n).map(Var::u).collect();
    let sigma_u = SpectralPoly::monic(&us.iter().map(|&v| RationalExpr::var(v)).collect::<Vec<_>>());
    let p = sigma_u.mul(&sigma_w.mul(sigma_w)).sub(c);
    let mut conds: Vec<RationalExpr> = Vec::with_capacity(n);
    if dm > 0 {
        let (_, rem) = p.divrem(m)?;
        conds.extend((0..dm).map(|j| rem.coeff(j)));
    }
    conds.extend((2 * big_n + dm..2 * big_n + n).map(|j| p.coeff(j)));
    let zero_u = |v: Var| us.contains(&v).then(<Q as Zero>::zero);
    let a: Vec<Vec<RationalExpr>> = conds.iter().map(|e| us.iter().map(|&u| e.derivative(u)).collect()).collect();
    let b: Vec<RationalExpr> = conds
        .iter()
        .map(|e| e.eval_partial(&zero_u).map(|x| x.neg()).ok_or_else(|| Error::Math("singular condition".into())))
        .collect::<Result<_>>()?;
    solve_linear(a, b).ok_or_else(|| Error::Degenerate("the reduction conditions are singular".into()))
}

/// Gaussian elimination over rational expressions; `None` if singular.
pub fn solve_linear(mut a: Vec<Vec<RationalExpr>>, mut b: Vec<RationalExpr>) -> Option<Vec<RationalExpr>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].inv()?;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].mul(&inv);
            for k in col..n {
                let t = f.mul(&a[col][k]);
                a[r][k] = a[r][k].sub(&t);
            }
            let t = f.mul(&b[col]);
            b[r] = b[r].sub(&t);
        }
    }
    let mut x = vec![RationalExpr::zero(); n];
    for r in (0..n).rev() {
        let mut s = b[r].clone();
        for k in r + 1..n {
            s = s.sub(&a[r][k].mul(&x[k]));
        }
        x[r] = s.div(&a[r][r])?;
    }
    Some(x)
}

/// `sigma_w` of a system written in `mu`, whatever its chart.
pub fn sigma_of(sys: &StackelSystem) -> SpectralPoly {
    let z: Vec<RationalExpr> = sys.coords().iter().map(|&v| RationalExpr::var(v)).collect();
    let s = SpectralPoly::monic(&z);
    match &sys.chart {
        Chart::Standard => s,
        Chart::Shifted(shift) => s.translate(&shift.neg()),
    }
}

pub fn reduce(sys: &StackelSystem) -> Result<ReductionMap> {
    let u = reduce_sigma(sys.n(), &sys.data.m, &sys.c_poly(), &sigma_of(sys))?;
    Ok(ReductionMap { n: sys.n(), big_n: sys.big_n(), chart: sys.chart.clone(), u })
}

/// Closed form for constant `m`: `sum_{j+k+l=i} u_j w_k w_l = c_i` with
/// `u_0 = w_0 = 1`, solved for `u_i` in order.
pub fn triangular_reduce_deg0(n: usize, w: &[RationalExpr], c: &[RationalExpr]) -> Vec<RationalExpr> {
    let wk = |k: usize| if k == 0 { RationalExpr::one() } else { w.get(k - 1).cloned().unwrap_or_else(RationalExpr::zero) };
    let s: Vec<RationalExpr> = (0..=n).map(|m| (0..=m).fold(RationalExpr::zero(), |acc, k| acc.add(&wk(k).mul(&wk(m - k))))).collect();
    let mut u: Vec<RationalExpr> = vec![RationalExpr::one()];
    for i in 1..=n {
        let mut acc = c[i - 1].clone();
        for j in 0..i {
            acc = acc.sub(&u[j].mul(&s[i - j]));
        }
        u.push(acc);
    }
    u.split_off(1)
}

/// `c_i`, the coefficient of `mu^{2N+n-i}` in `c`.
pub fn c_coeffs_top(sys: &StackelSystem, count: usize) -> Vec<RationalExpr> {
    let c = sys.c_poly();
    let top = 2 * sys.big_n() + sys.n();
    (1..=count).map(|i| if i <= top { c.coeff(top - i) } else { RationalExpr::zero() }).collect()
}

/// Push Taylor series of the coordinates through `R`.
pub fn jet_pushforward<T: Scalar>(
    map: &ReductionMap,
    coords: &[Var],
    wjet: &[TruncatedSeries<T>],
    consts: &dyn Fn(Var) -> Option<T>,
) -> Result<Vec<TruncatedSeries<T>>> {
    let order = wjet.iter().map(|s| s.order()).min().unwrap_or(0);
    let lookup = |v: Var| coords.iter().position(|&z| z == v).map(|i| wjet[i].clone());
    map.u
        .iter()
        .map(|e| eval_series(e, &lookup, consts, order).ok_or_else(|| Error::Math("singular evaluation of the reduction map".into())))
        .collect()
}

/// Target series for the distinguished coordinates.
#[derive(Clone, Debug)]
pub enum InvertedJet<T: Scalar> {
    /// Constant `m`: series of `w_1..w_n`.
    Leading(Vec<TruncatedSeries<T>>),
    /// Linear `m`, `n = 1`: series of the last coordinate and the value of
    /// `c` at the root of `m` that produced it.
    Last { series: TruncatedSeries<T>, c_root: T },
}

/// Invert `R` on jets.
///
/// Constant `m`: triangular back-substitution with `c_1..c_n` from `c_top`.
/// Linear `m` with root `s`: `u = c(s)/z_N^2 - s`, so `z_N = sqrt(c(s)/(u + s))`
/// with the positive root; `c_root` is the magnitude of `c(s)`, its sign is
/// taken from `u(0) + s`.
pub fn invert_reduction_jet<T: Scalar>(
    sys: &StackelSystem,
    ujet: &[TruncatedSeries<T>],
    c_top: &[T],
    c_root_abs: &T,
) -> Result<InvertedJet<T>> {
    match sys.data.deg_m() {
        0 => {
            let n = sys.n();
            if ujet.len() != n {
                return Err(Error::Config(format!("expected {n} target components")));
            }
            let order = ujet.iter().map(|s| s.order()).min().unwrap();
            let two = T::from_i64(2);
            let one = TruncatedSeries::constant(T::sc_one(), order);
            let mut w: Vec<TruncatedSeries<T>> = Vec::with_capacity(n);
            let wk = |w: &Vec<TruncatedSeries<T>>, k: usize| if k == 0 { one.clone() } else { w[k - 1].clone() };
            for i in 1..=n {
                // u_i + 2 w_i + sum_{j=1}^{i-1} u_j S_{i-j} + sum_{k=1}^{i-1} w_k w_{i-k} = c_i
                let mut rhs = TruncatedSeries::constant(c_top[i - 1].clone(), order).sub(&ujet[i - 1].truncate(order));
                for j in 1..i {
                    let mut s = TruncatedSeries::constant(T::sc_zero(), order);
                    for k in 0..=i - j {
                        s = s.add(&wk(&w, k).mul(&wk(&w, i - j - k)));
                    }
                    rhs = rhs.sub(&ujet[j - 1].truncate(order).mul(&s));
                }
                for k in 1..i {
                    rhs = rhs.sub(&w[k - 1].mul(&w[i - k - 1]));
                }
                w.push(rhs.scale(&T::sc_one().div(&two)));
            }
            Ok(InvertedJet::Leading(w))
        }
        1 if sys.n() == 1 => {
            let s = sys.data.m_root().and_then(|r| r.as_constant()).ok_or_else(|| Error::Config("m must be numeric".into()))?;
            let shifted = ujet[0].add(&TruncatedSeries::constant(T::from_q(&s), ujet[0].order()));
            let base = shifted.coeff(0).to_f64();
            if base == 0.0 {
                return Err(Error::Math("u(0) equals the gauge shift; the jet is not in the domain of the inverse".into()));
            }
            let c_root = if base > 0.0 { c_root_abs.clone() } else { c_root_abs.neg() };
            let ratio = shifted.recip().ok_or_else(|| Error::Math("u(0) is singular".into()))?.scale(&c_root);
            let series = ratio.sqrt().ok_or_else(|| Error::Math("no real square root of c/u".into()))?;
            Ok(InvertedJet::Last { series, c_root })
        }
        _ => Err(Error::Config("jet inversion is implemented for deg m = 0, and for deg m = 1 with n = 1".into())),
    }
}

/// Gauge data for `m = m1 mu + m0`: the shift `lambda0 = m0/m1` removing the
/// constant term, and the scale `a` with `a^2 |m1| = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gauge {
    pub lambda0: Q,
    pub a: f64,
    /// Sign of `m1`; the normalized polynomial is `sign * mu`.
    pub sign: i32,
}

pub fn gauge_normalize(m1: &Q, m0: &Q) -> Result<Gauge> {
    if Zero::is_zero(m1) {
        return Err(Error::Degenerate("m1 = 0".into()));
    }
    let lambda0 = m0 / m1;
    let a = 1.0 / crate::algebra::rational::to_f64(&m1.abs()).sqrt();
    Ok(Gauge { lambda0, a, sign: if m1.is_positive() { 1 } else { -1 } })
}

/// The affine change `sigma_w(mu) = (mu - s)^N + sum v_i (mu - s)^{N-i}`.
#[derive(Clone, Debug)]
pub struct VCoordinates {
    pub s: Q,
    pub big_n: usize,
    /// `w_i` as polynomials in `v`.
    pub w_of_v: Vec<MultiPoly>,
    /// `v_i` as polynomials in `w`.
    pub v_of_w: Vec<MultiPoly>,
}

pub fn v_coordinates(s: &Q, big_n: usize) -> VCoordinates {
    // w_i = sum_{j<=i} v_j C(N-j, i-j) (-s)^{i-j}, and the inverse with +s.
    let expand = |from: fn(usize) -> Var, sign: i64| -> Vec<MultiPoly> {
        (1..=big_n)
            .map(|i| {
                let mut acc = MultiPoly::zero();
                for j in 0..=i {
                    let k = (i - j) as u32;
                    let coeff = Q::from_integer(binomial((big_n - j) as u64, (i - j) as u64)) * crate::algebra::poly::qpow(&(s * Q::from_integer(sign.into())), k as i32);
                    let base = if j == 0 { MultiPoly::one() } else { MultiPoly::var(from(j)) };
                    acc = acc.add(&base.scale(&coeff));
                }
                acc
            })
            .collect()
    };
    VCoordinates { s: s.clone(), big_n, w_of_v: expand(Var::v, -1), v_of_w: expand(Var::w, 1) }
}

impl VCoordinates {
    /// `J[i][j] = d w_i / d v_j` (constant, lower unitriangular).
    pub fn jacobian(&self) -> Vec<Vec<Q>> {
        (0..self.big_n)
            .map(|i| (1..=self.big_n).map(|j| self.w_of_v[i].derivative(Var::v(j)).constant_term()).collect())
            .collect()
    }

    /// Inverse of [`jacobian`](Self::jacobian): `d v_i / d w_j`.
    pub fn inverse_jacobian(&self) -> Vec<Vec<Q>> {
        (0..self.big_n)
            .map(|i| (1..=self.big_n).map(|j| self.v_of_w[i].derivative(Var::w(j)).constant_term()).collect())
            .collect()
    }

    /// Point change `(v, pv) -> (w, p)` with `p = J^{-T} pv`.
    pub fn to_w<T: Scalar>(&self, v: &[T], pv: &[T]) -> (Vec<T>, Vec<T>) {
        let w: Vec<T> = self.w_of_v.iter().map(|e| eval_poly_scalar(e, v)).collect();
        let jinv = self.inverse_jacobian();
        let p = (0..self.big_n)
            .map(|a| (0..self.big_n).fold(T::sc_zero(), |acc, b| acc.add(&T::from_q(&jinv[b][a]).mul(&pv[b]))))
            .collect();
        (w, p)
    }

    /// Point change `(w, p) -> (v, pv)` with `pv = J^T p`.
    pub fn to_v<T: Scalar>(&self, w: &[T], p: &[T]) -> (Vec<T>, Vec<T>) {
        let v: Vec<T> = self.v_of_w.iter().map(|e| eval_poly_scalar(e, w)).collect();
        let j = self.jacobian();
        let pv = (0..self.big_n)
            .map(|a| (0..self.big_n).fold(T::sc_zero(), |acc, b| acc.add(&T::from_q(&j[b][a]).mul(&p[b]))))
            .collect();
        (v, pv)
    }

    /// `M` written in `v`-coordinates, `(dv/dw) M_w (dw/dv)`, as a matrix in `v`.
    pub fn transformed_operator(&self) -> PolyMatrix {
        let w: Vec<Var> = (1..=self.big_n).map(Var::w).collect();
        let m_w = crate::stackel::companion(&w);
        let (j, jinv) = (q_matrix(&self.jacobian()), q_matrix(&self.inverse_jacobian()));
        self.pull_to_v(&jinv.mul(&m_w).mul(&j))
    }

    /// `g^{-1}` written in `v`-coordinates, `(dv/dw) g^{-1} (dv/dw)^T`.
    pub fn transformed_inverse_metric(&self) -> PolyMatrix {
        let w: Vec<Var> = (1..=self.big_n).map(Var::w).collect();
        let g = crate::stackel::inverse_metric(&w);
        let jinv = q_matrix(&self.inverse_jacobian());
        self.pull_to_v(&jinv.mul(&g).mul(&jinv.transpose()))
    }

    fn pull_to_v(&self, m: &PolyMatrix) -> PolyMatrix {
        let map = |v: Var| (v.kind() == crate::algebra::VarKind::W).then(|| self.w_of_v[v.index() - 1].clone());
        PolyMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j).substitute(&map))
    }
}

fn q_matrix(a: &[Vec<Q>]) -> PolyMatrix {
    PolyMatrix::from_fn(a.len(), a.len(), |i, j| RationalExpr::constant(a[i][j].clone()))
}

/// Evaluate a polynomial in `z_1..z_N` (any one kind) at a point.
fn eval_poly_scalar<T: Scalar>(p: &MultiPoly, z: &[T]) -> T {
    let mut acc = T::sc_zero();
    for (m, c) in p.terms() {
        let mut t = T::from_q(c);
        for &(v, e) in m.factors() {
            for _ in 0..e {
                t = t.mul(&z[v.index() - 1]);
            }
        }
        acc = acc.add(&t);
    }
    acc
}

/// The constraint function `q` of a finite-gap solution.
#[derive(Clone, Debug)]
pub enum Constraint {
    /// Type III: `q = w_1` (first coordinate of the standard chart).
    FirstCoordinate,
    /// Type IV: `q = tr(L)/2 = -u_1/2`.
    HalfTrace(RationalExpr),
    /// Type II: `q = sigma_u(lambda)^{-1/2}`; only its square inverse is polynomial.
    InverseSqrtSigma(RationalExpr),
}

pub fn constraint_q(sys: &StackelSystem, map: &ReductionMap) -> Result<Constraint> {
    match sys.data.bkm_type() {
        BkmType::III => Ok(Constraint::FirstCoordinate),
        BkmType::IV => Ok(Constraint::HalfTrace(map.u[0].scale(&crate::algebra::qr(-1, 2)))),
        BkmType::II => {
            let lambda = match &sys.data.lambda {
                crate::stackel::Lambda::Finite(l) => RationalExpr::constant(l.clone()),
                crate::stackel::Lambda::Infinity => unreachable!(),
            };
            let sigma_u = SpectralPoly::monic(&map.u);
            Ok(Constraint::InverseSqrtSigma(sigma_u.eval(&lambda)))
        }
        BkmType::I => Err(Error::Config("type I time evolution is not supported".into())),
    }
}

impl Constraint {
    /// `q` at a point, given the values of the coordinates of the standard chart.
    pub fn eval_f64(&self, w: &[f64], vals: &dyn Fn(Var) -> f64) -> f64 {
        match self {
            Constraint::FirstCoordinate => w[0],
            Constraint::HalfTrace(e) => e.eval_f64(vals),
            Constraint::InverseSqrtSigma(e) => 1.0 / e.eval_f64(vals).sqrt(),
        }
    }
}
