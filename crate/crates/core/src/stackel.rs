//! Stäckel systems built from the data `(n, m(mu), lambda)` and a spectral
//! polynomial `c(mu) = mu^{2N+n} + m(mu) d(mu) + r(mu)`.
//!
//! The operator `M` is the companion matrix of `sigma_w(mu) = mu^N + sum w_i mu^{N-i}`,
//! the kinetic energies come from the adjugate of `mu I - M^T`, and the
//! potentials from `(c/m)(M)` computed in `K[mu]/(sigma_w)`.

use crate::algebra::{qr, MultiPoly, PolyMatrix, Q, RationalExpr, SpectralPoly, Var};
use crate::error::{Error, Result};
use crate::grading::GradingScheme;
use num_traits::One;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
pub enum Lambda {
    Infinity,
    Finite(Q),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BkmType {
    I,
    II,
    III,
    IV,
}

/// BKM data `(n, L, m)`: the operator `L` is the companion matrix in
/// `u_1..u_n`, so only `n`, `m` and the parameter `lambda` are stored.
#[derive(Clone, Debug)]
pub struct BkmData {
    pub n: usize,
    pub m: SpectralPoly,
    pub lambda: Lambda,
}

impl BkmData {
    pub fn new(n: usize, m: SpectralPoly, lambda: Lambda) -> Result<BkmData> {
        if n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        match m.degree() {
            None => return Err(Error::Config("m must be nonzero".into())),
            Some(d) if d > n => return Err(Error::Config(format!("deg m = {d} exceeds n = {n}"))),
            _ => {}
        }
        Ok(BkmData { n, m, lambda })
    }

    /// `m = 1`, `lambda = infinity`, `n` components (KdV for n = 1, Kaup-Boussinesq for n = 2).
    pub fn constant(n: usize) -> BkmData {
        BkmData { n, m: SpectralPoly::constant(RationalExpr::one()), lambda: Lambda::Infinity }
    }

    /// `m = mu`, `n = 1`, `lambda = infinity` (Camassa-Holm).
    pub fn camassa_holm() -> BkmData {
        BkmData { n: 1, m: SpectralPoly::monomial(1), lambda: Lambda::Infinity }
    }

    /// `m = m1 mu + m0`, `n = 1`.
    pub fn linear(m1: Q, m0: Q) -> BkmData {
        BkmData {
            n: 1,
            m: SpectralPoly::new(vec![RationalExpr::constant(m0), RationalExpr::constant(m1)]),
            lambda: Lambda::Infinity,
        }
    }

    pub fn deg_m(&self) -> usize {
        self.m.degree().unwrap_or(0)
    }

    /// `m_j`, the coefficient of `mu^j`.
    pub fn m_coeff(&self, j: usize) -> RationalExpr {
        self.m.coeff(j)
    }

    /// Finite root of a linear `m`.
    pub fn m_root(&self) -> Option<RationalExpr> {
        if self.deg_m() != 1 {
            return None;
        }
        self.m.coeff(0).neg().div(&self.m.coeff(1))
    }

    pub fn bkm_type(&self) -> BkmType {
        match &self.lambda {
            Lambda::Finite(l) => {
                let at = self.m.eval(&RationalExpr::constant(l.clone()));
                if at.is_zero() {
                    BkmType::II
                } else {
                    BkmType::I
                }
            }
            Lambda::Infinity => {
                if self.m.coeff(self.n).is_zero() {
                    BkmType::IV
                } else {
                    BkmType::III
                }
            }
        }
    }
}

/// The spectral polynomial `c(mu) = mu^{2N+n} + m(mu) d(mu) + r(mu)` with
/// `d(mu) = d_1 mu^{N-1} + ... + d_N` and `deg r < deg m`.
#[derive(Clone, Debug)]
pub struct CForm {
    pub big_n: usize,
    pub d: Vec<RationalExpr>,
    pub r: SpectralPoly,
}

impl CForm {
    /// Symbolic `d_i` and symbolic tail `r_j = c_{2N+n-j}`.
    pub fn symbolic(data: &BkmData, big_n: usize) -> CForm {
        let dm = data.deg_m();
        let r = SpectralPoly::new((0..dm).map(|j| RationalExpr::var(Var::c(2 * big_n + data.n - j))).collect());
        CForm { big_n, d: (1..=big_n).map(|i| RationalExpr::var(Var::d(i))).collect(), r }
    }

    pub fn with_tail(data: &BkmData, big_n: usize, r_low_to_high: Vec<RationalExpr>) -> Result<CForm> {
        let r = SpectralPoly::new(r_low_to_high);
        if r.degree().is_some_and(|d| d >= data.deg_m()) {
            return Err(Error::Config("deg r must be below deg m".into()));
        }
        Ok(CForm { big_n, d: (1..=big_n).map(|i| RationalExpr::var(Var::d(i))).collect(), r })
    }

    pub fn d_poly(&self) -> SpectralPoly {
        SpectralPoly::from_high(self.d.clone())
    }

    pub fn assemble(&self, data: &BkmData) -> SpectralPoly {
        SpectralPoly::monomial(2 * self.big_n + data.n).add(&data.m.mul(&self.d_poly())).add(&self.r)
    }
}

/// Coordinates on the phase space: the standard chart `(w, p)` or the
/// chart `(v, pv)` centered at a finite root `s` of `m`, in which
/// `sigma_w(mu) = (mu - s)^N + sum v_i (mu - s)^{N-i}`.
#[derive(Clone, Debug, PartialEq)]
pub enum Chart {
    Standard,
    Shifted(RationalExpr),
}

#[derive(Clone, Debug)]
pub struct StackelSystem {
    pub data: BkmData,
    pub cform: CForm,
    pub chart: Chart,
    coords: Vec<Var>,
    moms: Vec<Var>,
    pub mat: PolyMatrix,
    pub g_inv: PolyMatrix,
    kinetic: Vec<RationalExpr>,
    potential: Vec<RationalExpr>,
    eom: Vec<RationalExpr>,
}

/// Companion matrix: first column `-z_1..-z_N`, ones on the superdiagonal.
pub fn companion(z: &[Var]) -> PolyMatrix {
    let n = z.len();
    PolyMatrix::from_fn(n, n, |i, j| {
        if j == 0 {
            RationalExpr::var(z[i]).neg()
        } else if j == i + 1 {
            RationalExpr::one()
        } else {
            RationalExpr::zero()
        }
    })
}

/// Hankel-type inverse metric: entry `(i, j)` (1-based) is 0 for `i + j <= N`,
/// 1 for `i + j = N + 1` and `z_{i+j-N-1}` beyond.
pub fn inverse_metric(z: &[Var]) -> PolyMatrix {
    let n = z.len();
    PolyMatrix::from_fn(n, n, |i, j| {
        let s = i + j + 2;
        if s <= n {
            RationalExpr::zero()
        } else if s == n + 1 {
            RationalExpr::one()
        } else {
            RationalExpr::var(z[s - n - 2])
        }
    })
}

/// `K_1..K_N`, the coefficients of `mu^{N-i}` in
/// `1/2 g^{-1}(det(mu - M) (M^T - mu)^{-1} p, p) = -1/2 (adj(mu - M^T) p)^T g^{-1} p`.
pub fn kinetic_energies(z: &[Var], pz: &[Var]) -> Vec<RationalExpr> {
    let n = z.len();
    let a = companion(z).transpose();
    let g = inverse_metric(z);
    let p: Vec<RationalExpr> = pz.iter().map(|&v| RationalExpr::var(v)).collect();
    let gp = g.mul_vec(&p);
    let half = qr(-1, 2);
    let mut b = PolyMatrix::identity(n);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        if k > 0 {
            b = a.mul(&b).add(&PolyMatrix::identity(n).scale(&RationalExpr::var(z[k - 1])));
        }
        let bp = b.mul_vec(&p);
        let dot = bp.iter().zip(&gp).fold(RationalExpr::zero(), |acc, (x, y)| acc.add(&x.mul(y)));
        out.push(dot.scale(&half));
    }
    out
}

/// `v_{i,k}` for `1 <= i <= N`, `0 <= k <= kmax`: the coefficients of
/// `mu^k mod sigma_w = sum_i v_{i,k} mu^{N-i}`, via the recursion
/// `v_{i,k+1} = v_{i+1,k} - v_{1,k} w_i`. Indexed `[k][i-1]`.
pub fn v_table(big_n: usize, kmax: usize) -> Vec<Vec<MultiPoly>> {
    let w = |i: usize| MultiPoly::var(Var::w(i));
    let mut t: Vec<Vec<MultiPoly>> = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        let row = if k < big_n {
            (1..=big_n).map(|i| if i == big_n - k { MultiPoly::one() } else { MultiPoly::zero() }).collect()
        } else {
            let prev = &t[k - 1];
            (1..=big_n)
                .map(|i| {
                    let head = prev[0].mul(&w(i));
                    if i < big_n {
                        prev[i].sub(&head)
                    } else {
                        head.neg()
                    }
                })
                .collect()
        };
        t.push(row);
    }
    t
}

fn coords_of(chart: &Chart, big_n: usize) -> (Vec<Var>, Vec<Var>) {
    match chart {
        Chart::Standard => ((1..=big_n).map(Var::w).collect(), (1..=big_n).map(Var::p).collect()),
        Chart::Shifted(_) => ((1..=big_n).map(Var::v).collect(), (1..=big_n).map(Var::pv).collect()),
    }
}

/// Potentials `V_1..V_N` without the constants `d_i`: the coefficients of
/// `((mu^{2N+n} + r) / m) mod sigma` in `z`-coordinates, where `sigma` is the
/// characteristic polynomial in `nu = mu - shift`, re-expanded in `mu`.
fn potentials_in(data: &BkmData, cform: &CForm, z: &[Var], shift: &RationalExpr) -> Result<Vec<RationalExpr>> {
    let big_n = z.len();
    let sigma = SpectralPoly::monic(&z.iter().map(|&v| RationalExpr::var(v)).collect::<Vec<_>>());
    let numer = SpectralPoly::monomial(2 * big_n + data.n).add(&cform.r).translate(shift);
    let m = data.m.translate(shift);
    let reduced = numer.quotient_reduce(&sigma);
    let f = match m.degree() {
        Some(0) => {
            let inv = m.coeff(0).inv().ok_or_else(|| Error::Config("m vanishes".into()))?;
            reduced.scale(&inv)
        }
        _ => reduced.quotient_mul(&m.quotient_invert(&sigma)?, &sigma),
    };
    let f = f.translate(&shift.neg());
    Ok((1..=big_n).map(|i| f.coeff(big_n - i)).collect())
}

impl StackelSystem {
    pub fn new(data: BkmData, cform: CForm) -> Result<StackelSystem> {
        StackelSystem::build(data, cform, Chart::Standard)
    }

    /// The same system written in the chart centered at the root of a linear `m`.
    pub fn shifted(data: BkmData, cform: CForm) -> Result<StackelSystem> {
        let s = data.m_root().ok_or_else(|| Error::Config("shifted chart needs deg m = 1".into()))?;
        StackelSystem::build(data, cform, Chart::Shifted(s))
    }

    pub fn build(data: BkmData, cform: CForm, chart: Chart) -> Result<StackelSystem> {
        let big_n = cform.big_n;
        if big_n == 0 {
            return Err(Error::Config("N must be at least 1".into()));
        }
        if cform.d.len() != big_n {
            return Err(Error::Config(format!("expected {big_n} level constants, got {}", cform.d.len())));
        }
        let (coords, moms) = coords_of(&chart, big_n);
        let shift = match &chart {
            Chart::Standard => RationalExpr::zero(),
            Chart::Shifted(s) => s.clone(),
        };
        let mut mat = companion(&coords);
        let g_inv = inverse_metric(&coords);
        let mut kinetic = kinetic_energies(&coords, &moms);
        if !shift.is_zero() {
            mat = mat.add(&PolyMatrix::identity(big_n).scale(&shift));
            let k_nu = SpectralPoly::from_high(kinetic);
            let k_mu = k_nu.translate(&shift.neg());
            kinetic = (1..=big_n).map(|i| k_mu.coeff(big_n - i)).collect();
        }
        let potential = potentials_in(&data, &cform, &coords, &shift)?;
        let mut sys = StackelSystem { data, cform, chart, coords, moms, mat, g_inv, kinetic, potential, eom: Vec::new() };
        sys.eom = sys.flow(1);
        Ok(sys)
    }

    /// Symbolic `d`, symbolic tail.
    pub fn symbolic(data: BkmData, big_n: usize) -> Result<StackelSystem> {
        let cform = CForm::symbolic(&data, big_n);
        StackelSystem::new(data, cform)
    }

    pub fn big_n(&self) -> usize {
        self.cform.big_n
    }

    pub fn n(&self) -> usize {
        self.data.n
    }

    pub fn coords(&self) -> &[Var] {
        &self.coords
    }

    pub fn moms(&self) -> &[Var] {
        &self.moms
    }

    /// Coordinates followed by momenta.
    pub fn phase_vars(&self) -> Vec<Var> {
        self.coords.iter().chain(self.moms.iter()).copied().collect()
    }

    pub fn coord(&self, i: usize) -> Var {
        self.coords[i - 1]
    }

    pub fn mom(&self, i: usize) -> Var {
        self.moms[i - 1]
    }

    pub fn kinetic(&self, i: usize) -> &RationalExpr {
        &self.kinetic[i - 1]
    }

    /// `V_i` without `d_i`.
    pub fn potential_tilde(&self, i: usize) -> &RationalExpr {
        &self.potential[i - 1]
    }

    pub fn potential(&self, i: usize) -> RationalExpr {
        self.potential[i - 1].add(&self.cform.d[i - 1])
    }

    /// `H~_i = K_i + V_i` without the constant `d_i`.
    pub fn hamiltonian_tilde(&self, i: usize) -> RationalExpr {
        self.kinetic[i - 1].add(&self.potential[i - 1])
    }

    pub fn hamiltonian(&self, i: usize) -> RationalExpr {
        self.hamiltonian_tilde(i).add(&self.cform.d[i - 1])
    }

    pub fn c_poly(&self) -> SpectralPoly {
        self.cform.assemble(&self.data)
    }

    /// Right-hand sides of the flow of `H_k`: `dz_i = dH/dp_i`, `dp_i = -dH/dz_i`,
    /// coordinates first.
    pub fn flow(&self, k: usize) -> Vec<RationalExpr> {
        let h = self.hamiltonian_tilde(k);
        let mut out: Vec<RationalExpr> = self.moms.iter().map(|&p| h.derivative(p)).collect();
        out.extend(self.coords.iter().map(|&z| h.derivative(z).neg()));
        out
    }

    /// Equations of motion of `H_1`, coordinates first.
    pub fn eom(&self) -> &[RationalExpr] {
        &self.eom
    }

    pub fn phase_index(&self, v: Var) -> Option<usize> {
        let n = self.big_n();
        self.coords.iter().position(|&c| c == v).or_else(|| self.moms.iter().position(|&p| p == v).map(|i| i + n))
    }

    /// `(v)_x` for a phase variable.
    pub fn eom_rhs(&self, v: Var) -> Option<&RationalExpr> {
        self.phase_index(v).map(|i| &self.eom[i])
    }

    pub fn poisson_bracket(&self, f: &RationalExpr, g: &RationalExpr) -> RationalExpr {
        let mut acc = RationalExpr::zero();
        for (&z, &p) in self.coords.iter().zip(&self.moms) {
            let t = f.derivative(z).mul(&g.derivative(p)).sub(&f.derivative(p).mul(&g.derivative(z)));
            acc = acc.add(&t);
        }
        acc
    }

    /// `d_i = -H~_i(z0, p0)`, so that every `H_i` vanishes at the point.
    pub fn place_on_zero_level(&self, z0: &[Q], p0: &[Q]) -> Result<Vec<Q>> {
        let point = self.point_map(z0, p0)?;
        (1..=self.big_n())
            .map(|i| {
                let h = self.hamiltonian_tilde(i);
                h.eval(&|v| point(v))
                    .map(|x| -x)
                    .ok_or_else(|| Error::Math(format!("H_{i} is singular or not fully specified at the point")))
            })
            .collect()
    }

    /// Float version of [`place_on_zero_level`](Self::place_on_zero_level).
    pub fn place_on_zero_level_f64(&self, z0: &[f64], p0: &[f64], consts: &dyn Fn(Var) -> f64) -> Vec<f64> {
        let vals = self.value_fn_f64(z0, p0, consts);
        (1..=self.big_n()).map(|i| -self.hamiltonian_tilde(i).eval_f64(&vals)).collect()
    }

    pub fn value_fn_f64<'a>(&'a self, z0: &'a [f64], p0: &'a [f64], consts: &'a dyn Fn(Var) -> f64) -> impl Fn(Var) -> f64 + 'a {
        move |v| match self.phase_index(v) {
            Some(i) if i < self.big_n() => z0[i],
            Some(i) => p0[i - self.big_n()],
            None => consts(v),
        }
    }

    fn point_map(&self, z0: &[Q], p0: &[Q]) -> Result<impl Fn(Var) -> Option<Q> + '_> {
        let n = self.big_n();
        if z0.len() != n || p0.len() != n {
            return Err(Error::Config(format!("expected {n} coordinates and {n} momenta")));
        }
        let z0 = z0.to_vec();
        let p0 = p0.to_vec();
        Ok(move |v: Var| self.phase_index(v).map(|i| if i < n { z0[i].clone() } else { p0[i - n].clone() }))
    }

    /// Replace the level constants.
    pub fn with_d(&self, d: &[RationalExpr]) -> StackelSystem {
        let mut s = self.clone();
        s.cform.d = d.to_vec();
        s
    }

    /// Substitute values for constants such as `c_j` in every expression.
    pub fn specialize(&self, vals: &dyn Fn(Var) -> Option<Q>) -> Result<StackelSystem> {
        let ev = |e: &RationalExpr| e.eval_partial(vals).ok_or_else(|| Error::Math("singular specialization".into()));
        let mut s = self.clone();
        s.kinetic = self.kinetic.iter().map(ev).collect::<Result<_>>()?;
        s.potential = self.potential.iter().map(ev).collect::<Result<_>>()?;
        s.eom = self.eom.iter().map(ev).collect::<Result<_>>()?;
        s.cform.d = self.cform.d.iter().map(ev).collect::<Result<_>>()?;
        s.cform.r = SpectralPoly::new(self.cform.r.coeffs().iter().map(ev).collect::<Result<_>>()?);
        Ok(s)
    }

    /// The grading in the two homogeneous cases (`m` constant, or `m = mu`).
    pub fn grading(&self) -> Option<GradingScheme> {
        let big_n = self.big_n();
        match self.data.deg_m() {
            0 => Some(GradingScheme::constant_m(big_n, self.n())),
            1 if self.data.m.coeff(0).is_zero() && self.data.m.coeff(1).as_constant().is_some_and(|c| c.is_one()) && self.n() == 1 => {
                Some(GradingScheme::linear_m(big_n))
            }
            _ => None,
        }
    }

    /// A string identifying the system, for memo keys.
    pub fn fingerprint(&self) -> String {
        format!(
            "n={};m={};N={};r={};chart={:?};eom={:?}",
            self.n(),
            self.data.m,
            self.big_n(),
            self.cform.r,
            self.chart,
            self.eom.iter().map(|e| e.to_string().len()).collect::<Vec<_>>()
        )
    }

    /// Deterministic text dump of `H_1..H_N`.
    pub fn dump_hamiltonians(&self) -> String {
        let mut s = String::new();
        for i in 1..=self.big_n() {
            s.push_str(&format!("H{i} = {}\n", self.hamiltonian(i)));
        }
        s
    }
}

/// JSON system descriptor. Unknown keys are rejected.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDescriptor {
    pub n: usize,
    /// `m_n .. m_0`.
    pub m: Vec<String>,
    #[serde(default = "default_lambda")]
    pub lambda: String,
    /// Gap number; may be left out and supplied later.
    #[serde(rename = "N", default)]
    pub big_n: Option<usize>,
    /// Coefficients of `r`, highest degree first.
    #[serde(default)]
    pub c_tail: Option<Vec<String>>,
    #[serde(default)]
    pub d: Option<serde_json::Value>,
}

fn default_lambda() -> String {
    "inf".to_string()
}

fn parse_expr(s: &str) -> Result<RationalExpr> {
    RationalExpr::parse(s).ok_or_else(|| Error::Config(format!("cannot parse expression '{s}'")))
}

impl SystemDescriptor {
    pub fn from_json(s: &str) -> Result<SystemDescriptor> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("bad system descriptor: {e}")))
    }

    pub fn build(&self) -> Result<StackelSystem> {
        let big_n = self.big_n.ok_or_else(|| Error::Config("the gap number N is not set".into()))?;
        if big_n == 0 {
            return Err(Error::Config("N must be at least 1".into()));
        }
        if self.m.len() != self.n + 1 {
            return Err(Error::Config(format!("m needs n+1 = {} coefficients", self.n + 1)));
        }
        let m = SpectralPoly::from_high(self.m.iter().map(|s| parse_expr(s)).collect::<Result<_>>()?);
        let lambda = match self.lambda.trim() {
            "inf" | "infinity" => Lambda::Infinity,
            s => Lambda::Finite(crate::algebra::rational::parse_q(s).ok_or_else(|| Error::Config(format!("bad lambda '{s}'")))?),
        };
        let data = BkmData::new(self.n, m, lambda)?;
        let mut cform = match &self.c_tail {
            Some(t) => {
                let mut r: Vec<RationalExpr> = t.iter().map(|s| parse_expr(s)).collect::<Result<_>>()?;
                r.reverse();
                CForm::with_tail(&data, big_n, r)?
            }
            None => CForm::symbolic(&data, big_n),
        };
        match &self.d {
            None => {}
            Some(serde_json::Value::String(s)) if s == "symbolic" => {}
            Some(serde_json::Value::Array(vals)) => {
                if vals.len() != big_n {
                    return Err(Error::Config(format!("d needs {} values", big_n)));
                }
                cform.d = vals
                    .iter()
                    .map(|v| match v {
                        serde_json::Value::String(s) => parse_expr(s),
                        serde_json::Value::Number(x) => parse_expr(&x.to_string()),
                        _ => Err(Error::Config("d values must be strings or numbers".into())),
                    })
                    .collect::<Result<_>>()?;
            }
            Some(_) => return Err(Error::Config("d must be \"symbolic\" or a list".into())),
        }
        StackelSystem::new(data, cform)
    }
}

/// Named presets: `kdv`, `kb`, `ch`.
pub fn preset(name: &str, big_n: usize) -> Result<StackelSystem> {
    let data = match name {
        "kdv" => BkmData::constant(1),
        "kb" => BkmData::constant(2),
        "ch" => BkmData::camassa_holm(),
        _ => return Err(Error::Config(format!("unknown system '{name}' (expected kdv, kb, ch or a JSON file)"))),
    };
    StackelSystem::symbolic(data, big_n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::q;

    fn r(s: &str) -> RationalExpr {
        RationalExpr::parse(s).unwrap()
    }

    #[test]
    fn companion_and_metric_shapes() {
        let w: Vec<Var> = (1..=2).map(Var::w).collect();
        assert_eq!(companion(&w), PolyMatrix::from_fn(2, 2, |i, j| [[r("-w1"), r("1")], [r("-w2"), r("0")]][i][j].clone()));
        assert_eq!(inverse_metric(&w), PolyMatrix::from_fn(2, 2, |i, j| [[r("0"), r("1")], [r("1"), r("w1")]][i][j].clone()));
        let w5: Vec<Var> = (1..=5).map(Var::w).collect();
        let g = inverse_metric(&w5);
        let last: Vec<String> = (0..5).map(|j| g.get(4, j).to_string()).collect();
        assert_eq!(last, vec!["1", "w1", "w2", "w3", "w4"]);
        for n in 1..=4 {
            let w: Vec<Var> = (1..=n).map(Var::w).collect();
            let expect = SpectralPoly::monic(&w.iter().map(|&v| RationalExpr::var(v)).collect::<Vec<_>>());
            let mu = RationalExpr::var(Var::lambda());
            let det = PolyMatrix::identity(n).scale(&mu).sub(&companion(&w)).det();
            assert_eq!(det, expect.eval(&mu));
        }
    }

    #[test]
    fn kinetic_small_cases() {
        let k1 = kinetic_energies(&[Var::w(1)], &[Var::p(1)]);
        assert_eq!(k1[0], r("-1/2*p1^2"));
        let k2 = kinetic_energies(&[Var::w(1), Var::w(2)], &[Var::p(1), Var::p(2)]);
        assert_eq!(k2[0], r("-p1*p2 - 1/2*w1*p2^2"));
        assert_eq!(k2[1], r("-1/2*p1^2 - w1*p1*p2 - 1/2*w1^2*p2^2 + 1/2*w2*p2^2"));
    }

    /// `K_1 = -1/2 sum_{i=0}^{N-1} w_i sum_{l+k=N+1+i} p_l p_k`, `w_0 = 1`.
    #[test]
    fn kinetic_first_closed_form() {
        for n in 1..=5 {
            let w: Vec<Var> = (1..=n).map(Var::w).collect();
            let p: Vec<Var> = (1..=n).map(Var::p).collect();
            let k = kinetic_energies(&w, &p);
            let mut expect = MultiPoly::zero();
            for i in 0..n {
                let wi = if i == 0 { MultiPoly::one() } else { MultiPoly::var(Var::w(i)) };
                for l in 1..=n {
                    let kk = n + 1 + i;
                    if kk > l && kk - l >= 1 && kk - l <= n {
                        expect = expect.add(&wi.mul(&MultiPoly::var(Var::p(l))).mul(&MultiPoly::var(Var::p(kk - l))));
                    }
                }
            }
            assert_eq!(k[0], RationalExpr::poly(expect.scale(&qr(-1, 2))), "N = {n}");
        }
    }

    #[test]
    fn v_table_matches_reduction() {
        for n in 1..=4 {
            let w: Vec<RationalExpr> = (1..=n).map(|i| RationalExpr::var(Var::w(i))).collect();
            let sigma = SpectralPoly::monic(&w);
            let t = v_table(n, 3 * n);
            for (k, row) in t.iter().enumerate() {
                let red = SpectralPoly::monomial(k).quotient_reduce(&sigma);
                for i in 1..=n {
                    assert_eq!(red.coeff(n - i), RationalExpr::poly(row[i - 1].clone()));
                }
            }
        }
    }

    #[test]
    fn bkm_types() {
        assert_eq!(BkmData::constant(1).bkm_type(), BkmType::IV);
        assert_eq!(BkmData::camassa_holm().bkm_type(), BkmType::III);
        let mut d = BkmData::linear(q(1), q(3));
        d.lambda = Lambda::Finite(q(-3));
        assert_eq!(d.bkm_type(), BkmType::II);
        d.lambda = Lambda::Finite(q(0));
        assert_eq!(d.bkm_type(), BkmType::I);
    }

    #[test]
    fn kdv_n1_potential() {
        // f = mu^3 mod (mu + w1) = -w1^3
        let sys = StackelSystem::symbolic(BkmData::constant(1), 1).unwrap();
        assert_eq!(*sys.potential_tilde(1), r("-w1^3"));
        assert_eq!(sys.hamiltonian(1), r("-1/2*p1^2 - w1^3 + d1"));
    }

    #[test]
    fn ch_potential_has_fraction() {
        let sys = StackelSystem::symbolic(BkmData::camassa_holm(), 3).unwrap();
        let v1 = sys.potential_tilde(1);
        assert!(v1.is_poly());
        let p = v1.as_poly().unwrap();
        // quadratic part sum_{a+b=N+1} w_a w_b
        let quad = p.filter(|m| m.degree() == 2);
        assert_eq!(quad, MultiPoly::parse("2*w1*w3 + w2^2").unwrap());
        assert!(p.contains(Var::c(7)));
    }

    #[test]
    fn brackets_vanish_small() {
        for data in [BkmData::constant(1), BkmData::camassa_holm()] {
            let sys = StackelSystem::symbolic(data, 2).unwrap();
            assert!(sys.poisson_bracket(&sys.hamiltonian(1), &sys.hamiltonian(2)).is_zero());
        }
        let sys = StackelSystem::symbolic(BkmData::constant(1), 2).unwrap();
        let w1 = RationalExpr::var(Var::w(1));
        assert_eq!(sys.poisson_bracket(&w1, &RationalExpr::var(Var::p(1))), RationalExpr::one());
        assert!(sys.poisson_bracket(&w1, &RationalExpr::var(Var::p(2))).is_zero());
    }

    #[test]
    fn zero_level() {
        let sys = StackelSystem::symbolic(BkmData::constant(1), 2).unwrap();
        let d = sys.place_on_zero_level(&[q(1), q(0)], &[q(0), q(1)]).unwrap();
        let s2 = sys.with_d(&d.iter().cloned().map(RationalExpr::constant).collect::<Vec<_>>());
        for i in 1..=2 {
            let h = s2.hamiltonian(i);
            let v = h.eval(&|v| match v {
                v if v == Var::w(1) => Some(q(1)),
                v if v == Var::p(2) => Some(q(1)),
                v if v.is_phase() => Some(q(0)),
                _ => None,
            });
            assert_eq!(v, Some(q(0)));
        }
        assert_eq!(sys.eom(), s2.eom());
    }

    #[test]
    fn descriptor_roundtrip() {
        let js = r#"{"n":1,"m":["1","0"],"lambda":"inf","N":3,"c_tail":["5"],"d":"symbolic"}"#;
        let sys = SystemDescriptor::from_json(js).unwrap().build().unwrap();
        assert_eq!(sys.c_poly().coeff(0), r("5"));
        assert!(SystemDescriptor::from_json(r#"{"n":1}"#).is_err());
        let bad = r#"{"n":1,"m":["1"],"N":3}"#;
        assert!(SystemDescriptor::from_json(bad).unwrap().build().is_err());
        assert!(SystemDescriptor::from_json(r#"{"n":1,"m":["0","1"],"N":3,"extra":1}"#).is_err());
        let mut open = SystemDescriptor::from_json(r#"{"n":1,"m":["0","1"]}"#).unwrap();
        assert!(open.build().is_err());
        open.big_n = Some(2);
        assert_eq!(open.build().unwrap().big_n(), 2);
    }
}
