//! Canonical text of the committed fixture files, regenerated from the
//! symbolic engine: Taylor tables for constant `m`, and the Camassa-Holm
//! all-0 Jacobian and boundary partial derivatives at `N = 6`.

use crate::algebra::{RationalExpr, Var, VarKind, Q};
use crate::error::{Error, Result};
use crate::jets::{jacobian_all0, linearize_chain, JetEngine};
use crate::stackel::{preset, BkmData, StackelSystem};
use num_traits::Zero;
use std::path::Path;

/// `(n, N, component, order, kind)` of every tabulated Taylor coefficient.
const TAYLOR_ROWS: &[(usize, usize, &str, usize, &str)] = &[
    (1, 4, "w1", 1, "exact"),
    (1, 4, "w1", 2, "exact"),
    (1, 4, "w1", 3, "exact"),
    (1, 5, "w1", 1, "exact"),
    (1, 5, "w1", 2, "exact"),
    (1, 5, "w1", 3, "exact"),
    (1, 5, "w1", 4, "exact"),
    (1, 6, "w1", 1, "exact"),
    (1, 6, "w1", 2, "lead"),
    (1, 6, "w1", 3, "lead"),
    (1, 6, "w1", 4, "lead"),
    (1, 6, "w1", 5, "lead"),
    (2, 6, "w1", 1, "exact"),
    (2, 6, "w1", 2, "lead"),
    (2, 6, "w2", 1, "exact"),
    (2, 6, "w2", 2, "lead"),
    (2, 8, "w1", 1, "exact"),
    (2, 8, "w1", 2, "lead"),
    (2, 8, "w1", 3, "lead"),
    (2, 8, "w2", 1, "exact"),
    (2, 8, "w2", 2, "lead"),
    (2, 8, "w2", 3, "lead"),
];

const TAYLOR_HEADER: &str = "\
# Taylor coefficients of w_i(x) at x = 0 for m = 1.
# n ; N ; component ; order ; kind ; expression
# kind \"exact\": the coefficient equals the expression.
# kind \"lead\": the coefficient is the expression plus terms in variables that
# precede the expression's variable in the matching order.
# The first-order coefficient of w1 is -p_N for every system (dH_1/dp_1 = -p_N).
";

const CH_N: usize = 6;
const CH_ORDER: usize = 10;
const PARTIAL_COLUMNS: &str = "p6 w1 p5 w2 p4 w3 p3 w4 p2 w5 p1 w6";
const PARTIAL_ROWS: [&str; 10] = ["w1", "w2", "w3", "w4", "w5", "p6", "p5", "p4", "p3", "p2"];

/// Names of all fixture files, in a fixed order.
pub fn names() -> Vec<String> {
    let mut v = vec!["constant_m_taylor.txt".to_string(), "ch_n6_jacobian.txt".into(), "ch_n6_w_all0.txt".into(), "ch_n6_p_all0.txt".into()];
    v.extend(PARTIAL_ROWS.iter().map(|r| format!("ch_n6_partials_{r}.txt")));
    v
}

/// Position of a phase variable in the matching order
/// `w_1..w_n, p_N..p_{N-n+1}, w_{n+1}..w_{2n}, ...`.
pub fn matching_position(v: Var, n: usize, big_n: usize) -> (usize, usize) {
    match v.kind() {
        VarKind::W => (2 * ((v.index() - 1) / n), (v.index() - 1) % n),
        VarKind::P => {
            let i = big_n + 1 - v.index();
            (2 * ((i - 1) / n) + 1, (i - 1) % n)
        }
        _ => (0, 0),
    }
}

/// KdV (`n = 1`) or Kaup-Boussinesq (`n = 2`) with `c_2..c_N = 0`.
pub fn tabulated_system(n: usize, big_n: usize) -> Result<StackelSystem> {
    preset(if n == 1 { "kdv" } else { "kb" }, big_n)?.specialize(&|v| (v.kind() == VarKind::C && (2..=big_n).contains(&v.index())).then(Q::zero))
}

/// The term of `e` in its latest variable in the matching order, which must
/// enter linearly.
fn lead_term(e: &RationalExpr, n: usize, big_n: usize) -> Result<RationalExpr> {
    let lead = e
        .variables()
        .into_iter()
        .filter(|v| v.is_phase())
        .max_by_key(|&v| matching_position(v, n, big_n))
        .ok_or_else(|| Error::Math("coefficient has no phase variable".into()))?;
    let coeff = e.derivative(lead);
    if coeff.variables().iter().any(|v| v.is_phase()) {
        return Err(Error::Math(format!("{lead} does not enter linearly")));
    }
    Ok(coeff.mul(&RationalExpr::var(lead)))
}

fn taylor_table() -> Result<String> {
    let mut out = TAYLOR_HEADER.to_string();
    let mut cache: Vec<((usize, usize), StackelSystem)> = Vec::new();
    for &(n, big_n, comp, order, kind) in TAYLOR_ROWS {
        if !cache.iter().any(|(k, _)| *k == (n, big_n)) {
            cache.push(((n, big_n), tabulated_system(n, big_n)?));
        }
        let sys = &cache.iter().find(|(k, _)| *k == (n, big_n)).unwrap().1;
        let v = Var::parse(comp).ok_or_else(|| Error::Config(format!("bad component {comp}")))?;
        let coeff = JetEngine::new(sys).taylor_coeffs(v, order)?[order].clone();
        let shown = if kind == "exact" { coeff } else { lead_term(&coeff, n, big_n)? };
        out.push_str(&format!("{n} ; {big_n} ; {comp} ; {order} ; {kind} ; {shown}\n"));
    }
    Ok(out)
}

fn row(entries: impl Iterator<Item = RationalExpr>) -> String {
    entries.map(|e| e.to_string()).collect::<Vec<_>>().join(" ; ") + "\n"
}

fn ch_system() -> Result<StackelSystem> {
    StackelSystem::symbolic(BkmData::camassa_holm(), CH_N)
}

/// Render one fixture file.
pub fn render(name: &str) -> Result<String> {
    if name == "constant_m_taylor.txt" {
        return taylor_table();
    }
    let sys = ch_system()?;
    let eng = JetEngine::new(&sys);
    let cols: Vec<Var> = PARTIAL_COLUMNS.split(' ').filter_map(Var::parse).collect();
    match name {
        "ch_n6_jacobian.txt" => {
            let j = jacobian_all0(&eng)?;
            let mut out = "# rows: (w6)_{ix}, i = 1..10; columns: d/d w1 p5 w2 p4 w3 p3 w4 p2 w5 p1\n".to_string();
            for r in j {
                out.push_str(&row(r.into_iter().map(RationalExpr::poly)));
            }
            Ok(out)
        }
        "ch_n6_w_all0.txt" | "ch_n6_p_all0.txt" => {
            let is_w = name == "ch_n6_w_all0.txt";
            let mut out = if is_w {
                "# rows i = 1..5: (w_i)_{jx} at all-0; columns j = 1..10\n".to_string()
            } else {
                "# rows i = 1..5: (p_{N+1-i})_{jx} at all-0; columns j = 1..10\n".to_string()
            };
            for i in 1..CH_N {
                let v = if is_w { Var::w(i) } else { Var::p(CH_N + 1 - i) };
                let lin = linearize_chain(&eng, v, CH_ORDER)?;
                out.push_str(&row((1..=CH_ORDER).map(|j| RationalExpr::poly(lin[j].value.clone()))));
            }
            Ok(out)
        }
        _ => {
            let v = name
                .strip_prefix("ch_n6_partials_")
                .and_then(|s| s.strip_suffix(".txt"))
                .and_then(Var::parse)
                .ok_or_else(|| Error::Config(format!("unknown fixture {name}")))?;
            let lin = linearize_chain(&eng, v, CH_ORDER)?;
            let mut out = format!("# rows: ({v})_{{jx}}, j = 1..10; columns: d/d {PARTIAL_COLUMNS}\n");
            for l in &lin[1..=CH_ORDER] {
                out.push_str(&row(cols.iter().map(|&c| RationalExpr::poly(l.partial(c)))));
            }
            Ok(out)
        }
    }
}

/// Outcome of comparing one rendered fixture with the committed file.
#[derive(Clone, Debug)]
pub struct FixtureCheck {
    pub name: String,
    /// `None` when byte-identical; otherwise the first differing line.
    pub diff: Option<String>,
}

/// Render every fixture and diff it against `dir`; with `regenerate`,
/// overwrite the committed files instead.
pub fn check_all(dir: &Path, regenerate: bool) -> Result<Vec<FixtureCheck>> {
    let mut out = Vec::new();
    for name in names() {
        let text = render(&name)?;
        let path = dir.join(&name);
        if regenerate {
            std::fs::write(&path, &text)?;
            out.push(FixtureCheck { name, diff: None });
            continue;
        }
        let committed = std::fs::read_to_string(&path).unwrap_or_default();
        let diff = (committed != text).then(|| first_difference(&committed, &text));
        out.push(FixtureCheck { name, diff });
    }
    Ok(out)
}

fn first_difference(a: &str, b: &str) -> String {
    let (la, lb): (Vec<&str>, Vec<&str>) = (a.lines().collect(), b.lines().collect());
    for i in 0..la.len().max(lb.len()) {
        let (x, y) = (la.get(i).copied().unwrap_or("<eof>"), lb.get(i).copied().unwrap_or("<eof>"));
        if x != y {
            return format!("line {}: committed `{x}`, computed `{y}`", i + 1);
        }
    }
    "trailing newline".into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lead_terms() {
        let e = RationalExpr::parse("2/3*w1*p4 - 1/3*p3").unwrap();
        assert_eq!(lead_term(&e, 1, 4).unwrap(), RationalExpr::parse("-1/3*p3").unwrap());
        let e = RationalExpr::parse("w3^2 + p3").unwrap();
        assert!(lead_term(&e, 1, 4).is_err());
        assert!(matching_position(Var::p(6), 2, 6) < matching_position(Var::w(3), 2, 6));
    }
}
