//! Acceptance criteria, one PASS/FAIL line each.

mod common;

use finite_gap::algebra::rational::to_f64;
use finite_gap::algebra::{q, MultiPoly, PolyMatrix, RationalExpr, Var, VarKind, Q};
use finite_gap::combinat::{s_sequence, t_identity_holds, t_sequence};
use finite_gap::fixtures::{matching_position, tabulated_system};
use finite_gap::grading::Degree;
use finite_gap::jet_match::{jet_from_derivatives, match_ch_newton, match_deg_m0, match_linear_m, verify_match, NewtonOptions};
use finite_gap::jets::{jacobian_all0, linearize_chain, JetEngine, Linearization};
use finite_gap::odesim::{integrate_x, joint_flow, numeric_derivatives, pde_residual_with, Flow, IntegratorOptions, NumericSystem, PdeForm};
use finite_gap::reduction::v_coordinates;
use finite_gap::series::TruncatedSeries;
use finite_gap::stackel::{companion, preset, BkmData, StackelSystem};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn expr(s: &str) -> RationalExpr {
    RationalExpr::parse(s).unwrap_or_else(|| panic!("cannot parse {s}"))
}

fn poly(p: &MultiPoly) -> RationalExpr {
    RationalExpr::poly(p.clone())
}

/// `k (c_{2N+1}/w_N^2)^e`
fn ratio_pow(big_n: usize, e: usize, k: BigInt) -> RationalExpr {
    expr(&format!("c{}*w{}^-2", 2 * big_n + 1, big_n)).pow(e as i32).unwrap().scale(&Q::from_integer(k))
}

fn pow2(e: usize) -> BigInt {
    BigInt::one() << e
}

/// Printed Taylor rows of the constant-`m` tables with `n` components.
fn taylor_rows(n: usize) -> Check {
    let rows: Vec<Vec<String>> = common::load_records("constant_m_taylor.txt").into_iter().filter(|r| r[0] == n.to_string()).collect();
    let mut systems: Vec<(usize, StackelSystem)> = Vec::new();
    let mut count = 0;
    for r in &rows {
        let big_n: usize = r[1].parse().unwrap();
        if !systems.iter().any(|(k, _)| *k == big_n) {
            systems.push((big_n, tabulated_system(n, big_n).map_err(|e| e.to_string())?));
        }
        let sys = &systems.iter().find(|(k, _)| *k == big_n).unwrap().1;
        let v = Var::parse(&r[2]).unwrap();
        let order: usize = r[3].parse().unwrap();
        let printed = expr(&r[5]);
        let coeff = JetEngine::new(sys).taylor_coeffs(v, order).map_err(|e| e.to_string())?[order].clone();
        let tag = format!("N={big_n} {v} x^{order}");
        match r[4].as_str() {
            "exact" => ensure(coeff == printed, || format!("{tag}: computed {coeff}, printed {printed}"))?,
            _ => {
                let lead = printed.variables().into_iter().find(|v| v.is_phase()).unwrap();
                let rest = coeff.sub(&printed);
                ensure(rest.derivative(lead).is_zero(), || format!("{tag}: coefficient of {lead} differs"))?;
                for u in rest.variables().into_iter().filter(|u| u.is_phase()) {
                    ensure(matching_position(u, n, big_n) < matching_position(lead, n, big_n), || format!("{tag}: {u} in the remainder"))?;
                }
            }
        }
        count += 1;
    }
    Ok(format!("{count} printed coefficients"))
}

fn lead_coefficient(n: usize, big_n: usize, v: Var, order: usize, lead: Var) -> RationalExpr {
    let sys = tabulated_system(n, big_n).unwrap();
    JetEngine::new(&sys).taylor_coeffs(v, order).unwrap()[order].derivative(lead)
}

fn c1_kdv() -> Check {
    let summary = taylor_rows(1)?;
    let x5 = lead_coefficient(1, 6, Var::w(1), 5, Var::p(4));
    ensure(x5 == expr("-1/30"), || format!("x^5 coefficient of p4 is {x5}"))?;
    Ok(format!("{summary}; x^5 term -1/30 p4(0)"))
}

fn c2_kb() -> Check {
    let summary = taylor_rows(2)?;
    let a = lead_coefficient(2, 8, Var::w(1), 3, Var::p(6));
    let b = lead_coefficient(2, 8, Var::w(2), 3, Var::p(5));
    ensure(a == expr("-1/3") && b == expr("-1/3"), || format!("x^3 leads {a}, {b}"))?;
    Ok(format!("{summary}; x^3 terms -1/3 p6(0), -1/3 p5(0)"))
}

fn c3_ch_jacobian() -> Check {
    let sys = StackelSystem::symbolic(BkmData::camassa_holm(), 6).map_err(|e| e.to_string())?;
    let eng = JetEngine::new(&sys);
    let j = jacobian_all0(&eng).map_err(|e| e.to_string())?;
    let mut entries = 0;
    for (i, row) in common::load_matrix("ch_n6_jacobian.txt").iter().enumerate() {
        for (k, e) in row.iter().enumerate() {
            ensure(poly(&j[i][k]) == *e, || format!("Jacobian entry ({}, {})", i + 1, k + 1))?;
            entries += 1;
        }
    }
    ensure(poly(&j[9][0]) == expr("16*c13^5*w6^-10"), || "entry 16 c13^5/w6^10 missing".into())?;
    let cols: Vec<Var> = "p6 w1 p5 w2 p4 w3 p3 w4 p2 w5 p1 w6".split(' ').map(|s| Var::parse(s).unwrap()).collect();
    for name in ["w1", "w2", "w3", "w4", "w5", "p6", "p5", "p4", "p3", "p2"] {
        let lin = linearize_chain(&eng, Var::parse(name).unwrap(), 10).map_err(|e| e.to_string())?;
        for (jj, row) in common::load_matrix(&format!("ch_n6_partials_{name}.txt")).iter().enumerate() {
            for (k, e) in row.iter().enumerate() {
                ensure(poly(&lin[jj + 1].partial(cols[k])) == *e, || format!("d({name})_{}x/d{}", jj + 1, cols[k]))?;
                entries += 1;
            }
        }
    }
    for (file, is_w) in [("ch_n6_w_all0.txt", true), ("ch_n6_p_all0.txt", false)] {
        for (i, row) in common::load_matrix(file).iter().enumerate() {
            let v = if is_w { Var::w(i + 1) } else { Var::p(6 - i) };
            let lin = linearize_chain(&eng, v, 10).map_err(|e| e.to_string())?;
            for (jj, e) in row.iter().enumerate() {
                ensure(poly(&lin[jj + 1].value) == *e, || format!("({v})_{}x at all-0", jj + 1))?;
                entries += 1;
            }
        }
    }
    let p2 = linearize_chain(&eng, Var::p(2), 9).map_err(|e| e.to_string())?;
    ensure(poly(&p2[9].value) == expr("-496*c13^5*w6^-10"), || "(p2)_9x is not -496 c13^5/w6^10".into())?;
    Ok(format!("{entries} entries in the Jacobian, the all-0 values and ten partial-derivative matrices"))
}

fn c4_anti_diagonal() -> Check {
    for big_n in 2..=6 {
        let sys = preset("ch", big_n).map_err(|e| e.to_string())?;
        let j = jacobian_all0(&JetEngine::new(&sys)).map_err(|e| e.to_string())?;
        for i in 1..=2 * big_n - 2 {
            let anti = 2 * big_n - 1 - i;
            let sign: i64 = if i % 2 == 0 { 1 } else { -1 };
            let expect = ratio_pow(big_n, i / 2, pow2((i - 1) / 2) * sign);
            ensure(poly(&j[i - 1][anti - 1]) == expect, || format!("N={big_n} ({i}, {anti})"))?;
            for col in 1..anti {
                ensure(j[i - 1][col - 1].is_zero(), || format!("N={big_n} ({i}, {col}) nonzero"))?;
            }
        }
    }
    Ok("N = 2..6".into())
}

fn c5_lemmas() -> Check {
    let t = t_sequence(10);
    let s = |l: usize| if l == 0 { BigInt::one() } else { pow2(l - 1) };
    let mut checks = 0usize;
    for nn in 2..=5 {
        let sys = preset("ch", nn).map_err(|e| e.to_string())?;
        let eng = JetEngine::new(&sys);
        let kmax = 2 * nn - 2;
        let chain = |v: Var| linearize_chain(&eng, v, kmax).map_err(|e| e.to_string());
        let w: Vec<Vec<Linearization>> = (1..=nn).map(|i| chain(Var::w(i))).collect::<Result<_, _>>()?;
        let p: Vec<Vec<Linearization>> = (1..=nn).map(|i| chain(Var::p(nn + 1 - i))).collect::<Result<_, _>>()?;
        for i in 1..=nn {
            for j in 0..=kmax {
                let tag = format!("N={nn} i={i} j={j}");
                if i < nn && j < 2 * i {
                    ensure(w[i - 1][j].value.is_zero(), || format!("(w_i)_jx vanishing {tag}"))?;
                }
                if i < nn && j < 2 * i - 1 {
                    ensure(p[i - 1][j].value.is_zero(), || format!("(p_N+1-i)_jx vanishing {tag}"))?;
                }
                if i < nn && j == 2 * i {
                    ensure(poly(&w[i - 1][j].value) == ratio_pow(nn, i, pow2(i - 1)), || format!("(w_i)_2ix {tag}"))?;
                }
                if i < nn && j == 2 * i - 1 {
                    let sign = if i % 2 == 0 { 1 } else { -1 };
                    ensure(poly(&p[i - 1][j].value) == ratio_pow(nn, i, t[i - 1].clone() * sign), || format!("(p)_(2i-1)x {tag}"))?;
                }
                checks += 1;
                for k in 1..=nn {
                    let (wk, pk) = (Var::w(k), Var::p(nn + 1 - k));
                    let (lw, lp) = (&w[i - 1][j], &p[i - 1][j]);
                    let tag = format!("{tag} k={k}");
                    if 2 * i > 2 * k + j {
                        for v in [wk, pk] {
                            ensure(lw.partial(v).is_zero() && lp.partial(v).is_zero(), || format!("partial vanishing {tag} {v}"))?;
                        }
                    }
                    if 2 * i == 2 * k + j {
                        let h = j / 2;
                        let sign = if h % 2 == 0 { 1 } else { -1 };
                        ensure(poly(&lw.partial(wk)) == ratio_pow(nn, h, s(h)), || format!("dw/dw {tag}"))?;
                        ensure(lw.partial(pk).is_zero() && lp.partial(wk).is_zero(), || format!("cross partials {tag}"))?;
                        ensure(poly(&lp.partial(pk)) == ratio_pow(nn, h, t[h].clone() * sign), || format!("dp/dp {tag}"))?;
                    }
                    if j >= 1 && 2 * i + 1 == 2 * k + j {
                        ensure(poly(&lw.partial(pk)) == ratio_pow(nn, i - k, -pow2(i - k)), || format!("dw/dp {tag}"))?;
                    }
                    checks += 1;
                }
            }
        }
    }
    Ok(format!("N = 2..5, {checks} (i, j, k) cases"))
}

/// Taylor coefficients of tan from `y' = 1 + y^2`.
fn tan_coeffs(k: usize) -> Vec<Q> {
    let mut a = vec![Q::zero(); k + 1];
    for m in 0..k {
        let mut rhs = if m == 0 { Q::one() } else { Q::zero() };
        for j in 0..=m {
            rhs += &a[j] * &a[m - j];
        }
        a[m + 1] = rhs / Q::from_integer(BigInt::from(m + 1));
    }
    a
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, b| a * b)
}

fn c6_combinatorics() -> Check {
    let t = t_sequence(30);
    let first: Vec<BigInt> = [1, 1, 4, 34, 496].iter().map(|&x| BigInt::from(x)).collect();
    ensure(t[..5] == first[..], || format!("t_1..t_5 = {:?}", &t[..5]))?;
    ensure(t_identity_holds(15), || "second recursion fails".into())?;
    let tan = tan_coeffs(30);
    for i in 1..=15 {
        let expect = &tan[2 * i - 1] * Q::from_integer(factorial(2 * i - 1)) / Q::from_integer(pow2(i - 1));
        ensure(Q::from_integer(t[i - 1].clone()) == expect, || format!("tan series at t_{i}"))?;
    }
    // halving in the t-recursion is exact for i <= 30
    for i in 2..=30 {
        let sum: BigInt = (1..i).map(|j| binom(2 * i - 2, 2 * j - 1) * &t[j - 1] * &t[i - j - 1]).sum();
        ensure((&sum % 2u32).is_zero(), || format!("odd sum at t_{i}"))?;
    }
    let s = s_sequence(15);
    for (i, v) in s.iter().enumerate() {
        ensure(*v == pow2(i), || format!("s_{} = {v}", i + 1))?;
    }
    // sum s_n 2^n x^{2n}/(2n)! = (cosh 2x + 1)/2 through x^10
    for nn in 1..=5 {
        let s_n = s[nn - 1].clone();
        let lhs = Q::new(s_n * pow2(nn), factorial(2 * nn));
        let rhs = Q::new(pow2(2 * nn), factorial(2 * nn)) / Q::from_integer(BigInt::from(2));
        ensure(lhs == rhs, || format!("generating function at x^{}", 2 * nn))?;
    }
    Ok("t, s through 15; exact halving through 30".into())
}

fn binom(n: usize, k: usize) -> BigInt {
    factorial(n) / (factorial(k) * factorial(n - k))
}

fn c7_commutation() -> Check {
    let cases = [BkmData::constant(1), BkmData::constant(2), BkmData::camassa_holm(), BkmData::linear(q(2), q(3))];
    let mut pairs = 0;
    for data in cases {
        for big_n in 2..=3 {
            let sys = StackelSystem::symbolic(data.clone(), big_n).map_err(|e| e.to_string())?;
            for i in 1..=big_n {
                for j in i + 1..=big_n {
                    let b = sys.poisson_bracket(&sys.hamiltonian(i), &sys.hamiltonian(j));
                    ensure(b.is_zero(), || format!("m = {}, N={big_n}: {{H{i}, H{j}}} = {b}", data.m))?;
                    pairs += 1;
                }
            }
        }
    }
    Ok(format!("{pairs} brackets vanish (m = 1 with n = 1, 2; m = mu; m = 2 mu + 3)"))
}

fn c8_grading() -> Check {
    let mut entries = 0;
    for name in ["kdv", "kb", "ch"] {
        for big_n in 1..=5 {
            let sys = preset(name, big_n).map_err(|e| e.to_string())?;
            let g = sys.grading().ok_or("no grading")?;
            let eng = JetEngine::new(&sys);
            for v in sys.phase_vars() {
                let Degree::Homogeneous(d0) = g.degree(&RationalExpr::var(v)) else { return Err(format!("{v} has no degree")) };
                for k in 0..=8 {
                    let e = eng.component(v, k).map_err(|e| e.to_string())?;
                    match g.degree(&e) {
                        Degree::Any => {}
                        Degree::Homogeneous(d) => ensure(d == g.derivative_degree(&d0, k), || format!("{name} N={big_n} ({v})_{k}x has degree {d}"))?,
                        Degree::Inhomogeneous(a, b) => return Err(format!("{name} N={big_n} ({v})_{k}x mixes {a} and {b}")),
                    }
                    entries += 1;
                }
            }
        }
    }
    Ok(format!("{entries} jet components, N <= 5, order <= 8"))
}

fn c9_exact_matching() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20240901);
    let mut max_n = 0;
    for case in 0..200 {
        let n = rng.random_range(1..=3usize);
        let k = rng.random_range(0..=7usize);
        let target: Vec<TruncatedSeries<Q>> = (0..n)
            .map(|_| TruncatedSeries::new((0..=k).map(|_| Q::new(rng.random_range(-20i64..=20).into(), rng.random_range(1i64..=9).into())).collect()))
            .collect();
        let res = match_deg_m0(n, &q(1), &target, None).map_err(|e| format!("case {case}: {e}"))?;
        max_n = max_n.max(res.big_n);
        let rep = verify_match(&res, &target).map_err(|e| e.to_string())?;
        ensure(rep.max_deviation == 0.0 && rep.level_residual == 0.0, || format!("case {case} (n={n}, k={k}): deviation {}", rep.max_deviation))?;
    }
    Ok(format!("200 targets, n in 1..3, k <= 7, largest N = {max_n}, all residuals exactly 0"))
}

fn c10_ch_newton() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_it, mut worst_res, mut worst_dev, mut count) = (0, 0.0f64, 0.0f64, 0);
    for k in 1..=8 {
        for u0 in [1.0, -1.0, 10.0, -10.0] {
            for _ in 0..2 {
                let d: Vec<f64> = (0..=k).map(|j| u0 * (if j == 0 { 1.0 } else { 0.0 } + rng.random_range(-0.01..=0.01))).collect();
                let target = jet_from_derivatives(&d);
                let res = match_ch_newton(&target, &NewtonOptions::default()).map_err(|e| format!("k={k} u0={u0}: {e}"))?;
                ensure(res.big_n <= 5, || format!("N = {}", res.big_n))?;
                let dev = verify_match(&res, &[target]).map_err(|e| e.to_string())?.max_deviation;
                worst_it = worst_it.max(res.iterations);
                worst_res = worst_res.max(res.residual);
                worst_dev = worst_dev.max(dev);
                count += 1;
            }
        }
    }
    ensure(worst_it <= 12 && worst_res <= 1e-9 && worst_dev <= 1e-8, || format!("iterations {worst_it}, residual {worst_res:e}, pushforward {worst_dev:e}"))?;
    Ok(format!("{count} targets, <= {worst_it} iterations, residual <= {worst_res:.1e}, pushforward deviation <= {worst_dev:.1e}"))
}

fn c11_linear_m() -> Check {
    let s = Q::new(BigInt::from(-3), BigInt::from(2));
    for big_n in 1..=4 {
        for root in [s.clone(), Q::new(BigInt::from(2), BigInt::from(5))] {
            let vc = v_coordinates(&root, big_n);
            let v: Vec<Var> = (1..=big_n).map(Var::v).collect();
            let expect = companion(&v).add(&PolyMatrix::identity(big_n).scale(&RationalExpr::constant(root.clone())));
            ensure(vc.transformed_operator() == expect, || format!("M_v, N={big_n}, root {root}"))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    let mut count = 0;
    for k in 1..=6 {
        for u0 in [5.0, -4.0] {
            let d: Vec<f64> = (0..=k).map(|j| u0 * (if j == 0 { 1.0 } else { 0.0 } + rng.random_range(-0.01..=0.01))).collect();
            let target = jet_from_derivatives(&d);
            let res = match_linear_m(&q(2), &q(3), &target, &NewtonOptions::default()).map_err(|e| format!("k={k} u0={u0}: {e}"))?;
            ensure(res.big_n <= 4, || format!("N = {}", res.big_n))?;
            let (vz, _) = res.shifted.clone().ok_or("no shifted chart")?;
            let sys = res.system().map_err(|e| e.to_string())?;
            let num = NumericSystem::new(&sys, &|_| None).map_err(|e| e.to_string())?;
            let y0: Vec<f64> = res.w0.iter().chain(&res.p0).cloned().collect();
            let u1 = num.u(&y0)[0];
            // c(mu) expanded at the root: its constant term is c(s)
            let sf = to_f64(&s);
            let c_s = sf.powi(2 * res.big_n as i32 + 1) + to_f64(&res.c_tail[0]);
            let vn = vz[res.big_n - 1];
            let gap = (u1 - (c_s / (vn * vn) - sf)).abs();
            worst = worst.max(gap);
            ensure(gap <= 1e-10, || format!("k={k} u0={u0}: u1(0) relation off by {gap:e}"))?;
            ensure(verify_match(&res, &[target]).map_err(|e| e.to_string())?.max_deviation <= 1e-8, || format!("k={k} u0={u0}: jet"))?;
            count += 1;
        }
    }
    Ok(format!("M_v = companion(v) + s Id for N <= 4; {count} matches with u1(0) = c(s)/v_N(0)^2 - s to {worst:.1e} (s = -3/2 the root of m)"))
}

fn numeric(name: &str, big_n: usize, c: f64, y0: &[f64]) -> NumericSystem {
    let sys = preset(name, big_n).unwrap();
    let mut num = NumericSystem::new(&sys, &|v| (v.kind() == VarKind::C).then_some(c)).unwrap();
    num.set_zero_level(y0);
    num
}

fn c12_dynamics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut rel, mut abs_bounded, mut runs, mut bounded, mut length) = (0.0f64, 0.0f64, 0, 0, 0.0f64);
    for name in ["kdv", "kb", "ch"] {
        for big_n in 1..=6 {
            let y0: Vec<f64> = (0..2 * big_n)
                .map(|i| if name == "ch" && i == big_n - 1 { rng.random_range(0.5..1.5) } else { rng.random_range(-1.0..1.0) })
                .collect();
            let num = numeric(name, big_n, rng.random_range(0.5..1.5), &y0);
            let span = rng.random_range(1.0..10.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let tr = integrate_x(&num, &y0[..big_n], &y0[big_n..], (0.0, span), 1e-10, 1e-12).map_err(|e| e.to_string())?;
            rel = rel.max(tr.max_relative_drift());
            length += tr.last_valid_x.abs();
            runs += 1;
        }
    }
    // bounded orbits: small starts with N <= 2
    for (name, big_n) in [("kdv", 1), ("kdv", 2), ("kb", 1), ("kb", 2)] {
        for _ in 0..20 {
            let y0: Vec<f64> = (0..2 * big_n).map(|_| rng.random_range(-0.05..0.05)).collect();
            let num = numeric(name, big_n, rng.random_range(-1.5..1.5), &y0);
            let tr = integrate_x(&num, &y0[..big_n], &y0[big_n..], (0.0, 10.0), 1e-10, 1e-12).map_err(|e| e.to_string())?;
            if !tr.escaped() && tr.states.iter().flatten().all(|v| v.abs() <= 5.0) {
                abs_bounded = abs_bounded.max(tr.max_drift());
                bounded += 1;
            }
        }
    }
    ensure(bounded > 0, || "no bounded orbit found".into())?;
    ensure(rel <= 1e-8 && abs_bounded <= 1e-8, || format!("relative drift {rel:e}, absolute drift on bounded orbits {abs_bounded:e}"))?;

    let (mut jet_err, mut jet_at) = (0.0f64, String::new());
    for (name, big_n) in [("kdv", 3), ("kb", 4), ("ch", 3)] {
        let y0: Vec<f64> = (0..2 * big_n).map(|i| if name == "ch" && i == big_n - 1 { 0.9 } else { rng.random_range(-0.5..0.5) }).collect();
        let sys = preset(name, big_n).unwrap();
        let num = numeric(name, big_n, 0.8, &y0);
        let o = IntegratorOptions::with_tol(1e-13, 1e-15);
        let nd = numeric_derivatives(&num, Flow::X, &y0, 4, 0.2, &o, &|s| s.to_vec()).map_err(|e| e.to_string())?;
        let eng = JetEngine::new(&sys);
        let vals = |v: Var| sys.phase_index(v).map_or_else(|| if v.kind() == VarKind::C { 0.8 } else { num.d[v.index() - 1] }, |i| y0[i]);
        let mut fact = 1.0;
        for k in 0..=4 {
            if k > 0 {
                fact *= k as f64;
            }
            for (i, &v) in sys.phase_vars().iter().enumerate() {
                let c = eng.taylor_coeffs(v, k).map_err(|e| e.to_string())?[k].eval_f64(&vals);
                let e = (nd[i][k] - fact * c).abs();
                if e > jet_err {
                    (jet_err, jet_at) = (e, format!("{name} N={big_n} ({v})_{k}x: numeric {}, symbolic {}", nd[i][k], fact * c));
                }
            }
        }
    }
    ensure(jet_err <= 1e-6, || format!("numeric vs symbolic jets differ by {jet_err:e} at {jet_at}"))?;

    let y0 = [0.3, 0.8, -0.1, -0.05];
    let mut ratios = Vec::new();
    for (name, form) in [("kdv", PdeForm::Kdv), ("ch", PdeForm::CamassaHolm)] {
        let num = numeric(name, 2, 1.3, &y0);
        let res: Vec<f64> = [33usize, 65, 129]
            .iter()
            .map(|&n| {
                let g: Vec<f64> = (0..n).map(|i| -0.4 + 0.8 * i as f64 / (n - 1) as f64).collect();
                let field = joint_flow(&num, &y0[..2], &y0[2..], &g, &g, 1e-13).unwrap();
                pde_residual_with(&field, &form).unwrap().evolution[0].max
            })
            .collect();
        for w in res.windows(2) {
            ratios.push((name, w[0] / w[1]));
        }
    }
    ensure(ratios.iter().all(|(_, r)| (3.0..=5.0).contains(r)), || format!("residual ratios {ratios:?}"))?;

    let target = TruncatedSeries::new(vec![q(1), q(0), q(-1), q(0)]);
    let res = match_deg_m0(1, &q(1), &[target], None).map_err(|e| e.to_string())?;
    let num = NumericSystem::new(&res.system().map_err(|e| e.to_string())?, &|_| None).map_err(|e| e.to_string())?;
    let y0: Vec<f64> = res.w0.iter().chain(&res.p0).map(to_f64).collect();
    let d = numeric_derivatives(&num, Flow::X, &y0, 3, 0.2, &IntegratorOptions::with_tol(1e-13, 1e-15), &|s| num.u(s)).map_err(|e| e.to_string())?;
    let coeffs: Vec<f64> = d[0].iter().enumerate().map(|(k, v)| v / [1.0, 1.0, 2.0, 6.0][k]).collect();
    let demo_err = coeffs.iter().zip([1.0, 0.0, -1.0, 0.0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(demo_err <= 1e-6, || format!("exp(-x^2) demo coefficients {coeffs:?}"))?;

    let r: Vec<String> = ratios.iter().map(|(n, r)| format!("{n} {r:.2}")).collect();
    Ok(format!(
        "relative drift <= {rel:.1e} over {runs} runs (total x-length {length:.1}), absolute {abs_bounded:.1e} on {bounded} bounded orbits; jets {jet_err:.1e}; ratios {}; demo {demo_err:.1e}",
        r.join(", ")
    ))
}

fn main() {
    let criteria: Vec<(&str, u64, fn() -> Check)> = vec![
        ("KdV Taylor tables N = 4, 5, 6", 10, c1_kdv),
        ("KB Taylor tables N = 6, 8", 30, c2_kb),
        ("CH Jacobian and partial-derivative matrices at N = 6", 300, c3_ch_jacobian),
        ("anti-diagonal law", 60, c4_anti_diagonal),
        ("all-0 lemma suite", 600, c5_lemmas),
        ("combinatorics", 1, c6_combinatorics),
        ("commutation of H_i", 120, c7_commutation),
        ("grading of Taylor entries", 300, c8_grading),
        ("exact jet matching", 300, c9_exact_matching),
        ("CH jet matching by Newton", 300, c10_ch_newton),
        ("general linear m", 300, c11_linear_m),
        ("dynamics", 120, c12_dynamics),
    ];
    let mut failed = 0;
    for (i, (title, budget, f)) in criteria.into_iter().enumerate() {
        let t0 = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let dt = t0.elapsed();
        let out = match out {
            Ok(d) if dt > Duration::from_secs(budget) => Err(format!("{d}; over the {budget} s budget")),
            o => o,
        };
        match out {
            Ok(d) => println!("PASS criterion {:>2}: {title}: {d} [{:.1} s]", i + 1, dt.as_secs_f64()),
            Err(e) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {title}: {e} [{:.1} s]", i + 1, dt.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
