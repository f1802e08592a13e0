//! Match `u(x) = exp(-x^2)` to order 3 at `x = 0` by a KdV finite-gap
//! solution, integrate it, and compare Taylor coefficients and profiles.

use finite_gap::algebra::{q, Q};
use finite_gap::jet_match::{match_deg_m0, verify_match};
use finite_gap::odesim::{numeric_derivatives, sample_flow, Flow, IntegratorOptions, NumericSystem};
use finite_gap::series::TruncatedSeries;

fn main() -> finite_gap::Result<()> {
    let target = TruncatedSeries::new(vec![q(1), q(0), q(-1), q(0)]);
    let res = match_deg_m0(1, &q(1), std::slice::from_ref(&target), None)?;
    println!("N = {}, w0 = {:?}, p0 = {:?}", res.big_n, text(&res.w0), text(&res.p0));
    println!("exact jet residual: {}", verify_match(&res, &[target])?.max_deviation);

    let sys = res.system()?;
    let num = NumericSystem::new(&sys, &|_| None)?;
    let y0: Vec<f64> = res.w0.iter().chain(&res.p0).map(finite_gap::algebra::rational::to_f64).collect();
    let o = IntegratorOptions::with_tol(1e-13, 1e-15);
    let d = numeric_derivatives(&num, Flow::X, &y0, 4, 0.2, &o, &|s| num.u(s))?;
    let mut fact = 1.0;
    print!("Taylor coefficients of the integrated u:");
    for (k, v) in d[0].iter().enumerate().take(4) {
        if k > 0 {
            fact *= k as f64;
        }
        print!(" {:.9}", v / fact);
    }
    println!();

    println!("{:>6} {:>14} {:>14}", "x", "u(x)", "exp(-x^2)");
    let xs: Vec<f64> = (-8..=8).map(|i| i as f64 * 0.1).collect();
    for (x, s) in xs.iter().zip(sample_flow(&num, Flow::X, &y0, &xs, &o)?) {
        match s {
            Some(s) => println!("{x:>6.2} {:>14.9} {:>14.9}", num.u(&s)[0], (-x * x).exp()),
            None => println!("{x:>6.2} {:>14} {:>14.9}", "escaped", (-x * x).exp()),
        }
    }
    Ok(())
}

fn text(v: &[Q]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}
