//! Newton matching for linear `m`: Camassa-Holm targets near constant jets,
//! and `m = 2 mu + 3`, where the solve runs in the chart centered at the
//! root of `m`.

use finite_gap::algebra::q;
use finite_gap::jet_match::{jet_from_derivatives, match_ch_newton, match_linear_m, verify_match, NewtonOptions};

fn main() -> finite_gap::Result<()> {
    for u0 in [1.0, -1.0, 10.0, -10.0] {
        let d: Vec<f64> = [1.0, 0.01, -0.008, 0.005, 0.003, -0.01].iter().enumerate().map(|(j, r)| if j == 0 { u0 } else { r * u0 }).collect();
        let target = jet_from_derivatives(&d);
        match match_ch_newton(&target, &NewtonOptions::default()) {
            Ok(res) => {
                let rep = verify_match(&res, &[target])?;
                println!(
                    "CH u0 = {u0:>5}: N = {}, seed {:?}, {} iterations, residuals {:?}, independent check {:.2e}",
                    res.big_n,
                    res.seed,
                    res.iterations,
                    res.residual_history.iter().map(|r| format!("{r:.1e}")).collect::<Vec<_>>(),
                    rep.max_deviation
                );
            }
            Err(e) => println!("CH u0 = {u0:>5}: {e}"),
        }
    }
    let target = jet_from_derivatives(&[5.0, 0.02, -0.03, 0.01]);
    let res = match_linear_m(&q(2), &q(3), &target, &NewtonOptions::default())?;
    let (v, pv) = res.shifted.clone().expect("shifted chart");
    println!("m = 2 mu + 3: N = {}, v0 = {v:?}, pv0 = {pv:?}", res.big_n);
    println!("  standard chart: w0 = {:?}, p0 = {:?}", res.w0, res.p0);
    println!("  independent check {:.2e}", verify_match(&res, &[target])?.max_deviation);
    Ok(())
}
