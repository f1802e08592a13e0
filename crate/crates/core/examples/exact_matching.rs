//! Exact jet matching for constant `m`: a rational 4-jet of Kaup-Boussinesq
//! initial data `(u_1, u_2)` is matched by triangular back-substitution, and
//! the match is checked by solving the equations of motion as power series.

use finite_gap::algebra::{q, qr};
use finite_gap::jet_match::{match_deg_m0, verify_match};
use finite_gap::series::TruncatedSeries;

fn main() -> finite_gap::Result<()> {
    let u1 = TruncatedSeries::new(vec![q(1), qr(1, 2), q(-3), qr(2, 7), q(5)]);
    let u2 = TruncatedSeries::new(vec![q(-2), q(0), qr(1, 3), q(4), qr(-9, 5)]);
    let target = [u1, u2];
    let res = match_deg_m0(2, &q(1), &target, None)?;
    println!("N = {}", res.big_n);
    for (i, (w, p)) in res.w0.iter().zip(&res.p0).enumerate() {
        println!("  w{}(0) = {w:<24} p{}(0) = {p}", i + 1, i + 1);
    }
    println!("leading coefficients: {}", res.leading_coefficients.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "));
    let rep = verify_match(&res, &target)?;
    println!("deviation per order: {:?}", rep.per_order);
    println!("H_i at the start: {}", rep.level_residual);
    for (i, a) in rep.achieved.iter().enumerate() {
        println!("  u{} derivatives at 0: {a:?}", i + 1);
    }
    Ok(())
}
