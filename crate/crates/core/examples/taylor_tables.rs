//! Taylor coefficients of `w_1(x)` at `x = 0` for KdV with `N = 4, 5, 6`
//! and of `w_1, w_2` for Kaup-Boussinesq with `N = 6`, with `c_2..c_N = 0`.

use finite_gap::algebra::Var;
use finite_gap::fixtures::tabulated_system;
use finite_gap::jets::JetEngine;

fn main() -> finite_gap::Result<()> {
    for (n, big_n, comps, order) in [(1, 4, vec![Var::w(1)], 3), (1, 5, vec![Var::w(1)], 4), (1, 6, vec![Var::w(1)], 5), (2, 6, vec![Var::w(1), Var::w(2)], 2)] {
        let sys = tabulated_system(n, big_n)?;
        let engine = JetEngine::new(&sys);
        println!("== n = {n}, N = {big_n}");
        for v in comps {
            for (j, c) in engine.taylor_coeffs(v, order)?.iter().enumerate() {
                let text = c.to_string();
                if text.len() > 110 {
                    println!("  {v}: x^{j}: {}... ({} characters)", &text[..100], text.len());
                } else {
                    println!("  {v}: x^{j}: {text}");
                }
            }
        }
    }
    Ok(())
}
