//! Build the KdV, Kaup-Boussinesq and Camassa-Holm Stäckel systems with two
//! gaps, print their Hamiltonians and check that they Poisson-commute and are
//! homogeneous for the grading.

use finite_gap::grading::Degree;
use finite_gap::stackel::preset;

fn main() -> finite_gap::Result<()> {
    for name in ["kdv", "kb", "ch"] {
        let sys = preset(name, 2)?;
        println!("== {name}, N = 2, m = {}", sys.data.m);
        print!("{}", sys.dump_hamiltonians());
        for (v, e) in sys.phase_vars().iter().zip(sys.eom()) {
            println!("  ({v})_x = {e}");
        }
        let bracket = sys.poisson_bracket(&sys.hamiltonian(1), &sys.hamiltonian(2));
        println!("  {{H1, H2}} = {bracket}");
        if let Some(g) = sys.grading() {
            for i in 1..=2 {
                match g.degree(&sys.hamiltonian(i)) {
                    Degree::Homogeneous(d) => println!("  deg H{i} = {d}"),
                    d => println!("  H{i}: {d:?}"),
                }
            }
        }
    }
    Ok(())
}
