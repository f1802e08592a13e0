//! Joint `(x, t)`-flows of `H_1` and `H_2` for KdV and Camassa-Holm with
//! two gaps, and the finite-difference residuals of the PDEs they satisfy
//! under grid refinement.

use finite_gap::algebra::VarKind;
use finite_gap::odesim::{commutation_defect, joint_flow, pde_residual_with, IntegratorOptions, NumericSystem, PdeForm};
use finite_gap::stackel::preset;

fn main() -> finite_gap::Result<()> {
    let y0 = [0.3, 0.8, -0.1, -0.05];
    for (name, form) in [("kdv", PdeForm::Kdv), ("ch", PdeForm::CamassaHolm)] {
        let sys = preset(name, 2)?;
        let mut num = NumericSystem::new(&sys, &|v| (v.kind() == VarKind::C).then_some(1.3))?;
        num.set_zero_level(&y0);
        let o = IntegratorOptions::with_tol(1e-12, 1e-14);
        println!("== {name}: commutation defect on a 3x3 grid {:.1e}", commutation_defect(&num, &y0, &[-0.2, 0.0, 0.2], &[-0.2, 0.0, 0.2], &o)?);
        let mut prev: Option<f64> = None;
        for n in [17usize, 33, 65, 129] {
            let g: Vec<f64> = (0..n).map(|i| -0.4 + 0.8 * i as f64 / (n - 1) as f64).collect();
            let field = joint_flow(&num, &y0[..2], &y0[2..], &g, &g, 1e-13)?;
            let r = pde_residual_with(&field, &form)?;
            let ev = r.evolution[0].max;
            let ratio = prev.map_or(String::new(), |p| format!("ratio {:.2}", p / ev));
            let cons = r.constraint.map_or(String::new(), |c| format!("constraint {:.3e}", c.max));
            println!("  {n:>3} nodes: evolution {ev:.3e} {cons} {ratio}");
            prev = Some(ev);
        }
    }
    Ok(())
}
