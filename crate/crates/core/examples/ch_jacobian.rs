//! The Camassa-Holm all-0 Jacobian of `(w_N)_{ix}`, `i = 1..2N-2`, with the
//! closed form of its anti-diagonal and the tangent-number entries.

use finite_gap::algebra::{MultiPoly, RationalExpr};
use finite_gap::combinat::t_sequence;
use finite_gap::jets::{jacobian_all0, JetEngine};
use finite_gap::stackel::{BkmData, StackelSystem};

fn main() -> finite_gap::Result<()> {
    let big_n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6usize);
    let sys = StackelSystem::symbolic(BkmData::camassa_holm(), big_n)?;
    let j = jacobian_all0(&JetEngine::new(&sys))?;
    println!("N = {big_n}: rows (w{big_n})_{{ix}}, columns w1, p{}, w2, ...", big_n - 1);
    for row in &j {
        println!("  {}", row.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" ; "));
    }
    let dim = 2 * big_n - 2;
    for i in 1..=dim {
        let e = RationalExpr::poly(j[i - 1][dim - i].clone());
        let sign = if i % 2 == 0 { 1 } else { -1 };
        let k = i / 2;
        let text = format!("{}*c{}^{k}*w{big_n}^{}", sign * (1i64 << ((i - 1) / 2)), 2 * big_n + 1, -2 * k as i64);
        let expect = RationalExpr::parse(&text).expect("closed form");
        let below = (0..dim - i).all(|c| j[i - 1][c] == MultiPoly::zero());
        println!("  anti-diagonal {i}: {e}  closed form holds: {}, zeros to its left: {below}", e == expect);
    }
    println!("t_1..t_6 = {:?}", t_sequence(6));
    Ok(())
}
