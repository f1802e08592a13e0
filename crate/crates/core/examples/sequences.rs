//! The integer sequences `t_i` and `s_i` that appear on the anti-diagonal of
//! the Camassa-Holm all-0 Jacobian.

use finite_gap::combinat::{s_sequence, t_identity_holds, t_sequence};

fn main() {
    let n = 12;
    let (t, s) = (t_sequence(n), s_sequence(n));
    println!("{:>3} {:>28} {:>6}", "i", "t_i", "s_i");
    for i in 0..n {
        println!("{:>3} {:>28} {:>6}", i + 1, t[i], s[i]);
    }
    println!("second recursion for t holds through {n}: {}", t_identity_holds(n));
}
