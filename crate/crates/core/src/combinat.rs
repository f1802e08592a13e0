//! Integer sequences that appear in the all-0 jet values of the
//! Camassa-Holm systems.
//!
//! `t_i` is a rescaled tangent number (`t_i = T_{2i-1} / 2^{i-1}`) and
//! `s_i = 2^{i-1}`; both are defined here by their recursions.

use crate::algebra::rational::binomial;
use num_bigint::BigInt;
use num_traits::{One, Zero};

/// `t_1..t_n` from `t_i = 1/2 sum_{j=1}^{i-1} C(2i-2, 2j-1) t_j t_{i-j}`.
pub fn t_sequence(n: usize) -> Vec<BigInt> {
    let mut t: Vec<BigInt> = vec![BigInt::zero(); n + 1];
    if n >= 1 {
        t[1] = BigInt::one();
    }
    for i in 2..=n {
        let mut acc = BigInt::zero();
        for j in 1..i {
            acc += binomial(2 * i as u64 - 2, 2 * j as u64 - 1) * &t[j] * &t[i - j];
        }
        t[i] = acc / 2;
    }
    t.remove(0);
    t
}

/// `s_1..s_n` from `s_0 = 1`, `s_i = -sum_{j<i} C(2i-1, 2j) s_j (-1)^{i-j} t_{i-j}`.
pub fn s_sequence(n: usize) -> Vec<BigInt> {
    let t = t_sequence(n);
    let mut s = vec![BigInt::one()];
    for i in 1..=n {
        let mut acc = BigInt::zero();
        for j in 0..i {
            let term = binomial(2 * i as u64 - 1, 2 * j as u64) * &s[j] * &t[i - j - 1];
            if (i - j) % 2 == 0 {
                acc -= term;
            } else {
                acc += term;
            }
        }
        s.push(acc);
    }
    s.remove(0);
    s
}

/// Checks `t_{b+1} = sum_{l=0}^{b-1} C(2b-1, 2l) t_{l+1} t_{b-l}` for `1 <= b < n`.
pub fn t_identity_holds(n: usize) -> bool {
    let t = t_sequence(n);
    (1..n).all(|b| {
        let rhs: BigInt = (0..b)
            .map(|l| binomial(2 * b as u64 - 1, 2 * l as u64) * &t[l] * &t[b - l - 1])
            .sum();
        rhs == t[b]
    })
}
