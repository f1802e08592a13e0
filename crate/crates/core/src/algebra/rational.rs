//! Exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parse `"p"`, `"p/q"` or a finite decimal like `"-1.25"` or `"2.5e-3"`.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((m, e)) = s.split_once(['e', 'E']) {
        if m.contains('/') {
            return None;
        }
        let e: i32 = e.parse().ok()?;
        let scale = Q::from_integer(num_traits::pow(BigInt::from(10), e.unsigned_abs() as usize));
        let m = parse_q(m)?;
        return Some(if e >= 0 { m * scale } else { m / scale });
    }
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().ok()?;
        let d: BigInt = b.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Q::new(n, d));
    }
    if let Some((a, b)) = s.split_once('.') {
        let neg = a.trim_start().starts_with('-');
        let ip: BigInt = if a.is_empty() || a == "-" || a == "+" { BigInt::zero() } else { a.parse().ok()? };
        if b.is_empty() || !b.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let fp: BigInt = b.parse().ok()?;
        let scale = num_traits::pow(BigInt::from(10), b.len());
        let mag = Q::new(ip.abs() * &scale + fp, scale);
        return Some(if neg { -mag } else { mag });
    }
    let n: BigInt = s.parse().ok()?;
    Some(Q::from_integer(n))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Huge numerator and denominator: scale down before converting.
        let n = x.numer().bits() as i64;
        let d = x.denom().bits() as i64;
        let shift = (n.max(d) - 900).max(0) as usize;
        let nn = (x.numer() >> shift).to_f64().unwrap_or(0.0);
        let dd = (x.denom() >> shift).to_f64().unwrap_or(1.0);
        nn / dd
    })
}

/// Closest rational with denominator a power of two (exact for finite f64).
pub fn from_f64(x: f64) -> Option<Q> {
    Q::from_float(x)
}

pub fn is_integer(x: &Q) -> bool {
    x.denom().is_one()
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, i| a * BigInt::from(i))
}
