//! Sparse multivariate Laurent polynomials with exact rational coefficients.
//!
//! Terms are kept sorted in graded-lex order (higher total degree first,
//! ties broken by the larger exponent on the earliest variable). Because
//! that order is a monomial order, multiplying by a monomial and
//! differentiating keep the term list sorted.

use super::rational::{parse_q, Q};
use super::var::Var;
use num_traits::{One, Signed, Zero};
use rustc_hash::FxHashMap;
use smallvec::SmallVec;
use std::cmp::Ordering;
use std::fmt;

pub type Factors = SmallVec<[(Var, i32); 6]>;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    deg: i32,
    factors: Factors,
}

impl Monomial {
    pub fn one() -> Monomial {
        Monomial::default()
    }

    pub fn var(v: Var, e: i32) -> Monomial {
        if e == 0 {
            return Monomial::one();
        }
        let mut factors = Factors::new();
        factors.push((v, e));
        Monomial { deg: e, factors }
    }

    pub fn from_factors(mut fs: Vec<(Var, i32)>) -> Monomial {
        fs.sort_by_key(|f| f.0);
        let mut factors = Factors::new();
        for (v, e) in fs {
            match factors.last_mut() {
                Some(last) if last.0 == v => last.1 += e,
                _ => factors.push((v, e)),
            }
        }
        factors.retain(|f| f.1 != 0);
        let deg = factors.iter().map(|f| f.1).sum();
        Monomial { deg, factors }
    }

    pub fn degree(&self) -> i32 {
        self.deg
    }

    pub fn factors(&self) -> &[(Var, i32)] {
        &self.factors
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn exp(&self, v: Var) -> i32 {
        match self.factors.binary_search_by_key(&v, |f| f.0) {
            Ok(i) => self.factors[i].1,
            Err(_) => 0,
        }
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        if other.is_one() {
            return self.clone();
        }
        if self.is_one() {
            return other.clone();
        }
        let mut out = Factors::new();
        let (a, b) = (&self.factors, &other.factors);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    let e = a[i].1 + b[j].1;
                    if e != 0 {
                        out.push((a[i].0, e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial { deg: self.deg + other.deg, factors: out }
    }

    pub fn inv(&self) -> Monomial {
        Monomial { deg: -self.deg, factors: self.factors.iter().map(|&(v, e)| (v, -e)).collect() }
    }

    /// Multiply by `v^e`.
    pub fn mul_var(&self, v: Var, e: i32) -> Monomial {
        self.mul(&Monomial::var(v, e))
    }

    /// Componentwise minimum of exponents (over all variables of both).
    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut fs = Vec::new();
        for &(v, e) in self.factors.iter() {
            fs.push((v, e.min(other.exp(v))));
        }
        for &(v, e) in other.factors.iter() {
            if self.exp(v) == 0 {
                fs.push((v, e.min(0)));
            }
        }
        Monomial::from_factors(fs)
    }

    /// Sum of exponents over variables matching `pred`.
    pub fn count(&self, pred: impl Fn(Var) -> bool) -> i32 {
        self.factors.iter().filter(|f| pred(f.0)).map(|f| f.1).sum()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.factors.iter().map(|f| f.0)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        other.deg.cmp(&self.deg).then_with(|| {
            let (a, b) = (&self.factors, &other.factors);
            let (mut i, mut j) = (0, 0);
            loop {
                match (a.get(i), b.get(j)) {
                    (None, None) => return Ordering::Equal,
                    (Some(x), None) => return if x.1 > 0 { Ordering::Less } else { Ordering::Greater },
                    (None, Some(y)) => return if y.1 > 0 { Ordering::Greater } else { Ordering::Less },
                    (Some(x), Some(y)) => match x.0.cmp(&y.0) {
                        Ordering::Less => return if x.1 > 0 { Ordering::Less } else { Ordering::Greater },
                        Ordering::Greater => return if y.1 > 0 { Ordering::Greater } else { Ordering::Less },
                        Ordering::Equal => {
                            if x.1 != y.1 {
                                return y.1.cmp(&x.1);
                            }
                            i += 1;
                            j += 1;
                        }
                    },
                }
            }
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        for (k, (v, e)) in self.factors.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiPoly {
    terms: Vec<(Monomial, Q)>,
}

fn collect(map: FxHashMap<Monomial, Q>) -> MultiPoly {
    let mut terms: Vec<(Monomial, Q)> = map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    MultiPoly { terms }
}

fn accumulate(map: &mut FxHashMap<Monomial, Q>, m: Monomial, c: Q) {
    match map.entry(m) {
        std::collections::hash_map::Entry::Occupied(mut o) => {
            *o.get_mut() += c;
        }
        std::collections::hash_map::Entry::Vacant(v) => {
            v.insert(c);
        }
    }
}

impl MultiPoly {
    pub fn zero() -> MultiPoly {
        MultiPoly { terms: Vec::new() }
    }

    pub fn one() -> MultiPoly {
        MultiPoly::constant(Q::one())
    }

    pub fn constant(c: Q) -> MultiPoly {
        if c.is_zero() {
            MultiPoly::zero()
        } else {
            MultiPoly { terms: vec![(Monomial::one(), c)] }
        }
    }

    pub fn var(v: Var) -> MultiPoly {
        MultiPoly::term(Monomial::var(v, 1), Q::one())
    }

    pub fn var_pow(v: Var, e: i32) -> MultiPoly {
        MultiPoly::term(Monomial::var(v, e), Q::one())
    }

    pub fn term(m: Monomial, c: Q) -> MultiPoly {
        if c.is_zero() {
            MultiPoly::zero()
        } else {
            MultiPoly { terms: vec![(m, c)] }
        }
    }

    pub fn from_terms(ts: impl IntoIterator<Item = (Monomial, Q)>) -> MultiPoly {
        let mut map = FxHashMap::default();
        for (m, c) in ts {
            accumulate(&mut map, m, c);
        }
        collect(map)
    }

    pub fn terms(&self) -> &[(Monomial, Q)] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<(Monomial, Q)> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some(c)` if the polynomial is a constant.
    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.as_slice() {
            [] => Some(Q::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    /// `Some((m, c))` if the polynomial is a single term.
    pub fn as_term(&self) -> Option<(&Monomial, &Q)> {
        match self.terms.as_slice() {
            [(m, c)] => Some((m, c)),
            _ => None,
        }
    }

    pub fn leading(&self) -> Option<&(Monomial, Q)> {
        self.terms.first()
    }

    pub fn coeff(&self, m: &Monomial) -> Q {
        match self.terms.binary_search_by(|t| t.0.cmp(m)) {
            Ok(i) => self.terms[i].1.clone(),
            Err(_) => Q::zero(),
        }
    }

    pub fn constant_term(&self) -> Q {
        self.coeff(&Monomial::one())
    }

    pub fn add(&self, other: &MultiPoly) -> MultiPoly {
        self.merge(other, false)
    }

    pub fn sub(&self, other: &MultiPoly) -> MultiPoly {
        self.merge(other, true)
    }

    fn merge(&self, other: &MultiPoly, negate: bool) -> MultiPoly {
        let (a, b) = (&self.terms, &other.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    let c = if negate { -&b[j].1 } else { b[j].1.clone() };
                    out.push((b[j].0.clone(), c));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate { &a[i].1 - &b[j].1 } else { &a[i].1 + &b[j].1 };
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        for t in &b[j..] {
            let c = if negate { -&t.1 } else { t.1.clone() };
            out.push((t.0.clone(), c));
        }
        MultiPoly { terms: out }
    }

    pub fn neg(&self) -> MultiPoly {
        MultiPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn scale(&self, k: &Q) -> MultiPoly {
        if k.is_zero() {
            return MultiPoly::zero();
        }
        MultiPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn mul_term(&self, m: &Monomial, k: &Q) -> MultiPoly {
        if k.is_zero() {
            return MultiPoly::zero();
        }
        MultiPoly { terms: self.terms.iter().map(|(t, c)| (t.mul(m), c * k)).collect() }
    }

    pub fn mul(&self, other: &MultiPoly) -> MultiPoly {
        if self.is_zero() || other.is_zero() {
            return MultiPoly::zero();
        }
        if let Some((m, c)) = other.as_term() {
            return self.mul_term(m, c);
        }
        if let Some((m, c)) = self.as_term() {
            return other.mul_term(m, c);
        }
        let mut map = FxHashMap::default();
        map.reserve(self.len() * other.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                accumulate(&mut map, ma.mul(mb), ca * cb);
            }
        }
        collect(map)
    }

    /// Non-negative integer power.
    pub fn pow(&self, e: u32) -> MultiPoly {
        let mut acc = MultiPoly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn derivative(&self, v: Var) -> MultiPoly {
        let mut out = Vec::new();
        for (m, c) in &self.terms {
            let e = m.exp(v);
            if e != 0 {
                out.push((m.mul_var(v, -1), c * Q::from_integer(e.into())));
            }
        }
        MultiPoly { terms: out }
    }

    /// Does the variable occur with nonzero exponent anywhere?
    pub fn contains(&self, v: Var) -> bool {
        self.terms.iter().any(|(m, _)| m.exp(v) != 0)
    }

    pub fn variables(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self.terms.iter().flat_map(|(m, _)| m.vars().collect::<Vec<_>>()).collect();
        vs.sort();
        vs.dedup();
        vs
    }

    /// Keep only the terms whose monomial satisfies `pred`.
    pub fn filter(&self, pred: impl Fn(&Monomial) -> bool) -> MultiPoly {
        MultiPoly { terms: self.terms.iter().filter(|t| pred(&t.0)).cloned().collect() }
    }

    /// Substitute exact values for some variables. A negative exponent on a
    /// variable substituted by zero panics; callers check denominators first.
    pub fn eval_partial(&self, vals: &dyn Fn(Var) -> Option<Q>) -> MultiPoly {
        let mut map = FxHashMap::default();
        let mut cache: FxHashMap<(Var, i32), Q> = FxHashMap::default();
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut rest = Vec::new();
            for &(v, e) in m.factors() {
                match vals(v) {
                    Some(x) => {
                        let p = cache.entry((v, e)).or_insert_with(|| qpow(&x, e)).clone();
                        coeff *= p;
                        if coeff.is_zero() {
                            break;
                        }
                    }
                    None => rest.push((v, e)),
                }
            }
            if !coeff.is_zero() {
                accumulate(&mut map, Monomial::from_factors(rest), coeff);
            }
        }
        collect(map)
    }

    /// Full evaluation; `None` if some variable is missing.
    pub fn eval(&self, vals: &dyn Fn(Var) -> Option<Q>) -> Option<Q> {
        let r = self.eval_partial(vals);
        r.as_constant()
    }

    pub fn eval_f64(&self, vals: &dyn Fn(Var) -> f64) -> f64 {
        let mut s = 0.0;
        for (m, c) in &self.terms {
            let mut t = super::rational::to_f64(c);
            for &(v, e) in m.factors() {
                t *= vals(v).powi(e);
            }
            s += t;
        }
        s
    }

    /// Replace variables by polynomials. Variables mapped to `None` stay.
    /// Negative exponents are allowed only on variables that are kept.
    pub fn substitute(&self, map: &dyn Fn(Var) -> Option<MultiPoly>) -> MultiPoly {
        let mut cache: FxHashMap<(Var, i32), MultiPoly> = FxHashMap::default();
        let mut acc: FxHashMap<Monomial, Q> = FxHashMap::default();
        for (m, c) in &self.terms {
            let mut prod = MultiPoly::constant(c.clone());
            let mut kept = Vec::new();
            for &(v, e) in m.factors() {
                match map(v) {
                    Some(p) => {
                        assert!(e >= 0, "cannot substitute into negative power of {v}");
                        let pe = cache.entry((v, e)).or_insert_with(|| p.pow(e as u32)).clone();
                        prod = prod.mul(&pe);
                    }
                    None => kept.push((v, e)),
                }
            }
            let km = Monomial::from_factors(kept);
            for (tm, tc) in prod.terms {
                accumulate(&mut acc, tm.mul(&km), tc);
            }
        }
        collect(acc)
    }

    /// Total degree range of the terms.
    pub fn total_degree(&self) -> Option<i32> {
        self.terms.iter().map(|t| t.0.degree()).max()
    }

    /// Monomial gcd of all terms (componentwise minimum exponent).
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.iter();
        let first = match it.next() {
            Some(t) => t.0.clone(),
            None => return Monomial::one(),
        };
        it.fold(first, |g, t| g.gcd(&t.0))
    }

    /// Largest rational `k` such that `self / k` has coprime integer
    /// coefficients with a positive leading coefficient.
    pub fn content(&self) -> Q {
        use num_integer::Integer;
        let mut num = num_bigint::BigInt::zero();
        let mut den = num_bigint::BigInt::one();
        for (_, c) in &self.terms {
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
        if num.is_zero() {
            return Q::one();
        }
        let k = Q::new(num, den);
        match self.terms.first() {
            Some((_, c)) if c.is_negative() => -k,
            _ => k,
        }
    }

    /// Divide exactly by a single term.
    pub fn div_term(&self, m: &Monomial, c: &Q) -> MultiPoly {
        self.mul_term(&m.inv(), &(Q::one() / c))
    }

    /// Exact multivariate division. Returns `None` unless `other` divides
    /// `self` as polynomials with the current exponents.
    pub fn div_exact(&self, other: &MultiPoly) -> Option<MultiPoly> {
        if other.is_zero() {
            return None;
        }
        if let Some((m, c)) = other.as_term() {
            return Some(self.div_term(m, c));
        }
        let (lm, lc) = other.leading()?.clone();
        let mut rem = self.clone();
        let mut quot = MultiPoly::zero();
        let mut steps = 0usize;
        while let Some((m, c)) = rem.leading().cloned() {
            // Leading monomial of the remainder must be divisible by lm.
            let qm = m.mul(&lm.inv());
            if qm.factors().iter().any(|&(v, e)| e < 0 && lm.exp(v) > 0) {
                return None;
            }
            let qc = &c / &lc;
            let t = MultiPoly::term(qm.clone(), qc.clone());
            rem = rem.sub(&other.mul_term(&qm, &qc));
            quot = quot.add(&t);
            steps += 1;
            if steps > 100_000 {
                return None;
            }
        }
        Some(quot)
    }

    /// Parse `"-3/2*w1^2 + w2 - c13*w6^-2"`.
    pub fn parse(s: &str) -> Option<MultiPoly> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return None;
        }
        let mut terms = Vec::new();
        let bytes: Vec<char> = s.chars().collect();
        let mut start = 0;
        let mut i = 0;
        let mut pieces = Vec::new();
        while i < bytes.len() {
            let c = bytes[i];
            if (c == '+' || c == '-') && i > start && bytes[i - 1] != '^' {
                pieces.push(bytes[start..i].iter().collect::<String>());
                start = i;
            }
            i += 1;
        }
        pieces.push(bytes[start..].iter().collect::<String>());
        for piece in pieces {
            let (sign, body) = match piece.strip_prefix('-') {
                Some(b) => (-Q::one(), b.to_string()),
                None => (Q::one(), piece.trim_start_matches('+').to_string()),
            };
            if body.is_empty() {
                return None;
            }
            let mut coeff = sign;
            let mut fs = Vec::new();
            for f in body.split('*') {
                if f.is_empty() {
                    return None;
                }
                if f.starts_with(|c: char| c.is_ascii_digit()) {
                    coeff *= parse_q(f)?;
                } else {
                    let (name, e) = match f.split_once('^') {
                        Some((n, e)) => (n, e.parse::<i32>().ok()?),
                        None => (f, 1),
                    };
                    fs.push((Var::parse(name)?, e));
                }
            }
            terms.push((Monomial::from_factors(fs), coeff));
        }
        Some(MultiPoly::from_terms(terms))
    }
}

pub fn qpow(x: &Q, e: i32) -> Q {
    if e >= 0 {
        num_traits::pow(x.clone(), e as usize)
    } else {
        assert!(!x.is_zero(), "zero raised to a negative power");
        num_traits::pow(Q::one() / x, (-e) as usize)
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            if m.is_one() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{a}*{m}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<Var> for MultiPoly {
    fn from(v: Var) -> Self {
        MultiPoly::var(v)
    }
}

impl From<Q> for MultiPoly {
    fn from(c: Q) -> Self {
        MultiPoly::constant(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational::{q, qr};

    fn p(s: &str) -> MultiPoly {
        MultiPoly::parse(s).unwrap()
    }

    #[test]
    fn parse_print_roundtrip() {
        let a = p("-3/2*w1^2 + w2 - c13*w6^-2");
        assert_eq!(a.to_string(), "-3/2*w1^2 + w2 - w6^-2*c13");
        assert_eq!(p(&a.to_string()), a);
        assert_eq!(p("2*w1*w1"), p("2*w1^2"));
        assert_eq!(p("w1 - w1"), MultiPoly::zero());
    }

    #[test]
    fn graded_lex_order() {
        let a = p("w2 + w1^2 + p4 + 1 + w1*p4");
        assert_eq!(a.to_string(), "w1^2 + w1*p4 + w2 + p4 + 1");
    }

    #[test]
    fn arithmetic() {
        let a = p("w1 + 1");
        assert_eq!(a.mul(&a), p("w1^2 + 2*w1 + 1"));
        assert_eq!(a.pow(3), p("w1^3 + 3*w1^2 + 3*w1 + 1"));
        assert_eq!(p("w1^3*w6^-2").derivative(Var::w(6)), p("-2*w1^3*w6^-3"));
        assert_eq!(p("w1*w2 + w2").eval_partial(&|v| (v == Var::w(2)).then(|| q(3))), p("3*w1 + 3"));
        let s = p("w1^2 + w2").substitute(&|v| (v == Var::w(1)).then(|| p("v1 - 2")));
        assert_eq!(s, p("v1^2 - 4*v1 + 4 + w2"));
        assert_eq!(p("6*w1 + 4*w2").content(), q(2));
        assert_eq!(p("-1/2*w1 + 1/3").content(), qr(-1, 6));
        assert_eq!(p("w1^2 - w2^2").div_exact(&p("w1 + w2")), Some(p("w1 - w2")));
        assert_eq!(p("w1^2 + w2").div_exact(&p("w1 + w2")), None);
    }

    #[test]
    fn monomial_gcd() {
        let a = p("w1^2*w6^-1 + w1*p2");
        assert_eq!(a.monomial_content(), Monomial::from_factors(vec![(Var::w(1), 1), (Var::w(6), -1)]));
    }
}
