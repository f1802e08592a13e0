mod common;

use finite_gap::algebra::{MultiPoly, RationalExpr, Var, Q};
use finite_gap::combinat::t_sequence;
use finite_gap::jets::{jacobian_all0, linearize_chain, JetEngine, Linearization};
use finite_gap::stackel::preset;
use num_bigint::BigInt;

/// `(c_{2N+1}/w_N^2)^e * k`
fn ratio_pow(big_n: usize, e: usize, k: BigInt) -> RationalExpr {
    let r = RationalExpr::parse(&format!("c{}*w{}^-2", 2 * big_n + 1, big_n)).unwrap();
    r.pow(e as i32).unwrap().scale(&Q::from_integer(k))
}

fn poly(p: &MultiPoly) -> RationalExpr {
    RationalExpr::poly(p.clone())
}

fn pow2(e: usize) -> BigInt {
    BigInt::from(1u64 << e)
}

struct Chains {
    big_n: usize,
    /// `w[i-1][j]`, `p[i-1][j]` = data of `(w_i)_{jx}`, `(p_{N+1-i})_{jx}`
    w: Vec<Vec<Linearization>>,
    p: Vec<Vec<Linearization>>,
}

fn chains(big_n: usize) -> Chains {
    let sys = preset("ch", big_n).unwrap();
    let eng = JetEngine::new(&sys);
    let kmax = 2 * big_n - 2;
    let w = (1..=big_n).map(|i| linearize_chain(&eng, Var::w(i), kmax).unwrap()).collect();
    let p = (1..=big_n).map(|i| linearize_chain(&eng, Var::p(big_n + 1 - i), kmax).unwrap()).collect();
    Chains { big_n, w, p }
}

#[test]
fn n6_values_at_all0() {
    let c = chains(6);
    for (name, rows) in [("ch_n6_w_all0.txt", &c.w), ("ch_n6_p_all0.txt", &c.p)] {
        let expect = common::load_matrix(name);
        assert_eq!(expect.len(), 5);
        for (i, row) in expect.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                assert_eq!(poly(&rows[i][j + 1].value), *e, "{name} ({}, {})", i + 1, j + 1);
            }
        }
    }
}

#[test]
fn vanishing_and_first_values() {
    let t = t_sequence(8);
    for big_n in 2..=5 {
        let c = chains(big_n);
        for i in 1..big_n {
            for k in 0..2 * i {
                assert!(c.w[i - 1][k].value.is_zero(), "N={big_n} (w_{i})_{k}x");
            }
            for k in 0..2 * i - 1 {
                assert!(c.p[i - 1][k].value.is_zero(), "N={big_n} (p_N+1-{i})_{k}x");
            }
            assert_eq!(poly(&c.w[i - 1][2 * i].value), ratio_pow(big_n, i, pow2(i - 1)));
            let sign = if i % 2 == 0 { 1 } else { -1 };
            assert_eq!(poly(&c.p[i - 1][2 * i - 1].value), ratio_pow(big_n, i, t[i - 1].clone() * sign));
        }
    }
}

#[test]
fn last_coordinate_at_all0_is_not_constant() {
    // Recorded outcome: ((w_N)_{jx})|all0 = 2^{j/2} w_N for even j, 0 for odd j.
    for big_n in 2..=5 {
        let c = chains(big_n);
        for j in 1..=2 * big_n - 2 {
            let expect = if j % 2 == 1 { RationalExpr::zero() } else { RationalExpr::var(Var::w(big_n)).scale(&Q::from_integer(pow2(j / 2))) };
            assert_eq!(poly(&c.w[big_n - 1][j].value), expect, "N={big_n} j={j}");
        }
    }
}

#[test]
fn partial_derivative_families() {
    let t = t_sequence(8);
    let s = |l: usize| if l == 0 { BigInt::from(1) } else { pow2(l - 1) };
    for big_n in 2..=5 {
        let c = chains(big_n);
        let nn = c.big_n;
        for i in 1..=nn {
            for k in 1..=nn {
                let (wk, pk) = (Var::w(k), Var::p(nn + 1 - k));
                for j in 0..=2 * nn - 2 {
                    let (lw, lp) = (&c.w[i - 1][j], &c.p[i - 1][j]);
                    let tag = format!("N={nn} i={i} k={k} j={j}");
                    if 2 * i > 2 * k + j {
                        for v in [wk, pk] {
                            assert!(lw.partial(v).is_zero(), "w {tag} {v}");
                            assert!(lp.partial(v).is_zero(), "p {tag} {v}");
                        }
                    }
                    if 2 * i == 2 * k + j {
                        let h = j / 2;
                        assert_eq!(poly(&lw.partial(wk)), ratio_pow(nn, h, s(h)), "{tag}");
                        assert!(lw.partial(pk).is_zero(), "{tag}");
                        assert!(lp.partial(wk).is_zero(), "{tag}");
                        let sign = if h % 2 == 0 { 1 } else { -1 };
                        assert_eq!(poly(&lp.partial(pk)), ratio_pow(nn, h, t[h].clone() * sign), "{tag}");
                    }
                    if j >= 1 && 2 * i + 1 == 2 * k + j {
                        assert_eq!(poly(&lw.partial(pk)), ratio_pow(nn, i - k, -pow2(i - k)), "{tag}");
                    }
                }
            }
        }
    }
}

#[test]
fn anti_diagonal_law() {
    for big_n in 2..=5 {
        let sys = preset("ch", big_n).unwrap();
        let j = jacobian_all0(&JetEngine::new(&sys)).unwrap();
        let m = 2 * big_n - 2;
        let mut det_product = RationalExpr::one();
        for i in 1..=m {
            for col in 1..2 * big_n - 1 - i {
                assert!(j[i - 1][col - 1].is_zero(), "N={big_n} ({i}, {col})");
            }
            let sign: i64 = if i % 2 == 0 { 1 } else { -1 };
            let expect = ratio_pow(big_n, i / 2, pow2((i - 1) / 2) * sign);
            let entry = poly(&j[i - 1][2 * big_n - 2 - i]);
            assert_eq!(entry, expect, "N={big_n} anti-diagonal row {i}");
            det_product = det_product.mul(&entry);
        }
        assert!(!det_product.is_zero());
    }
}
