//! Random form generators shared by the integration tests.
#![allow(dead_code)]

use g2min::arith::{rat, Rational};
use g2min::linalg::{Mat4Q, QMatrix};
use g2min::model::{coeff_index, QuadForm6};
use g2min::weights::{valuation_floor_matrix, Weight, TWELVE_WEIGHTS};
use rand::rngs::StdRng;
use rand::Rng;

pub fn rng(seed: u64) -> StdRng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn uniform_form(rng: &mut StdRng, max: i64) -> QuadForm6 {
    let c: [i64; 21] = std::array::from_fn(|_| rng.gen_range(0..=max));
    QuadForm6::from_i64(&c)
}

/// Product of a few random elementary matrices: integral with determinant 1.
pub fn random_sl4z(rng: &mut StdRng, steps: usize) -> Mat4Q {
    let mut m = Mat4Q::identity();
    for _ in 0..steps {
        let i = rng.gen_range(0..4);
        let mut j = rng.gen_range(0..3);
        if j >= i {
            j += 1;
        }
        let t = rng.gen_range(-2..=2);
        let e = QMatrix::from_fn(|r, c| {
            if r == c {
                rat(1)
            } else if (r, c) == (i, j) {
                rat(t)
            } else {
                rat(0)
            }
        });
        m = &m * &e;
    }
    if rng.gen_bool(0.5) {
        let (a, b) = (rng.gen_range(0..4), rng.gen_range(0..4));
        if a != b {
            let swap = QMatrix::from_fn(|r, c| {
                let src = if r == a { b } else if r == b { a } else { r };
                let v = if c == src { 1 } else { 0 };
                rat(if r == a && c == b { -v } else { v })
            });
            m = &m * &swap;
        }
    }
    m
}

/// A form meeting the coefficient floors of `w`, hidden by a random unimodular change.
pub fn floor_form(rng: &mut StdRng, p: u64, w: &Weight, near_miss: bool) -> QuadForm6 {
    let floor = valuation_floor_matrix(w);
    let mut coeffs: Vec<Rational> = vec![rat(0); 21];
    for r in 0..6 {
        for s in r..6 {
            let unit = rng.gen_range(0..(p as i64 * 2));
            coeffs[coeff_index(r, s)] = rat(unit * (p as i64).pow(floor[r][s] as u32));
        }
    }
    if near_miss {
        let (r, s) = loop {
            let r = rng.gen_range(0..6);
            let s = rng.gen_range(r..6);
            if floor[r][s] > 0 {
                break (r, s);
            }
        };
        coeffs[coeff_index(r, s)] = rat((p as i64).pow(floor[r][s] as u32 - 1) * (1 + p as i64 * rng.gen_range(0..2)));
    }
    let h = QuadForm6::from_slice(&coeffs).expect("21 coefficients");
    h.act(&random_sl4z(rng, 8))
}

pub fn random_weight(rng: &mut StdRng) -> Weight {
    TWELVE_WEIGHTS[rng.gen_range(1..12)]
}

/// A residue of rank at most 4 made of products of random linear forms, plus `p` times noise.
pub fn low_rank_form(rng: &mut StdRng, p: u64, products: usize) -> QuadForm6 {
    let pi = p as i64;
    let mut c = vec![0i64; 21];
    for _ in 0..products {
        let a: [i64; 6] = std::array::from_fn(|_| rng.gen_range(0..pi));
        let b: [i64; 6] = std::array::from_fn(|_| rng.gen_range(0..pi));
        for r in 0..6 {
            for s in r..6 {
                let v = if r == s { a[r] * b[r] } else { a[r] * b[s] + a[s] * b[r] };
                c[coeff_index(r, s)] += v;
            }
        }
    }
    for x in c.iter_mut() {
        *x += pi * rng.gen_range(0..4) * i64::from(rng.gen_bool(0.5));
    }
    QuadForm6::from_slice(&c.into_iter().map(rat).collect::<Vec<_>>()).expect("21 coefficients")
}
