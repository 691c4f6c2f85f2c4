#![allow(dead_code)]

use ffbsd::curve::{Curve, KPoint};
use ffbsd::ff::Fq;
use ffbsd::funcfield::{Poly, RationalFunction};
use ffbsd::localred::{all_local_data, conductor_degree_of};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn field(q: u64) -> Fq {
    Fq::new(q, 1).unwrap()
}

pub fn curve(q: u64, a: &[i64], b: &[i64]) -> Curve {
    let f = field(q);
    Curve::new(Poly::from_i64s(&f, a), Poly::from_i64s(&f, b)).unwrap()
}

pub fn e1() -> Curve {
    curve(5, &[1], &[0, 1])
}

pub fn e2() -> Curve {
    curve(5, &[0, -1], &[0, 1])
}

pub fn e3() -> Curve {
    curve(5, &[0, 1], &[])
}

pub fn corpus() -> Vec<(&'static str, Curve)> {
    vec![("E1", e1()), ("E2", e2()), ("E3", e3())]
}

pub fn poly_point(c: &Curve, x: &[i64], y: &[i64]) -> KPoint {
    let f = c.field();
    c.point(
        RationalFunction::from_poly(Poly::from_i64s(f, x)),
        RationalFunction::from_poly(Poly::from_i64s(f, y)),
    )
    .unwrap()
}

/// `(1, 1)` on E2.
pub fn e2_point() -> KPoint {
    poly_point(&e2(), &[1], &[1])
}

/// A curve over `F_5(t)` with two independent integral points whose height
/// pairing has determinant 2.
pub fn rank_two() -> (Curve, Vec<KPoint>) {
    let c = curve(5, &[3, 0, 2], &[2, 4]);
    let p = poly_point(&c, &[2], &[1, 2]);
    let q = poly_point(&c, &[2, 2, 1], &[4, 3, 3, 1]);
    (c, vec![p, q])
}

/// Seeded draws of non-isotrivial curves with `deg a <= da`, `deg b <= db`
/// and `deg n >= 4`.
pub fn random_curves(q: u64, da: usize, db: usize, count: usize, seed: u64) -> Vec<Curve> {
    let f = field(q);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let a: Vec<i64> = (0..=da).map(|_| rng.gen_range(0..q as i64)).collect();
        let b: Vec<i64> = (0..=db).map(|_| rng.gen_range(0..q as i64)).collect();
        let Ok(c) = Curve::new(Poly::from_i64s(&f, &a), Poly::from_i64s(&f, &b)) else {
            continue;
        };
        if c.is_isotrivial() {
            continue;
        }
        let Ok(local) = all_local_data(&c) else { continue };
        if conductor_degree_of(&local).is_err() {
            continue;
        }
        out.push(c);
    }
    out
}
