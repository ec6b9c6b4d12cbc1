#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use mfslab::localqh::{GWTable, Geometry, SurfaceData, Target};
use mfslab::ringcore::{Monomial, Rational, RingDecl, SeriesElem};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn rational(r: &mut impl Rng) -> Rational {
    Rational::new(r.gen_range(-9..=9), r.gen_range(1..=6))
}

pub fn nonzero_rational(r: &mut impl Rng) -> Rational {
    loop {
        let x = rational(r);
        if !x.is_zero() {
            return x;
        }
    }
}

pub fn geometries() -> Vec<(&'static str, Geometry)> {
    vec![
        ("P2", Geometry::Toric(SurfaceData::p2())),
        ("F0", Geometry::Toric(SurfaceData::f0())),
        ("F1", Geometry::Toric(SurfaceData::f1())),
        ("F2", Geometry::Toric(SurfaceData::f2())),
        ("P3", Geometry::P3),
    ]
}

fn degrees(r: usize, order: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..r {
        out = out
            .into_iter()
            .flat_map(|v: Vec<u32>| {
                let used: u32 = v.iter().sum();
                (0..=order - used).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out.retain(|v| v.iter().any(|&x| x > 0));
    out
}

/// Random table with every admissible degree up to `order`; about one entry in five is zero.
pub fn random_table(r: &mut impl Rng, g: &Geometry, order: u32) -> GWTable {
    let (target, betas) = match g {
        Geometry::Toric(s) => {
            let b: Vec<_> = degrees(s.r(), order).into_iter().filter(|b| s.degree(b).is_positive()).collect();
            (Target::Toric, b)
        }
        Geometry::P3 => (Target::P3, (1..=order).map(|d| vec![d]).collect()),
    };
    let mut entries = BTreeMap::new();
    for b in betas {
        let n = if r.gen_bool(0.2) { Rational::zero() } else { nonzero_rational(r) };
        entries.insert(b, n);
    }
    GWTable::new(target, entries, order).expect("admissible table")
}

/// Ring with poly vars x, y, t1, exp var Q1 = e^{t1}, at the given order.
pub fn series_ring(order: u32) -> Arc<RingDecl> {
    RingDecl::with_exps(&["x", "y", "t1"], &["t1"], order)
}

pub fn random_series(r: &mut impl Rng, ring: &Arc<RingDecl>, terms: usize) -> SeriesElem {
    let mut s = SeriesElem::zero(ring);
    for _ in 0..terms {
        let mut m = Monomial::one(ring);
        m.beta[0] = r.gen_range(0..=ring.order);
        for e in m.mono.iter_mut() {
            *e = r.gen_range(0..=2);
        }
        s += &SeriesElem::term(ring, m, rational(r)).expect("monomial of this ring");
    }
    s
}
