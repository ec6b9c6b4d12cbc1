mod common;

use mfslab::deformed::{curvature_check_all, p3_flat_coords, toric_flat_coords, verify_deformed_coords};
use mfslab::frobenius::{nilpotent_filtration, quotient_filtration, weight_filtration};
use mfslab::localqh::{
    build_v_model, catalog, local_product, local_product_direct, local_product_pipeline, quantum_product_v, route_difference,
    GWTable, Geometry,
};
use mfslab::mfs::{frobenius_structure_check, mfs_check, MFSData};
use mfslab::ringcore::{HbarLaurent, Matrix, Rational, SeriesElem};
use proptest::prelude::*;
use serde_json::json;

fn geometry(i: usize) -> Geometry {
    common::geometries().swap_remove(i % 5).1
}

fn table(seed: u64, g: &Geometry, order: u32) -> GWTable {
    common::random_table(&mut common::rng(seed), g, order)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn leibniz_and_commuting_partials(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let ring = common::series_ring(3);
        let f = common::random_series(&mut r, &ring, 5);
        let g = common::random_series(&mut r, &ring, 5);
        for v in ["x", "y", "t1"] {
            let lhs = (&f * &g).derive(v).unwrap();
            let rhs = &(&f.derive(v).unwrap() * &g) + &(&f * &g.derive(v).unwrap());
            prop_assert_eq!(lhs, rhs);
        }
        for (a, b) in [("x", "y"), ("x", "t1"), ("y", "t1")] {
            prop_assert_eq!(f.derive(a).unwrap().derive(b).unwrap(), f.derive(b).unwrap().derive(a).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn series_ring_axioms(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let ring = common::series_ring(2);
        let f = common::random_series(&mut r, &ring, 4);
        let g = common::random_series(&mut r, &ring, 4);
        let h = common::random_series(&mut r, &ring, 4);
        prop_assert_eq!(&(&f * &g) * &h, &f * &(&g * &h));
        prop_assert_eq!(&f * &(&g + &h), &(&f * &g) + &(&f * &h));
        prop_assert_eq!(&f * &g, &g * &f);
        prop_assert_eq!(&f * &SeriesElem::one(&ring), f.clone());
        prop_assert!((&f - &f).is_zero());
    }

    #[test]
    fn hbar_ring_axioms(seed in any::<u64>(), a in -3i32..3, b in -3i32..3, c in -3i32..3) {
        let mut r = common::rng(seed);
        let ring = common::series_ring(2);
        let ev = Some("x");
        let f = HbarLaurent::monomial(&common::random_series(&mut r, &ring, 3), a, 1, ev);
        let g = HbarLaurent::monomial(&common::random_series(&mut r, &ring, 3), b, 0, ev)
            .add(&HbarLaurent::monomial(&common::random_series(&mut r, &ring, 2), c, 2, ev));
        let h = HbarLaurent::monomial(&common::random_series(&mut r, &ring, 3), c, 1, ev);
        prop_assert_eq!(f.mul(&g).mul(&h), f.mul(&g.mul(&h)));
        prop_assert_eq!(f.mul(&g.add(&h)), f.mul(&g).add(&f.mul(&h)));
        prop_assert_eq!(f.mul(&g), g.mul(&f));
        // ∂_x and ∂_ħ are derivations
        let lhs = f.mul(&g).derive("x").unwrap();
        let rhs = f.derive("x").unwrap().mul(&g).add(&f.mul(&g.derive("x").unwrap()));
        prop_assert_eq!(lhs, rhs);
        let lhs = f.mul(&g).derive_hbar().unwrap();
        let rhs = f.derive_hbar().unwrap().mul(&g).add(&f.mul(&g.derive_hbar().unwrap()));
        prop_assert_eq!(lhs, rhs);
        let lhs = f.derive("x").unwrap().derive_hbar().unwrap();
        let rhs = f.derive_hbar().unwrap().derive("x").unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn matrix_inverse_and_rank(seed in any::<u64>(), n in 1usize..6) {
        let mut r = common::rng(seed);
        let m = Matrix::from_fn(n, n, |_, _| common::rational(&mut r));
        prop_assert_eq!(m.rank() + m.kernel().dim(), n);
        if let Ok(inv) = m.inverse() {
            prop_assert_eq!(m.mul(&inv).unwrap(), Matrix::identity(n));
            prop_assert!(!m.det().unwrap().is_zero());
        } else {
            prop_assert!(m.det().unwrap().is_zero());
        }
    }

    #[test]
    fn nilpotent_filtration_axioms_pn(d in 2usize..7, m in prop_oneof![-6i64..=-1, 1i64..=6]) {
        let c = catalog("pn", &json!({"d": d, "m": m})).unwrap();
        let filt = nilpotent_filtration(&c.frob, c.nilpotent.as_ref().unwrap()).unwrap();
        prop_assert!(filt.check().all_pass());
        for l in filt.levels() {
            let (qf, _) = quotient_filtration(&filt, l.k).unwrap();
            prop_assert!(qf.check().all_pass());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn nilpotent_filtration_axioms_surfaces(seed in any::<u64>(), dim in 0usize..4, k in 1i64..20) {
        let mut r = common::rng(seed);
        let mut g = Matrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let x = common::rational(&mut r);
                g.set(i, j, x.clone());
                g.set(j, i, x);
            }
        }
        prop_assume!(g.det().map(|d| !d.is_zero()).unwrap_or(true));
        let p = json!({"prim_dim": dim, "prim_pairing": g, "K": Rational::int(k)});
        let c = catalog("surface", &p).unwrap();
        let filt = nilpotent_filtration(&c.frob, c.nilpotent.as_ref().unwrap()).unwrap();
        prop_assert!(filt.check().all_pass(), "{:?}", filt.check().failures());
    }

    #[test]
    fn weight_filtration_properties(seed in any::<u64>(), n in 1usize..6) {
        // strictly upper triangular, hence nilpotent
        let mut r = common::rng(seed);
        let m = Matrix::from_fn(n, n, |i, j| if j > i { common::rational(&mut r) } else { Rational::zero() });
        let w = weight_filtration(&m).unwrap();
        for l in 0..w.len() {
            if l + 1 < w.len() {
                prop_assert!(w[l].is_subspace_of(&w[l + 1]));
            }
            let image = w[l].image_under(&m).unwrap();
            if l >= 2 {
                prop_assert!(image.is_subspace_of(&w[l - 2]));
            } else {
                prop_assert_eq!(image.dim(), 0);
            }
        }
        // Gr_{d−1+j} and Gr_{d−1−j} have equal dimension
        let gr = |l: usize| w[l].dim() - if l == 0 { 0 } else { w[l - 1].dim() };
        let mid = (w.len() - 1) / 2;
        for j in 0..=mid {
            prop_assert_eq!(gr(mid + j), gr(mid - j));
        }
        prop_assert_eq!(w.last().unwrap().dim(), n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn wdvv_for_v_quantum_product(seed in any::<u64>(), gi in 0usize..5) {
        let g = geometry(gi);
        let t = table(seed, &g, 3);
        let m = build_v_model(&g).unwrap();
        let f = quantum_product_v(&m, &t, 3).unwrap();
        let rep = frobenius_structure_check(&f);
        prop_assert!(rep.all_pass(), "{:?}", rep.failures());
    }

    #[test]
    fn routes_agree_and_structure_is_mixed_frobenius(seed in any::<u64>(), gi in 0usize..5) {
        let g = geometry(gi);
        let t = table(seed, &g, 3);
        let direct = local_product_direct(&g, &t, 3).unwrap();
        let pipeline = local_product_pipeline(&g, &t, 3).unwrap();
        prop_assert_eq!(route_difference(&direct, &pipeline).unwrap(), None);
        let rep = mfs_check(&direct);
        prop_assert!(rep.all_pass(), "{:?}", rep.failures());
        let rep = mfs_check(&pipeline);
        prop_assert!(rep.all_pass(), "{:?}", rep.failures());
    }

    #[test]
    fn curvature_vanishes_and_coordinates_are_flat(seed in any::<u64>(), gi in 0usize..5) {
        let g = geometry(gi);
        let t = table(seed, &g, 3);
        let m = local_product(&g, &t, 3).unwrap();
        let rep = curvature_check_all(&m).unwrap();
        prop_assert!(rep.all_pass(), "{:?}", rep.failures());
        let cand = match &g {
            Geometry::Toric(s) => toric_flat_coords(s, &t, 3).unwrap(),
            Geometry::P3 => p3_flat_coords(&t, 3).unwrap(),
        };
        let rep = verify_deformed_coords(&m, &cand).unwrap();
        prop_assert!(rep.all_pass(), "{:?}", rep.failures());
    }

    #[test]
    fn mfs_and_table_json_roundtrip(seed in any::<u64>(), gi in 0usize..5) {
        let g = geometry(gi);
        let t = table(seed, &g, 2);
        prop_assert_eq!(GWTable::from_json(&t.to_json()).unwrap(), t.clone());
        let m = local_product(&g, &t, 2).unwrap();
        let back = MFSData::from_json(&m.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), m.to_json());
    }
}
