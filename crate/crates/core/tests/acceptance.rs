//! One line per acceptance criterion.

mod common;

use mfslab::deformed::{curvature_check_all, p3_flat_coords, toric_flat_coords, verify_deformed_coords};
use mfslab::frobenius::{nilpotent_filtration, quotient_filtration, weight_relation_report, FrobeniusFiltration};
use mfslab::localqh::{build_v_model, catalog, catalog_examples, local_product, quantum_product_v, Geometry, GWTable, SurfaceData};
use mfslab::mfs::{frobenius_structure_check, mfs_check};
use mfslab::mhs::{build_mhs, hodge_dims, polarization_check, SurfaceHodgeInput};
use mfslab::report::Status;
use mfslab::ringcore::{q, unit_vector, Matrix, Rational};
use serde_json::json;

type Outcome = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e(n: usize, i: usize) -> Vec<Rational> {
    unit_vector(n, i)
}

fn pair(f: &FrobeniusFiltration, k: i32, x: &[Rational], y: &[Rational]) -> Option<Rational> {
    f.pair(k, x, y)
}

fn criterion_1() -> Outcome {
    for (d, m) in [(3usize, 1i64), (4, -4), (5, 2)] {
        let c = catalog("pn", &json!({"d": d, "m": m})).map_err(|e| e.to_string())?;
        let filt = nilpotent_filtration(&c.frob, c.nilpotent.as_ref().unwrap()).map_err(|e| e.to_string())?;
        // e_i = n^i/m^i is the basis vector h^i; e_d = 1
        for i in 1..d {
            for j in 1..d {
                let want = if i + j == d { Rational::new(1, m) } else { Rational::zero() };
                let got = pair(&filt, 0, &e(d, i), &e(d, j));
                ensure(got == Some(want.clone()), || format!("P^{}: (e{i},e{j})_0 = {got:?}, want {want}", d - 1))?;
            }
        }
        let want = Rational::int(m).pow(d as i32 - 1);
        let got = pair(&filt, d as i32, &e(d, 0), &e(d, 0));
        ensure(got == Some(want.clone()), || format!("P^{}: (e_d,e_d)_d = {got:?}, want {want}", d - 1))?;
        ensure(filt.check().all_pass(), || format!("P^{} filtration axioms", d - 1))?;
    }
    Ok(())
}

fn criterion_2() -> Outcome {
    for d in 2..=4usize {
        let c = catalog("wps", &json!({"d": d})).map_err(|e| e.to_string())?;
        let n = 2 * d;
        let filt = nilpotent_filtration(&c.frob, c.nilpotent.as_ref().unwrap()).map_err(|e| e.to_string())?;
        let h = |i: usize| e(n, i);
        let ee = |i: usize| e(n, d + i);
        for i in 1..=d {
            for j in 1..=d {
                let want = if i + j == d + 1 { Rational::new(1, (d * d) as i64) } else { Rational::zero() };
                ensure(pair(&filt, 0, &h(i), &h(j)) == Some(want), || format!("wps({d}): (H^{i},H^{j})_0"))?;
            }
        }
        for i in 1..d {
            for j in 1..d {
                let want = if i + j == d { Rational::new(1, d as i64) } else { Rational::zero() };
                ensure(pair(&filt, 1, &ee(i), &ee(j)) == Some(want), || format!("wps({d}): (E^{i},E^{j})_1"))?;
            }
        }
        let top = Rational::int(d as i64).pow(d as i32 - 1);
        ensure(pair(&filt, d as i32 + 1, &h(0), &h(0)) == Some(top), || format!("wps({d}): (1,1)_{}", d + 1))?;

        // quotient by I_0 against P^{d−1} with m = d, levels shifted by one
        let (qf, proj) = quotient_filtration(&filt, 0).map_err(|e| e.to_string())?;
        let pn = catalog("pn", &json!({"d": d, "m": d})).map_err(|e| e.to_string())?;
        let pf = nilpotent_filtration(&pn.frob, pn.nilpotent.as_ref().unwrap()).map_err(|e| e.to_string())?;
        let lift = |i: usize| if i == 0 { h(0) } else { ee(i) };
        let image = |v: Vec<Rational>| proj.mul_vec(&v).expect("projection");
        for i in 0..d {
            for j in 0..d {
                let prod = c.frob.algebra().multiply(&lift(i), &lift(j)).unwrap();
                let want = if i + j < d { image(lift(i + j)) } else { vec![Rational::zero(); qf.algebra().dim()] };
                ensure(image(prod) == want, || format!("wps({d}) quotient product E^{i}E^{j}"))?;
            }
        }
        for k in 0..=d as i32 {
            for i in 0..d {
                for j in 0..d {
                    let got = qf.pair(k + 1, &image(lift(i)), &image(lift(j)));
                    let want = pf.pair(k, &e(d, i), &e(d, j));
                    ensure(got == want, || format!("wps({d}) quotient level {}: ({i},{j}) {got:?} vs {want:?}", k + 1))?;
                }
            }
        }
        ensure(qf.check().all_pass(), || format!("wps({d}) quotient axioms"))?;
    }

    let c = catalog("p1124", &json!({})).map_err(|e| e.to_string())?;
    let filt = nilpotent_filtration(&c.frob, c.nilpotent.as_ref().unwrap()).map_err(|e| e.to_string())?;
    let v = |i: usize| e(8, i);
    // basis 1, H, E1, E2, H², HE2, E1E2, H³
    let hp = [1usize, 4, 7];
    for (a, &i) in hp.iter().enumerate() {
        for (b, &j) in hp.iter().enumerate() {
            let want = if a + b + 2 == 4 { q(1, 32) } else { Rational::zero() };
            ensure(pair(&filt, 0, &v(i), &v(j)) == Some(want), || format!("P(1,1,2,4): (H^{},H^{})_0", a + 1, b + 1))?;
        }
    }
    ensure(pair(&filt, 1, &v(2), &v(6)) == Some(q(1, 4)), || "P(1,1,2,4): (E1,E1E2)_1".into())?;
    ensure(pair(&filt, 2, &v(3), &v(3)) == Some(q(1, 2)), || "P(1,1,2,4): (E2,E2)_2".into())?;
    ensure(pair(&filt, 4, &v(0), &v(0)) == Some(q(8, 1)), || "P(1,1,2,4): (1,1)_4".into())?;
    let dims: Vec<usize> = filt.dims().iter().map(|x| x.1).collect();
    ensure(dims == vec![4, 6, 7, 7, 8], || format!("P(1,1,2,4) dims {dims:?}"))?;
    let (qf, proj) = quotient_filtration(&filt, 0).map_err(|e| e.to_string())?;
    let qdims: Vec<(i32, usize)> = qf.dims();
    ensure(qdims == vec![(1, 2), (2, 3), (3, 3), (4, 4)], || format!("P(1,1,2,4) quotient dims {qdims:?}"))?;
    let image = |x: Vec<Rational>| proj.mul_vec(&x).unwrap();
    let l1 = qf.ideal(1).unwrap();
    ensure(l1.contains(&image(v(2))) && l1.contains(&image(v(6))), || "I'_1 = <E1, E1E2>".into())?;
    ensure(qf.ideal(2).unwrap().contains(&image(v(3))), || "I'_2 contains E2".into())?;
    for sq in [2usize, 3] {
        let p = c.frob.algebra().multiply(&v(sq), &v(sq)).unwrap();
        ensure(image(p).iter().all(Rational::is_zero), || "quotient relations E1² = E2² = 0".into())?;
    }
    ensure(qf.check().all_pass(), || "P(1,1,2,4) quotient axioms".into())
}

fn criterion_3() -> Outcome {
    for (name, s) in [("P2", SurfaceData::p2()), ("F0", SurfaceData::f0())] {
        let r = s.r();
        let m = build_v_model(&Geometry::Toric(s.clone())).map_err(|e| e.to_string())?;
        let n = m.dim();
        let filt = nilpotent_filtration(&m.classical, &m.nilpotent).map_err(|e| e.to_string())?;
        let dims: Vec<usize> = filt.dims().iter().map(|x| x.1).collect();
        let want = vec![r + 2, r + 4, 2 * r + 3, 2 * r + 3, 2 * r + 4];
        ensure(dims == want, || format!("{name}: dims {dims:?}, want {want:?}"))?;
        let ix = |l: String| e(n, m.index(&l).unwrap());
        ensure(pair(&filt, 0, &ix("D0".into()), &ix(format!("D{}", r + 1))) == Some(Rational::one()), || format!("{name}: (D0,D_r+1)_0"))?;
        let top = ix(format!("G{}", r + 1));
        let dual = m.dual[m.index(&format!("G{}", r + 1)).unwrap()].clone();
        ensure(pair(&filt, 1, &dual, &top) == Some(Rational::one()), || format!("{name}: level 1 off-diagonal"))?;
        ensure(pair(&filt, 1, &dual, &dual) == Some(Rational::zero()), || format!("{name}: level 1 diagonal"))?;
        ensure(pair(&filt, 1, &top, &top) == Some(Rational::zero()), || format!("{name}: level 1 diagonal"))?;
        let (bd, kappa) = (s.b_dual(), s.kappa());
        for i in 1..=r {
            for j in 1..=r {
                let want0 = s.c().get(i - 1, j - 1).clone();
                ensure(pair(&filt, 0, &ix(format!("D{i}")), &ix(format!("D{j}"))) == Some(want0), || format!("{name}: (D{i},D{j})_0"))?;
                let want = s.c().get(i - 1, j - 1) - &(&bd[i - 1] * &bd[j - 1]) / &kappa;
                let got = pair(&filt, 2, &ix(format!("G{i}")), &ix(format!("G{j}")));
                ensure(got == Some(want.clone()), || format!("{name}: (G{i},G{j})_2 = {got:?}, want {want}"))?;
            }
        }
        let got = pair(&filt, 4, &ix("G0".into()), &ix("G0".into()));
        ensure(got == Some(kappa.clone()), || format!("{name}: top pairing {got:?}, want {kappa}"))?;
        ensure(filt.check().all_pass(), || format!("{name}: filtration axioms"))?;
    }
    Ok(())
}

fn criterion_4() -> Outcome {
    let m = build_v_model(&Geometry::P3).map_err(|e| e.to_string())?;
    let n = m.dim();
    let filt = nilpotent_filtration(&m.classical, &m.nilpotent).map_err(|e| e.to_string())?;
    let ix = |l: String| e(n, m.index(&l).unwrap());
    let dims: Vec<usize> = filt.dims().iter().map(|x| x.1).collect();
    ensure(dims == vec![4, 7, 7, 7, 7, 8], || format!("P3 dims {dims:?}"))?;
    for k in 0..=3 {
        for l in 0..=3 {
            let want = if k + l == 3 { Rational::one() } else { Rational::zero() };
            ensure(pair(&filt, 0, &ix(format!("D{k}")), &ix(format!("D{l}"))) == Some(want), || format!("P3 (D{k},D{l})_0"))?;
        }
    }
    for k in 1..=3 {
        for l in 1..=3 {
            let want = if k + l == 4 { q(-1, 4) } else { Rational::zero() };
            let got = pair(&filt, 1, &ix(format!("G{k}")), &ix(format!("G{l}")));
            ensure(got == Some(want.clone()), || format!("P3 (G{k},G{l})_1 = {got:?}, want {want}"))?;
        }
    }
    let got = pair(&filt, 5, &ix("G0".into()), &ix("G0".into()));
    ensure(got == Some(Rational::int(64)), || format!("P3 (1,1)_5 = {got:?}"))?;
    ensure(filt.check().all_pass(), || "P3 filtration axioms".into())
}

const TABLES: usize = 20;
const ORDER: u32 = 3;

fn family() -> Vec<(&'static str, Geometry, Vec<GWTable>)> {
    common::geometries()
        .into_iter()
        .enumerate()
        .map(|(gi, (name, g))| {
            let mut r = common::rng(1000 + gi as u64);
            let tables = (0..TABLES).map(|_| common::random_table(&mut r, &g, ORDER)).collect();
            (name, g, tables)
        })
        .collect()
}

fn criterion_5_6_7() -> (Outcome, Outcome, Outcome) {
    let (mut c5, mut c6, mut c7) = (Ok(()), Ok(()), Ok(()));
    for (name, g, tables) in family() {
        for (ti, t) in tables.iter().enumerate() {
            let m = match local_product(&g, t, ORDER) {
                Ok(m) => m,
                Err(err) => {
                    c5 = c5.and(Err(format!("{name} table {ti}: {err}")));
                    continue;
                }
            };
            let rep = mfs_check(&m);
            if !rep.all_pass() && c5.is_ok() {
                c5 = Err(format!("{name} table {ti}: {:?}", rep.failures()));
            }
            match curvature_check_all(&m) {
                Ok(rep) if rep.all_pass() => {}
                other if c6.is_ok() => c6 = Err(format!("{name} table {ti}: {other:?}")),
                _ => {}
            }
            let cand = match &g {
                Geometry::Toric(s) => toric_flat_coords(s, t, ORDER),
                Geometry::P3 => p3_flat_coords(t, ORDER),
            };
            match cand.and_then(|c| verify_deformed_coords(&m, &c)) {
                Ok(rep) if rep.all_pass() => {}
                other if c7.is_ok() => c7 = Err(format!("{name} table {ti}: {other:?}")),
                _ => {}
            }
        }
    }
    (c5, c6, c7)
}

fn criterion_8() -> Outcome {
    let f0 = |s: i64| SurfaceHodgeInput::new(Matrix::from_rows(vec![vec![Rational::int(-2 * s)]]).unwrap(), Rational::int(2));
    let m = build_mhs(&f0(1)).map_err(|e| e.to_string())?;
    let dims: Vec<((u32, u32), usize)> = hodge_dims(&m).into_iter().collect();
    let want = vec![((0, 1), 1), ((1, 0), 1), ((1, 1), 1), ((2, 2), 1)];
    ensure(dims == want, || format!("F0 Hodge dims {dims:?}"))?;
    let rep = polarization_check(&m);
    ensure(rep.all_pass(), || format!("F0 polarization {:?}", rep.failures()))?;
    let flipped = polarization_check(&build_mhs(&f0(-1)).map_err(|e| e.to_string())?);
    ensure(flipped.status("H2.positive") == Some(Status::Fail), || "flipped prim pairing should fail H2".into())?;
    ensure(flipped.status("H1.positive") == Some(Status::Pass), || "flipped prim pairing keeps H1".into())
}

/// Literal statement outcome, plus whether the observed pattern is the predicted one.
fn criterion_9() -> (Outcome, Outcome) {
    let mut literal_failures = Vec::new();
    let mut unexpected = Vec::new();
    let examples = catalog_examples();
    for c in &examples {
        let nil = c.nilpotent.as_ref().unwrap();
        let mm = c.frob.algebra().mult_matrix(nil).unwrap();
        let filt = nilpotent_filtration(&c.frob, nil).unwrap();
        let ideals: Vec<_> = filt.levels().iter().map(|l| l.ideal.clone()).collect();
        let rep = weight_relation_report(&mm, &ideals).unwrap();
        let ker_is_im = mm.kernel() == mm.image();
        if rep.status("image_form") != Some(Status::Pass) {
            unexpected.push(format!("{} {}: image form fails", c.name, c.params));
        }
        let kernel_ok = rep.status("kernel_form") == Some(Status::Pass);
        if kernel_ok != ker_is_im {
            unexpected.push(format!("{} {}: kernel form {kernel_ok}, Ker n = Im n {ker_is_im}", c.name, c.params));
        }
        if !kernel_ok {
            literal_failures.push(format!("{} {}", c.name, c.params));
        }
    }
    let literal = if literal_failures.is_empty() {
        Ok(())
    } else {
        Err(format!(
            "Ker n + W form fails on {} of {} catalog algebras (Im n + W holds on all)",
            literal_failures.len(),
            examples.len()
        ))
    };
    let pattern = if unexpected.is_empty() { Ok(()) } else { Err(unexpected.join("; ")) };
    (literal, pattern)
}

fn criterion_10() -> Outcome {
    for c in catalog_examples() {
        let filt = nilpotent_filtration(&c.frob, c.nilpotent.as_ref().unwrap()).map_err(|e| e.to_string())?;
        let rep = filt.check();
        ensure(rep.all_pass(), || format!("{} {}: {:?}", c.name, c.params, rep.failures()))?;
        for l in filt.levels() {
            let (qf, _) = quotient_filtration(&filt, l.k).map_err(|e| e.to_string())?;
            let rep = qf.check();
            ensure(rep.all_pass(), || format!("{} quotient at {}: {:?}", c.name, l.k, rep.failures()))?;
        }
    }
    for (name, g, tables) in family() {
        let m = build_v_model(&g).map_err(|e| e.to_string())?;
        for t in tables.iter().take(5) {
            let f = quantum_product_v(&m, t, ORDER).map_err(|e| e.to_string())?;
            let rep = frobenius_structure_check(&f);
            ensure(rep.all_pass(), || format!("{name} quantum product: {:?}", rep.failures()))?;
        }
    }
    let mut r = common::rng(7);
    let ring = common::series_ring(3);
    for case in 0..1000 {
        let (f, g) = (common::random_series(&mut r, &ring, 4), common::random_series(&mut r, &ring, 4));
        for v in ["x", "y", "t1"] {
            let lhs = (&f * &g).derive(v).unwrap();
            let rhs = &(&f.derive(v).unwrap() * &g) + &(&f * &g.derive(v).unwrap());
            ensure(lhs == rhs, || format!("Leibniz fails in {v} on case {case}"))?;
        }
        let a = f.derive("x").unwrap().derive("t1").unwrap();
        let b = f.derive("t1").unwrap().derive("x").unwrap();
        ensure(a == b, || format!("partials do not commute on case {case}"))?;
    }
    Ok(())
}

fn line(n: u32, what: &str, o: &Outcome) {
    match o {
        Ok(()) => println!("criterion {n}: PASS  {what}"),
        Err(e) => println!("criterion {n}: FAIL  {what}: {e}"),
    }
}

fn main() {
    let c1 = criterion_1();
    line(1, "projective space nilpotent filtration goldens", &c1);
    let c2 = criterion_2();
    line(2, "weighted projective space goldens and quotients", &c2);
    let c3 = criterion_3();
    line(3, "toric V-model filtration and bilinear forms", &c3);
    let c4 = criterion_4();
    line(4, "P3 V-model bilinear forms", &c4);
    let (c5, c6, c7) = criterion_5_6_7();
    line(5, "local MFS axioms and route equality, 20 random tables per target", &c5);
    line(6, "deformed connection flat on every level", &c6);
    line(7, "deformed flat coordinates satisfy the flat-dual equations", &c7);
    let c8 = criterion_8();
    line(8, "F0 Hodge table and polarization", &c8);
    let (c9, c9_pattern) = criterion_9();
    line(9, "I_k = Ker n + W_{k+d-2} on every catalog algebra", &c9);
    let c10 = criterion_10();
    line(10, "filtration axioms, WDVV, series Leibniz rule", &c10);

    for (i, c) in [c1, c2, c3, c4, c5, c6, c7, c8, c10].iter().enumerate() {
        assert!(c.is_ok(), "criterion {} failed: {:?}", [1, 2, 3, 4, 5, 6, 7, 8, 10][i], c);
    }
    // the literal kernel form is false; the image form and the predicted failure pattern must hold
    assert!(c9_pattern.is_ok(), "criterion 9 pattern: {c9_pattern:?}");
}
