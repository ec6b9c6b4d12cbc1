//! Real mixed Hodge structure on the even cohomology of a polarized surface.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::fdalg::{AlgebraError, FDAlgebra};
use crate::frobenius::{nilpotent_filtration, FrobError, FrobeniusAlgebra, FrobeniusFiltration, GradedLevel};
use crate::report::Report;
use crate::ringcore::{unit_vector, GaussianRational as G, Matrix, Rational, RingError, Subspace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MhsError {
    #[error("K must be positive, got {0}")]
    NonPositiveK(Rational),
    #[error("primitive pairing must be a symmetric {0}x{0} matrix")]
    BadPrimPairing(usize),
    #[error("Hodge decomposition has total dimension {got}, expected {expected}")]
    Inconsistent { got: usize, expected: usize },
    #[error(transparent)]
    Frob(#[from] FrobError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// H²_prim with its intersection form, and K = ∫n².
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct SurfaceHodgeInput {
    pub prim_dim: usize,
    pub prim_pairing: Matrix,
    #[serde(rename = "K")]
    pub k: Rational,
}

impl SurfaceHodgeInput {
    pub fn new(prim_pairing: Matrix, k: Rational) -> Self {
        SurfaceHodgeInput { prim_dim: prim_pairing.rows(), prim_pairing, k }
    }

    fn validate(&self) -> Result<(), MhsError> {
        if !self.k.is_positive() {
            return Err(MhsError::NonPositiveK(self.k.clone()));
        }
        let g = &self.prim_pairing;
        if g.rows() != self.prim_dim || g.cols() != self.prim_dim || !g.is_symmetric() {
            return Err(MhsError::BadPrimPairing(self.prim_dim));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.prim_dim + 3
    }
}

/// H^even of the surface in the basis 1, n, p₁…p_m, n².
pub fn surface_algebra(inp: &SurfaceHodgeInput) -> Result<FrobeniusAlgebra, MhsError> {
    inp.validate()?;
    let m = inp.prim_dim;
    let dim = m + 3;
    let top = dim - 1;
    let mut labels = vec!["1".to_string(), "n".to_string()];
    labels.extend((1..=m).map(|i| format!("p{i}")));
    labels.push("n2".into());
    let kinv = inp.k.recip()?;
    let alg = FDAlgebra::rational(labels, unit_vector(dim, 0), |i, j| {
        let mut v = vec![Rational::zero(); dim];
        match (i, j) {
            (0, x) | (x, 0) => v[x] = Rational::one(),
            (1, 1) => v[top] = Rational::one(),
            (a, b) if (2..top).contains(&a) && (2..top).contains(&b) => {
                v[top] = inp.prim_pairing.get(a - 2, b - 2) * &kinv;
            }
            _ => {}
        }
        v
    })?;
    let g = Matrix::from_fn(dim, dim, |i, j| match (i, j) {
        (0, x) | (x, 0) if x == top => inp.k.clone(),
        (1, 1) => inp.k.clone(),
        (a, b) if (2..top).contains(&a) && (2..top).contains(&b) => inp.prim_pairing.get(a - 2, b - 2).clone(),
        _ => Rational::zero(),
    });
    Ok(FrobeniusAlgebra::new(alg, g)?)
}

fn gvec(v: &[Rational]) -> Vec<G> {
    v.iter().map(|x| G::real(x.clone())).collect()
}

fn re_im(v: &[G]) -> (Vec<Rational>, Vec<Rational>) {
    (v.iter().map(|x| x.re.clone()).collect(), v.iter().map(|x| x.im.clone()).collect())
}

fn complexify(s: &Subspace<Rational>) -> Subspace<G> {
    Subspace::from_vectors(s.ambient_dim(), &s.basis().iter().map(|b| gvec(b)).collect::<Vec<_>>()).expect("dims agree")
}

/// Complex-bilinear extension of a graded pairing.
fn pair_c(level: &GradedLevel, x: &[G], y: &[G]) -> Option<G> {
    let (xr, xi) = re_im(x);
    let (yr, yi) = re_im(y);
    let cx: Vec<G> = level.coords(&xr)?.into_iter().zip(level.coords(&xi)?).map(|(a, b)| G::new(a, b)).collect();
    let cy: Vec<G> = level.coords(&yr)?.into_iter().zip(level.coords(&yi)?).map(|(a, b)| G::new(a, b)).collect();
    let g = level.pairing.map(|r| G::real(r.clone()));
    g.bilinear(&cx, &cy).ok()
}

/// The mixed Hodge data: real basis, 𝒲, ℱ, Hodge pieces and Q_k.
#[derive(Clone, PartialEq, Debug)]
pub struct MHSData {
    pub input: SurfaceHodgeInput,
    pub frobenius: FrobeniusAlgebra,
    pub filtration: FrobeniusFiltration,
    /// f₁ = 1+cn+c²n²/2, f₂ = n+cn², the primitive vectors, n².
    pub real_basis: Vec<Vec<G>>,
    /// 𝒲_k ⊗ ℂ for k = 0..=4.
    pub weight: Vec<Subspace<G>>,
    /// ℱ^p for p = 0, 1, 2.
    pub hodge_f: Vec<Subspace<G>>,
    /// Real basis of Gr_k given by members of `real_basis`.
    pub gr_basis: BTreeMap<u32, Vec<Vec<G>>>,
    pub hodge: BTreeMap<(u32, u32), Vec<Vec<G>>>,
    pub q: BTreeMap<u32, Matrix<G>>,
}

/// Real basis of A_ℝ = H^even(X,ℝ)·e^{cn} for c = √−1·c_im.
pub fn real_basis(inp: &SurfaceHodgeInput, c_im: &Rational) -> Vec<Vec<G>> {
    let dim = inp.dim();
    let top = dim - 1;
    let c = G::new(Rational::zero(), c_im.clone());
    let mut f1 = vec![G::real(Rational::zero()); dim];
    f1[0] = G::real(Rational::one());
    f1[1] = c.clone();
    f1[top] = c.clone() * c.clone() * G::real(Rational::new(1, 2));
    let mut f2 = vec![G::real(Rational::zero()); dim];
    f2[1] = G::real(Rational::one());
    f2[top] = c;
    let mut out = vec![f1, f2];
    out.extend((0..inp.prim_dim).map(|i| gvec(&unit_vector(dim, i + 2))));
    out.push(gvec(&unit_vector(dim, top)));
    out
}

impl MHSData {
    fn conj_matrix(&self) -> (Matrix<G>, Matrix<G>) {
        let f = Matrix::from_cols(self.input.dim(), &self.real_basis);
        let finv = f.inverse().expect("real basis is a basis");
        (f, finv)
    }

    /// Complex conjugation with respect to A_ℝ.
    pub fn conj(&self, v: &[G]) -> Vec<G> {
        let (f, finv) = self.conj_matrix();
        let a: Vec<G> = finv.mul_vec(v).expect("dims agree").into_iter().map(|x| x.conj()).collect();
        f.mul_vec(&a).expect("dims agree")
    }

    fn conj_space(&self, s: &Subspace<G>) -> Subspace<G> {
        let v: Vec<Vec<G>> = s.basis().iter().map(|b| self.conj(b)).collect();
        Subspace::from_vectors(s.ambient_dim(), &v).expect("dims agree")
    }

    /// Weil operator on Gr_k, returned as a representative in 𝒲_k.
    pub fn weil(&self, k: u32, x: &[G]) -> Option<Vec<G>> {
        let below = &self.weight[k as usize - 1];
        let pieces: Vec<((u32, u32), &Vec<G>)> =
            self.hodge.iter().filter(|((p, q), _)| p + q == k).flat_map(|(pq, vs)| vs.iter().map(move |v| (*pq, v))).collect();
        let comp: Vec<Vec<G>> = pieces.iter().map(|(_, v)| (*v).clone()).collect();
        let a = below.coords_mod(&comp, x).ok()??;
        let mut out = vec![G::real(Rational::zero()); x.len()];
        for (((p, q), v), c) in pieces.iter().zip(a) {
            let s = G::i_pow(*p as i64 - *q as i64) * c;
            for (o, vi) in out.iter_mut().zip(v.iter()) {
                *o = o.clone() + s.clone() * vi.clone();
            }
        }
        Some(out)
    }

    /// Q_k(x,y) = (i^k/2)((Cx,y)_{k−1} + (−1)^k (x,Cy)_{k−1}).
    pub fn q_form(&self, k: u32, x: &[G], y: &[G]) -> Option<G> {
        let level = self.filtration.level(k as i32 - 1)?;
        let cx = self.weil(k, x)?;
        let cy = self.weil(k, y)?;
        let a = pair_c(level, &cx, y)?;
        let b = pair_c(level, x, &cy)?;
        let sign = if k.is_multiple_of(2) { b } else { -b };
        Some(G::i_pow(k as i64) * G::real(Rational::new(1, 2)) * (a + sign))
    }

    /// H_k(x,y) = Q_k(Cx, ȳ) on the real Gr_k basis.
    pub fn hermitian(&self, k: u32) -> Option<Matrix<G>> {
        let basis = self.gr_basis.get(&k)?;
        let mut rows = Vec::new();
        for x in basis {
            let cx = self.weil(k, x)?;
            let mut row = Vec::new();
            for y in basis {
                row.push(self.q_form(k, &cx, &self.conj(y))?);
            }
            rows.push(row);
        }
        Some(Matrix::from_fn(basis.len(), basis.len(), |i, j| rows[i][j].clone()))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "input": self.input,
            "real_basis": self.real_basis,
            "weight": self.weight.iter().map(|s| s.basis().to_vec()).collect::<Vec<_>>(),
            "F": self.hodge_f.iter().map(|s| s.basis().to_vec()).collect::<Vec<_>>(),
            "hodge": hodge_dims(self).iter().map(|((p, q), d)| json!({"p": p, "q": q, "dim": d})).collect::<Vec<_>>(),
            "Q": self.q.iter().map(|(k, m)| json!({"k": k, "matrix": m})).collect::<Vec<_>>(),
        })
    }
}

/// Construct the mixed Hodge data with c = √−1.
pub fn build_mhs(inp: &SurfaceHodgeInput) -> Result<MHSData, MhsError> {
    let frobenius = surface_algebra(inp)?;
    let dim = inp.dim();
    let top = dim - 1;
    let filtration = nilpotent_filtration(&frobenius, &unit_vector(dim, 1))?;
    let real_basis = real_basis(inp, &Rational::one());
    let m = inp.prim_dim;
    let span = |idx: &[usize]| -> Subspace<G> {
        Subspace::from_vectors(dim, &idx.iter().map(|&i| real_basis[i].clone()).collect::<Vec<_>>()).expect("dims agree")
    };
    let prim_idx: Vec<usize> = (2..2 + m).collect();
    let w1: Vec<usize> = vec![1, m + 2];
    let w2: Vec<usize> = w1.iter().copied().chain(prim_idx.iter().copied()).collect();
    let weight = vec![Subspace::zero(dim), span(&w1), span(&w2), span(&w2), Subspace::full(dim)];
    let std = |idx: &[usize]| -> Subspace<G> {
        Subspace::from_vectors(dim, &idx.iter().map(|&i| gvec(&unit_vector(dim, i))).collect::<Vec<_>>()).expect("dims agree")
    };
    let hodge_f = vec![Subspace::full(dim), std(&(0..top).collect::<Vec<_>>()), std(&[0])];
    let mut gr_basis = BTreeMap::new();
    gr_basis.insert(1, w1.iter().map(|&i| real_basis[i].clone()).collect::<Vec<_>>());
    gr_basis.insert(2, prim_idx.iter().map(|&i| real_basis[i].clone()).collect());
    gr_basis.insert(3, Vec::new());
    gr_basis.insert(4, vec![real_basis[0].clone()]);

    let mut data = MHSData {
        input: inp.clone(),
        frobenius,
        filtration,
        real_basis,
        weight,
        hodge_f,
        gr_basis,
        hodge: BTreeMap::new(),
        q: BTreeMap::new(),
    };
    data.hodge = compute_hodge(&data)?;
    for k in 1..=4u32 {
        let basis = data.gr_basis[&k].clone();
        let mut entries = Vec::new();
        for x in &basis {
            for y in &basis {
                entries.push(data.q_form(k, x, y).ok_or(MhsError::Inconsistent { got: 0, expected: dim })?);
            }
        }
        let n = basis.len();
        data.q.insert(k, Matrix::from_fn(n, n, |i, j| entries[i * n + j].clone()));
    }
    Ok(data)
}

fn compute_hodge(m: &MHSData) -> Result<BTreeMap<(u32, u32), Vec<Vec<G>>>, MhsError> {
    let mut out = BTreeMap::new();
    let mut total = 0;
    for k in 1..=4u32 {
        let wk = &m.weight[k as usize];
        let below = &m.weight[k as usize - 1];
        for p in 0..=k.min(2) {
            let q = k - p;
            if q > 2 {
                continue;
            }
            let fp = m.hodge_f[p as usize].intersect(wk)?.sum(below)?;
            let fq = m.conj_space(&m.hodge_f[q as usize].intersect(wk)?).sum(below)?;
            let cell = fp.intersect(&fq)?;
            let reps = below.complement_in(&cell)?;
            total += reps.len();
            out.insert((p, q), reps);
        }
    }
    if total != m.input.dim() {
        return Err(MhsError::Inconsistent { got: total, expected: m.input.dim() });
    }
    Ok(out)
}

/// Nonzero dimensions of the Hodge pieces A^{p,q}.
pub fn hodge_dims(m: &MHSData) -> BTreeMap<(u32, u32), usize> {
    m.hodge.iter().filter(|(_, v)| !v.is_empty()).map(|(pq, v)| (*pq, v.len())).collect()
}

pub fn hodge_table(m: &MHSData) -> &BTreeMap<(u32, u32), Vec<Vec<G>>> {
    &m.hodge
}

/// Symmetry of Q_k, Hermitian symmetry and positivity of H_k, and 𝒲 against the nilpotent filtration.
pub fn polarization_check(m: &MHSData) -> Report {
    let mut rep = Report::new();
    rep.skip("b1_even_assumed");

    let w = (1..=4u32).find(|&k| {
        let ideal = m.filtration.ideal(k as i32 - 1).map(complexify);
        ideal.as_ref() != Some(&m.weight[k as usize])
    });
    rep.record("weight_matches_filtration", w.map(|k| json!({"k": k})));

    let w = (1..=4u32).find_map(|k| {
        let dims = hodge_dims(m);
        (0..=k).find_map(|p| {
            let a = dims.get(&(p, k - p)).copied().unwrap_or(0);
            let b = dims.get(&(k - p, p)).copied().unwrap_or(0);
            (a != b).then(|| json!({"p": p, "q": k - p}))
        })
    });
    rep.record("hodge_symmetry", w);

    for k in [1u32, 2, 4] {
        let qm = &m.q[&k];
        let sign = if k % 2 == 0 { G::real(Rational::one()) } else { G::real(-Rational::one()) };
        let w = (0..qm.rows())
            .flat_map(|i| (0..qm.rows()).map(move |j| (i, j)))
            .find(|&(i, j)| *qm.get(i, j) != sign.clone() * qm.get(j, i).clone() || !qm.get(i, j).is_real())
            .map(|(i, j)| json!({"i": i, "j": j}));
        rep.record(format!("Q{k}.symmetry"), w);

        let name = format!("H{k}.positive");
        let Some(h) = m.hermitian(k) else {
            rep.fail(name, json!({"reason": "Weil operator undefined"}));
            continue;
        };
        let w = (0..h.rows())
            .flat_map(|i| (0..h.rows()).map(move |j| (i, j)))
            .find(|&(i, j)| *h.get(i, j) != h.get(j, i).conj())
            .map(|(i, j)| json!({"i": i, "j": j}));
        rep.record(format!("H{k}.hermitian"), w);
        let minors = h.leading_minors().expect("square");
        let w = minors
            .iter()
            .enumerate()
            .find(|(_, d)| !d.is_real() || !d.re.is_positive())
            .map(|(i, d)| json!({"minor": i + 1, "value": d.to_string()}));
        rep.record(name, w);
    }

    let kk = G::real(m.input.k.clone());
    let q1 = &m.q[&1];
    let explicit = *q1.get(1, 0) == kk && q1.get(0, 0).re.is_zero() && q1.get(0, 0).im.is_zero() && q1.get(1, 1).re.is_zero();
    let q2 = m.q[&2] == m.input.prim_pairing.map(|x| G::real(-x.clone()));
    let q4 = m.q[&4].get(0, 0).clone() == kk;
    rep.record(
        "Q.explicit_formulas",
        (!(explicit && q2 && q4)).then(|| json!({"Q1": explicit, "Q2": q2, "Q4": q4})),
    );
    rep
}
