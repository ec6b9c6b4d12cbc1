//! Frobenius algebras, Frobenius filtrations, and the nilpotent and quotient constructions.

use serde_json::{json, Value};
use thiserror::Error;

use crate::fdalg::{AlgebraError, FDAlgebra, IdealSubspace};
use crate::report::Report;
use crate::ringcore::{is_zero_vec, unit_vector, Matrix, Rational, RingError, Subspace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrobError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("element is not nilpotent")]
    NotNilpotent,
    #[error("pairing at level {0} is not well defined")]
    IllDefined(i32),
    #[error("pairing at level {0} is degenerate")]
    Degenerate(i32),
    #[error("no level {0} in filtration")]
    InvalidLevel(i32),
    #[error("pairing matrix has size {got}, algebra has dimension {dim}")]
    PairingSize { dim: usize, got: usize },
}

/// Commutative algebra with an invariant symmetric pairing.
#[derive(Clone, PartialEq, Debug)]
pub struct FrobeniusAlgebra {
    algebra: FDAlgebra,
    pairing: Matrix,
}

impl FrobeniusAlgebra {
    pub fn new(algebra: FDAlgebra, pairing: Matrix) -> Result<Self, FrobError> {
        if pairing.rows() != algebra.dim() || pairing.cols() != algebra.dim() {
            return Err(FrobError::PairingSize { dim: algebra.dim(), got: pairing.rows() });
        }
        Ok(FrobeniusAlgebra { algebra, pairing })
    }

    pub fn algebra(&self) -> &FDAlgebra {
        &self.algebra
    }

    pub fn pairing(&self) -> &Matrix {
        &self.pairing
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn pair(&self, x: &[Rational], y: &[Rational]) -> Rational {
        self.pairing.bilinear(x, y).expect("dims agree")
    }

    pub fn to_json(&self) -> Value {
        json!({"algebra": self.algebra.to_json(), "pairing": self.pairing})
    }

    pub fn from_json(v: &Value) -> Result<Self, FrobError> {
        let alg = FDAlgebra::<Rational>::from_json(v.get("algebra").unwrap_or(v))?;
        let pairing: Matrix = serde_json::from_value(v.get("pairing").cloned().unwrap_or(Value::Null))
            .map_err(|e| FrobError::Algebra(AlgebraError::Invalid(format!("pairing: {e}"))))?;
        Self::new(alg, pairing)
    }

    /// Algebra axioms, symmetry, nondegeneracy and ⟨x∘y,z⟩ = ⟨x,y∘z⟩.
    pub fn frobenius_check(&self) -> Report {
        let mut rep = Report::new();
        rep.extend_prefixed("algebra.", self.algebra.algebra_check());
        let n = self.dim();
        let g = &self.pairing;

        let w = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .find(|&(i, j)| g.get(i, j) != g.get(j, i))
            .map(|(i, j)| json!({"i": j, "j": i}));
        rep.record("symmetric", w);

        let det = g.det().expect("square");
        rep.record("nondegenerate", det.is_zero().then(|| json!({"det": det.to_string()})));

        let mut w = None;
        'f: for i in 0..n {
            for j in 0..n {
                let ij = self.algebra.multiply(&unit_vector(n, i), &unit_vector(n, j)).expect("dims agree");
                for k in 0..n {
                    let jk = self.algebra.multiply(&unit_vector(n, j), &unit_vector(n, k)).expect("dims agree");
                    let lhs = self.pair(&ij, &unit_vector(n, k));
                    let rhs = self.pair(&unit_vector(n, i), &jk);
                    if lhs != rhs {
                        w = Some(json!({"i": i, "j": j, "k": k, "lhs": lhs.to_string(), "rhs": rhs.to_string()}));
                        break 'f;
                    }
                }
            }
        }
        rep.record("invariance", w);
        rep
    }

    pub fn power(&self, x: &[Rational], k: usize) -> Vec<Rational> {
        let mut p = self.algebra.unit().to_vec();
        for _ in 0..k {
            p = self.algebra.multiply(&p, x).expect("dims agree");
        }
        p
    }

    /// Least d with x^d = 0.
    pub fn nilpotent_order(&self, x: &[Rational]) -> Result<usize, FrobError> {
        let mut p = self.algebra.unit().to_vec();
        for d in 0..=self.dim() + 1 {
            if is_zero_vec(&p) {
                return Ok(d);
            }
            p = self.algebra.multiply(&p, x)?;
        }
        Err(FrobError::NotNilpotent)
    }
}

pub fn frobenius_check(f: &FrobeniusAlgebra) -> Report {
    f.frobenius_check()
}

pub fn nilpotent_order(f: &FrobeniusAlgebra, n: &[Rational]) -> Result<usize, FrobError> {
    f.nilpotent_order(n)
}

/// One graded piece I_k / I_{k−1} with its pairing on a complement basis.
#[derive(Clone, PartialEq, Debug)]
pub struct GradedLevel {
    pub k: i32,
    pub ideal: Subspace<Rational>,
    pub below: Subspace<Rational>,
    pub complement: Vec<Vec<Rational>>,
    pub pairing: Matrix,
}

impl GradedLevel {
    pub fn rank(&self) -> usize {
        self.complement.len()
    }

    /// Coordinates of x ∈ I_k modulo I_{k−1} along the complement basis.
    pub fn coords(&self, x: &[Rational]) -> Option<Vec<Rational>> {
        if !self.ideal.contains(x) {
            return None;
        }
        self.below.coords_mod(&self.complement, x).ok().flatten()
    }

    pub fn pair(&self, x: &[Rational], y: &[Rational]) -> Option<Rational> {
        let a = self.coords(x)?;
        let b = self.coords(y)?;
        self.pairing.bilinear(&a, &b).ok()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "k": self.k,
            "ideal": self.ideal.basis(),
            "basis": self.complement,
            "pairing": self.pairing,
        })
    }
}

/// Increasing exhaustive chain of ideals with graded pairings.
#[derive(Clone, PartialEq, Debug)]
pub struct FrobeniusFiltration {
    algebra: FDAlgebra,
    levels: Vec<GradedLevel>,
}

impl FrobeniusFiltration {
    pub fn new(algebra: FDAlgebra, levels: Vec<GradedLevel>) -> Self {
        FrobeniusFiltration { algebra, levels }
    }

    pub fn algebra(&self) -> &FDAlgebra {
        &self.algebra
    }

    pub fn levels(&self) -> &[GradedLevel] {
        &self.levels
    }

    pub fn level(&self, k: i32) -> Option<&GradedLevel> {
        self.levels.iter().find(|l| l.k == k)
    }

    pub fn ideal(&self, k: i32) -> Option<&Subspace<Rational>> {
        self.level(k).map(|l| &l.ideal)
    }

    pub fn pair(&self, k: i32, x: &[Rational], y: &[Rational]) -> Option<Rational> {
        self.level(k)?.pair(x, y)
    }

    pub fn dims(&self) -> Vec<(i32, usize)> {
        self.levels.iter().map(|l| (l.k, l.ideal.dim())).collect()
    }

    /// Chain, ideal, symmetry, nondegeneracy and graded invariance checks.
    pub fn check(&self) -> Report {
        let mut rep = Report::new();
        let n = self.algebra.dim();
        let mut w = None;
        let mut prev = Subspace::zero(n);
        for l in &self.levels {
            if l.below != prev || !prev.is_subspace_of(&l.ideal) {
                w = Some(json!({"k": l.k}));
                break;
            }
            prev = l.ideal.clone();
        }
        rep.record("increasing", w);
        let top_full = self.levels.last().map_or(n == 0, |l| l.ideal.dim() == n);
        rep.record("exhaustive", (!top_full).then(|| json!({"top_dim": self.levels.last().map(|l| l.ideal.dim())})));

        let w = self
            .levels
            .iter()
            .find_map(|l| self.algebra.is_ideal(&l.ideal).map(|(b, v)| json!({"k": l.k, "basis": b, "vector": v})));
        rep.record("ideals", w);

        let w = self.levels.iter().find_map(|l| {
            let g = &l.pairing;
            (0..g.rows())
                .flat_map(|i| (0..i).map(move |j| (i, j)))
                .find(|&(i, j)| g.get(i, j) != g.get(j, i))
                .map(|(i, j)| json!({"k": l.k, "i": j, "j": i}))
        });
        rep.record("symmetric", w);

        let w = self
            .levels
            .iter()
            .find(|l| !l.pairing.det().map(|d| !d.is_zero()).unwrap_or(false))
            .map(|l| json!({"k": l.k}));
        rep.record("nondegenerate", w);

        let mut w = None;
        'f: for l in &self.levels {
            for i in 0..n {
                let a = unit_vector(n, i);
                for (x_i, x) in l.complement.iter().enumerate() {
                    let ax = self.algebra.multiply(&a, x).expect("dims agree");
                    for (y_i, y) in l.complement.iter().enumerate() {
                        let ay = self.algebra.multiply(&a, y).expect("dims agree");
                        let lhs = l.pair(&ax, y);
                        let rhs = l.pair(x, &ay);
                        if lhs.is_none() || lhs != rhs {
                            w = Some(json!({"k": l.k, "a": i, "x": x_i, "y": y_i}));
                            break 'f;
                        }
                    }
                }
            }
        }
        rep.record("invariance", w);
        rep
    }

    pub fn to_json(&self) -> Value {
        json!({
            "algebra": self.algebra.to_json(),
            "levels": self.levels.iter().map(GradedLevel::to_json).collect::<Vec<_>>(),
        })
    }
}

/// Least d with M^d = 0, or an error.
pub fn matrix_nilpotent_order(m: &Matrix) -> Result<usize, FrobError> {
    if !m.is_square() {
        return Err(RingError::NotSquare(m.rows(), m.cols()).into());
    }
    let mut p = Matrix::identity(m.rows());
    for d in 0..=m.rows() + 1 {
        if p.is_zero() {
            return Ok(d.max(1));
        }
        p = p.mul(m)?;
    }
    Err(FrobError::NotNilpotent)
}

/// Levels 0..=d of the filtration I_k = Im M + Ker M^k with pairings from `metric`.
///
/// `m` is the matrix of n∘ acting on column vectors.
pub fn nilpotent_levels(m: &Matrix, metric: &Matrix) -> Result<(usize, Vec<GradedLevel>), FrobError> {
    let d = matrix_nilpotent_order(m)?;
    let dim = m.rows();
    let image = m.image();
    let mut levels = Vec::new();

    // level 0: x = n x̃
    let lifts: Vec<Vec<Rational>> = image
        .basis()
        .iter()
        .map(|x| m.solve(x).map(|s| s.expect("image vector has a preimage")))
        .collect::<Result<_, _>>()?;
    for kv in m.kernel().basis() {
        for y in image.basis() {
            if !metric.bilinear(kv, y)?.is_zero() {
                return Err(FrobError::IllDefined(0));
            }
        }
    }
    let g0 = Matrix::from_fn(lifts.len(), lifts.len(), |a, b| metric.bilinear(&lifts[a], &image.basis()[b]).expect("dims agree"));
    levels.push(GradedLevel {
        k: 0,
        ideal: image.clone(),
        below: Subspace::zero(dim),
        complement: image.basis().to_vec(),
        pairing: g0,
    });

    let mut mk = Matrix::identity(dim);
    for k in 1..=d {
        let mk1 = mk.clone();
        mk = mk.mul(m)?;
        let j_k = mk.kernel();
        let below = levels.last().expect("level 0 exists").ideal.clone();
        let ideal = image.sum(&j_k)?;
        let complement = below.complement_in(&ideal)?;

        // representative in J_k of each complement vector
        let mut cols = j_k.basis().to_vec();
        cols.extend(below.basis().iter().cloned());
        let sys = Matrix::from_cols(dim, &cols);
        let reps: Vec<Vec<Rational>> = complement
            .iter()
            .map(|c| {
                let s = sys.solve(c)?.expect("I_k = J_k + I_(k-1)");
                let mut v = vec![Rational::zero(); dim];
                for (a, jv) in s.iter().zip(j_k.basis()) {
                    for (vi, ji) in v.iter_mut().zip(jv) {
                        *vi = &*vi + &(a * ji);
                    }
                }
                Ok(v)
            })
            .collect::<Result<_, RingError>>()?;

        let amb = j_k.intersect(&below)?;
        for z in amb.basis() {
            for y in j_k.basis() {
                if !metric.bilinear(z, &mk1.mul_vec(y)?)?.is_zero() {
                    return Err(FrobError::IllDefined(k as i32));
                }
            }
        }
        let twisted: Vec<Vec<Rational>> = reps.iter().map(|r| mk1.mul_vec(r)).collect::<Result<_, _>>()?;
        let g = Matrix::from_fn(reps.len(), reps.len(), |a, b| metric.bilinear(&reps[a], &twisted[b]).expect("dims agree"));
        levels.push(GradedLevel { k: k as i32, ideal, below, complement, pairing: g });
    }
    for l in &levels {
        if l.pairing.det()?.is_zero() {
            return Err(FrobError::Degenerate(l.k));
        }
    }
    Ok((d, levels))
}

/// The filtration (n) + Ker(n^k∘) with its graded pairings.
pub fn nilpotent_filtration(f: &FrobeniusAlgebra, n: &[Rational]) -> Result<FrobeniusFiltration, FrobError> {
    let m = f.algebra.mult_matrix(n)?;
    let (_, levels) = nilpotent_levels(&m, &f.pairing)?;
    Ok(FrobeniusFiltration::new(f.algebra.clone(), levels))
}

/// The induced filtration I_•/I_k on A/I_k.
///
/// Returns the quotient filtration and the projection A → A/I_k.
pub fn quotient_filtration(filt: &FrobeniusFiltration, k: i32) -> Result<(FrobeniusFiltration, Matrix), FrobError> {
    let base = filt.level(k).ok_or(FrobError::InvalidLevel(k))?;
    let ideal = IdealSubspace::new(&filt.algebra, base.ideal.clone())?;
    let (qa, proj) = filt.algebra.quotient_algebra(&ideal)?;
    let n = filt.algebra.dim();
    let m = qa.dim();
    let free: Vec<usize> = (0..n).filter(|c| !base.ideal.pivots().contains(c)).collect();
    let lift = |v: &[Rational]| -> Vec<Rational> {
        let mut out = vec![Rational::zero(); n];
        for (a, &c) in free.iter().enumerate() {
            out[c] = v[a].clone();
        }
        out
    };
    let mut levels = Vec::new();
    let mut below = Subspace::zero(m);
    for l in filt.levels.iter().filter(|l| l.k > k) {
        let ideal = l.ideal.image_under(&proj)?;
        let complement = below.complement_in(&ideal)?;
        let lifted: Vec<Vec<Rational>> = complement.iter().map(|c| lift(c)).collect();
        let g = Matrix::from_fn(lifted.len(), lifted.len(), |a, b| {
            l.pair(&lifted[a], &lifted[b]).expect("lift lies in the ideal")
        });
        levels.push(GradedLevel { k: l.k, ideal: ideal.clone(), below: below.clone(), complement, pairing: g });
        below = ideal;
    }
    Ok((FrobeniusFiltration::new(qa, levels), proj))
}

/// Monodromy weight filtration W_0 ⊂ … ⊂ W_{2d−2} of a nilpotent endomorphism of order d.
pub fn weight_filtration(n: &Matrix) -> Result<Vec<Subspace<Rational>>, FrobError> {
    let d = matrix_nilpotent_order(n)?;
    let dim = n.rows();
    if dim == 0 {
        return Ok(vec![Subspace::zero(0)]);
    }
    let l = d as i64 - 1;
    // m[k + l + 1] holds M_k for k in -l-1..=l
    let mut m = vec![Subspace::zero(dim); (2 * l + 2) as usize];
    deligne(n, &Subspace::full(dim), &Subspace::zero(dim), l, l, &mut m)?;
    Ok(m[1..].to_vec())
}

/// Fill M_k (−l−1 ≤ k ≤ l) for N acting on u/z with N^{l+1} = 0 there.
fn deligne(
    n: &Matrix,
    u: &Subspace<Rational>,
    z: &Subspace<Rational>,
    l: i64,
    top: i64,
    out: &mut [Subspace<Rational>],
) -> Result<(), FrobError> {
    let idx = |k: i64| (k + top + 1) as usize;
    out[idx(-l - 1)] = z.clone();
    out[idx(l)] = u.clone();
    if l <= 0 {
        return Ok(());
    }
    let nl = n.pow(l as usize)?;
    let ker = z.preimage_under(&nl)?.intersect(u)?;
    let im = u.image_under(&nl)?.sum(z)?;
    out[idx(l - 1)] = ker.clone();
    out[idx(-l)] = im.clone();
    deligne(n, &ker, &im, l - 1, top, out)
}

/// Compare a nilpotent filtration with Ker n + W and Im n + W.
///
/// `ideals[k]` is I_k for k = 0..=d.
pub fn weight_relation_report(n: &Matrix, ideals: &[Subspace<Rational>]) -> Result<Report, FrobError> {
    let d = matrix_nilpotent_order(n)?;
    let w = weight_filtration(n)?;
    let ker = n.kernel();
    let im = n.image();
    let mut rep = Report::new();
    for (name, base) in [("image_form", &im), ("kernel_form", &ker)] {
        let mut wit = None;
        if ideals.first() != Some(base) {
            wit = Some(json!({"k": 0}));
        }
        for k in 1..=d {
            if wit.is_some() {
                break;
            }
            let expected = base.sum(&w[k + d - 2])?;
            if ideals.get(k) != Some(&expected) {
                wit = Some(json!({"k": k, "expected_dim": expected.dim(), "got_dim": ideals.get(k).map(|s| s.dim())}));
            }
        }
        rep.record(name, wit);
    }
    Ok(rep)
}
