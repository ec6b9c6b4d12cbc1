//! Surfaces, Gromov–Witten tables, the compactified models V, and the local quantum products.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::fdalg::{AlgebraError, FDAlgebra};
use crate::frobenius::{FrobError, FrobeniusAlgebra};
use crate::mfs::{
    idx3, mfs_difference, mfs_from_nilpotent, mfs_in_frame, to_frame, transversal_slice, EulerField, FrameVector,
    FrobStructureData, MFSData, MfsError,
};
use crate::mhs::{surface_algebra, MhsError, SurfaceHodgeInput};
use crate::ringcore::{unit_vector, Matrix, Monomial, Rational, RingDecl, RingError, SeriesElem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocalError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Frob(#[from] FrobError),
    #[error(transparent)]
    Mfs(#[from] MfsError),
    #[error(transparent)]
    Mhs(#[from] MhsError),
    #[error("invalid surface data: {0}")]
    Surface(String),
    #[error("invalid GW table: {0}")]
    Table(String),
    #[error("direct formula and nilpotent pipeline disagree: {0}")]
    RouteMismatch(Value),
    #[error("unknown catalog entry {0:?}")]
    UnknownCatalog(String),
    #[error("invalid parameters: {0}")]
    Params(String),
}

/// Intersection data (c_{ij}, b_i) of a weak Fano toric surface in a nef basis of H².
#[derive(Clone, PartialEq, Debug)]
pub struct SurfaceData {
    c: Matrix,
    b: Vec<Rational>,
}

impl SurfaceData {
    pub fn new(c: Matrix, b: Vec<Rational>) -> Result<Self, LocalError> {
        let r = b.len();
        if r == 0 || c.rows() != r || c.cols() != r {
            return Err(LocalError::Surface(format!("c must be {r}x{r}")));
        }
        if !c.is_symmetric() {
            return Err(LocalError::Surface("c is not symmetric".into()));
        }
        if c.to_rows().iter().flatten().chain(&b).any(|x| !x.is_integer()) {
            return Err(LocalError::Surface("c and b must be integers".into()));
        }
        if c.det()?.is_zero() {
            return Err(LocalError::Surface("c is singular".into()));
        }
        let s = SurfaceData { c, b };
        if !s.kappa().is_positive() {
            return Err(LocalError::Surface(format!("kappa = {} is not positive", s.kappa())));
        }
        Ok(s)
    }

    pub fn from_ints(c: &[&[i64]], b: &[i64]) -> Result<Self, LocalError> {
        let rows = c.iter().map(|r| r.iter().map(|&x| Rational::int(x)).collect()).collect();
        Self::new(Matrix::from_rows(rows)?, b.iter().map(|&x| Rational::int(x)).collect())
    }

    pub fn p2() -> Self {
        Self::from_ints(&[&[1]], &[3]).expect("valid")
    }

    /// P¹×P¹ in the basis of the two rulings.
    pub fn f0() -> Self {
        Self::from_ints(&[&[0, 1], &[1, 0]], &[2, 2]).expect("valid")
    }

    /// Hirzebruch F₁ in the nef basis (pullback of the line, fiber).
    pub fn f1() -> Self {
        Self::from_ints(&[&[1, 1], &[1, 0]], &[2, 1]).expect("valid")
    }

    /// Hirzebruch F₂ in the nef basis (E + 2F, F).
    pub fn f2() -> Self {
        Self::from_ints(&[&[2, 1], &[1, 0]], &[2, 0]).expect("valid")
    }

    pub fn r(&self) -> usize {
        self.b.len()
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn b(&self) -> &[Rational] {
        &self.b
    }

    pub fn b_dual(&self) -> Vec<Rational> {
        (0..self.r()).map(|i| (0..self.r()).map(|j| &self.b[j] * self.c.get(j, i)).sum()).collect()
    }

    pub fn kappa(&self) -> Rational {
        self.b.iter().zip(self.b_dual()).map(|(b, bd)| b * &bd).sum()
    }

    /// b·β.
    pub fn degree(&self, beta: &[u32]) -> Rational {
        self.b.iter().zip(beta).map(|(b, &x)| b * Rational::from(x as i64)).sum()
    }

    pub fn to_json(&self) -> Value {
        json!({"r": self.r(), "c": self.c, "b": self.b, "kappa": self.kappa(), "b_dual": self.b_dual()})
    }

    pub fn from_json(v: &Value) -> Result<Self, LocalError> {
        #[derive(Deserialize)]
        struct Raw {
            r: Option<usize>,
            c: Matrix,
            b: Vec<Rational>,
            kappa: Option<Rational>,
            b_dual: Option<Vec<Rational>>,
        }
        let raw: Raw = serde_json::from_value(v.clone()).map_err(|e| LocalError::Surface(e.to_string()))?;
        if raw.r.is_some_and(|r| r != raw.b.len()) {
            return Err(LocalError::Surface("r differs from the length of b".into()));
        }
        let s = Self::new(raw.c, raw.b)?;
        if raw.kappa.is_some_and(|k| k != s.kappa()) {
            return Err(LocalError::Surface(format!("supplied kappa differs from computed {}", s.kappa())));
        }
        if raw.b_dual.is_some_and(|bd| bd != s.b_dual()) {
            return Err(LocalError::Surface("supplied b_dual differs from computed value".into()));
        }
        Ok(s)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Toric,
    P3,
}

/// Genus-zero local invariants N_β by curve degree.
#[derive(Clone, PartialEq, Debug)]
pub struct GWTable {
    pub target: Target,
    pub entries: BTreeMap<Vec<u32>, Rational>,
    pub order: u32,
    pub provenance: Option<String>,
}

impl GWTable {
    pub fn new(target: Target, entries: BTreeMap<Vec<u32>, Rational>, order: u32) -> Result<Self, LocalError> {
        let t = GWTable { target, entries, order, provenance: None };
        t.validate()?;
        Ok(t)
    }

    pub fn empty(target: Target, order: u32) -> Self {
        GWTable { target, entries: BTreeMap::new(), order, provenance: None }
    }

    fn validate(&self) -> Result<(), LocalError> {
        let mut len = None;
        for beta in self.entries.keys() {
            if beta.iter().all(|&x| x == 0) {
                return Err(LocalError::Table("degree zero entry".into()));
            }
            if *len.get_or_insert(beta.len()) != beta.len() {
                return Err(LocalError::Table("degrees of different lengths".into()));
            }
            if self.target == Target::P3 && beta.len() != 1 {
                return Err(LocalError::Table("P3 degrees are single integers".into()));
            }
            let deg: u32 = beta.iter().sum();
            if deg > self.order {
                return Err(LocalError::Table(format!("degree {beta:?} exceeds declared order {}", self.order)));
            }
        }
        Ok(())
    }

    /// Reject degrees of the wrong length and nonzero entries with b·β ≤ 0.
    pub fn check_surface(&self, s: &SurfaceData) -> Result<(), LocalError> {
        if self.target != Target::Toric {
            return Err(LocalError::Table("expected a toric table".into()));
        }
        for (beta, n) in &self.entries {
            if beta.len() != s.r() {
                return Err(LocalError::Table(format!("degree {beta:?} has length {}, surface has r = {}", beta.len(), s.r())));
            }
            if !n.is_zero() && !s.degree(beta).is_positive() {
                return Err(LocalError::Table(format!("degree {beta:?} has b·β ≤ 0 but N ≠ 0")));
            }
        }
        Ok(())
    }

    /// Σ_β w(β) N_β Q^β in `ring`, whose exp vars are ordered like the degree components.
    pub fn weighted_sum(&self, ring: &Arc<RingDecl>, w: impl Fn(&[u32]) -> Rational) -> Result<SeriesElem, LocalError> {
        let mut s = SeriesElem::zero(ring);
        for (beta, n) in &self.entries {
            let c = w(beta) * n;
            if !c.is_zero() {
                s += &SeriesElem::exp_term(ring, beta, c)?;
            }
        }
        Ok(s)
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self.entries.iter().map(|(b, n)| json!({"beta": b, "N": n})).collect();
        let mut v = json!({"target": self.target, "entries": entries, "order": self.order});
        if let Some(p) = &self.provenance {
            v["provenance"] = json!(p);
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<Self, LocalError> {
        #[derive(Deserialize)]
        struct Entry {
            beta: Vec<i64>,
            #[serde(rename = "N")]
            n: Rational,
        }
        #[derive(Deserialize)]
        struct Raw {
            target: Target,
            entries: Vec<Entry>,
            order: u32,
            provenance: Option<String>,
        }
        let raw: Raw = serde_json::from_value(v.clone()).map_err(|e| LocalError::Table(e.to_string()))?;
        let mut entries = BTreeMap::new();
        for e in raw.entries {
            if e.beta.iter().any(|&x| x < 0) {
                return Err(LocalError::Table(format!("degree {:?} has a negative component", e.beta)));
            }
            let beta: Vec<u32> = e.beta.iter().map(|&x| x as u32).collect();
            if entries.insert(beta.clone(), e.n).is_some() {
                return Err(LocalError::Table(format!("degree {beta:?} listed twice")));
            }
        }
        let mut t = Self::new(raw.target, entries, raw.order)?;
        t.provenance = raw.provenance;
        Ok(t)
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum Geometry {
    Toric(SurfaceData),
    P3,
}

impl Geometry {
    pub fn target(&self) -> Target {
        match self {
            Geometry::Toric(_) => Target::Toric,
            Geometry::P3 => Target::P3,
        }
    }

    fn check_table(&self, t: &GWTable) -> Result<(), LocalError> {
        match self {
            Geometry::Toric(s) => t.check_surface(s),
            Geometry::P3 if t.target == Target::P3 => Ok(()),
            Geometry::P3 => Err(LocalError::Table("expected a p3 table".into())),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Cls {
    G(usize),
    D(usize),
}

/// Classical cohomology of the compactification V with its distinguished data.
#[derive(Clone, PartialEq, Debug)]
pub struct VModel {
    pub geometry: Geometry,
    pub labels: Vec<String>,
    pub coords: Vec<String>,
    /// Complex degrees of the basis classes.
    pub degrees: Vec<u32>,
    pub classical: FrobeniusAlgebra,
    /// Γ_i^∨ as coefficient vectors.
    pub dual: Vec<Vec<Rational>>,
    /// Δ₀.
    pub nilpotent: Vec<Rational>,
    pub exp_coords: Vec<String>,
    /// Coefficients of −c₁(K_V).
    pub xi: Vec<Rational>,
}

fn v_basis(g: &Geometry) -> Vec<Cls> {
    match g {
        Geometry::Toric(s) => {
            let r = s.r();
            let mut v: Vec<Cls> = (0..=r).map(Cls::G).collect();
            v.push(Cls::D(0));
            v.push(Cls::G(r + 1));
            v.extend((1..=r + 1).map(Cls::D));
            v
        }
        Geometry::P3 => vec![Cls::G(0), Cls::G(1), Cls::D(0), Cls::G(2), Cls::D(1), Cls::G(3), Cls::D(2), Cls::D(3)],
    }
}

fn cup(g: &Geometry, x: Cls, y: Cls) -> Vec<(Cls, Rational)> {
    use Cls::*;
    let one = Rational::one;
    match g {
        Geometry::Toric(s) => {
            let r = s.r();
            let (c, b, bd) = (s.c(), s.b(), s.b_dual());
            match (x, y) {
                (G(0), z) | (z, G(0)) => vec![(z, one())],
                (G(i), G(j)) if i <= r && j <= r => vec![(G(r + 1), c.get(i - 1, j - 1).clone())],
                (G(i), D(0)) | (D(0), G(i)) => vec![(D(i), one())],
                (G(i), D(j)) | (D(j), G(i)) if i <= r && (1..=r).contains(&j) => {
                    vec![(D(r + 1), c.get(i - 1, j - 1).clone())]
                }
                (D(0), D(0)) => (1..=r).map(|i| (D(i), b[i - 1].clone())).collect(),
                (D(0), D(j)) | (D(j), D(0)) if j <= r => vec![(D(r + 1), bd[j - 1].clone())],
                _ => vec![],
            }
        }
        Geometry::P3 => match (x, y) {
            (G(i), G(j)) if i + j <= 3 => vec![(G(i + j), one())],
            (D(i), G(j)) | (G(j), D(i)) if i + j <= 3 => vec![(D(i + j), one())],
            (D(i), D(j)) if i + j < 3 => vec![(D(i + j + 1), Rational::int(4))],
            _ => vec![],
        },
    }
}

/// Cohomology of V with cup product, Poincaré pairing, dual basis and Δ₀.
pub fn build_v_model(g: &Geometry) -> Result<VModel, LocalError> {
    let basis = v_basis(g);
    let n = basis.len();
    let pos = |c: Cls| basis.iter().position(|&x| x == c).expect("basis class");
    let name = |c: Cls, p: &str, q: &str| match c {
        Cls::G(i) => format!("{p}{i}"),
        Cls::D(i) => format!("{q}{i}"),
    };
    let labels: Vec<String> = basis.iter().map(|&c| name(c, "G", "D")).collect();
    let coords: Vec<String> = basis.iter().map(|&c| name(c, "t", "s")).collect();
    let top = pos(*basis.last().expect("nonempty"));
    let alg = FDAlgebra::rational(labels.clone(), unit_vector(n, 0), |i, j| {
        let mut v = vec![Rational::zero(); n];
        for (c, x) in cup(g, basis[i], basis[j]) {
            v[pos(c)] = &v[pos(c)] + &x;
        }
        v
    })?;
    let pairing = Matrix::from_fn(n, n, |i, j| alg.coeff(i, j, top).clone());
    let inv = pairing.inverse()?;
    let dual: Vec<Vec<Rational>> = (0..n).map(|i| (0..n).map(|j| inv.get(j, i).clone()).collect()).collect();
    let degrees = basis
        .iter()
        .map(|&c| match (g, c) {
            (Geometry::Toric(s), Cls::G(i)) if i == s.r() + 1 => 2,
            (Geometry::Toric(_), Cls::G(0)) => 0,
            (Geometry::Toric(_), Cls::G(_)) => 1,
            (Geometry::Toric(s), Cls::D(i)) if i == s.r() + 1 => 3,
            (Geometry::Toric(_), Cls::D(0)) => 1,
            (Geometry::Toric(_), Cls::D(_)) => 2,
            (Geometry::P3, Cls::G(i)) => i as u32,
            (Geometry::P3, Cls::D(i)) => i as u32 + 1,
        })
        .collect();
    let exp_coords = match g {
        Geometry::Toric(s) => (1..=s.r()).map(|i| format!("t{i}")).collect(),
        Geometry::P3 => vec!["t1".to_string()],
    };
    let d0 = pos(Cls::D(0));
    let mut xi = vec![Rational::zero(); n];
    xi[d0] = Rational::int(2);
    Ok(VModel {
        geometry: g.clone(),
        labels,
        coords,
        degrees,
        classical: FrobeniusAlgebra::new(alg, pairing)?,
        dual,
        nilpotent: unit_vector(n, d0),
        exp_coords,
        xi,
    })
}

impl VModel {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Complex dimension of V.
    pub fn charge(&self) -> Rational {
        Rational::from(*self.degrees.iter().max().expect("nonempty") as i64)
    }

    pub fn ring(&self, order: u32) -> Arc<RingDecl> {
        let c: Vec<&str> = self.coords.iter().map(String::as_str).collect();
        let e: Vec<&str> = self.exp_coords.iter().map(String::as_str).collect();
        RingDecl::with_exps(&c, &e, order)
    }

    /// Euler field Σ (1 − deg)t∂ + Σ ξ∂ in the coordinate frame.
    pub fn euler(&self) -> EulerField {
        let n = self.dim();
        let lin: Vec<(usize, usize, Rational)> =
            (0..n).map(|i| (i, i, Rational::one() - Rational::from(self.degrees[i] as i64))).collect();
        let cst: Vec<(usize, Rational)> = self.xi.iter().cloned().enumerate().collect();
        EulerField::from_terms(n, &lin, &cst)
    }
}

fn check_order(t: &GWTable, order: u32) -> Result<(), LocalError> {
    if !t.entries.is_empty() && order > t.order {
        return Err(LocalError::Table(format!("requested order {order} exceeds the table order {}", t.order)));
    }
    Ok(())
}

/// Genus-zero potential Φ_cl + Φ₀ at q₀ = 0, with e^{tⁱ} carried by the exp variables.
pub fn potential(m: &VModel, t: &GWTable, order: u32) -> Result<SeriesElem, LocalError> {
    m.geometry.check_table(t)?;
    check_order(t, order)?;
    let ring = m.ring(order);
    let n = m.dim();
    let alg = m.classical.algebra();
    let g = m.classical.pairing();
    let mut phi = SeriesElem::zero(&ring);
    let sixth = Rational::new(1, 6);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let triple: Rational = (0..n).map(|l| alg.coeff(i, j, l) * g.get(l, k)).sum();
                if triple.is_zero() {
                    continue;
                }
                let mut mono = Monomial::one(&ring);
                for x in [i, j, k] {
                    mono.mono[x] += 1;
                }
                phi += &SeriesElem::term(&ring, mono, &triple * &sixth)?;
            }
        }
    }
    let qu = t.weighted_sum(&ring, |_| Rational::one())?;
    match m.geometry {
        Geometry::Toric(_) => phi += &qu,
        Geometry::P3 => phi += &(&SeriesElem::poly_var(&ring, "t2")? * &qu),
    }
    Ok(phi)
}

/// Quantum product of V from third derivatives of the potential, with its Euler field.
pub fn quantum_product_v(m: &VModel, t: &GWTable, order: u32) -> Result<FrobStructureData, LocalError> {
    let phi = potential(m, t, order)?;
    let ring = phi.ring().clone();
    let n = m.dim();
    let d1: Vec<SeriesElem> = m.coords.iter().map(|x| phi.derive(x)).collect::<Result<_, _>>()?;
    let mut c = vec![SeriesElem::zero(&ring); n * n * n];
    for i in 0..n {
        for j in i..n {
            let dij = d1[i].derive(&m.coords[j])?;
            let third: Vec<SeriesElem> = m.coords.iter().map(|x| dij.derive(x)).collect::<Result<_, _>>()?;
            for k in 0..n {
                let mut s = SeriesElem::zero(&ring);
                for (l, d) in third.iter().enumerate() {
                    let f = &m.dual[l][k];
                    if !f.is_zero() && !d.is_zero() {
                        s += &d.scale(f);
                    }
                }
                c[idx3(n, j, i, k)] = s.clone();
                c[idx3(n, i, j, k)] = s;
            }
        }
    }
    Ok(FrobStructureData {
        ring,
        coords: m.coords.clone(),
        labels: m.labels.clone(),
        metric: m.classical.pairing().clone(),
        c,
        unit: unit_vector(n, 0),
        euler: m.euler(),
        d: m.charge(),
        model: Some(json!({"kind": "v_model", "target": m.geometry.target()})),
    })
}

/// Route (b): nilpotent construction along Δ₀, then the slice s = 0.
pub fn local_product_pipeline(g: &Geometry, t: &GWTable, order: u32) -> Result<MFSData, LocalError> {
    let m = build_v_model(g)?;
    let f = quantum_product_v(&m, t, order)?;
    let full = mfs_from_nilpotent(&f, &m.nilpotent)?;
    Ok(transversal_slice(&full, 0, &BTreeMap::new())?)
}

/// Route (a): the local quantum product, filtration and pairings written out directly.
pub fn local_product_direct(g: &Geometry, t: &GWTable, order: u32) -> Result<MFSData, LocalError> {
    g.check_table(t)?;
    check_order(t, order)?;
    match g {
        Geometry::Toric(s) => toric_direct(s, t, order),
        Geometry::P3 => p3_direct(t, order),
    }
}

fn frame_vec(label: &str, level: i32, dir: Vec<Rational>) -> FrameVector {
    FrameVector { label: label.into(), level, dir }
}

fn toric_direct(s: &SurfaceData, t: &GWTable, order: u32) -> Result<MFSData, LocalError> {
    let r = s.r();
    let n = r + 2;
    let coords: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
    let cs: Vec<&str> = coords.iter().map(String::as_str).collect();
    let es: Vec<&str> = cs[1..=r].to_vec();
    let ring = RingDecl::with_exps(&cs, &es, order);
    let mut c = vec![SeriesElem::zero(&ring); n * n * n];
    for x in 0..n {
        c[idx3(n, 0, x, x)] = SeriesElem::one(&ring);
        c[idx3(n, x, 0, x)] = SeriesElem::one(&ring);
    }
    for i in 1..=r {
        for j in 1..=r {
            let q = t.weighted_sum(&ring, |beta| {
                Rational::from(beta[i - 1] as i64) * Rational::from(beta[j - 1] as i64) * s.degree(beta)
            })?;
            c[idx3(n, i, j, r + 1)] = &SeriesElem::constant(&ring, s.c().get(i - 1, j - 1).clone()) - &q;
        }
    }
    let euler = EulerField::from_terms(n, &[(0, 0, Rational::one()), (r + 1, r + 1, Rational::int(-1))], &[]);
    let p = (0..r).rev().find(|&i| !s.b()[i].is_zero()).expect("kappa > 0 forces b ≠ 0");
    let mut k_dir = vec![Rational::zero(); n];
    for i in 0..r {
        k_dir[i + 1] = -s.b()[i].clone();
    }
    let rest: Vec<usize> = (0..r).filter(|&i| i != p).collect();
    let mut frame = vec![frame_vec("K", 1, k_dir), frame_vec("pt", 1, unit_vector(n, r + 1))];
    frame.extend(rest.iter().map(|&i| frame_vec(&format!("g{}", i + 1), 2, unit_vector(n, i + 1))));
    frame.push(frame_vec("1", 4, unit_vector(n, 0)));
    let bd = s.b_dual();
    let kappa = s.kappa();
    let eta2 = Matrix::from_fn(rest.len(), rest.len(), |a, b| {
        let (i, j) = (rest[a], rest[b]);
        s.c().get(i, j) - &(&bd[i] * &bd[j]) / &kappa
    });
    let etas = vec![
        (1, Matrix::from_rows(vec![vec![Rational::zero(), Rational::one()], vec![Rational::one(), Rational::zero()]])?),
        (2, eta2),
        (3, Matrix::zeros(0, 0)),
        (4, Matrix::from_rows(vec![vec![kappa]])?),
    ];
    Ok(mfs_in_frame(ring, coords, &c, &unit_vector(n, 0), &euler, frame, etas, Rational::int(4))?)
}

fn p3_direct(t: &GWTable, order: u32) -> Result<MFSData, LocalError> {
    let n = 4;
    let coords: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
    let ring = RingDecl::with_exps(&["t0", "t1", "t2", "t3"], &["t1"], order);
    let s2 = t.weighted_sum(&ring, |b| Rational::from((b[0] * b[0]) as i64))?;
    let s3 = t.weighted_sum(&ring, |b| Rational::from((b[0] * b[0] * b[0]) as i64))?;
    let t2 = SeriesElem::poly_var(&ring, "t2")?;
    let four = Rational::int(4);
    let one = SeriesElem::one(&ring);
    let mut c = vec![SeriesElem::zero(&ring); n * n * n];
    for x in 0..n {
        c[idx3(n, 0, x, x)] = one.clone();
        c[idx3(n, x, 0, x)] = one.clone();
    }
    let corr = &one - &s2.scale(&four);
    c[idx3(n, 1, 1, 2)] = corr.clone();
    c[idx3(n, 1, 1, 3)] = (&t2 * &s3).scale(&Rational::int(-4));
    c[idx3(n, 1, 2, 3)] = corr.clone();
    c[idx3(n, 2, 1, 3)] = corr;
    let euler = EulerField::from_terms(
        n,
        &[(0, 0, Rational::one()), (2, 2, Rational::int(-1)), (3, 3, Rational::int(-2))],
        &[],
    );
    let frame = vec![
        frame_vec("g1", 1, unit_vector(n, 1)),
        frame_vec("g2", 1, unit_vector(n, 2)),
        frame_vec("g3", 1, unit_vector(n, 3)),
        frame_vec("1", 5, unit_vector(n, 0)),
    ];
    let eta1 = Matrix::from_fn(3, 3, |a, b| if a + b + 2 == 4 { Rational::new(-1, 4) } else { Rational::zero() });
    let etas = vec![
        (1, eta1),
        (2, Matrix::zeros(0, 0)),
        (3, Matrix::zeros(0, 0)),
        (4, Matrix::zeros(0, 0)),
        (5, Matrix::from_rows(vec![vec![Rational::int(64)]])?),
    ];
    Ok(mfs_in_frame(ring, coords, &c, &unit_vector(n, 0), &euler, frame, etas, Rational::int(5))?)
}

/// First difference between the direct MFS and the pipeline MFS moved into the direct frame.
pub fn route_difference(direct: &MFSData, pipeline: &MFSData) -> Result<Option<Value>, LocalError> {
    let moved = to_frame(pipeline, direct.frame.clone())?;
    Ok(mfs_difference(direct, &moved))
}

/// Record the geometry and table in the model field, so deformed coordinates can be rebuilt later.
pub fn with_model(mut m: MFSData, g: &Geometry, t: &GWTable) -> MFSData {
    m.model = Some(json!({
        "kind": "local_product",
        "target": g.target(),
        "surface": match g { Geometry::Toric(s) => s.to_json(), Geometry::P3 => Value::Null },
        "table": t.to_json(),
    }));
    m
}

/// Geometry and table stored by [`with_model`].
pub fn model_of(m: &MFSData) -> Result<(Geometry, GWTable), LocalError> {
    let model = m.model.as_ref().ok_or_else(|| LocalError::Params("MFS carries no local_product model".into()))?;
    let target: Target = serde_json::from_value(model["target"].clone()).map_err(|e| LocalError::Params(e.to_string()))?;
    let g = match target {
        Target::Toric => Geometry::Toric(SurfaceData::from_json(&model["surface"])?),
        Target::P3 => Geometry::P3,
    };
    Ok((g, GWTable::from_json(&model["table"])?))
}

/// The local quantum product MFS, computed both ways and required to agree.
pub fn local_product(g: &Geometry, t: &GWTable, order: u32) -> Result<MFSData, LocalError> {
    let direct = local_product_direct(g, t, order)?;
    let pipeline = local_product_pipeline(g, t, order)?;
    if let Some(w) = route_difference(&direct, &pipeline)? {
        return Err(LocalError::RouteMismatch(w));
    }
    Ok(with_model(direct, g, t))
}

/// A catalog algebra with its distinguished nilpotent element.
#[derive(Clone, PartialEq, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub params: Value,
    pub frob: FrobeniusAlgebra,
    pub nilpotent: Option<Vec<Rational>>,
}

impl CatalogEntry {
    pub fn to_json(&self) -> Value {
        let mut v = self.frob.to_json();
        v["name"] = json!(self.name);
        v["params"] = self.params.clone();
        if let Some(n) = &self.nilpotent {
            v["nilpotent"] = json!(n);
        }
        v
    }
}

pub const CATALOG_NAMES: [&str; 9] = ["pn", "surface", "wps", "p1124", "p2_local", "f0_local", "f1_local", "f2_local", "p3_local"];

fn param_i64(p: &Value, key: &str) -> Result<i64, LocalError> {
    p.get(key)
        .and_then(Value::as_i64)
        .ok_or_else(|| LocalError::Params(format!("missing integer parameter {key:?}")))
}

/// Frobenius algebra whose pairing is a multiple of the coefficient of basis vector `top`.
fn graded_frobenius(labels: Vec<String>, top: usize, scale: Rational, f: impl FnMut(usize, usize) -> Vec<Rational>) -> Result<FrobeniusAlgebra, LocalError> {
    let n = labels.len();
    let alg = FDAlgebra::rational(labels, unit_vector(n, 0), f)?;
    let g = Matrix::from_fn(n, n, |i, j| alg.coeff(i, j, top) * &scale);
    Ok(FrobeniusAlgebra::new(alg, g)?)
}

fn power_label(x: &str, i: usize) -> String {
    match i {
        0 => "1".into(),
        1 => x.into(),
        _ => format!("{x}^{i}"),
    }
}

fn pn(d: i64, m: i64) -> Result<CatalogEntry, LocalError> {
    if d < 2 || m == 0 {
        return Err(LocalError::Params("pn needs d ≥ 2 and m ≠ 0".into()));
    }
    let d = d as usize;
    let labels = (0..d).map(|i| power_label("h", i)).collect();
    let frob = graded_frobenius(labels, d - 1, Rational::one(), |i, j| {
        let mut v = vec![Rational::zero(); d];
        if i + j < d {
            v[i + j] = Rational::one();
        }
        v
    })?;
    let mut n = vec![Rational::zero(); d];
    n[1] = Rational::int(m);
    Ok(CatalogEntry { name: "pn".into(), params: json!({"d": d, "m": m}), frob, nilpotent: Some(n) })
}

/// H*(P(1,…,1,d)) = ℂ[H,E]/(H^d − E^d, HE) in the basis 1, H…H^d, E…E^{d−1}.
fn wps(d: i64) -> Result<CatalogEntry, LocalError> {
    if d < 2 {
        return Err(LocalError::Params("wps needs d ≥ 2".into()));
    }
    let d = d as usize;
    let dim = 2 * d;
    let mut labels = vec!["1".to_string()];
    labels.extend((1..=d).map(|i| power_label("H", i)));
    labels.extend((1..d).map(|i| power_label("E", i)));
    // (h, e) exponents; E^d is stored as H^d
    let expo = |i: usize| if i <= d { (i, 0) } else { (0, i - d) };
    let index = |h: usize, e: usize| -> Option<usize> {
        match (h, e) {
            (h, 0) if h <= d => Some(h),
            (0, e) if e < d => Some(d + e),
            (0, e) if e == d => Some(d),
            _ => None,
        }
    };
    let frob = graded_frobenius(labels, d, Rational::new(1, d as i64), |i, j| {
        let mut v = vec![Rational::zero(); dim];
        let ((hi, ei), (hj, ej)) = (expo(i), expo(j));
        let (h, e) = (hi + hj, ei + ej);
        if h == 0 || e == 0 {
            if let Some(k) = index(h, e) {
                v[k] = Rational::one();
            }
        }
        v
    })?;
    let mut n = vec![Rational::zero(); dim];
    n[1] = Rational::int(d as i64);
    Ok(CatalogEntry { name: "wps".into(), params: json!({"d": d}), frob, nilpotent: Some(n) })
}

/// H*(P(1,1,2,4)) in the basis 1, H, E1, E2, H², HE2, E1E2, H³.
fn p1124() -> Result<CatalogEntry, LocalError> {
    let labels: Vec<String> = ["1", "H", "E1", "E2", "H^2", "HE2", "E1E2", "H^3"].iter().map(|s| s.to_string()).collect();
    let table: BTreeMap<(usize, usize), (usize, i64)> = [
        ((1, 1), (4, 1)),
        ((1, 3), (5, 1)),
        ((1, 4), (7, 1)),
        ((2, 2), (5, 2)),
        ((2, 3), (6, 1)),
        ((2, 6), (7, 2)),
        ((3, 3), (4, 1)),
        ((3, 5), (7, 1)),
    ]
    .into_iter()
    .collect();
    let frob = graded_frobenius(labels, 7, Rational::new(1, 8), |i, j| {
        let mut v = vec![Rational::zero(); 8];
        if i == 0 || j == 0 {
            v[i + j] = Rational::one();
        } else if let Some(&(k, c)) = table.get(&(i.min(j), i.max(j))) {
            v[k] = Rational::int(c);
        }
        v
    })?;
    let mut n = vec![Rational::zero(); 8];
    n[1] = Rational::int(4);
    Ok(CatalogEntry { name: "p1124".into(), params: json!({}), frob, nilpotent: Some(n) })
}

/// H*(S) in the basis γ₀, γ₁…γ_r, γ_{r+1} with n = c₁(K_S).
fn surface_cb(s: &SurfaceData) -> Result<(FrobeniusAlgebra, Vec<Rational>), LocalError> {
    let r = s.r();
    let n = r + 2;
    let labels = (0..n).map(|i| format!("g{i}")).collect();
    let frob = graded_frobenius(labels, r + 1, Rational::one(), |i, j| {
        let mut v = vec![Rational::zero(); n];
        if i == 0 || j == 0 {
            v[i + j] = Rational::one();
        } else if i <= r && j <= r {
            v[r + 1] = s.c().get(i - 1, j - 1).clone();
        }
        v
    })?;
    let mut k = vec![Rational::zero(); n];
    for i in 0..r {
        k[i + 1] = -s.b()[i].clone();
    }
    Ok((frob, k))
}

fn v_entry(name: &str, g: Geometry) -> Result<CatalogEntry, LocalError> {
    let m = build_v_model(&g)?;
    Ok(CatalogEntry { name: name.into(), params: json!({}), frob: m.classical, nilpotent: Some(m.nilpotent) })
}

/// Example algebras by name; `params` is a JSON object of the named parameters.
pub fn catalog(name: &str, params: &Value) -> Result<CatalogEntry, LocalError> {
    match name {
        "pn" => pn(param_i64(params, "d")?, param_i64(params, "m")?),
        "wps" => wps(param_i64(params, "d")?),
        "p1124" => p1124(),
        "surface" => {
            if params.get("c").is_some() {
                let s = SurfaceData::from_json(params)?;
                let (frob, n) = surface_cb(&s)?;
                Ok(CatalogEntry { name: name.into(), params: params.clone(), frob, nilpotent: Some(n) })
            } else {
                let inp: SurfaceHodgeInput =
                    serde_json::from_value(params.clone()).map_err(|e| LocalError::Params(e.to_string()))?;
                let frob = surface_algebra(&inp)?;
                let n = unit_vector(frob.dim(), 1);
                Ok(CatalogEntry { name: name.into(), params: params.clone(), frob, nilpotent: Some(n) })
            }
        }
        "p2_local" => v_entry(name, Geometry::Toric(SurfaceData::p2())),
        "f0_local" => v_entry(name, Geometry::Toric(SurfaceData::f0())),
        "f1_local" => v_entry(name, Geometry::Toric(SurfaceData::f1())),
        "f2_local" => v_entry(name, Geometry::Toric(SurfaceData::f2())),
        "p3_local" => v_entry(name, Geometry::P3),
        other => Err(LocalError::UnknownCatalog(other.into())),
    }
}

/// Every catalog algebra at representative parameters.
pub fn catalog_examples() -> Vec<CatalogEntry> {
    let mut params: Vec<(&str, Value)> = Vec::new();
    for (d, m) in [(2, 1), (3, 1), (4, -4), (5, 2)] {
        params.push(("pn", json!({"d": d, "m": m})));
    }
    for d in 2..=4 {
        params.push(("wps", json!({"d": d})));
    }
    params.push(("p1124", json!({})));
    params.push(("surface", json!({"prim_dim": 1, "prim_pairing": [["-2"]], "K": "2"})));
    params.push(("surface", json!({"prim_dim": 0, "prim_pairing": [], "K": "4"})));
    params.push(("surface", SurfaceData::p2().to_json()));
    params.push(("surface", SurfaceData::f0().to_json()));
    for n in ["p2_local", "f0_local", "f1_local", "f2_local", "p3_local"] {
        params.push((n, json!({})));
    }
    params.into_iter().map(|(n, p)| catalog(n, &p).expect("catalog example")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mfs::{frobenius_structure_check, mfs_check};
    use crate::ringcore::{q, qv};

    fn table(target: Target, entries: &[(&[u32], Rational)], order: u32) -> GWTable {
        GWTable::new(target, entries.iter().map(|(b, n)| (b.to_vec(), n.clone())).collect(), order).unwrap()
    }

    #[test]
    fn surface_invariants() {
        for (s, k) in [(SurfaceData::p2(), 9), (SurfaceData::f0(), 8), (SurfaceData::f1(), 8), (SurfaceData::f2(), 8)] {
            assert_eq!(s.kappa(), Rational::int(k));
        }
        assert_eq!(SurfaceData::p2().b_dual(), qv(&[3]));
        assert!(SurfaceData::from_ints(&[&[0, 1], &[1, 0]], &[1, -1]).is_err());
        let mut j = SurfaceData::p2().to_json();
        j["kappa"] = json!("8");
        assert!(SurfaceData::from_json(&j).is_err());
    }

    #[test]
    fn v_pairings_match_intersection_tables() {
        let m = build_v_model(&Geometry::Toric(SurfaceData::p2())).unwrap();
        let g = m.classical.pairing();
        let ix = |l: &str| m.index(l).unwrap();
        assert_eq!(g.get(ix("D0"), ix("D1")), &Rational::int(3));
        assert_eq!(g.get(ix("G0"), ix("D2")), &Rational::one());
        assert_eq!(g.get(ix("D0"), ix("G2")), &Rational::one());
        assert_eq!(g.get(ix("G1"), ix("D1")), &Rational::one());
        assert!(m.classical.frobenius_check().all_pass());
        // Γ₁^∨ = Δ₁ − 3Γ₂
        let mut g1v = vec![Rational::zero(); m.dim()];
        g1v[ix("D1")] = Rational::one();
        g1v[ix("G2")] = Rational::int(-3);
        assert_eq!(m.dual[ix("G1")], g1v);

        let p = build_v_model(&Geometry::P3).unwrap();
        let g = p.classical.pairing();
        for k in 1..=3 {
            assert_eq!(g.get(p.index(&format!("D{}", k - 1)).unwrap(), p.index(&format!("D{}", 3 - k)).unwrap()), &Rational::int(4));
        }
        assert!(p.classical.frobenius_check().all_pass());
    }

    #[test]
    fn potential_terms() {
        let m = build_v_model(&Geometry::Toric(SurfaceData::p2())).unwrap();
        let t = table(Target::Toric, &[(&[1], q(7, 2))], 1);
        let ring = m.ring(1);
        let phi = potential(&m, &t, 1).unwrap();
        let e = GWTable::empty(Target::Toric, 1);
        let cl = potential(&m, &e, 1).unwrap();
        assert_eq!(&phi - &cl, SeriesElem::exp_term(&ring, &[1], q(7, 2)).unwrap());

        let p = build_v_model(&Geometry::P3).unwrap();
        let t = table(Target::P3, &[(&[1], q(5, 1))], 1);
        let ring = p.ring(1);
        let diff = &potential(&p, &t, 1).unwrap() - &potential(&p, &GWTable::empty(Target::P3, 1), 1).unwrap();
        let expect = &SeriesElem::poly_var(&ring, "t2").unwrap() * &SeriesElem::exp_term(&ring, &[1], q(5, 1)).unwrap();
        assert_eq!(diff, expect);
    }

    #[test]
    fn p2_quantum_product_one_term() {
        let m = build_v_model(&Geometry::Toric(SurfaceData::p2())).unwrap();
        let t = table(Target::Toric, &[(&[1], Rational::int(3))], 1);
        let f = quantum_product_v(&m, &t, 1).unwrap();
        let ring = f.ring.clone();
        let ix = |l: &str| m.index(l).unwrap();
        let q1 = SeriesElem::exp_term(&ring, &[1], Rational::int(3)).unwrap();
        let (g1, g2, d1) = (ix("G1"), ix("G2"), ix("D1"));
        assert_eq!(f.coeff(g1, g1, d1), &q1);
        assert_eq!(f.coeff(g1, g1, g2), &(&SeriesElem::one(&ring) - &q1.scale(&Rational::int(3))));
        assert!(frobenius_structure_check(&f).all_pass());
    }

    #[test]
    fn classical_limit_routes_agree() {
        for s in [SurfaceData::p2(), SurfaceData::f0()] {
            let g = Geometry::Toric(s);
            let m = local_product(&g, &GWTable::empty(Target::Toric, 1), 1).unwrap();
            assert!(mfs_check(&m).all_pass(), "{:?}", mfs_check(&m).failures());
        }
        let m = local_product(&Geometry::P3, &GWTable::empty(Target::P3, 1), 1).unwrap();
        assert!(mfs_check(&m).all_pass());
    }

    #[test]
    fn p2_direct_coefficient() {
        let t = table(Target::Toric, &[(&[1], Rational::int(3))], 1);
        let g = Geometry::Toric(SurfaceData::p2());
        let m = local_product(&g, &t, 1).unwrap();
        // γ₁ = −K/3, so γ₁∘γ₁ = (1 − 9Q₁)γ₂
        let ring = m.ring.clone();
        let k = m.label_index("K").unwrap();
        let pt = m.label_index("pt").unwrap();
        let expect = (&SeriesElem::one(&ring) - &SeriesElem::exp_term(&ring, &[1], Rational::int(9)).unwrap()).scale(&Rational::int(9));
        assert_eq!(m.coeff(k, k, pt), &expect);
        assert!(mfs_check(&m).all_pass());
    }

    #[test]
    fn f0_level_two_pairing() {
        let m = local_product_direct(&Geometry::Toric(SurfaceData::f0()), &GWTable::empty(Target::Toric, 1), 1).unwrap();
        assert_eq!(m.level(2).unwrap().eta, Matrix::from_rows(vec![vec![q(-1, 2)]]).unwrap());
        assert_eq!(m.level(4).unwrap().eta, Matrix::from_rows(vec![vec![Rational::int(8)]]).unwrap());
    }

    #[test]
    fn hirzebruch_routes_agree_at_order_two() {
        let f1 = table(
            Target::Toric,
            &[(&[0, 1], q(1, 1)), (&[1, 0], q(-2, 1)), (&[1, 1], q(3, 1)), (&[0, 2], q(1, 8)), (&[2, 0], q(-1, 4))],
            2,
        );
        let m = local_product(&Geometry::Toric(SurfaceData::f1()), &f1, 2).unwrap();
        assert!(mfs_check(&m).all_pass(), "{:?}", mfs_check(&m).failures());
        let f0 = table(
            Target::Toric,
            &[(&[1, 0], q(-2, 1)), (&[0, 1], q(-2, 1)), (&[1, 1], q(-4, 1)), (&[2, 0], q(-1, 4)), (&[0, 2], q(-1, 4))],
            2,
        );
        let m = local_product(&Geometry::Toric(SurfaceData::f0()), &f0, 2).unwrap();
        assert!(mfs_check(&m).all_pass());
    }

    #[test]
    fn p3_g2_squared_vanishes() {
        let t = table(Target::P3, &[(&[1], Rational::one()), (&[2], Rational::one())], 2);
        let m = local_product(&Geometry::P3, &t, 2).unwrap();
        let g2 = m.label_index("g2").unwrap();
        assert!((0..m.dim()).all(|k| m.coeff(g2, g2, k).is_zero()));
        assert!(mfs_check(&m).all_pass());
    }

    #[test]
    fn degenerate_class_rejected() {
        let t = table(Target::Toric, &[(&[0, 1], Rational::one())], 1);
        assert!(t.check_surface(&SurfaceData::f2()).is_err());
        assert!(GWTable::from_json(&json!({"target": "toric", "entries": [{"beta": [-1], "N": "1"}], "order": 1})).is_err());
    }

    #[test]
    fn catalog_wps_and_p1124() {
        let w = catalog("wps", &json!({"d": 3})).unwrap();
        assert!(w.frob.frobenius_check().all_pass());
        let h = |i: usize| unit_vector::<Rational>(6, i);
        assert_eq!(w.frob.pair(&h(1), &h(2)), q(1, 3));
        assert_eq!(w.frob.pair(&h(0), &h(3)), q(1, 3));
        let p = catalog("p1124", &json!({})).unwrap();
        assert!(p.frob.frobenius_check().all_pass(), "{:?}", p.frob.frobenius_check().failures());
        for e in catalog_examples() {
            assert!(e.frob.frobenius_check().all_pass(), "{}", e.name);
        }
        assert!(catalog("pn", &json!({"d": 3, "m": 0})).is_err());
        assert!(catalog("nope", &json!({})).is_err());
    }
}
