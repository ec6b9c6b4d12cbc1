//! Finite-dimensional commutative algebras given by structure constants.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::report::Report;
use crate::ringcore::{unit_vector, Matrix, Rational, RingDecl, RingError, SeriesElem, Subspace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("vector length {got} does not match algebra dimension {dim}")]
    Length { dim: usize, got: usize },
    #[error("subspace is not an ideal: e{basis} times ideal vector {vector} leaves it")]
    NotIdeal { basis: usize, vector: usize },
    #[error("invalid algebra data: {0}")]
    Invalid(String),
}

/// Coefficient ring of an algebra: rationals or truncated series.
pub trait Coeff: Clone + PartialEq + fmt::Debug + fmt::Display {
    fn zero_like(&self) -> Self;
    fn is_zero_coeff(&self) -> bool;
    fn c_add(&self, o: &Self) -> Self;
    fn c_sub(&self, o: &Self) -> Self;
    fn c_mul(&self, o: &Self) -> Self;
    fn from_rational_like(&self, q: &Rational) -> Self;
    fn constant_value(&self) -> Option<Rational>;
    fn to_json(&self) -> Value;
}

impl Coeff for Rational {
    fn zero_like(&self) -> Self {
        Rational::zero()
    }
    fn is_zero_coeff(&self) -> bool {
        self.is_zero()
    }
    fn c_add(&self, o: &Self) -> Self {
        self + o
    }
    fn c_sub(&self, o: &Self) -> Self {
        self - o
    }
    fn c_mul(&self, o: &Self) -> Self {
        self * o
    }
    fn from_rational_like(&self, q: &Rational) -> Self {
        q.clone()
    }
    fn constant_value(&self) -> Option<Rational> {
        Some(self.clone())
    }
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
}

impl Coeff for SeriesElem {
    fn zero_like(&self) -> Self {
        SeriesElem::zero(self.ring())
    }
    fn is_zero_coeff(&self) -> bool {
        self.is_zero()
    }
    fn c_add(&self, o: &Self) -> Self {
        self + o
    }
    fn c_sub(&self, o: &Self) -> Self {
        self - o
    }
    fn c_mul(&self, o: &Self) -> Self {
        self * o
    }
    fn from_rational_like(&self, q: &Rational) -> Self {
        SeriesElem::constant(self.ring(), q.clone())
    }
    fn constant_value(&self) -> Option<Rational> {
        SeriesElem::constant_value(self)
    }
    fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("series serializes")
    }
}

/// Structure constants C_{ij}^k with eᵢ∘eⱼ = Σₖ C_{ij}^k eₖ, plus a unit vector.
#[derive(Clone, PartialEq, Debug)]
pub struct FDAlgebra<R = Rational> {
    labels: Vec<String>,
    c: Vec<R>,
    unit: Vec<R>,
    proto: R,
}

impl<R: Coeff> FDAlgebra<R> {
    /// `c` is dense with index (i·dim + j)·dim + k.
    pub fn new(labels: Vec<String>, c: Vec<R>, unit: Vec<R>, proto: R) -> Result<Self, AlgebraError> {
        let n = labels.len();
        if c.len() != n * n * n || unit.len() != n {
            return Err(AlgebraError::Invalid("structure constant tensor has wrong size".into()));
        }
        Ok(FDAlgebra { labels, c, unit, proto: proto.zero_like() })
    }

    /// Build from a rule giving eᵢ∘eⱼ as a coefficient vector.
    pub fn from_products(
        labels: Vec<String>,
        proto: R,
        unit: Vec<R>,
        mut product: impl FnMut(usize, usize) -> Vec<R>,
    ) -> Result<Self, AlgebraError> {
        let n = labels.len();
        let mut c = vec![proto.zero_like(); n * n * n];
        for i in 0..n {
            for j in 0..n {
                let v = product(i, j);
                if v.len() != n {
                    return Err(AlgebraError::Length { dim: n, got: v.len() });
                }
                for (k, x) in v.into_iter().enumerate() {
                    c[(i * n + j) * n + k] = x;
                }
            }
        }
        Self::new(labels, c, unit, proto)
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, l: &str) -> Option<usize> {
        self.labels.iter().position(|x| x == l)
    }

    pub fn unit(&self) -> &[R] {
        &self.unit
    }

    pub fn proto(&self) -> &R {
        &self.proto
    }

    pub fn zero_vector(&self) -> Vec<R> {
        vec![self.proto.zero_like(); self.dim()]
    }

    pub fn basis_vector(&self, i: usize) -> Vec<R> {
        let mut v = self.zero_vector();
        v[i] = self.proto.from_rational_like(&Rational::one());
        v
    }

    pub fn coeff(&self, i: usize, j: usize, k: usize) -> &R {
        let n = self.dim();
        &self.c[(i * n + j) * n + k]
    }

    pub fn set_coeff(&mut self, i: usize, j: usize, k: usize, v: R) {
        let n = self.dim();
        self.c[(i * n + j) * n + k] = v;
    }

    /// Nonzero components of eᵢ∘eⱼ.
    pub fn sparse_product(&self, i: usize, j: usize) -> Vec<(usize, &R)> {
        (0..self.dim()).map(|k| (k, self.coeff(i, j, k))).filter(|(_, x)| !x.is_zero_coeff()).collect()
    }

    pub fn multiply(&self, x: &[R], y: &[R]) -> Result<Vec<R>, AlgebraError> {
        let n = self.dim();
        for v in [x, y] {
            if v.len() != n {
                return Err(AlgebraError::Length { dim: n, got: v.len() });
            }
        }
        let mut out = self.zero_vector();
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero_coeff() {
                continue;
            }
            for (j, yj) in y.iter().enumerate() {
                if yj.is_zero_coeff() {
                    continue;
                }
                let xy = xi.c_mul(yj);
                for (k, c) in self.sparse_product(i, j) {
                    out[k] = out[k].c_add(&xy.c_mul(c));
                }
            }
        }
        Ok(out)
    }

    /// Matrix of y ↦ x∘y as rows of coefficients: entry [k][j].
    pub fn mult_operator(&self, x: &[R]) -> Result<Vec<Vec<R>>, AlgebraError> {
        let n = self.dim();
        let cols = (0..n).map(|j| self.multiply(x, &self.basis_vector(j))).collect::<Result<Vec<_>, _>>()?;
        Ok((0..n).map(|k| (0..n).map(|j| cols[j][k].clone()).collect()).collect())
    }

    /// Commutativity, associativity on basis triples, and the unit law.
    pub fn algebra_check(&self) -> Report {
        let n = self.dim();
        let mut rep = Report::new();

        let mut w = None;
        'c: for i in 0..n {
            for j in 0..i {
                for k in 0..n {
                    if self.coeff(i, j, k) != self.coeff(j, i, k) {
                        w = Some(json!({"i": j, "j": i, "k": k}));
                        break 'c;
                    }
                }
            }
        }
        rep.record("commutativity", w);

        let prods: Vec<Vec<Vec<(usize, R)>>> = (0..n)
            .map(|i| (0..n).map(|j| self.sparse_product(i, j).into_iter().map(|(k, x)| (k, x.clone())).collect()).collect())
            .collect();
        let mut w = None;
        'a: for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut lhs = self.zero_vector();
                    for (m, cm) in &prods[i][j] {
                        for (l, cl) in &prods[*m][k] {
                            lhs[*l] = lhs[*l].c_add(&cm.c_mul(cl));
                        }
                    }
                    let mut rhs = self.zero_vector();
                    for (m, cm) in &prods[j][k] {
                        for (l, cl) in &prods[i][*m] {
                            rhs[*l] = rhs[*l].c_add(&cm.c_mul(cl));
                        }
                    }
                    if let Some(l) = (0..n).find(|&l| lhs[l] != rhs[l]) {
                        w = Some(json!({"i": i, "j": j, "k": k, "component": l,
                            "lhs": lhs[l].to_json(), "rhs": rhs[l].to_json()}));
                        break 'a;
                    }
                }
            }
        }
        rep.record("associativity", w);

        let mut w = None;
        for j in 0..n {
            match self.multiply(&self.unit, &self.basis_vector(j)) {
                Ok(v) if v == self.basis_vector(j) => {}
                _ => {
                    w = Some(json!({"basis": j}));
                    break;
                }
            }
        }
        rep.record("unit", w);
        rep
    }
}

impl FDAlgebra<Rational> {
    pub fn rational(labels: Vec<String>, unit: Vec<Rational>, product: impl FnMut(usize, usize) -> Vec<Rational>) -> Result<Self, AlgebraError> {
        Self::from_products(labels, Rational::zero(), unit, product)
    }

    pub fn mult_matrix(&self, x: &[Rational]) -> Result<Matrix, AlgebraError> {
        Ok(Matrix::from_rows(self.mult_operator(x)?)?)
    }

    pub fn is_ideal(&self, s: &Subspace<Rational>) -> Option<(usize, usize)> {
        for (v, b) in s.basis().iter().enumerate() {
            for i in 0..self.dim() {
                let p = self.multiply(&self.basis_vector(i), b).expect("dims agree");
                if !s.contains(&p) {
                    return Some((i, v));
                }
            }
        }
        None
    }

    /// Smallest ideal containing `gens`, by saturation.
    pub fn ideal_generated(&self, gens: &[Vec<Rational>]) -> Result<IdealSubspace, AlgebraError> {
        let n = self.dim();
        let mut s = Subspace::from_vectors(n, gens)?;
        loop {
            let mut vecs = s.basis().to_vec();
            for b in s.basis() {
                for i in 0..n {
                    vecs.push(self.multiply(&self.basis_vector(i), b)?);
                }
            }
            let next = Subspace::from_vectors(n, &vecs)?;
            if next.dim() == s.dim() {
                return Ok(IdealSubspace { subspace: next });
            }
            s = next;
        }
    }

    /// Quotient by an ideal, in the basis of unit vectors at pivot-free columns.
    ///
    /// Returns the quotient and the projection matrix A → A/I.
    pub fn quotient_algebra(&self, ideal: &IdealSubspace) -> Result<(FDAlgebra<Rational>, Matrix), AlgebraError> {
        let s = &ideal.subspace;
        if let Some((basis, vector)) = self.is_ideal(s) {
            return Err(AlgebraError::NotIdeal { basis, vector });
        }
        let n = self.dim();
        let free: Vec<usize> = (0..n).filter(|c| !s.pivots().contains(c)).collect();
        let m = free.len();
        // x mod I is determined by its reduced entries at the free columns.
        let proj_vec = |x: &[Rational]| -> Vec<Rational> {
            let r = s.reduce(x);
            free.iter().map(|&c| r[c].clone()).collect()
        };
        let proj = Matrix::from_cols(m, &(0..n).map(|j| proj_vec(&unit_vector(n, j))).collect::<Vec<_>>());
        let labels = free.iter().map(|&c| self.labels[c].clone()).collect();
        let unit = proj_vec(&self.unit);
        let q = FDAlgebra::rational(labels, unit, |a, b| {
            let p = self.multiply(&unit_vector(n, free[a]), &unit_vector(n, free[b])).expect("dims agree");
            proj_vec(&p)
        })?;
        Ok((q, proj))
    }
}

impl FDAlgebra<SeriesElem> {
    /// Constant algebra if no structure constant depends on the coordinates.
    pub fn to_constant(&self) -> Option<FDAlgebra<Rational>> {
        let c: Option<Vec<Rational>> = self.c.iter().map(|x| x.constant_value()).collect();
        let u: Option<Vec<Rational>> = self.unit.iter().map(|x| x.constant_value()).collect();
        FDAlgebra::new(self.labels.clone(), c?, u?, Rational::zero()).ok()
    }
}

/// Subspace closed under multiplication by the algebra.
#[derive(Clone, PartialEq, Debug)]
pub struct IdealSubspace {
    subspace: Subspace<Rational>,
}

impl IdealSubspace {
    pub fn new(a: &FDAlgebra<Rational>, subspace: Subspace<Rational>) -> Result<Self, AlgebraError> {
        if subspace.ambient_dim() != a.dim() {
            return Err(AlgebraError::Length { dim: a.dim(), got: subspace.ambient_dim() });
        }
        if let Some((basis, vector)) = a.is_ideal(&subspace) {
            return Err(AlgebraError::NotIdeal { basis, vector });
        }
        Ok(IdealSubspace { subspace })
    }

    pub fn subspace(&self) -> &Subspace<Rational> {
        &self.subspace
    }

    pub fn dim(&self) -> usize {
        self.subspace.dim()
    }
}

/// Free functions mirroring the method API.
/// Parse a linear combination of basis labels such as `3*H - 1/2*E^2 + 1`.
///
/// A bare number multiplies the unit label `1` when no basis vector carries that label.
pub fn parse_element(labels: &[String], unit: &[Rational], text: &str) -> Result<Vec<Rational>, AlgebraError> {
    let n = labels.len();
    let mut out = vec![Rational::zero(); n];
    let src: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if src.is_empty() {
        return Err(AlgebraError::Invalid("empty element".into()));
    }
    let mut terms = Vec::new();
    let mut start = 0;
    for (i, ch) in src.char_indices() {
        // a sign after '^' or '*' belongs to the term
        if (ch == '+' || ch == '-') && i > 0 && !matches!(src.as_bytes()[i - 1], b'^' | b'*') {
            terms.push(&src[start..i]);
            start = i;
        }
    }
    terms.push(&src[start..]);
    for t in terms {
        let (neg, body) = match t.strip_prefix('-') {
            Some(b) => (true, b),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (coef, label) = match body.split_once('*') {
            Some((c, l)) => (
                c.parse::<Rational>().map_err(|_| AlgebraError::Invalid(format!("bad coefficient {c:?} in {text:?}")))?,
                l,
            ),
            None => match body.parse::<Rational>() {
                Ok(c) if !labels.iter().any(|l| l == body) => (c, "1"),
                _ => (Rational::one(), body),
            },
        };
        let coef = if neg { -coef } else { coef };
        if let Some(i) = labels.iter().position(|l| l == label) {
            out[i] = &out[i] + &coef;
        } else if label == "1" {
            for (o, u) in out.iter_mut().zip(unit) {
                *o = &*o + &(&coef * u);
            }
        } else {
            return Err(AlgebraError::Invalid(format!("unknown basis label {label:?} in {text:?}; labels are {labels:?}")));
        }
    }
    Ok(out)
}

pub fn algebra_check<R: Coeff>(a: &FDAlgebra<R>) -> Report {
    a.algebra_check()
}

pub fn multiply<R: Coeff>(a: &FDAlgebra<R>, x: &[R], y: &[R]) -> Result<Vec<R>, AlgebraError> {
    a.multiply(x, y)
}

pub fn ideal_generated(a: &FDAlgebra<Rational>, gens: &[Vec<Rational>]) -> Result<IdealSubspace, AlgebraError> {
    a.ideal_generated(gens)
}

pub fn quotient_algebra(a: &FDAlgebra<Rational>, i: &IdealSubspace) -> Result<(FDAlgebra<Rational>, Matrix), AlgebraError> {
    a.quotient_algebra(i)
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    i: usize,
    j: usize,
    k: usize,
    value: Value,
}

#[derive(Serialize, Deserialize)]
struct AlgebraJson {
    dim: usize,
    basis: Vec<String>,
    unit: Vec<Value>,
    #[serde(rename = "C")]
    c: Vec<EntryJson>,
    coeff_ring: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    ring: Option<RingDecl>,
}

fn entries_json<R: Coeff>(a: &FDAlgebra<R>) -> Vec<EntryJson> {
    let n = a.dim();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for (k, v) in a.sparse_product(i, j) {
                out.push(EntryJson { i, j, k, value: v.to_json() });
            }
        }
    }
    out
}

impl FDAlgebra<Rational> {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(AlgebraJson {
            dim: self.dim(),
            basis: self.labels.clone(),
            unit: self.unit.iter().map(|x| x.to_json()).collect(),
            c: entries_json(self),
            coeff_ring: "rational".into(),
            ring: None,
        })
        .expect("algebra serializes")
    }

    pub fn from_json(v: &Value) -> Result<Self, AlgebraError> {
        let j: AlgebraJson = serde_json::from_value(v.clone()).map_err(|e| AlgebraError::Invalid(e.to_string()))?;
        if j.coeff_ring != "rational" {
            return Err(AlgebraError::Invalid(format!("expected rational coefficients, got {:?}", j.coeff_ring)));
        }
        let parse = |x: &Value| -> Result<Rational, AlgebraError> {
            serde_json::from_value(x.clone()).map_err(|e| AlgebraError::Invalid(e.to_string()))
        };
        let n = j.dim;
        if j.basis.len() != n {
            return Err(AlgebraError::Invalid("basis length differs from dim".into()));
        }
        let unit = j.unit.iter().map(parse).collect::<Result<Vec<_>, _>>()?;
        let mut c = vec![Rational::zero(); n * n * n];
        for e in &j.c {
            if e.i >= n || e.j >= n || e.k >= n {
                return Err(AlgebraError::Invalid(format!("entry index ({},{},{}) out of range", e.i, e.j, e.k)));
            }
            c[(e.i * n + e.j) * n + e.k] = parse(&e.value)?;
        }
        Self::new(j.basis, c, unit, Rational::zero())
    }
}

impl FDAlgebra<SeriesElem> {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(AlgebraJson {
            dim: self.dim(),
            basis: self.labels.clone(),
            unit: self.unit.iter().map(|x| x.to_json()).collect(),
            c: entries_json(self),
            coeff_ring: "series".into(),
            ring: Some((**self.proto.ring()).clone()),
        })
        .expect("algebra serializes")
    }

    pub fn from_json(v: &Value) -> Result<Self, AlgebraError> {
        let j: AlgebraJson = serde_json::from_value(v.clone()).map_err(|e| AlgebraError::Invalid(e.to_string()))?;
        let decl = j.ring.ok_or_else(|| AlgebraError::Invalid("series algebra needs a ring declaration".into()))?;
        let ring: Arc<RingDecl> = RingDecl::new(decl.poly_vars, decl.exp_vars, decl.order)?;
        let parse = |x: &Value| -> Result<SeriesElem, AlgebraError> {
            match x {
                Value::String(_) | Value::Number(_) => {
                    let q: Rational = serde_json::from_value(x.clone()).map_err(|e| AlgebraError::Invalid(e.to_string()))?;
                    Ok(SeriesElem::constant(&ring, q))
                }
                _ => {
                    let s: SeriesElem = serde_json::from_value(x.clone()).map_err(|e| AlgebraError::Invalid(e.to_string()))?;
                    Ok(s.reembed(&ring)?)
                }
            }
        };
        let n = j.dim;
        let unit = j.unit.iter().map(parse).collect::<Result<Vec<_>, _>>()?;
        let mut c = vec![SeriesElem::zero(&ring); n * n * n];
        for e in &j.c {
            if e.i >= n || e.j >= n || e.k >= n {
                return Err(AlgebraError::Invalid(format!("entry index ({},{},{}) out of range", e.i, e.j, e.k)));
            }
            c[(e.i * n + e.j) * n + e.k] = parse(&e.value)?;
        }
        Self::new(j.basis, c, unit, SeriesElem::zero(&ring))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ringcore::{q, qv};

    /// ℂ[n]/(n^d) in the basis 1, n, …, n^{d-1}.
    fn truncated_poly(d: usize) -> FDAlgebra {
        let labels = (0..d).map(|i| format!("n{i}")).collect();
        FDAlgebra::rational(labels, unit_vector(d, 0), |i, j| {
            let mut v = vec![Rational::zero(); d];
            if i + j < d {
                v[i + j] = Rational::one();
            }
            v
        })
        .unwrap()
    }

    #[test]
    fn truncated_poly_passes() {
        assert!(truncated_poly(4).algebra_check().all_pass());
    }

    #[test]
    fn noncommutative_witness() {
        let mut a = truncated_poly(2);
        a.set_coeff(0, 1, 0, Rational::one());
        let r = a.algebra_check();
        let c = r.get("commutativity").unwrap();
        assert_eq!(c.witness.as_ref().unwrap()["i"], 0);
        assert_eq!(c.witness.as_ref().unwrap()["j"], 1);
    }

    #[test]
    fn ideal_of_n() {
        let a = truncated_poly(4);
        let i = a.ideal_generated(&[qv(&[0, 1, 0, 0])]).unwrap();
        assert_eq!(i.dim(), 3);
        let all = a.ideal_generated(&[qv(&[1, 0, 0, 0])]).unwrap();
        assert_eq!(all.dim(), 4);
    }

    #[test]
    fn quotient_by_zero_and_by_n2() {
        let a = truncated_poly(4);
        let z = a.ideal_generated(&[]).unwrap();
        let (qa, p) = a.quotient_algebra(&z).unwrap();
        assert_eq!(qa, a);
        assert_eq!(p, Matrix::identity(4));
        let i = a.ideal_generated(&[qv(&[0, 0, 1, 0])]).unwrap();
        let (qa, _) = a.quotient_algebra(&i).unwrap();
        assert_eq!(qa, truncated_poly(2));
    }

    #[test]
    fn not_an_ideal() {
        let a = truncated_poly(3);
        let s = Subspace::from_vectors(3, &[qv(&[0, 1, 0])]).unwrap();
        assert!(IdealSubspace::new(&a, s).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let mut a = truncated_poly(3);
        a.set_coeff(1, 1, 2, q(1, 2));
        let back = FDAlgebra::<Rational>::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn parse_linear_combinations() {
        let labels: Vec<String> = ["1", "H", "H^2", "E"].iter().map(|s| s.to_string()).collect();
        let unit = unit_vector(4, 0);
        let p = |s: &str| parse_element(&labels, &unit, s);
        assert_eq!(p("3*H").unwrap(), crate::ringcore::qv(&[0, 3, 0, 0]));
        assert_eq!(p("H^2 - 1/2*E + 2").unwrap(), vec![Rational::int(2), Rational::zero(), Rational::one(), Rational::new(-1, 2)]);
        assert_eq!(p("-H").unwrap(), crate::ringcore::qv(&[0, -1, 0, 0]));
        assert!(p("X").is_err());
        assert!(p("a*H").is_err());
    }
}
