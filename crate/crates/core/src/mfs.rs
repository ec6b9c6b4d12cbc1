//! Frobenius structures and mixed Frobenius structures in flat coordinates.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::fdalg::{AlgebraError, FDAlgebra};
use crate::frobenius::{nilpotent_levels, FrobError};
use crate::report::Report;
use crate::ringcore::{ExpVar, Matrix, Rational, RingDecl, RingError, SeriesElem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MfsError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Frob(#[from] FrobError),
    #[error("invalid structure data: {0}")]
    Invalid(String),
    #[error("coordinate {0:?} enters the Euler field but is not a polynomial variable")]
    NotPolynomial(String),
    #[error("multiplication by the nilpotent field is not constant in the flat frame")]
    NotConstant,
    #[error("[E,n] = {0:?} is not zero")]
    EulerBracket(Vec<Rational>),
    #[error("[E,n^{0}] differs from ({0}-1) n^{0}")]
    EulerPower(usize),
    #[error("no level {0}")]
    InvalidLevel(i32),
    #[error("slice constants: {0}")]
    Slice(String),
    #[error("frame change is not adapted to the filtration: {0}")]
    Frame(String),
}

/// Affine Euler field E^a = Σ_b linear[a][b] t^b + constant[a] in a flat frame.
#[derive(Clone, PartialEq, Debug)]
pub struct EulerField {
    pub linear: Matrix,
    pub constant: Vec<Rational>,
}

impl EulerField {
    pub fn new(linear: Matrix, constant: Vec<Rational>) -> Self {
        EulerField { linear, constant }
    }

    pub fn zero(n: usize) -> Self {
        EulerField { linear: Matrix::zeros(n, n), constant: vec![Rational::zero(); n] }
    }

    /// Build from sparse (target, source, coef) and (target, coef) lists.
    pub fn from_terms(n: usize, linear: &[(usize, usize, Rational)], constant: &[(usize, Rational)]) -> Self {
        let mut e = Self::zero(n);
        for (t, s, c) in linear {
            e.linear.set(*t, *s, c.clone());
        }
        for (t, c) in constant {
            e.constant[*t] = c.clone();
        }
        e
    }

    pub fn dim(&self) -> usize {
        self.constant.len()
    }

    /// Same field in the frame with columns `b` (expressed in the current frame).
    pub fn change_frame(&self, b: &Matrix, binv: &Matrix) -> Result<EulerField, RingError> {
        Ok(EulerField { linear: binv.mul(&self.linear)?.mul(b)?, constant: binv.mul_vec(&self.constant)? })
    }

    pub fn to_json(&self, labels: &[String]) -> Value {
        let n = self.dim();
        let mut lin = Vec::new();
        for t in 0..n {
            for s in 0..n {
                let c = self.linear.get(t, s);
                if !c.is_zero() {
                    lin.push(json!({"target": labels[t], "source": labels[s], "coef": c}));
                }
            }
        }
        let cst: Vec<Value> = (0..n)
            .filter(|&t| !self.constant[t].is_zero())
            .map(|t| json!({"target": labels[t], "coef": self.constant[t]}))
            .collect();
        json!({"linear": lin, "constant": cst})
    }

    pub fn from_json(v: &Value, labels: &[String]) -> Result<Self, MfsError> {
        #[derive(Deserialize)]
        struct Lin {
            target: String,
            source: String,
            coef: Rational,
        }
        #[derive(Deserialize)]
        struct Cst {
            target: String,
            coef: Rational,
        }
        #[derive(Deserialize)]
        struct E {
            #[serde(default)]
            linear: Vec<Lin>,
            #[serde(default)]
            constant: Vec<Cst>,
        }
        let e: E = serde_json::from_value(v.clone()).map_err(|e| MfsError::Invalid(format!("euler: {e}")))?;
        let idx = |l: &str| labels.iter().position(|x| x == l).ok_or_else(|| MfsError::Invalid(format!("unknown label {l:?}")));
        let mut out = Self::zero(labels.len());
        for l in e.linear {
            out.linear.set(idx(&l.target)?, idx(&l.source)?, l.coef);
        }
        for c in e.constant {
            out.constant[idx(&c.target)?] = c.coef;
        }
        Ok(out)
    }
}

/// Coordinates x of the series ring and a constant frame P (columns) of flat vector fields.
#[derive(Clone, Debug)]
pub struct FlatFrame {
    pub ring: Arc<RingDecl>,
    pub coords: Vec<String>,
    pub p: Matrix,
    pub pinv: Matrix,
}

impl FlatFrame {
    pub fn new(ring: Arc<RingDecl>, coords: Vec<String>, p: Matrix) -> Result<Self, MfsError> {
        if p.rows() != coords.len() || !p.is_square() {
            return Err(MfsError::Invalid("frame must be square in the coordinate count".into()));
        }
        for c in &coords {
            if !ring.knows_var(c) {
                return Err(RingError::UnknownVariable(c.clone()).into());
            }
        }
        let pinv = p.inverse()?;
        Ok(FlatFrame { ring, coords, p, pinv })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Derivative along frame vector a.
    pub fn derive(&self, s: &SeriesElem, a: usize) -> Result<SeriesElem, MfsError> {
        let mut out = SeriesElem::zero(&self.ring);
        for (i, x) in self.coords.iter().enumerate() {
            let c = self.p.get(i, a);
            if !c.is_zero() {
                out += &s.derive(x)?.scale(c);
            }
        }
        Ok(out)
    }

    /// The flat coordinate dual to frame vector a, as a ring element.
    pub fn flat_coord(&self, a: usize) -> Result<SeriesElem, MfsError> {
        let mut out = SeriesElem::zero(&self.ring);
        for (i, x) in self.coords.iter().enumerate() {
            let c = self.pinv.get(a, i);
            if !c.is_zero() {
                let v = SeriesElem::poly_var(&self.ring, x).map_err(|_| MfsError::NotPolynomial(x.clone()))?;
                out += &v.scale(c);
            }
        }
        Ok(out)
    }

    /// E^a as ring elements.
    pub fn euler_components(&self, e: &EulerField) -> Result<Vec<SeriesElem>, MfsError> {
        let n = self.dim();
        let mut coords: Vec<Option<SeriesElem>> = vec![None; n];
        let mut out = Vec::with_capacity(n);
        for a in 0..n {
            let mut s = SeriesElem::constant(&self.ring, e.constant[a].clone());
            for b in 0..n {
                let c = e.linear.get(a, b);
                if c.is_zero() {
                    continue;
                }
                if coords[b].is_none() {
                    coords[b] = Some(self.flat_coord(b)?);
                }
                s += &coords[b].as_ref().expect("just set").scale(c);
            }
            out.push(s);
        }
        Ok(out)
    }

    /// E(f) = Σ E^a ∂_a f.
    pub fn euler_derivative(&self, comps: &[SeriesElem], f: &SeriesElem) -> Result<SeriesElem, MfsError> {
        let mut out = SeriesElem::zero(&self.ring);
        for (a, ea) in comps.iter().enumerate() {
            if ea.is_zero() {
                continue;
            }
            let d = self.derive(f, a)?;
            if !d.is_zero() {
                out += &(ea * &d);
            }
        }
        Ok(out)
    }
}

pub fn idx3(n: usize, i: usize, j: usize, k: usize) -> usize {
    (i * n + j) * n + k
}

/// Transform C^k_{ij} into the frame with columns `b`: C' = B⁻¹ C(B·, B·).
pub fn transform_c(ring: &Arc<RingDecl>, c: &[SeriesElem], n: usize, b: &Matrix, binv: &Matrix) -> Vec<SeriesElem> {
    let m = b.cols();
    let zero = SeriesElem::zero(ring);
    // products in old frame of new basis vectors
    let mut out = vec![zero.clone(); m * m * m];
    for a in 0..m {
        for bb in a..m {
            let mut v = vec![zero.clone(); n];
            for i in 0..n {
                let pia = b.get(i, a);
                if pia.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let pjb = b.get(j, bb);
                    if pjb.is_zero() {
                        continue;
                    }
                    let f = pia * pjb;
                    for (k, vk) in v.iter_mut().enumerate() {
                        let cc = &c[idx3(n, i, j, k)];
                        if !cc.is_zero() {
                            *vk += &cc.scale(&f);
                        }
                    }
                }
            }
            for kk in 0..m {
                let mut s = zero.clone();
                for (k, vk) in v.iter().enumerate() {
                    let f = binv.get(kk, k);
                    if !f.is_zero() && !vk.is_zero() {
                        s += &vk.scale(f);
                    }
                }
                out[idx3(m, bb, a, kk)] = s.clone();
                out[idx3(m, a, bb, kk)] = s;
            }
        }
    }
    out
}

fn series_entries_json(c: &[SeriesElem], labels: &[String]) -> Vec<Value> {
    let n = labels.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = &c[idx3(n, i, j, k)];
                if !v.is_zero() {
                    out.push(json!({"i": labels[i], "j": labels[j], "k": labels[k], "value": v}));
                }
            }
        }
    }
    out
}

fn series_entries_from_json(v: &Value, labels: &[String], ring: &Arc<RingDecl>) -> Result<Vec<SeriesElem>, MfsError> {
    #[derive(Deserialize)]
    struct Entry {
        i: String,
        j: String,
        k: String,
        value: Value,
    }
    let entries: Vec<Entry> = serde_json::from_value(v.clone()).map_err(|e| MfsError::Invalid(format!("C: {e}")))?;
    let n = labels.len();
    let idx = |l: &str| labels.iter().position(|x| x == l).ok_or_else(|| MfsError::Invalid(format!("unknown label {l:?}")));
    let mut c = vec![SeriesElem::zero(ring); n * n * n];
    for e in entries {
        let s = match &e.value {
            Value::String(_) | Value::Number(_) => {
                let q: Rational = serde_json::from_value(e.value.clone()).map_err(|x| MfsError::Invalid(x.to_string()))?;
                SeriesElem::constant(ring, q)
            }
            other => {
                let s: SeriesElem = serde_json::from_value(other.clone()).map_err(|x| MfsError::Invalid(x.to_string()))?;
                s.reembed(ring)?
            }
        };
        c[idx3(n, idx(&e.i)?, idx(&e.j)?, idx(&e.k)?)] = s;
    }
    Ok(c)
}

/// Frobenius structure with flat coordinates equal to the ring coordinates.
#[derive(Clone, PartialEq, Debug)]
pub struct FrobStructureData {
    pub ring: Arc<RingDecl>,
    pub coords: Vec<String>,
    pub labels: Vec<String>,
    pub metric: Matrix,
    pub c: Vec<SeriesElem>,
    pub unit: Vec<Rational>,
    pub euler: EulerField,
    pub d: Rational,
    pub model: Option<Value>,
}

impl FrobStructureData {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coeff(&self, i: usize, j: usize, k: usize) -> &SeriesElem {
        &self.c[idx3(self.dim(), i, j, k)]
    }

    pub fn frame(&self) -> Result<FlatFrame, MfsError> {
        FlatFrame::new(self.ring.clone(), self.coords.clone(), Matrix::identity(self.dim()))
    }

    pub fn algebra(&self) -> Result<FDAlgebra<SeriesElem>, MfsError> {
        let unit = self.unit.iter().map(|u| SeriesElem::constant(&self.ring, u.clone())).collect();
        Ok(FDAlgebra::new(self.labels.clone(), self.c.clone(), unit, SeriesElem::zero(&self.ring))?)
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "ring": *self.ring,
            "coords": self.coords,
            "labels": self.labels,
            "metric": self.metric,
            "C": series_entries_json(&self.c, &self.labels),
            "unit": self.unit,
            "euler": self.euler.to_json(&self.labels),
            "D": self.d,
            "order": self.ring.order,
        });
        if let Some(m) = &self.model {
            v["model"] = m.clone();
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<Self, MfsError> {
        #[derive(Deserialize)]
        struct Raw {
            ring: RingDecl,
            coords: Vec<String>,
            labels: Option<Vec<String>>,
            metric: Matrix,
            #[serde(rename = "C")]
            c: Value,
            unit: Vec<Rational>,
            euler: Value,
            #[serde(rename = "D")]
            d: Rational,
            model: Option<Value>,
        }
        let r: Raw = serde_json::from_value(v.clone()).map_err(|e| MfsError::Invalid(e.to_string()))?;
        let ring = RingDecl::new(r.ring.poly_vars, r.ring.exp_vars, r.ring.order)?;
        let labels = r.labels.unwrap_or_else(|| r.coords.clone());
        let n = r.coords.len();
        if labels.len() != n || r.unit.len() != n || r.metric.rows() != n || r.metric.cols() != n {
            return Err(MfsError::Invalid("inconsistent dimensions".into()));
        }
        let c = series_entries_from_json(&r.c, &labels, &ring)?;
        let euler = EulerField::from_json(&r.euler, &labels)?;
        Ok(FrobStructureData { ring, coords: r.coords, labels, metric: r.metric, c, unit: r.unit, euler, d: r.d, model: r.model })
    }
}

fn algebra_checks(rep: &mut Report, alg: &FDAlgebra<SeriesElem>) {
    rep.extend_prefixed("", alg.algebra_check());
}

/// Metric, unit, algebra axioms, potentiality, and the Euler conditions.
pub fn frobenius_structure_check(f: &FrobStructureData) -> Report {
    let mut rep = Report::new();
    rep.record("order", None);
    let n = f.dim();
    let g = &f.metric;
    let sym = (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).find(|&(i, j)| g.get(i, j) != g.get(j, i));
    rep.record("metric.symmetric", sym.map(|(i, j)| json!({"i": j, "j": i})));
    let nondeg = g.det().map(|d| !d.is_zero()).unwrap_or(false);
    rep.record("metric.nondegenerate", (!nondeg).then(|| json!({})));
    rep.record("metric.constant", None);

    let (frame, alg) = match (f.frame(), f.algebra()) {
        (Ok(fr), Ok(a)) => (fr, a),
        (Err(e), _) | (_, Err(e)) => {
            rep.fail("structure", json!({"error": e.to_string()}));
            return rep;
        }
    };
    algebra_checks(&mut rep, &alg);
    rep.record("unit.flat", None);

    // c_{xyz} = ⟨x, y∘z⟩; ∂_w c_{xyz} = ∂_z c_{xyw}
    let cten: Vec<SeriesElem> = (0..n * n * n)
        .map(|t| {
            let (x, y, z) = (t / (n * n), (t / n) % n, t % n);
            let mut s = SeriesElem::zero(&f.ring);
            for k in 0..n {
                let gxk = g.get(x, k);
                if !gxk.is_zero() {
                    s += &f.coeff(y, z, k).scale(gxk);
                }
            }
            s
        })
        .collect();
    let mut w = None;
    'c: for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for wv in 0..z {
                    let a = frame.derive(&cten[idx3(n, x, y, z)], wv);
                    let b = frame.derive(&cten[idx3(n, x, y, wv)], z);
                    match (a, b) {
                        (Ok(a), Ok(b)) if a == b => {}
                        _ => {
                            w = Some(json!({"x": x, "y": y, "z": z, "w": wv}));
                            break 'c;
                        }
                    }
                }
            }
        }
    }
    rep.record("potentiality", w);

    let mut w = None;
    'f: for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let mut lhs = SeriesElem::zero(&f.ring);
                for k in 0..n {
                    let gkz = g.get(k, z);
                    if !gkz.is_zero() {
                        lhs += &f.coeff(x, y, k).scale(gkz);
                    }
                }
                if lhs != cten[idx3(n, x, y, z)] {
                    w = Some(json!({"x": x, "y": y, "z": z}));
                    break 'f;
                }
            }
        }
    }
    rep.record("invariance", w);

    rep.record("euler.affine", None);
    let a = &f.euler.linear;
    let comps = match frame.euler_components(&f.euler) {
        Ok(c) => c,
        Err(e) => {
            rep.fail("euler.multiplication", json!({"error": e.to_string()}));
            return rep;
        }
    };
    let mut w = None;
    'e: for i in 0..n {
        for j in i..n {
            for m in 0..n {
                let cij = f.coeff(i, j, m);
                let mut lhs = match frame.euler_derivative(&comps, cij) {
                    Ok(v) => v,
                    Err(e) => {
                        w = Some(json!({"error": e.to_string()}));
                        break 'e;
                    }
                };
                for k in 0..n {
                    let amk = a.get(m, k);
                    if !amk.is_zero() {
                        lhs = &lhs - &f.coeff(i, j, k).scale(amk);
                    }
                    let aki = a.get(k, i);
                    if !aki.is_zero() {
                        lhs += &f.coeff(k, j, m).scale(aki);
                    }
                    let akj = a.get(k, j);
                    if !akj.is_zero() {
                        lhs += &f.coeff(i, k, m).scale(akj);
                    }
                }
                if &lhs != cij {
                    w = Some(json!({"i": i, "j": j, "m": m, "lhs": lhs.to_string(), "rhs": cij.to_string()}));
                    break 'e;
                }
            }
        }
    }
    rep.record("euler.multiplication", w);

    let two_minus_d = Rational::int(2) - &f.d;
    let mut w = None;
    'm: for i in 0..n {
        for j in 0..n {
            let mut s = Rational::zero();
            for k in 0..n {
                s = s + a.get(k, i) * g.get(k, j) + a.get(k, j) * g.get(i, k);
            }
            if s != &two_minus_d * g.get(i, j) {
                w = Some(json!({"i": i, "j": j, "lhs": s, "rhs": &two_minus_d * g.get(i, j)}));
                break 'm;
            }
        }
    }
    rep.record("euler.metric", w);
    rep
}

/// One frame vector: a constant vector field in ring coordinates, with its filtration level.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct FrameVector {
    pub label: String,
    pub level: i32,
    pub dir: Vec<Rational>,
}

/// Graded pairing η^{(k)} on the frame vectors of level k.
#[derive(Clone, PartialEq, Debug)]
pub struct LevelData {
    pub k: i32,
    pub indices: Vec<usize>,
    pub eta: Matrix,
}

/// Mixed Frobenius structure in an adapted flat frame.
#[derive(Clone, PartialEq, Debug)]
pub struct MFSData {
    pub ring: Arc<RingDecl>,
    pub coords: Vec<String>,
    pub frame: Vec<FrameVector>,
    pub c: Vec<SeriesElem>,
    pub unit: Vec<Rational>,
    pub levels: Vec<LevelData>,
    pub euler: EulerField,
    pub d: Rational,
    pub model: Option<Value>,
}

impl MFSData {
    pub fn dim(&self) -> usize {
        self.frame.len()
    }

    pub fn labels(&self) -> Vec<String> {
        self.frame.iter().map(|f| f.label.clone()).collect()
    }

    pub fn label_index(&self, l: &str) -> Option<usize> {
        self.frame.iter().position(|f| f.label == l)
    }

    pub fn coeff(&self, i: usize, j: usize, k: usize) -> &SeriesElem {
        &self.c[idx3(self.dim(), i, j, k)]
    }

    pub fn level(&self, k: i32) -> Option<&LevelData> {
        self.levels.iter().find(|l| l.k == k)
    }

    pub fn level_of(&self, a: usize) -> i32 {
        self.frame[a].level
    }

    pub fn flat_frame(&self) -> Result<FlatFrame, MfsError> {
        let p = Matrix::from_cols(self.coords.len(), &self.frame.iter().map(|f| f.dir.clone()).collect::<Vec<_>>());
        FlatFrame::new(self.ring.clone(), self.coords.clone(), p)
    }

    pub fn algebra(&self) -> Result<FDAlgebra<SeriesElem>, MfsError> {
        let unit = self.unit.iter().map(|u| SeriesElem::constant(&self.ring, u.clone())).collect();
        Ok(FDAlgebra::new(self.labels(), self.c.clone(), unit, SeriesElem::zero(&self.ring))?)
    }

    fn validate(&self) -> Result<(), MfsError> {
        let n = self.dim();
        if self.c.len() != n * n * n || self.unit.len() != n || self.euler.dim() != n {
            return Err(MfsError::Invalid("tensor sizes do not match the frame".into()));
        }
        let mut seen = vec![false; n];
        for l in &self.levels {
            if l.eta.rows() != l.indices.len() || l.eta.cols() != l.indices.len() {
                return Err(MfsError::Invalid(format!("eta at level {} has wrong size", l.k)));
            }
            for &i in &l.indices {
                if i >= n || seen[i] || self.frame[i].level != l.k {
                    return Err(MfsError::Invalid(format!("level {} index list is inconsistent", l.k)));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(MfsError::Invalid("frame vector without a level".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let labels = self.labels();
        let mut v = json!({
            "ring": *self.ring,
            "coords": self.coords,
            "frame": self.frame,
            "levels": self.levels.iter().map(|l| json!({
                "k": l.k,
                "labels": l.indices.iter().map(|&i| labels[i].clone()).collect::<Vec<_>>(),
                "eta": l.eta,
            })).collect::<Vec<_>>(),
            "C": series_entries_json(&self.c, &labels),
            "unit": self.unit,
            "euler": self.euler.to_json(&labels),
            "D": self.d,
            "order": self.ring.order,
        });
        if let Some(m) = &self.model {
            v["model"] = m.clone();
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<Self, MfsError> {
        #[derive(Deserialize)]
        struct Lvl {
            k: i32,
            labels: Vec<String>,
            eta: Matrix,
        }
        #[derive(Deserialize)]
        struct Raw {
            ring: RingDecl,
            coords: Vec<String>,
            frame: Vec<FrameVector>,
            levels: Vec<Lvl>,
            #[serde(rename = "C")]
            c: Value,
            unit: Vec<Rational>,
            euler: Value,
            #[serde(rename = "D")]
            d: Rational,
            order: Option<u32>,
            model: Option<Value>,
        }
        let r: Raw = serde_json::from_value(v.clone()).map_err(|e| MfsError::Invalid(e.to_string()))?;
        let order = r.order.unwrap_or(r.ring.order);
        let ring = RingDecl::new(r.ring.poly_vars, r.ring.exp_vars, order)?;
        let labels: Vec<String> = r.frame.iter().map(|f| f.label.clone()).collect();
        if r.frame.iter().any(|f| f.dir.len() != r.coords.len()) {
            return Err(MfsError::Invalid("frame vector length differs from coordinate count".into()));
        }
        let c = series_entries_from_json(&r.c, &labels, &ring)?;
        let euler = EulerField::from_json(&r.euler, &labels)?;
        let idx = |l: &str| labels.iter().position(|x| x == l).ok_or_else(|| MfsError::Invalid(format!("unknown label {l:?}")));
        let levels = r
            .levels
            .into_iter()
            .map(|l| Ok(LevelData { k: l.k, indices: l.labels.iter().map(|x| idx(x)).collect::<Result<_, MfsError>>()?, eta: l.eta }))
            .collect::<Result<Vec<_>, MfsError>>()?;
        let m = MFSData { ring, coords: r.coords, frame: r.frame, c, unit: r.unit, levels, euler, d: r.d, model: r.model };
        m.validate()?;
        Ok(m)
    }
}

/// Every condition of a mixed Frobenius structure, at the ring's truncation order.
pub fn mfs_check(m: &MFSData) -> Report {
    let mut rep = Report::new();
    rep.record("order", None);
    if let Err(e) = m.validate() {
        rep.fail("structure", json!({"error": e.to_string()}));
        return rep;
    }
    let n = m.dim();
    let frame = match m.flat_frame() {
        Ok(f) => f,
        Err(e) => {
            rep.fail("frame", json!({"error": e.to_string()}));
            return rep;
        }
    };
    let alg = match m.algebra() {
        Ok(a) => a,
        Err(e) => {
            rep.fail("structure", json!({"error": e.to_string()}));
            return rep;
        }
    };
    algebra_checks(&mut rep, &alg);
    rep.record("unit.flat", None);

    let w = m.levels.iter().find_map(|l| {
        let g = &l.eta;
        (0..g.rows())
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .find(|&(i, j)| g.get(i, j) != g.get(j, i))
            .map(|(i, j)| json!({"k": l.k, "a": j, "b": i}))
    });
    rep.record("eta.symmetric", w);
    let w = m.levels.iter().find(|l| !l.eta.det().map(|d| !d.is_zero()).unwrap_or(false)).map(|l| json!({"k": l.k}));
    rep.record("eta.invertible", w);
    rep.record("eta.constant", None);

    let lv = |a: usize| m.level_of(a);
    let mut w = None;
    'i: for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if (lv(a) < lv(c) || lv(b) < lv(c)) && !m.coeff(a, b, c).is_zero() {
                    w = Some(json!({"i": a, "j": b, "k": c}));
                    break 'i;
                }
            }
        }
    }
    rep.record("ideal", w);

    // Σ_d C_{l,b}^{d} η_{d,a} = Σ_d C_{l,a}^{d} η_{d,b}, a,b,d at level k
    let mut w = None;
    'g: for l in &m.levels {
        let idx = &l.indices;
        for x in 0..n {
            for (ai, &a) in idx.iter().enumerate() {
                for (bi, &b) in idx.iter().enumerate() {
                    let mut lhs = SeriesElem::zero(&m.ring);
                    let mut rhs = SeriesElem::zero(&m.ring);
                    for (di, &d) in idx.iter().enumerate() {
                        lhs += &m.coeff(x, b, d).scale(l.eta.get(di, ai));
                        rhs += &m.coeff(x, a, d).scale(l.eta.get(di, bi));
                    }
                    if lhs != rhs {
                        w = Some(json!({"k": l.k, "l": x, "a": a, "b": b}));
                        break 'g;
                    }
                }
            }
        }
    }
    rep.record("graded_frobenius", w);

    // ∂_{j} C_{a,l}^{b} symmetric in (j,l) for levels ≥ k, zero for level(j) < k
    let mut w_sym = None;
    let mut w_low = None;
    let mut err = None;
    'c: for lvl in &m.levels {
        for &a in &lvl.indices {
            for &b in &lvl.indices {
                let ders: Vec<Vec<SeriesElem>> = match (0..n)
                    .map(|l| (0..n).map(|j| frame.derive(m.coeff(a, l, b), j)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()
                {
                    Ok(d) => d,
                    Err(e) => {
                        err = Some(e);
                        break 'c;
                    }
                };
                for l in 0..n {
                    for j in 0..n {
                        if lv(j) < lvl.k && lv(l) >= lvl.k && !ders[l][j].is_zero() && w_low.is_none() {
                            w_low = Some(json!({"k": lvl.k, "a": a, "l": l, "b": b, "j": j}));
                        }
                        if lv(j) >= lvl.k && lv(l) >= lvl.k && j < l && ders[l][j] != ders[j][l] && w_sym.is_none() {
                            w_sym = Some(json!({"k": lvl.k, "a": a, "l": l, "b": b, "j": j}));
                        }
                    }
                }
            }
        }
    }
    if let Some(e) = err {
        rep.fail("c_symmetry", json!({"error": e.to_string()}));
    } else {
        rep.record("c_symmetry", w_sym);
        rep.record("c_lower_flat", w_low);
    }

    let e = &m.euler;
    let w = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .find(|&(a, b)| lv(b) < lv(a) && !e.linear.get(a, b).is_zero())
        .map(|(a, b)| json!({"target": a, "source": b}));
    rep.record("euler.linear", w);
    rep.record("euler.affine", None);

    let comps = match frame.euler_components(e) {
        Ok(c) => c,
        Err(err) => {
            rep.fail("euler.multiplication", json!({"error": err.to_string()}));
            return rep;
        }
    };
    let mut w = None;
    'em: for lvl in &m.levels {
        for la in 0..n {
            for &kb in &lvl.indices {
                for &kc in &lvl.indices {
                    let mut ec = SeriesElem::zero(&m.ring);
                    for (j, ej) in comps.iter().enumerate() {
                        let cc = m.coeff(j, kb, kc);
                        if lv(j) >= lvl.k && !cc.is_zero() && !ej.is_zero() {
                            ec += &(ej * cc);
                        }
                    }
                    let mut lhs = match frame.derive(&ec, la) {
                        Ok(v) => v,
                        Err(err) => {
                            w = Some(json!({"error": err.to_string()}));
                            break 'em;
                        }
                    };
                    for &kd in &lvl.indices {
                        let a1 = e.linear.get(kc, kd);
                        if !a1.is_zero() {
                            lhs = &lhs - &m.coeff(la, kb, kd).scale(a1);
                        }
                        let a2 = e.linear.get(kd, kb);
                        if !a2.is_zero() {
                            lhs += &m.coeff(la, kd, kc).scale(a2);
                        }
                    }
                    if &lhs != m.coeff(la, kb, kc) {
                        w = Some(json!({"k": lvl.k, "l": la, "b": kb, "c": kc, "lhs": lhs.to_string(), "rhs": m.coeff(la, kb, kc).to_string()}));
                        break 'em;
                    }
                }
            }
        }
    }
    rep.record("euler.multiplication", w);

    let mut w = None;
    'me: for lvl in &m.levels {
        let factor = Rational::int(2) - &m.d + Rational::int(lvl.k as i64);
        let idx = &lvl.indices;
        for (ai, &a) in idx.iter().enumerate() {
            for (bi, &b) in idx.iter().enumerate() {
                let mut s = Rational::zero();
                for (ci, &c) in idx.iter().enumerate() {
                    s = s + lvl.eta.get(bi, ci) * e.linear.get(c, a) + lvl.eta.get(ai, ci) * e.linear.get(c, b);
                }
                let rhs = &factor * lvl.eta.get(ai, bi);
                if s != rhs {
                    w = Some(json!({"k": lvl.k, "a": a, "b": b, "lhs": s, "rhs": rhs}));
                    break 'me;
                }
            }
        }
    }
    rep.record("euler.metric", w);
    rep
}

/// Constant matrix of n∘ (entry [k][j]), or an error if it depends on the coordinates.
pub fn constant_mult_matrix(f: &FrobStructureData, v: &[Rational]) -> Result<Matrix, MfsError> {
    let n = f.dim();
    let mut m = Matrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let mut s = SeriesElem::zero(&f.ring);
            for (i, vi) in v.iter().enumerate() {
                if !vi.is_zero() {
                    s += &f.coeff(i, j, k).scale(vi);
                }
            }
            m.set(k, j, s.constant_value().ok_or(MfsError::NotConstant)?);
        }
    }
    Ok(m)
}

/// Mixed Frobenius structure from a Frobenius structure and a flat nilpotent field n.
pub fn mfs_from_nilpotent(f: &FrobStructureData, n: &[Rational]) -> Result<MFSData, MfsError> {
    let dim = f.dim();
    if n.len() != dim {
        return Err(MfsError::Invalid("nilpotent vector has wrong length".into()));
    }
    let mn = constant_mult_matrix(f, n)?;
    let a = &f.euler.linear;
    let an = a.mul_vec(n)?;
    if an.iter().any(|x| !x.is_zero()) {
        return Err(MfsError::EulerBracket(an));
    }
    let (d, levels) = nilpotent_levels(&mn, &f.metric)?;
    // [E, n^k] = −A n^k must equal (k−1) n^k
    let mut nk = n.to_vec();
    for k in 1..=d {
        let lhs: Vec<Rational> = a.mul_vec(&nk)?.into_iter().map(|x| -x).collect();
        let rhs: Vec<Rational> = nk.iter().map(|x| x * Rational::from(k as i64 - 1)).collect();
        if lhs != rhs {
            return Err(MfsError::EulerPower(k));
        }
        nk = mn.mul_vec(&nk)?;
    }

    let mut frame = Vec::new();
    let mut lvls = Vec::new();
    for l in &levels {
        let start = frame.len();
        for (a, v) in l.complement.iter().enumerate() {
            frame.push(FrameVector { label: format!("L{}.{}", l.k, a + 1), level: l.k, dir: v.clone() });
        }
        lvls.push(LevelData { k: l.k, indices: (start..frame.len()).collect(), eta: l.pairing.clone() });
    }
    let p = Matrix::from_cols(dim, &frame.iter().map(|f| f.dir.clone()).collect::<Vec<_>>());
    let pinv = p.inverse()?;
    let c = transform_c(&f.ring, &f.c, dim, &p, &pinv);
    let euler = f.euler.change_frame(&p, &pinv)?;
    let unit = pinv.mul_vec(&f.unit)?;
    Ok(MFSData {
        ring: f.ring.clone(),
        coords: f.coords.clone(),
        frame,
        c,
        unit,
        levels: lvls,
        euler,
        d: &f.d + Rational::one(),
        model: f.model.clone(),
    })
}

/// Assemble MFS data from coordinate-basis tensors and an adapted frame.
///
/// `etas` gives each level k with its pairing on the frame vectors of that level, in frame order.
#[allow(clippy::too_many_arguments)]
pub fn mfs_in_frame(
    ring: Arc<RingDecl>,
    coords: Vec<String>,
    coord_c: &[SeriesElem],
    coord_unit: &[Rational],
    coord_euler: &EulerField,
    frame: Vec<FrameVector>,
    etas: Vec<(i32, Matrix)>,
    d: Rational,
) -> Result<MFSData, MfsError> {
    let n = coords.len();
    if frame.len() != n || coord_c.len() != n * n * n {
        return Err(MfsError::Invalid("frame and tensor sizes differ".into()));
    }
    let p = Matrix::from_cols(n, &frame.iter().map(|f| f.dir.clone()).collect::<Vec<_>>());
    let pinv = p.inverse()?;
    let levels = etas
        .into_iter()
        .map(|(k, eta)| LevelData { k, indices: (0..n).filter(|&a| frame[a].level == k).collect(), eta })
        .collect();
    let m = MFSData {
        c: transform_c(&ring, coord_c, n, &p, &pinv),
        unit: pinv.mul_vec(coord_unit)?,
        euler: coord_euler.change_frame(&p, &pinv)?,
        ring,
        coords,
        frame,
        levels,
        d,
        model: None,
    };
    m.validate()?;
    Ok(m)
}

/// Restrict to the slice where all flat coordinates of level ≤ k are constant.
///
/// `constants` assigns values to the dropped flat coordinates by frame label; missing ones are 0.
pub fn transversal_slice(m: &MFSData, k: i32, constants: &BTreeMap<String, Rational>) -> Result<MFSData, MfsError> {
    if !m.levels.iter().any(|l| l.k == k) {
        return Err(MfsError::InvalidLevel(k));
    }
    let n = m.dim();
    let low: Vec<usize> = (0..n).filter(|&a| m.level_of(a) <= k).collect();
    let high: Vec<usize> = (0..n).filter(|&a| m.level_of(a) > k).collect();
    for l in constants.keys() {
        match m.label_index(l) {
            Some(a) if m.level_of(a) <= k => {}
            _ => return Err(MfsError::Slice(format!("{l:?} is not a dropped coordinate"))),
        }
    }
    let ncoord = m.coords.len();
    let dropped: Vec<usize> = (0..ncoord).filter(|&i| high.iter().all(|&a| m.frame[a].dir[i].is_zero())).collect();
    let kept: Vec<usize> = (0..ncoord).filter(|i| !dropped.contains(i)).collect();
    if dropped.len() != low.len() {
        return Err(MfsError::Slice("kept frame is not supported on a coordinate subset".into()));
    }
    let p_dl = Matrix::from_fn(dropped.len(), low.len(), |i, a| m.frame[low[a]].dir[dropped[i]].clone());
    let cvec: Vec<Rational> = low.iter().map(|&a| constants.get(&m.frame[a].label).cloned().unwrap_or_default()).collect();
    let x_d = p_dl.mul_vec(&cvec)?;

    let mut assign = BTreeMap::new();
    let mut removed_exp = Vec::new();
    for (&i, v) in dropped.iter().zip(&x_d) {
        let name = &m.coords[i];
        if let Some(e) = m.ring.exp_index_of_var(name) {
            if !v.is_zero() {
                return Err(MfsError::Slice(format!("{name} carries an exponential and can only be sliced at 0")));
            }
            assign.insert(m.ring.exp_vars[e].name.clone(), Rational::one());
            removed_exp.push(e);
        }
        if m.ring.poly_index(name).is_some() {
            assign.insert(name.clone(), v.clone());
        }
    }
    let dropped_names: Vec<&String> = dropped.iter().map(|&i| &m.coords[i]).collect();
    let ring = RingDecl::new(
        m.ring.poly_vars.iter().filter(|v| !dropped_names.contains(v)).cloned().collect(),
        m.ring
            .exp_vars
            .iter()
            .enumerate()
            .filter(|(i, _)| !removed_exp.contains(i))
            .map(|(_, e)| e.clone())
            .collect::<Vec<ExpVar>>(),
        m.ring.order,
    )?;
    let restrict = |s: &SeriesElem| -> Result<SeriesElem, MfsError> { Ok(s.specialize(&assign)?.reembed(&ring)?) };

    let h = high.len();
    let mut c = Vec::with_capacity(h * h * h);
    for &a in &high {
        for &b in &high {
            for &cc in &high {
                c.push(restrict(m.coeff(a, b, cc))?);
            }
        }
    }
    let frame: Vec<FrameVector> = high
        .iter()
        .map(|&a| FrameVector {
            label: m.frame[a].label.clone(),
            level: m.frame[a].level,
            dir: kept.iter().map(|&i| m.frame[a].dir[i].clone()).collect(),
        })
        .collect();
    let full_p = Matrix::from_cols(ncoord, &m.frame.iter().map(|f| f.dir.clone()).collect::<Vec<_>>());
    let pinv = full_p.inverse()?;
    let linear = Matrix::from_fn(h, h, |i, j| m.euler.linear.get(high[i], high[j]).clone());
    let shift: Vec<Rational> = high
        .iter()
        .map(|&s| dropped.iter().zip(&x_d).map(|(&i, x)| pinv.get(s, i) * x).sum())
        .collect();
    let lin_shift = linear.mul_vec(&shift)?;
    let constant: Vec<Rational> = high.iter().zip(lin_shift).map(|(&a, s)| &m.euler.constant[a] + &s).collect();
    let pos = |a: usize| high.iter().position(|&x| x == a).expect("kept index");
    let levels = m
        .levels
        .iter()
        .filter(|l| l.k > k)
        .map(|l| LevelData { k: l.k, indices: l.indices.iter().map(|&a| pos(a)).collect(), eta: l.eta.clone() })
        .collect();
    Ok(MFSData {
        ring,
        coords: kept.iter().map(|&i| m.coords[i].clone()).collect(),
        frame,
        c,
        unit: high.iter().map(|&a| m.unit[a].clone()).collect(),
        levels,
        euler: EulerField::new(linear, constant),
        d: m.d.clone(),
        model: m.model.clone(),
    })
}

/// Re-express an MFS in another adapted flat frame on the same coordinates.
pub fn to_frame(m: &MFSData, new_frame: Vec<FrameVector>) -> Result<MFSData, MfsError> {
    let n = m.dim();
    if new_frame.len() != n {
        return Err(MfsError::Frame("wrong number of frame vectors".into()));
    }
    let old = m.flat_frame()?;
    let pnew = Matrix::from_cols(m.coords.len(), &new_frame.iter().map(|f| f.dir.clone()).collect::<Vec<_>>());
    let b = old.pinv.mul(&pnew)?;
    let binv = b.inverse()?;
    for (j, f) in new_frame.iter().enumerate() {
        for i in 0..n {
            if m.level_of(i) > f.level && !b.get(i, j).is_zero() {
                return Err(MfsError::Frame(format!("{} leaves its filtration level", f.label)));
            }
        }
    }
    let mut levels = Vec::new();
    for l in &m.levels {
        let new_idx: Vec<usize> = (0..n).filter(|&j| new_frame[j].level == l.k).collect();
        if new_idx.len() != l.indices.len() {
            return Err(MfsError::Frame(format!("rank of level {} changes", l.k)));
        }
        let bk = Matrix::from_fn(l.indices.len(), new_idx.len(), |i, j| b.get(l.indices[i], new_idx[j]).clone());
        let eta = bk.transpose().mul(&l.eta)?.mul(&bk)?;
        levels.push(LevelData { k: l.k, indices: new_idx, eta });
    }
    let c = transform_c(&m.ring, &m.c, n, &b, &binv);
    Ok(MFSData {
        ring: m.ring.clone(),
        coords: m.coords.clone(),
        frame: new_frame,
        c,
        unit: binv.mul_vec(&m.unit)?,
        levels,
        euler: m.euler.change_frame(&b, &binv)?,
        d: m.d.clone(),
        model: m.model.clone(),
    })
}

/// Describe the first difference between two MFS data sets, if any.
pub fn mfs_difference(a: &MFSData, b: &MFSData) -> Option<Value> {
    if a.coords != b.coords || *a.ring != *b.ring {
        return Some(json!({"field": "coordinates"}));
    }
    if a.frame != b.frame {
        return Some(json!({"field": "frame"}));
    }
    if a.d != b.d {
        return Some(json!({"field": "D", "left": a.d, "right": b.d}));
    }
    if let Some(i) = (0..a.c.len()).find(|&i| a.c[i] != b.c[i]) {
        let n = a.dim();
        return Some(json!({"field": "C", "i": i / (n * n), "j": (i / n) % n, "k": i % n,
            "left": a.c[i].to_string(), "right": b.c[i].to_string()}));
    }
    if a.levels != b.levels {
        return Some(json!({"field": "levels"}));
    }
    if a.euler != b.euler {
        return Some(json!({"field": "euler"}));
    }
    if a.unit != b.unit {
        return Some(json!({"field": "unit"}));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ringcore::{qv, Monomial};

    /// Classical H*(P²) with t⁰ and Euler t⁰∂₀ − t²∂₂, charge 2.
    fn classical_p2() -> FrobStructureData {
        let ring = RingDecl::new(vec!["t0".into(), "t1".into(), "t2".into()], vec![], 0).unwrap();
        let n = 3;
        let mut c = vec![SeriesElem::zero(&ring); 27];
        for i in 0..n {
            for j in 0..n {
                if i + j < n {
                    c[idx3(n, i, j, i + j)] = SeriesElem::one(&ring);
                }
            }
        }
        let metric = Matrix::from_fn(3, 3, |i, j| if i + j == 2 { Rational::one() } else { Rational::zero() });
        let euler = EulerField::from_terms(3, &[(0, 0, Rational::one()), (2, 2, Rational::int(-1))], &[]);
        FrobStructureData {
            ring,
            coords: vec!["t0".into(), "t1".into(), "t2".into()],
            labels: vec!["t0".into(), "t1".into(), "t2".into()],
            metric,
            c,
            unit: qv(&[1, 0, 0]),
            euler,
            d: Rational::int(2),
            model: None,
        }
    }

    #[test]
    fn classical_passes() {
        let f = classical_p2();
        let r = frobenius_structure_check(&f);
        assert!(r.all_pass(), "{:?}", r.failures());
    }

    #[test]
    fn perturbed_constant_breaks_potentiality() {
        let mut f = classical_p2();
        let ring = RingDecl::new(vec!["t0".into(), "t1".into(), "t2".into()], vec![ExpVar { name: "Q1".into(), var: "t1".into() }], 1).unwrap();
        f.c = f.c.iter().map(|s| s.reembed(&ring).unwrap()).collect();
        f.ring = ring.clone();
        let mut m = Monomial::one(&ring);
        m.beta[0] = 1;
        let q1 = SeriesElem::term(&ring, m, Rational::one()).unwrap();
        f.c[idx3(3, 1, 2, 2)] = q1.clone();
        f.c[idx3(3, 2, 1, 2)] = q1;
        let r = frobenius_structure_check(&f);
        assert_eq!(r.status("potentiality"), Some(crate::report::Status::Fail));
    }

    #[test]
    fn nilpotent_on_classical_p2() {
        let f = classical_p2();
        let m = mfs_from_nilpotent(&f, &qv(&[0, 1, 0])).unwrap();
        assert_eq!(m.d, Rational::int(3));
        let r = mfs_check(&m);
        assert!(r.all_pass(), "{:?}", r.failures());
        let top = m.level(3).unwrap();
        assert_eq!(top.eta.get(0, 0), &Rational::one());
        let s = transversal_slice(&m, 0, &BTreeMap::new()).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(mfs_check(&s).all_pass());
        let z = transversal_slice(&m, 3, &BTreeMap::new()).unwrap();
        assert_eq!(z.dim(), 0);
        assert!(mfs_check(&z).all_pass());
    }

    #[test]
    fn json_roundtrip() {
        let f = classical_p2();
        let m = mfs_from_nilpotent(&f, &qv(&[0, 1, 0])).unwrap();
        let back = MFSData::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let fb = FrobStructureData::from_json(&f.to_json()).unwrap();
        assert_eq!(fb, f);
    }

    #[test]
    fn singular_eta_detected() {
        let f = classical_p2();
        let mut m = mfs_from_nilpotent(&f, &qv(&[0, 1, 0])).unwrap();
        let l = m.levels.iter_mut().find(|l| l.k == 0).unwrap();
        l.eta = Matrix::zeros(l.eta.rows(), l.eta.cols());
        assert_eq!(mfs_check(&m).status("eta.invertible"), Some(crate::report::Status::Fail));
    }
}
