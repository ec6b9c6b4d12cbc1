use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Rational, RingError};

/// Formal exponential Q = e^{var}.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ExpVar {
    pub name: String,
    pub var: String,
}

/// Variable declarations shared by all elements of one coefficient ring.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct RingDecl {
    pub poly_vars: Vec<String>,
    pub exp_vars: Vec<ExpVar>,
    pub order: u32,
}

impl RingDecl {
    pub fn new(poly_vars: Vec<String>, exp_vars: Vec<ExpVar>, order: u32) -> Result<Arc<Self>, RingError> {
        let d = RingDecl { poly_vars, exp_vars, order };
        d.validate()?;
        Ok(Arc::new(d))
    }

    /// Ring whose exp vars are named `Q<var>` after their paired poly variables.
    pub fn with_exps(poly: &[&str], exp_of: &[&str], order: u32) -> Arc<Self> {
        let exps = exp_of
            .iter()
            .map(|v| ExpVar { name: format!("Q{}", v.trim_start_matches('t')), var: v.to_string() })
            .collect();
        Self::new(poly.iter().map(|s| s.to_string()).collect(), exps, order).expect("valid declaration")
    }

    pub fn validate(&self) -> Result<(), RingError> {
        let mut seen = std::collections::BTreeSet::new();
        for n in self.poly_vars.iter().chain(self.exp_vars.iter().map(|e| &e.name)) {
            if !seen.insert(n.as_str()) {
                return Err(RingError::Parse(format!("duplicate variable {n:?}")));
            }
        }
        let mut paired = std::collections::BTreeSet::new();
        for e in &self.exp_vars {
            if !paired.insert(e.var.as_str()) {
                return Err(RingError::Parse(format!("two exponentials of {:?}", e.var)));
            }
        }
        Ok(())
    }

    pub fn poly_index(&self, name: &str) -> Option<usize> {
        self.poly_vars.iter().position(|v| v == name)
    }

    pub fn exp_index(&self, name: &str) -> Option<usize> {
        self.exp_vars.iter().position(|v| v.name == name)
    }

    pub fn exp_index_of_var(&self, var: &str) -> Option<usize> {
        self.exp_vars.iter().position(|v| v.var == var)
    }

    /// Whether `var` may be differentiated against.
    pub fn knows_var(&self, var: &str) -> bool {
        self.poly_index(var).is_some() || self.exp_index_of_var(var).is_some()
    }
}

/// Exponent data of one term: Q^β times a polynomial monomial.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Monomial {
    pub beta: Vec<u32>,
    pub mono: Vec<u32>,
}

impl Monomial {
    pub fn one(ring: &RingDecl) -> Self {
        Monomial { beta: vec![0; ring.exp_vars.len()], mono: vec![0; ring.poly_vars.len()] }
    }

    pub fn exp_degree(&self) -> u32 {
        self.beta.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.beta.iter().all(|&b| b == 0) && self.mono.iter().all(|&m| m == 0)
    }
}

/// Truncated series Σ c · Q^β · t^m over Q.
#[derive(Clone)]
pub struct SeriesElem {
    ring: Arc<RingDecl>,
    terms: BTreeMap<Monomial, Rational>,
}

fn same_ring(a: &Arc<RingDecl>, b: &Arc<RingDecl>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl SeriesElem {
    pub fn zero(ring: &Arc<RingDecl>) -> Self {
        SeriesElem { ring: ring.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(ring: &Arc<RingDecl>, c: Rational) -> Self {
        let mut s = Self::zero(ring);
        if !c.is_zero() {
            s.terms.insert(Monomial::one(ring), c);
        }
        s
    }

    pub fn one(ring: &Arc<RingDecl>) -> Self {
        Self::constant(ring, Rational::one())
    }

    /// A single term; dropped if its exp-degree exceeds the order.
    pub fn term(ring: &Arc<RingDecl>, m: Monomial, c: Rational) -> Result<Self, RingError> {
        if m.beta.len() != ring.exp_vars.len() || m.mono.len() != ring.poly_vars.len() {
            return Err(RingError::Dimension("monomial shape".into()));
        }
        let mut s = Self::zero(ring);
        if !c.is_zero() && m.exp_degree() <= ring.order {
            s.terms.insert(m, c);
        }
        Ok(s)
    }

    pub fn poly_var(ring: &Arc<RingDecl>, name: &str) -> Result<Self, RingError> {
        let i = ring.poly_index(name).ok_or_else(|| RingError::UnknownVariable(name.into()))?;
        let mut m = Monomial::one(ring);
        m.mono[i] = 1;
        Self::term(ring, m, Rational::one())
    }

    /// c · Q^β.
    pub fn exp_term(ring: &Arc<RingDecl>, beta: &[u32], c: Rational) -> Result<Self, RingError> {
        let mut m = Monomial::one(ring);
        if beta.len() != m.beta.len() {
            return Err(RingError::Dimension("exponent vector".into()));
        }
        m.beta = beta.to_vec();
        Self::term(ring, m, c)
    }

    pub fn ring(&self) -> &Arc<RingDecl> {
        &self.ring
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Rational> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// The value if this element has no t- or Q-dependence.
    pub fn constant_value(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().expect("one term");
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    fn check(&self, o: &SeriesElem) -> Result<(), RingError> {
        if same_ring(&self.ring, &o.ring) {
            Ok(())
        } else {
            Err(RingError::RingMismatch)
        }
    }

    fn insert_add(terms: &mut BTreeMap<Monomial, Rational>, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match terms.entry(m) {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn checked_add(&self, o: &SeriesElem) -> Result<SeriesElem, RingError> {
        self.check(o)?;
        let mut terms = self.terms.clone();
        for (m, c) in &o.terms {
            Self::insert_add(&mut terms, m.clone(), c.clone());
        }
        Ok(SeriesElem { ring: self.ring.clone(), terms })
    }

    pub fn checked_sub(&self, o: &SeriesElem) -> Result<SeriesElem, RingError> {
        self.check(o)?;
        let mut terms = self.terms.clone();
        for (m, c) in &o.terms {
            Self::insert_add(&mut terms, m.clone(), -c);
        }
        Ok(SeriesElem { ring: self.ring.clone(), terms })
    }

    /// Product truncated at the declared order.
    pub fn checked_mul(&self, o: &SeriesElem) -> Result<SeriesElem, RingError> {
        self.check(o)?;
        if let Some(c) = self.constant_value() {
            return Ok(o.scale(&c));
        }
        if let Some(c) = o.constant_value() {
            return Ok(self.scale(&c));
        }
        let order = self.ring.order;
        let mut terms = BTreeMap::new();
        for (ma, ca) in &self.terms {
            let da = ma.exp_degree();
            for (mb, cb) in &o.terms {
                if da + mb.exp_degree() > order {
                    continue;
                }
                let m = Monomial {
                    beta: ma.beta.iter().zip(&mb.beta).map(|(x, y)| x + y).collect(),
                    mono: ma.mono.iter().zip(&mb.mono).map(|(x, y)| x + y).collect(),
                };
                Self::insert_add(&mut terms, m, ca * cb);
            }
        }
        Ok(SeriesElem { ring: self.ring.clone(), terms })
    }

    pub fn scale(&self, c: &Rational) -> SeriesElem {
        if c.is_zero() {
            return Self::zero(&self.ring);
        }
        SeriesElem { ring: self.ring.clone(), terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect() }
    }

    pub fn pow(&self, e: u32) -> SeriesElem {
        let mut out = Self::one(&self.ring);
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// ∂/∂var: polynomial derivative in `var` plus β-weighting of e^{var}.
    pub fn derive(&self, var: &str) -> Result<SeriesElem, RingError> {
        let pi = self.ring.poly_index(var);
        let ei = self.ring.exp_index_of_var(var);
        if pi.is_none() && ei.is_none() {
            return Err(RingError::UnknownVariable(var.into()));
        }
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            if let Some(i) = pi {
                if m.mono[i] > 0 {
                    let mut m2 = m.clone();
                    m2.mono[i] -= 1;
                    Self::insert_add(&mut terms, m2, c * Rational::from(m.mono[i]));
                }
            }
            if let Some(i) = ei {
                if m.beta[i] > 0 {
                    Self::insert_add(&mut terms, m.clone(), c * Rational::from(m.beta[i]));
                }
            }
        }
        Ok(SeriesElem { ring: self.ring.clone(), terms })
    }

    /// Substitute poly vars by rationals and set exponentials to 0 or 1.
    pub fn specialize(&self, assignments: &BTreeMap<String, Rational>) -> Result<SeriesElem, RingError> {
        enum Sub {
            Poly(usize, Rational),
            Exp(usize, bool),
        }
        let mut subs = Vec::new();
        for (name, v) in assignments {
            if let Some(i) = self.ring.poly_index(name) {
                subs.push(Sub::Poly(i, v.clone()));
            } else if let Some(i) = self.ring.exp_index(name) {
                if v.is_zero() {
                    subs.push(Sub::Exp(i, false));
                } else if v.is_one() {
                    subs.push(Sub::Exp(i, true));
                } else {
                    return Err(RingError::Assignment(format!("{name} must be set to 0 or 1, got {v}")));
                }
            } else {
                return Err(RingError::UnknownVariable(name.clone()));
            }
        }
        let mut terms = BTreeMap::new();
        'term: for (m, c) in &self.terms {
            let mut m2 = m.clone();
            let mut c2 = c.clone();
            for s in &subs {
                match s {
                    Sub::Poly(i, v) => {
                        c2 *= v.pow(m2.mono[*i] as i32);
                        m2.mono[*i] = 0;
                    }
                    Sub::Exp(i, keep) => {
                        if m2.beta[*i] > 0 {
                            if !keep {
                                continue 'term;
                            }
                            m2.beta[*i] = 0;
                        }
                    }
                }
            }
            Self::insert_add(&mut terms, m2, c2);
        }
        Ok(SeriesElem { ring: self.ring.clone(), terms })
    }

    /// Move into another ring, matching variables by name.
    ///
    /// Variables absent from the target must not occur; terms beyond the
    /// target order are dropped.
    pub fn reembed(&self, target: &Arc<RingDecl>) -> Result<SeriesElem, RingError> {
        let pmap: Vec<Option<usize>> = self.ring.poly_vars.iter().map(|v| target.poly_index(v)).collect();
        let emap: Vec<Option<usize>> = self.ring.exp_vars.iter().map(|v| target.exp_index(&v.name)).collect();
        for (e, t) in self.ring.exp_vars.iter().zip(&emap) {
            if let Some(j) = t {
                if target.exp_vars[*j].var != e.var {
                    return Err(RingError::RingMismatch);
                }
            }
        }
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            if m.exp_degree() > target.order {
                continue;
            }
            let mut m2 = Monomial::one(target);
            for (i, &d) in m.mono.iter().enumerate() {
                if d > 0 {
                    let j = pmap[i].ok_or_else(|| RingError::UnknownVariable(self.ring.poly_vars[i].clone()))?;
                    m2.mono[j] = d;
                }
            }
            for (i, &d) in m.beta.iter().enumerate() {
                if d > 0 {
                    let j = emap[i].ok_or_else(|| RingError::UnknownVariable(self.ring.exp_vars[i].name.clone()))?;
                    m2.beta[j] = d;
                }
            }
            Self::insert_add(&mut terms, m2, c.clone());
        }
        Ok(SeriesElem { ring: target.clone(), terms })
    }

    /// Largest exp-degree occurring.
    pub fn max_exp_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.exp_degree()).max().unwrap_or(0)
    }

    /// Rendering of one monomial, e.g. `Q1^2*t0`.
    pub fn monomial_string(ring: &RingDecl, m: &Monomial) -> String {
        let mut parts = Vec::new();
        for (e, &d) in ring.exp_vars.iter().zip(&m.beta) {
            match d {
                0 => {}
                1 => parts.push(e.name.clone()),
                _ => parts.push(format!("{}^{}", e.name, d)),
            }
        }
        for (v, &d) in ring.poly_vars.iter().zip(&m.mono) {
            match d {
                0 => {}
                1 => parts.push(v.clone()),
                _ => parts.push(format!("{v}^{d}")),
            }
        }
        parts.join("*")
    }
}

impl PartialEq for SeriesElem {
    fn eq(&self, o: &Self) -> bool {
        same_ring(&self.ring, &o.ring) && self.terms == o.terms
    }
}

impl fmt::Display for SeriesElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let ms = Self::monomial_string(&self.ring, m);
            if ms.is_empty() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{ms}")?;
            } else {
                write!(f, "{c}*{ms}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for SeriesElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<'b> Add<&'b SeriesElem> for &SeriesElem {
    type Output = SeriesElem;
    fn add(self, o: &'b SeriesElem) -> SeriesElem {
        self.checked_add(o).expect("series addition across rings")
    }
}

impl<'b> Sub<&'b SeriesElem> for &SeriesElem {
    type Output = SeriesElem;
    fn sub(self, o: &'b SeriesElem) -> SeriesElem {
        self.checked_sub(o).expect("series subtraction across rings")
    }
}

impl<'b> Mul<&'b SeriesElem> for &SeriesElem {
    type Output = SeriesElem;
    fn mul(self, o: &'b SeriesElem) -> SeriesElem {
        self.checked_mul(o).expect("series product across rings")
    }
}

impl Neg for &SeriesElem {
    type Output = SeriesElem;
    fn neg(self) -> SeriesElem {
        self.scale(&-Rational::one())
    }
}

impl AddAssign<&SeriesElem> for SeriesElem {
    fn add_assign(&mut self, o: &SeriesElem) {
        assert!(same_ring(&self.ring, &o.ring), "series addition across rings");
        for (m, c) in &o.terms {
            Self::insert_add(&mut self.terms, m.clone(), c.clone());
        }
    }
}

/// Product of two series; errors on mismatched declarations.
pub fn series_mul(a: &SeriesElem, b: &SeriesElem) -> Result<SeriesElem, RingError> {
    a.checked_mul(b)
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    beta: Vec<u32>,
    mono: BTreeMap<String, u32>,
    coef: Rational,
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    poly_vars: Vec<String>,
    exp_vars: Vec<ExpVar>,
    order: u32,
    terms: Vec<TermJson>,
}

impl Serialize for SeriesElem {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let r = &self.ring;
        SeriesJson {
            poly_vars: r.poly_vars.clone(),
            exp_vars: r.exp_vars.clone(),
            order: r.order,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| TermJson {
                    beta: m.beta.clone(),
                    mono: r
                        .poly_vars
                        .iter()
                        .zip(&m.mono)
                        .filter(|(_, &d)| d > 0)
                        .map(|(v, &d)| (v.clone(), d))
                        .collect(),
                    coef: c.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SeriesElem {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = SeriesJson::deserialize(d)?;
        let ring = RingDecl::new(j.poly_vars, j.exp_vars, j.order).map_err(D::Error::custom)?;
        let mut out = SeriesElem::zero(&ring);
        for t in j.terms {
            let mut m = Monomial::one(&ring);
            if t.beta.len() != m.beta.len() {
                return Err(D::Error::custom("beta length differs from exp_vars"));
            }
            if t.beta.iter().sum::<u32>() > ring.order {
                return Err(D::Error::custom("term exceeds truncation order"));
            }
            m.beta = t.beta;
            for (v, deg) in t.mono {
                let i = ring.poly_index(&v).ok_or_else(|| D::Error::custom(format!("unknown variable {v:?}")))?;
                m.mono[i] = deg;
            }
            SeriesElem::insert_add(&mut out.terms, m, t.coef);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ringcore::q;

    fn ring(order: u32) -> Arc<RingDecl> {
        RingDecl::with_exps(&["t0", "t1", "t2"], &["t1"], order)
    }

    fn qpow(r: &Arc<RingDecl>, k: u32, c: i64) -> SeriesElem {
        SeriesElem::exp_term(r, &[k], Rational::int(c)).unwrap()
    }

    #[test]
    fn mul_examples() {
        let r = ring(2);
        let one = SeriesElem::one(&r);
        let a = &one + &qpow(&r, 1, 1);
        let b = &one - &qpow(&r, 1, 1);
        assert_eq!(&a * &b, &one - &qpow(&r, 2, 1));

        let r1 = ring(1);
        let t2q = &SeriesElem::poly_var(&r1, "t2").unwrap() * &qpow(&r1, 1, 1);
        assert!((&t2q * &qpow(&r1, 1, 1)).is_zero());

        let s = &qpow(&r, 1, 1) + &qpow(&r, 2, 2);
        assert_eq!(&s * &s, qpow(&r, 2, 1));
    }

    #[test]
    fn mismatched_rings() {
        let a = SeriesElem::one(&ring(2));
        let b = SeriesElem::one(&ring(3));
        assert_eq!(series_mul(&a, &b), Err(RingError::RingMismatch));
    }

    #[test]
    fn derive_examples() {
        let r = ring(3);
        assert_eq!(qpow(&r, 3, 1).derive("t1").unwrap(), qpow(&r, 3, 3));
        let t2q = &SeriesElem::poly_var(&r, "t2").unwrap() * &qpow(&r, 1, 1);
        assert_eq!(t2q.derive("t2").unwrap(), qpow(&r, 1, 1));
        assert!(t2q.derive("s9").is_err());
        // t1 both polynomial and exponential
        let t1q = &SeriesElem::poly_var(&r, "t1").unwrap() * &qpow(&r, 1, 1);
        let want = &qpow(&r, 1, 1) + &t1q;
        assert_eq!(t1q.derive("t1").unwrap(), want);
    }

    #[test]
    fn specialize_examples() {
        let r = RingDecl::with_exps(&["t0", "t1"], &["t0", "t1"], 3);
        let t0 = SeriesElem::poly_var(&r, "t0").unwrap();
        let q0 = SeriesElem::exp_term(&r, &[1, 0], Rational::one()).unwrap();
        let q1 = SeriesElem::exp_term(&r, &[0, 1], Rational::one()).unwrap();
        let mut a = BTreeMap::new();
        a.insert("t0".to_string(), Rational::zero());
        assert_eq!((&t0 + &q1).specialize(&a).unwrap(), q1);
        let mut a = BTreeMap::new();
        a.insert("Q0".to_string(), Rational::zero());
        let one = SeriesElem::one(&r);
        assert_eq!((&(&one + &q0) + &q1).specialize(&a).unwrap(), &one + &q1);
        let mut a = BTreeMap::new();
        a.insert("Q1".to_string(), Rational::one());
        let e = &SeriesElem::constant(&r, q(2, 1)) + &q1.scale(&q(3, 1));
        assert_eq!(e.specialize(&a).unwrap(), SeriesElem::constant(&r, q(5, 1)));
        a.insert("Q1".to_string(), q(2, 1));
        assert!(e.specialize(&a).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let r = ring(3);
        let e = &(&SeriesElem::poly_var(&r, "t2").unwrap() * &qpow(&r, 2, 5)).scale(&q(1, 3)) + &SeriesElem::one(&r);
        let s = serde_json::to_string(&e).unwrap();
        let back: SeriesElem = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }
}
