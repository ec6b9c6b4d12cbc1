use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Rational, RingDecl, RingError, SeriesElem};

/// Key of one HbarLaurent term: ħ^{half/2} · (e^{ħ t⁰})^{ehbar}.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct HbarTerm {
    pub half: i32,
    pub ehbar: u32,
}

/// Finite sum Σ ħ^{p/2} (e^{ħt⁰})^m · f_{p,m} with f in a series ring.
///
/// `ehbar_var` names the poly variable t⁰ of the exponential e^{ħt⁰}; its
/// derivation brings down m·ħ, and ∂_ħ brings down m·t⁰.
#[derive(Clone)]
pub struct HbarLaurent {
    ring: Arc<RingDecl>,
    ehbar_var: Option<String>,
    terms: BTreeMap<HbarTerm, SeriesElem>,
}

impl HbarLaurent {
    pub fn zero(ring: &Arc<RingDecl>, ehbar_var: Option<&str>) -> Self {
        HbarLaurent { ring: ring.clone(), ehbar_var: ehbar_var.map(String::from), terms: BTreeMap::new() }
    }

    /// ħ^{half/2} (e^{ħt⁰})^ehbar · s.
    pub fn monomial(s: &SeriesElem, half: i32, ehbar: u32, ehbar_var: Option<&str>) -> Self {
        let mut out = Self::zero(s.ring(), ehbar_var);
        out.push(HbarTerm { half, ehbar }, s.clone());
        out
    }

    /// s viewed as an ħ-independent element.
    pub fn from_series(s: &SeriesElem) -> Self {
        Self::monomial(s, 0, 0, None)
    }

    pub fn ring(&self) -> &Arc<RingDecl> {
        &self.ring
    }

    pub fn ehbar_var(&self) -> Option<&str> {
        self.ehbar_var.as_deref()
    }

    pub fn terms(&self) -> &BTreeMap<HbarTerm, SeriesElem> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Lowest and highest half-integer ħ exponents (times two).
    pub fn half_bounds(&self) -> Option<(i32, i32)> {
        let min = self.terms.keys().map(|k| k.half).min()?;
        let max = self.terms.keys().map(|k| k.half).max()?;
        Some((min, max))
    }

    fn push(&mut self, k: HbarTerm, s: SeriesElem) {
        if s.is_zero() {
            return;
        }
        match self.terms.remove(&k) {
            Some(old) => {
                let sum = &old + &s;
                if !sum.is_zero() {
                    self.terms.insert(k, sum);
                }
            }
            None => {
                self.terms.insert(k, s);
            }
        }
    }

    fn merge_var(&self, o: &HbarLaurent) -> Result<Option<String>, RingError> {
        match (&self.ehbar_var, &o.ehbar_var) {
            (Some(a), Some(b)) if a != b => Err(RingError::RingMismatch),
            (Some(a), _) => Ok(Some(a.clone())),
            (None, b) => Ok(b.clone()),
        }
    }

    pub fn checked_add(&self, o: &HbarLaurent) -> Result<HbarLaurent, RingError> {
        let mut out = HbarLaurent { ring: self.ring.clone(), ehbar_var: self.merge_var(o)?, terms: self.terms.clone() };
        for (k, s) in &o.terms {
            if !std::sync::Arc::ptr_eq(s.ring(), &self.ring) && **s.ring() != *self.ring {
                return Err(RingError::RingMismatch);
            }
            out.push(*k, s.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, o: &HbarLaurent) -> Result<HbarLaurent, RingError> {
        let mut out = HbarLaurent { ring: self.ring.clone(), ehbar_var: self.merge_var(o)?, terms: BTreeMap::new() };
        for (ka, sa) in &self.terms {
            for (kb, sb) in &o.terms {
                let k = HbarTerm { half: ka.half + kb.half, ehbar: ka.ehbar + kb.ehbar };
                out.push(k, sa.checked_mul(sb)?);
            }
        }
        Ok(out)
    }

    pub fn add(&self, o: &HbarLaurent) -> HbarLaurent {
        self.checked_add(o).expect("HbarLaurent sum across rings")
    }

    pub fn sub(&self, o: &HbarLaurent) -> HbarLaurent {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &HbarLaurent) -> HbarLaurent {
        self.checked_mul(o).expect("HbarLaurent product across rings")
    }

    pub fn neg(&self) -> HbarLaurent {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, c: &Rational) -> HbarLaurent {
        let mut out = Self::zero(&self.ring, self.ehbar_var.as_deref());
        for (k, s) in &self.terms {
            out.push(*k, s.scale(c));
        }
        out
    }

    pub fn mul_series(&self, s: &SeriesElem) -> HbarLaurent {
        let mut out = Self::zero(&self.ring, self.ehbar_var.as_deref());
        for (k, x) in &self.terms {
            out.push(*k, x * s);
        }
        out
    }

    /// Multiply by ħ^{half/2}.
    pub fn shift_hbar(&self, half: i32) -> HbarLaurent {
        let mut out = Self::zero(&self.ring, self.ehbar_var.as_deref());
        for (k, x) in &self.terms {
            out.push(HbarTerm { half: k.half + half, ehbar: k.ehbar }, x.clone());
        }
        out
    }

    /// ∂/∂var on coefficients, with ∂_{t⁰} e^{mħt⁰} = mħ e^{mħt⁰}.
    pub fn derive(&self, var: &str) -> Result<HbarLaurent, RingError> {
        let is_t0 = self.ehbar_var.as_deref() == Some(var);
        if !is_t0 && !self.ring.knows_var(var) {
            return Err(RingError::UnknownVariable(var.into()));
        }
        let mut out = Self::zero(&self.ring, self.ehbar_var.as_deref());
        for (k, s) in &self.terms {
            if self.ring.knows_var(var) {
                out.push(*k, s.derive(var)?);
            }
            if is_t0 && k.ehbar > 0 {
                out.push(HbarTerm { half: k.half + 2, ehbar: k.ehbar }, s.scale(&Rational::from(k.ehbar)));
            }
        }
        Ok(out)
    }

    /// ∂/∂ħ.
    pub fn derive_hbar(&self) -> Result<HbarLaurent, RingError> {
        let mut out = Self::zero(&self.ring, self.ehbar_var.as_deref());
        for (k, s) in &self.terms {
            if k.half != 0 {
                out.push(HbarTerm { half: k.half - 2, ehbar: k.ehbar }, s.scale(&Rational::new(k.half as i64, 2)));
            }
            if k.ehbar > 0 {
                let v = self.ehbar_var.as_deref().ok_or_else(|| RingError::UnknownVariable("e^{ħt⁰} variable".into()))?;
                let t0 = SeriesElem::poly_var(&self.ring, v)?;
                out.push(*k, (&t0 * s).scale(&Rational::from(k.ehbar)));
            }
        }
        Ok(out)
    }

    /// Same element over `ring`, which must contain every variable in use.
    pub fn reembed(&self, ring: &Arc<RingDecl>) -> Result<HbarLaurent, RingError> {
        let mut out = Self::zero(ring, self.ehbar_var.as_deref());
        for (k, s) in &self.terms {
            out.push(*k, s.reembed(ring)?);
        }
        Ok(out)
    }

    /// Largest-exp-degree term, for failure witnesses.
    pub fn leading_term(&self) -> Option<String> {
        let (k, s) = self.terms.iter().next()?;
        Some(format!("hbar^({}/2) e^({}*hbar*t0) * ({})", k.half, k.ehbar, s))
    }
}

impl PartialEq for HbarLaurent {
    fn eq(&self, o: &Self) -> bool {
        self.terms == o.terms
            && (self.terms.is_empty() || self.terms.keys().all(|k| k.ehbar == 0) || self.ehbar_var == o.ehbar_var)
    }
}

impl fmt::Display for HbarLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let t0 = self.ehbar_var.as_deref().unwrap_or("t0");
        for (i, (k, s)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "hbar^{} ", Rational::new(k.half as i64, 2))?;
            if k.ehbar > 0 {
                write!(f, "e^({}*hbar*{}) ", k.ehbar, t0)?;
            }
            write!(f, "({s})")?;
        }
        Ok(())
    }
}

impl fmt::Debug for HbarLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Serialize, Deserialize)]
struct HbarTermJson {
    hbar: Rational,
    ehbar: u32,
    coef: SeriesElem,
}

#[derive(Serialize, Deserialize)]
struct HbarJson {
    ehbar_var: Option<String>,
    ring: RingDecl,
    terms: Vec<HbarTermJson>,
}

impl Serialize for HbarLaurent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        HbarJson {
            ehbar_var: self.ehbar_var.clone(),
            ring: (*self.ring).clone(),
            terms: self
                .terms
                .iter()
                .map(|(k, c)| HbarTermJson { hbar: Rational::new(k.half as i64, 2), ehbar: k.ehbar, coef: c.clone() })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HbarLaurent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = HbarJson::deserialize(d)?;
        let ring = RingDecl::new(j.ring.poly_vars, j.ring.exp_vars, j.ring.order).map_err(D::Error::custom)?;
        let mut out = HbarLaurent::zero(&ring, j.ehbar_var.as_deref());
        for t in j.terms {
            let two = &t.hbar * Rational::int(2);
            let half = two.to_i64().ok_or_else(|| D::Error::custom("hbar exponent must be a half-integer"))?;
            let coef = t.coef.reembed(&ring).map_err(D::Error::custom)?;
            out.push(HbarTerm { half: half as i32, ehbar: t.ehbar }, coef);
        }
        Ok(out)
    }
}
