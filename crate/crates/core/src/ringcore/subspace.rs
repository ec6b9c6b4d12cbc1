use serde::{Deserialize, Serialize};

use super::{Field, Matrix, RingError};

/// Linear subspace of F^n stored by its reduced row echelon basis.
///
/// Two subspaces are equal iff their stored bases agree entry by entry.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: Deserialize<'de>"))]
pub struct Subspace<F> {
    ambient_dim: usize,
    basis: Vec<Vec<F>>,
    #[serde(skip)]
    pivots: Vec<usize>,
}

impl<F: Field> Subspace<F> {
    pub fn from_vectors(ambient_dim: usize, vecs: &[Vec<F>]) -> Result<Self, RingError> {
        if vecs.iter().any(|v| v.len() != ambient_dim) {
            return Err(RingError::Dimension(format!("vector not in F^{ambient_dim}")));
        }
        if vecs.is_empty() {
            return Ok(Self::zero(ambient_dim));
        }
        let m = Matrix::from_rows(vecs.to_vec())?;
        let (r, pivots) = m.rref();
        let basis = (0..pivots.len()).map(|i| r.row(i)).collect();
        Ok(Subspace { ambient_dim, basis, pivots })
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Subspace { ambient_dim, basis: Vec::new(), pivots: Vec::new() }
    }

    pub fn full(ambient_dim: usize) -> Self {
        let basis = (0..ambient_dim).map(|i| super::unit_vector(ambient_dim, i)).collect();
        Subspace { ambient_dim, basis, pivots: (0..ambient_dim).collect() }
    }

    /// Recompute pivots after deserialization.
    pub fn normalized(self) -> Result<Self, RingError> {
        Self::from_vectors(self.ambient_dim, &self.basis)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<F>] {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Canonical representative of v modulo this subspace (zero at every pivot).
    pub fn reduce(&self, v: &[F]) -> Vec<F> {
        let mut out = v.to_vec();
        for (b, &p) in self.basis.iter().zip(&self.pivots) {
            let f = out[p].clone();
            if f.is_zero() {
                continue;
            }
            for (o, x) in out.iter_mut().zip(b) {
                if !x.is_zero() {
                    *o = o.clone() - f.clone() * x.clone();
                }
            }
        }
        out
    }

    pub fn contains(&self, v: &[F]) -> bool {
        v.len() == self.ambient_dim && super::is_zero_vec(&self.reduce(v))
    }

    /// Coefficients of v in the stored basis, if v lies in the subspace.
    pub fn coords(&self, v: &[F]) -> Option<Vec<F>> {
        if !self.contains(v) {
            return None;
        }
        Some(self.pivots.iter().map(|&p| v[p].clone()).collect())
    }

    pub fn is_subspace_of(&self, o: &Subspace<F>) -> bool {
        self.ambient_dim == o.ambient_dim && self.basis.iter().all(|b| o.contains(b))
    }

    pub fn sum(&self, o: &Subspace<F>) -> Result<Subspace<F>, RingError> {
        if self.ambient_dim != o.ambient_dim {
            return Err(RingError::Dimension("subspace sum".into()));
        }
        let mut all = self.basis.clone();
        all.extend(o.basis.iter().cloned());
        Self::from_vectors(self.ambient_dim, &all)
    }

    pub fn intersect(&self, o: &Subspace<F>) -> Result<Subspace<F>, RingError> {
        if self.ambient_dim != o.ambient_dim {
            return Err(RingError::Dimension("subspace intersection".into()));
        }
        if self.dim() == 0 || o.dim() == 0 {
            return Ok(Self::zero(self.ambient_dim));
        }
        // Σ αᵢ uᵢ − Σ βⱼ vⱼ = 0
        let n = self.ambient_dim;
        let cols: Vec<Vec<F>> = self
            .basis
            .iter()
            .cloned()
            .chain(o.basis.iter().map(|v| v.iter().map(|x| -x.clone()).collect()))
            .collect();
        let k = Matrix::from_cols(n, &cols).kernel();
        let vecs: Vec<Vec<F>> = k
            .basis()
            .iter()
            .map(|coef| {
                let mut v = vec![F::zero(); n];
                for (a, u) in coef.iter().take(self.dim()).zip(&self.basis) {
                    for (vi, ui) in v.iter_mut().zip(u) {
                        *vi = vi.clone() + a.clone() * ui.clone();
                    }
                }
                v
            })
            .collect();
        Self::from_vectors(n, &vecs)
    }

    /// Image under a linear map given as a matrix acting on column vectors.
    pub fn image_under(&self, m: &Matrix<F>) -> Result<Subspace<F>, RingError> {
        let vecs = self.basis.iter().map(|b| m.mul_vec(b)).collect::<Result<Vec<_>, _>>()?;
        Self::from_vectors(m.rows(), &vecs)
    }

    /// Preimage {v : m v ∈ self}.
    pub fn preimage_under(&self, m: &Matrix<F>) -> Result<Subspace<F>, RingError> {
        if m.rows() != self.ambient_dim {
            return Err(RingError::Dimension("preimage".into()));
        }
        // v ↦ m v mod self; kernel of the composite.
        let cols: Vec<Vec<F>> = (0..m.cols()).map(|j| self.reduce(&m.col(j))).collect();
        Ok(Matrix::from_cols(self.ambient_dim, &cols).kernel())
    }

    /// Basis vectors of `bigger` whose pivots are new relative to `self`.
    ///
    /// They are independent modulo `self` and span `bigger / self`.
    pub fn complement_in(&self, bigger: &Subspace<F>) -> Result<Vec<Vec<F>>, RingError> {
        if !self.is_subspace_of(bigger) {
            return Err(RingError::Dimension("complement of a non-subspace".into()));
        }
        Ok(bigger
            .basis
            .iter()
            .zip(&bigger.pivots)
            .filter(|(_, p)| !self.pivots.contains(p))
            .map(|(b, _)| b.clone())
            .collect())
    }

    /// Coefficients α with x − Σ αₐ complementₐ ∈ self.
    pub fn coords_mod(&self, complement: &[Vec<F>], x: &[F]) -> Result<Option<Vec<F>>, RingError> {
        let n = self.ambient_dim;
        if x.len() != n {
            return Err(RingError::Dimension("coordinate vector".into()));
        }
        let mut cols = complement.to_vec();
        cols.extend(self.basis.iter().cloned());
        let m = Matrix::from_cols(n, &cols);
        Ok(m.solve(x)?.map(|s| s[..complement.len()].to_vec()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ringcore::{qv, Rational};

    #[test]
    fn canonical_form() {
        let a = Subspace::from_vectors(3, &[qv(&[1, 1, 0]), qv(&[0, 1, 1])]).unwrap();
        let b = Subspace::from_vectors(3, &[qv(&[1, 2, 1]), qv(&[1, 0, -1])]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn intersection_and_sum() {
        let a = Subspace::from_vectors(3, &[qv(&[1, 0, 0]), qv(&[0, 1, 0])]).unwrap();
        let b = Subspace::from_vectors(3, &[qv(&[0, 1, 0]), qv(&[0, 0, 1])]).unwrap();
        let i = a.intersect(&b).unwrap();
        assert_eq!(i.basis(), &[qv(&[0, 1, 0])]);
        assert_eq!(a.sum(&b).unwrap(), Subspace::<Rational>::full(3));
    }

    #[test]
    fn complement_independent_mod() {
        let small = Subspace::from_vectors(3, &[qv(&[0, 1, 1])]).unwrap();
        let big = Subspace::from_vectors(3, &[qv(&[0, 1, 1]), qv(&[1, 0, 0])]).unwrap();
        let c = small.complement_in(&big).unwrap();
        assert_eq!(c.len(), 1);
        assert!(!small.contains(&c[0]));
        let x = qv(&[2, 3, 3]);
        assert_eq!(small.coords_mod(&c, &x).unwrap().unwrap(), qv(&[2]));
    }

    #[test]
    fn preimage() {
        // n: e0 -> 0, e1 -> e0
        let n = Matrix::from_rows(vec![qv(&[0, 1]), qv(&[0, 0])]).unwrap();
        let z = Subspace::<Rational>::zero(2);
        assert_eq!(z.preimage_under(&n).unwrap().basis(), &[qv(&[1, 0])]);
    }
}
