use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Field, Rational, RingError, Subspace};

/// Dense row-major matrix over an exact field.
#[derive(Clone, PartialEq)]
pub struct Matrix<F = Rational> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Field> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = F::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self, RingError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(RingError::Dimension("ragged rows".into()));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    /// Matrix whose columns are the given vectors, each of length `n`.
    pub fn from_cols(n: usize, cols: &[Vec<F>]) -> Self {
        Self::from_fn(n, cols.len(), |i, j| cols[j][i].clone())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &F {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<F> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<F> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<F>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn to_cols(&self) -> Vec<Vec<F>> {
        (0..self.cols).map(|j| self.col(j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> Matrix<G> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn mul(&self, o: &Matrix<F>) -> Result<Matrix<F>, RingError> {
        if self.cols != o.rows {
            return Err(RingError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * o.cols + j;
                    out.data[idx] = out.data[idx].clone() + a.clone() * b.clone();
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[F]) -> Result<Vec<F>, RingError> {
        if v.len() != self.cols {
            return Err(RingError::Dimension(format!("{} columns, vector of length {}", self.cols, v.len())));
        }
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = F::zero();
                for (j, x) in v.iter().enumerate() {
                    let a = self.get(i, j);
                    if !a.is_zero() && !x.is_zero() {
                        acc = acc + a.clone() * x.clone();
                    }
                }
                acc
            })
            .collect())
    }

    pub fn add(&self, o: &Matrix<F>) -> Result<Matrix<F>, RingError> {
        if (self.rows, self.cols) != (o.rows, o.cols) {
            return Err(RingError::Dimension("matrix sum".into()));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.clone() + b.clone()).collect(),
        })
    }

    pub fn scale(&self, s: &F) -> Matrix<F> {
        self.map(|x| s.clone() * x.clone())
    }

    pub fn pow(&self, k: usize) -> Result<Matrix<F>, RingError> {
        if !self.is_square() {
            return Err(RingError::NotSquare(self.rows, self.cols));
        }
        let mut out = Self::identity(self.rows);
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Reduced row echelon form and pivot columns; pivots are chosen leftmost.
    pub fn rref(&self) -> (Matrix<F>, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = F::one() / m.get(r, c).clone();
            for j in c..m.cols {
                let v = m.get(r, j).clone() * inv.clone();
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let f = m.get(i, c).clone();
                if f.is_zero() {
                    continue;
                }
                for j in c..m.cols {
                    let v = m.get(i, j).clone() - f.clone() * m.get(r, j).clone();
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Null space {v : M v = 0} in canonical form.
    pub fn kernel(&self) -> Subspace<F> {
        let (r, pivots) = self.rref();
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|c| !pivots.contains(c)) {
            let mut v = vec![F::zero(); self.cols];
            v[free] = F::one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -r.get(row, free).clone();
            }
            basis.push(v);
        }
        Subspace::from_vectors(self.cols, &basis).expect("kernel vectors have matching length")
    }

    /// Column space.
    pub fn image(&self) -> Subspace<F> {
        Subspace::from_vectors(self.rows, &self.to_cols()).expect("columns have matching length")
    }

    pub fn det(&self) -> Result<F, RingError> {
        if !self.is_square() {
            return Err(RingError::NotSquare(self.rows, self.cols));
        }
        let n = self.rows;
        let mut m = self.clone();
        let mut det = F::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m.get(i, c).is_zero()) else {
                return Ok(F::zero());
            };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let piv = m.get(c, c).clone();
            det = det * piv.clone();
            for i in c + 1..n {
                let f = m.get(i, c).clone() / piv.clone();
                if f.is_zero() {
                    continue;
                }
                for j in c..n {
                    let v = m.get(i, j).clone() - f.clone() * m.get(c, j).clone();
                    m.set(i, j, v);
                }
            }
        }
        Ok(det)
    }

    pub fn inverse(&self) -> Result<Matrix<F>, RingError> {
        if !self.is_square() {
            return Err(RingError::NotSquare(self.rows, self.cols));
        }
        let n = self.rows;
        let aug = Self::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self.get(i, j).clone()
            } else if j - n == i {
                F::one()
            } else {
                F::zero()
            }
        });
        let (r, pivots) = aug.rref();
        if pivots.len() < n || (n > 0 && pivots[n - 1] >= n) {
            return Err(RingError::Singular);
        }
        Ok(Self::from_fn(n, n, |i, j| r.get(i, n + j).clone()))
    }

    /// Some solution x of M x = b, if one exists.
    pub fn solve(&self, b: &[F]) -> Result<Option<Vec<F>>, RingError> {
        if b.len() != self.rows {
            return Err(RingError::Dimension("right-hand side length".into()));
        }
        let aug = Self::from_fn(self.rows, self.cols + 1, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                b[i].clone()
            }
        });
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return Ok(None);
        }
        let mut x = vec![F::zero(); self.cols];
        for (row, &p) in pivots.iter().enumerate() {
            x[p] = r.get(row, self.cols).clone();
        }
        Ok(Some(x))
    }

    /// Leading principal minors det(M[0..k, 0..k]) for k = 1..n.
    pub fn leading_minors(&self) -> Result<Vec<F>, RingError> {
        if !self.is_square() {
            return Err(RingError::NotSquare(self.rows, self.cols));
        }
        (1..=self.rows)
            .map(|k| Self::from_fn(k, k, |i, j| self.get(i, j).clone()).det())
            .collect()
    }

    /// Bilinear form xᵀ M y.
    pub fn bilinear(&self, x: &[F], y: &[F]) -> Result<F, RingError> {
        let my = self.mul_vec(y)?;
        if x.len() != self.rows {
            return Err(RingError::Dimension("bilinear form argument".into()));
        }
        Ok(super::dot(x, &my))
    }

    /// Gram matrix G_{ab} = vₐᵀ M v_b for the given vectors.
    pub fn gram(&self, vs: &[Vec<F>]) -> Result<Matrix<F>, RingError> {
        let mut g = Self::zeros(vs.len(), vs.len());
        for (a, va) in vs.iter().enumerate() {
            for (b, vb) in vs.iter().enumerate() {
                g.set(a, b, self.bilinear(va, vb)?);
            }
        }
        Ok(g)
    }
}

/// Canonical basis of the null space of `m`.
pub fn kernel_basis<F: Field>(m: &Matrix<F>) -> Subspace<F> {
    m.kernel()
}

/// True iff `g` is square with nonzero determinant.
pub fn is_nondegenerate<F: Field>(g: &Matrix<F>) -> Result<bool, RingError> {
    Ok(!g.det()?.is_zero())
}

impl<F: Field> fmt::Debug for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl<F: Field + Serialize> Serialize for Matrix<F> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de, F: Field + Deserialize<'de>> Deserialize<'de> for Matrix<F> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<F>>::deserialize(d)?;
        Matrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ringcore::{q, qv};

    fn m(rows: &[&[i64]]) -> Matrix {
        Matrix::from_rows(rows.iter().map(|r| qv(r)).collect()).unwrap()
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_basis(&Matrix::<Rational>::identity(3)).dim(), 0);
        let k = kernel_basis(&Matrix::<Rational>::zeros(2, 2));
        assert_eq!(k.dim(), 2);
        let k = kernel_basis(&m(&[&[0, 1], &[0, 0]]));
        assert_eq!(k.basis(), &[qv(&[1, 0])]);
    }

    #[test]
    fn nondegeneracy_examples() {
        assert!(is_nondegenerate(&m(&[&[0, 1], &[1, 0]])).unwrap());
        assert!(!is_nondegenerate(&m(&[&[1, 1], &[1, 1]])).unwrap());
        let f0 = Matrix::from_rows(vec![vec![q(-1, 2), q(1, 2)], vec![q(1, 2), q(-1, 2)]]).unwrap();
        assert!(!is_nondegenerate(&f0).unwrap());
        assert!(is_nondegenerate(&m(&[&[1, 2, 3]])).is_err());
    }

    #[test]
    fn inverse_and_det() {
        let a = m(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv).unwrap(), Matrix::identity(3));
        assert_eq!(a.det().unwrap(), Rational::int(18));
        assert_eq!(m(&[&[1, 2], &[2, 4]]).inverse(), Err(RingError::Singular));
    }

    #[test]
    fn solve_consistent_and_not() {
        let a = m(&[&[1, 1], &[2, 2]]);
        let x = a.solve(&qv(&[3, 6])).unwrap().unwrap();
        assert_eq!(a.mul_vec(&x).unwrap(), qv(&[3, 6]));
        assert!(a.solve(&qv(&[3, 5])).unwrap().is_none());
    }
}
