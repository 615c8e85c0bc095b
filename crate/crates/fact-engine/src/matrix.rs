//! Dense matrices over an exact scalar, with the handful of operations the
//! engine needs: multiplication, inversion, Kronecker products and
//! permutation matrices. Sizes here are tiny (dimensions are fiber
//! dimensions, at most a few dozen), so everything is straightforward
//! row-major storage and cubic algorithms.

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>, // row-major
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MatrixError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("matrix is singular")]
    Singular,
}

impl<T: Scalar> Matrix<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, MatrixError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(MatrixError::DimMismatch("ragged rows".into()));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, MatrixError> {
        if data.len() != rows * cols {
            return Err(MatrixError::DimMismatch(format!(
                "{rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { T::one() } else { T::zero() })
    }

    /// The permutation matrix sending basis vector `e_{perm[t]}` of the source
    /// to basis vector `e_t` of the target; applied to a coordinate vector it
    /// produces `y[t] = x[perm[t]]`.
    pub fn permutation(perm: &[usize]) -> Self {
        let n = perm.len();
        Self::from_fn(n, n, |r, c| if perm[r] == c { T::one() } else { T::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    pub fn entries(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| {
                (0..self.cols).all(|c| {
                    let e = self.at(r, c);
                    if r == c { e.is_one() } else { e.is_zero() }
                })
            })
    }

    /// `self * other`, i.e. apply `other` first.
    pub fn mul(&self, other: &Self) -> Result<Self, MatrixError> {
        if self.cols != other.rows {
            return Err(MatrixError::DimMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.cols, |r, c| {
            let mut acc = T::zero();
            for k in 0..self.cols {
                if !self.at(r, k).is_zero() && !other.at(k, c).is_zero() {
                    acc = acc + self.at(r, k).clone() * other.at(k, c).clone();
                }
            }
            acc
        }))
    }

    /// Gauss-Jordan inverse. Pivots are any nonzero entry: the arithmetic is
    /// exact, so there is no stability concern.
    pub fn inverse(&self) -> Result<Self, MatrixError> {
        if self.rows != self.cols {
            return Err(MatrixError::DimMismatch(format!("{}x{} not square", self.rows, self.cols)));
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut inv = Matrix::<T>::identity(n).data;
        let idx = |r: usize, c: usize| r * n + c;
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[idx(r, col)].is_zero()).ok_or(MatrixError::Singular)?;
            if pivot != col {
                for c in 0..n {
                    a.swap(idx(pivot, c), idx(col, c));
                    inv.swap(idx(pivot, c), idx(col, c));
                }
            }
            let p = a[idx(col, col)].clone();
            for c in 0..n {
                a[idx(col, c)] = a[idx(col, c)].clone() / p.clone();
                inv[idx(col, c)] = inv[idx(col, c)].clone() / p.clone();
            }
            for r in 0..n {
                if r != col && !a[idx(r, col)].is_zero() {
                    let f = a[idx(r, col)].clone();
                    for c in 0..n {
                        a[idx(r, c)] = a[idx(r, c)].clone() - f.clone() * a[idx(col, c)].clone();
                        inv[idx(r, c)] = inv[idx(r, c)].clone() - f.clone() * inv[idx(col, c)].clone();
                    }
                }
            }
        }
        Ok(Matrix { rows: n, cols: n, data: inv })
    }

    pub fn is_invertible(&self) -> bool {
        self.inverse().is_ok()
    }

    /// Kronecker product; the left factor is the major index, so the basis
    /// order of the product matches the lexicographic order used for tensor
    /// products of fibers.
    pub fn kronecker(&self, other: &Self) -> Self {
        Self::from_fn(self.rows * other.rows, self.cols * other.cols, |r, c| {
            let (r1, r2) = (r / other.rows, r % other.rows);
            let (c1, c2) = (c / other.cols, c % other.cols);
            self.at(r1, c1).clone() * other.at(r2, c2).clone()
        })
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| self.at(r, c).clone() * s.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;

    fn rat(n: i64) -> Rat {
        Rat::from_integer(n.into())
    }

    fn m(rows: Vec<Vec<i64>>) -> Matrix<Rat> {
        Matrix::from_rows(rows.into_iter().map(|r| r.into_iter().map(rat).collect()).collect())
            .unwrap()
    }

    #[test]
    fn hand_multiplication() {
        // [[1,1],[0,1]] * [[1,0],[1,1]] = [[2,1],[1,1]]
        let a = m(vec![vec![1, 1], vec![0, 1]]);
        let b = m(vec![vec![1, 0], vec![1, 1]]);
        assert_eq!(a.mul(&b).unwrap(), m(vec![vec![2, 1], vec![1, 1]]));
    }

    #[test]
    fn inverse_times_self_is_identity() {
        let a = m(vec![vec![2, 1], vec![5, 3]]);
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).unwrap().is_identity());
        assert!(inv.mul(&a).unwrap().is_identity());
    }

    #[test]
    fn singular_rejected() {
        let a = m(vec![vec![1, 2], vec![2, 4]]);
        assert_eq!(a.inverse(), Err(MatrixError::Singular));
    }

    #[test]
    fn kronecker_of_identities_is_identity() {
        let a = Matrix::<Rat>::identity(2);
        let b = Matrix::<Rat>::identity(3);
        let k = a.kronecker(&b);
        assert_eq!((k.rows(), k.cols()), (6, 6));
        assert!(k.is_identity());
    }

    #[test]
    fn kronecker_agrees_with_pointwise_action() {
        // (A (x) B)(e_i (x) e_j) = A e_i (x) B e_j, brute force on small dims.
        let a = m(vec![vec![1, 2], vec![3, 4]]);
        let b = m(vec![vec![0, 1, 1], vec![2, 0, 1], vec![1, 1, 0]]);
        let k = a.kronecker(&b);
        for i in 0..2 {
            for j in 0..3 {
                // column of the product indexed by (i,j)
                for r1 in 0..2 {
                    for r2 in 0..3 {
                        let got = k.at(r1 * 3 + r2, i * 3 + j);
                        let want = a.at(r1, i).clone() * b.at(r2, j).clone();
                        assert_eq!(*got, want);
                    }
                }
            }
        }
    }

    #[test]
    fn permutation_applies_index_map() {
        // perm[t] = source index feeding target slot t
        let p = Matrix::<Rat>::permutation(&[2, 0, 1]);
        // acting on e_2 must give e_0
        let e2 = m(vec![vec![0], vec![0], vec![1]]);
        let out = p.mul(&e2).unwrap();
        assert_eq!(out, m(vec![vec![1], vec![0], vec![0]]));
    }
}
