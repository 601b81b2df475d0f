//! Dense exact linear algebra over the rationals: determinants, inverses,
//! solves, and fraction-free rank computation. Sizes here are element-local
//! DoF matrices (tens) and global operator matrices (a few hundred), so a
//! dense representation is the right tool.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::rational::Q;

/// Row-major dense matrix of exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<Q>,
}

impl QMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        QMatrix { nrows, ncols, data: vec![Q::zero(); nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend(r);
        }
        QMatrix { nrows, ncols, data }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> Q) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[Q] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn transpose(&self) -> QMatrix {
        QMatrix::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut out = QMatrix::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for l in 0..self.ncols {
                let a = &self[(i, l)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.ncols {
                    let b = &other[(l, j)];
                    if b.is_zero() {
                        continue;
                    }
                    let prod = a * b;
                    out[(i, j)] += prod;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(self.ncols, v.len());
        (0..self.nrows)
            .map(|i| {
                let mut acc = Q::zero();
                for j in 0..self.ncols {
                    if !self[(i, j)].is_zero() && !v[j].is_zero() {
                        acc += &self[(i, j)] * &v[j];
                    }
                }
                acc
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// Horizontally stack `[self | other]`.
    pub fn hstack(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.nrows, other.nrows);
        QMatrix::from_fn(self.nrows, self.ncols + other.ncols, |i, j| {
            if j < self.ncols {
                self[(i, j)].clone()
            } else {
                other[(i, j - self.ncols)].clone()
            }
        })
    }

    pub fn vstack(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.ncols, other.ncols);
        QMatrix::from_fn(self.nrows + other.nrows, self.ncols, |i, j| {
            if i < self.nrows {
                self[(i, j)].clone()
            } else {
                other[(i - self.nrows, j)].clone()
            }
        })
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> QMatrix {
        QMatrix::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])].clone())
    }

    /// Exact determinant by rational Gaussian elimination with row pivoting.
    pub fn det(&self) -> Q {
        assert_eq!(self.nrows, self.ncols, "determinant of non-square matrix");
        let n = self.nrows;
        let mut m = self.clone();
        let mut det = Q::one();
        for col in 0..n {
            let pivot_row = (col..n).find(|&r| !m[(r, col)].is_zero());
            let Some(pr) = pivot_row else {
                return Q::zero();
            };
            if pr != col {
                m.swap_rows(pr, col);
                det = -det;
            }
            let pivot = m[(col, col)].clone();
            det *= &pivot;
            for r in (col + 1)..n {
                if m[(r, col)].is_zero() {
                    continue;
                }
                let factor = &m[(r, col)] / &pivot;
                for c in col..n {
                    let sub = &factor * &m[(col, c)];
                    m[(r, c)] -= sub;
                }
            }
        }
        det
    }

    /// Exact rank via fraction-free Bareiss elimination on the integer
    /// matrix obtained by clearing denominators row by row.
    pub fn rank(&self) -> usize {
        let mut m: Vec<Vec<BigInt>> = (0..self.nrows)
            .map(|i| {
                let mut lcm = BigInt::one();
                for j in 0..self.ncols {
                    lcm = lcm.lcm(self[(i, j)].denom());
                }
                (0..self.ncols)
                    .map(|j| {
                        let e = &self[(i, j)];
                        e.numer() * (&lcm / e.denom())
                    })
                    .collect()
            })
            .collect();
        let (nrows, ncols) = (self.nrows, self.ncols);
        let mut rank = 0usize;
        let mut prev = BigInt::one();
        let mut row = 0usize;
        for col in 0..ncols {
            if row >= nrows {
                break;
            }
            let pivot_row = (row..nrows).find(|&r| !m[r][col].is_zero());
            let Some(pr) = pivot_row else { continue };
            m.swap(row, pr);
            for r in (row + 1)..nrows {
                for c in (col + 1)..ncols {
                    let num = &m[row][col] * &m[r][c] - &m[r][col] * &m[row][c];
                    m[r][c] = num / &prev;
                }
                m[r][col] = BigInt::zero();
            }
            prev = m[row][col].clone();
            row += 1;
            rank += 1;
        }
        rank
    }

    /// Exact inverse; `None` when singular.
    pub fn inverse(&self) -> Option<QMatrix> {
        assert_eq!(self.nrows, self.ncols);
        let n = self.nrows;
        let mut m = self.clone();
        let mut inv = QMatrix::identity(n);
        for col in 0..n {
            let pr = (col..n).find(|&r| !m[(r, col)].is_zero())?;
            if pr != col {
                m.swap_rows(pr, col);
                inv.swap_rows(pr, col);
            }
            let pivot = m[(col, col)].clone();
            for c in 0..n {
                m[(col, c)] /= &pivot;
                inv[(col, c)] /= &pivot;
            }
            for r in 0..n {
                if r == col || m[(r, col)].is_zero() {
                    continue;
                }
                let factor = m[(r, col)].clone();
                for c in 0..n {
                    let s = &factor * &m[(col, c)];
                    m[(r, c)] -= s;
                    let s = &factor * &inv[(col, c)];
                    inv[(r, c)] -= s;
                }
            }
        }
        Some(inv)
    }

    /// Solve the square system `self * x = rhs` exactly for each rhs column.
    pub fn solve(&self, rhs: &QMatrix) -> Option<QMatrix> {
        Some(self.inverse()?.mul(rhs))
    }

    /// A nonzero kernel vector of a square singular matrix, for diagnostics.
    pub fn null_vector(&self) -> Option<Vec<Q>> {
        let (rref, pivots) = self.rref();
        if pivots.len() == self.ncols {
            return None;
        }
        let free = (0..self.ncols).find(|c| !pivots.contains(c))?;
        let mut v = vec![Q::zero(); self.ncols];
        v[free] = Q::one();
        for (prow, pcol) in pivots.iter().enumerate() {
            v[*pcol] = -rref[(prow, free)].clone();
        }
        Some(v)
    }

    /// Reduced row echelon form together with the pivot column list.
    pub fn rref(&self) -> (QMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0usize;
        for col in 0..m.ncols {
            if row >= m.nrows {
                break;
            }
            let Some(pr) = (row..m.nrows).find(|&r| !m[(r, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(pr, row);
            let pivot = m[(row, col)].clone();
            for c in 0..m.ncols {
                m[(row, c)] /= &pivot;
            }
            for r in 0..m.nrows {
                if r == row || m[(r, col)].is_zero() {
                    continue;
                }
                let factor = m[(r, col)].clone();
                for c in 0..m.ncols {
                    let s = &factor * &m[(row, c)];
                    m[(r, c)] -= s;
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    /// Exact particular solution of the (possibly non-square) consistent
    /// system `self * x = rhs`; `None` when the system is inconsistent.
    pub fn solve_any(&self, rhs: &[Q]) -> Option<Vec<Q>> {
        assert_eq!(self.nrows, rhs.len());
        let aug = self.hstack(&QMatrix::from_fn(self.nrows, 1, |i, _| rhs[i].clone()));
        let (rref, pivots) = aug.rref();
        // Inconsistent iff some pivot lands in the rhs column.
        if pivots.contains(&self.ncols) {
            return None;
        }
        let mut x = vec![Q::zero(); self.ncols];
        for (prow, pcol) in pivots.iter().enumerate() {
            x[*pcol] = rref[(prow, self.ncols)].clone();
        }
        Some(x)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.ncols {
            self.data.swap(a * self.ncols + c, b * self.ncols + c);
        }
    }

    /// Row-major float copy for the solver boundary.
    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(crate::rational::to_f64).collect()
    }
}

impl std::ops::Index<(usize, usize)> for QMatrix {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        &mut self.data[i * self.ncols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};
    use crate::sampling::{random_rational, rng_from_seed};

    #[test]
    fn det_and_inverse_small() {
        let m = QMatrix::from_rows(vec![
            vec![qi(2), qi(1)],
            vec![qi(7), qi(4)],
        ]);
        assert_eq!(m.det(), qi(1));
        let inv = m.inverse().unwrap();
        assert_eq!(inv.mul(&m), QMatrix::identity(2));
    }

    #[test]
    fn rank_of_rank_deficient() {
        let m = QMatrix::from_rows(vec![
            vec![qi(1), qi(2), qi(3)],
            vec![qi(2), qi(4), qi(6)],
            vec![qi(1), qi(0), qi(1)],
        ]);
        assert_eq!(m.rank(), 2);
        assert_eq!(m.det(), qi(0));
        let v = m.null_vector().unwrap();
        assert!(m.mul_vec(&v).iter().all(|x| x.is_zero()));
        assert!(v.iter().any(|x| !x.is_zero()));
    }

    #[test]
    fn random_inverse_roundtrip() {
        let mut rng = rng_from_seed(1);
        for n in [3usize, 6, 10] {
            let m = QMatrix::from_fn(n, n, |_, _| random_rational(&mut rng));
            if m.det().is_zero() {
                continue;
            }
            let inv = m.inverse().unwrap();
            assert_eq!(m.mul(&inv), QMatrix::identity(n));
            assert_eq!(m.rank(), n);
        }
    }

    #[test]
    fn solve_any_consistency() {
        // 2x3 system with consistent rhs.
        let m = QMatrix::from_rows(vec![
            vec![qi(1), qi(1), qi(0)],
            vec![qi(0), qi(1), qi(1)],
        ]);
        let x = m.solve_any(&[qi(3), qi(5)]).unwrap();
        let r = m.mul_vec(&x);
        assert_eq!(r, vec![qi(3), qi(5)]);
        // Inconsistent system.
        let bad = QMatrix::from_rows(vec![
            vec![qi(1), qi(1)],
            vec![qi(2), qi(2)],
        ]);
        assert!(bad.solve_any(&[qi(1), qi(3)]).is_none());
        assert_eq!(bad.rank(), 1);
    }

    #[test]
    fn rank_with_fractions() {
        let m = QMatrix::from_rows(vec![
            vec![q(1, 2), q(1, 3)],
            vec![q(1, 5), qi(1)],
        ]);
        assert_eq!(m.rank(), 2);
        // A proportional second row drops the rank.
        let singular = QMatrix::from_rows(vec![
            vec![q(1, 2), q(1, 3)],
            vec![q(3, 2), qi(1)],
        ]);
        assert_eq!(singular.rank(), 1);
    }
}
