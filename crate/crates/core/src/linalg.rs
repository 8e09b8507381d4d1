//! Exact dense linear algebra over the scalar field: rank, solve, and
//! composition checks for the pointwise complexes.

use crate::error::Error;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Scalar::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m[(i, i)] = Scalar::one();
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.is_zero())
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        let mut out = Matrix::zero(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let p = &self[(i, k)] * &rhs[(k, j)];
                    let s = &out[(i, j)] + &p;
                    out[(i, j)] = s;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        let mut row = 0;
        for col in 0..m.cols {
            let Some(p) = (row..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(row, p);
            let inv = m[(row, col)].inv().expect("nonzero pivot");
            for j in col..m.cols {
                m[(row, j)] = &m[(row, j)] * &inv;
            }
            for r in 0..m.rows {
                if r != row && !m[(r, col)].is_zero() {
                    let f = m[(r, col)].clone();
                    for j in col..m.cols {
                        let s = &m[(r, j)] - &(&f * &m[(row, j)]);
                        m[(r, j)] = s;
                    }
                }
            }
            rank += 1;
            row += 1;
            if row == m.rows {
                break;
            }
        }
        rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Solve `self * x = b` for one solution; `None` when inconsistent.
    pub fn solve(&self, b: &[Scalar]) -> Option<Vec<Scalar>> {
        assert_eq!(b.len(), self.rows);
        let mut m = Matrix::zero(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self[(i, j)].clone();
            }
            m[(i, self.cols)] = b[i].clone();
        }
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            let Some(p) = (row..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(row, p);
            let inv = m[(row, col)].inv().expect("nonzero pivot");
            for j in col..=self.cols {
                m[(row, j)] = &m[(row, j)] * &inv;
            }
            for r in 0..m.rows {
                if r != row && !m[(r, col)].is_zero() {
                    let f = m[(r, col)].clone();
                    for j in col..=self.cols {
                        let s = &m[(r, j)] - &(&f * &m[(row, j)]);
                        m[(r, j)] = s;
                    }
                }
            }
            pivots.push((row, col));
            row += 1;
            if row == m.rows {
                break;
            }
        }
        // inconsistent if a zero row has nonzero rhs
        for r in row..m.rows {
            if !m[(r, self.cols)].is_zero() {
                return None;
            }
        }
        let mut x = vec![Scalar::zero(); self.cols];
        for (r, c) in pivots {
            x[c] = m[(r, self.cols)].clone();
        }
        Some(x)
    }

    /// A basis of the kernel.
    pub fn kernel(&self) -> Vec<Vec<Scalar>> {
        let mut m = self.clone();
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            let Some(p) = (row..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(row, p);
            let inv = m[(row, col)].inv().expect("nonzero pivot");
            for j in col..m.cols {
                m[(row, j)] = &m[(row, j)] * &inv;
            }
            for r in 0..m.rows {
                if r != row && !m[(r, col)].is_zero() {
                    let f = m[(r, col)].clone();
                    for j in col..m.cols {
                        let s = &m[(r, j)] - &(&f * &m[(row, j)]);
                        m[(r, j)] = s;
                    }
                }
            }
            pivots.push((row, col));
            row += 1;
            if row == m.rows {
                break;
            }
        }
        let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
        let mut basis = Vec::new();
        for free in 0..m.cols {
            if pivot_cols.contains(&free) {
                continue;
            }
            let mut v = vec![Scalar::zero(); m.cols];
            v[free] = Scalar::one();
            for &(r, c) in &pivots {
                v[c] = -&m[(r, free)];
            }
            basis.push(v);
        }
        basis
    }

    /// Determinant by elimination with exact division.
    pub fn det(&self) -> Result<Scalar, Error> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return Ok(Scalar::one());
        }
        // gaussian elimination with exact division
        let mut m = self.clone();
        let mut det = Scalar::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !m[(r, col)].is_zero()) else {
                return Ok(Scalar::zero());
            };
            if p != col {
                m.swap_rows(col, p);
                det = -det;
            }
            det = &det * &m[(col, col)];
            let inv = m[(col, col)].inv()?;
            for r in col + 1..n {
                if m[(r, col)].is_zero() {
                    continue;
                }
                let f = &m[(r, col)] * &inv;
                for j in col..n {
                    let s = &m[(r, j)] - &(&f * &m[(col, j)]);
                    m[(r, j)] = s;
                }
            }
        }
        Ok(det)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Scalar;
    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_solve() {
        let mut m = Matrix::zero(2, 3);
        m[(0, 0)] = Scalar::from_int(1);
        m[(0, 1)] = Scalar::from_int(2);
        m[(1, 1)] = Scalar::from_int(1);
        m[(1, 2)] = Scalar::from_int(1);
        assert_eq!(m.rank(), 2);
        let b = vec![Scalar::from_int(3), Scalar::from_int(1)];
        let x = m.solve(&b).unwrap();
        // check m x = b
        for i in 0..2 {
            let mut s = Scalar::zero();
            for j in 0..3 {
                s = &s + &(&m[(i, j)] * &x[j]);
            }
            assert_eq!(s, b[i]);
        }
        // inconsistent system
        let mut m2 = Matrix::zero(2, 1);
        m2[(0, 0)] = Scalar::from_int(1);
        m2[(1, 0)] = Scalar::from_int(1);
        assert!(m2.solve(&[Scalar::from_int(1), Scalar::from_int(2)]).is_none());
    }

    #[test]
    fn determinant() {
        let mut m = Matrix::identity(3);
        m[(0, 1)] = Scalar::from_int(4);
        m[(2, 0)] = Scalar::from_int(-1);
        m[(1, 1)] = Scalar::from_int(2);
        assert_eq!(m.det().unwrap(), Scalar::from_int(2));
    }
}
