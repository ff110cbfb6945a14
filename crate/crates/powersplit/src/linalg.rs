//! Dense linear algebra over exact rationals: elimination, rank, nullspace
//! and linear solves for the small systems produced by gear-train reduction.

use crate::rational::Frac;
use num_traits::{One, Zero};

/// Row-major dense matrix of exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMat {
    rows: usize,
    cols: usize,
    data: Vec<Frac>,
}

impl RatMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Frac::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Frac::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Frac>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Frac] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        let p = a * b;
                        out[(i, j)] += p;
                    }
                }
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if self[(i, j)] != self[(j, i)] {
                    return false;
                }
            }
        }
        true
    }

    /// In-place reduced row echelon form; returns the pivot column of each
    /// pivot row (so `pivots.len()` is the rank).
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut pivot_row = 0;
        for col in 0..self.cols {
            if pivot_row == self.rows {
                break;
            }
            let Some(src) = (pivot_row..self.rows).find(|&r| !self[(r, col)].is_zero()) else {
                continue;
            };
            self.swap_rows(pivot_row, src);
            let inv = self[(pivot_row, col)].recip();
            for j in col..self.cols {
                let v = &self[(pivot_row, j)] * &inv;
                self[(pivot_row, j)] = v;
            }
            for r in 0..self.rows {
                if r != pivot_row && !self[(r, col)].is_zero() {
                    let factor = self[(r, col)].clone();
                    for j in col..self.cols {
                        let delta = &factor * &self[(pivot_row, j)];
                        self[(r, j)] -= delta;
                    }
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut work = self.clone();
        work.rref_in_place().len()
    }

    /// Basis of the right nullspace, one vector per free column.
    pub fn nullspace(&self) -> Vec<Vec<Frac>> {
        let mut work = self.clone();
        let pivots = work.rref_in_place();
        let pivot_set: Vec<Option<usize>> = {
            let mut map = vec![None; self.cols];
            for (r, &c) in pivots.iter().enumerate() {
                map[c] = Some(r);
            }
            map
        };
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_set[free].is_some() {
                continue;
            }
            let mut v = vec![Frac::zero(); self.cols];
            v[free] = Frac::one();
            for (col, &p) in pivot_set.iter().enumerate() {
                if let Some(r) = p {
                    v[col] = -work[(r, free)].clone();
                }
            }
            basis.push(v);
        }
        basis
    }

    /// Solves `self * x = rhs` for square invertible `self`.
    pub fn solve(&self, rhs: &Self) -> Option<Self> {
        assert_eq!(self.rows, self.cols, "solve requires a square matrix");
        assert_eq!(self.rows, rhs.rows, "rhs row mismatch");
        let mut work = Self::zeros(self.rows, self.cols + rhs.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                work[(i, j)] = self[(i, j)].clone();
            }
            for j in 0..rhs.cols {
                work[(i, self.cols + j)] = rhs[(i, j)].clone();
            }
        }
        let pivots = work.rref_in_place();
        if pivots.len() < self.rows || pivots.iter().any(|&c| c >= self.cols) {
            return None;
        }
        let mut x = Self::zeros(self.cols, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                x[(i, j)] = work[(i, self.cols + j)].clone();
            }
        }
        Some(x)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl std::ops::Index<(usize, usize)> for RatMat {
    type Output = Frac;
    fn index(&self, (i, j): (usize, usize)) -> &Frac {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Frac {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves a linearly constrained quadratic-form system by elimination:
/// given symmetric positive semi-definite `m` and constraint rows `c`,
/// returns `x` with `m x + cᵀ λ = rhs`, `c x = 0` when the primal part is
/// uniquely determined. Used as a general KKT solve.
pub fn solve_kkt(m: &RatMat, c: &RatMat, rhs: &RatMat) -> Option<RatMat> {
    let n = m.nrows();
    let k = c.nrows();
    assert_eq!(m.ncols(), n);
    assert_eq!(c.ncols(), n);
    assert_eq!(rhs.nrows(), n);
    let nrhs = rhs.ncols();
    // Augmented [m cᵀ | rhs; c 0 | 0], eliminated over exact rationals. The
    // multipliers may stay free when constraints are redundant; the primal
    // block must pivot fully for the solution to be unique.
    let dim = n + k;
    let mut work = RatMat::zeros(dim, dim + nrhs);
    for i in 0..n {
        for j in 0..n {
            work[(i, j)] = m[(i, j)].clone();
        }
        for j in 0..k {
            work[(i, n + j)] = c[(j, i)].clone();
        }
        for j in 0..nrhs {
            work[(i, dim + j)] = rhs[(i, j)].clone();
        }
    }
    for i in 0..k {
        for j in 0..n {
            work[(n + i, j)] = c[(i, j)].clone();
        }
    }
    let pivots = work.rref_in_place();
    // Inconsistent system: a pivot landed in the RHS block.
    if pivots.iter().any(|&c| c >= dim) {
        return None;
    }
    // Every primal variable must be pivotal and must not couple to any free
    // multiplier column, otherwise x is not unique.
    let mut row_of_pivot = vec![None; dim];
    for (r, &c) in pivots.iter().enumerate() {
        row_of_pivot[c] = Some(r);
    }
    let mut x = RatMat::zeros(n, nrhs);
    for var in 0..n {
        let Some(r) = row_of_pivot[var] else {
            return None;
        };
        for col in 0..dim {
            if col != var && !work[(r, col)].is_zero() && row_of_pivot[col].is_none() {
                return None;
            }
        }
        for j in 0..nrhs {
            x[(var, j)] = work[(r, dim + j)].clone();
        }
    }
    Some(x)
}
