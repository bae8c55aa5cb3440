//! Small dense complex linear algebra: pivoted elimination for the 4x4
//! matching systems, cofactor determinants, and rank / nullspace
//! computation for the assembled constraint matrices. Everything here is
//! sized for systems with at most a few dozen rows; no external solver.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major rectangular complex matrix.
#[derive(Debug, Clone)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        Mat {
            rows: r,
            cols: c,
            data,
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j) * v[j]).sum())
            .collect()
    }
}

/// Solve a square system by Gaussian elimination with partial pivoting.
pub fn solve(a: &Mat, b: &[C64]) -> Result<Vec<C64>> {
    assert_eq!(a.rows, a.cols);
    assert_eq!(b.len(), a.rows);
    let n = a.rows;
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let scale = m.max_abs().max(1e-300);
    for col in 0..n {
        let (pivot_row, pivot_mag) = (col..n)
            .map(|r| (r, m.at(r, col).norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pivot_mag <= f64::EPSILON * scale * n as f64 {
            return Err(Error::SingularMatrix(format!(
                "pivot {pivot_mag:.3e} at column {col} (scale {scale:.3e})"
            )));
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = m.at(col, j);
                *m.at_mut(col, j) = m.at(pivot_row, j);
                *m.at_mut(pivot_row, j) = tmp;
            }
            rhs.swap(col, pivot_row);
        }
        let inv = ONE / m.at(col, col);
        for r in col + 1..n {
            let f = m.at(r, col) * inv;
            if f == ZERO {
                continue;
            }
            for j in col..n {
                let val = m.at(col, j);
                *m.at_mut(r, j) -= f * val;
            }
            let upd = rhs[col];
            rhs[r] -= f * upd;
        }
    }
    let mut x = vec![ZERO; n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for (j, xj) in x.iter().enumerate().skip(i + 1) {
            acc -= m.at(i, j) * xj;
        }
        x[i] = acc / m.at(i, i);
    }
    Ok(x)
}

/// Determinant by recursive cofactor expansion. Deliberately naive: it is
/// the independent cross-check for the closed-form interface determinants.
pub fn det_cofactor(a: &Mat) -> C64 {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    if n == 1 {
        return a.at(0, 0);
    }
    let mut det = ZERO;
    let mut sign = ONE;
    for j in 0..n {
        let mut minor = Mat::zeros(n - 1, n - 1);
        for r in 1..n {
            let mut cj = 0;
            for c in 0..n {
                if c == j {
                    continue;
                }
                *minor.at_mut(r - 1, cj) = a.at(r, c);
                cj += 1;
            }
        }
        det += sign * a.at(0, j) * det_cofactor(&minor);
        sign = -sign;
    }
    det
}

/// Result of a rank-revealing elimination.
#[derive(Debug, Clone)]
pub struct RankDecomposition {
    pub rank: usize,
    /// Column indices used as pivots, in elimination order.
    pub pivot_cols: Vec<usize>,
    /// Nullspace basis vectors (columns of length `cols`), one per free
    /// column, built by back-substitution on the reduced echelon form.
    pub nullspace: Vec<Vec<C64>>,
}

/// Full-pivot Gauss-Jordan with a relative tolerance. `tol_rel` is
/// measured against the largest entry of the input matrix.
pub fn rank_nullspace(a: &Mat, tol_rel: f64) -> RankDecomposition {
    let mut m = a.clone();
    let (rows, cols) = (m.rows, m.cols);
    let scale = m.max_abs();
    let tol = tol_rel * scale.max(1e-300);
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut pivot_rows: Vec<usize> = Vec::new();
    let mut used_rows = vec![false; rows];
    let mut used_cols = vec![false; cols];

    loop {
        // largest remaining entry
        let mut best = (0usize, 0usize, 0.0f64);
        for (r, _) in used_rows.iter().enumerate().filter(|(_, used)| !**used) {
            for (c, _) in used_cols.iter().enumerate().filter(|(_, used)| !**used) {
                let mag = m.at(r, c).norm();
                if mag > best.2 {
                    best = (r, c, mag);
                }
            }
        }
        if best.2 <= tol {
            break;
        }
        let (pr, pc, _) = best;
        used_rows[pr] = true;
        used_cols[pc] = true;
        pivot_rows.push(pr);
        pivot_cols.push(pc);
        let inv = ONE / m.at(pr, pc);
        for j in 0..cols {
            let v = m.at(pr, j) * inv;
            *m.at_mut(pr, j) = v;
        }
        for r in 0..rows {
            if r == pr {
                continue;
            }
            let f = m.at(r, pc);
            if f == ZERO {
                continue;
            }
            for j in 0..cols {
                let v = m.at(pr, j);
                *m.at_mut(r, j) -= f * v;
            }
        }
    }

    let rank = pivot_cols.len();
    let free_cols: Vec<usize> = (0..cols).filter(|c| !used_cols[*c]).collect();
    let mut nullspace = Vec::with_capacity(free_cols.len());
    for &fc in &free_cols {
        let mut v = vec![ZERO; cols];
        v[fc] = ONE;
        for (idx, &pc) in pivot_cols.iter().enumerate() {
            let pr = pivot_rows[idx];
            v[pc] = -m.at(pr, fc);
        }
        nullspace.push(v);
    }
    RankDecomposition {
        rank,
        pivot_cols,
        nullspace,
    }
}

/// Minimum-norm least-squares solve of a (possibly rank-deficient)
/// system via the normal equations on the pivoted column space. Adequate
/// for the well-scaled 4x4 interface systems this crate meets.
pub fn lstsq_min_norm(a: &Mat, b: &[C64], tol_rel: f64) -> Vec<C64> {
    let dec = rank_nullspace(a, tol_rel);
    let r = dec.rank;
    if r == 0 {
        return vec![ZERO; a.cols];
    }
    // restrict to pivot columns: solve (A_p^H A_p) y = A_p^H b
    let mut apa = Mat::zeros(r, r);
    let mut apb = vec![ZERO; r];
    for (i, &ci) in dec.pivot_cols.iter().enumerate() {
        for (j, &cj) in dec.pivot_cols.iter().enumerate() {
            let mut acc = ZERO;
            for row in 0..a.rows {
                acc += a.at(row, ci).conj() * a.at(row, cj);
            }
            *apa.at_mut(i, j) = acc;
        }
        let mut acc = ZERO;
        for (row, rhs) in b.iter().enumerate() {
            acc += a.at(row, ci).conj() * rhs;
        }
        apb[i] = acc;
    }
    let y = solve(&apa, &apb).unwrap_or_else(|_| vec![ZERO; r]);
    let mut x = vec![ZERO; a.cols];
    for (i, &ci) in dec.pivot_cols.iter().enumerate() {
        x[ci] = y[i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn solve_roundtrip() {
        let a = Mat::from_rows(&[
            vec![c(2.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)],
            vec![c(0.0, 3.0), c(1.0, 1.0), c(0.5, 0.0)],
            vec![c(1.0, 0.0), c(2.0, 0.0), c(-1.0, 2.0)],
        ]);
        let x_true = vec![c(1.0, -2.0), c(0.5, 0.5), c(-3.0, 1.0)];
        let b = a.mul_vec(&x_true);
        let x = solve(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).norm() < 1e-12);
        }
    }

    #[test]
    fn solve_rejects_singular() {
        let a = Mat::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(2.0, 0.0), c(4.0, 0.0)],
        ]);
        assert!(solve(&a, &[ONE, ONE]).is_err());
    }

    #[test]
    fn cofactor_det_matches_closed_form_2x2() {
        let a = Mat::from_rows(&[
            vec![c(1.0, 2.0), c(3.0, -1.0)],
            vec![c(0.0, 1.0), c(2.0, 2.0)],
        ]);
        let expect = c(1.0, 2.0) * c(2.0, 2.0) - c(3.0, -1.0) * c(0.0, 1.0);
        assert!((det_cofactor(&a) - expect).norm() < 1e-14);
    }

    #[test]
    fn rank_and_nullspace_of_deficient_matrix() {
        // rank-2 3x4 matrix: row3 = row1 + row2
        let r1 = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0), c(0.0, 0.0)];
        let r2 = vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(3.0, 0.0)];
        let r3: Vec<C64> = r1.iter().zip(&r2).map(|(a, b)| a + b).collect();
        let a = Mat::from_rows(&[r1, r2, r3]);
        let dec = rank_nullspace(&a, 1e-12);
        assert_eq!(dec.rank, 2);
        assert_eq!(dec.nullspace.len(), 2);
        for v in &dec.nullspace {
            let r = a.mul_vec(v);
            assert!(r.iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn min_norm_solution_solves_consistent_deficient_system() {
        let r1 = vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        let r2 = vec![c(2.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)];
        let a = Mat::from_rows(&[r1, r2]);
        let b = vec![c(3.0, 0.0), c(6.0, 0.0)];
        let x = lstsq_min_norm(&a, &b, 1e-12);
        let r = a.mul_vec(&x);
        assert!((r[0] - b[0]).norm() < 1e-12);
        assert!((r[1] - b[1]).norm() < 1e-12);
    }
}
