//! Construction of the expansion coefficients.
//!
//! The solution couples left-layer coefficient blocks `c^{m+2j}` (4 complex
//! entries each, j = 0..n) to right-layer blocks `g^{m+2j+1}` (j = 0..n-1)
//! through value/derivative continuity at z = 0 and a hard wall at z = b.
//! The chain runs: seed the lowest block (2 free constants), then per step
//! solve a 4x4 interface system for the g block and a 2x2 for the next c
//! block (2 more free constants per interior step), and close with a fully
//! determined terminal block. A closed-form route for the minimal length-1
//! solution serves as an independent oracle.

use crate::dispersion::{EigenStructure, ModeTable};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, ONE, ZERO};
use crate::params::{validate_config, DimensionlessParams};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::collections::BTreeMap;

/// Knobs for the construction.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Interface determinant is treated as zero below
    /// `degeneracy_threshold * max_norm^4`.
    pub degeneracy_threshold: f64,
    /// Value assigned to the extra free g entry on the rank-3 path.
    pub rank3_free_value: C64,
    /// Relative tolerance for rank decisions on assembled systems.
    pub rank_tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            degeneracy_threshold: 1e-8,
            rank3_free_value: ZERO,
            rank_tolerance: 1e-9,
        }
    }
}

/// The full set of expansion coefficients for one solution, keyed by
/// sideband index. `g` always has one fewer block than `c`.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientTable {
    pub m_base: i64,
    pub n_len: usize,
    pub c: BTreeMap<i64, [C64; 4]>,
    pub g: BTreeMap<i64, [C64; 4]>,
    /// Provenance: which entries were free, solved, or rank-3 fallbacks.
    pub notes: Vec<String>,
}

impl CoefficientTable {
    /// Largest coefficient magnitude; the scale for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.c
            .values()
            .chain(self.g.values())
            .flat_map(|b| b.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn zeros(params: &DimensionlessParams) -> Self {
        let mut c = BTreeMap::new();
        let mut g = BTreeMap::new();
        for k in params.c_indices() {
            c.insert(k, [ZERO; 4]);
        }
        for k in params.g_indices() {
            g.insert(k, [ZERO; 4]);
        }
        CoefficientTable {
            m_base: params.m_base,
            n_len: params.n_len,
            c,
            g,
            notes: Vec::new(),
        }
    }

    /// Flatten to a vector in the constraint-system column order
    /// (c blocks ascending, then g blocks ascending).
    pub fn to_vector(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(4 * (self.c.len() + self.g.len()));
        for block in self.c.values() {
            v.extend_from_slice(block);
        }
        for block in self.g.values() {
            v.extend_from_slice(block);
        }
        v
    }
}

/// One interface step in matrix form: the two left-hand 4x4 matrices
/// (rows 3-4 zero) and the shared right-hand matrix.
#[derive(Debug, Clone)]
pub struct InterfaceSystem {
    pub k_g: i64,
    pub lhs_down: Mat,
    pub lhs_up: Mat,
    pub rhs_down: Mat,
    pub rhs_up: Mat,
}

/// Which closed-form interface determinant to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterfaceEq {
    ValueSide,
    WeightedSide,
}

/// Holds everything a construction needs: parameters, spectral constants,
/// and the mode table. All methods are pure.
#[derive(Debug, Clone)]
pub struct Assembler {
    pub params: DimensionlessParams,
    pub eig: EigenStructure,
    pub modes: ModeTable,
    pub opts: SolveOptions,
}

impl Assembler {
    pub fn new(params: DimensionlessParams, opts: SolveOptions) -> Result<Self> {
        let report = validate_config(&params)?;
        if let Some((index, branch)) = report.first_rejected {
            return Err(Error::EvanescentMode { index, branch });
        }
        let eig = crate::dispersion::spectral_constants(&params)?;
        let modes = ModeTable::build(&params)?;
        Ok(Assembler {
            params,
            eig,
            modes,
            opts,
        })
    }

    fn left_pair(&self, k: i64) -> (f64, f64) {
        let m = self.modes.left[&k];
        (m.main, m.tilde)
    }

    fn right_pair(&self, k: i64) -> (f64, f64) {
        let m = self.modes.right[&k];
        (m.main, m.tilde)
    }

    /// Left-hand matrix of the value-side step equation, acting on the
    /// c block at index `k_c` (down-component continuity rows).
    pub fn interface_lhs_down(&self, k_c: i64) -> Mat {
        let (q, qt) = self.left_pair(k_c);
        let i = C64::new(0.0, 1.0);
        Mat::from_rows(&[
            vec![ONE, ONE, ONE, ONE],
            vec![i * q, -i * q, i * qt, -i * qt],
            vec![ZERO; 4],
            vec![ZERO; 4],
        ])
    }

    /// Left-hand matrix of the weighted-side step equation, acting on the
    /// c block at index `k_c` (up-component continuity rows).
    pub fn interface_lhs_up(&self, k_c: i64) -> Mat {
        let (q, qt) = self.left_pair(k_c);
        let wq = C64::new(self.eig.weight_q(), 0.0);
        let wqt = C64::new(self.eig.weight_q_tilde(), 0.0);
        let i = C64::new(0.0, 1.0);
        Mat::from_rows(&[
            vec![wq, wq, wqt, wqt],
            vec![i * q * wq, -i * q * wq, i * qt * wqt, -i * qt * wqt],
            vec![ZERO; 4],
            vec![ZERO; 4],
        ])
    }

    fn boundary_rows(&self, k_g: i64) -> (Vec<C64>, Vec<C64>) {
        let (p, pt) = self.right_pair(k_g);
        let wp = self.eig.weight_p();
        let wpt = self.eig.weight_p_tilde();
        let b = self.params.b;
        let ep = C64::new(0.0, p * b).exp();
        let ept = C64::new(0.0, pt * b).exp();
        let up = vec![wp * ep, wp / ep, wpt * ept, wpt / ept];
        let down = vec![ep, ONE / ep, ept, ONE / ept];
        (up, down)
    }

    /// Right-hand matrix of the value-side step equation: down-component
    /// continuity rows plus the two hard-wall rows.
    pub fn interface_rhs_matrix(&self, k_g: i64) -> Mat {
        let (p, pt) = self.right_pair(k_g);
        let i = C64::new(0.0, 1.0);
        let (up, down) = self.boundary_rows(k_g);
        Mat::from_rows(&[
            vec![ONE, ONE, ONE, ONE],
            vec![i * p, -i * p, i * pt, -i * pt],
            up,
            down,
        ])
    }

    /// Right-hand matrix of the weighted-side step equation: up-component
    /// continuity rows plus the same two hard-wall rows.
    pub fn interface_rhs_up_matrix(&self, k_g: i64) -> Mat {
        let (p, pt) = self.right_pair(k_g);
        let wp = self.eig.weight_p();
        let wpt = self.eig.weight_p_tilde();
        let i = C64::new(0.0, 1.0);
        let (up, down) = self.boundary_rows(k_g);
        Mat::from_rows(&[
            vec![wp, wp, wpt, wpt],
            vec![i * p * wp, -i * p * wp, i * pt * wpt, -i * pt * wpt],
            up,
            down,
        ])
    }

    /// Bundle both step systems for the g block at `k_g` (between c blocks
    /// `k_g - 1` and `k_g + 1`).
    pub fn interface_system(&self, k_g: i64) -> InterfaceSystem {
        InterfaceSystem {
            k_g,
            lhs_down: self.interface_lhs_down(k_g - 1),
            lhs_up: self.interface_lhs_up(k_g + 1),
            rhs_down: self.interface_rhs_matrix(k_g),
            rhs_up: self.interface_rhs_up_matrix(k_g),
        }
    }

    /// The oscillatory factor shared by both interface determinants:
    /// `p~ cos(b p~) sin(b p) - p cos(b p) sin(b p~)`.
    pub fn interface_wronskian(&self, k_g: i64) -> f64 {
        let (p, pt) = self.right_pair(k_g);
        let b = self.params.b;
        pt * (b * pt).cos() * (b * p).sin() - p * (b * p).cos() * (b * pt).sin()
    }

    /// Closed-form determinant of the right-hand interface matrices.
    pub fn interface_det(&self, k_g: i64, which: InterfaceEq) -> C64 {
        let wp = self.eig.weight_p();
        let wpt = self.eig.weight_p_tilde();
        let base = (wpt - wp) * 4.0 * self.interface_wronskian(k_g);
        match which {
            InterfaceEq::ValueSide => base,
            InterfaceEq::WeightedSide => wp * wpt * base,
        }
    }

    /// Scale-invariant degeneracy test on the value-side interface matrix.
    pub fn is_degenerate(&self, k_g: i64) -> bool {
        let m = self.interface_rhs_matrix(k_g);
        let norm = m.max_abs();
        self.interface_det(k_g, InterfaceEq::ValueSide).norm()
            < self.opts.degeneracy_threshold * norm.powi(4)
    }

    /// Solve the two seed constraints for (c3, c4) given free (c1, c2).
    pub fn seed_solve(&self, c1: C64, c2: C64) -> Result<(C64, C64)> {
        let (q, qt) = self.left_pair(self.params.m_base);
        let wq = self.eig.weight_q();
        let wqt = self.eig.weight_q_tilde();
        if qt == 0.0 || wqt == 0.0 {
            return Err(Error::SingularSeed(format!(
                "q~ = {qt}, up-weight of q~ branch = {wqt}"
            )));
        }
        let ratio = C64::new(-wq / wqt, 0.0);
        let sum = ratio * (c1 + c2);
        let diff = ratio * (q / qt) * (c1 - c2);
        Ok(((sum + diff) / 2.0, (sum - diff) / 2.0))
    }

    /// Solve the value-side 4x4 for the g block at `k_g` from the c block
    /// below it. Returns the solution and whether the rank-3 path fired,
    /// plus the residual of all four constraints (nonzero only when the
    /// degenerate system is inconsistent with the incoming block).
    pub fn interface_g(&self, k_g: i64, c_prev: &[C64; 4]) -> Result<([C64; 4], bool, f64)> {
        let a = self.interface_rhs_matrix(k_g);
        let lhs = self.interface_lhs_down(k_g - 1);
        let rhs = lhs.mul_vec(c_prev.as_slice());
        if !self.is_degenerate(k_g) {
            let g = linalg::solve(&a, &rhs)?;
            return Ok(([g[0], g[1], g[2], g[3]], false, 0.0));
        }
        // Rank-3 path: the non-pivot column's unknown becomes free.
        let dec = linalg::rank_nullspace(&a, self.opts.rank_tolerance);
        if dec.rank < 3 {
            return Err(Error::InternalContradiction(format!(
                "interface matrix rank {} < 3 at sideband {k_g}",
                dec.rank
            )));
        }
        if dec.rank == 4 {
            // determinant under threshold but numerically full rank:
            // solve as usual, flagging the step
            let g = linalg::solve(&a, &rhs)?;
            return Ok(([g[0], g[1], g[2], g[3]], true, 0.0));
        }
        let free_col = (0..4)
            .find(|c| !dec.pivot_cols.contains(c))
            .expect("rank 3 leaves one free column");
        // move the frozen column to the right-hand side
        let mut reduced = Mat::zeros(4, 3);
        let mut cols = Vec::new();
        for c in 0..4 {
            if c != free_col {
                cols.push(c);
            }
        }
        let mut b = rhs.clone();
        for (r, slot) in b.iter_mut().enumerate() {
            for (jc, &c) in cols.iter().enumerate() {
                *reduced.at_mut(r, jc) = a.at(r, c);
            }
            *slot -= a.at(r, free_col) * self.opts.rank3_free_value;
        }
        let x = linalg::lstsq_min_norm(&reduced, &b, self.opts.rank_tolerance);
        let mut g = [ZERO; 4];
        g[free_col] = self.opts.rank3_free_value;
        for (jc, &c) in cols.iter().enumerate() {
            g[c] = x[jc];
        }
        let back = a.mul_vec(g.as_slice());
        let residual = back
            .iter()
            .zip(&rhs)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        Ok((g, true, residual))
    }

    /// Given the solved g block, pick free (c1, c2) for the next c block
    /// and solve the two weighted continuity rows for (c3, c4).
    pub fn next_block(&self, k_g: i64, g: &[C64; 4], free_pair: (C64, C64)) -> Result<[C64; 4]> {
        let k_next = k_g + 1;
        let (q2, qt2) = self.left_pair(k_next);
        let wq = self.eig.weight_q();
        let wqt = self.eig.weight_q_tilde();
        if qt2 == 0.0 || wqt == 0.0 {
            return Err(Error::SingularMatrix(format!(
                "cannot solve for block {k_next}: q~ = {qt2}, weight = {wqt}"
            )));
        }
        let rhs_up = self.interface_rhs_up_matrix(k_g);
        let w = rhs_up.mul_vec(g.as_slice());
        let (c1, c2) = free_pair;
        // w[1] carries the i factor of the derivative rows on both sides
        let minus_i = C64::new(0.0, -1.0);
        let sum = (w[0] - wq * (c1 + c2)) / wqt;
        let diff = (minus_i * w[1] - q2 * wq * (c1 - c2)) / (qt2 * wqt);
        Ok([c1, c2, (sum + diff) / 2.0, (sum - diff) / 2.0])
    }

    /// One full chain step: g from the incoming block, then the next c
    /// block with its two free entries.
    pub fn step_solve(
        &self,
        j: usize,
        c_prev: &[C64; 4],
        free_pair: (C64, C64),
    ) -> Result<StepOutcome> {
        if j >= self.params.n_len {
            return Err(Error::InvalidParameter {
                field: "j",
                reason: format!("step {j} outside 0..{}", self.params.n_len),
            });
        }
        let k_g = self.params.m_base + 2 * j as i64 + 1;
        let (g, rank3, residual) = self.interface_g(k_g, c_prev)?;
        let c_next = self.next_block(k_g, &g, free_pair)?;
        Ok(StepOutcome {
            g,
            c_next,
            rank3,
            constraint_residual: residual,
        })
    }

    /// Solve the four terminal constraints for the top c block.
    pub fn terminal_solve(&self, g_last: &[C64; 4]) -> Result<[C64; 4]> {
        let n = self.params.n_len as i64;
        let k_top = self.params.m_base + 2 * n;
        let k_g = k_top - 1;
        let (q, qt) = self.left_pair(k_top);
        let wq = C64::new(self.eig.weight_q(), 0.0);
        let wqt = C64::new(self.eig.weight_q_tilde(), 0.0);
        let i = C64::new(0.0, 1.0);
        let a = Mat::from_rows(&[
            vec![ONE, ONE, ONE, ONE],
            vec![i * q, -i * q, i * qt, -i * qt],
            vec![wq, wq, wqt, wqt],
            vec![i * q * wq, -i * q * wq, i * qt * wqt, -i * qt * wqt],
        ]);
        let rhs_up = self.interface_rhs_up_matrix(k_g);
        let w = rhs_up.mul_vec(g_last.as_slice());
        let rhs = vec![ZERO, ZERO, w[0], w[1]];
        let x = linalg::solve(&a, &rhs).map_err(|e| {
            Error::DegenerateTerminal(format!("terminal system at sideband {k_top}: {e}"))
        })?;
        Ok([x[0], x[1], x[2], x[3]])
    }

    /// Run the whole chain, consuming exactly `2 n` free complex
    /// constants: the first two seed the lowest block, each further pair
    /// becomes entries (1, 2) of an interior block. Falls back to a
    /// nullspace construction when any interface determinant degenerates.
    pub fn construct(&self, free: &[C64]) -> Result<CoefficientTable> {
        let n = self.params.n_len;
        if free.len() != 2 * n {
            return Err(Error::FreeConstantCount {
                expected: 2 * n,
                got: free.len(),
            });
        }
        let degenerate: Vec<i64> = self
            .params
            .g_indices()
            .into_iter()
            .filter(|&k| self.is_degenerate(k))
            .collect();
        if !degenerate.is_empty() {
            return self.construct_from_nullspace(free, &degenerate);
        }

        let m = self.params.m_base;
        let mut table = CoefficientTable::zeros(&self.params);
        let (c3, c4) = self.seed_solve(free[0], free[1])?;
        let mut current = [free[0], free[1], c3, c4];
        table.c.insert(m, current);
        table.notes.push(format!(
            "block {m}: entries 1-2 free, 3-4 from seed constraints"
        ));
        let mut consumed = 2usize;

        for j in 0..n {
            let k_g = m + 2 * j as i64 + 1;
            if j + 1 < n {
                let pair = (free[consumed], free[consumed + 1]);
                consumed += 2;
                let out = self.step_solve(j, &current, pair)?;
                table.g.insert(k_g, out.g);
                table.c.insert(k_g + 1, out.c_next);
                table.notes.push(format!(
                    "block {}: entries 1-2 free, 3-4 from interface rows",
                    k_g + 1
                ));
                current = out.c_next;
            } else {
                let (g, rank3, _res) = self.interface_g(k_g, &current)?;
                debug_assert!(!rank3);
                table.g.insert(k_g, g);
                let top = self.terminal_solve(&g)?;
                table.c.insert(k_g + 1, top);
                table.notes.push(format!(
                    "block {}: fully determined by terminal rows",
                    k_g + 1
                ));
            }
        }
        assert_eq!(consumed, 2 * n);
        Ok(table)
    }

    /// Degenerate-path construction: take the nullspace of the complete
    /// homogeneous constraint system and use the free constants as
    /// coordinates in that basis. At an interface-determinant zero the
    /// chain's free slots stop being independent (the feasible seeds
    /// collapse onto a line), so the basis coordinates are the honest
    /// parametrization of the surviving freedom.
    fn construct_from_nullspace(
        &self,
        free: &[C64],
        degenerate: &[i64],
    ) -> Result<CoefficientTable> {
        let n = self.params.n_len;
        let system = self.constraint_system();
        let dec = linalg::rank_nullspace(&system.mat, self.opts.rank_tolerance);
        let dim = dec.nullspace.len();
        if dim < 2 * n {
            return Err(Error::InternalContradiction(format!(
                "homogeneous system nullspace {dim} below the expected {}",
                2 * n
            )));
        }
        let cols = system.mat.cols;
        let mut v = vec![ZERO; cols];
        for (coef, basis) in free.iter().zip(dec.nullspace.iter()) {
            for (slot, b) in v.iter_mut().zip(basis.iter()) {
                *slot += coef * b;
            }
        }
        let mut table = system.table_from_vector(&self.params, &v);
        table.notes.push(format!(
            "rank-3 path: interface determinant vanishes at sideband(s) {degenerate:?}; \
             coefficients built from the {dim}-dimensional nullspace basis, free constants \
             consumed as basis coordinates"
        ));
        Ok(table)
    }

    /// Closed-form minimal (length-1) solution from the two seed
    /// constants. Independent of the chain solver; used as its oracle.
    pub fn minimal_closed_form(&self, c1: C64, c2: C64) -> Result<CoefficientTable> {
        if self.params.n_len != 1 {
            return Err(Error::InvalidParameter {
                field: "n_len",
                reason: "closed form is defined for length-1 solutions".into(),
            });
        }
        let m = self.params.m_base;
        let (q, qt) = self.left_pair(m);
        let (q2, qt2) = self.left_pair(m + 2);
        let (pw, pt) = self.right_pair(m + 1);
        let b = self.params.b;
        let wq = C64::new(self.eig.weight_q(), 0.0);
        let wqt = C64::new(self.eig.weight_q_tilde(), 0.0);
        let wp = self.eig.weight_p();
        let wpt = self.eig.weight_p_tilde();
        let i = C64::new(0.0, 1.0);

        let wr = pt * (b * pt).cos() * (b * pw).sin() - pw * (b * pw).cos() * (b * pt).sin();
        if self.is_degenerate(m + 1) {
            return Err(Error::DegenerateDeterminant { index: m + 1 });
        }

        // seed block
        let (c3, c4) = {
            let ratio = -wq / wqt;
            let c3 = ratio / (2.0 * qt) * (c1 * (qt + q) + c2 * (qt - q));
            let c4 = ratio / (2.0 * qt) * (c1 * (qt - q) + c2 * (qt + q));
            (c3, c4)
        };

        // g block: hard wall + unweighted continuity rows in closed form
        let kdiff = wq - wqt;
        let cpt = (b * pt).cos();
        let spt = (b * pt).sin();
        let cp = (b * pw).cos();
        let sp = (b * pw).sin();
        let phase_p = C64::new(0.0, b * pw).exp();
        let phase_pt = C64::new(0.0, b * pt).exp();
        let g1 = (kdiff / (2.0 * wqt * wr)) * (-i * (c1 + c2) * pt * cpt + (c1 - c2) * q * spt)
            / phase_p;
        let g2 =
            (kdiff / (2.0 * wqt * wr)) * (i * (c1 + c2) * pt * cpt - (c1 - c2) * q * spt) * phase_p;
        let g3 = (kdiff / (2.0 * wqt * (-wr))) * (-i * (c1 + c2) * pw * cp + (c1 - c2) * q * sp)
            / phase_pt;
        let g4 = (kdiff / (2.0 * wqt * (-wr)))
            * (i * (c1 + c2) * pw * cp - (c1 - c2) * q * sp)
            * phase_pt;

        // top block: terminal rows in closed form
        let s1 = wp * (g1 + g2) + wpt * (g3 + g4);
        let s2 = pw * wp * (g1 - g2) + pt * wpt * (g3 - g4);
        let dweight = 2.0 * (wq - wqt);
        let c1t = (s2 + q2 * s1) / (dweight * q2);
        let c2t = (q2 * s1 - s2) / (dweight * q2);
        let c3t = -(s2 + qt2 * s1) / (dweight * qt2);
        let c4t = (s2 - qt2 * s1) / (dweight * qt2);

        let mut table = CoefficientTable::zeros(&self.params);
        table.c.insert(m, [c1, c2, c3, c4]);
        table.g.insert(m + 1, [g1, g2, g3, g4]);
        table.c.insert(m + 2, [c1t, c2t, c3t, c4t]);
        table
            .notes
            .push("closed-form minimal solution (length 1)".into());
        Ok(table)
    }

    /// Assemble the complete homogeneous constraint system on every
    /// coefficient: seed rows, four continuity rows and two hard-wall rows
    /// per g block, and two terminal rows.
    pub fn constraint_system(&self) -> ConstraintSystem {
        let n = self.params.n_len;
        let m = self.params.m_base;
        let cols = 4 * (2 * n + 1);
        let c_off = |j: usize| 4 * j;
        let g_off = |j: usize| 4 * (n + 1) + 4 * j;
        let wq = C64::new(self.eig.weight_q(), 0.0);
        let wqt = C64::new(self.eig.weight_q_tilde(), 0.0);
        let wp = self.eig.weight_p();
        let wpt = self.eig.weight_p_tilde();
        let i = C64::new(0.0, 1.0);

        let mut rows: Vec<Vec<C64>> = Vec::with_capacity(6 * n + 4);
        let row = || vec![ZERO; cols];

        // seed rows: up-component value and derivative of the lowest
        // harmonic, present only in the left layer
        let (q, qt) = self.left_pair(m);
        let mut r = row();
        r[c_off(0)..c_off(0) + 4].copy_from_slice(&[wq, wq, wqt, wqt]);
        rows.push(r);
        let mut r = row();
        r[c_off(0)..c_off(0) + 4].copy_from_slice(&[
            i * q * wq,
            -i * q * wq,
            i * qt * wqt,
            -i * qt * wqt,
        ]);
        rows.push(r);

        for j in 0..n {
            let k_c = m + 2 * j as i64;
            let k_g = k_c + 1;
            let (q, qt) = self.left_pair(k_c);
            let (q2, qt2) = self.left_pair(k_c + 2);
            let (p, pt) = self.right_pair(k_g);
            let (bup, bdown) = self.boundary_rows(k_g);

            // down-component value continuity
            let mut r = row();
            r[c_off(j)..c_off(j) + 4].copy_from_slice(&[ONE, ONE, ONE, ONE]);
            r[g_off(j)..g_off(j) + 4].copy_from_slice(&[-ONE, -ONE, -ONE, -ONE]);
            rows.push(r);
            // down-component derivative continuity
            let mut r = row();
            r[c_off(j)..c_off(j) + 4].copy_from_slice(&[i * q, -i * q, i * qt, -i * qt]);
            r[g_off(j)..g_off(j) + 4].copy_from_slice(&[-i * p, i * p, -i * pt, i * pt]);
            rows.push(r);
            // up-component value continuity (next c block vs this g block)
            let mut r = row();
            r[c_off(j + 1)..c_off(j + 1) + 4].copy_from_slice(&[wq, wq, wqt, wqt]);
            r[g_off(j)..g_off(j) + 4].copy_from_slice(&[-wp, -wp, -wpt, -wpt]);
            rows.push(r);
            // up-component derivative continuity
            let mut r = row();
            r[c_off(j + 1)..c_off(j + 1) + 4].copy_from_slice(&[
                i * q2 * wq,
                -i * q2 * wq,
                i * qt2 * wqt,
                -i * qt2 * wqt,
            ]);
            r[g_off(j)..g_off(j) + 4].copy_from_slice(&[
                -i * p * wp,
                i * p * wp,
                -i * pt * wpt,
                i * pt * wpt,
            ]);
            rows.push(r);
            // hard wall, both components
            let mut r = row();
            r[g_off(j)..g_off(j) + 4].copy_from_slice(&bup);
            rows.push(r);
            let mut r = row();
            r[g_off(j)..g_off(j) + 4].copy_from_slice(&bdown);
            rows.push(r);
        }

        // terminal rows: down-component of the highest harmonic
        let k_top = m + 2 * n as i64;
        let (q, qt) = self.left_pair(k_top);
        let mut r = row();
        r[c_off(n)..c_off(n) + 4].copy_from_slice(&[ONE, ONE, ONE, ONE]);
        rows.push(r);
        let mut r = row();
        r[c_off(n)..c_off(n) + 4].copy_from_slice(&[i * q, -i * q, i * qt, -i * qt]);
        rows.push(r);

        ConstraintSystem {
            mat: Mat::from_rows(&rows),
            n_len: n,
            m_base: m,
        }
    }
}

/// Outcome of one chain step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub g: [C64; 4],
    pub c_next: [C64; 4],
    pub rank3: bool,
    /// Max violation of the four interface constraints; nonzero only on
    /// an inconsistent rank-3 step.
    pub constraint_residual: f64,
}

/// The assembled homogeneous constraint matrix with its column layout:
/// c blocks ascending (4 columns each), then g blocks ascending.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub mat: Mat,
    pub n_len: usize,
    pub m_base: i64,
}

impl ConstraintSystem {
    pub fn c_column(&self, j: usize, entry: usize) -> usize {
        4 * j + entry
    }

    pub fn g_column(&self, j: usize, entry: usize) -> usize {
        4 * (self.n_len + 1) + 4 * j + entry
    }

    pub fn table_from_vector(&self, params: &DimensionlessParams, v: &[C64]) -> CoefficientTable {
        let mut table = CoefficientTable::zeros(params);
        for (j, k) in params.c_indices().into_iter().enumerate() {
            let base = self.c_column(j, 0);
            table
                .c
                .insert(k, [v[base], v[base + 1], v[base + 2], v[base + 3]]);
        }
        for (j, k) in params.g_indices().into_iter().enumerate() {
            let base = self.g_column(j, 0);
            table
                .g
                .insert(k, [v[base], v[base + 1], v[base + 2], v[base + 3]]);
        }
        table
    }
}

/// Bisect the interface-determinant oscillatory factor to a zero of the
/// determinant in the layer thickness `b`. Scans `[b_lo, b_hi]` for a sign
/// change, then bisects to `tol`. Returns `None` when no sign change is
/// found in the scanned range.
pub fn find_det_zero_in_b(
    params: &DimensionlessParams,
    k_g: i64,
    b_lo: f64,
    b_hi: f64,
    tol: f64,
) -> Option<f64> {
    let wr = |b: f64| -> f64 {
        let mut p = *params;
        p.b = b;
        let asm = Assembler::new(p, SolveOptions::default()).ok();
        asm.map(|a| a.interface_wronskian(k_g)).unwrap_or(f64::NAN)
    };
    let steps = 512;
    let mut prev_b = b_lo;
    let mut prev_v = wr(b_lo);
    for s in 1..=steps {
        let b = b_lo + (b_hi - b_lo) * s as f64 / steps as f64;
        let v = wr(b);
        if prev_v.is_finite() && v.is_finite() && prev_v * v < 0.0 {
            let (mut lo, mut hi, mut flo) = (prev_b, b, prev_v);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                let fm = wr(mid);
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        prev_b = b;
        prev_v = v;
    }
    None
}
