//! Independent verification oracles.
//!
//! Nothing here reuses the construction path it checks: the
//! finite-difference residual probes the evaluated fields directly, the
//! matching report samples and harmonically projects the fields at the
//! interface and the wall, and the feasibility analysis ranks the
//! assembled constraint matrix. Together with the algebraic per-mode
//! residual (exact, discretization-free) these certify a solution.

use crate::assembler::{Assembler, CoefficientTable, ConstraintSystem};
use crate::dispersion::{self, Branch};
use crate::error::{Error, Result};
use crate::field::{FloquetSolution, Side, SpinorValue};
use crate::linalg::{self, Mat, ONE, ZERO};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Pass thresholds. Defaults reflect double-precision conditioning of the
/// small dense solves involved.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub algebraic: f64,
    pub matching: f64,
    pub fd_order_lo: f64,
    pub fd_order_hi: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            algebraic: 1e-12,
            matching: 1e-10,
            fd_order_lo: 1.8,
            fd_order_hi: 2.2,
        }
    }
}

/// Sample layout for the finite-difference oracle. The stencil step is
/// refined; the sample points stay fixed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FdGrid {
    /// Interior z samples per layer.
    pub z_samples: usize,
    /// t samples over one quasi-period.
    pub t_samples: usize,
    /// Left edge of the evaluation window (z in [z_min, b]).
    pub z_min: f64,
    /// Coarsest stencil step for both z and t differences.
    pub stencil: f64,
    /// Number of stencil halvings (>= 2 to fit an order).
    pub refinements: usize,
}

impl Default for FdGrid {
    fn default() -> Self {
        FdGrid {
            z_samples: 7,
            t_samples: 5,
            z_min: -2.0,
            stencil: 1e-3,
            refinements: 3,
        }
    }
}

/// Residuals and mismatches of one solution, relative to its coefficient
/// scale. Fields are `None` until the corresponding check has run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ResidualReport {
    pub max_residual_left: Option<f64>,
    pub max_residual_right: Option<f64>,
    pub convergence_order: Option<f64>,
    /// (stencil step, relative residual) per refinement level.
    pub fd_levels: Vec<(f64, f64)>,
    pub fd_monotone: Option<bool>,
    pub continuity_value: Option<f64>,
    pub continuity_deriv: Option<f64>,
    pub boundary_value: Option<f64>,
    pub verdicts: BTreeMap<String, bool>,
    pub notes: Vec<String>,
}

impl ResidualReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.values().all(|v| *v)
    }
}

/// Rank analysis of the assembled constraint system, optionally augmented
/// with single-incident-wave restrictions.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub constraint_matrix_rank: usize,
    pub unknown_count: usize,
    pub nullspace_dimension: usize,
    pub feasible: bool,
}

/// Exact per-mode residual: evaluates the characteristic polynomial and
/// the eigenvector condition at the stored wavenumber of every mode that
/// carries a nonzero coefficient, and returns the worst value. Zero for a
/// correctly constructed table, discretization-free.
pub fn residual_algebraic(sol: &FloquetSolution) -> f64 {
    let mut worst: f64 = 0.0;
    let mut check = |k: i64, branch: Branch, carries: bool| {
        if !carries {
            return;
        }
        if let Some(w) = sol.modes.wavenumber(k, branch) {
            let (poly, vec) =
                dispersion::dispersion_residual_at(&sol.params, &sol.eig, k, branch, w);
            worst = worst.max(poly).max(vec);
        }
    };
    for (&k, block) in &sol.coeffs.c {
        check(k, Branch::Q, block[0].norm() > 0.0 || block[1].norm() > 0.0);
        check(
            k,
            Branch::QTilde,
            block[2].norm() > 0.0 || block[3].norm() > 0.0,
        );
    }
    for (&k, block) in &sol.coeffs.g {
        check(k, Branch::P, block[0].norm() > 0.0 || block[1].norm() > 0.0);
        check(
            k,
            Branch::PTilde,
            block[2].norm() > 0.0 || block[3].norm() > 0.0,
        );
    }
    worst
}

fn fd_residual_at(sol: &FloquetSolution, side: Side, z: f64, t: f64, h: f64, tau: f64) -> f64 {
    let p = &sol.params;
    let f = |z: f64, t: f64| -> SpinorValue {
        match side {
            Side::Left => sol.eval_left_unchecked(z, t, false),
            Side::Right => sol.eval_right_unchecked(z, t, false),
        }
    };
    let fp = f(z, t + tau);
    let fm = f(z, t - tau);
    let dzp = f(z + h, t);
    let dz0 = f(z, t);
    let dzm = f(z - h, t);
    let dt_up = (fp.up - fm.up) / (2.0 * tau);
    let dt_dn = (fp.down - fm.down) / (2.0 * tau);
    let dzz_up = (dzp.up - 2.0 * dz0.up + dzm.up) / (h * h);
    let dzz_dn = (dzp.down - 2.0 * dz0.down + dzm.down) / (h * h);
    let i = C64::new(0.0, 1.0);
    let (r_up, r_dn) = match side {
        Side::Left => (
            -i * dt_up - 0.5 * dzz_up
                + (p.eps_xy + 0.5) * dz0.up
                + p.j1 * C64::new(0.0, -p.omega * t).exp() * dz0.down,
            -i * dt_dn - 0.5 * dzz_dn
                + (p.eps_xy - 0.5) * dz0.down
                + p.j1 * C64::new(0.0, p.omega * t).exp() * dz0.up,
        ),
        Side::Right => (
            -i * dt_up - 0.5 * dzz_up + (p.eps_xy - p.u0 + p.alpha_kx) * dz0.up
                - i * p.beta_ky * dz0.down,
            -i * dt_dn - 0.5 * dzz_dn
                + (p.eps_xy - p.u0 - p.alpha_kx) * dz0.down
                + i * p.beta_ky * dz0.up,
        ),
    };
    r_up.norm().max(r_dn.norm())
}

/// Second-order central-difference residual of both layer systems over a
/// fixed sample set, with the stencil refined `grid.refinements` times.
/// The fitted slope of residual vs step certifies an exact solution
/// (order ~ 2, residual purely discretization error).
pub fn residual_fd(
    sol: &FloquetSolution,
    grid: &FdGrid,
    tol: &Tolerances,
) -> Result<ResidualReport> {
    if grid.z_samples == 0 || grid.t_samples == 0 || grid.refinements < 2 {
        return Err(Error::Config(
            "fd grid needs z_samples, t_samples >= 1 and refinements >= 2".into(),
        ));
    }
    if grid.stencil <= 0.0 || grid.stencil.is_nan() || grid.z_min >= 0.0 {
        return Err(Error::Config(
            "fd grid needs stencil > 0 and z_min < 0".into(),
        ));
    }
    let scale = sol.scale();
    let b = sol.params.b;
    let h0 = grid.stencil;
    let period = 4.0 * PI / sol.params.omega;

    let left_z: Vec<f64> = (0..grid.z_samples)
        .map(|i| {
            let lo = grid.z_min + h0;
            let hi = -h0;
            lo + (hi - lo) * (i as f64 + 0.5) / grid.z_samples as f64
        })
        .collect();
    let right_z: Vec<f64> = (0..grid.z_samples)
        .map(|i| {
            let lo = h0;
            let hi = b - h0;
            lo + (hi - lo) * (i as f64 + 0.5) / grid.z_samples as f64
        })
        .collect();
    let times: Vec<f64> = (0..grid.t_samples)
        .map(|i| period * (i as f64 + 0.31) / grid.t_samples as f64)
        .collect();

    let mut levels = Vec::new();
    let mut level_lr = Vec::new();
    for level in 0..grid.refinements {
        let h = h0 / 2f64.powi(level as i32);
        let mut worst_l: f64 = 0.0;
        let mut worst_r: f64 = 0.0;
        for &t in &times {
            for &z in &left_z {
                worst_l = worst_l.max(fd_residual_at(sol, Side::Left, z, t, h, h));
            }
            for &z in &right_z {
                worst_r = worst_r.max(fd_residual_at(sol, Side::Right, z, t, h, h));
            }
        }
        if scale > 0.0 {
            worst_l /= scale;
            worst_r /= scale;
        }
        levels.push((h, worst_l.max(worst_r)));
        level_lr.push((worst_l, worst_r));
    }

    let zero_residual = levels.iter().all(|(_, r)| *r == 0.0);
    let monotone = levels.windows(2).all(|w| w[1].1 < w[0].1);
    let order = if zero_residual {
        None
    } else {
        // least-squares slope of ln r against ln h
        let pts: Vec<(f64, f64)> = levels
            .iter()
            .filter(|(_, r)| *r > 0.0)
            .map(|(h, r)| (h.ln(), r.ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let cov = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
        let var = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
        Some(cov / var)
    };

    let (finest_l, finest_r) = *level_lr.last().unwrap();
    let fd_pass = zero_residual
        || (monotone
            && order
                .map(|o| o >= tol.fd_order_lo && o <= tol.fd_order_hi)
                .unwrap_or(false));
    let mut verdicts = BTreeMap::new();
    verdicts.insert("fd_order".into(), fd_pass);
    Ok(ResidualReport {
        max_residual_left: Some(finest_l),
        max_residual_right: Some(finest_r),
        convergence_order: order,
        fd_levels: levels,
        fd_monotone: Some(monotone),
        verdicts,
        notes: sol.eig.notes.clone(),
        ..Default::default()
    })
}

/// Solve the small harmonic system `sum_a amp_a e^{i nu_a t_j} = f(t_j)`
/// on a uniform grid over one drive period; frequencies are spaced by the
/// drive frequency so the system is a scaled DFT.
fn project_harmonics(freqs: &[f64], samples: &[(f64, C64)]) -> Result<Vec<C64>> {
    let n = freqs.len();
    assert_eq!(samples.len(), n);
    let rows: Vec<Vec<C64>> = samples
        .iter()
        .map(|(t, _)| freqs.iter().map(|nu| C64::new(0.0, nu * t).exp()).collect())
        .collect();
    let mat = Mat::from_rows(&rows);
    let rhs: Vec<C64> = samples.iter().map(|(_, v)| *v).collect();
    linalg::solve(&mat, &rhs)
}

/// Interface and wall mismatches: sampled sup-norms over `t_samples`
/// uniform times, plus a per-harmonic projection that checks every scalar
/// matching equation individually. All values relative to the solution
/// scale; the overall figure per check is the max of both routes.
pub fn matching_report(
    sol: &FloquetSolution,
    t_samples: usize,
    tol: &Tolerances,
) -> Result<ResidualReport> {
    if t_samples < 2 {
        return Err(Error::Config("matching needs t_samples >= 2".into()));
    }
    let scale = sol.scale();
    let rel = |v: f64| if scale > 0.0 { v / scale } else { v };
    let period = 4.0 * PI / sol.params.omega;
    let b = sol.params.b;

    let mut cont_val: f64 = 0.0;
    let mut cont_der: f64 = 0.0;
    let mut wall: f64 = 0.0;
    for i in 0..t_samples {
        let t = period * i as f64 / t_samples as f64;
        let l = sol.eval_left_unchecked(0.0, t, false);
        let r = sol.eval_right_unchecked(0.0, t, false);
        cont_val = cont_val.max(l.sub(&r).max_norm());
        let dl = sol.eval_left_unchecked(0.0, t, true);
        let dr = sol.eval_right_unchecked(0.0, t, true);
        cont_der = cont_der.max(dl.sub(&dr).max_norm());
        wall = wall.max(sol.eval_right_unchecked(b, t, false).max_norm());
    }

    // Harmonic projection. Up-component mismatch at z = 0 lives on the
    // harmonics (m-1+2j) w/2, j = 0..n; down-component on (m+1+2j) w/2.
    let w = sol.params.omega;
    let omega_q = sol.params.quasi_energy;
    let m = sol.params.m_base as f64;
    let n = sol.params.n_len;
    let proj_period = 2.0 * PI / w;
    let sample_times = |count: usize| -> Vec<f64> {
        (0..count)
            .map(|j| proj_period * j as f64 / count as f64)
            .collect()
    };

    let run = |freqs: Vec<f64>, f: &dyn Fn(f64) -> C64| -> Result<f64> {
        let times = sample_times(freqs.len());
        let samples: Vec<(f64, C64)> = times.iter().map(|&t| (t, f(t))).collect();
        let amps = project_harmonics(&freqs, &samples)?;
        Ok(amps.iter().map(|a| a.norm()).fold(0.0, f64::max))
    };

    let up_freqs: Vec<f64> = (0..=n)
        .map(|j| (m - 1.0 + 2.0 * j as f64) * w / 2.0 - omega_q)
        .collect();
    let down_freqs: Vec<f64> = (0..=n)
        .map(|j| (m + 1.0 + 2.0 * j as f64) * w / 2.0 - omega_q)
        .collect();
    let g_freqs: Vec<f64> = (0..n)
        .map(|j| (m + 1.0 + 2.0 * j as f64) * w / 2.0 - omega_q)
        .collect();

    let up_val = run(up_freqs.clone(), &|t| {
        sol.eval_left_unchecked(0.0, t, false).up - sol.eval_right_unchecked(0.0, t, false).up
    })?;
    let up_der = run(up_freqs, &|t| {
        sol.eval_left_unchecked(0.0, t, true).up - sol.eval_right_unchecked(0.0, t, true).up
    })?;
    let down_val = run(down_freqs.clone(), &|t| {
        sol.eval_left_unchecked(0.0, t, false).down - sol.eval_right_unchecked(0.0, t, false).down
    })?;
    let down_der = run(down_freqs, &|t| {
        sol.eval_left_unchecked(0.0, t, true).down - sol.eval_right_unchecked(0.0, t, true).down
    })?;
    let (wall_up, wall_down) = if n > 0 {
        (
            run(g_freqs.clone(), &|t| {
                sol.eval_right_unchecked(b, t, false).up
            })?,
            run(g_freqs, &|t| sol.eval_right_unchecked(b, t, false).down)?,
        )
    } else {
        (0.0, 0.0)
    };

    let continuity_value = rel(cont_val.max(up_val).max(down_val));
    let continuity_deriv = rel(cont_der.max(up_der).max(down_der));
    let boundary_value = rel(wall.max(wall_up).max(wall_down));

    let mut verdicts = BTreeMap::new();
    verdicts.insert(
        "continuity".into(),
        continuity_value <= tol.matching && continuity_deriv <= tol.matching,
    );
    verdicts.insert("boundary".into(), boundary_value <= tol.matching);
    Ok(ResidualReport {
        continuity_value: Some(continuity_value),
        continuity_deriv: Some(continuity_deriv),
        boundary_value: Some(boundary_value),
        verdicts,
        notes: sol.eig.notes.clone(),
        ..Default::default()
    })
}

/// Max entrywise difference between two tables, relative to the first
/// table's scale.
pub fn oracle_compare(a: &CoefficientTable, b: &CoefficientTable) -> Result<f64> {
    let keys_a: Vec<_> = a.c.keys().chain(a.g.keys()).collect();
    let keys_b: Vec<_> = b.c.keys().chain(b.g.keys()).collect();
    if keys_a != keys_b {
        return Err(Error::IndexMismatch(format!(
            "left has {keys_a:?}, right has {keys_b:?}"
        )));
    }
    let scale = a.scale();
    let mut worst: f64 = 0.0;
    for (k, blk) in &a.c {
        for (x, y) in blk.iter().zip(&b.c[k]) {
            worst = worst.max((x - y).norm());
        }
    }
    for (k, blk) in &a.g {
        for (x, y) in blk.iter().zip(&b.g[k]) {
            worst = worst.max((x - y).norm());
        }
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// Columns of incident-type coefficients (the `e^{+iqz}` entries 1 and 3
/// of every left-layer block).
fn incident_columns(sys: &ConstraintSystem) -> Vec<usize> {
    let blocks = sys.n_len + 1;
    let mut cols = Vec::with_capacity(2 * blocks);
    for j in 0..blocks {
        cols.push(sys.c_column(j, 0));
        cols.push(sys.c_column(j, 2));
    }
    cols
}

/// Nullspace dimension of the complete homogeneous matching system; this
/// is the number of free complex constants the construction consumes.
pub fn free_constant_report(asm: &Assembler) -> FeasibilityReport {
    let sys = asm.constraint_system();
    let dec = linalg::rank_nullspace(&sys.mat, asm.opts.rank_tolerance);
    FeasibilityReport {
        constraint_matrix_rank: dec.rank,
        unknown_count: sys.mat.cols,
        nullspace_dimension: dec.nullspace.len(),
        feasible: !dec.nullspace.is_empty(),
    }
}

/// Feasibility of a stationary-scattering boundary condition: keep one
/// incident-type coefficient (block 0, q family by default) and force
/// every other incident-type coefficient to zero. `feasible` reports
/// whether the restricted system still has a solution with the kept
/// coefficient nonzero.
pub fn incident_wave_feasibility(asm: &Assembler, kept_column: Option<usize>) -> FeasibilityReport {
    let sys = asm.constraint_system();
    let cols = sys.mat.cols;
    let incident = incident_columns(&sys);
    let kept = kept_column.unwrap_or(sys.c_column(0, 0));

    let mut rows: Vec<Vec<C64>> = Vec::with_capacity(sys.mat.rows + incident.len());
    for r in 0..sys.mat.rows {
        rows.push((0..cols).map(|c| sys.mat.at(r, c)).collect());
    }
    for &col in &incident {
        if col == kept {
            continue;
        }
        let mut row = vec![ZERO; cols];
        row[col] = ONE;
        rows.push(row);
    }
    let restricted = Mat::from_rows(&rows);
    let dec = linalg::rank_nullspace(&restricted, asm.opts.rank_tolerance);

    // the kept coefficient can be nonzero iff zeroing it, too, costs a
    // further rank increase
    let feasible = if dec.nullspace.is_empty() {
        false
    } else {
        let mut row = vec![ZERO; cols];
        row[kept] = ONE;
        rows.push(row);
        let dec2 = linalg::rank_nullspace(&Mat::from_rows(&rows), asm.opts.rank_tolerance);
        dec2.nullspace.len() < dec.nullspace.len()
    };

    FeasibilityReport {
        constraint_matrix_rank: dec.rank,
        unknown_count: cols,
        nullspace_dimension: dec.nullspace.len(),
        feasible,
    }
}
