//! Run configuration and the on-disk formats: JSON config, coefficient
//! files, verification reports, and the CSV writers. Complex numbers
//! serialize exclusively as [re, im] pairs; floats use the shortest
//! round-trip decimal form.

use crate::assembler::{CoefficientTable, SolveOptions};
use crate::error::{Error, Result};
use crate::params::{normalize_params, DimensionlessParams, PhysicalParams};
use crate::verify::{FdGrid, FeasibilityReport, ResidualReport, Tolerances};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Left edge of the evaluation window; the window is [z_min, b].
    #[serde(default = "default_z_min")]
    pub z_min: f64,
    #[serde(default = "default_z_count")]
    pub z_count: usize,
    #[serde(default = "default_t_count")]
    pub t_count: usize,
    /// Sampling time window; defaults to one quasi-period 4 pi / omega.
    #[serde(default)]
    pub t_max: Option<f64>,
}

fn default_z_min() -> f64 {
    -2.0
}
fn default_z_count() -> usize {
    64
}
fn default_t_count() -> usize {
    16
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            z_min: default_z_min(),
            z_count: default_z_count(),
            t_count: default_t_count(),
            t_max: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "default_algebraic")]
    pub algebraic: f64,
    #[serde(default = "default_matching")]
    pub matching: f64,
    #[serde(default = "default_order_lo")]
    pub fd_order_lo: f64,
    #[serde(default = "default_order_hi")]
    pub fd_order_hi: f64,
}

fn default_algebraic() -> f64 {
    1e-12
}
fn default_matching() -> f64 {
    1e-10
}
fn default_order_lo() -> f64 {
    1.8
}
fn default_order_hi() -> f64 {
    2.2
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            algebraic: default_algebraic(),
            matching: default_matching(),
            fd_order_lo: default_order_lo(),
            fd_order_hi: default_order_hi(),
        }
    }
}

impl From<&ToleranceConfig> for Tolerances {
    fn from(t: &ToleranceConfig) -> Tolerances {
        Tolerances {
            algebraic: t.algebraic,
            matching: t.matching,
            fd_order_lo: t.fd_order_lo,
            fd_order_hi: t.fd_order_hi,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdConfig {
    #[serde(default = "default_fd_z")]
    pub z_samples: usize,
    #[serde(default = "default_fd_t")]
    pub t_samples: usize,
    #[serde(default = "default_stencil")]
    pub stencil: f64,
    #[serde(default = "default_refinements")]
    pub refinements: usize,
}

fn default_fd_z() -> usize {
    7
}
fn default_fd_t() -> usize {
    5
}
fn default_stencil() -> f64 {
    1e-3
}
fn default_refinements() -> usize {
    3
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            z_samples: default_fd_z(),
            t_samples: default_fd_t(),
            stencil: default_stencil(),
            refinements: default_refinements(),
        }
    }
}

/// One run = one config file. Either the dimensionless parameters sit at
/// the top level, or a `physical` block plus `"normalize": true` derives
/// them.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub omega: Option<f64>,
    #[serde(rename = "J1")]
    pub j1: Option<f64>,
    #[serde(default)]
    pub eps_xy: f64,
    #[serde(rename = "Omega")]
    pub quasi_energy: Option<f64>,
    #[serde(rename = "U0", default)]
    pub u0: f64,
    pub alpha_kx: Option<f64>,
    pub beta_ky: Option<f64>,
    pub b: Option<f64>,
    #[serde(default)]
    pub m_base: i64,
    #[serde(default = "default_n_len")]
    pub n_len: usize,

    pub physical: Option<PhysicalParams>,
    #[serde(default)]
    pub normalize: bool,

    /// 2 n complex free constants as [re, im]; defaults to [1, 0, 0, ...].
    pub free_coeffs: Option<Vec<[f64; 2]>>,

    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub fd: FdConfig,

    #[serde(default = "default_degeneracy")]
    pub degeneracy_threshold: f64,
    #[serde(default)]
    pub rank3_free_value: [f64; 2],
    #[serde(default = "default_matching_samples")]
    pub matching_t_samples: usize,

    /// Test-only: multiply one seed coefficient by (1 + value) after
    /// construction so verification must fail.
    #[serde(default)]
    pub inject_corruption: Option<f64>,

    /// Default output path; the --out flag overrides it.
    #[serde(default)]
    pub out: Option<String>,
}

fn default_n_len() -> usize {
    1
}
fn default_degeneracy() -> f64 {
    1e-8
}
fn default_matching_samples() -> usize {
    64
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if self.grid.z_count < 2 || self.grid.t_count < 2 {
            return Err(Error::Config(
                "grid: z_count and t_count must be >= 2".into(),
            ));
        }
        if let Some(fc) = &self.free_coeffs {
            if fc.len() != 2 * self.n_len {
                return Err(Error::Config(format!(
                    "free_coeffs: expected 2·n = {} entries, got {}",
                    2 * self.n_len,
                    fc.len()
                )));
            }
        }
        Ok(())
    }

    /// Resolve the dimensionless parameter set this run works on.
    pub fn params(&self) -> Result<DimensionlessParams> {
        if self.normalize {
            let phys = self.physical.as_ref().ok_or_else(|| {
                Error::Config("normalize = true requires a `physical` block".into())
            })?;
            return normalize_params(phys, self.m_base, self.n_len);
        }
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
        };
        let p = DimensionlessParams {
            omega: need(self.omega, "omega")?,
            j1: need(self.j1, "J1")?,
            eps_xy: self.eps_xy,
            quasi_energy: need(self.quasi_energy, "Omega")?,
            u0: self.u0,
            alpha_kx: need(self.alpha_kx, "alpha_kx")?,
            beta_ky: need(self.beta_ky, "beta_ky")?,
            b: need(self.b, "b")?,
            m_base: self.m_base,
            n_len: self.n_len,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn free_constants(&self) -> Vec<C64> {
        match &self.free_coeffs {
            Some(fc) => fc.iter().map(|[re, im]| C64::new(*re, *im)).collect(),
            None => {
                let mut v = vec![C64::new(0.0, 0.0); 2 * self.n_len];
                v[0] = C64::new(1.0, 0.0);
                v
            }
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            degeneracy_threshold: self.degeneracy_threshold,
            rank3_free_value: C64::new(self.rank3_free_value[0], self.rank3_free_value[1]),
            ..SolveOptions::default()
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        (&self.tolerances).into()
    }

    pub fn fd_grid(&self) -> FdGrid {
        FdGrid {
            z_samples: self.fd.z_samples,
            t_samples: self.fd.t_samples,
            z_min: self.grid.z_min,
            stencil: self.fd.stencil,
            refinements: self.fd.refinements,
        }
    }
}

fn pair(z: &C64) -> [f64; 2] {
    [z.re, z.im]
}

/// Serialized coefficient table: block index -> four [re, im] pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub params: DimensionlessParams,
    pub c: BTreeMap<String, Vec<[f64; 2]>>,
    pub g: BTreeMap<String, Vec<[f64; 2]>>,
    pub notes: Vec<String>,
}

impl CoefficientFile {
    pub fn from_table(params: &DimensionlessParams, table: &CoefficientTable) -> CoefficientFile {
        let conv = |m: &BTreeMap<i64, [C64; 4]>| {
            m.iter()
                .map(|(k, b)| (k.to_string(), b.iter().map(pair).collect()))
                .collect()
        };
        CoefficientFile {
            params: *params,
            c: conv(&table.c),
            g: conv(&table.g),
            notes: table.notes.clone(),
        }
    }

    pub fn into_table(self) -> Result<(DimensionlessParams, CoefficientTable)> {
        let conv = |m: BTreeMap<String, Vec<[f64; 2]>>| -> Result<BTreeMap<i64, [C64; 4]>> {
            let mut out = BTreeMap::new();
            for (k, entries) in m {
                let idx: i64 = k
                    .parse()
                    .map_err(|_| Error::Config(format!("bad block index `{k}`")))?;
                if entries.len() != 4 {
                    return Err(Error::Config(format!(
                        "block {k}: expected 4 coefficients, got {}",
                        entries.len()
                    )));
                }
                let mut block = [C64::new(0.0, 0.0); 4];
                for (slot, [re, im]) in block.iter_mut().zip(entries) {
                    *slot = C64::new(re, im);
                }
                out.insert(idx, block);
            }
            Ok(out)
        };
        let table = CoefficientTable {
            m_base: self.params.m_base,
            n_len: self.params.n_len,
            c: conv(self.c)?,
            g: conv(self.g)?,
            notes: self.notes,
        };
        Ok((self.params, table))
    }
}

/// The verification report document.
#[derive(Debug, Clone, Serialize)]
pub struct ReportFile {
    pub residual_algebraic: f64,
    pub residual_fd: FdSection,
    pub continuity: ContinuitySection,
    pub boundary: f64,
    pub oracle_delta: Option<f64>,
    pub feasibility: FeasibilitySection,
    pub verdicts: BTreeMap<String, bool>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FdSection {
    pub max: f64,
    pub order: Option<f64>,
    pub monotone: bool,
    pub levels: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuitySection {
    pub value: f64,
    pub deriv: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilitySection {
    pub restricted: FeasibilityReport,
    pub unconstrained: FeasibilityReport,
    pub expected_free_constants: usize,
}

impl ReportFile {
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        algebraic: f64,
        fd: &ResidualReport,
        matching: &ResidualReport,
        oracle_delta: Option<f64>,
        restricted: FeasibilityReport,
        unconstrained: FeasibilityReport,
        expected_free: usize,
        tol: &Tolerances,
    ) -> ReportFile {
        let mut verdicts: BTreeMap<String, bool> = BTreeMap::new();
        verdicts.insert("algebraic".into(), algebraic <= tol.algebraic);
        for (k, v) in fd.verdicts.iter().chain(matching.verdicts.iter()) {
            verdicts.insert(k.clone(), *v);
        }
        if let Some(delta) = oracle_delta {
            verdicts.insert("oracle".into(), delta <= 1e-9);
        }
        verdicts.insert("feasibility".into(), !restricted.feasible);
        verdicts.insert(
            "free_constants".into(),
            unconstrained.nullspace_dimension == expected_free,
        );
        let mut notes = fd.notes.clone();
        for n in &matching.notes {
            if !notes.contains(n) {
                notes.push(n.clone());
            }
        }
        ReportFile {
            residual_algebraic: algebraic,
            residual_fd: FdSection {
                max: fd
                    .max_residual_left
                    .unwrap_or(0.0)
                    .max(fd.max_residual_right.unwrap_or(0.0)),
                order: fd.convergence_order,
                monotone: fd.fd_monotone.unwrap_or(false),
                levels: fd.fd_levels.clone(),
            },
            continuity: ContinuitySection {
                value: matching.continuity_value.unwrap_or(0.0),
                deriv: matching.continuity_deriv.unwrap_or(0.0),
            },
            boundary: matching.boundary_value.unwrap_or(0.0),
            oracle_delta,
            feasibility: FeasibilitySection {
                restricted,
                unconstrained,
                expected_free_constants: expected_free,
            },
            verdicts,
            notes,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.values().all(|v| *v)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Field samples over the run's (z, t) grid, row-major in z then t.
pub fn write_sample_csv<W: Write>(
    mut out: W,
    solution: &crate::field::FloquetSolution,
    grid: &GridConfig,
) -> Result<()> {
    let params = &solution.params;
    let t_max = grid
        .t_max
        .unwrap_or(4.0 * std::f64::consts::PI / params.omega);
    writeln!(out, "z,t,re_up,im_up,re_down,im_down,layer")?;
    for zi in 0..grid.z_count {
        let z = if zi + 1 == grid.z_count {
            params.b
        } else {
            grid.z_min + (params.b - grid.z_min) * zi as f64 / (grid.z_count - 1) as f64
        };
        for ti in 0..grid.t_count {
            let t = t_max * ti as f64 / grid.t_count as f64;
            let (v, layer) = if z <= 0.0 {
                (solution.eval_left(z, t)?, "L")
            } else {
                (solution.eval_right(z, t)?, "R")
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                z, t, v.up.re, v.up.im, v.down.re, v.down.im, layer
            )?;
        }
    }
    Ok(())
}
