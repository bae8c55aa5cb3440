//! Model parameters: physical inputs, their dimensionless form, and the
//! admissibility check that decides whether a requested configuration has
//! real wavenumbers on every required sideband.

use crate::dispersion::{self, Branch};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Raw physical constants. `j0` sets the energy unit; everything else is
/// divided by it during normalization.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub mass: f64,
    /// Static exchange splitting; the normalization unit.
    pub j0: f64,
    /// Rotating exchange amplitude.
    pub j1: f64,
    /// Drive angular frequency.
    pub omega: f64,
    /// Band offset between the layers.
    pub u0: f64,
    /// Transverse kinetic energy (k_x, k_y already folded in).
    pub eps_xy: f64,
    /// Dresselhaus coupling times k_x, as an energy.
    pub alpha_kx: f64,
    /// Rashba coupling times k_y, as an energy.
    pub beta_ky: f64,
    /// Right-layer thickness.
    pub b: f64,
    /// Quasi-energy parameter.
    pub quasi_energy: f64,
}

/// Dimensionless model constants plus the sideband configuration (base
/// index and solution length). All downstream work happens in these units.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DimensionlessParams {
    /// Drive frequency.
    pub omega: f64,
    /// Rotating exchange amplitude.
    #[serde(rename = "J1")]
    pub j1: f64,
    /// Transverse kinetic energy.
    pub eps_xy: f64,
    /// Quasi-energy.
    #[serde(rename = "Omega")]
    pub quasi_energy: f64,
    /// Band offset.
    #[serde(rename = "U0")]
    pub u0: f64,
    /// Dresselhaus term.
    pub alpha_kx: f64,
    /// Rashba term.
    pub beta_ky: f64,
    /// Right-layer thickness.
    pub b: f64,
    /// Base sideband index (may be negative).
    pub m_base: i64,
    /// Solution length; the number of right-layer sideband blocks.
    pub n_len: usize,
}

impl DimensionlessParams {
    /// Left-layer coefficient block indices: m, m+2, ..., m+2n.
    pub fn c_indices(&self) -> Vec<i64> {
        (0..=self.n_len as i64)
            .map(|j| self.m_base + 2 * j)
            .collect()
    }

    /// Right-layer coefficient block indices: m+1, m+3, ..., m+2n-1.
    pub fn g_indices(&self) -> Vec<i64> {
        (0..self.n_len as i64)
            .map(|j| self.m_base + 2 * j + 1)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega <= 0.0 || self.omega.is_nan() {
            return Err(Error::InvalidParameter {
                field: "omega",
                reason: format!("must be > 0, got {}", self.omega),
            });
        }
        if self.b <= 0.0 || self.b.is_nan() {
            return Err(Error::InvalidParameter {
                field: "b",
                reason: format!("must be > 0, got {}", self.b),
            });
        }
        if self.n_len < 1 {
            return Err(Error::InvalidParameter {
                field: "n_len",
                reason: "must be >= 1".into(),
            });
        }
        if self.j1 == 0.0 {
            return Err(Error::DegenerateCoupling(
                "J1 = 0 degenerates the left-layer eigenvector ratios",
            ));
        }
        if self.beta_ky == 0.0 {
            return Err(Error::DegenerateCoupling(
                "beta_ky = 0 degenerates the right-layer eigenvector ratios",
            ));
        }
        for f in [
            ("omega", self.omega),
            ("J1", self.j1),
            ("eps_xy", self.eps_xy),
            ("Omega", self.quasi_energy),
            ("U0", self.u0),
            ("alpha_kx", self.alpha_kx),
            ("beta_ky", self.beta_ky),
            ("b", self.b),
        ] {
            if !f.1.is_finite() {
                return Err(Error::InvalidParameter {
                    field: match f.0 {
                        "omega" => "omega",
                        "J1" => "J1",
                        "eps_xy" => "eps_xy",
                        "Omega" => "Omega",
                        "U0" => "U0",
                        "alpha_kx" => "alpha_kx",
                        "beta_ky" => "beta_ky",
                        _ => "b",
                    },
                    reason: "must be finite".into(),
                });
            }
        }
        Ok(())
    }
}

/// Divide every energy by `j0` and rescale the length; pure function.
pub fn normalize_params(
    p: &PhysicalParams,
    m_base: i64,
    n_len: usize,
) -> Result<DimensionlessParams> {
    for (field, v) in [("j0", p.j0), ("mass", p.mass), ("hbar", p.hbar), ("b", p.b)] {
        if v <= 0.0 || v.is_nan() {
            return Err(Error::InvalidParameter {
                field: match field {
                    "j0" => "j0",
                    "mass" => "mass",
                    "hbar" => "hbar",
                    _ => "b",
                },
                reason: format!("must be > 0, got {v}"),
            });
        }
    }
    Ok(DimensionlessParams {
        omega: p.hbar * p.omega / p.j0,
        j1: p.j1 / p.j0,
        eps_xy: p.eps_xy / p.j0,
        quasi_energy: p.hbar * p.quasi_energy / p.j0,
        u0: p.u0 / p.j0,
        alpha_kx: p.alpha_kx / p.j0,
        beta_ky: p.beta_ky / p.j0,
        b: p.b * (2.0 * p.mass * p.j0).sqrt() / p.hbar,
        m_base,
        n_len,
    })
}

/// One admissibility entry: squared wavenumber for a (sideband, branch)
/// pair, with flags for rejection and the marginal (exactly zero) case.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AdmissibilityEntry {
    pub index: i64,
    pub branch: Branch,
    pub squared: f64,
    pub real: bool,
    pub marginal: bool,
}

/// Outcome of checking every required sideband. Rejection is a report
/// outcome, not an error; marginal (zero) wavenumbers are accepted but
/// flagged since they make the matching matrices singular downstream.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub entries: Vec<AdmissibilityEntry>,
    pub accept: bool,
    pub marginal: bool,
    pub first_rejected: Option<(i64, Branch)>,
}

/// Evaluate all four squared-wavenumber formulas at every required
/// sideband index. Accept iff all are >= 0.
pub fn validate_config(params: &DimensionlessParams) -> Result<AdmissibilityReport> {
    params.validate()?;
    let mut entries = Vec::new();
    let mut first_rejected = None;
    let mut marginal = false;

    let mut push = |index: i64, branch: Branch, squared: f64| {
        let real = squared >= 0.0;
        let is_marginal = squared == 0.0;
        entries.push(AdmissibilityEntry {
            index,
            branch,
            squared,
            real,
            marginal: is_marginal,
        });
        (real, is_marginal)
    };

    let lo = params.m_base;
    let hi = params.m_base + 2 * params.n_len as i64;
    for k in lo..=hi {
        let branches: &[Branch] = if (k - lo) % 2 == 0 {
            &[Branch::Q, Branch::QTilde]
        } else {
            &[Branch::P, Branch::PTilde]
        };
        for &branch in branches {
            let squared = dispersion::squared_wavenumber(params, k, branch);
            let (real, is_marginal) = push(k, branch, squared);
            if !real && first_rejected.is_none() {
                first_rejected = Some((k, branch));
            }
            marginal |= is_marginal;
        }
    }

    Ok(AdmissibilityReport {
        accept: first_rejected.is_none(),
        marginal,
        first_rejected,
        entries,
    })
}
