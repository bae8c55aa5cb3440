//! Spinor field evaluation.
//!
//! A `FloquetSolution` bundles parameters, spectral constants, the mode
//! table, and a coefficient table; it evaluates the two-component field
//! and its z-derivative anywhere in either layer. The left layer occupies
//! z <= 0, the right layer 0 <= z <= b. Every time harmonic is a
//! half-integer multiple of the drive frequency riding on the global
//! quasi-energy phase.

use crate::assembler::{Assembler, CoefficientTable, SolveOptions};
use crate::dispersion::{EigenStructure, ModeTable};
use crate::error::{Error, Result};
use crate::params::DimensionlessParams;
use num_complex::Complex64 as C64;

/// Two-component field value at one (z, t) point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinorValue {
    pub up: C64,
    pub down: C64,
}

impl SpinorValue {
    pub const ZERO: SpinorValue = SpinorValue {
        up: C64::new(0.0, 0.0),
        down: C64::new(0.0, 0.0),
    };

    pub fn max_norm(&self) -> f64 {
        self.up.norm().max(self.down.norm())
    }

    pub fn sub(&self, other: &SpinorValue) -> SpinorValue {
        SpinorValue {
            up: self.up - other.up,
            down: self.down - other.down,
        }
    }
}

/// Which layer an evaluation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A complete, immutable solution: evaluable at arbitrary (z, t).
#[derive(Debug, Clone)]
pub struct FloquetSolution {
    pub params: DimensionlessParams,
    pub eig: EigenStructure,
    pub modes: ModeTable,
    pub coeffs: CoefficientTable,
}

impl FloquetSolution {
    /// Build the solution by running the coefficient construction.
    pub fn construct(
        params: DimensionlessParams,
        free: &[C64],
        opts: SolveOptions,
    ) -> Result<Self> {
        let asm = Assembler::new(params, opts)?;
        let coeffs = asm.construct(free)?;
        Ok(FloquetSolution {
            params,
            eig: asm.eig,
            modes: asm.modes,
            coeffs,
        })
    }

    /// Wrap an existing coefficient table (e.g. loaded from disk or built
    /// by the closed form).
    pub fn from_table(params: DimensionlessParams, coeffs: CoefficientTable) -> Result<Self> {
        let eig = crate::dispersion::spectral_constants(&params)?;
        let modes = ModeTable::build(&params)?;
        Ok(FloquetSolution {
            params,
            eig,
            modes,
            coeffs,
        })
    }

    pub fn scale(&self) -> f64 {
        self.coeffs.scale()
    }

    /// Left-layer field at z <= 0.
    pub fn eval_left(&self, z: f64, t: f64) -> Result<SpinorValue> {
        if z > 0.0 {
            return Err(Error::Domain(format!("eval_left requires z <= 0, got {z}")));
        }
        Ok(self.eval_left_unchecked(z, t, false))
    }

    /// Right-layer field at 0 <= z <= b.
    pub fn eval_right(&self, z: f64, t: f64) -> Result<SpinorValue> {
        if z < 0.0 || z > self.params.b {
            return Err(Error::Domain(format!(
                "eval_right requires 0 <= z <= {}, got {z}",
                self.params.b
            )));
        }
        Ok(self.eval_right_unchecked(z, t, false))
    }

    /// Analytic z-derivative on either side.
    pub fn eval_dz(&self, z: f64, t: f64, side: Side) -> Result<SpinorValue> {
        match side {
            Side::Left => {
                if z > 0.0 {
                    return Err(Error::Domain(format!(
                        "left derivative needs z <= 0, got {z}"
                    )));
                }
                Ok(self.eval_left_unchecked(z, t, true))
            }
            Side::Right => {
                if z < 0.0 || z > self.params.b {
                    return Err(Error::Domain(format!(
                        "right derivative needs 0 <= z <= {}, got {z}",
                        self.params.b
                    )));
                }
                Ok(self.eval_right_unchecked(z, t, true))
            }
        }
    }

    pub(crate) fn eval_left_unchecked(&self, z: f64, t: f64, derivative: bool) -> SpinorValue {
        let w = self.params.omega;
        let wq = C64::new(self.eig.weight_q(), 0.0);
        let wqt = C64::new(self.eig.weight_q_tilde(), 0.0);
        let global = C64::new(0.0, -self.params.quasi_energy * t).exp();
        let mut up = C64::new(0.0, 0.0);
        let mut down = C64::new(0.0, 0.0);
        for (&k, block) in &self.coeffs.c {
            let modes = &self.modes.left[&k];
            let (q, qt) = (modes.main, modes.tilde);
            let (fq, fqt) = if derivative {
                let iq = C64::new(0.0, q);
                let iqt = C64::new(0.0, qt);
                (
                    iq * (block[0] * C64::new(0.0, q * z).exp()
                        - block[1] * C64::new(0.0, -q * z).exp()),
                    iqt * (block[2] * C64::new(0.0, qt * z).exp()
                        - block[3] * C64::new(0.0, -qt * z).exp()),
                )
            } else {
                (
                    block[0] * C64::new(0.0, q * z).exp() + block[1] * C64::new(0.0, -q * z).exp(),
                    block[2] * C64::new(0.0, qt * z).exp()
                        + block[3] * C64::new(0.0, -qt * z).exp(),
                )
            };
            let ph_up = C64::new(0.0, (k - 1) as f64 * w * t / 2.0).exp();
            let ph_down = C64::new(0.0, (k + 1) as f64 * w * t / 2.0).exp();
            up += (wq * fq + wqt * fqt) * ph_up;
            down += (fq + fqt) * ph_down;
        }
        SpinorValue {
            up: up * global,
            down: down * global,
        }
    }

    pub(crate) fn eval_right_unchecked(&self, z: f64, t: f64, derivative: bool) -> SpinorValue {
        let w = self.params.omega;
        let wp = self.eig.weight_p();
        let wpt = self.eig.weight_p_tilde();
        let global = C64::new(0.0, -self.params.quasi_energy * t).exp();
        let mut up = C64::new(0.0, 0.0);
        let mut down = C64::new(0.0, 0.0);
        for (&k, block) in &self.coeffs.g {
            let modes = &self.modes.right[&k];
            let (p, pt) = (modes.main, modes.tilde);
            let (fp, fpt) = if derivative {
                let ip = C64::new(0.0, p);
                let ipt = C64::new(0.0, pt);
                (
                    ip * (block[0] * C64::new(0.0, p * z).exp()
                        - block[1] * C64::new(0.0, -p * z).exp()),
                    ipt * (block[2] * C64::new(0.0, pt * z).exp()
                        - block[3] * C64::new(0.0, -pt * z).exp()),
                )
            } else {
                (
                    block[0] * C64::new(0.0, p * z).exp() + block[1] * C64::new(0.0, -p * z).exp(),
                    block[2] * C64::new(0.0, pt * z).exp()
                        + block[3] * C64::new(0.0, -pt * z).exp(),
                )
            };
            let ph = C64::new(0.0, k as f64 * w * t / 2.0).exp();
            up += (wp * fp + wpt * fpt) * ph;
            down += (fp + fpt) * ph;
        }
        SpinorValue {
            up: up * global,
            down: down * global,
        }
    }

    /// Field at any point of the full window, choosing the layer by sign.
    pub fn eval(&self, z: f64, t: f64) -> Result<SpinorValue> {
        if z <= 0.0 {
            self.eval_left(z, t)
        } else {
            self.eval_right(z, t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};

    fn p0() -> DimensionlessParams {
        DimensionlessParams {
            omega: 1.0,
            j1: 0.5,
            eps_xy: 0.0,
            quasi_energy: 2.0,
            u0: 1.0,
            alpha_kx: 0.3,
            beta_ky: 0.4,
            b: 1.0,
            m_base: 0,
            n_len: 1,
        }
    }

    fn sol() -> FloquetSolution {
        FloquetSolution::construct(p0(), &[ONE, ZERO], SolveOptions::default()).unwrap()
    }

    #[test]
    fn interface_down_component_documented_value() {
        let s = sol();
        let v = s.eval_left(0.0, 0.0).unwrap();
        assert!((v.down - C64::new(2.0, 0.0)).norm() < 1e-10, "{}", v.down);
        let vr = s.eval_right(0.0, 0.0).unwrap();
        assert!((vr.down - C64::new(2.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn zero_table_evaluates_to_zero() {
        let s = FloquetSolution::construct(p0(), &[ZERO, ZERO], SolveOptions::default()).unwrap();
        let v = s.eval_left(-0.7, 1.3).unwrap();
        assert_eq!(v, SpinorValue::ZERO);
        let v = s.eval_right(0.4, -2.0).unwrap();
        assert_eq!(v, SpinorValue::ZERO);
    }

    #[test]
    fn domain_errors() {
        let s = sol();
        assert!(s.eval_left(0.1, 0.0).is_err());
        assert!(s.eval_right(-0.1, 0.0).is_err());
        assert!(s.eval_right(1.5, 0.0).is_err());
        assert!(s.eval_dz(0.2, 0.0, Side::Left).is_err());
    }

    #[test]
    fn hard_wall_vanishes() {
        let s = sol();
        for i in 0..16 {
            let t = 4.0 * std::f64::consts::PI * i as f64 / 16.0;
            let v = s.eval_right(s.params.b, t).unwrap();
            assert!(v.max_norm() < 1e-10 * s.scale(), "t={t}: {}", v.max_norm());
        }
    }

    #[test]
    fn interface_continuity_of_value_and_derivative() {
        let s = sol();
        for i in 0..32 {
            let t = 4.0 * std::f64::consts::PI * i as f64 / 32.0;
            let l = s.eval_left(0.0, t).unwrap();
            let r = s.eval_right(0.0, t).unwrap();
            assert!(l.sub(&r).max_norm() < 1e-10 * s.scale());
            let dl = s.eval_dz(0.0, t, Side::Left).unwrap();
            let dr = s.eval_dz(0.0, t, Side::Right).unwrap();
            assert!(dl.sub(&dr).max_norm() < 1e-10 * s.scale());
        }
    }

    #[test]
    fn quasi_periodicity() {
        let s = sol();
        let period = 4.0 * std::f64::consts::PI / s.params.omega;
        let phase = C64::new(0.0, -s.params.quasi_energy * period).exp();
        for &(z, t) in &[(-0.4, 0.3), (-1.2, 2.1), (0.0, 5.0)] {
            let a = s.eval_left(z, t).unwrap();
            let b = s.eval_left(z, t + period).unwrap();
            assert!((b.up - phase * a.up).norm() < 1e-12 * s.scale());
            assert!((b.down - phase * a.down).norm() < 1e-12 * s.scale());
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let s = sol();
        let (z, t) = (-0.3, 0.7);
        let exact = s.eval_dz(z, t, Side::Left).unwrap();
        let mut orders = Vec::new();
        let mut prev_err: Option<f64> = None;
        for &h in &[1e-2, 5e-3, 2.5e-3] {
            let plus = s.eval_left(z + h, t).unwrap();
            let minus = s.eval_left(z - h, t).unwrap();
            let fd = SpinorValue {
                up: (plus.up - minus.up) / (2.0 * h),
                down: (plus.down - minus.down) / (2.0 * h),
            };
            let err = fd.sub(&exact).max_norm();
            if let Some(p) = prev_err {
                orders.push((p / err).log2());
            }
            prev_err = Some(err);
        }
        for o in orders {
            assert!(o > 1.9 && o < 2.1, "order {o}");
        }
    }

    #[test]
    fn superposition_of_tables() {
        let a = FloquetSolution::construct(p0(), &[ONE, ZERO], SolveOptions::default()).unwrap();
        let b = FloquetSolution::construct(p0(), &[ZERO, ONE], SolveOptions::default()).unwrap();
        let ab = FloquetSolution::construct(p0(), &[ONE, ONE], SolveOptions::default()).unwrap();
        let (z, t) = (-0.6, 1.9);
        let va = a.eval_left(z, t).unwrap();
        let vb = b.eval_left(z, t).unwrap();
        let vab = ab.eval_left(z, t).unwrap();
        assert!((vab.up - va.up - vb.up).norm() < 1e-12 * ab.scale());
        assert!((vab.down - va.down - vb.down).norm() < 1e-12 * ab.scale());
    }
}
