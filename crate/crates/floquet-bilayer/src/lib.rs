//! Exact finite-length Floquet solutions of a periodically driven
//! two-layer spinor system: a magnetic layer with rotating exchange
//! coupling (z <= 0) joined to a spin-orbit layer (0 <= z <= b) with a
//! hard wall at z = b.
//!
//! The crate constructs every expansion coefficient of the
//! finite-harmonic solution by chaining small interface-matching linear
//! systems, evaluates the resulting two-component fields anywhere in
//! (z, t), and verifies the construction with independent oracles:
//! per-mode algebraic residuals, a finite-difference residual with
//! convergence-order fitting, interface/boundary matching reports, a
//! closed-form route for the minimal solution, and rank analysis of the
//! assembled constraint system (free-constant count, infeasibility of a
//! single-incident-wave boundary condition).

pub mod assembler;
pub mod cli;
pub mod config;
pub mod dispersion;
pub mod error;
pub mod field;
pub mod linalg;
pub mod params;
pub mod verify;

pub use assembler::{Assembler, CoefficientTable, InterfaceEq, SolveOptions};
pub use dispersion::{Branch, EigenStructure, ModeTable};
pub use error::{Error, Result};
pub use field::{FloquetSolution, Side, SpinorValue};
pub use params::{
    normalize_params, validate_config, AdmissibilityReport, DimensionlessParams, PhysicalParams,
};
pub use verify::{
    free_constant_report, incident_wave_feasibility, matching_report, oracle_compare,
    residual_algebraic, residual_fd, FdGrid, FeasibilityReport, ResidualReport, Tolerances,
};
