//! D-scale upper bounds on μ.
//!
//! * [`osborne_balance`]: diagonal scalings for non-repeated blocks.
//! * [`method_of_centers`]: Hermitian `R ⊗ I` scalings for `I_v ⊗ Δ1`,
//!   minimizing the generalized eigenvalue with a log-det barrier.
//! * [`gen_osborne`]: a fast Frobenius-norm bound for `I_v ⊗ Δ1` using one
//!   off-diagonal entry of `S` at a time.

mod gen_osborne;
mod moc;
mod osborne;

pub use gen_osborne::{
    damped_newton_quartic, gen_osborne, offdiag_coeffs, GenOsborneOptions, QuarticCoeffs,
};
pub use moc::{
    barrier_gradient, barrier_value, line_search, method_of_centers, scaled_alpha, LineSearchParams,
    MocConfig,
};
pub use osborne::{osborne_balance, osborne_balance_rect, OsborneOptions};

use crate::error::Result;
use crate::linalg::{inverse, sigma_max, CMatrix, ComplexMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct UpperBoundResult {
    pub alpha: f64,
    /// Scaling `D` on the input side of `M`: the bound is `σ̄(D_out M D^{-1})`.
    pub scaling: ComplexMatrix,
    /// Output-side scaling when `M` is rectangular; `None` means `D_out = D`.
    pub output_scaling: Option<ComplexMatrix>,
    /// `R` with `D = (R ⊗ I)^{1/2}` (repeated-full-block solvers only).
    pub r_matrix: Option<ComplexMatrix>,
    /// Per-block diagonal scales `d_i` (Osborne only).
    pub block_scales: Vec<f64>,
    /// Solver-specific termination flag.
    pub converged: bool,
    /// Stopped because `α/β < p` (method of centers only).
    pub converged_by_ratio: bool,
    pub iterations_used: usize,
    pub alpha_history: Vec<f64>,
    /// `‖·‖_F²` after each sweep / update, for the Frobenius-based solvers.
    pub objective_history: Vec<f64>,
    pub notes: Vec<String>,
}

impl UpperBoundResult {
    /// `D_out M D^{-1}`.
    pub fn scaled_matrix(&self, m: &CMatrix) -> Result<CMatrix> {
        let d_out = self.output_scaling.as_ref().unwrap_or(&self.scaling);
        Ok(d_out.as_matrix() * m * inverse(&self.scaling)?)
    }

    /// `σ̄(D_out M D^{-1})` recomputed from the certificate.
    pub fn check_alpha(&self, m: &CMatrix) -> Result<f64> {
        Ok(sigma_max(&self.scaled_matrix(m)?))
    }
}
