use num_complex::Complex64;

use super::osborne::{osborne_balance_rect, OsborneOptions};
use super::UpperBoundResult;
use crate::error::{Result, SsvError};
use crate::linalg::{
    block_trace, cholesky, hermitian_eigen, hermitian_max_eigenvalue, hermitian_part,
    hermitian_sqrt_pair, kron_identity, CMatrix, ComplexMatrix, ZERO,
};
use crate::structure::RepeatedShape;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchParams {
    pub delta0: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            delta0: 1.0,
            shrink: 0.5,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MocConfig {
    /// Stop once `α/β < p`.
    pub p: f64,
    /// Outer-iteration cap.
    pub k_m: usize,
    /// Blend of the new `α` into `λ`.
    pub theta: f64,
    /// Conditioning bound: `γ⁻¹ I < R < γ I`.
    pub gamma: f64,
    /// Initial offset `λ = α + ε`.
    pub epsilon: f64,
    pub inner_steps: usize,
    pub line_search: LineSearchParams,
}

impl Default for MocConfig {
    fn default() -> Self {
        Self {
            p: 1.05,
            k_m: 500,
            theta: 1e-3,
            gamma: 1e6,
            epsilon: 2e-4,
            inner_steps: 2,
            line_search: LineSearchParams::default(),
        }
    }
}

impl MocConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(SsvError::Config(what.to_string()));
        if !(self.p > 1.0) {
            return bad("p must exceed 1");
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad("theta must lie in (0, 1)");
        }
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return bad("gamma must exceed 1");
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad("epsilon must be positive");
        }
        if self.inner_steps == 0 {
            return bad("inner_steps must be at least 1");
        }
        let ls = &self.line_search;
        if !(ls.delta0 > 0.0) || !(ls.shrink > 0.0 && ls.shrink < 1.0) {
            return bad("line search needs delta0 > 0 and shrink in (0, 1)");
        }
        Ok(())
    }
}

/// The three barrier constraints at `(R, λ)`.
struct Constraints {
    l1: CMatrix,
    l2: CMatrix,
    l3: CMatrix,
}

fn constraints(m: &CMatrix, shape: &RepeatedShape, r: &CMatrix, lambda: f64, gamma: f64) -> Result<Constraints> {
    let (v, m1, n1) = (shape.v, shape.m1, shape.n1);
    if r.shape() != (v, v) {
        return Err(SsvError::Dimension(format!("R must be {v}x{v}")));
    }
    let r_in = kron_identity(r, m1)?;
    let r_out = kron_identity(r, n1)?;
    let l1 = r_in * Complex64::new(lambda * lambda, 0.0) - m.adjoint() * r_out * m;
    let eye = CMatrix::identity(v, v);
    let l2 = &eye * Complex64::new(gamma, 0.0) - r;
    let l3 = r - eye * Complex64::new(1.0 / gamma, 0.0);
    Ok(Constraints { l1, l2, l3 })
}

fn log_det_pd(h: &CMatrix, name: &'static str) -> Result<f64> {
    let chol = cholesky(h).ok_or(SsvError::Infeasible { constraint: name })?;
    let l = chol.l_dirty();
    Ok((0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}

fn inverse_pd(h: &CMatrix, name: &'static str) -> Result<CMatrix> {
    let chol = cholesky(h).ok_or(SsvError::Infeasible { constraint: name })?;
    Ok(hermitian_part(&chol.inverse()))
}

/// `J(R) = −log det L1 − log det L2 − log det L3`.
pub fn barrier_value(m: &CMatrix, shape: &RepeatedShape, r: &CMatrix, lambda: f64, gamma: f64) -> Result<f64> {
    let c = constraints(m, shape, r, lambda, gamma)?;
    Ok(-(log_det_pd(&c.l2, "L2")? + log_det_pd(&c.l3, "L3")? + log_det_pd(&c.l1, "L1")?))
}

/// Gradient of [`barrier_value`] with respect to Hermitian `R`:
/// `Φ = Γ(M L1⁻¹ M^H) − λ²Γ(L1⁻¹) + L2⁻¹ − L3⁻¹`, so that
/// `dJ = tr(Φ dR)`.
pub fn barrier_gradient(
    m: &CMatrix,
    shape: &RepeatedShape,
    r: &CMatrix,
    lambda: f64,
    gamma: f64,
) -> Result<CMatrix> {
    let c = constraints(m, shape, r, lambda, gamma)?;
    let l2i = inverse_pd(&c.l2, "L2")?;
    let l3i = inverse_pd(&c.l3, "L3")?;
    let l1i = inverse_pd(&c.l1, "L1")?;
    let outer = m * &l1i * m.adjoint();
    let phi = block_trace(&outer, shape.v, shape.n1)?
        - block_trace(&l1i, shape.v, shape.m1)? * Complex64::new(lambda * lambda, 0.0)
        + l2i
        - l3i;
    Ok(hermitian_part(&phi))
}

/// Largest `δ = δ₀·shrink^k` keeping `R − δΦ` feasible with a strictly
/// smaller barrier; 0 when none qualifies.
pub fn line_search(
    m: &CMatrix,
    shape: &RepeatedShape,
    r: &CMatrix,
    phi: &CMatrix,
    lambda: f64,
    gamma: f64,
    params: &LineSearchParams,
) -> f64 {
    if phi.iter().all(|z| *z == ZERO) {
        return 0.0;
    }
    let Ok(j0) = barrier_value(m, shape, r, lambda, gamma) else {
        return 0.0;
    };
    let mut delta = params.delta0;
    for _ in 0..=params.max_backtracks {
        let trial = hermitian_part(&(r - phi * Complex64::new(delta, 0.0)));
        if let Ok(j) = barrier_value(m, shape, &trial, lambda, gamma) {
            if j < j0 {
                return delta;
            }
        }
        delta *= params.shrink;
    }
    0.0
}

/// `σ̄((R^{1/2}⊗I) M (R^{-1/2}⊗I))` as `sqrt(λ_max(D^{-H} M^H (R⊗I) M D^{-1}))`,
/// with the square roots taken on the small `R`.
pub fn scaled_alpha(m: &CMatrix, shape: &RepeatedShape, r: &CMatrix) -> Result<f64> {
    let (_, r_isqrt) = hermitian_sqrt_pair(r)?;
    let d_inv = kron_identity(&r_isqrt, shape.m1)?;
    let r_out = kron_identity(r, shape.n1)?;
    let h = d_inv.adjoint() * m.adjoint() * r_out * m * d_inv;
    Ok(hermitian_max_eigenvalue(&h)?.max(0.0).sqrt())
}

/// Initial `R = diag(d★²)` from diagonal balancing, pulled strictly inside
/// the box `γ⁻¹ < r_i < γ`.
fn osborne_init(m: &CMatrix, shape: &RepeatedShape, gamma: f64) -> Result<CMatrix> {
    let v = shape.v;
    let nr = osborne_balance_rect(m, &vec![shape.n1; v], &vec![shape.m1; v], &OsborneOptions::default())?;
    let (lo, hi) = (1.0 / gamma * 1.01, gamma / 1.01);
    Ok(CMatrix::from_fn(v, v, |i, j| {
        if i == j {
            Complex64::new((nr.block_scales[i] * nr.block_scales[i]).clamp(lo, hi), 0.0)
        } else {
            ZERO
        }
    }))
}

fn check_box(r: &CMatrix, gamma: f64) -> Result<()> {
    let (vals, _) = hermitian_eigen(r)?;
    if vals.iter().any(|&x| !(x < gamma)) {
        return Err(SsvError::Infeasible { constraint: "L2" });
    }
    if vals.iter().any(|&x| !(x > 1.0 / gamma)) {
        return Err(SsvError::Infeasible { constraint: "L3" });
    }
    Ok(())
}

/// Method-of-centers upper bound for `I_v ⊗ Δ1`: follows the analytic center
/// of `{R : M^H(R⊗I)M < λ²(R⊗I), γ⁻¹I < R < γI}` while shrinking `λ`.
///
/// `beta` is the current lower bound used by the `α/β < p` stopping rule
/// (`beta = 0` disables it). The smallest `α` seen is returned together with
/// its `R`.
pub fn method_of_centers(
    m: &CMatrix,
    shape: &RepeatedShape,
    beta: f64,
    cfg: &MocConfig,
    r_init: Option<&CMatrix>,
) -> Result<UpperBoundResult> {
    cfg.validate()?;
    shape.check(m)?;
    if !(beta >= 0.0) {
        return Err(SsvError::Config(format!("beta must be nonnegative, got {beta}")));
    }
    let mut r = match r_init {
        Some(r0) => {
            if r0.shape() != (shape.v, shape.v) {
                return Err(SsvError::Dimension(format!("R must be {0}x{0}", shape.v)));
            }
            let r0 = hermitian_part(r0);
            check_box(&r0, cfg.gamma)?;
            r0
        }
        None => osborne_init(m, shape, cfg.gamma)?,
    };

    let ratio_met = |a: f64| beta > 0.0 && a / beta < cfg.p;
    let mut alpha = scaled_alpha(m, shape, &r)?;
    let mut lambda = alpha + cfg.epsilon;
    let mut best = (alpha, r.clone());
    let mut history = vec![alpha];
    let mut notes = Vec::new();
    let mut k = 0;

    while !ratio_met(best.0) && k < cfg.k_m {
        k += 1;
        lambda = (1.0 - cfg.theta) * alpha + cfg.theta * lambda;
        let mut stalled = false;
        for _ in 0..cfg.inner_steps {
            let phi = match barrier_gradient(m, shape, &r, lambda, cfg.gamma) {
                Ok(phi) => phi,
                Err(e) => {
                    notes.push(format!("iteration {k}: stalled ({e})"));
                    stalled = true;
                    break;
                }
            };
            let delta = line_search(m, shape, &r, &phi, lambda, cfg.gamma, &cfg.line_search);
            if delta == 0.0 {
                break;
            }
            r = hermitian_part(&(&r - phi * Complex64::new(delta, 0.0)));
        }
        if stalled {
            break;
        }
        alpha = scaled_alpha(m, shape, &r)?;
        history.push(alpha);
        if alpha < best.0 {
            best = (alpha, r.clone());
        }
    }

    let (alpha, r) = best;
    let (r_sqrt, _) = hermitian_sqrt_pair(&r)?;
    let output_scaling = if shape.is_square() {
        None
    } else {
        Some(ComplexMatrix::wrap(kron_identity(&r_sqrt, shape.n1)?))
    };
    let converged_by_ratio = ratio_met(alpha);
    Ok(UpperBoundResult {
        alpha,
        scaling: ComplexMatrix::wrap(kron_identity(&r_sqrt, shape.m1)?),
        output_scaling,
        r_matrix: Some(ComplexMatrix::wrap(r)),
        block_scales: Vec::new(),
        converged: converged_by_ratio,
        converged_by_ratio,
        iterations_used: k,
        alpha_history: history,
        objective_history: Vec::new(),
        notes,
    })
}
