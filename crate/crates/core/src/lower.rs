//! Power-iteration lower bounds on μ with explicit destabilizing perturbations.
//!
//! Both iterations alternate the four alignment updates
//!
//! ```text
//! β a = M b,   z = align_z(a, w),   β w = M^H z,   b = align_b(a, w)
//! ```
//!
//! and differ only in the per-structure alignment maps. Every cycle yields a
//! unit-norm structured direction `Δ̂`; the certified bound for that direction
//! is `ρ(M Δ̂)`, realized by `Δ = Δ̂ / λ` with `λ` the dominant eigenvalue of
//! `M Δ̂`, so that `I − MΔ` is exactly singular.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, SsvError};
use crate::linalg::{
    default_rank_tol, dominant_eigenvalue, dominant_right_singular_vector, inverse, q_factor,
    residual_of, sigma_max, stack, unstack, CMatrix, CVector, ONE,
};
use crate::structure::{Block, BlockStructure, Perturbation, RepeatedShape};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerConfig {
    /// Cycle cap `k_m`.
    pub max_iters: usize,
    /// Early stop when `max(‖Δb‖, ‖Δw‖)` drops below this.
    pub step_tol: f64,
    /// Residual threshold for the alignment certificate; `None` means
    /// `1e-6 · σ̄(M)`.
    pub residual_tol: Option<f64>,
    /// SVD truncation for the alignment factor; `None` means `dim · ε`.
    pub rank_tol: Option<f64>,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            max_iters: 60,
            step_tol: 1e-9,
            residual_tol: None,
            rank_tol: None,
        }
    }
}

impl PowerConfig {
    pub fn residual_tol_for(&self, m: &CMatrix) -> f64 {
        self.residual_tol.unwrap_or_else(|| 1e-6 * sigma_max(m))
    }
}

/// Iterate of the alignment equations after a full cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerIterState {
    pub a: CVector,
    pub z: CVector,
    pub b: CVector,
    pub w: CVector,
    pub beta: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateSource {
    /// Direction taken from the alignment after this cycle.
    Cycle(usize),
    /// `I_v ⊗ Q(L(a) L(w)^H)`, used through its adjoint.
    AlignmentA,
    /// `I_v ⊗ Q(L(w) L(a)^H)`.
    AlignmentB,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateCandidate {
    pub source: CertificateSource,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundResult {
    pub beta: f64,
    /// `None` only when `beta == 0`.
    pub perturbation: Option<Perturbation>,
    /// `σ_min(I − MΔ)` for the returned perturbation (1 when absent).
    pub residual: f64,
    /// The final iterate satisfies the alignment equations to within
    /// the residual tolerance.
    pub converged: bool,
    pub iterations_used: usize,
    pub beta_history: Vec<f64>,
    pub candidates: Vec<CertificateCandidate>,
}

impl LowerBoundResult {
    fn zero(iterations_used: usize, beta_history: Vec<f64>) -> Self {
        Self {
            beta: 0.0,
            perturbation: None,
            residual: 1.0,
            converged: false,
            iterations_used,
            beta_history,
            candidates: Vec::new(),
        }
    }
}

/// Per-structure alignment maps.
trait Alignment {
    fn z_update(&self, a: &CVector, w: &CVector) -> Result<CVector>;
    fn b_update(&self, a: &CVector, w: &CVector) -> Result<CVector>;
    /// Unit-norm structured `Δ̂` with `b = Δ̂ a` at alignment; `None` if every
    /// block degenerates to zero.
    fn direction(&self, a: &CVector, w: &CVector) -> Result<Option<Perturbation>>;
}

fn phase(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 || !r.is_finite() {
        ONE
    } else {
        z / r
    }
}

fn cdot(x: &CVector, y: &CVector) -> Complex64 {
    // x^H y
    x.dotc(y)
}

struct StandardAlignment {
    structure: BlockStructure,
    ranges: Vec<(usize, usize)>,
}

impl StandardAlignment {
    fn new(structure: &BlockStructure) -> Result<Self> {
        let mut ranges = Vec::new();
        let mut off = 0;
        for b in structure.blocks() {
            match *b {
                Block::RepeatedScalar { v } => {
                    ranges.push((off, v));
                    off += v;
                }
                Block::FullBlock { dim } => {
                    ranges.push((off, dim));
                    off += dim;
                }
                Block::RepeatedFullBlock { .. } => {
                    return Err(SsvError::Incompatible(
                        "standard power iteration needs repeated-scalar / full blocks".into(),
                    ))
                }
            }
        }
        Ok(Self {
            structure: structure.clone(),
            ranges,
        })
    }

    fn segment(x: &CVector, (s, l): (usize, usize)) -> CVector {
        x.rows(s, l).into_owned()
    }
}

impl Alignment for StandardAlignment {
    fn z_update(&self, a: &CVector, w: &CVector) -> Result<CVector> {
        let mut z = CVector::zeros(a.len());
        for (block, &r) in self.structure.blocks().iter().zip(&self.ranges) {
            let (ai, wi) = (Self::segment(a, r), Self::segment(w, r));
            let zi = match block {
                Block::RepeatedScalar { .. } => &wi * phase(cdot(&wi, &ai)),
                _ => {
                    let na = ai.norm();
                    if na == 0.0 {
                        wi
                    } else {
                        &ai * Complex64::new(wi.norm() / na, 0.0)
                    }
                }
            };
            z.rows_mut(r.0, r.1).copy_from(&zi);
        }
        Ok(z)
    }

    fn b_update(&self, a: &CVector, w: &CVector) -> Result<CVector> {
        let mut b = CVector::zeros(a.len());
        for (block, &r) in self.structure.blocks().iter().zip(&self.ranges) {
            let (ai, wi) = (Self::segment(a, r), Self::segment(w, r));
            let bi = match block {
                Block::RepeatedScalar { .. } => &ai * phase(cdot(&ai, &wi)),
                _ => {
                    let nw = wi.norm();
                    if nw == 0.0 {
                        ai
                    } else {
                        &wi * Complex64::new(ai.norm() / nw, 0.0)
                    }
                }
            };
            b.rows_mut(r.0, r.1).copy_from(&bi);
        }
        Ok(b)
    }

    fn direction(&self, a: &CVector, w: &CVector) -> Result<Option<Perturbation>> {
        let mut values = Vec::with_capacity(self.ranges.len());
        let mut any = false;
        for (block, &r) in self.structure.blocks().iter().zip(&self.ranges) {
            let (ai, wi) = (Self::segment(a, r), Self::segment(w, r));
            let value = match block {
                Block::RepeatedScalar { .. } => {
                    any = true;
                    CMatrix::from_element(1, 1, phase(cdot(&ai, &wi)))
                }
                _ => {
                    let (na, nw) = (ai.norm(), wi.norm());
                    if na == 0.0 || nw == 0.0 {
                        CMatrix::zeros(r.1, r.1)
                    } else {
                        any = true;
                        (&wi * ai.adjoint()) / Complex64::new(na * nw, 0.0)
                    }
                }
            };
            values.push(value);
        }
        if !any {
            return Ok(None);
        }
        Perturbation::assemble(&self.structure, values).map(Some)
    }
}

struct RepeatedAlignment {
    structure: BlockStructure,
    shape: RepeatedShape,
    rank_tol: Option<f64>,
}

impl RepeatedAlignment {
    fn new(shape: RepeatedShape, rank_tol: Option<f64>) -> Result<Self> {
        let structure = BlockStructure::single(Block::RepeatedFullBlock {
            v: shape.v,
            m1: shape.m1,
            n1: (!shape.is_square()).then_some(shape.n1),
        })?;
        Ok(Self {
            structure,
            shape,
            rank_tol,
        })
    }

    fn q(&self, g: &CMatrix) -> Result<CMatrix> {
        q_factor(g, self.rank_tol.unwrap_or_else(|| default_rank_tol(g)))
    }

    /// `(L_{n1}(a), L_{m1}(w))`.
    fn stacks(&self, a: &CVector, w: &CVector) -> Result<(CMatrix, CMatrix)> {
        Ok((stack(a, self.shape.n1)?, stack(w, self.shape.m1)?))
    }

    /// `Q(L(w) L(a)^H)`, an `m1 × n1` block.
    fn b_factor(&self, a: &CVector, w: &CVector) -> Result<CMatrix> {
        let (la, lw) = self.stacks(a, w)?;
        self.q(&(&lw * la.adjoint()))
    }

    /// `Q(L(a) L(w)^H)`, an `n1 × m1` block.
    fn z_factor(&self, a: &CVector, w: &CVector) -> Result<CMatrix> {
        let (la, lw) = self.stacks(a, w)?;
        self.q(&(&la * lw.adjoint()))
    }
}

impl Alignment for RepeatedAlignment {
    fn z_update(&self, a: &CVector, w: &CVector) -> Result<CVector> {
        let q = self.z_factor(a, w)?;
        Ok(unstack(&(q * stack(w, self.shape.m1)?)))
    }

    fn b_update(&self, a: &CVector, w: &CVector) -> Result<CVector> {
        let q = self.b_factor(a, w)?;
        Ok(unstack(&(q * stack(a, self.shape.n1)?)))
    }

    fn direction(&self, a: &CVector, w: &CVector) -> Result<Option<Perturbation>> {
        match self.b_factor(a, w) {
            Ok(q) => Perturbation::assemble(&self.structure, vec![q]).map(Some),
            Err(SsvError::ZeroAlignment) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

enum StepOutcome {
    Ok,
    /// `Mb = 0` or `M^H z = 0`.
    ZeroResponse,
    /// Alignment product vanished.
    ZeroAlignment,
}

struct Iteration<'a, A: Alignment> {
    m: &'a CMatrix,
    mh: CMatrix,
    rule: A,
    state: PowerIterState,
}

impl<'a, A: Alignment> Iteration<'a, A> {
    fn new(m: &'a CMatrix, rule: A, b0: &CVector, w0: &CVector) -> Result<Self> {
        if b0.len() != m.ncols() || w0.len() != m.ncols() {
            return Err(SsvError::Dimension(format!(
                "initial vectors must have length {}",
                m.ncols()
            )));
        }
        let unit = |x: &CVector| -> Result<CVector> {
            let n = x.norm();
            if n == 0.0 || !n.is_finite() {
                return Err(SsvError::Config("initial vectors must be nonzero".into()));
            }
            Ok(x / Complex64::new(n, 0.0))
        };
        Ok(Self {
            m,
            mh: m.adjoint(),
            rule,
            state: PowerIterState {
                a: CVector::zeros(m.nrows()),
                z: CVector::zeros(m.nrows()),
                b: unit(b0)?,
                w: unit(w0)?,
                beta: 0.0,
                iteration: 0,
            },
        })
    }

    fn step(&mut self) -> Result<StepOutcome> {
        let mb = self.m * &self.state.b;
        let beta_a = mb.norm();
        if beta_a == 0.0 {
            return Ok(StepOutcome::ZeroResponse);
        }
        let a = mb / Complex64::new(beta_a, 0.0);
        let z = match self.rule.z_update(&a, &self.state.w) {
            Ok(z) => z,
            Err(SsvError::ZeroAlignment) => return Ok(StepOutcome::ZeroAlignment),
            Err(e) => return Err(e),
        };
        let mz = &self.mh * &z;
        let beta_w = mz.norm();
        if beta_w == 0.0 {
            return Ok(StepOutcome::ZeroResponse);
        }
        let w = mz / Complex64::new(beta_w, 0.0);
        let b = match self.rule.b_update(&a, &w) {
            Ok(b) => b,
            Err(SsvError::ZeroAlignment) => return Ok(StepOutcome::ZeroAlignment),
            Err(e) => return Err(e),
        };
        let nb = b.norm();
        if nb == 0.0 {
            return Ok(StepOutcome::ZeroAlignment);
        }
        self.state = PowerIterState {
            a,
            z,
            b: b / Complex64::new(nb, 0.0),
            w,
            beta: beta_w,
            iteration: self.state.iteration + 1,
        };
        Ok(StepOutcome::Ok)
    }
}

/// Best certified bound along a unit structured direction: `(β, Δ)` with
/// `σ̄(Δ)·β = 1` and `I − MΔ` singular.
fn certify(m: &CMatrix, direction: &Perturbation) -> Result<Option<(f64, Perturbation)>> {
    if direction.norm == 0.0 {
        return Ok(None);
    }
    let lambda = dominant_eigenvalue(&(m * direction.assembled.as_matrix()))?;
    let rho = lambda.norm();
    if rho == 0.0 || !rho.is_finite() {
        return Ok(None);
    }
    let delta = direction.scaled(ONE / lambda);
    let beta = 1.0 / delta.norm;
    Ok(Some((beta, delta)))
}

fn run<A: Alignment>(
    m: &CMatrix,
    rule: A,
    b0: &CVector,
    w0: &CVector,
    cfg: &PowerConfig,
    fallback: Option<&dyn Fn(&CVector, &CVector) -> Result<Vec<(CertificateSource, Perturbation)>>>,
) -> Result<LowerBoundResult> {
    let tol = cfg.residual_tol_for(m);
    let mut it = Iteration::new(m, rule, b0, w0)?;
    let mut history = Vec::new();
    let mut candidates = Vec::new();
    let mut best: Option<(f64, Perturbation)> = None;
    let mut last_direct = f64::INFINITY;
    let mut consider = |source, beta: f64, delta: Perturbation, best: &mut Option<(f64, Perturbation)>| {
        candidates.push(CertificateCandidate { source, beta });
        if best.as_ref().is_none_or(|(b, _)| beta > *b) {
            *best = Some((beta, delta));
        }
    };

    let mut cycles = 0;
    let mut degenerate = false;
    while cycles < cfg.max_iters {
        let (prev_b, prev_w) = (it.state.b.clone(), it.state.w.clone());
        match it.step()? {
            StepOutcome::Ok => {}
            StepOutcome::ZeroResponse | StepOutcome::ZeroAlignment => {
                degenerate = true;
                break;
            }
        }
        cycles += 1;
        let st = &it.state;
        history.push(st.beta);
        if let Some(dir) = it.rule.direction(&st.a, &st.w)? {
            let direct = dir.scaled(Complex64::new(1.0 / st.beta, 0.0));
            last_direct = residual_of(m, &direct.assembled)?;
            if let Some((beta, delta)) = certify(m, &dir)? {
                consider(CertificateSource::Cycle(cycles), beta, delta, &mut best);
            }
        } else {
            last_direct = f64::INFINITY;
        }
        let change = (&st.b - prev_b).norm().max((&st.w - prev_w).norm());
        if change < cfg.step_tol {
            break;
        }
    }

    if let Some(fb) = fallback {
        if cycles > 0 || degenerate {
            let st = &it.state;
            if st.a.norm() > 0.0 && st.w.norm() > 0.0 {
                for (source, dir) in fb(&st.a, &st.w)? {
                    if let Some((beta, delta)) = certify(m, &dir)? {
                        consider(source, beta, delta, &mut best);
                    }
                }
            }
        }
    }

    let Some((beta, delta)) = best else {
        let mut r = LowerBoundResult::zero(cycles, history);
        r.candidates = candidates;
        return Ok(r);
    };
    let residual = residual_of(m, &delta.assembled)?;
    Ok(LowerBoundResult {
        beta,
        perturbation: Some(delta),
        residual,
        converged: !degenerate && last_direct <= tol,
        iterations_used: cycles,
        beta_history: history,
        candidates,
    })
}

fn check_square(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(SsvError::Dimension(format!(
            "M must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Initial `(b0, w0)`: the dominant right singular vector of `D M D^{-1}`
/// (or of `M` when no scaling is given).
pub fn init_vectors(m: &CMatrix, d_star: Option<&CMatrix>) -> Result<(CVector, CVector)> {
    let v = match d_star {
        Some(d) => {
            check_square(m)?;
            if d.shape() != m.shape() {
                return Err(SsvError::Dimension("scaling does not conform to M".into()));
            }
            dominant_right_singular_vector(&(d * m * inverse(d)?))?
        }
        None => dominant_right_singular_vector(m)?,
    };
    Ok((v.clone(), v))
}

/// Seeded random unit vector, for callers that opt out of the SVD start.
pub fn random_unit_vector(len: usize, seed: u64) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = CVector::from_fn(len, |_, _| {
        Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

/// Power iteration for structures made of repeated scalars and full blocks.
pub fn power_iteration_standard(
    m: &CMatrix,
    structure: &BlockStructure,
    b0: &CVector,
    w0: &CVector,
    cfg: &PowerConfig,
) -> Result<LowerBoundResult> {
    check_square(m)?;
    structure.check_matrix(m)?;
    let rule = StandardAlignment::new(structure)?;
    run(m, rule, b0, w0, cfg, None)
}

/// Generalized power iteration for `I_v ⊗ Δ1`.
pub fn power_iteration_repeated_full(
    m: &CMatrix,
    shape: RepeatedShape,
    b0: &CVector,
    w0: &CVector,
    cfg: &PowerConfig,
) -> Result<LowerBoundResult> {
    shape.check(m)?;
    let rule = RepeatedAlignment::new(shape, cfg.rank_tol)?;
    let rank_tol = cfg.rank_tol;
    let fb = move |a: &CVector, w: &CVector| alignment_directions(a, w, shape, rank_tol);
    run(m, rule, b0, w0, cfg, Some(&fb))
}

/// The two alignment perturbations built from final iterates:
/// `(I_v ⊗ Q(L(a)L(w)^H))^H` and `I_v ⊗ Q(L(w)L(a)^H)`.
fn alignment_directions(
    a: &CVector,
    w: &CVector,
    shape: RepeatedShape,
    rank_tol: Option<f64>,
) -> Result<Vec<(CertificateSource, Perturbation)>> {
    let rule = RepeatedAlignment::new(shape, rank_tol)?;
    let mut out = Vec::new();
    match rule.z_factor(a, w) {
        Ok(qa) => out.push((
            CertificateSource::AlignmentA,
            Perturbation::assemble(&rule.structure, vec![qa.adjoint()])?,
        )),
        Err(SsvError::ZeroAlignment) => {}
        Err(e) => return Err(e),
    }
    match rule.b_factor(a, w) {
        Ok(qb) => out.push((
            CertificateSource::AlignmentB,
            Perturbation::assemble(&rule.structure, vec![qb])?,
        )),
        Err(SsvError::ZeroAlignment) => {}
        Err(e) => return Err(e),
    }
    Ok(out)
}

/// Certified bound from non-converged iterates:
/// `β = max(ρ(Δ_a^H M), ρ(Δ_b M))` with the achieving perturbation scaled to
/// `σ̄ = 1/β`. Returns `(0, None)` when both spectral radii vanish.
pub fn fallback_lower_bound(
    a: &CVector,
    w: &CVector,
    m: &CMatrix,
    shape: RepeatedShape,
) -> Result<(f64, Option<Perturbation>)> {
    shape.check(m)?;
    if a.len() != m.nrows() || w.len() != m.ncols() {
        return Err(SsvError::Dimension("iterate lengths do not conform to M".into()));
    }
    let mut best: Option<(f64, Perturbation)> = None;
    for (_, dir) in alignment_directions(a, w, shape, None)? {
        if let Some((beta, delta)) = certify(m, &dir)? {
            if best.as_ref().is_none_or(|(b, _)| beta > *b) {
                best = Some((beta, delta));
            }
        }
    }
    Ok(match best {
        Some((b, d)) => (b, Some(d)),
        None => (0.0, None),
    })
}

/// Runs `cycles` standard iterations and returns every iterate (for analysis
/// and equivalence checks).
pub fn standard_trajectory(
    m: &CMatrix,
    structure: &BlockStructure,
    b0: &CVector,
    w0: &CVector,
    cycles: usize,
) -> Result<Vec<PowerIterState>> {
    check_square(m)?;
    structure.check_matrix(m)?;
    trajectory(Iteration::new(m, StandardAlignment::new(structure)?, b0, w0)?, cycles)
}

pub fn repeated_full_trajectory(
    m: &CMatrix,
    shape: RepeatedShape,
    b0: &CVector,
    w0: &CVector,
    cycles: usize,
) -> Result<Vec<PowerIterState>> {
    shape.check(m)?;
    trajectory(Iteration::new(m, RepeatedAlignment::new(shape, None)?, b0, w0)?, cycles)
}

fn trajectory<A: Alignment>(mut it: Iteration<'_, A>, cycles: usize) -> Result<Vec<PowerIterState>> {
    let mut out = Vec::with_capacity(cycles);
    for _ in 0..cycles {
        match it.step()? {
            StepOutcome::Ok => out.push(it.state.clone()),
            _ => break,
        }
    }
    Ok(out)
}
