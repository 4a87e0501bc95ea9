//! Frequency responses of state-space models and per-frequency bound sweeps.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsvError};
use crate::linalg::{dominant_right_singular_vector, eigenvalues, CMatrix, ComplexMatrix};
use crate::lower::{
    power_iteration_repeated_full, power_iteration_standard, random_unit_vector, LowerBoundResult,
    PowerConfig,
};
use crate::structure::{Block, BlockStructure};
use crate::upper::{
    gen_osborne, method_of_centers, osborne_balance_rect, GenOsborneOptions, MocConfig,
    OsborneOptions, UpperBoundResult,
};

/// `ẋ = Ax + Bu`, `y = Cx`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: ComplexMatrix,
    b: ComplexMatrix,
    c: ComplexMatrix,
}

impl StateSpace {
    pub fn new(a: ComplexMatrix, b: ComplexMatrix, c: ComplexMatrix) -> Result<Self> {
        if a.rows() != a.cols() || b.rows() != a.rows() || c.cols() != a.rows() {
            return Err(SsvError::Dimension(format!(
                "A is {}x{}, B is {}x{}, C is {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols(),
                c.rows(),
                c.cols()
            )));
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn c(&self) -> &ComplexMatrix {
        &self.c
    }

    pub fn is_real(&self) -> bool {
        [&self.a, &self.b, &self.c]
            .iter()
            .all(|m| m.iter().all(|z| z.im == 0.0))
    }

    /// All eigenvalues of `A` in the open left half plane.
    pub fn is_stable(&self) -> Result<bool> {
        Ok(eigenvalues(&self.a)?.iter().all(|l| l.re < 0.0))
    }
}

/// `C (iωI − A)⁻¹ B` through an LU solve.
pub fn freq_response(ss: &StateSpace, omega: f64) -> Result<ComplexMatrix> {
    let n = ss.a.rows();
    let shifted = CMatrix::from_diagonal_element(n, n, Complex64::new(0.0, omega)) - ss.a.as_matrix();
    let x = shifted
        .lu()
        .solve(ss.b.as_matrix())
        .ok_or(SsvError::SingularResolvent { omega })?;
    let m = ss.c.as_matrix() * x;
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(SsvError::SingularResolvent { omega });
    }
    Ok(ComplexMatrix::wrap(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signs {
    #[serde(rename = "pos")]
    Positive,
    #[serde(rename = "neg")]
    Negative,
    Both,
}

impl FromStr for Signs {
    type Err = SsvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pos" | "positive" => Ok(Signs::Positive),
            "neg" | "negative" => Ok(Signs::Negative),
            "both" => Ok(Signs::Both),
            other => Err(SsvError::Config(format!("unknown sign selection '{other}'"))),
        }
    }
}

/// `count` log-spaced magnitudes in `[min_mag, max_mag]`, mirrored to
/// negative frequencies as requested, sorted ascending.
pub fn make_grid(min_mag: f64, max_mag: f64, count: usize, signs: Signs) -> Result<Vec<f64>> {
    if !(min_mag > 0.0 && min_mag <= max_mag && max_mag.is_finite()) || count == 0 {
        return Err(SsvError::Config(format!(
            "grid needs 0 < min <= max and count >= 1, got ({min_mag}, {max_mag}, {count})"
        )));
    }
    let (lo, hi) = (min_mag.log10(), max_mag.log10());
    let mags: Vec<f64> = (0..count)
        .map(|k| match k {
            0 => min_mag,
            k if k == count - 1 => max_mag,
            k => 10f64.powf(lo + (hi - lo) * k as f64 / (count - 1) as f64),
        })
        .collect();
    let neg = || mags.iter().rev().map(|w| -w);
    Ok(match signs {
        Signs::Positive => mags.clone(),
        Signs::Negative => neg().collect(),
        Signs::Both => neg().chain(mags.iter().copied()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpperMethod {
    #[serde(rename = "moc")]
    MethodOfCenters,
    Osborne,
    #[serde(rename = "genosborne")]
    GenOsborne,
}

impl FromStr for UpperMethod {
    type Err = SsvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moc" => Ok(UpperMethod::MethodOfCenters),
            "osborne" => Ok(UpperMethod::Osborne),
            "genosborne" => Ok(UpperMethod::GenOsborne),
            other => Err(SsvError::Config(format!("unknown upper-bound method '{other}'"))),
        }
    }
}

impl fmt::Display for UpperMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UpperMethod::MethodOfCenters => "moc",
            UpperMethod::Osborne => "osborne",
            UpperMethod::GenOsborne => "genosborne",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LowerMethod {
    Standard,
    Generalized,
}

impl FromStr for LowerMethod {
    type Err = SsvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(LowerMethod::Standard),
            "generalized" => Ok(LowerMethod::Generalized),
            other => Err(SsvError::Config(format!("unknown lower-bound method '{other}'"))),
        }
    }
}

impl fmt::Display for LowerMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LowerMethod::Standard => "standard",
            LowerMethod::Generalized => "generalized",
        })
    }
}

/// Default pairing: generalized/method-of-centers for a repeated full block,
/// standard/Osborne otherwise.
///
/// A lone repeated scalar `δI_v` keeps the standard iteration but takes the
/// method of centers (with `m1 = 1`) for the upper bound: a single diagonal
/// Osborne block could only return `σ̄(M)`.
pub fn default_methods(structure: &BlockStructure) -> (LowerMethod, UpperMethod) {
    match structure.blocks() {
        [Block::RepeatedFullBlock { .. }] => (LowerMethod::Generalized, UpperMethod::MethodOfCenters),
        [Block::RepeatedScalar { v }] if *v > 1 => (LowerMethod::Standard, UpperMethod::MethodOfCenters),
        _ => (LowerMethod::Standard, UpperMethod::Osborne),
    }
}

/// Rejects method/structure combinations the solvers cannot handle.
pub fn check_methods(structure: &BlockStructure, lower: LowerMethod, upper: UpperMethod) -> Result<()> {
    let repeated = structure.as_repeated().is_some();
    if lower == LowerMethod::Generalized && !repeated {
        return Err(SsvError::Incompatible(
            "the generalized iteration needs a single repeated block".into(),
        ));
    }
    if lower == LowerMethod::Standard && structure.is_repeated_full() {
        return Err(SsvError::Incompatible(
            "the standard iteration does not handle repeated full blocks".into(),
        ));
    }
    if matches!(upper, UpperMethod::MethodOfCenters | UpperMethod::GenOsborne) && !repeated {
        return Err(SsvError::Incompatible(format!(
            "{upper} needs a single repeated block"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundConfig {
    pub moc: MocConfig,
    pub power: PowerConfig,
    pub osborne: OsborneOptions,
    pub gen_osborne: GenOsborneOptions,
    /// Use seeded random initial vectors instead of the singular-vector start.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundPair {
    pub lower: LowerBoundResult,
    pub upper: UpperBoundResult,
}

/// Lower then upper bound for one matrix: diagonal balancing supplies the
/// initial vectors, the lower bound seeds the upper bound's ratio test.
pub fn compute_bounds(
    m: &CMatrix,
    structure: &BlockStructure,
    lower: LowerMethod,
    upper: UpperMethod,
    cfg: &BoundConfig,
) -> Result<BoundPair> {
    check_methods(structure, lower, upper)?;
    structure.check_matrix(m)?;
    let (rows, cols) = structure.partition();
    let nr = osborne_balance_rect(m, &rows, &cols, &cfg.osborne)?;
    let b0 = match cfg.seed {
        Some(seed) => random_unit_vector(m.ncols(), seed),
        None => dominant_right_singular_vector(&nr.scaled_matrix(m)?)?,
    };
    let lower = match lower {
        LowerMethod::Standard => power_iteration_standard(m, structure, &b0, &b0, &cfg.power)?,
        LowerMethod::Generalized => {
            let shape = structure.as_repeated().expect("checked above");
            power_iteration_repeated_full(m, shape, &b0, &b0, &cfg.power)?
        }
    };
    let upper = match upper {
        UpperMethod::Osborne => nr,
        UpperMethod::MethodOfCenters => {
            let shape = structure.as_repeated().expect("checked above");
            method_of_centers(m, &shape, lower.beta, &cfg.moc, None)?
        }
        UpperMethod::GenOsborne => {
            let shape = structure.as_repeated().expect("checked above");
            gen_osborne(m, &shape, &cfg.gen_osborne)?
        }
    };
    Ok(BoundPair { lower, upper })
}

/// How the grid points are distributed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// A dedicated pool with this many workers (0 = one per core). Falls back
    /// to sequential when built without the `parallel` feature.
    Parallel { workers: usize },
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel { workers: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepConfig {
    pub lower: Option<LowerMethod>,
    pub upper: Option<UpperMethod>,
    pub bounds: BoundConfig,
    pub execution: Execution,
}


#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub omega: f64,
    /// Absent when that bound failed at this frequency.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gap_percent: Option<f64>,
    pub converged_upper: bool,
    pub converged_lower: bool,
    /// Stopped by the `α/β < p` rule (method of centers only).
    pub converged_by_ratio: bool,
    /// Seconds spent on this frequency; not part of the deterministic output.
    pub wall_time: f64,
    pub error: Option<String>,
}

impl SweepRecord {
    /// Equality ignoring `wall_time`.
    pub fn same_result(&self, other: &Self) -> bool {
        let strip = |r: &Self| Self { wall_time: 0.0, ..r.clone() };
        strip(self) == strip(other)
    }
}

pub fn gap_percent(alpha: f64, beta: f64) -> f64 {
    if alpha > 0.0 {
        100.0 * (alpha - beta) / alpha
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peaks {
    pub alpha_max: f64,
    pub omega_at_alpha_max: f64,
    pub beta_max: f64,
    pub omega_at_beta_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub records: Vec<SweepRecord>,
    pub peaks: Option<Peaks>,
    pub lower: LowerMethod,
    pub upper: UpperMethod,
}

fn argmax(records: &[SweepRecord], value: impl Fn(&SweepRecord) -> Option<f64>) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for r in records {
        if let Some(x) = value(r) {
            let better = match best {
                None => true,
                Some((bx, bw)) => x > bx || (x == bx && r.omega < bw),
            };
            if better {
                best = Some((x, r.omega));
            }
        }
    }
    best
}

/// Largest `α` and `β` over the records with their frequencies; ties go to
/// the smallest `ω`.
pub fn best_bounds(records: &[SweepRecord]) -> Result<Peaks> {
    let (alpha_max, omega_at_alpha_max) = argmax(records, |r| r.alpha).ok_or(SsvError::EmptyTable)?;
    let (beta_max, omega_at_beta_max) = argmax(records, |r| r.beta).ok_or(SsvError::EmptyTable)?;
    Ok(Peaks {
        alpha_max,
        omega_at_alpha_max,
        beta_max,
        omega_at_beta_max,
    })
}

fn sweep_point(
    ss: &StateSpace,
    omega: f64,
    index: usize,
    structure: &BlockStructure,
    lower: LowerMethod,
    upper: UpperMethod,
    cfg: &BoundConfig,
) -> SweepRecord {
    let start = Instant::now();
    let mut cfg = cfg.clone();
    cfg.seed = cfg.seed.map(|s| s.wrapping_add(index as u64));
    let outcome = freq_response(ss, omega).and_then(|m| compute_bounds(&m, structure, lower, upper, &cfg));
    let mut rec = SweepRecord {
        omega,
        alpha: None,
        beta: None,
        gap_percent: None,
        converged_upper: false,
        converged_lower: false,
        converged_by_ratio: false,
        wall_time: 0.0,
        error: None,
    };
    match outcome {
        Ok(pair) => {
            rec.alpha = Some(pair.upper.alpha);
            rec.beta = Some(pair.lower.beta);
            rec.gap_percent = Some(gap_percent(pair.upper.alpha, pair.lower.beta));
            rec.converged_upper = pair.upper.converged;
            rec.converged_lower = pair.lower.converged;
            rec.converged_by_ratio = pair.upper.converged_by_ratio;
        }
        Err(e) => {
            log::warn!("omega = {omega}: {e}");
            rec.error = Some(e.to_string());
        }
    }
    rec.wall_time = start.elapsed().as_secs_f64();
    rec
}

/// Bounds at every grid point, in grid order. Per-frequency failures are
/// recorded and do not stop the sweep.
pub fn sweep_bounds(
    ss: &StateSpace,
    grid: &[f64],
    structure: &BlockStructure,
    cfg: &SweepConfig,
) -> Result<SweepTable> {
    if ss.c.rows() != structure.col_dim() || ss.b.cols() != structure.row_dim() {
        return Err(SsvError::Dimension(format!(
            "model is {}x{} but the structure needs {}x{}",
            ss.c.rows(),
            ss.b.cols(),
            structure.col_dim(),
            structure.row_dim()
        )));
    }
    let (dl, du) = default_methods(structure);
    let lower = cfg.lower.unwrap_or(dl);
    let upper = cfg.upper.unwrap_or(du);
    check_methods(structure, lower, upper)?;
    cfg.bounds.moc.validate()?;
    if !ss.is_stable()? {
        log::warn!("A has eigenvalues with nonnegative real part; bounds are still computed pointwise");
    }
    let point = |(k, &w): (usize, &f64)| sweep_point(ss, w, k, structure, lower, upper, &cfg.bounds);
    let records = match cfg.execution {
        Execution::Sequential => grid.iter().enumerate().map(point).collect(),
        Execution::Parallel { workers } => parallel_map(grid, workers, &point)?,
    };
    let peaks = best_bounds(&records).ok();
    Ok(SweepTable {
        records,
        peaks,
        lower,
        upper,
    })
}

#[cfg(feature = "parallel")]
fn parallel_map<F>(grid: &[f64], workers: usize, point: &F) -> Result<Vec<SweepRecord>>
where
    F: Fn((usize, &f64)) -> SweepRecord + Sync,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SsvError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| grid.par_iter().enumerate().map(point).collect()))
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<F>(grid: &[f64], _workers: usize, point: &F) -> Result<Vec<SweepRecord>>
where
    F: Fn((usize, &f64)) -> SweepRecord + Sync,
{
    Ok(grid.iter().enumerate().map(point).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sigma_max;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn neg_identity_model(n: usize) -> StateSpace {
        let eye = ComplexMatrix::identity(n);
        let a = ComplexMatrix::from_matrix(-eye.as_matrix()).unwrap();
        StateSpace::new(a, eye.clone(), eye).unwrap()
    }

    #[test]
    fn first_order_responses() {
        let ss = neg_identity_model(2);
        let m0 = freq_response(&ss, 0.0).unwrap();
        assert!((m0.as_matrix() - CMatrix::identity(2, 2)).norm() < 1e-15);
        let m1 = freq_response(&ss, 1.0).unwrap();
        let want = CMatrix::identity(2, 2) * c(0.5, -0.5);
        assert!((m1.as_matrix() - want).norm() < 1e-15);
    }

    #[test]
    fn singular_resolvent_names_omega() {
        let a = ComplexMatrix::new(1, 1, vec![c(0.0, 2.0)]).unwrap();
        let one = ComplexMatrix::identity(1);
        let ss = StateSpace::new(a, one.clone(), one).unwrap();
        assert_eq!(freq_response(&ss, 2.0).unwrap_err(), SsvError::SingularResolvent { omega: 2.0 });
    }

    #[test]
    fn dimension_checks() {
        let eye2 = ComplexMatrix::identity(2);
        let eye3 = ComplexMatrix::identity(3);
        assert!(StateSpace::new(eye2.clone(), eye3, eye2).is_err());
    }

    #[test]
    fn real_models_are_conjugate_symmetric() {
        let a = ComplexMatrix::new(2, 2, vec![c(-1.0, 0.0), c(2.0, 0.0), c(-0.5, 0.0), c(-3.0, 0.0)]).unwrap();
        let b = ComplexMatrix::new(2, 1, vec![c(1.0, 0.0), c(0.3, 0.0)]).unwrap();
        let cm = ComplexMatrix::new(1, 2, vec![c(0.7, 0.0), c(-1.0, 0.0)]).unwrap();
        let ss = StateSpace::new(a, b, cm).unwrap();
        assert!(ss.is_real() && ss.is_stable().unwrap());
        for w in [0.1, 1.0, 7.0] {
            let p = freq_response(&ss, w).unwrap();
            let n = freq_response(&ss, -w).unwrap();
            assert!((p.as_matrix().map(|z| z.conj()) - n.as_matrix()).norm() < 1e-14);
        }
    }

    #[test]
    fn grids() {
        assert_eq!(make_grid(1.0, 100.0, 3, Signs::Positive).unwrap(), vec![1.0, 10.0, 100.0]);
        assert_eq!(
            make_grid(1.0, 100.0, 3, Signs::Both).unwrap(),
            vec![-100.0, -10.0, -1.0, 1.0, 10.0, 100.0]
        );
        let (lo, hi) = (10f64.powf(-0.5), 10f64.powf(0.5));
        assert_eq!(make_grid(lo, hi, 2, Signs::Both).unwrap(), vec![-hi, -lo, lo, hi]);
        assert_eq!(make_grid(2.0, 2.0, 1, Signs::Negative).unwrap(), vec![-2.0]);
        assert!(make_grid(0.0, 1.0, 3, Signs::Both).is_err());
        assert!(make_grid(2.0, 1.0, 3, Signs::Both).is_err());
        assert!(make_grid(1.0, 2.0, 0, Signs::Both).is_err());
        let g = make_grid(1e-2, 1e2, 50, Signs::Both).unwrap();
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn identity_model_full_block() {
        let ss = neg_identity_model(3);
        let s = BlockStructure::single(Block::FullBlock { dim: 3 }).unwrap();
        let t = sweep_bounds(&ss, &[0.0], &s, &SweepConfig::default()).unwrap();
        let r = &t.records[0];
        assert!((r.alpha.unwrap() - 1.0).abs() < 1e-12);
        assert!((r.beta.unwrap() - 1.0).abs() < 1e-12);
        assert!(r.converged_upper && r.converged_lower);
    }

    #[test]
    fn incompatible_methods_are_rejected() {
        let full = BlockStructure::new(vec![Block::FullBlock { dim: 2 }, Block::FullBlock { dim: 2 }]).unwrap();
        let rep = BlockStructure::single(Block::repeated_full(2, 2)).unwrap();
        assert!(check_methods(&full, LowerMethod::Generalized, UpperMethod::Osborne).is_err());
        assert!(check_methods(&full, LowerMethod::Standard, UpperMethod::MethodOfCenters).is_err());
        assert!(check_methods(&rep, LowerMethod::Standard, UpperMethod::MethodOfCenters).is_err());
        assert!(check_methods(&rep, LowerMethod::Generalized, UpperMethod::GenOsborne).is_ok());
        let scalar = BlockStructure::single(Block::RepeatedScalar { v: 3 }).unwrap();
        assert!(check_methods(&scalar, LowerMethod::Generalized, UpperMethod::MethodOfCenters).is_ok());
    }

    #[test]
    fn peaks_and_ties() {
        let rec = |omega: f64, a: f64, b: f64| SweepRecord {
            omega,
            alpha: Some(a),
            beta: Some(b),
            gap_percent: Some(gap_percent(a, b)),
            converged_upper: true,
            converged_lower: true,
            converged_by_ratio: false,
            wall_time: 0.0,
            error: None,
        };
        let p = best_bounds(&[rec(-1.0, 1.0, 0.5), rec(0.0, 5.0, 0.5), rec(1.0, 2.0, 0.1)]).unwrap();
        assert_eq!((p.alpha_max, p.omega_at_alpha_max), (5.0, 0.0));
        assert_eq!((p.beta_max, p.omega_at_beta_max), (0.5, -1.0));
        let single = best_bounds(&[rec(3.0, 2.0, 1.0)]).unwrap();
        assert_eq!(single.omega_at_beta_max, 3.0);
        assert_eq!(best_bounds(&[]).unwrap_err(), SsvError::EmptyTable);
        assert_eq!(gap_percent(0.0, 0.0), 0.0);
    }

    #[test]
    fn failures_are_recorded_per_point() {
        let a = ComplexMatrix::new(1, 1, vec![c(0.0, 2.0)]).unwrap();
        let one = ComplexMatrix::identity(1);
        let ss = StateSpace::new(a, one.clone(), one).unwrap();
        let s = BlockStructure::single(Block::FullBlock { dim: 1 }).unwrap();
        let t = sweep_bounds(&ss, &[1.0, 2.0, 3.0], &s, &SweepConfig::default()).unwrap();
        assert!(t.records[1].alpha.is_none() && t.records[1].error.is_some());
        assert!((t.records[0].alpha.unwrap() - 1.0).abs() < 1e-12);
        assert!((t.peaks.unwrap().alpha_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let a = ComplexMatrix::new(
            2,
            2,
            vec![c(-1.0, 0.3), c(0.5, 0.0), c(0.2, -0.1), c(-0.4, 1.0)],
        )
        .unwrap();
        let b = ComplexMatrix::identity(2);
        let ss = StateSpace::new(a, b.clone(), b).unwrap();
        let s = BlockStructure::single(Block::RepeatedScalar { v: 2 }).unwrap();
        let grid = make_grid(0.1, 10.0, 8, Signs::Both).unwrap();
        let mut cfg = SweepConfig { execution: Execution::Sequential, ..Default::default() };
        let seq = sweep_bounds(&ss, &grid, &s, &cfg).unwrap();
        cfg.execution = Execution::Parallel { workers: 3 };
        let par = sweep_bounds(&ss, &grid, &s, &cfg).unwrap();
        assert!(seq.records.iter().zip(&par.records).all(|(x, y)| x.same_result(y)));
        for r in &seq.records {
            let m = freq_response(&ss, r.omega).unwrap();
            assert!(r.beta.unwrap() <= sigma_max(&m) * (1.0 + 1e-10));
            assert!(r.alpha.unwrap() >= r.beta.unwrap() - 1e-8);
        }
    }
}
