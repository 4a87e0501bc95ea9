//! `ssv` command-line front end.
//!
//! Exit codes: 0 success, 1 input error, 2 a solver did not converge (the
//! report is still written).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::{Result, SsvError};
use crate::io::{self, MatrixJson};
use crate::linalg::sigma_max;
use crate::structure::BlockStructure;
use crate::sweep::{
    compute_bounds, default_methods, gap_percent, make_grid, sweep_bounds, BoundConfig, Execution,
    LowerMethod, Signs, SweepConfig, UpperMethod,
};
use crate::upper::MocConfig;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "ssv", version, about = "Structured singular value bounds")]
pub struct Cli {
    /// More log output on stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bounds for a single matrix; writes a JSON report.
    Bound(BoundArgs),
    /// Bounds over a frequency grid; writes CSV plus `<out>.peaks.json`.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Block structure: inline JSON or a path to a JSON file.
    #[arg(long)]
    pub structure: String,
    #[arg(long, value_parser = parse_upper)]
    pub upper: Option<UpperMethod>,
    #[arg(long, value_parser = parse_lower)]
    pub lower: Option<LowerMethod>,
    /// Ratio threshold for the method of centers.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Outer-iteration cap of the method of centers.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Cycle cap of the power iteration.
    #[arg(long)]
    pub power_iters: Option<usize>,
    /// Seeded random initial vectors instead of the singular-vector start.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Matrix JSON file.
    #[arg(long)]
    pub matrix: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// State-space JSON file with A, B, C.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Smallest |ω| of the log grid.
    #[arg(long, default_value_t = 1e-4)]
    pub omega_min: f64,
    /// Largest |ω| of the log grid.
    #[arg(long, default_value_t = 10f64.powf(1.5))]
    pub omega_max: f64,
    /// Points per sign.
    #[arg(long, default_value_t = 100)]
    pub omega_count: usize,
    #[arg(long, default_value = "both", value_parser = parse_signs)]
    pub omega_signs: Signs,
    /// Explicit comma-separated frequencies; replaces the log grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub omega: Option<Vec<f64>>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

fn parse_upper(s: &str) -> std::result::Result<UpperMethod, String> {
    s.parse().map_err(|e: SsvError| e.to_string())
}

fn parse_lower(s: &str) -> std::result::Result<LowerMethod, String> {
    s.parse().map_err(|e: SsvError| e.to_string())
}

fn parse_signs(s: &str) -> std::result::Result<Signs, String> {
    s.parse().map_err(|e: SsvError| e.to_string())
}

impl SolverArgs {
    fn bound_config(&self) -> Result<BoundConfig> {
        let mut cfg = BoundConfig::default();
        let d = MocConfig::default();
        cfg.moc = MocConfig {
            p: self.p.unwrap_or(d.p),
            k_m: self.max_iters.unwrap_or(d.k_m),
            theta: self.theta.unwrap_or(d.theta),
            gamma: self.gamma.unwrap_or(d.gamma),
            epsilon: self.eps.unwrap_or(d.epsilon),
            ..d
        };
        cfg.moc.validate()?;
        if let Some(n) = self.power_iters {
            cfg.power.max_iters = n;
        }
        cfg.seed = self.seed;
        Ok(cfg)
    }

    fn methods(&self, structure: &BlockStructure) -> (LowerMethod, UpperMethod) {
        let (l, u) = default_methods(structure);
        (self.lower.unwrap_or(l), self.upper.unwrap_or(u))
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| SsvError::Parse(format!("cannot write {}: {e}", path.display())))
}

fn matrix_value(m: &crate::linalg::CMatrix) -> Value {
    serde_json::to_value(MatrixJson::from_matrix(m)).expect("matrix serializes")
}

/// Single-matrix bounds; returns the exit code.
pub fn run_bound(args: &BoundArgs) -> Result<u8> {
    let m = io::parse_matrix_file(&args.matrix)?;
    let structure = io::parse_structure(&args.solver.structure)?;
    structure.check_matrix(&m)?;
    let cfg = args.solver.bound_config()?;
    let (lower, upper) = args.solver.methods(&structure);
    let pair = compute_bounds(&m, &structure, lower, upper, &cfg)?;
    let (lo, up) = (&pair.lower, &pair.upper);

    let certificate = lo.perturbation.as_ref().map(|p| {
        json!({
            "delta": matrix_value(&p.assembled),
            "norm": p.norm,
            "residual": lo.residual,
            "norm_times_beta_minus_one": p.norm * lo.beta - 1.0,
        })
    });
    let report = json!({
        "structure": structure,
        "lower_method": lower,
        "upper_method": upper,
        "alpha": up.alpha,
        "beta": lo.beta,
        "gap_percent": gap_percent(up.alpha, lo.beta),
        "sigma_max": sigma_max(&m),
        "converged_upper": up.converged,
        "converged_lower": lo.converged,
        "lower": {
            "iterations": lo.iterations_used,
            "beta_history": lo.beta_history,
            "certificate": certificate,
        },
        "upper": {
            "iterations": up.iterations_used,
            "converged_by_ratio": up.converged_by_ratio,
            "alpha_recomputed": up.check_alpha(&m)?,
            "scaling": matrix_value(&up.scaling),
            "output_scaling": up.output_scaling.as_ref().map(|d| matrix_value(d)),
            "r_matrix": up.r_matrix.as_ref().map(|r| matrix_value(r)),
            "notes": up.notes,
        },
    });
    write_file(&args.solver.out, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
    println!(
        "alpha = {}, beta = {}, gap = {}%",
        io::format_g12(up.alpha),
        io::format_g12(lo.beta),
        io::format_g12(gap_percent(up.alpha, lo.beta))
    );
    Ok(if up.converged && lo.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

/// `<out>` with its extension replaced by `peaks.json`.
pub fn peaks_path(out: &Path) -> PathBuf {
    out.with_extension("peaks.json")
}

/// Frequency sweep; returns the exit code.
pub fn run_sweep(args: &SweepArgs) -> Result<u8> {
    let ss = io::parse_state_space_file(&args.model)?;
    let structure = io::parse_structure(&args.solver.structure)?;
    let grid = match &args.omega {
        Some(list) if !list.is_empty() => list.clone(),
        _ => make_grid(args.omega_min, args.omega_max, args.omega_count, args.omega_signs)?,
    };
    if grid.iter().any(|w| !w.is_finite()) {
        return Err(SsvError::Config("frequencies must be finite".into()));
    }
    let (lower, upper) = args.solver.methods(&structure);
    let cfg = SweepConfig {
        lower: Some(lower),
        upper: Some(upper),
        bounds: args.solver.bound_config()?,
        execution: Execution::Parallel { workers: args.workers },
    };
    let table = sweep_bounds(&ss, &grid, &structure, &cfg)?;
    write_file(&args.solver.out, &io::sweep_csv(&table))?;
    if let Some(peaks) = &table.peaks {
        write_file(&peaks_path(&args.solver.out), &io::peaks_json(peaks))?;
        println!(
            "alpha_max = {} at omega = {}, beta_max = {} at omega = {}",
            io::format_g12(peaks.alpha_max),
            io::format_g12(peaks.omega_at_alpha_max),
            io::format_g12(peaks.beta_max),
            io::format_g12(peaks.omega_at_beta_max)
        );
    }
    let all_ok = table
        .records
        .iter()
        .all(|r| r.error.is_none() && r.converged_upper && r.converged_lower);
    Ok(if all_ok { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

pub fn run(cli: &Cli) -> u8 {
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    let outcome = match &cli.command {
        Command::Bound(a) => run_bound(a),
        Command::Sweep(a) => run_sweep(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

/// Parses `argv` and runs; usage errors map to exit code 1.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peaks_path_replaces_extension() {
        assert_eq!(peaks_path(Path::new("out/nr.csv")), PathBuf::from("out/nr.peaks.json"));
        assert_eq!(peaks_path(Path::new("table")), PathBuf::from("table.peaks.json"));
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "ssv", "sweep", "--model", "m.json", "--structure", "{}", "--out", "o.csv", "--omega", "-1,0,2.5",
            "--upper", "genosborne", "--omega-signs", "pos", "--p", "1.1",
        ])
        .unwrap();
        let Command::Sweep(a) = cli.command else { panic!("sweep expected") };
        assert_eq!(a.omega, Some(vec![-1.0, 0.0, 2.5]));
        assert_eq!(a.solver.upper, Some(UpperMethod::GenOsborne));
        assert_eq!(a.omega_signs, Signs::Positive);
        assert_eq!(a.solver.bound_config().unwrap().moc.p, 1.1);
        assert!(Cli::try_parse_from(["ssv", "bound", "--matrix", "x", "--structure", "{}", "--out", "o", "--upper", "lmi"]).is_err());
    }

    #[test]
    fn bad_moc_override_is_rejected() {
        let cli = Cli::try_parse_from(["ssv", "bound", "--matrix", "x", "--structure", "{}", "--out", "o", "--theta", "2"]).unwrap();
        let Command::Bound(a) = cli.command else { panic!("bound expected") };
        assert!(a.solver.bound_config().is_err());
    }
}
