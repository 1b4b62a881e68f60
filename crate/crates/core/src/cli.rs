//! Command-line front end: `flow`, `saddle`, `sweep`, `spectrum` and
//! `validate`. Every run writes into its own directory; CSV files start with
//! a comment line carrying the config hash and JSON records carry it as
//! `config_hash`. Wall-clock time goes to a separate `timing.json` so the
//! other outputs are bitwise reproducible.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::energy::{
    assemble_second_variation, reduced_energy, residual_sup, second_variation_form, EnergyParams,
};
use crate::error::{Error, Result};
use crate::flow::{self, FlowConfig, FlowDomain, FlowStatus};
use crate::grid::Grid;
use crate::profile::{make_initial_first_type, Profile, WedgeKind, WedgeSpec};
use crate::saddle::{self, SaddleType};
use crate::spectrum::eigs_lowest;
use crate::validate;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "AXISADDLE_OUT";

#[derive(Debug, Parser)]
#[command(name = "axisaddle", version, about = "Axisymmetric saddle points of a micromagnetic energy on the sphere")]
pub struct Cli {
    /// Root for run directories when `--out` is not given.
    #[arg(long, global = true, env = OUT_ENV, default_value = "runs")]
    pub out_root: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the profile heat flow.
    Flow(FlowArgs),
    /// Construct a first- or second-type saddle.
    Saddle(SaddleArgs),
    /// Scan kappa and bracket the thresholds.
    Sweep(SweepArgs),
    /// Lowest eigenvalues of the second variation at a profile.
    Spectrum(SpectrumArgs),
    /// Run the self-check suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainArg {
    Full,
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeArg {
    First,
    Second,
}

impl From<TypeArg> for SaddleType {
    fn from(t: TypeArg) -> Self {
        match t {
            TypeArg::First => SaddleType::First,
            TypeArg::Second => SaddleType::Second,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FlowArgs {
    /// `pi`, `theta`, `two-theta`, `first-type` or a profile CSV path.
    #[arg(long)]
    pub init: String,
    #[arg(long)]
    pub kappa: f64,
    /// Subdivisions; taken from the file for CSV input.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 1e3)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = DomainArg::Full)]
    pub domain: DomainArg,
    #[arg(long, default_value_t = 10)]
    pub record_every: usize,
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SaddleArgs {
    #[arg(long = "type", value_enum)]
    pub kind: TypeArg,
    #[arg(long)]
    pub kappa: f64,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// One or more of `first`, `second` (comma separated).
    #[arg(long = "type", value_enum, value_delimiter = ',', default_value = "first")]
    pub kinds: Vec<TypeArg>,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long)]
    pub step: f64,
    /// Base subdivision; raised to `32 sqrt(kappa)` where needed.
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    /// `pi`, `theta`, `two-theta` or a profile CSV path.
    #[arg(long)]
    pub profile: String,
    #[arg(long)]
    pub kappa: f64,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long)]
    pub n: Option<usize>,
    /// Also write `eigenvectors.csv`.
    #[arg(long)]
    pub eigenvectors: bool,
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses the process arguments and runs the chosen command.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(run(&cli))
}

/// Runs a parsed command and returns the process exit status.
pub fn run(cli: &Cli) -> u8 {
    let outcome = match &cli.command {
        Command::Flow(a) => cmd_flow(a, &cli.out_root),
        Command::Saddle(a) => cmd_saddle(a, &cli.out_root),
        Command::Sweep(a) => cmd_sweep(a, &cli.out_root),
        Command::Spectrum(a) => cmd_spectrum(a, &cli.out_root),
        Command::Validate(a) => cmd_validate(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[derive(Serialize)]
struct Tagged<'a, C: Serialize> {
    command: &'static str,
    config: &'a C,
}

/// Hex SHA-256 of the JSON form of `(command, config)`.
pub fn config_hash<C: Serialize>(command: &'static str, config: &C) -> Result<String> {
    let bytes = serde_json::to_vec(&Tagged { command, config })?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn run_dir(explicit: &Option<PathBuf>, root: &Path, command: &str, hash: &str) -> Result<PathBuf> {
    let dir = match explicit {
        Some(d) => d.clone(),
        None => root.join(format!("{command}-{}", &hash[..12])),
    };
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

fn write_timing(dir: &Path, hash: &str, start: Instant) -> Result<()> {
    #[derive(Serialize)]
    struct Timing<'a> {
        config_hash: &'a str,
        wall_seconds: f64,
    }
    write_json(
        &dir.join("timing.json"),
        &Timing {
            config_hash: hash,
            wall_seconds: start.elapsed().as_secs_f64(),
        },
    )
}

fn grid_for(n: Option<usize>) -> Result<Arc<Grid>> {
    Ok(Arc::new(Grid::new(n.unwrap_or(1024))?))
}

/// Builds a builtin profile or reads a CSV. `first-type` needs `kappa`.
fn load_profile(spec: &str, kappa: f64, n: Option<usize>) -> Result<Profile> {
    match spec {
        "pi" => Ok(Profile::constant_pi(grid_for(n)?)),
        "theta" => Ok(Profile::identity(grid_for(n)?)),
        "two-theta" => Ok(Profile::two_theta(grid_for(n)?)),
        "first-type" => make_initial_first_type(grid_for(n)?, kappa),
        path => {
            let file = fs::File::open(path)
                .map_err(|e| Error::Format(format!("cannot read profile `{path}`: {e}")))?;
            let (p, _) = Profile::read_csv(BufReader::new(file))?;
            if let Some(n) = n {
                if n != p.grid().n() {
                    return Err(Error::invalid(
                        "n",
                        format!("{n} given but `{path}` has n = {}", p.grid().n()),
                    ));
                }
            }
            Ok(p)
        }
    }
}

fn wedge_for(p: &Profile) -> Option<WedgeSpec> {
    let kind = match p.class() {
        (1, 1) => WedgeKind::W1,
        (0, 2) => WedgeKind::W2,
        _ => return None,
    };
    Some(WedgeSpec { kind, tolerance: 1e-8 })
}

#[derive(Serialize)]
struct FlowRecord<'a> {
    config_hash: &'a str,
    config: &'a FlowArgs,
    status: FlowStatus,
    exit_code: u8,
    steps: usize,
    t_final: f64,
    dt: f64,
    n: usize,
    e_initial: f64,
    e_final: f64,
    residual: f64,
    energy_monotone: bool,
    max_energy_increase: f64,
    wedge: Option<WedgeKind>,
    wedge_always_inside: Option<bool>,
    max_hemispheric_defect: Option<f64>,
    class: (i64, i64),
    degree: i64,
}

pub fn cmd_flow(args: &FlowArgs, root: &Path) -> Result<u8> {
    let start = Instant::now();
    let params = EnergyParams::new(args.kappa)?;
    let p0 = load_profile(&args.init, args.kappa, args.n)?;
    let mut cfg = FlowConfig::for_kappa(args.kappa);
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    cfg.t_max = args.t_max;
    cfg.stationary_tol = args.tol;
    cfg.record_every = args.record_every;
    cfg.domain = match args.domain {
        DomainArg::Full => FlowDomain::Full,
        DomainArg::Half => FlowDomain::Half,
    };
    cfg.wedge = wedge_for(&p0);
    cfg.validate()?;

    let hash = config_hash("flow", args)?;
    let dir = run_dir(&args.out, root, "flow", &hash)?;
    let result = flow::run(&p0, params, &cfg)?;
    let exit_code = match result.status {
        FlowStatus::Stationary => 0,
        FlowStatus::HorizonReached => 2,
        FlowStatus::BlowupSuspected => 3,
    };

    let header = vec![format!("config={hash}"), format!("kappa={}", args.kappa)];
    result.write_trace_csv(fs::File::create(dir.join("trace.csv"))?, &header)?;
    result
        .final_profile
        .write_csv(fs::File::create(dir.join("profile.csv"))?, Some(args.kappa), &[("config", hash.clone())])?;
    let defects: Vec<f64> = result.monitor_log.iter().filter_map(|m| m.hemispheric_defect).collect();
    let record = FlowRecord {
        config_hash: &hash,
        config: args,
        status: result.status,
        exit_code,
        steps: result.steps,
        t_final: result.t_final,
        dt: cfg.dt,
        n: p0.grid().n(),
        e_initial: reduced_energy(&p0, params),
        e_final: reduced_energy(&result.final_profile, params),
        residual: residual_sup(&result.final_profile, params),
        energy_monotone: result.energy_monotone,
        max_energy_increase: result.max_energy_increase,
        wedge: cfg.wedge.map(|w| w.kind),
        wedge_always_inside: cfg
            .wedge
            .map(|_| result.monitor_log.iter().all(|m| m.wedge.is_some_and(|w| w.is_inside()))),
        max_hemispheric_defect: (defects.len() == result.monitor_log.len())
            .then(|| defects.iter().copied().fold(0.0, f64::max)),
        class: result.final_profile.class(),
        degree: result.final_profile.degree(),
    };
    write_json(&dir.join("run.json"), &record)?;
    write_timing(&dir, &hash, start)?;
    println!(
        "{:?} after {} steps (t = {}), E = {}, residual = {:e}; output in {}",
        result.status,
        result.steps,
        result.t_final,
        record.e_final,
        record.residual,
        dir.display()
    );
    Ok(exit_code)
}

#[derive(Serialize)]
struct SaddleRecord<'a> {
    config_hash: &'a str,
    config: &'a SaddleArgs,
    valid: bool,
    lambda1: f64,
    lambda2: f64,
    report: &'a saddle::SaddleReport,
}

pub fn cmd_saddle(args: &SaddleArgs, root: &Path) -> Result<u8> {
    let start = Instant::now();
    let grid = Arc::new(Grid::new(args.n)?);
    let hash = config_hash("saddle", args)?;
    let report = saddle::find(args.kind.into(), args.kappa, grid)?;
    let dir = run_dir(&args.out, root, "saddle", &hash)?;
    report
        .profile
        .write_csv(fs::File::create(dir.join("profile.csv"))?, Some(args.kappa), &[("config", hash.clone())])?;
    write_json(
        &dir.join("report.json"),
        &SaddleRecord {
            config_hash: &hash,
            config: args,
            valid: report.is_valid(),
            lambda1: report.lambda1(),
            lambda2: report.lambda2(),
            report: &report,
        },
    )?;
    write_timing(&dir, &hash, start)?;
    println!(
        "{} type at kappa = {}: E = {}, lambda1 = {}, lambda2 = {}, direction value = {}, {:?}; output in {}",
        report.kind,
        report.kappa,
        report.energy,
        report.lambda1(),
        report.lambda2(),
        report.explicit_direction_value,
        report.verdict,
        dir.display()
    );
    if report.is_valid() {
        Ok(0)
    } else {
        eprintln!("invalid report: {}", report.invariant_failures.join("; "));
        Ok(1)
    }
}

/// `from, from + step, ...` up to `to` (inclusive within 1e-9 step),
/// rounded to 12 decimals so that decimal steps print cleanly.
pub fn kappa_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("step", format!("must be positive, got {step}")));
    }
    if !(from > 0.0 && to >= from && to.is_finite()) {
        return Err(Error::invalid("from", format!("need 0 < from <= to, got {from} and {to}")));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=count)
        .map(|j| ((from + j as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

#[derive(Serialize)]
struct SweepRecord<'a> {
    config_hash: &'a str,
    config: &'a SweepArgs,
    kappas: &'a [f64],
    kappa0: Option<saddle::Bracket>,
    kappa0_lambda1: Option<saddle::Bracket>,
    kappa1: Option<saddle::Bracket>,
    bisection_steps: usize,
}

pub fn cmd_sweep(args: &SweepArgs, root: &Path) -> Result<u8> {
    let start = Instant::now();
    let kappas = kappa_grid(args.from, args.to, args.step)?;
    let kinds: Vec<SaddleType> = args.kinds.iter().map(|k| (*k).into()).collect();
    let hash = config_hash("sweep", args)?;
    let result = saddle::sweep(&kappas, &kinds, args.n)?;
    let dir = run_dir(&args.out, root, "sweep", &hash)?;
    let record = SweepRecord {
        config_hash: &hash,
        config: args,
        kappas: &kappas,
        kappa0: result.kappa0,
        kappa0_lambda1: result.kappa0_lambda1,
        kappa1: result.kappa1,
        bisection_steps: result.bisection_steps,
    };
    write_json(&dir.join("config.json"), &record)?;
    result.write_run_dir(&dir, &[format!("config={hash}")])?;
    write_timing(&dir, &hash, start)?;
    for row in &result.rows {
        println!(
            "{} {:>8} E={} dir={} {}",
            row.kind,
            row.kappa,
            row.energy.map_or("-".into(), |v| format!("{v:.6}")),
            row.dir_value.map_or("-".into(), |v| format!("{v:.6}")),
            row.status
        );
    }
    let show = |b: Option<saddle::Bracket>| b.map_or("none".to_string(), |b| format!("({}, {})", b.lo, b.hi));
    println!("kappa0 bracket (direction value): {}", show(result.kappa0));
    println!("kappa0 bracket (lowest eigenvalue, unrefined): {}", show(result.kappa0_lambda1));
    println!("kappa1 bracket: {}", show(result.kappa1));
    println!("output in {}", dir.display());
    Ok(0)
}

#[derive(Serialize)]
struct SpectrumRecord<'a> {
    config_hash: &'a str,
    config: &'a SpectrumArgs,
    n: usize,
    residual: f64,
    explicit_direction_value: Option<f64>,
    morse_index: usize,
    tol: f64,
    eigenvalues: &'a [f64],
}

pub fn cmd_spectrum(args: &SpectrumArgs, root: &Path) -> Result<u8> {
    let start = Instant::now();
    let params = EnergyParams::new(args.kappa)?;
    let p = load_profile(&args.profile, args.kappa, args.n)?;
    let op = assemble_second_variation(&p, params);
    if args.k == 0 || args.k > op.dimension() {
        return Err(Error::invalid("k", format!("must lie in 1..={}", op.dimension())));
    }
    let hash = config_hash("spectrum", args)?;
    let spectrum = eigs_lowest(&op, args.k)?;
    let dir = run_dir(&args.out, root, "spectrum", &hash)?;

    let mut f = fs::File::create(dir.join("spectrum.csv"))?;
    writeln!(f, "# config={hash} kappa={}", args.kappa)?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["index", "lambda"])?;
    for (i, l) in spectrum.eigenvalues.iter().enumerate() {
        w.write_record([(i + 1).to_string(), l.to_string()])?;
    }
    w.flush()?;

    if args.eigenvectors {
        let mut f = fs::File::create(dir.join("eigenvectors.csv"))?;
        writeln!(f, "# config={hash} kappa={}", args.kappa)?;
        let mut w = csv::Writer::from_writer(f);
        let mut head = vec!["theta".to_string()];
        head.extend((1..=args.k).map(|i| format!("v{i}")));
        w.write_record(&head)?;
        for (i, t) in p.grid().nodes().iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(spectrum.eigenvectors.iter().map(|v| v[i].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
    }

    let record = SpectrumRecord {
        config_hash: &hash,
        config: args,
        n: p.grid().n(),
        residual: residual_sup(&p, params),
        explicit_direction_value: second_variation_form(&p, params, &p.perturbation_direction()).ok(),
        morse_index: spectrum.morse_index,
        tol: spectrum.tol,
        eigenvalues: &spectrum.eigenvalues,
    };
    write_json(&dir.join("spectrum.json"), &record)?;
    write_timing(&dir, &hash, start)?;
    for (i, l) in spectrum.eigenvalues.iter().enumerate() {
        println!("lambda_{} = {l}", i + 1);
    }
    println!("morse index {}; output in {}", spectrum.morse_index, dir.display());
    Ok(0)
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<u8> {
    let verdicts = validate::run_suite(args.n, args.seed)?;
    let mut failed = Vec::new();
    for v in &verdicts {
        println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
        if !v.passed {
            failed.push(v.name);
        }
    }
    if failed.is_empty() {
        Ok(0)
    } else {
        eprintln!("failing properties: {}", failed.join(", "));
        Ok(1)
    }
}
