//! End-to-end saddle constructions and kappa sweeps.
//!
//! First type: flow from the sawtooth profile in the wedge
//! `pi <= h <= pi + theta`, Newton polish, classify. Second type: flow from
//! `2 theta` for `kappa > 4`, the exact profile at `kappa = 4`, and
//! continuation from `(4, 2 theta)` below 4.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{reduced_energy, residual_sup, EnergyParams};
use crate::error::{Error, Result};
use crate::flow::{self, FlowConfig, FlowDomain, FlowStatus};
use crate::grid::Grid;
use crate::profile::{make_initial_first_type, make_initial_second_type, Profile, WedgeKind, WedgeSpec, WedgeVerdict};
use crate::spectrum::{classify, SpectrumResult, Verdict};
use crate::stationary::{continue_branch, newton_solve, BranchEnd, NewtonConfig};

/// Largest sup residual of an emitted report.
pub const REPORT_RESIDUAL_LIMIT: f64 = 1e-9;
/// Tolerance of the wedge and hemispheric checks on emitted reports.
pub const REPORT_SYMMETRY_TOL: f64 = 1e-8;
/// Eigenpairs computed per report.
pub const REPORT_EIGENPAIRS: usize = 4;
/// Flow tolerance before handing over to Newton.
const FLOW_HANDOFF_TOL: f64 = 1e-7;
/// Continuation step below `kappa = 4`.
pub const CONTINUATION_STEP: f64 = 0.05;
/// Target width of the kappa_0 bracket.
pub const BRACKET_WIDTH: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SaddleType {
    /// Boundary class `(1, 1)`, wedge `W1`.
    First,
    /// Boundary class `(0, 2)`, wedge `W2`.
    Second,
}

impl SaddleType {
    pub fn class(self) -> (i64, i64) {
        match self {
            SaddleType::First => (1, 1),
            SaddleType::Second => (0, 2),
        }
    }

    pub fn wedge(self) -> WedgeKind {
        match self {
            SaddleType::First => WedgeKind::W1,
            SaddleType::Second => WedgeKind::W2,
        }
    }
}

impl fmt::Display for SaddleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SaddleType::First => "first",
            SaddleType::Second => "second",
        })
    }
}

impl FromStr for SaddleType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(SaddleType::First),
            "second" => Ok(SaddleType::Second),
            other => Err(Error::invalid("type", format!("expected `first` or `second`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Flow,
    Continuation,
    FlowThenNewton,
    /// Closed-form solution, no iteration.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaddleReport {
    pub kappa: f64,
    #[serde(rename = "type")]
    pub kind: SaddleType,
    pub n: usize,
    #[serde(skip)]
    pub profile: Profile,
    pub energy: f64,
    pub residual: f64,
    pub spectrum: SpectrumResult,
    pub verdict: Verdict,
    pub explicit_direction_value: f64,
    /// The explicit direction does not certify a saddle (value >= 0).
    pub marginal: bool,
    pub wedge_verdict: WedgeVerdict,
    /// Whether the wedge is required for this report to validate.
    pub wedge_required: bool,
    pub hemispheric: bool,
    pub hemispheric_defect: f64,
    pub class: (i64, i64),
    pub degree: i64,
    /// `(min h', max h')` over the grid.
    pub slope_range: (f64, f64),
    pub provenance: Provenance,
    /// Failed invariants, checked when the report is built.
    pub invariant_failures: Vec<String>,
}

impl SaddleReport {
    fn build(
        kind: SaddleType,
        profile: Profile,
        params: EnergyParams,
        provenance: Provenance,
    ) -> Result<Self> {
        let cp = classify(&profile, params, REPORT_EIGENPAIRS)?;
        let wedge_verdict = profile.wedge_check(WedgeSpec::new(kind.wedge(), REPORT_SYMMETRY_TOL)?);
        let hemispheric_defect = profile.hemispheric_defect().unwrap_or(f64::INFINITY);
        let slope = profile.derivative();
        let slope_range = slope
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        let mut report = Self {
            kappa: params.kappa(),
            kind,
            n: profile.grid().n(),
            energy: reduced_energy(&profile, params),
            residual: cp.residual,
            spectrum: cp.spectrum,
            verdict: cp.verdict,
            explicit_direction_value: cp.explicit_direction_value,
            marginal: !(cp.explicit_direction_value < 0.0),
            wedge_verdict,
            wedge_required: kind == SaddleType::First || params.kappa() >= 4.0,
            hemispheric: hemispheric_defect <= REPORT_SYMMETRY_TOL,
            hemispheric_defect,
            class: profile.class(),
            degree: profile.degree(),
            slope_range,
            provenance,
            profile,
            invariant_failures: Vec::new(),
        };
        report.invariant_failures = report.check_invariants();
        Ok(report)
    }

    /// Recomputes every invariant from the stored profile.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut failures = Vec::new();
        let params = match EnergyParams::new(self.kappa) {
            Ok(p) => p,
            Err(e) => return vec![e.to_string()],
        };
        let residual = residual_sup(&self.profile, params);
        if !(residual < REPORT_RESIDUAL_LIMIT) {
            failures.push(format!("sup residual {residual:e} >= {REPORT_RESIDUAL_LIMIT:e}"));
        }
        if self.profile.class() != self.kind.class() {
            failures.push(format!(
                "boundary class {:?}, expected {:?}",
                self.profile.class(),
                self.kind.class()
            ));
        }
        if self.profile.degree() != 0 {
            failures.push(format!("degree {}, expected 0", self.profile.degree()));
        }
        if !self.profile.is_hemispheric(REPORT_SYMMETRY_TOL) {
            failures.push(format!("hemispheric defect {:e}", self.hemispheric_defect));
        }
        if self.wedge_required {
            let spec = WedgeSpec {
                kind: self.kind.wedge(),
                tolerance: REPORT_SYMMETRY_TOL,
            };
            if let WedgeVerdict::Violated { node, excess } = self.profile.wedge_check(spec) {
                failures.push(format!("outside {:?} at node {node} by {excess:e}", spec.kind));
            }
        }
        failures
    }

    pub fn is_valid(&self) -> bool {
        self.invariant_failures.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        match self.invariant_failures.first() {
            None => Ok(()),
            Some(_) => Err(Error::InvalidReport(self.invariant_failures.join("; "))),
        }
    }

    pub fn lambda1(&self) -> f64 {
        self.spectrum.eigenvalues[0]
    }

    pub fn lambda2(&self) -> f64 {
        self.spectrum.eigenvalues[1]
    }
}

fn flow_then_newton(p0: &Profile, params: EnergyParams, domain: FlowDomain, wedge: WedgeKind) -> Result<Profile> {
    let mut cfg = FlowConfig::for_kappa(params.kappa());
    cfg.domain = domain;
    cfg.stationary_tol = FLOW_HANDOFF_TOL;
    cfg.wedge = Some(WedgeSpec::new(wedge, REPORT_SYMMETRY_TOL)?);
    cfg.record_every = usize::MAX;
    let run = flow::run(p0, params, &cfg)?;
    if run.status == FlowStatus::BlowupSuspected {
        return Err(Error::Blowup { t: run.t_final });
    }
    let mut profile = newton_solve(&run.final_profile, params, &NewtonConfig::default())?.profile;
    profile.symmetrize();
    Ok(profile)
}

/// First-type saddle candidate for `kappa >= 4`.
pub fn find_first_type(kappa: f64, grid: Arc<Grid>) -> Result<SaddleReport> {
    let params = EnergyParams::new(kappa)?;
    let p0 = make_initial_first_type(grid, kappa)?;
    let profile = flow_then_newton(&p0, params, FlowDomain::Half, WedgeKind::W1)?;
    SaddleReport::build(SaddleType::First, profile, params, Provenance::FlowThenNewton)
}

/// Second-type saddle for any `kappa > 0`.
pub fn find_second_type(kappa: f64, grid: Arc<Grid>) -> Result<SaddleReport> {
    let params = EnergyParams::new(kappa)?;
    if !(kappa > 0.0) {
        return Err(Error::invalid("kappa", format!("must be positive, got {kappa}")));
    }
    let start = make_initial_second_type(grid);
    if kappa == 4.0 {
        return SaddleReport::build(SaddleType::Second, start, params, Provenance::Exact);
    }
    if kappa > 4.0 {
        let profile = flow_then_newton(&start, params, FlowDomain::Half, WedgeKind::W2)?;
        return SaddleReport::build(SaddleType::Second, profile, params, Provenance::FlowThenNewton);
    }
    let branch = continue_branch(4.0, &start, kappa, -CONTINUATION_STEP, &NewtonConfig::default())?;
    if let BranchEnd::NewtonFailure { last_ok, failed_at } = branch.end {
        return Err(Error::ContinuationIncomplete {
            last_kappa: last_ok,
            failed_at,
            target: kappa,
        });
    }
    let last = branch.points.into_iter().last().expect("branch has a start point");
    SaddleReport::build(SaddleType::Second, last.profile, params, Provenance::Continuation)
}

pub fn find(kind: SaddleType, kappa: f64, grid: Arc<Grid>) -> Result<SaddleReport> {
    match kind {
        SaddleType::First => find_first_type(kappa, grid),
        SaddleType::Second => find_second_type(kappa, grid),
    }
}

/// Subdivision used for a sweep point: at least `base` and at least
/// `32 sqrt(kappa)`, rounded up to even.
pub fn sweep_grid_n(base: usize, kappa: f64) -> usize {
    let wall = 2 * (16.0 * kappa.max(0.0).sqrt()).ceil() as usize;
    base.max(wall)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn estimate(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub kappa: f64,
    #[serde(rename = "type")]
    pub kind: SaddleType,
    pub n: usize,
    pub energy: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub dir_value: Option<f64>,
    pub status: String,
    #[serde(skip)]
    pub profile: Option<Profile>,
}

impl SweepRow {
    fn from_outcome(kind: SaddleType, kappa: f64, n: usize, outcome: Result<SaddleReport>) -> Self {
        match outcome {
            Ok(r) => {
                let status = if r.is_valid() {
                    verdict_name(r.verdict).to_string()
                } else {
                    format!("invalid: {}", r.invariant_failures.join("; "))
                };
                Self {
                    kappa,
                    kind,
                    n,
                    energy: Some(r.energy),
                    lambda1: Some(r.lambda1()),
                    lambda2: Some(r.lambda2()),
                    dir_value: Some(r.explicit_direction_value),
                    status,
                    profile: Some(r.profile),
                }
            }
            Err(e) => Self {
                kappa,
                kind,
                n,
                energy: None,
                lambda1: None,
                lambda2: None,
                dir_value: None,
                status: format!("failed: {e}"),
                profile: None,
            },
        }
    }

    pub fn ok(&self) -> bool {
        self.profile.is_some() && !self.status.starts_with("invalid")
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Saddle => "saddle",
        Verdict::StrictLocalMinimum => "local_min",
        Verdict::Marginal => "marginal",
        Verdict::Unresolved => "unresolved",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    /// Sorted by type, then by kappa.
    pub rows: Vec<SweepRow>,
    /// Sign change of the explicit-direction value along the first-type rows,
    /// refined by bisection.
    pub kappa0: Option<Bracket>,
    /// Sign change of `lambda1` along the first-type rows (not refined).
    pub kappa0_lambda1: Option<Bracket>,
    /// Lower edge of the second-type branch: continuation failure or an
    /// eigenvalue sign change below 4.
    pub kappa1: Option<Bracket>,
    pub bisection_steps: usize,
}

impl SweepResult {
    pub fn rows_of(&self, kind: SaddleType) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.kind == kind)
    }

    /// Writes `sweep.csv` and `profiles/kappa_<value>_<type>.csv` into `dir`.
    /// Every file starts with the given comment lines.
    pub fn write_run_dir(&self, dir: &Path, header: &[String]) -> Result<()> {
        fs::create_dir_all(dir.join("profiles"))?;
        let mut file = fs::File::create(dir.join("sweep.csv"))?;
        for line in header {
            writeln!(file, "# {line}")?;
        }
        for (name, b) in [("kappa0_bracket", self.kappa0), ("kappa0_lambda1_bracket", self.kappa0_lambda1), ("kappa1_bracket", self.kappa1)] {
            if let Some(b) = b {
                writeln!(file, "# {name}={},{}", b.lo, b.hi)?;
            }
        }
        self.write_csv(file)?;
        let extra: Vec<(&str, String)> = header
            .iter()
            .filter_map(|h| h.split_once('='))
            .map(|(k, v)| (k, v.to_string()))
            .collect();
        for row in &self.rows {
            if let Some(p) = &row.profile {
                let path = dir.join("profiles").join(format!("kappa_{}_{}.csv", row.kappa, row.kind));
                p.write_csv(fs::File::create(path)?, Some(row.kappa), &extra)?;
            }
        }
        Ok(())
    }

    /// Columns `kappa,type,E,lambda1,lambda2,dir_value,status`; failed
    /// quantities are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kappa", "type", "E", "lambda1", "lambda2", "dir_value", "status"])?;
        for r in &self.rows {
            w.write_record([
                r.kappa.to_string(),
                r.kind.to_string(),
                opt(r.energy),
                opt(r.lambda1),
                opt(r.lambda2),
                opt(r.dir_value),
                r.status.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sign_change(rows: &[&SweepRow], value: impl Fn(&SweepRow) -> Option<f64>) -> Option<Bracket> {
    let ok: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.ok())
        .filter_map(|r| value(r).map(|v| (r.kappa, v)))
        .collect();
    ok.windows(2)
        .find(|w| (w[0].1 < 0.0) != (w[1].1 < 0.0))
        .map(|w| Bracket { lo: w[0].0, hi: w[1].0 })
}

/// Runs the requested pipelines for every kappa (in parallel) and locates
/// the kappa_0 and kappa_1 brackets. Per-point failures end up in the rows.
pub fn sweep(kappas: &[f64], types: &[SaddleType], base_n: usize) -> Result<SweepResult> {
    Grid::new(base_n)?;
    if kappas.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
        return Err(Error::invalid("kappa", "sweep values must be positive and finite"));
    }
    if kappas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("kappa", "sweep values must be strictly ascending"));
    }
    let mut kinds = types.to_vec();
    kinds.sort();
    kinds.dedup();

    let jobs: Vec<(SaddleType, f64)> = kinds
        .iter()
        .flat_map(|t| kappas.iter().map(move |k| (*t, *k)))
        .collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(kind, kappa)| run_point(kind, kappa, base_n))
        .collect();

    let first: Vec<&SweepRow> = rows.iter().filter(|r| r.kind == SaddleType::First).collect();
    let kappa0_lambda1 = sign_change(&first, |r| r.lambda1);
    let mut bisection_steps = 0;
    let kappa0 = sign_change(&first, |r| r.dir_value).map(|mut b| {
        while b.width() > BRACKET_WIDTH {
            let mid = b.estimate();
            let row = run_point(SaddleType::First, mid, base_n);
            bisection_steps += 1;
            match row.dir_value.filter(|_| row.ok()) {
                Some(v) if v < 0.0 => b.hi = mid,
                Some(_) => b.lo = mid,
                None => break,
            }
        }
        b
    });

    let second: Vec<&SweepRow> = rows
        .iter()
        .filter(|r| r.kind == SaddleType::Second && r.kappa < 4.0)
        .collect();
    let kappa1 = continuation_edge(&second)
        .or_else(|| sign_change(&second, |r| r.lambda1))
        .or_else(|| sign_change(&second, |r| r.lambda2));

    Ok(SweepResult {
        rows,
        kappa0,
        kappa0_lambda1,
        kappa1,
        bisection_steps,
    })
}

fn run_point(kind: SaddleType, kappa: f64, base_n: usize) -> SweepRow {
    let n = sweep_grid_n(base_n, kappa);
    let outcome = Grid::new(n).and_then(|g| find(kind, kappa, Arc::new(g)));
    SweepRow::from_outcome(kind, kappa, n, outcome)
}

fn continuation_edge(rows: &[&SweepRow]) -> Option<Bracket> {
    // Failed rows carry "newton failed at <k>"; recover the bracket from the
    // highest failing kappa.
    rows.iter()
        .filter(|r| r.profile.is_none())
        .filter_map(|r| parse_continuation_failure(&r.status))
        .fold(None, |acc: Option<Bracket>, b| match acc {
            Some(a) if a.hi >= b.hi => Some(a),
            _ => Some(b),
        })
}

fn parse_continuation_failure(status: &str) -> Option<Bracket> {
    let after = status.split_once("continuation stopped at kappa = ")?.1;
    let (last, rest) = after.split_once(' ')?;
    let failed = rest.split_once("newton failed at ")?.1;
    let failed = failed.split_once(')')?.0;
    Some(Bracket {
        lo: failed.parse().ok()?,
        hi: last.parse().ok()?,
    })
}
