//! Time integration of the profile heat flow
//! `h_t = h'' + cot(theta) h' - sin 2h / (2 sin^2 theta) - (kappa/2) sin(2h - 2 theta)`.
//!
//! Each step solves
//! `(1/dt + S - L) (h^{k+1} - h^k) = R(h^k)`
//! where `L = d^2/dtheta^2 + cot(theta) d/dtheta` is the centered linear
//! part, `R` the Euler-Lagrange residual (reaction terms at the old level),
//! and `S = 1/sin^2 theta + kappa` a diagonal stabilizer that bounds the
//! derivative of the reaction terms. The left-hand matrix is an M-matrix and
//! the explicit map `h -> (1/dt + S) h + N(h)` is increasing, so the scheme
//! obeys a discrete comparison principle for every `dt > 0`. Stationary
//! profiles are fixed points exactly, since `R = 0` gives a zero update.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::energy::{reduced_energy, residual_values, sup_norm, EnergyParams};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::profile::{Profile, WedgeSpec, WedgeVerdict};
use crate::tridiag::solve_thomas;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowDomain {
    /// Evolve all of `[0, pi]`.
    Full,
    /// Evolve `[0, pi/2]` with `h(pi/2) = k pi` and reconstruct the southern
    /// half by antipodal reflection. Requires hemispheric initial data.
    Half,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Stop once the sup-norm of the Euler-Lagrange residual drops below this.
    pub stationary_tol: f64,
    /// Record the trace every this many steps (the final state is always
    /// recorded).
    pub record_every: usize,
    pub wedge: Option<WedgeSpec>,
    pub blowup_grad_threshold: f64,
    pub domain: FlowDomain,
    /// On the full domain, project hemispheric data back onto the
    /// hemispheric class after every step. Rounding otherwise seeds the
    /// symmetry-breaking unstable modes of saddle-type limits.
    pub enforce_symmetry: bool,
}

impl FlowConfig {
    /// Defaults: `dt = min(1e-2, 0.5 / max(kappa, 1))`, `t_max = 1e3`,
    /// `stationary_tol = 1e-9`.
    pub fn for_kappa(kappa: f64) -> Self {
        Self {
            dt: default_dt(kappa),
            t_max: 1e3,
            stationary_tol: 1e-9,
            record_every: 10,
            wedge: None,
            blowup_grad_threshold: 1e3,
            domain: FlowDomain::Full,
            enforce_symmetry: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_max > 0.0) {
            return Err(Error::invalid("t_max", format!("must be positive, got {}", self.t_max)));
        }
        if !(self.stationary_tol > 0.0) {
            return Err(Error::invalid(
                "stationary_tol",
                format!("must be positive, got {}", self.stationary_tol),
            ));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every", "must be at least 1"));
        }
        if !(self.blowup_grad_threshold > 0.0) {
            return Err(Error::invalid("blowup_grad_threshold", "must be positive"));
        }
        if let Some(w) = &self.wedge {
            if !(w.tolerance >= 0.0) {
                return Err(Error::invalid("wedge", "tolerance must be nonnegative"));
            }
        }
        Ok(())
    }
}

pub fn default_dt(kappa: f64) -> f64 {
    1e-2f64.min(0.5 / kappa.max(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowStatus {
    Stationary,
    HorizonReached,
    BlowupSuspected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t: f64,
    pub energy: f64,
    pub sup_residual: f64,
    pub wedge_ok: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorEntry {
    pub step: usize,
    pub t: f64,
    pub wedge: Option<WedgeVerdict>,
    /// Distance to the antipodal reflection (`None` for odd boundary sums).
    pub hemispheric_defect: Option<f64>,
    pub degree: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub final_profile: Profile,
    pub status: FlowStatus,
    pub energy_trace: Vec<TraceEntry>,
    pub monitor_log: Vec<MonitorEntry>,
    pub steps: usize,
    pub t_final: f64,
    /// Largest one-step energy increase seen (negative if strictly
    /// decreasing throughout).
    pub max_energy_increase: f64,
    /// Whether every step kept `E_{k+1} <= E_k + 1e-10 (1 + |E_0|)`.
    pub energy_monotone: bool,
}

impl FlowResult {
    pub fn final_residual(&self) -> f64 {
        self.energy_trace.last().map_or(f64::NAN, |e| e.sup_residual)
    }

    pub fn final_energy(&self) -> f64 {
        self.energy_trace.last().map_or(f64::NAN, |e| e.energy)
    }

    /// `t,E,sup_residual,wedge_ok` CSV; `wedge_ok` is empty when no wedge
    /// was monitored. `header` lines are written as `# ` comments first.
    pub fn write_trace_csv<W: Write>(&self, mut out: W, header: &[String]) -> Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "E", "sup_residual", "wedge_ok"])?;
        for e in &self.energy_trace {
            let wedge = match e.wedge_ok {
                Some(true) => "1".to_string(),
                Some(false) => "0".to_string(),
                None => String::new(),
            };
            w.write_record([e.t.to_string(), e.energy.to_string(), e.sup_residual.to_string(), wedge])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Precomputed implicit matrix for a fixed grid, kappa, dt and Dirichlet
/// node `last`.
struct Stepper {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    last: usize,
}

impl Stepper {
    fn new(grid: &Grid, kappa: f64, dt: f64, last: usize) -> Self {
        let h = grid.dtheta();
        let inv_h2 = 1.0 / (h * h);
        let inv_2h = 0.5 / h;
        let mut lower = Vec::with_capacity(last);
        let mut diag = Vec::with_capacity(last);
        let mut upper = Vec::with_capacity(last);
        for i in 1..last {
            let s = grid.sin()[i];
            let cot = grid.cos()[i] / s;
            let stab = 1.0 / (s * s) + kappa;
            diag.push(1.0 / dt + stab + 2.0 * inv_h2);
            if i > 1 {
                lower.push(-(inv_h2 - cot * inv_2h));
            }
            if i + 1 < last {
                upper.push(-(inv_h2 + cot * inv_2h));
            }
        }
        Self {
            lower,
            diag,
            upper,
            last,
        }
    }

    /// Applies one step in place given the residual at the current values.
    fn advance(&self, values: &mut [f64], residual: &[f64]) {
        let delta = solve_thomas(&self.lower, &self.diag, &self.upper, &residual[1..self.last]);
        for (v, d) in values[1..self.last].iter_mut().zip(delta) {
            *v += d;
        }
    }
}

/// One IMEX step of size `dt` on the full interval.
pub fn step(p: &Profile, params: EnergyParams, dt: f64) -> Result<Profile> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    let grid = p.grid();
    let n = grid.n();
    let stepper = Stepper::new(grid, params.kappa(), dt, n);
    let r = residual_values(grid, p.values(), params.kappa(), n);
    let mut values = p.values().to_vec();
    stepper.advance(&mut values, &r);
    Ok(p.with_values(values))
}

/// Heuristic pole-concentration test: any non-finite value, or a slope above
/// the threshold within five nodes of either pole.
pub fn blowup_suspected(grid: &Grid, values: &[f64], threshold: f64) -> bool {
    if values.iter().any(|v| !v.is_finite()) {
        return true;
    }
    let d = grid.derivative(values);
    let n = grid.n();
    let band = 5.min(n / 2);
    (0..band)
        .chain(n + 1 - band..=n)
        .any(|i| d[i].abs() > threshold)
}

pub fn detect_blowup(p: &Profile, cfg: &FlowConfig) -> bool {
    blowup_suspected(p.grid(), p.values(), cfg.blowup_grad_threshold)
}

fn reflect_south(values: &mut [f64], k: i64, n: usize) {
    let shift = 2.0 * PI * k as f64;
    for i in n / 2 + 1..=n {
        values[i] = shift - values[n - i];
    }
}

/// Runs the flow until stationarity, the horizon, or suspected blowup.
pub fn run(p0: &Profile, params: EnergyParams, cfg: &FlowConfig) -> Result<FlowResult> {
    cfg.validate()?;
    let grid = p0.grid();
    let n = grid.n();
    let kappa = params.kappa();
    let hemispheric = p0.is_hemispheric(1e-12);
    let (last, k) = match cfg.domain {
        FlowDomain::Full => (n, p0.hemispheric_k().unwrap_or(0)),
        FlowDomain::Half => {
            let k = p0.hemispheric_k().filter(|_| hemispheric).ok_or_else(|| {
                Error::invalid("domain", "half-interval flow needs hemispheric initial data")
            })?;
            (grid.equator(), k)
        }
    };
    let symmetrize = cfg.domain == FlowDomain::Full && cfg.enforce_symmetry && hemispheric;
    let stepper = Stepper::new(grid, kappa, cfg.dt, last);

    let mut current = p0.clone();
    if cfg.domain == FlowDomain::Half {
        let mut v = current.values().to_vec();
        v[last] = k as f64 * PI;
        reflect_south(&mut v, k, n);
        current = current.with_values(v);
    } else if symmetrize {
        current.symmetrize();
    }

    let energy0 = reduced_energy(&current, params);
    let slack = 1e-10 * (1.0 + energy0.abs());
    let mut residual = residual_values(grid, current.values(), kappa, last);
    let mut energy = energy0;
    let mut steps = 0usize;
    let mut t = 0.0;
    let mut max_increase = f64::NEG_INFINITY;
    let mut monotone = true;
    let mut trace = Vec::new();
    let mut monitor = Vec::new();

    let record = |trace: &mut Vec<TraceEntry>,
                  monitor: &mut Vec<MonitorEntry>,
                  p: &Profile,
                  steps: usize,
                  t: f64,
                  energy: f64,
                  sup: f64| {
        let wedge = cfg.wedge.map(|w| p.wedge_check(w));
        trace.push(TraceEntry {
            t,
            energy,
            sup_residual: sup,
            wedge_ok: wedge.map(|w| w.is_inside()),
        });
        monitor.push(MonitorEntry {
            step: steps,
            t,
            wedge,
            hemispheric_defect: p.hemispheric_defect(),
            degree: p.degree(),
        });
    };

    record(&mut trace, &mut monitor, &current, 0, 0.0, energy, sup_norm(&residual));
    let horizon = cfg.t_max * (1.0 - 1e-12);

    let status = loop {
        let sup = sup_norm(&residual);
        if sup < cfg.stationary_tol {
            break FlowStatus::Stationary;
        }
        if t >= horizon {
            break FlowStatus::HorizonReached;
        }
        let mut values = current.values().to_vec();
        stepper.advance(&mut values, &residual);
        steps += 1;
        t = steps as f64 * cfg.dt;
        if blowup_suspected(grid, &values, cfg.blowup_grad_threshold) {
            break FlowStatus::BlowupSuspected;
        }
        if cfg.domain == FlowDomain::Half {
            reflect_south(&mut values, k, n);
        }
        current = current.with_values(values);
        if symmetrize {
            current.symmetrize();
        }
        let next_energy = reduced_energy(&current, params);
        let increase = next_energy - energy;
        max_increase = max_increase.max(increase);
        if increase > slack {
            monotone = false;
        }
        energy = next_energy;
        residual = residual_values(grid, current.values(), kappa, last);
        if steps.is_multiple_of(cfg.record_every) {
            record(&mut trace, &mut monitor, &current, steps, t, energy, sup_norm(&residual));
        }
    };

    if trace.last().is_some_and(|e| e.t != t) {
        record(&mut trace, &mut monitor, &current, steps, t, energy, sup_norm(&residual));
    }

    Ok(FlowResult {
        final_profile: current,
        status,
        energy_trace: trace,
        monitor_log: monitor,
        steps,
        t_final: t,
        max_energy_increase: max_increase,
        energy_monotone: monotone,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonVerdict {
    /// Largest `max(lower - upper, 0)` over all steps.
    pub max_violation: f64,
    /// Time at which the largest violation occurred.
    pub worst_time: f64,
    pub steps: usize,
    /// `(t, max(lower - upper))` at each recorded step.
    pub gaps: Vec<(f64, f64)>,
}

/// Co-evolves two ordered profiles with identical steps up to `cfg.t_max`
/// and measures any loss of ordering.
pub fn comparison_trial(
    lower: &Profile,
    upper: &Profile,
    params: EnergyParams,
    cfg: &FlowConfig,
) -> Result<ComparisonVerdict> {
    cfg.validate()?;
    if lower.grid().n() != upper.grid().n() {
        return Err(Error::LengthMismatch {
            expected: lower.grid().len(),
            got: upper.grid().len(),
        });
    }
    let gap = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(i, (x, y))| (i, x - y))
            .fold((0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc })
    };
    let (index, excess) = gap(lower.values(), upper.values());
    if excess > 1e-12 {
        return Err(Error::InitialOrderingViolated { index, excess });
    }
    let grid = lower.grid();
    let n = grid.n();
    let kappa = params.kappa();
    let stepper = Stepper::new(grid, kappa, cfg.dt, n);
    let mut a = lower.values().to_vec();
    let mut b = upper.values().to_vec();
    let mut verdict = ComparisonVerdict {
        max_violation: excess.max(0.0),
        worst_time: 0.0,
        steps: 0,
        gaps: vec![(0.0, excess)],
    };
    let horizon = cfg.t_max * (1.0 - 1e-12);
    let mut t = 0.0;
    while t < horizon {
        let ra = residual_values(grid, &a, kappa, n);
        let rb = residual_values(grid, &b, kappa, n);
        stepper.advance(&mut a, &ra);
        stepper.advance(&mut b, &rb);
        verdict.steps += 1;
        t = verdict.steps as f64 * cfg.dt;
        let (_, g) = gap(&a, &b);
        if g > verdict.max_violation {
            verdict.max_violation = g;
            verdict.worst_time = t;
        }
        if verdict.steps.is_multiple_of(cfg.record_every) {
            verdict.gaps.push((t, g));
        }
        if blowup_suspected(grid, &a, cfg.blowup_grad_threshold)
            || blowup_suspected(grid, &b, cfg.blowup_grad_threshold)
        {
            return Err(Error::Blowup { t });
        }
    }
    Ok(verdict)
}
