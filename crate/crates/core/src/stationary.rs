//! Newton solver for the discrete Euler-Lagrange equation and
//! natural-parameter continuation in kappa.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::{
    assemble_second_variation, reduced_energy, residual_jacobian, residual_values, sup_norm,
    EnergyParams,
};
use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::spectrum::eigs_lowest;
use crate::tridiag::solve_pivoted;

/// Smallest accepted line-search factor.
const MIN_DAMPING: f64 = 1.0 / (1u64 << 20) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub max_iter: usize,
    pub residual_tol: f64,
    /// Initial line-search factor in `(0, 1]`.
    pub damping: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            max_iter: 50,
            residual_tol: 1e-10,
            damping: 1.0,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be at least 1"));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::invalid("residual_tol", "must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid("damping", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSolution {
    pub profile: Profile,
    pub iterations: usize,
    /// Sup-norm residual before each iteration and at the end.
    pub residual_history: Vec<f64>,
    /// Stopped because the Newton update fell below rounding of the values
    /// while the residual sat at its floating-point floor above the target.
    pub at_rounding_floor: bool,
}

impl NewtonSolution {
    pub fn residual(&self) -> f64 {
        *self.residual_history.last().expect("history is never empty")
    }
}

/// Damped Newton iteration on the interior residual. The Jacobian is the
/// exact derivative of the discrete residual.
pub fn newton_solve(p0: &Profile, params: EnergyParams, cfg: &NewtonConfig) -> Result<NewtonSolution> {
    cfg.validate()?;
    let grid = p0.grid();
    let n = grid.n();
    let kappa = params.kappa();
    let mut values = p0.values().to_vec();
    let mut residual = residual_values(grid, &values, kappa, n);
    let mut sup = sup_norm(&residual);
    let mut history = vec![sup];
    let mut iterations = 0;

    loop {
        if sup < cfg.residual_tol {
            return Ok(NewtonSolution {
                profile: p0.with_values(values),
                iterations,
                residual_history: history,
                at_rounding_floor: false,
            });
        }
        if iterations == cfg.max_iter {
            return Err(Error::NewtonDiverged {
                iterations,
                residual: sup,
            });
        }
        let (lower, diag, upper) = residual_jacobian(grid, &values, kappa, n);
        let rhs: Vec<f64> = residual[1..n].iter().map(|r| -r).collect();
        let delta = solve_pivoted(&lower, &diag, &upper, &rhs)
            .map_err(|row| Error::SingularJacobian { row: row + 1 })?;
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::SingularJacobian { row: 0 });
        }

        let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let step_size = sup_norm(&delta);
        let mut alpha = cfg.damping;
        let accepted = loop {
            let mut trial = values.clone();
            for (v, d) in trial[1..n].iter_mut().zip(&delta) {
                *v += alpha * d;
            }
            let r = residual_values(grid, &trial, kappa, n);
            let s = sup_norm(&r);
            if s < sup {
                break Some((trial, r, s));
            }
            alpha *= 0.5;
            if alpha < MIN_DAMPING {
                break None;
            }
        };
        iterations += 1;
        match accepted {
            Some((trial, r, s)) => {
                values = trial;
                residual = r;
                sup = s;
                history.push(sup);
            }
            None if step_size <= 1e-12 * scale => {
                return Ok(NewtonSolution {
                    profile: p0.with_values(values),
                    iterations,
                    residual_history: history,
                    at_rounding_floor: true,
                });
            }
            None => return Err(Error::NewtonStalled { residual: sup }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub kappa: f64,
    pub profile: Profile,
    pub energy: f64,
    pub residual: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BranchEnd {
    ReachedTarget,
    /// Newton failed at `failed_at`; the branch is known up to `last_ok`.
    /// A fold or bifurcation is suspected inside the bracket.
    NewtonFailure { last_ok: f64, failed_at: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    /// Sign of the continuation step.
    pub direction: f64,
    pub end: BranchEnd,
}

impl Branch {
    pub fn last_kappa(&self) -> f64 {
        self.points.last().expect("branch has a start point").kappa
    }

    /// Writes `branch.csv` (`kappa,E,lambda1,lambda2`) and one profile CSV per
    /// point into `dir`.
    pub fn write_run_dir(&self, dir: &Path, header: &[String]) -> Result<()> {
        fs::create_dir_all(dir.join("profiles"))?;
        let mut file = fs::File::create(dir.join("branch.csv"))?;
        for line in header {
            writeln!(file, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["kappa", "E", "lambda1", "lambda2"])?;
        for p in &self.points {
            w.write_record([
                p.kappa.to_string(),
                p.energy.to_string(),
                p.lambda1.to_string(),
                p.lambda2.to_string(),
            ])?;
            let f = fs::File::create(dir.join("profiles").join(format!("kappa_{}.csv", p.kappa)))?;
            let extra: Vec<(&str, String)> = header
                .iter()
                .filter_map(|h| h.split_once('='))
                .map(|(k, v)| (k, v.to_string()))
                .collect();
            p.profile.write_csv(f, Some(p.kappa), &extra)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn branch_point(profile: Profile, kappa: f64, residual: f64) -> Result<BranchPoint> {
    let params = EnergyParams::new(kappa)?;
    let spectrum = eigs_lowest(&assemble_second_variation(&profile, params), 2)?;
    Ok(BranchPoint {
        kappa,
        energy: reduced_energy(&profile, params),
        residual,
        lambda1: spectrum.eigenvalues[0],
        lambda2: spectrum.eigenvalues[1],
        profile,
    })
}

/// Natural-parameter continuation from a solution at `start_kappa` towards
/// `target_kappa` in steps of `dk`; each accepted profile seeds the next
/// Newton solve.
pub fn continue_branch(
    start_kappa: f64,
    start: &Profile,
    target_kappa: f64,
    dk: f64,
    cfg: &NewtonConfig,
) -> Result<Branch> {
    let distance = target_kappa - start_kappa;
    if !(dk.is_finite() && dk != 0.0) {
        return Err(Error::invalid("dk", "must be finite and nonzero"));
    }
    if distance != 0.0 && distance.signum() != dk.signum() {
        return Err(Error::invalid("dk", "sign must point towards the target"));
    }
    let first = newton_solve(start, EnergyParams::new(start_kappa)?, cfg)?;
    let mut points = vec![branch_point(first.profile, start_kappa, first.residual_history[first.residual_history.len() - 1])?];
    let steps = (distance / dk - 1e-9).ceil().max(0.0) as usize;
    let mut end = BranchEnd::ReachedTarget;

    for j in 1..=steps {
        let kappa = if j == steps {
            target_kappa
        } else {
            start_kappa + j as f64 * dk
        };
        let params = EnergyParams::new(kappa)?;
        let seed = &points.last().expect("nonempty").profile;
        match newton_solve(seed, params, cfg) {
            Ok(sol) => {
                let residual = sol.residual();
                points.push(branch_point(sol.profile, kappa, residual)?);
            }
            Err(_) if j == 1 => return Err(Error::ContinuationStartFailed { kappa: start_kappa }),
            Err(_) => {
                end = BranchEnd::NewtonFailure {
                    last_ok: points.last().expect("nonempty").kappa,
                    failed_at: kappa,
                };
                break;
            }
        }
    }
    Ok(Branch {
        points,
        direction: dk.signum(),
        end,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::sync::Arc;

    fn grid(n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(n).unwrap())
    }

    #[test]
    fn converges_to_two_theta() {
        let g = grid(256);
        let p0 = Profile::from_fn(g.clone(), 0, 2, |t| 2.0 * t + 0.05 * (2.0 * t).sin()).unwrap();
        let sol = newton_solve(&p0, EnergyParams::new(4.0).unwrap(), &NewtonConfig::default()).unwrap();
        assert!(sol.profile.sup_distance(&Profile::two_theta(g)) < 1e-8);
        // quadratic convergence: each residual at most C * previous^2
        let h = &sol.residual_history;
        for w in h.windows(2).filter(|w| w[0] < 1e-2) {
            assert!(w[1] <= 10.0 * w[0] * w[0] + 1e-9, "{h:?}");
        }
    }

    #[test]
    fn exact_start_returns_unchanged() {
        let g = grid(128);
        let p = Profile::identity(g);
        let sol = newton_solve(&p, EnergyParams::new(7.0).unwrap(), &NewtonConfig::default()).unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.profile.values(), p.values());
    }

    #[test]
    fn max_iter_error_carries_residual() {
        let g = grid(128);
        let p0 = Profile::from_fn(g, 0, 2, |t| 2.0 * t + 0.5 * (2.0 * t).sin()).unwrap();
        let cfg = NewtonConfig {
            max_iter: 1,
            ..NewtonConfig::default()
        };
        match newton_solve(&p0, EnergyParams::new(4.0).unwrap(), &cfg) {
            Err(Error::NewtonDiverged { iterations, residual }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = NewtonConfig::default();
        cfg.damping = 0.0;
        assert!(cfg.validate().is_err());
        cfg.damping = 1.0;
        cfg.max_iter = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn single_point_branch() {
        let g = grid(128);
        let b = continue_branch(4.0, &Profile::two_theta(g), 4.0, 0.05, &NewtonConfig::default()).unwrap();
        assert_eq!(b.points.len(), 1);
        assert_eq!(b.end, BranchEnd::ReachedTarget);
        assert!((b.points[0].lambda1 + 2.0).abs() < 1e-2);
    }

    #[test]
    fn short_branch_above_four() {
        let g = grid(256);
        let b = continue_branch(4.0, &Profile::two_theta(g), 4.5, 0.05, &NewtonConfig::default()).unwrap();
        assert_eq!(b.points.len(), 11);
        assert_eq!(b.last_kappa(), 4.5);
        assert!(b.points.windows(2).all(|w| w[1].kappa > w[0].kappa));
        for p in &b.points {
            assert_eq!(p.profile.class(), (0, 2));
            assert_eq!(p.profile.degree(), 0);
            assert!(p.profile.is_hemispheric(1e-8));
            assert!(p.lambda1 < 0.0 && p.lambda2 > 0.0);
        }
        for w in b.points.windows(2) {
            assert!((w[1].lambda1 - w[0].lambda1).abs() <= 10.0 * 0.05);
            assert!((w[1].lambda2 - w[0].lambda2).abs() <= 10.0 * 0.05);
        }
    }

    #[test]
    fn rejects_wrong_direction() {
        let g = grid(64);
        let p = Profile::two_theta(g);
        assert!(continue_branch(4.0, &p, 4.5, -0.05, &NewtonConfig::default()).is_err());
        assert!(continue_branch(4.0, &p, 4.5, 0.0, &NewtonConfig::default()).is_err());
    }
}
