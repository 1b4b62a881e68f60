//! Lowest eigenpairs of second-variation operators by Sturm-sequence
//! bisection and inverse iteration, plus Morse-index classification.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{
    assemble_second_variation, residual_sup, second_variation_form, EnergyParams,
    TridiagonalOperator,
};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::profile::Profile;
use crate::tridiag::solve_pivoted;

/// Relative slack separating negative, marginal and positive eigenvalues.
pub const CLASSIFICATION_REL_TOL: f64 = 1e-6;

/// Largest residual accepted by [`classify`].
pub const STATIONARY_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Lowest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Node-indexed eigenvectors (zero at the poles), normalized in the
    /// sin-weighted inner product. The largest-magnitude entry is positive.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Number of eigenvalues below `-tol` (over the whole operator, not just
    /// the computed ones).
    pub morse_index: usize,
    /// Classification slack.
    pub tol: f64,
}

impl SpectrumResult {
    /// `|lambda_1| <= tol`: an eigenvalue is crossing zero.
    pub fn marginal(&self) -> bool {
        self.eigenvalues.first().is_some_and(|l| l.abs() <= self.tol)
    }
}

/// Number of eigenvalues of the symmetric tridiagonal matrix `(d, e)` that
/// are strictly below `x`.
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let pivmin = f64::MIN_POSITIVE.sqrt()
        * e.iter().fold(1.0f64, |acc, v| acc.max(v * v));
    let mut count = 0;
    let mut q = d[0] - x;
    for i in 0.. {
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        if i + 1 == d.len() {
            break;
        }
        q = d[i + 1] - x - e[i] * e[i] / q;
    }
    count
}

fn gershgorin(d: &[f64], e: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..d.len() {
        let mut r = 0.0;
        if i > 0 {
            r += e[i - 1].abs();
        }
        if i < e.len() {
            r += e[i].abs();
        }
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let pad = f64::EPSILON * (lo.abs().max(hi.abs()) + 1.0) * 4.0;
    (lo - pad, hi + pad)
}

fn bisect(d: &[f64], e: &[f64], index: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if hi - lo <= 2.0 * f64::EPSILON * (lo.abs().max(hi.abs())) {
            break;
        }
        if sturm_count(d, e, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn symmetric_apply(d: &[f64], e: &[f64], x: &[f64]) -> Vec<f64> {
    (0..d.len())
        .map(|i| {
            let mut y = d[i] * x[i];
            if i > 0 {
                y += e[i - 1] * x[i - 1];
            }
            if i < e.len() {
                y += e[i] * x[i + 1];
            }
            y
        })
        .collect()
}

fn inverse_iteration(
    d: &[f64],
    e: &[f64],
    lambda: f64,
    previous: &[Vec<f64>],
    seed: u64,
    scale: f64,
) -> Vec<f64> {
    let dim = d.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut shift = lambda;
    let mut shifted: Vec<f64> = d.iter().map(|v| v - shift).collect();
    for _ in 0..8 {
        let y = loop {
            match solve_pivoted(e, &shifted, e, &x) {
                Ok(y) => break y,
                Err(_) => {
                    shift += f64::EPSILON * scale;
                    shifted = d.iter().map(|v| v - shift).collect();
                }
            }
        };
        x = y;
        for _ in 0..2 {
            for v in previous {
                let c = dot(&x, v);
                x.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
            }
        }
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let r = symmetric_apply(d, e, &x);
        let res = r
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if res <= 1e-12 * scale {
            break;
        }
    }
    x
}

/// Lowest `k` eigenpairs of `op`.
pub fn eigs_lowest(op: &TridiagonalOperator, k: usize) -> Result<SpectrumResult> {
    let dim = op.dimension();
    if k == 0 || k > dim {
        return Err(Error::invalid(
            "k",
            format!("must lie in 1..={dim}, got {k}"),
        ));
    }
    let (d, e) = op.symmetric_form();
    let (lo, hi) = gershgorin(&d, &e);
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let eigenvalues: Vec<f64> = (0..k)
        .into_par_iter()
        .map(|j| bisect(&d, &e, j, lo, hi))
        .collect();

    let mut sym_vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (j, &lambda) in eigenvalues.iter().enumerate() {
        let v = inverse_iteration(&d, &e, lambda, &sym_vectors, 0x5eed_0000 + j as u64, scale);
        sym_vectors.push(v);
    }

    let eigenvectors = sym_vectors
        .iter()
        .map(|v| {
            let mut g = Vec::with_capacity(dim + 2);
            g.push(0.0);
            g.extend(v.iter().zip(op.weights()).map(|(x, w)| x / w.sqrt()));
            g.push(0.0);
            let peak = g
                .iter()
                .copied()
                .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if peak < 0.0 {
                g.iter_mut().for_each(|x| *x = -*x);
            }
            g
        })
        .collect();

    let largest = eigenvalues.iter().fold(1.0f64, |acc, l| acc.max(l.abs()));
    let tol = CLASSIFICATION_REL_TOL * largest;
    let morse_index = sturm_count(&d, &e, -tol);
    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors,
        morse_index,
        tol,
    })
}

/// Total number of eigenvalues of `op` below `x`.
pub fn count_below(op: &TridiagonalOperator, x: f64) -> usize {
    let (d, e) = op.symmetric_form();
    sturm_count(&d, &e, x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendreRow {
    pub l: usize,
    /// `-l(l+1)`.
    pub exact: f64,
    pub coarse: f64,
    pub fine: f64,
}

impl LegendreRow {
    pub fn coarse_deviation(&self) -> f64 {
        (self.coarse - self.exact).abs()
    }

    pub fn fine_deviation(&self) -> f64 {
        (self.fine - self.exact).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendreReport {
    pub n_coarse: usize,
    pub n_fine: usize,
    pub rows: Vec<LegendreRow>,
    pub max_deviation_coarse: f64,
    pub max_deviation_fine: f64,
    /// `log2(max_deviation_coarse / max_deviation_fine)`.
    pub observed_order: f64,
    /// Sin-weighted correlation of the `l = 1` eigenvector with `sin theta`.
    pub l1_sin_correlation: f64,
    /// Largest `|v(0)|, |v(pi)|` over the computed eigenvectors.
    pub endpoint_max: f64,
}

/// Eigenvalues of the discrete Legendre operator
/// `(1/sin)(sin f')' - f / sin^2`, obtained from the second-variation
/// operator at `h = 2 theta`, `kappa = 4` (which equals minus the Legendre
/// operator minus 4), on `grid` and on its refinement `2n`.
pub fn legendre_validation(grid: &Grid, l_max: usize) -> Result<LegendreReport> {
    if l_max == 0 {
        return Err(Error::invalid("l_max", "must be at least 1"));
    }
    let params = EnergyParams::new(4.0)?;
    let spectrum_on = |n: usize| -> Result<(SpectrumResult, Arc<Grid>)> {
        let g = Arc::new(Grid::new(n)?);
        let op = assemble_second_variation(&Profile::two_theta(g.clone()), params);
        Ok((eigs_lowest(&op, l_max)?, g))
    };
    let (coarse, coarse_grid) = spectrum_on(grid.n())?;
    let (fine, _) = spectrum_on(2 * grid.n())?;

    let rows: Vec<LegendreRow> = (1..=l_max)
        .map(|l| LegendreRow {
            l,
            exact: -((l * (l + 1)) as f64),
            coarse: -(coarse.eigenvalues[l - 1] + 4.0),
            fine: -(fine.eigenvalues[l - 1] + 4.0),
        })
        .collect();
    let max_dev = |f: fn(&LegendreRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let max_deviation_coarse = max_dev(LegendreRow::coarse_deviation);
    let max_deviation_fine = max_dev(LegendreRow::fine_deviation);

    let v1 = &coarse.eigenvectors[0];
    let s = coarse_grid.sin();
    let l1_sin_correlation = coarse_grid.inner_sin(v1, s).abs()
        / (coarse_grid.inner_sin(v1, v1) * coarse_grid.inner_sin(s, s)).sqrt();
    let endpoint_max = coarse
        .eigenvectors
        .iter()
        .map(|v| v[0].abs().max(v[v.len() - 1].abs()))
        .fold(0.0, f64::max);

    Ok(LegendreReport {
        n_coarse: grid.n(),
        n_fine: 2 * grid.n(),
        rows,
        max_deviation_coarse,
        max_deviation_fine,
        observed_order: (max_deviation_coarse / max_deviation_fine).log2(),
        l1_sin_correlation,
        endpoint_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Negative and positive directions both present.
    Saddle,
    /// All eigenvalues above `tol`.
    StrictLocalMinimum,
    /// Lowest eigenvalue within `tol` of zero.
    Marginal,
    /// Every computed eigenvalue is negative; raise `k` to resolve.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointReport {
    pub spectrum: SpectrumResult,
    /// Second variation in the direction `(h' - 1) sin theta`.
    pub explicit_direction_value: f64,
    pub residual: f64,
    pub verdict: Verdict,
}

/// Spectrum of the second variation at an (approximately) stationary
/// profile, together with the explicit-direction value.
pub fn classify(p: &Profile, params: EnergyParams, k: usize) -> Result<CriticalPointReport> {
    let residual = residual_sup(p, params);
    if !(residual < STATIONARY_LIMIT) {
        return Err(Error::NotStationary {
            residual,
            limit: STATIONARY_LIMIT,
        });
    }
    let op = assemble_second_variation(p, params);
    let spectrum = eigs_lowest(&op, k)?;
    let explicit_direction_value = second_variation_form(p, params, &p.perturbation_direction())?;
    let lowest = spectrum.eigenvalues[0];
    let verdict = if lowest.abs() <= spectrum.tol {
        Verdict::Marginal
    } else if spectrum.morse_index == 0 {
        Verdict::StrictLocalMinimum
    } else if spectrum.eigenvalues.iter().any(|l| *l > spectrum.tol) {
        Verdict::Saddle
    } else {
        Verdict::Unresolved
    };
    Ok(CriticalPointReport {
        spectrum,
        explicit_direction_value,
        residual,
        verdict,
    })
}
