//! Reduced energy, Euler-Lagrange residual and second variation.
//!
//! The residual uses the non-divergence centered stencil
//! `h'' + cot(theta) h'`, which is exact on the linear solutions `theta`
//! and `2 theta`. The second-variation operator uses the divergence-form
//! stencil with half-node sines, so it is exactly self-adjoint in the
//! sin-weighted inner product.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::profile::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    kappa: f64,
}

impl EnergyParams {
    pub fn new(kappa: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(Error::invalid(
                "kappa",
                format!("must be finite and nonnegative, got {kappa}"),
            ));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

/// Nodal energy density `h'^2 + sin^2 h / sin^2 theta + kappa sin^2(h - theta)`
/// (to be integrated against `sin theta dtheta`). Zero at the poles, which
/// carry zero weight.
fn energy_density(p: &Profile, kappa: f64) -> Vec<f64> {
    let grid = p.grid();
    let d = p.derivative();
    let h = p.values();
    let n = grid.n();
    let mut out = vec![0.0; n + 1];
    for i in 1..n {
        let s = grid.sin()[i];
        let t = grid.nodes()[i];
        let sh = h[i].sin();
        let st = (h[i] - t).sin();
        out[i] = d[i] * d[i] + sh * sh / (s * s) + kappa * st * st;
    }
    out
}

/// `E(h) = 1/2 int_0^pi [h'^2 + sin^2 h / sin^2 theta + kappa sin^2(h - theta)] sin theta dtheta`.
pub fn reduced_energy(p: &Profile, params: EnergyParams) -> f64 {
    0.5 * p
        .grid()
        .quad_sin_unchecked(&energy_density(p, params.kappa))
}

/// Full micromagnetic energy of the axisymmetric field, `2 pi E(h)`.
pub fn full_energy(p: &Profile, params: EnergyParams) -> f64 {
    2.0 * PI * reduced_energy(p, params)
}

/// Euler-Lagrange residual
/// `h'' + cot(theta) h' - sin 2h / (2 sin^2 theta) - (kappa/2) sin(2h - 2 theta)`
/// at interior nodes. The returned array is node-indexed; entries at the two
/// Dirichlet poles are zero.
pub fn el_residual(p: &Profile, params: EnergyParams) -> Vec<f64> {
    residual_values(p.grid(), p.values(), params.kappa, p.grid().n())
}

/// Residual for raw values on nodes `0..=last`, Dirichlet at `0` and `last`.
pub(crate) fn residual_values(grid: &Grid, h: &[f64], kappa: f64, last: usize) -> Vec<f64> {
    let dt = grid.dtheta();
    let inv_dt2 = 1.0 / (dt * dt);
    let inv_2dt = 0.5 / dt;
    let mut r = vec![0.0; last + 1];
    for i in 1..last {
        let s = grid.sin()[i];
        let cot = grid.cos()[i] / s;
        let t = grid.nodes()[i];
        r[i] = (h[i + 1] - 2.0 * h[i] + h[i - 1]) * inv_dt2
            + cot * (h[i + 1] - h[i - 1]) * inv_2dt
            - (2.0 * h[i]).sin() / (2.0 * s * s)
            - 0.5 * kappa * (2.0 * h[i] - 2.0 * t).sin();
    }
    r
}

/// Sup-norm of [`el_residual`].
pub fn residual_sup(p: &Profile, params: EnergyParams) -> f64 {
    sup_norm(&el_residual(p, params))
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Pointwise second-variation potential
/// `cos 2h / sin^2 theta + kappa cos(2h - 2 theta)` at interior nodes
/// (node-indexed, zero at the poles).
pub fn potential(p: &Profile, params: EnergyParams) -> Vec<f64> {
    let grid = p.grid();
    let h = p.values();
    let n = grid.n();
    let mut v = vec![0.0; n + 1];
    for i in 1..n {
        let s = grid.sin()[i];
        let t = grid.nodes()[i];
        v[i] = (2.0 * h[i]).cos() / (s * s) + params.kappa * (2.0 * h[i] - 2.0 * t).cos();
    }
    v
}

/// Tridiagonal Jacobian of [`residual_values`] with respect to the interior
/// values `h_1..h_{last-1}`: `(lower, diag, upper)`.
pub(crate) fn residual_jacobian(
    grid: &Grid,
    h: &[f64],
    kappa: f64,
    last: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let dt = grid.dtheta();
    let inv_dt2 = 1.0 / (dt * dt);
    let inv_2dt = 0.5 / dt;
    let dim = last - 1;
    let mut lower = Vec::with_capacity(dim.saturating_sub(1));
    let mut diag = Vec::with_capacity(dim);
    let mut upper = Vec::with_capacity(dim.saturating_sub(1));
    for i in 1..last {
        let s = grid.sin()[i];
        let cot = grid.cos()[i] / s;
        let t = grid.nodes()[i];
        diag.push(
            -2.0 * inv_dt2
                - (2.0 * h[i]).cos() / (s * s)
                - kappa * (2.0 * h[i] - 2.0 * t).cos(),
        );
        if i + 1 < last {
            upper.push(inv_dt2 + cot * inv_2dt);
        }
        if i > 1 {
            lower.push(inv_dt2 - cot * inv_2dt);
        }
    }
    (lower, diag, upper)
}

/// Quadratic form
/// `int [g'^2 + (cos 2h / sin^2 theta + kappa cos(2h - 2 theta)) g^2] sin theta dtheta`
/// with centered nodal derivatives. `g` must vanish at both poles.
pub fn second_variation_form(p: &Profile, params: EnergyParams, g: &[f64]) -> Result<f64> {
    let grid = p.grid();
    grid.check_values(g)?;
    let n = grid.n();
    for index in [0, n] {
        if g[index] != 0.0 {
            return Err(Error::NonzeroBoundaryPerturbation {
                index,
                value: g[index],
            });
        }
    }
    let dg = grid.derivative(g);
    let v = potential(p, params);
    let density: Vec<f64> = (0..=n).map(|i| dg[i] * dg[i] + v[i] * g[i] * g[i]).collect();
    Ok(grid.quad_sin_unchecked(&density))
}

/// Symmetric-in-weights tridiagonal operator on the interior nodes:
/// `A = W^{-1} M` with `W = diag(weights)` and `M` symmetric tridiagonal,
/// `M[j][j+1] = coupling[j]`, `A[j][j] = diag[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    diag: Vec<f64>,
    coupling: Vec<f64>,
    weights: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn from_parts(diag: Vec<f64>, coupling: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let dim = diag.len();
        if dim == 0 {
            return Err(Error::invalid("diag", "operator must be nonempty"));
        }
        if coupling.len() + 1 != dim {
            return Err(Error::LengthMismatch {
                expected: dim - 1,
                got: coupling.len(),
            });
        }
        if weights.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                got: weights.len(),
            });
        }
        if let Some(index) = weights.iter().position(|w| !(*w > 0.0)) {
            return Err(Error::invalid(
                "weights",
                format!("weight {index} must be positive"),
            ));
        }
        Ok(Self {
            diag,
            coupling,
            weights,
        })
    }

    pub fn dimension(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Adds `c` to every diagonal entry (a constant potential shift).
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.diag.iter_mut().for_each(|d| *d += c);
        out
    }

    /// `A x` for an interior vector `x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let dim = self.dimension();
        (0..dim)
            .map(|j| {
                let mut y = self.diag[j] * x[j];
                if j > 0 {
                    y += self.coupling[j - 1] * x[j - 1] / self.weights[j];
                }
                if j + 1 < dim {
                    y += self.coupling[j] * x[j + 1] / self.weights[j];
                }
                y
            })
            .collect()
    }

    /// Weighted inner product `sum w_j a_j b_j` on interior vectors.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    /// `<A x, x>_w`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.inner(&self.apply(x), x)
    }

    /// Symmetric matrix `W^{1/2} A W^{-1/2}` as `(diagonal, off-diagonal)`.
    pub fn symmetric_form(&self) -> (Vec<f64>, Vec<f64>) {
        let off = self
            .coupling
            .iter()
            .enumerate()
            .map(|(j, c)| c / (self.weights[j] * self.weights[j + 1]).sqrt())
            .collect();
        (self.diag.clone(), off)
    }
}

/// Divergence-form discretization of
/// `A g = -(1/sin theta)(sin theta g')' + V g` on the interior nodes, with
/// Dirichlet rows eliminated.
pub fn assemble_second_variation(p: &Profile, params: EnergyParams) -> TridiagonalOperator {
    let grid = p.grid();
    let n = grid.n();
    let dt = grid.dtheta();
    let v = potential(p, params);
    let sh = grid.sin_half();
    let mut diag = Vec::with_capacity(n - 1);
    let mut coupling = Vec::with_capacity(n - 2);
    let mut weights = Vec::with_capacity(n - 1);
    for i in 1..n {
        let w = grid.weights()[i];
        diag.push((sh[i] + sh[i - 1]) / (dt * w) + v[i]);
        weights.push(w);
        if i + 1 < n {
            coupling.push(-sh[i] / dt);
        }
    }
    TridiagonalOperator {
        diag,
        coupling,
        weights,
    }
}

/// `f(x, y) = sin 2x - sin 2y - kappa sin(2y - 2x) sin^2 x`.
pub fn certificate_f(kappa: f64, x: f64, y: f64) -> f64 {
    (2.0 * x).sin() - (2.0 * y).sin() - kappa * (2.0 * y - 2.0 * x).sin() * x.sin() * x.sin()
}

/// `lambda(x, y) = cos 2x - cos 2y - kappa sin(2y - 2x) sin x cos x`.
pub fn certificate_lambda(kappa: f64, x: f64, y: f64) -> f64 {
    (2.0 * x).cos() - (2.0 * y).cos() - kappa * (2.0 * y - 2.0 * x).sin() * x.sin() * x.cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpectedSign {
    Nonnegative,
    Nonpositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub name: String,
    pub expected: ExpectedSign,
    pub min: f64,
    pub max: f64,
    /// Sample points whose sign is wrong by more than the slack.
    pub violations: usize,
    /// Worst offending `(x, y, value)`, if any.
    pub worst: Option<(f64, f64, f64)>,
}

impl CertificateCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub kappa: f64,
    pub samples: usize,
    pub slack: f64,
    pub checks: Vec<CertificateCheck>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CertificateCheck::passed)
    }
}

/// Samples the sign claims behind the derivative bounds and the
/// explicit-direction certificate on the wedges:
/// `f >= 0` on W1, `lambda >= 0` on `W1 ∩ {x <= pi/4}`, `lambda <= 0` and
/// `f <= 0` on W2.
pub fn wedge_certificates(kappa: f64, samples: usize) -> Result<CertificateReport> {
    if !(kappa >= 4.0) {
        return Err(Error::invalid("kappa", format!("must be >= 4, got {kappa}")));
    }
    if samples < 100 {
        return Err(Error::invalid("samples", "need at least 100 per axis"));
    }
    // Rounding in sin(2y - 2x) grows with kappa.
    let slack = 1e-12 * (1.0 + kappa);
    let w1 = |x: f64| (PI, PI + x);
    let w2 = |x: f64| (x, 2.0 * x);
    let f = |x, y| certificate_f(kappa, x, y);
    let lam = |x, y| certificate_lambda(kappa, x, y);
    let checks = vec![
        sample_region("f on W1", ExpectedSign::Nonnegative, FRAC_PI_2, w1, f, samples, slack),
        sample_region("lambda on W1, x <= pi/4", ExpectedSign::Nonnegative, FRAC_PI_4, w1, lam, samples, slack),
        sample_region("lambda on W2", ExpectedSign::Nonpositive, FRAC_PI_2, w2, lam, samples, slack),
        sample_region("f on W2", ExpectedSign::Nonpositive, FRAC_PI_2, w2, f, samples, slack),
    ];
    Ok(CertificateReport {
        kappa,
        samples,
        slack,
        checks,
    })
}

fn sample_region(
    name: &str,
    expected: ExpectedSign,
    x_max: f64,
    bounds: impl Fn(f64) -> (f64, f64),
    func: impl Fn(f64, f64) -> f64,
    samples: usize,
    slack: f64,
) -> CertificateCheck {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut worst: Option<(f64, f64, f64)> = None;
    let steps = (samples - 1) as f64;
    for i in 0..samples {
        let x = x_max * i as f64 / steps;
        let (lo, hi) = bounds(x);
        for j in 0..samples {
            let y = lo + (hi - lo) * j as f64 / steps;
            let v = func(x, y);
            min = min.min(v);
            max = max.max(v);
            let wrong = match expected {
                ExpectedSign::Nonnegative => -v,
                ExpectedSign::Nonpositive => v,
            };
            if wrong > slack {
                violations += 1;
                if worst.is_none_or(|(_, _, w)| wrong > w.abs()) {
                    worst = Some((x, y, v));
                }
            }
        }
    }
    CertificateCheck {
        name: name.to_string(),
        expected,
        min,
        max,
        violations,
        worst,
    }
}
