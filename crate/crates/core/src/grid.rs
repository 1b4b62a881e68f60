//! Uniform discretization of `[0, pi]` with sin-weighted trapezoid quadrature.
//!
//! Trigonometric tables are built once and mirrored about the equator, so
//! `sin[i] == sin[n - i]` and `cos[i] == -cos[n - i]` hold bitwise and the
//! pole entries of `sin` are exactly zero.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Smallest accepted number of subintervals.
pub const MIN_SUBDIVISIONS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    dtheta: f64,
    nodes: Vec<f64>,
    half_nodes: Vec<f64>,
    sin: Vec<f64>,
    cos: Vec<f64>,
    sin_half: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Builds the grid `theta_i = i * pi / n`, `i = 0..=n`.
    pub fn new(n: usize) -> Result<Self> {
        if !n.is_multiple_of(2) {
            return Err(Error::OddSubdivision { n });
        }
        if n < MIN_SUBDIVISIONS {
            return Err(Error::GridTooCoarse {
                n,
                min: MIN_SUBDIVISIONS,
            });
        }
        let half = n / 2;
        let dtheta = PI / n as f64;

        let mut nodes: Vec<f64> = (0..=n).map(|i| i as f64 * dtheta).collect();
        nodes[half] = FRAC_PI_2;
        nodes[n] = PI;

        let mut sin = vec![0.0; n + 1];
        let mut cos = vec![0.0; n + 1];
        for i in 0..=half {
            sin[i] = nodes[i].sin();
            cos[i] = nodes[i].cos();
            sin[n - i] = sin[i];
            cos[n - i] = -cos[i];
        }
        sin[0] = 0.0;
        sin[n] = 0.0;
        sin[half] = 1.0;
        cos[half] = 0.0;
        cos[0] = 1.0;
        cos[n] = -1.0;

        let half_nodes: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * dtheta).collect();
        let mut sin_half = vec![0.0; n];
        for i in 0..half {
            sin_half[i] = half_nodes[i].sin();
            sin_half[n - 1 - i] = sin_half[i];
        }

        let weights = sin.iter().map(|s| s * dtheta).collect();

        Ok(Self {
            n,
            dtheta,
            nodes,
            half_nodes,
            sin,
            cos,
            sin_half,
            weights,
        })
    }

    /// Number of subintervals.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of nodes, `n + 1`.
    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the equator node `theta = pi/2`.
    pub fn equator(&self) -> usize {
        self.n / 2
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Midpoints `theta_{i+1/2}`, `i = 0..n`.
    pub fn half_nodes(&self) -> &[f64] {
        &self.half_nodes
    }

    pub fn sin(&self) -> &[f64] {
        &self.sin
    }

    pub fn cos(&self) -> &[f64] {
        &self.cos
    }

    /// `sin(theta_{i+1/2})`, `i = 0..n`.
    pub fn sin_half(&self) -> &[f64] {
        &self.sin_half
    }

    /// Quadrature weights `sin(theta_i) * dtheta`; zero at both poles.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Approximates `int_0^pi f(theta) sin(theta) dtheta` from nodal values.
    pub fn quad_sin(&self, values: &[f64]) -> Result<f64> {
        self.check_values(values)?;
        Ok(self.quad_sin_unchecked(values))
    }

    pub(crate) fn quad_sin_unchecked(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(values)
            .skip(1)
            .take(self.n - 1)
            .map(|(w, v)| w * v)
            .sum()
    }

    /// Sin-weighted inner product of two nodal arrays.
    pub fn inner_sin(&self, a: &[f64], b: &[f64]) -> f64 {
        (1..self.n).map(|i| self.weights[i] * a[i] * b[i]).sum()
    }

    pub(crate) fn check_values(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(())
    }

    /// Nodal derivative: centered differences inside, second-order one-sided
    /// differences at the two endpoints.
    pub fn derivative(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n;
        let h = self.dtheta;
        let mut d = vec![0.0; n + 1];
        for i in 1..n {
            d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
        }
        d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
        d[n] = (3.0 * values[n] - 4.0 * values[n - 1] + values[n - 2]) / (2.0 * h);
        d
    }
}

/// Convenience constructor mirroring [`Grid::new`].
pub fn make_grid(n: usize) -> Result<Grid> {
    Grid::new(n)
}
