//! Discrete profiles `h: [0, pi] -> R` with fixed boundary class
//! `h(0) = m pi`, `h(pi) = n pi`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Absolute slack accepted when a stored endpoint value is matched against
/// its boundary integer times pi.
const BOUNDARY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    grid: Arc<Grid>,
    values: Vec<f64>,
    m: i64,
    n_end: i64,
}

impl Profile {
    /// Wraps nodal values. Endpoint values must equal `m pi` and `n_end pi`
    /// up to rounding; they are then stored as the exact products.
    pub fn new(grid: Arc<Grid>, mut values: Vec<f64>, m: i64, n_end: i64) -> Result<Self> {
        grid.check_values(&values)?;
        let last = grid.n();
        for (index, k) in [(0, m), (last, n_end)] {
            let expected = k as f64 * PI;
            if (values[index] - expected).abs() > BOUNDARY_SLACK {
                return Err(Error::BoundaryMismatch {
                    index,
                    value: values[index],
                    expected,
                });
            }
            values[index] = expected;
        }
        Ok(Self {
            grid,
            values,
            m,
            n_end,
        })
    }

    /// Samples `f` at the grid nodes; the endpoints are overwritten with the
    /// boundary integers times pi.
    pub fn from_fn(grid: Arc<Grid>, m: i64, n_end: i64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut values: Vec<f64> = grid.nodes().iter().map(|&t| f(t)).collect();
        values[0] = m as f64 * PI;
        let last = grid.n();
        values[last] = n_end as f64 * PI;
        Self::new(grid, values, m, n_end)
    }

    /// `h = theta`, the profile of the normal field.
    pub fn identity(grid: Arc<Grid>) -> Self {
        Self::from_fn(grid, 0, 1, |t| t).expect("identity profile is valid")
    }

    /// `h = 2 theta`.
    pub fn two_theta(grid: Arc<Grid>) -> Self {
        Self::from_fn(grid, 0, 2, |t| 2.0 * t).expect("2 theta profile is valid")
    }

    /// `h = pi`.
    pub fn constant_pi(grid: Arc<Grid>) -> Self {
        Self::from_fn(grid, 1, 1, |_| PI).expect("constant profile is valid")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn n_end(&self) -> i64 {
        self.n_end
    }

    /// Boundary class `(m, n)`.
    pub fn class(&self) -> (i64, i64) {
        (self.m, self.n_end)
    }

    /// `k = (m + n) / 2` when the boundary sum is even.
    pub fn hemispheric_k(&self) -> Option<i64> {
        let sum = self.m + self.n_end;
        (sum % 2 == 0).then_some(sum / 2)
    }

    /// Replaces the interior values; endpoints stay pinned.
    pub(crate) fn with_values(&self, mut values: Vec<f64>) -> Self {
        let last = self.grid.n();
        values[0] = self.m as f64 * PI;
        values[last] = self.n_end as f64 * PI;
        Self {
            grid: Arc::clone(&self.grid),
            values,
            m: self.m,
            n_end: self.n_end,
        }
    }

    /// Nodal derivative `h'` (second order everywhere).
    pub fn derivative(&self) -> Vec<f64> {
        self.grid.derivative(&self.values)
    }

    /// Mapping degree `(cos h(0) - cos h(pi)) / 2`, evaluated exactly from
    /// the boundary integers. Always one of `-1, 0, 1`.
    pub fn degree(&self) -> i64 {
        let parity = |k: i64| if k.rem_euclid(2) == 0 { 1 } else { -1 };
        (parity(self.m) - parity(self.n_end)) / 2
    }

    /// Mapping degree by quadrature of `(1/2) int h' sin h dtheta`.
    pub fn degree_integral(&self) -> f64 {
        let d = self.derivative();
        let h = self.grid.dtheta();
        let n = self.grid.n();
        let integrand: Vec<f64> = d
            .iter()
            .zip(&self.values)
            .map(|(dh, v)| dh * v.sin())
            .collect();
        let interior: f64 = integrand[1..n].iter().sum();
        0.5 * h * (interior + 0.5 * (integrand[0] + integrand[n]))
    }

    /// `theta -> 2 pi k - h(pi - theta)`.
    pub fn antipodal_reflect(&self) -> Result<Self> {
        let k = self
            .hemispheric_k()
            .ok_or(Error::NotHemisphericCompatible {
                sum: self.m + self.n_end,
            })?;
        let shift = 2.0 * PI * k as f64;
        let values: Vec<f64> = self.values.iter().rev().map(|v| shift - v).collect();
        let m = 2 * k - self.n_end;
        let n_end = 2 * k - self.m;
        let mut out = Self {
            grid: Arc::clone(&self.grid),
            values,
            m,
            n_end,
        };
        let last = self.grid.n();
        out.values[0] = m as f64 * PI;
        out.values[last] = n_end as f64 * PI;
        Ok(out)
    }

    /// Largest pointwise gap between `h` and its antipodal reflection, or
    /// `None` when the boundary sum is odd.
    pub fn hemispheric_defect(&self) -> Option<f64> {
        let k = self.hemispheric_k()?;
        let shift = 2.0 * PI * k as f64;
        let n = self.grid.n();
        Some(
            (0..=n)
                .map(|i| (self.values[i] - (shift - self.values[n - i])).abs())
                .fold(0.0, f64::max),
        )
    }

    pub fn is_hemispheric(&self, tol: f64) -> bool {
        self.hemispheric_defect().is_some_and(|d| d <= tol)
    }

    /// Replaces `h` by the average of itself and its reflection; the equator
    /// value is set to `k pi` exactly. No-op for odd boundary sums.
    pub fn symmetrize(&mut self) {
        let Some(k) = self.hemispheric_k() else {
            return;
        };
        let shift = 2.0 * PI * k as f64;
        let n = self.grid.n();
        let half = self.grid.equator();
        for i in 0..half {
            let sym = 0.5 * (self.values[i] + shift - self.values[n - i]);
            self.values[i] = sym;
            self.values[n - i] = shift - sym;
        }
        self.values[half] = k as f64 * PI;
        self.values[0] = self.m as f64 * PI;
        self.values[n] = self.n_end as f64 * PI;
    }

    /// Checks a wedge condition on the northern half `[0, pi/2]`.
    pub fn wedge_check(&self, wedge: WedgeSpec) -> WedgeVerdict {
        let half = self.grid.equator();
        let tol = wedge.tolerance;
        for i in 0..=half {
            let t = self.grid.nodes()[i];
            let (lo, hi) = wedge.kind.bounds(t);
            let v = self.values[i];
            let excess = (lo - tol - v).max(v - hi - tol);
            if excess > 0.0 {
                return WedgeVerdict::Violated {
                    node: i,
                    excess: excess + tol,
                };
            }
        }
        WedgeVerdict::Inside
    }

    /// `g = (h' - 1) sin theta`; vanishes exactly at both poles.
    pub fn perturbation_direction(&self) -> Vec<f64> {
        self.derivative()
            .iter()
            .zip(self.grid.sin())
            .map(|(d, s)| (d - 1.0) * s)
            .collect()
    }

    pub fn sup_distance(&self, other: &Profile) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Writes the two-column `theta,h` CSV with a `# m=.. n=.. kappa=..`
    /// header. Extra `key=value` tokens are appended to the header line.
    pub fn write_csv<W: Write>(
        &self,
        mut out: W,
        kappa: Option<f64>,
        extra: &[(&str, String)],
    ) -> Result<()> {
        let mut header = format!("# m={} n={}", self.m, self.n_end);
        if let Some(k) = kappa {
            header.push_str(&format!(" kappa={k}"));
        }
        for (key, value) in extra {
            header.push_str(&format!(" {key}={value}"));
        }
        writeln!(out, "{header}")?;
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["theta", "h"])?;
        for (t, v) in self.grid.nodes().iter().zip(&self.values) {
            writer.write_record([t.to_string(), v.to_string()])?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads a profile written by [`Profile::write_csv`]. The grid is rebuilt
    /// from the row count and the stored angles are checked against it.
    pub fn read_csv<R: BufRead>(mut input: R) -> Result<(Self, ProfileHeader)> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let header = ProfileHeader::parse(&first)?;
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(input);
        let mut thetas = Vec::new();
        let mut values = Vec::new();
        for record in reader.records() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::Format(format!(
                    "expected 2 columns, found {}",
                    record.len()
                )));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad number {s:?}: {e}")))
            };
            thetas.push(parse(&record[0])?);
            values.push(parse(&record[1])?);
        }
        if values.len() < 2 {
            return Err(Error::Format("profile has fewer than two rows".into()));
        }
        let grid = Arc::new(Grid::new(values.len() - 1)?);
        for (i, (t, node)) in thetas.iter().zip(grid.nodes()).enumerate() {
            if (t - node).abs() > 1e-12 {
                return Err(Error::Format(format!(
                    "theta at row {i} is {t}, expected uniform node {node}"
                )));
            }
        }
        let profile = Profile::new(grid, values, header.m, header.n)?;
        Ok((profile, header))
    }
}

/// Parsed `# m=.. n=.. kappa=..` header line.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileHeader {
    pub m: i64,
    pub n: i64,
    pub kappa: Option<f64>,
    pub extra: Vec<(String, String)>,
}

impl ProfileHeader {
    fn parse(line: &str) -> Result<Self> {
        let body = line
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::Format("missing '# m=.. n=..' header".into()))?;
        let mut m = None;
        let mut n = None;
        let mut kappa = None;
        let mut extra = Vec::new();
        for token in body.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad header token {token:?}")))?;
            let bad = |e: &dyn std::fmt::Display| Error::Format(format!("bad {key}: {e}"));
            match key {
                "m" => m = Some(value.parse::<i64>().map_err(|e| bad(&e))?),
                "n" => n = Some(value.parse::<i64>().map_err(|e| bad(&e))?),
                "kappa" => kappa = Some(value.parse::<f64>().map_err(|e| bad(&e))?),
                _ => extra.push((key.to_string(), value.to_string())),
            }
        }
        match (m, n) {
            (Some(m), Some(n)) => Ok(Self { m, n, kappa, extra }),
            _ => Err(Error::Format("header must define m and n".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WedgeKind {
    /// `pi <= h <= pi + theta` on `[0, pi/2]`.
    W1,
    /// `theta <= h <= 2 theta` on `[0, pi/2]`.
    W2,
}

impl WedgeKind {
    pub fn bounds(self, theta: f64) -> (f64, f64) {
        match self {
            WedgeKind::W1 => (PI, PI + theta),
            WedgeKind::W2 => (theta, 2.0 * theta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WedgeSpec {
    pub kind: WedgeKind,
    pub tolerance: f64,
}

impl WedgeSpec {
    pub fn new(kind: WedgeKind, tolerance: f64) -> Result<Self> {
        if !(tolerance >= 0.0) {
            return Err(Error::invalid("tolerance", "must be nonnegative"));
        }
        Ok(Self { kind, tolerance })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WedgeVerdict {
    Inside,
    Violated { node: usize, excess: f64 },
}

impl WedgeVerdict {
    pub fn is_inside(&self) -> bool {
        matches!(self, WedgeVerdict::Inside)
    }
}

/// Angle where the sawtooth initial profile leaves the upper wedge edge:
/// `pi/2 - pi / (2 sqrt(kappa))`.
pub fn first_type_corner(kappa: f64) -> f64 {
    FRAC_PI_2 - PI / (2.0 * kappa.sqrt())
}

/// Piecewise-linear hemispheric initial profile in `H_{1,1}`: follows
/// `pi + theta` up to the corner, drops linearly through `pi` at the
/// equator, and follows `theta` past the mirrored corner.
pub fn make_initial_first_type(grid: Arc<Grid>, kappa: f64) -> Result<Profile> {
    if !(kappa >= 4.0) {
        return Err(Error::invalid("kappa", format!("must be >= 4, got {kappa}")));
    }
    let corner = first_type_corner(kappa);
    let slope = corner / (FRAC_PI_2 - corner);
    let n = grid.n();
    let half = grid.equator();
    let mut values = vec![0.0; n + 1];
    for i in 0..=half {
        let t = grid.nodes()[i];
        values[i] = if t <= corner {
            PI + t
        } else {
            PI - slope * (t - FRAC_PI_2)
        };
    }
    for i in half + 1..=n {
        values[i] = 2.0 * PI - values[n - i];
    }
    values[half] = PI;
    Profile::new(grid, values, 1, 1)
}

/// `h = 2 theta`, the canonical initial profile of the second wedge.
pub fn make_initial_second_type(grid: Arc<Grid>) -> Profile {
    Profile::two_theta(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(n).unwrap())
    }

    #[test]
    fn degree_examples() {
        let g = grid(64);
        assert_eq!(Profile::identity(g.clone()).degree(), 1);
        assert_eq!(Profile::two_theta(g.clone()).degree(), 0);
        assert_eq!(Profile::constant_pi(g.clone()).degree(), 0);
        let p = Profile::from_fn(g, 1, 2, |t| PI + t).unwrap();
        assert_eq!(p.degree(), -1);
    }

    #[test]
    fn degree_integral_examples() {
        let g = grid(512);
        let id = Profile::identity(g.clone());
        assert!((id.degree_integral() - 1.0).abs() < 1e-3);
        assert_eq!(Profile::constant_pi(g.clone()).degree_integral(), 0.0);
        assert!(Profile::two_theta(g).degree_integral().abs() < 1e-3);
    }

    #[test]
    fn degree_integral_converges_second_order() {
        let err = |n: usize| {
            let p = Profile::from_fn(grid(n), 0, 1, |t| t + 0.4 * (2.0 * t).sin()).unwrap();
            (p.degree_integral() - p.degree() as f64).abs()
        };
        let ratio = err(128) / err(256);
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn reflection_examples() {
        let g = grid(64);
        let p = Profile::two_theta(g.clone());
        let r = p.antipodal_reflect().unwrap();
        assert!(r.sup_distance(&p) < 1e-14);
        assert_eq!(r.class(), (0, 2));
        let c = Profile::constant_pi(g.clone());
        assert_eq!(c.antipodal_reflect().unwrap().values(), c.values());
        let err = Profile::identity(g).antipodal_reflect().unwrap_err();
        assert!(err.to_string().contains("not hemispheric-compatible"));
    }

    #[test]
    fn reflection_swaps_boundary_integers() {
        let p = Profile::from_fn(grid(32), 0, 4, |t| 4.0 * t - t.sin()).unwrap();
        let r = p.antipodal_reflect().unwrap();
        assert_eq!(r.class(), (0, 4));
        let q = Profile::from_fn(grid(32), 1, 3, |t| PI + 2.0 * t).unwrap();
        assert_eq!(q.antipodal_reflect().unwrap().class(), (1, 3));
    }

    #[test]
    fn hemispheric_examples() {
        let g = grid(128);
        assert!(Profile::two_theta(g.clone()).is_hemispheric(1e-12));
        assert!(!Profile::identity(g.clone()).is_hemispheric(1.0));
        let bump = Profile::from_fn(g, 1, 1, |t| PI + t.sin() * t.sin()).unwrap();
        assert!(!bump.is_hemispheric(1e-3));
        // reflection of the even bump is pi - sin^2, so the defect is 2 sin^2 max = 2
        assert!((bump.hemispheric_defect().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn wedge_examples() {
        let g = grid(64);
        let w1 = WedgeSpec::new(WedgeKind::W1, 0.0).unwrap();
        let w2 = WedgeSpec::new(WedgeKind::W2, 1e-12).unwrap();
        assert!(Profile::constant_pi(g.clone()).wedge_check(w1).is_inside());
        assert!(Profile::two_theta(g.clone()).wedge_check(w2).is_inside());
        match Profile::identity(g).wedge_check(w1) {
            WedgeVerdict::Violated { node, excess } => {
                assert_eq!(node, 0);
                assert!((excess - PI).abs() < 1e-15);
            }
            WedgeVerdict::Inside => panic!("identity must violate W1"),
        }
        assert!(WedgeSpec::new(WedgeKind::W1, -1.0).is_err());
    }

    #[test]
    fn first_type_profile() {
        let g = grid(64);
        let p = make_initial_first_type(g.clone(), 4.0).unwrap();
        // corner at pi/4 = node 16
        assert!((g.nodes()[16] - PI / 4.0).abs() < 1e-15);
        assert!((p.values()[16] - (PI + PI / 4.0)).abs() < 1e-14);
        assert_eq!(p.class(), (1, 1));
        assert_eq!(p.values()[0], PI);
        assert_eq!(p.values()[64], PI);
        assert_eq!(p.values()[32], PI);
        for kappa in [4.0, 5.5, 9.0, 100.0, 1e4] {
            let p = make_initial_first_type(g.clone(), kappa).unwrap();
            let w1 = WedgeSpec::new(WedgeKind::W1, 1e-12).unwrap();
            assert!(p.wedge_check(w1).is_inside(), "kappa {kappa}");
            assert!(p.is_hemispheric(1e-12));
            assert_eq!(p.values()[32], PI);
        }
        assert!(make_initial_first_type(g, 3.9).is_err());
    }

    #[test]
    fn second_type_profile() {
        let g = grid(64);
        let p = make_initial_second_type(g);
        assert_eq!(p.values()[32], PI);
        assert_eq!(p.degree(), 0);
        assert!(p.is_hemispheric(1e-12));
    }

    #[test]
    fn perturbation_direction_examples() {
        let g = grid(256);
        let zero = Profile::identity(g.clone()).perturbation_direction();
        assert!(zero.iter().all(|v| v.abs() < 1e-12));
        let s = Profile::two_theta(g.clone()).perturbation_direction();
        let c = Profile::constant_pi(g.clone()).perturbation_direction();
        for i in 0..=256 {
            assert!((s[i] - g.sin()[i]).abs() < 1e-12);
            assert!((c[i] + g.sin()[i]).abs() < 1e-12);
        }
        assert_eq!(s[0], 0.0);
        assert_eq!(s[256], 0.0);
    }

    #[test]
    fn boundary_values_are_exact() {
        let g = grid(32);
        let mut v: Vec<f64> = g.nodes().iter().map(|t| 2.0 * t).collect();
        v[32] += 1e-12;
        let p = Profile::new(g.clone(), v.clone(), 0, 2).unwrap();
        assert_eq!(p.values()[32], 2.0 * PI);
        v[32] += 1e-3;
        assert!(matches!(
            Profile::new(g, v, 0, 2),
            Err(Error::BoundaryMismatch { .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = grid(64);
        let p = make_initial_first_type(g, 7.3).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf, Some(7.3), &[("config", "abc".into())])
            .unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# m=1 n=1 kappa=7.3 config=abc\ntheta,h\n"));
        let (q, header) = Profile::read_csv(buf.as_slice()).unwrap();
        assert_eq!(q.values(), p.values());
        assert_eq!(header.kappa, Some(7.3));
        assert_eq!(header.extra, vec![("config".to_string(), "abc".to_string())]);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(Profile::read_csv("theta,h\n0,0\n".as_bytes()).is_err());
        assert!(Profile::read_csv("# m=0 n=1\ntheta,h\n0,x\n".as_bytes()).is_err());
    }
}
