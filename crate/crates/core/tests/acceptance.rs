//! Acceptance suite: thirteen criteria, one PASS/FAIL line each. Exits with
//! status 1 if any criterion fails.

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::Arc;

use axisaddle::energy::{
    assemble_second_variation, el_residual, reduced_energy, residual_sup, second_variation_form,
    EnergyParams, TridiagonalOperator,
};
use axisaddle::flow::{self, comparison_trial, FlowConfig, FlowStatus};
use axisaddle::profile::{make_initial_first_type, WedgeKind, WedgeSpec};
use axisaddle::saddle::{find_first_type, find_second_type, sweep, sweep_grid_n, SaddleType};
use axisaddle::spectrum::eigs_lowest;
use axisaddle::stationary::{continue_branch, BranchEnd, NewtonConfig};
use axisaddle::validate::{random_ordered_pair, random_profile, random_sine_series};
use axisaddle::{Grid, Profile};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn grid(n: usize) -> Arc<Grid> {
    Arc::new(Grid::new(n).unwrap())
}

fn params(k: f64) -> EnergyParams {
    EnergyParams::new(k).unwrap()
}

fn nodes(n: usize) -> Vec<f64> {
    (0..=n).map(|i| PI * i as f64 / n as f64).collect()
}

/// Euler-Lagrange residual from centered differences, written out directly.
fn oracle_residual(h: &[f64], kappa: f64) -> f64 {
    let n = h.len() - 1;
    let d = PI / n as f64;
    let t = nodes(n);
    (1..n)
        .map(|i| {
            let (s, c) = (t[i].sin(), t[i].cos());
            let h2 = (h[i + 1] - 2.0 * h[i] + h[i - 1]) / (d * d);
            let h1 = (h[i + 1] - h[i - 1]) / (2.0 * d);
            (h2 + c / s * h1 - (2.0 * h[i]).sin() / (2.0 * s * s) - 0.5 * kappa * (2.0 * h[i] - 2.0 * t[i]).sin()).abs()
        })
        .fold(0.0, f64::max)
}

/// Trapezoidal `int f sin(theta)`.
fn oracle_quad_sin(f: &[f64]) -> f64 {
    let n = f.len() - 1;
    let d = PI / n as f64;
    nodes(n)
        .iter()
        .zip(f)
        .enumerate()
        .map(|(i, (t, v))| if i == 0 || i == n { 0.5 } else { 1.0 } * d * t.sin() * v)
        .sum()
}

/// Second-order finite differences of a profile (one-sided at the ends).
fn oracle_slope(h: &[f64]) -> Vec<f64> {
    let n = h.len() - 1;
    let d = PI / n as f64;
    (0..=n)
        .map(|i| match i {
            0 => (-3.0 * h[0] + 4.0 * h[1] - h[2]) / (2.0 * d),
            i if i == n => (3.0 * h[n] - 4.0 * h[n - 1] + h[n - 2]) / (2.0 * d),
            i => (h[i + 1] - h[i - 1]) / (2.0 * d),
        })
        .collect()
}

/// All eigenvalues of `A = W^{-1} M` by a dense symmetric solve of
/// `W^{-1/2} M W^{-1/2}`, where `M = W A` has diagonal `w_j diag_j` and
/// off-diagonal `coupling`.
fn dense_eigenvalues(op: &TridiagonalOperator) -> Vec<f64> {
    let dim = op.dimension();
    let w = op.weights();
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        let v = if i == j {
            w[i] * op.diag()[i]
        } else if i + 1 == j {
            op.coupling()[i]
        } else if j + 1 == i {
            op.coupling()[j]
        } else {
            0.0
        };
        v / (w[i] * w[j]).sqrt()
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn c1_exact_solutions() -> Outcome {
    let g = grid(1024);
    let mut worst: f64 = 0.0;
    let mut cases = Vec::new();
    for k in [0.0, 1.0, 4.0, 10.0] {
        cases.push((Profile::identity(g.clone()), k));
    }
    cases.push((Profile::two_theta(g.clone()), 4.0));
    for (p, k) in &cases {
        worst = worst.max(residual_sup(p, params(*k))).max(oracle_residual(p.values(), *k));
    }
    let msg = format!("max sup residual {worst:.2e} at n=1024 (limit 1e-6)");
    if worst < 1e-6 { Ok(msg) } else { Err(msg) }
}

fn c2_analytic_energies() -> Outcome {
    let g = grid(1024);
    let mut cases = vec![
        ("E(theta)", reduced_energy(&Profile::identity(g.clone()), params(0.0)), 2.0),
        ("E(theta, k=7)", reduced_energy(&Profile::identity(g.clone()), params(7.0)), 2.0),
        ("E(2theta, 4)", reduced_energy(&Profile::two_theta(g.clone()), params(4.0)), 8.0),
    ];
    for k in [1.0, 5.0, 10.0] {
        cases.push(("E(pi)", reduced_energy(&Profile::constant_pi(g.clone()), params(k)), 2.0 * k / 3.0));
    }
    let worst = cases.iter().map(|(_, a, b)| ((a - b) / b).abs()).fold(0.0, f64::max);
    let msg = format!("max relative error {worst:.2e} over {} cases (limit 1e-5)", cases.len());
    if worst < 1e-5 { Ok(msg) } else { Err(msg) }
}

fn c3_legendre() -> Outcome {
    let lowest = |n: usize| {
        let op = assemble_second_variation(&Profile::two_theta(grid(n)), params(4.0));
        eigs_lowest(&op, 5).unwrap().eigenvalues
    };
    let exact: Vec<f64> = (1..=5).map(|l| (l * (l + 1)) as f64 - 4.0).collect();
    let (coarse, fine) = (lowest(1024), lowest(2048));
    let err = |v: &[f64]| v.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (ec, ef) = (err(&coarse), err(&fine));
    let ratio = ec / ef;
    let msg = format!("n=2048 max error {ef:.2e} (limit 1e-2), error ratio 1024->2048 {ratio:.3}");
    if ef < 1e-2 && (3.5..=4.5).contains(&ratio) { Ok(msg) } else { Err(msg) }
}

fn c4_certificate_kappa4() -> Outcome {
    let g = grid(1024);
    let two = Profile::two_theta(g.clone());
    let t = nodes(1024);
    let mut sin1: Vec<f64> = t.iter().map(|x| x.sin()).collect();
    let mut sin2: Vec<f64> = t.iter().map(|x| (2.0 * x).sin()).collect();
    for v in [&mut sin1, &mut sin2] {
        v[0] = 0.0;
        v[1024] = 0.0;
    }
    let a = second_variation_form(&two, params(4.0), &sin1).unwrap();
    let b = second_variation_form(&two, params(4.0), &sin2).unwrap();
    let morse = eigs_lowest(&assemble_second_variation(&two, params(4.0)), 3).unwrap().morse_index;
    let msg = format!("forms {a:.6} (-8/3), {b:.6} (32/15), morse index {morse}");
    if (a + 8.0 / 3.0).abs() <= 1e-3 && (b - 32.0 / 15.0).abs() <= 1e-3 && morse == 1 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c5_gradient_hessian() -> Outcome {
    let g = grid(512);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let eps = 1e-4;
    let (mut w1, mut w2) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let h = random_profile(g.clone(), &mut rng).unwrap();
        let dir = random_sine_series(&g, &mut rng, 6, 1.0);
        let k = rng.random_range(0.0..10.0);
        let p = params(k);
        let energy_at = |s: f64| {
            let v: Vec<f64> = h.values().iter().zip(&dir).map(|(a, b)| a + s * b).collect();
            reduced_energy(&Profile::new(g.clone(), v, h.m(), h.n_end()).unwrap(), p)
        };
        let (ep, em, e0) = (energy_at(eps), energy_at(-eps), energy_at(0.0));
        let fd1 = (ep - em) / (2.0 * eps);
        let fd2 = (ep - 2.0 * e0 + em) / (eps * eps);
        let rg: Vec<f64> = el_residual(&h, p).iter().zip(&dir).map(|(a, b)| a * b).collect();
        let first = -oracle_quad_sin(&rg);
        let second = second_variation_form(&h, p, &dir).unwrap();
        w1 = w1.max((fd1 - first).abs() / (1.0 + first.abs()));
        w2 = w2.max((fd2 - second).abs() / (1.0 + second.abs()));
    }
    let msg = format!("20 trials at n=512, worst |fd - exact|/(1+|exact|): gradient {w1:.2e}, hessian {w2:.2e} (limit 1e-4)");
    if w1 <= 1e-4 && w2 <= 1e-4 { Ok(msg) } else { Err(msg) }
}

fn c6_flow_dissipation() -> Outcome {
    let p0 = Profile::constant_pi(grid(1024));
    let mut cfg = FlowConfig::for_kappa(5.0);
    cfg.t_max = 1e3;
    cfg.record_every = 1;
    cfg.wedge = Some(WedgeSpec::new(WedgeKind::W1, 1e-8).unwrap());
    let run = flow::run(&p0, params(5.0), &cfg).unwrap();
    let e0 = run.energy_trace[0].energy;
    let slack = 1e-10 * (1.0 + e0);
    let monotone = run.energy_trace.windows(2).all(|w| w[1].energy - w[0].energy <= slack);
    let every = run.monitor_log.len() == run.steps + 1;
    let wedge_ok = run.monitor_log.iter().all(|m| m.wedge.is_some_and(|w| w.is_inside()));
    let sym_ok = run.monitor_log.iter().all(|m| m.hemispheric_defect.is_some_and(|d| d <= 1e-8));
    let deg_ok = run.monitor_log.iter().all(|m| m.degree == 0);
    let fin = &run.final_profile;
    let residual = oracle_residual(fin.values(), 5.0).max(residual_sup(fin, params(5.0)));
    let class_ok = fin.values()[0] == PI && fin.values()[1024] == PI && fin.class() == (1, 1);
    let msg = format!(
        "{:?} at t={} with residual {residual:.2e}, monotone {monotone}, {} iterates in W1 {wedge_ok} and hemispheric {sym_ok}, degree 0 {deg_ok}, class (1,1) {class_ok}",
        run.status,
        run.t_final,
        run.monitor_log.len()
    );
    if run.status == FlowStatus::Stationary && residual < 1e-9 && monotone && every && wedge_ok && sym_ok && deg_ok && class_ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c7_derivative_bounds() -> Outcome {
    let g = grid(1024);
    let mut first_max = f64::NEG_INFINITY;
    let mut second_min = f64::INFINITY;
    for k in [4.0, 9.0, 25.0] {
        let a = find_first_type(k, g.clone()).map_err(|e| format!("first type at {k}: {e}"))?;
        let b = find_second_type(k, g.clone()).map_err(|e| format!("second type at {k}: {e}"))?;
        first_max = oracle_slope(a.profile.values()).into_iter().fold(first_max, f64::max);
        second_min = oracle_slope(b.profile.values()).into_iter().fold(second_min, f64::min);
    }
    let msg = format!("kappa in {{4, 9, 25}}: first type max h' {first_max:.6}, second type min h' {second_min:.6}");
    if first_max <= 1.0 + 1e-6 && second_min >= 1.0 - 1e-6 { Ok(msg) } else { Err(msg) }
}

fn c8_comparison() -> Outcome {
    let g = grid(512);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (lo, hi) = random_ordered_pair(g.clone(), &mut rng).unwrap();
        let k = rng.random_range(4.0..10.0);
        let mut cfg = FlowConfig::for_kappa(k);
        cfg.t_max = 10.0;
        let v = comparison_trial(&lo, &hi, params(k), &cfg).map_err(|e| e.to_string())?;
        let t_end = v.steps as f64 * cfg.dt;
        if (t_end - 10.0).abs() > 1e-9 {
            return Err(format!("trial stopped at t={t_end}"));
        }
        worst = worst.max(v.max_violation);
    }
    let msg = format!("20 ordered pairs to t=10, worst ordering violation {worst:.2e} (limit 1e-6)");
    if worst <= 1e-6 { Ok(msg) } else { Err(msg) }
}

fn c9_kappa0_bracket() -> Outcome {
    let kappas: Vec<f64> = (0..=16).map(|j| 4.0 + 0.25 * j as f64).collect();
    let s = sweep(&kappas, &[SaddleType::First], 1024).map_err(|e| e.to_string())?;
    let b = s.kappa0.ok_or("no sign change of the direction value in [4, 8]")?;
    // confirm the sign change independently at the bracket ends
    let value = |k: f64| {
        let r = find_first_type(k, grid(sweep_grid_n(1024, k))).unwrap();
        second_variation_form(&r.profile, params(k), &r.profile.perturbation_direction()).unwrap()
    };
    let (vlo, vhi) = (value(b.lo), value(b.hi));
    let msg = format!(
        "bracket ({}, {}) width {}, values {vlo:.4} / {vhi:.4}; lowest eigenvalue changes sign in {:?}",
        b.lo,
        b.hi,
        b.width(),
        s.kappa0_lambda1.map(|l| (l.lo, l.hi))
    );
    if b.width() <= 0.05 && b.lo > 4.0 && b.hi < 6.7 && vlo > 0.0 && vhi < 0.0 { Ok(msg) } else { Err(msg) }
}

fn c10_second_type_certificate() -> Outcome {
    let g = grid(1024);
    let mut values = Vec::new();
    for k in [4.0, 6.0, 8.0, 10.0, 20.0] {
        let r = find_second_type(k, g.clone()).map_err(|e| format!("kappa {k}: {e}"))?;
        let slope = oracle_slope(r.profile.values());
        let mut dir: Vec<f64> = slope.iter().zip(nodes(1024)).map(|(d, t)| (d - 1.0) * t.sin()).collect();
        dir[0] = 0.0;
        dir[1024] = 0.0;
        values.push((k, second_variation_form(&r.profile, params(k), &dir).unwrap()));
    }
    let msg = format!("direction values {values:.4?}");
    if values.iter().all(|(_, v)| *v < 0.0) { Ok(msg) } else { Err(msg) }
}

fn c11_continuation() -> Outcome {
    let g = grid(1024);
    let b = continue_branch(4.0, &Profile::two_theta(g.clone()), 3.8, -0.05, &NewtonConfig::default())
        .map_err(|e| e.to_string())?;
    if b.end != BranchEnd::ReachedTarget || b.last_kappa() != 3.8 {
        return Err(format!("stopped at {:?}", b.end));
    }
    let mut worst_res: f64 = 0.0;
    let mut worst_sym: f64 = 0.0;
    let mut morse_ok = true;
    for p in &b.points {
        worst_res = worst_res.max(residual_sup(&p.profile, params(p.kappa)));
        worst_sym = worst_sym.max(p.profile.hemispheric_defect().unwrap_or(f64::INFINITY));
        morse_ok &= p.lambda1 < 0.0 && p.lambda2 > 0.0;
    }
    let extent = continue_branch(4.0, &Profile::two_theta(g), 0.5, -0.05, &NewtonConfig::default())
        .map(|b| b.last_kappa())
        .map_err(|e| e.to_string())?;
    let msg = format!(
        "{} points down to 3.8, worst residual {worst_res:.2e}, hemispheric defect {worst_sym:.1e}, lambda1 < 0 < lambda2 {morse_ok}; branch reachable down to kappa = {extent}",
        b.points.len()
    );
    if worst_res < 1e-9 && worst_sym <= 1e-8 && morse_ok { Ok(msg) } else { Err(msg) }
}

fn c12_scaling() -> Outcome {
    let mut rows = Vec::new();
    for k in [16.0, 64.0, 256.0, 1024.0f64] {
        let n = sweep_grid_n(1024, k);
        let g = grid(n);
        let e0 = reduced_energy(&make_initial_first_type(g.clone(), k).unwrap(), params(k));
        let r = find_first_type(k, g.clone()).map_err(|e| format!("kappa {k}: {e}"))?;
        let h = r.profile.values();
        let slope = oracle_slope(h)[n / 2];
        let t = nodes(n);
        let far = (0..=n).filter(|i| t[*i] <= FRAC_PI_4).map(|i| (h[i] - PI - t[i]).abs()).fold(0.0, f64::max);
        rows.push((k, e0 / k.sqrt(), -slope / k.sqrt(), far));
    }
    let base = rows[0];
    let bounded = rows.iter().all(|r| r.1 <= 2.0 * base.1 && r.2 <= 2.0 * base.2);
    let decreasing = rows.windows(2).all(|w| w[1].3 < w[0].3);
    let msg = format!(
        "(kappa, E0/sqrt k, -h'(pi/2)/sqrt k, sup_[0,pi/4] |h - pi - theta|): {}",
        rows.iter()
            .map(|r| format!("({}, {:.3}, {:.3}, {:.2e})", r.0, r.1, r.2, r.3))
            .collect::<Vec<_>>()
            .join(" ")
    );
    if bounded && decreasing { Ok(msg) } else { Err(msg) }
}

fn c13_eigensolver_oracle() -> Outcome {
    let g = grid(64);
    let mut fixtures: Vec<(String, TridiagonalOperator)> = vec![
        ("2theta k=4".into(), assemble_second_variation(&Profile::two_theta(g.clone()), params(4.0))),
        ("theta k=0".into(), assemble_second_variation(&Profile::identity(g.clone()), params(0.0))),
        ("theta k=10".into(), assemble_second_variation(&Profile::identity(g.clone()), params(10.0))),
        ("pi k=5".into(), assemble_second_variation(&Profile::constant_pi(g.clone()), params(5.0))),
        ("2theta k=9".into(), assemble_second_variation(&Profile::two_theta(g.clone()), params(9.0))),
    ];
    let first = find_first_type(10.0, g.clone()).map_err(|e| e.to_string())?;
    fixtures.push(("first type k=10".into(), assemble_second_variation(&first.profile, params(10.0))));
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for j in 0..3 {
        let dim = 63;
        let op = TridiagonalOperator::from_parts(
            (0..dim).map(|_| rng.random_range(-50.0..50.0)).collect(),
            (0..dim - 1).map(|_| rng.random_range(-20.0..20.0)).collect(),
            (0..dim).map(|_| rng.random_range(0.1..2.0)).collect(),
        )
        .unwrap();
        fixtures.push((format!("random {j}"), op));
    }
    let mut worst: f64 = 0.0;
    let mut worst_name = String::new();
    for (name, op) in &fixtures {
        let dense = dense_eigenvalues(op);
        let bis = eigs_lowest(op, op.dimension()).map_err(|e| e.to_string())?.eigenvalues;
        for (a, b) in bis.iter().zip(&dense) {
            let rel = (a - b).abs() / b.abs().max(1.0);
            if rel > worst {
                worst = rel;
                worst_name = name.clone();
            }
        }
    }
    let msg = format!("{} fixtures, all eigenvalues, worst relative deviation {worst:.2e} ({worst_name})", fixtures.len());
    if worst <= 1e-8 { Ok(msg) } else { Err(msg) }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("exact solutions", c1_exact_solutions),
        ("analytic energies", c2_analytic_energies),
        ("legendre spectrum", c3_legendre),
        ("saddle certificate at kappa = 4", c4_certificate_kappa4),
        ("gradient/hessian consistency", c5_gradient_hessian),
        ("flow dissipation and symmetry", c6_flow_dissipation),
        ("derivative bounds on limits", c7_derivative_bounds),
        ("comparison principle", c8_comparison),
        ("kappa_0 bracket", c9_kappa0_bracket),
        ("second-type certificate", c10_second_type_certificate),
        ("continuation below 4", c11_continuation),
        ("scaling laws", c12_scaling),
        ("eigensolver oracle", c13_eigensolver_oracle),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} [{secs:.2}s]", i + 1),
            Err(msg) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {msg} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
