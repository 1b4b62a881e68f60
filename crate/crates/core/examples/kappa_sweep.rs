//! First-type sweep over kappa in [4, 8]: where the explicit direction
//! stops certifying a saddle, refined by bisection, alongside the sign
//! change of the lowest eigenvalue.

use axisaddle::saddle::{sweep, SaddleType};

fn main() -> axisaddle::Result<()> {
    let kappas: Vec<f64> = (0..=16).map(|j| 4.0 + 0.25 * j as f64).collect();
    let result = sweep(&kappas, &[SaddleType::First], 1024)?;
    println!("{:>6} {:>12} {:>12} {:>12} {:>10}", "kappa", "E", "lambda1", "direction", "status");
    for row in &result.rows {
        println!(
            "{:>6} {:>12.6} {:>12.6} {:>12.6} {:>10}",
            row.kappa,
            row.energy.unwrap_or(f64::NAN),
            row.lambda1.unwrap_or(f64::NAN),
            row.dir_value.unwrap_or(f64::NAN),
            row.status
        );
    }
    if let Some(b) = result.kappa0 {
        println!("direction value changes sign in ({}, {}) after {} bisections", b.lo, b.hi, result.bisection_steps);
    }
    if let Some(b) = result.kappa0_lambda1 {
        println!("lowest eigenvalue changes sign in ({}, {})", b.lo, b.hi);
    }
    Ok(())
}
