//! Closed-form profiles: residuals, energies and the second variation at
//! `h = 2 theta`, `kappa = 4`.

use std::sync::Arc;

use axisaddle::energy::{reduced_energy, residual_sup, second_variation_form, EnergyParams};
use axisaddle::{Grid, Profile};

fn main() -> axisaddle::Result<()> {
    let grid = Arc::new(Grid::new(1024)?);
    let theta = Profile::identity(grid.clone());
    let two = Profile::two_theta(grid.clone());
    let pi = Profile::constant_pi(grid.clone());

    println!("{:>10} {:>6} {:>14} {:>12} {:>10}", "profile", "kappa", "E", "exact", "residual");
    for kappa in [0.0, 1.0, 4.0, 10.0] {
        let p = EnergyParams::new(kappa)?;
        println!(
            "{:>10} {:>6} {:>14.9} {:>12} {:>10.2e}",
            "theta", kappa, reduced_energy(&theta, p), "2", residual_sup(&theta, p)
        );
    }
    let p4 = EnergyParams::new(4.0)?;
    println!(
        "{:>10} {:>6} {:>14.9} {:>12} {:>10.2e}",
        "2 theta", 4.0, reduced_energy(&two, p4), "8", residual_sup(&two, p4)
    );
    for kappa in [1.0, 5.0] {
        let p = EnergyParams::new(kappa)?;
        println!(
            "{:>10} {:>6} {:>14.9} {:>12.9} {:>10.2e}",
            "pi", kappa, reduced_energy(&pi, p), 2.0 * kappa / 3.0, residual_sup(&pi, p)
        );
    }

    let sin2: Vec<f64> = grid.sin().iter().zip(grid.cos()).map(|(s, c)| 2.0 * s * c).collect();
    println!();
    println!("second variation at 2 theta, kappa = 4:");
    println!("  direction sin(theta):   {:.6}  (exact -8/3)", second_variation_form(&two, p4, grid.sin())?);
    println!("  direction sin(2 theta): {:.6}  (exact 32/15)", second_variation_form(&two, p4, &sin2)?);
    Ok(())
}
