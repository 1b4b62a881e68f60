//! The second variation at `h = 2 theta`, `kappa = 4` is the Legendre
//! operator shifted by 4, so its eigenvalues are `l(l+1) - 4`.

use axisaddle::spectrum::legendre_validation;
use axisaddle::Grid;

fn main() -> axisaddle::Result<()> {
    let report = legendre_validation(&Grid::new(1024)?, 6)?;
    println!("{:>3} {:>8} {:>16} {:>16}", "l", "exact", format!("n={}", report.n_coarse), format!("n={}", report.n_fine));
    for row in &report.rows {
        println!("{:>3} {:>8} {:>16.10} {:>16.10}", row.l, row.exact, row.coarse, row.fine);
    }
    println!();
    println!("max deviation {:.3e} -> {:.3e}, observed order {:.3}", report.max_deviation_coarse, report.max_deviation_fine, report.observed_order);
    println!("l = 1 eigenvector vs sin(theta): correlation {:.12}", report.l1_sin_correlation);
    Ok(())
}
