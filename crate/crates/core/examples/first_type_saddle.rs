//! First-type critical point at `kappa = 10` (or the kappa given as the
//! first argument): flow inside the wedge `pi <= h <= pi + theta`, Newton
//! polish, spectrum. Prints a coarse table of the profile.

use std::f64::consts::PI;
use std::sync::Arc;

use axisaddle::saddle::find_first_type;
use axisaddle::Grid;

fn main() -> axisaddle::Result<()> {
    let kappa: f64 = std::env::args().nth(1).map_or(10.0, |s| s.parse().expect("kappa"));
    let report = find_first_type(kappa, Arc::new(Grid::new(1024)?))?;

    println!("kappa = {kappa}, E = {:.9}, residual {:.2e}", report.energy, report.residual);
    println!("lowest eigenvalues {:?}", report.spectrum.eigenvalues);
    println!("morse index {}, verdict {:?}", report.spectrum.morse_index, report.verdict);
    println!("direction value {:.6} (saddle certified: {})", report.explicit_direction_value, !report.marginal);
    println!("wedge {:?}, hemispheric defect {:.1e}", report.wedge_verdict, report.hemispheric_defect);
    println!("h' ranges over [{:.4}, {:.4}]", report.slope_range.0, report.slope_range.1);
    if let Err(e) = report.validate() {
        println!("invalid: {e}");
    }

    println!();
    println!("{:>8} {:>10} {:>10}", "theta", "h", "pi+theta");
    let grid = report.profile.grid();
    for i in (0..=grid.n()).step_by(grid.n() / 16) {
        let t = grid.nodes()[i];
        println!("{:>8.4} {:>10.6} {:>10.6}", t, report.profile.values()[i], PI + t);
    }
    Ok(())
}
