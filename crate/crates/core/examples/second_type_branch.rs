//! Second-type critical points: flow from `2 theta` above `kappa = 4`, the
//! exact profile at 4, and continuation below 4 until Newton fails.

use std::sync::Arc;

use axisaddle::saddle::find_second_type;
use axisaddle::stationary::{continue_branch, BranchEnd, NewtonConfig};
use axisaddle::{Grid, Profile};

fn main() -> axisaddle::Result<()> {
    let grid = Arc::new(Grid::new(1024)?);

    println!("{:>6} {:>14} {:>10} {:>10} {:>10} {:>16}", "kappa", "E", "lambda1", "lambda2", "direction", "provenance");
    for kappa in [4.0, 6.0, 8.0, 10.0, 20.0] {
        let r = find_second_type(kappa, grid.clone())?;
        println!(
            "{:>6} {:>14.9} {:>10.5} {:>10.5} {:>10.5} {:>16?}",
            kappa, r.energy, r.lambda1(), r.lambda2(), r.explicit_direction_value, r.provenance
        );
    }

    println!();
    println!("continuation below 4:");
    let branch = continue_branch(4.0, &Profile::two_theta(grid), 2.0, -0.05, &NewtonConfig::default())?;
    for p in branch.points.iter().step_by(5) {
        println!("{:>6.2} {:>14.9} {:>10.5} {:>10.5}", p.kappa, p.energy, p.lambda1, p.lambda2);
    }
    match branch.end {
        BranchEnd::ReachedTarget => println!("reached kappa = {}", branch.last_kappa()),
        BranchEnd::NewtonFailure { last_ok, failed_at } => {
            println!("newton failed at {failed_at}; branch known down to {last_ok}")
        }
    }
    Ok(())
}
