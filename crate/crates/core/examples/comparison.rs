//! Two ordered profiles evolved with identical steps stay ordered.

use std::sync::Arc;

use axisaddle::energy::EnergyParams;
use axisaddle::flow::{comparison_trial, FlowConfig};
use axisaddle::validate::random_ordered_pair;
use axisaddle::Grid;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> axisaddle::Result<()> {
    let grid = Arc::new(Grid::new(512)?);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for kappa in [4.0, 6.0, 9.0] {
        let (lower, upper) = random_ordered_pair(grid.clone(), &mut rng)?;
        let mut cfg = FlowConfig::for_kappa(kappa);
        cfg.t_max = 10.0;
        cfg.record_every = 250;
        let v = comparison_trial(&lower, &upper, EnergyParams::new(kappa)?, &cfg)?;
        println!("kappa = {kappa}, class {:?}: {} steps, worst violation {:.1e}", lower.class(), v.steps, v.max_violation);
        for (t, gap) in &v.gaps {
            println!("  t = {t:>5.2}  max(lower - upper) = {gap:.3e}");
        }
    }
    Ok(())
}
