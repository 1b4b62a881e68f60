//! Sign checks of the two auxiliary functions that keep the flow inside the
//! wedges, sampled over each wedge.

use axisaddle::energy::wedge_certificates;

fn main() -> axisaddle::Result<()> {
    for kappa in [4.0, 6.7, 25.0] {
        let report = wedge_certificates(kappa, 400)?;
        println!("kappa = {kappa}: {}", if report.passed() { "all signs hold" } else { "violations" });
        for c in &report.checks {
            println!(
                "  {:<28} expected {:?}, range [{:.4e}, {:.4e}], violations {}",
                c.name, c.expected, c.min, c.max, c.violations
            );
        }
    }
    Ok(())
}
