//! Steers the lowest vibration mode to rest and prints the CG history.
//!
//! `cargo run --release -p laminate-hum --example lowest_mode`

use laminate_hum::prelude::*;

fn main() -> Result<()> {
    let mut cfg = PipelineConfig::new(PhysicalParams::default(), 32);
    cfg.m = 10;
    cfg.initial = InitialData::Mode(0);
    let out = null_control_pipeline(&cfg)?;
    let s = &out.solution;
    println!("T = {:.3}, mu_min = {:.3e}, mu_max = {:.3e}", cfg.horizon, out.mu_min, out.mu_max);
    for (k, (r, j)) in s.residual_history.iter().zip(&s.objective_history).enumerate() {
        println!("{k:4}  residual {r:.3e}  J {j:+.6e}");
    }
    println!(
        "converged = {} after {} iterations; E(T)/E(0) = {:.3e}; ||u|| = {:.4}",
        s.converged, s.iterations, out.unfiltered_ratio, s.control_norm
    );
    Ok(())
}
