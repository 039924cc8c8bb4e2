//! Calibrated two-point construction across horizons.

use online_cov::minimax::{kl_exact, kl_monte_carlo};
use online_cov::prelude::*;

fn main() -> Result<()> {
    let schedule = Schedule::new(1.0, 0.55)?;
    println!("n, delta_n, kl, tv, risk_floor");
    for n in [1_000, 10_000, 100_000] {
        let template = TwoPointConfig::new(2, 0.5, schedule, n)?;
        let r = TwoPointReport::evaluate(&template, None)?;
        println!("{n}, {:.5}, {:.6}, {:.4}, {:.5}", r.delta_n, r.kl_exact, r.tv_bound, r.risk_floor);
    }
    let cfg = TwoPointConfig::new(2, 0.1, schedule, 200)?;
    let mc = kl_monte_carlo(&cfg, 2_000, 5)?;
    println!("n = 200, δ = 0.1: exact {:.5}, simulated {:.5} ± {:.5}", kl_exact(&cfg), mc.mean, mc.std_error);
    Ok(())
}
