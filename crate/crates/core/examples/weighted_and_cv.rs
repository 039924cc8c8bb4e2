//! Weighted batch means and cross-validated choice of the burn-in fraction.

use online_cov::prelude::*;

fn main() -> Result<()> {
    let alpha = 0.55;
    let problem = QuadraticProblem::equispaced(4, 1.0, 4.0)?;
    let schedule = Schedule::new(1.0, alpha)?;
    let truth = problem.true_covariance()?;
    let blocks = BlockSchedule::new(5.0, choose_beta(alpha, BetaRule::Optimal))?;
    let mut bm = BmState::new(4, blocks, 1.0)?;
    let mut rng = RngStream::new(3, 0);
    run_trajectory(&problem, &schedule, &Vector::zeros(4), 100_000, &mut rng, &mut [&mut bm])?;
    for p in [0.5, 1.0, 2.0] {
        let err = operator_norm(&bm.query_weighted(p)?.sub(&truth));
        println!("weight m^{p}: error {err:.4}");
    }
    let rho = cross_validate_rho(&bm, &[0.25, 0.5, 0.75, 1.0])?;
    println!("cross-validated ρ = {rho}");
    Ok(())
}
