//! Online batch means with and without burn-in on one trajectory.

use online_cov::prelude::*;

fn main() -> Result<()> {
    let alpha = 0.55;
    let problem = QuadraticProblem::equispaced(5, 1.0, 5.0)?;
    let schedule = Schedule::new(1.0, alpha)?;
    let truth = problem.true_covariance()?;
    let beta = choose_beta(alpha, BetaRule::Optimal);
    let blocks = BlockSchedule::new(5.0, beta)?;
    let mut full = BmState::new(5, blocks, 1.0)?;
    let mut burned = BmState::new(5, blocks, 0.5)?;
    let mut rng = RngStream::new(1, 0);
    run_trajectory(&problem, &schedule, &Vector::zeros(5), 100_000, &mut rng, &mut [&mut full, &mut burned])?;
    println!("β = {beta:.4}, {} blocks", full.num_blocks());
    for (name, st) in [("ρ = 1", &full), ("ρ = 0.5", &burned)] {
        let err = operator_norm(&st.query()?.sub(&truth));
        println!("{name}: window {} blocks, error {err:.4}", st.window_len());
    }
    Ok(())
}
