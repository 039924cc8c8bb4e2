//! Averaged SGD on a noisy quadratic and the spread of √n (x̄ − x*).

use online_cov::prelude::*;

fn main() -> Result<()> {
    let problem = QuadraticProblem::equispaced(3, 1.0, 3.0)?;
    let schedule = Schedule::new(1.0, 0.6)?;
    let n = 20_000;
    let reps = 200;
    let mut cov = SquareMatrix::zeros(3);
    for r in 0..reps {
        let mut rng = RngStream::new(42, r);
        let state = run_trajectory(&problem, &schedule, &Vector::zeros(3), n, &mut rng, &mut [])?;
        let dev = state.mean().sub(problem.x_star());
        cov.add_outer(n as f64 / reps as f64, &dev, &dev);
    }
    let truth = problem.true_covariance()?;
    println!("empirical n Cov(x̄) = {cov:?}");
    println!("V = H⁻¹ S H⁻¹      = {truth:?}");
    println!("operator-norm gap  = {:.4}", operator_norm(&cov.sub(&truth)));
    Ok(())
}
