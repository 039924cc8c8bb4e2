//! Hessian, noise and covariance from regressing increments on iterates.

use online_cov::prelude::*;

fn main() -> Result<()> {
    let problem = QuadraticProblem::equispaced(3, 1.0, 3.0)?;
    let schedule = Schedule::new(1.0, 0.55)?;
    let x0 = Vector::zeros(3);
    let mut sink = RegSink::with_initial(&x0);
    let mut rng = RngStream::new(9, 0);
    run_trajectory(&problem, &schedule, &x0, 100_000, &mut rng, &mut [&mut sink])?;
    let est = sink.state().finalize(&RegOptions::default())?;
    println!("{} pairs", sink.state().n_pairs());
    println!("Ĥ = {:?}", est.hessian);
    println!("Ŝ = {:?}", est.noise);
    println!("‖Ĥ − H‖ = {:.4}", operator_norm(&est.hessian.sub(problem.hessian())));
    println!("‖V̂ − V‖ = {:.4}", operator_norm(&est.covariance.sub(&problem.true_covariance()?)));
    Ok(())
}
