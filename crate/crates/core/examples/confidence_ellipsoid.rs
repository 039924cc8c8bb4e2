//! A 95% confidence ellipsoid for x* from one run, then coverage over many.

use online_cov::prelude::*;

fn main() -> Result<()> {
    let problem = QuadraticProblem::equispaced(3, 1.0, 3.0)?;
    let schedule = Schedule::new(1.0, 0.55)?;
    let n = 50_000;
    let x0 = Vector::zeros(3);
    let mut sink = RegSink::with_initial(&x0);
    let mut rng = RngStream::new(11, 0);
    let state = run_trajectory(&problem, &schedule, &x0, n, &mut rng, &mut [&mut sink])?;
    let est = sink.state().finalize(&RegOptions::default())?;
    let ellipsoid = build_ellipsoid(&state.mean(), &est.covariance, n, 0.95)?;
    println!(
        "statistic {:.3} vs radius² {:.3}: covers x* = {}",
        ellipsoid.statistic(problem.x_star()),
        ellipsoid.radius_sq,
        ellipsoid.covers(problem.x_star())
    );
    let spec = EstimatorSpec::standard(EstimatorKind::Regression);
    let reports = coverage_experiment(&problem, &schedule, &spec, 10_000, 100, &[0.8, 0.95], 13)?;
    for r in reports {
        println!("level {}: coverage {:.2} ± {:.2}", r.level, r.coverage, r.std_error);
    }
    Ok(())
}
