//! Monte Carlo checks against closed-form oracles.

use online_cov::estimators::{EstimatorKind, EstimatorSpec};
use online_cov::harness::iid::{sample_covariance, scalar_mean_abs_error};
use online_cov::harness::{fit_power_law, replication_seed};
use online_cov::inference::coverage_experiment;
use online_cov::linalg::{operator_norm, SquareMatrix, Vector};
use online_cov::minimax::{kl_exact, kl_monte_carlo, TwoPointConfig};
use online_cov::regression::{RegOptions, RegSink};
use online_cov::rng::RngStream;
use online_cov::sgd::{run_trajectory, QuadraticProblem, Schedule};
use rayon::prelude::*;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn std_error(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}

#[test]
fn averaged_iterate_clt() {
    // n Cov(x̄_n) → V
    let problem = QuadraticProblem::isotropic(2, 1.0, 1.0).unwrap();
    let schedule = Schedule::new(1.0, 0.55).unwrap();
    let n = 100_000;
    let means: Vec<Vector> = (0..500u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(1, r);
            run_trajectory(&problem, &schedule, &Vector::zeros(2), n, &mut rng, &mut [])
                .unwrap()
                .mean()
        })
        .collect();
    let mut cov = SquareMatrix::zeros(2);
    for m in &means {
        cov.add_outer(n as f64 / means.len() as f64, m, m);
    }
    let v = problem.true_covariance().unwrap();
    assert!(operator_norm(&cov.sub(&v)) < 0.15, "{cov:?}");
}

#[test]
fn second_moment_recursion() {
    // E‖x_t‖² = d c_t with c_{t+1} = (1 − η_t)² c_t + η_t² for H = S = I
    let d = 3;
    let problem = QuadraticProblem::isotropic(d, 1.0, 1.0).unwrap();
    let schedule = Schedule::new(0.8, 0.6).unwrap();
    let t_end = 100;
    let samples: Vec<f64> = (0..10_000u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(5, r);
            run_trajectory(&problem, &schedule, &Vector::zeros(d), t_end, &mut rng, &mut [])
                .unwrap()
                .x()
                .norm_sq()
        })
        .collect();
    let mut c = 0.0;
    for t in 0..t_end {
        let eta = schedule.stepsize(t);
        c = (1.0 - eta).powi(2) * c + eta * eta;
    }
    let oracle = d as f64 * c;
    assert!((mean(&samples) - oracle).abs() < 4.0 * std_error(&samples));
}

#[test]
fn kl_simulation_agrees_with_recursion() {
    let cfg = TwoPointConfig::new(2, 0.1, Schedule::new(1.0, 0.55).unwrap(), 100).unwrap();
    let mc = kl_monte_carlo(&cfg, 10_000, 3).unwrap();
    let exact = kl_exact(&cfg);
    assert!((mc.mean - exact).abs() < 4.0 * mc.std_error, "{mc:?} vs {exact}");

    let off_origin = cfg.with_initial(Vector::from_slice(&[1.0, -0.5])).unwrap();
    let mc = kl_monte_carlo(&off_origin, 10_000, 4).unwrap();
    let exact = kl_exact(&off_origin);
    assert!((mc.mean - exact).abs() < 4.0 * mc.std_error);
}

#[test]
fn kl_standard_error_scaling() {
    let cfg = TwoPointConfig::new(2, 0.1, Schedule::new(1.0, 0.55).unwrap(), 100).unwrap();
    let small = kl_monte_carlo(&cfg, 4_000, 8).unwrap();
    let large = kl_monte_carlo(&cfg, 8_000, 9).unwrap();
    let ratio = small.std_error / large.std_error;
    let root2 = 2f64.sqrt();
    assert!(ratio > root2 / 1.2 && ratio < root2 * 1.2, "ratio {ratio}");
}

#[test]
fn kl_envelope_is_bounded() {
    let base = TwoPointConfig::new(2, 0.05, Schedule::new(1.0, 0.55).unwrap(), 1000).unwrap();
    let ratios: Vec<f64> = [1_000usize, 10_000, 100_000, 1_000_000]
        .iter()
        .map(|&n| kl_exact(&base.clone().with_horizon(n)) / (0.05f64.powi(2) * (n as f64).powf(0.45)))
        .collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi / lo < 1.2, "{ratios:?}");
}

#[test]
fn hessian_error_rate() {
    let problem = QuadraticProblem::isotropic(2, 1.0, 1.0).unwrap();
    let schedule = Schedule::new(1.0, 0.55).unwrap();
    let ns = [1_000usize, 10_000, 100_000];
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let e: Vec<f64> = (0..100u64)
                .into_par_iter()
                .map(|r| {
                    let mut rng = RngStream::new(replication_seed(21, n as u64, r), 0);
                    let mut sink = RegSink::with_initial(&Vector::zeros(2));
                    run_trajectory(&problem, &schedule, &Vector::zeros(2), n, &mut rng, &mut [&mut sink]).unwrap();
                    let est = sink.state().finalize(&RegOptions::default()).unwrap();
                    operator_norm(&est.hessian.sub(problem.hessian()))
                })
                .collect();
            mean(&e)
        })
        .collect();
    let ns_f: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let fit = fit_power_law(&ns_f, &errs).unwrap();
    assert!((fit.slope - 0.225).abs() < 0.08, "slope {}", fit.slope);
}

#[test]
fn coverage_at_the_median_level() {
    let problem = QuadraticProblem::equispaced(3, 1.0, 3.0).unwrap();
    let schedule = Schedule::new(1.0, 0.55).unwrap();
    let spec = EstimatorSpec::standard(EstimatorKind::Oracle);
    let levels = [0.3, 0.5, 0.7, 0.9];
    let reports = coverage_experiment(&problem, &schedule, &spec, 20_000, 400, &levels, 17).unwrap();
    let half = &reports[1];
    assert!((half.coverage - 0.5).abs() < 3.0 * (0.25f64 / 400.0).sqrt(), "{half:?}");
    for w in reports.windows(2) {
        assert!(w[1].coverage + 2.0 * w[1].std_error >= w[0].coverage);
    }
}

#[test]
fn iid_error_halves_when_n_quadruples() {
    let factor = SquareMatrix::identity(10);
    let err = |n: usize| {
        let e: Vec<f64> = (0..200u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = RngStream::new(replication_seed(2, n as u64, r), 0);
                operator_norm(&sample_covariance(&factor, n, &mut rng).sub(&factor))
            })
            .collect();
        mean(&e)
    };
    let ratio = err(8_000) / err(2_000);
    assert!((0.8 * 0.5..=1.25 * 0.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn scalar_variance_oracle() {
    let n = 1_000;
    let samples: Vec<f64> = (0..4_000u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(31, r);
            (sample_covariance(&SquareMatrix::identity(1), n, &mut rng)[(0, 0)] - 1.0).abs()
        })
        .collect();
    let oracle = scalar_mean_abs_error(n);
    assert!((mean(&samples) - oracle).abs() < 3.0 * std_error(&samples));
}
