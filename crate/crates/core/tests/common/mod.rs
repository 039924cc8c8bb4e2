//! Shared fixtures: recorded trajectories and an offline batch-means oracle.

use online_cov::linalg::{SquareMatrix, Vector};
use online_cov::rng::RngStream;
use online_cov::sgd::{run_trajectory, QuadraticProblem, Schedule};

pub fn trajectory(problem: &QuadraticProblem, alpha: f64, n: usize, seed: u64) -> Vec<Vector> {
    let schedule = Schedule::new(1.0, alpha).unwrap();
    let d = problem.dim();
    let mut xs = vec![Vector::zeros(d)];
    let mut rec = |_t: usize, x: &Vector, _eta: f64| -> online_cov::Result<()> {
        xs.push(x.clone());
        Ok(())
    };
    run_trajectory(problem, &schedule, &Vector::zeros(d), n, &mut RngStream::new(seed, 0), &mut [&mut rec])
        .unwrap();
    xs
}

/// Direct evaluation from the stored iterates `x_1..x_n`.
pub fn offline_bm(xs: &[Vector], c: f64, beta: f64, rho: f64) -> SquareMatrix {
    let d = xs[0].len();
    let n = xs.len();
    let mut sizes = Vec::new();
    let mut total = 0usize;
    loop {
        let m = sizes.len() + 1;
        let a = ((c * (m as f64).powf(beta)).floor() as usize).max(1);
        if total + a > n {
            break;
        }
        total += a;
        sizes.push(a);
    }
    let b = sizes.len();
    let k = ((rho * b as f64 + 1e-9).floor() as usize).clamp(1, b);
    let mut mean = vec![0.0; d];
    for x in xs {
        for i in 0..d {
            mean[i] += x[i] / n as f64;
        }
    }
    let mut out = SquareMatrix::zeros(d);
    let mut start = 0;
    for (idx, &a) in sizes.iter().enumerate() {
        if idx + 1 > b - k {
            let mut y = vec![0.0; d];
            for x in &xs[start..start + a] {
                for i in 0..d {
                    y[i] += x[i] - mean[i];
                }
            }
            for i in 0..d {
                for j in 0..d {
                    out[(i, j)] += y[i] * y[j] / a as f64 / k as f64;
                }
            }
        }
        start += a;
    }
    out
}
