//! Sample covariance of i.i.d. Gaussians against the √(d/n) reference.

use online_cov::harness::iid::{sample_covariance, scalar_mean_abs_error};
use online_cov::linalg::{operator_norm, SquareMatrix};
use online_cov::rng::RngStream;

fn main() {
    let d = 10;
    let sigma = SquareMatrix::identity(d);
    for n in [1_000, 10_000] {
        let reps = 50;
        let mean: f64 = (0..reps)
            .map(|r| {
                let mut rng = RngStream::new(17, r);
                operator_norm(&sample_covariance(&sigma, n, &mut rng).sub(&sigma))
            })
            .sum::<f64>()
            / reps as f64;
        println!("n = {n}: error {mean:.4}, √(d/n) = {:.4}", (d as f64 / n as f64).sqrt());
    }
    println!("d = 1, n = 100: E|s² − 1| = {:.5}", scalar_mean_abs_error(100));
}
