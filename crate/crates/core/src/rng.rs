//! Reproducible random streams.
//!
//! A stream is keyed by `(base_seed, stream_id)`. The key expands to a
//! ChaCha8 state whose 64-bit stream selector is `stream_id`, so replication
//! `r` of an experiment uses stream `r` and replications never share draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::Vector;

#[derive(Clone, Debug)]
pub struct RngStream {
    base_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(base_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
        rng.set_stream(stream_id);
        RngStream {
            base_seed,
            stream_id,
            rng,
        }
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Rewinds to the first draw.
    pub fn reset(&mut self) {
        *self = RngStream::new(self.base_seed, self.stream_id);
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.rng.sample(StandardNormal);
        }
    }

    pub fn gaussian_vector(&mut self, d: usize) -> Vector {
        let mut v = Vector::zeros(d);
        self.fill_standard_normal(v.as_mut_slice());
        v
    }
}
