use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Real;

/// A `(seed, stream)` pair naming one reproducible stream of random draws.
///
/// Streams are ChaCha8 streams of the same key, so every path of an ensemble
/// draws from its own stream regardless of which worker simulates it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource { seed, stream: 0 }
    }

    pub fn substream(self, stream: u64) -> Self {
        RandomSource {
            seed: self.seed,
            stream,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

pub fn fill_standard_normal<S: Real, R: rand::Rng + ?Sized>(rng: &mut R, out: &mut [S]) {
    for v in out {
        *v = S::standard_normal(rng);
    }
}
