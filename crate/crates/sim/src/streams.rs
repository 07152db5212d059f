//! One RNG stream per stochastic component, each derived from the config
//! seed with a fixed salt. Draws are always consumed (scaled by sigma), so
//! toggling one noise source never shifts another component's stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub(crate) struct SimStreams {
    pub survival: ChaCha8Rng,
    pub recruitment: ChaCha8Rng,
    pub fishing: ChaCha8Rng,
    pub environment: ChaCha8Rng,
    pub observation: Vec<ChaCha8Rng>,
}

impl SimStreams {
    pub fn new(seed: u64, n_fleets: usize) -> Self {
        let stream = |salt: u64| ChaCha8Rng::seed_from_u64(seed.wrapping_add(salt));
        Self {
            survival: stream(0x5331_0001),
            recruitment: stream(0x5331_0002),
            fishing: stream(0x5331_0003),
            environment: stream(0x5331_0004),
            observation: (0..n_fleets)
                .map(|i| stream(0x5331_1000 + i as u64))
                .collect(),
        }
    }
}

/// A zero-mean normal draw with the given standard deviation. The
/// underlying uniform draw happens even when sigma is zero.
pub(crate) fn normal(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    sigma * z
}
