use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use qst_core::{ChainSpec, Model};

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Random valid spec of the given model and length; mirrored parameters when
/// `centro` is set.
pub fn random_spec(rng: &mut ChaCha12Rng, model: Model, n: usize, centro: bool) -> ChainSpec {
    let len = n - 1;
    let (lo, hi) = match model {
        Model::ShortRange => (0.2, 2.0),
        Model::LongRange => (0.5, 2.0),
    };
    let mut params: Vec<f64> = (0..len).map(|_| rng.gen_range(lo..hi)).collect();
    if centro {
        for k in 0..len / 2 {
            params[len - 1 - k] = params[k];
        }
    }
    match model {
        Model::ShortRange => ChainSpec::short_range(params).unwrap(),
        Model::LongRange => ChainSpec::long_range(params, rng.gen_range(0.5..1.5)).unwrap(),
    }
}
