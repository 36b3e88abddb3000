use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot sample {requested} items from a population of {population}")]
pub struct SampleError {
    pub requested: usize,
    pub population: usize,
}

/// Uniform sample without replacement, reproducible for a given seed.
///
/// The result is in draw order. The generator is ChaCha8 seeded from
/// `seed`, so samples are stable across platforms and releases of this crate.
pub fn sample_without_replacement<T: Clone>(
    population: &[T],
    n: usize,
    seed: u64,
) -> Result<Vec<T>, SampleError> {
    if n > population.len() {
        return Err(SampleError {
            requested: n,
            population: population.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, population.len(), n)
        .into_iter()
        .map(|i| population[i].clone())
        .collect())
}

/// Draw matches for manual precision review.
pub fn sample_matches(
    matches: &[super::MatchRecord],
    n: usize,
    seed: u64,
) -> Result<Vec<super::MatchRecord>, SampleError> {
    sample_without_replacement(matches, n, seed)
}
