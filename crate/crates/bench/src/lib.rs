//! Shared fixtures for the benchmarks.

use pess_core::sed::random_layout;
use pess_core::{minimize, ElasticEnergy, OptimizerSettings, Solution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Container radius for a packing of density 0.6.
pub fn dense_radius(n: usize) -> f64 {
    (n as f64 / 0.6).cbrt()
}

/// Uniformly scattered centers in a density-0.6 container. Heavily
/// overlapping, like the first step of a search.
pub fn scattered(n: usize, seed: u64) -> Solution {
    let radius = dense_radius(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Solution::new(random_layout(n, radius, &mut rng), radius).expect("valid fixture")
}

/// A scattered layout after one local minimization, the typical state of a
/// candidate during the search.
pub fn relaxed(n: usize, seed: u64) -> Solution {
    let s = scattered(n, seed);
    let radius = s.radius();
    let m = minimize(&ElasticEnergy::new(n, radius), s.layout.as_slice(), &OptimizerSettings::default())
        .expect("fixture minimization");
    Solution::new(pess_core::Layout::from_flat(m.x).expect("finite"), radius).expect("valid fixture")
}
