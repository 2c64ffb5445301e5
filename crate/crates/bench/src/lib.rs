//! Fixtures shared by the criterion benches in `benches/`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use satake_core::lingrp::random_element;
use satake_core::{GroupElement, RootSystem};

/// `count` random elements of `SL_n(ℝ)` with `log a` spread `spread`.
pub fn random_elements(n: usize, count: usize, spread: f64, seed: u64) -> Vec<GroupElement> {
    let rs = RootSystem::type_a(n).expect("supported rank");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_element(&rs, &mut rng, spread)).collect()
}
