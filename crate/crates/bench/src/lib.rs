//! Benchmark fixtures shared by the criterion targets.

use cspriv_core::keys::KeyStream;

/// Deterministic uniform vector in [-1, 1).
pub fn signal(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = KeyStream::new(seed);
    (0..len).map(|_| 2.0 * rng.unit() - 1.0).collect()
}
