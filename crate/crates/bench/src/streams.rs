//! Synthetic point streams.

use rand::Rng;

use ckm_core::rng::{substream, TAG_ORDER};
use ckm_core::MetricInstance;

/// Side of the integer grid `[0, GRID_SIDE]^2` used for uniform streams.
pub const GRID_SIDE: i64 = 1000;

/// `n` points drawn uniformly from the integer grid, unit weights, already
/// normalized and cached.
pub fn uniform_grid(n: usize, seed: u64) -> MetricInstance {
    let mut rng = substream(seed, TAG_ORDER, 1);
    let coords: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(0..=GRID_SIDE) as f64).collect();
    let mut m = MetricInstance::euclidean(2, coords).expect("finite coordinates");
    m.normalize();
    m.precompute_distances();
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let a = uniform_grid(50, 7);
        let b = uniform_grid(50, 7);
        assert_eq!(a.len(), 50);
        for p in a.ids() {
            assert_eq!(a.coords(p), b.coords(p));
        }
        assert!(a.delta() <= 2f64.sqrt() * GRID_SIDE as f64 + 1e-9);
    }
}
