#![allow(dead_code)]

use proptest::prelude::*;

use ckm_core::{MetricInstance, PointId, Weighted};

/// Coordinates and weights of a small weighted instance.
#[derive(Clone, Debug)]
pub struct GenInstance {
    pub dim: usize,
    pub coords: Vec<f64>,
    pub weights: Vec<u64>,
}

impl GenInstance {
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn build(&self) -> MetricInstance {
        let mut m = MetricInstance::euclidean(self.dim, self.coords.clone())
            .unwrap()
            .with_weights(self.weights.clone())
            .unwrap();
        m.normalize();
        m
    }
}

/// Integer points on a line or in the plane. Coordinates mix a coarse and a
/// fine scale so that balls at several powers of ten are populated.
pub fn instance_strategy(n: std::ops::RangeInclusive<usize>, max_w: u64) -> impl Strategy<Value = GenInstance> {
    (1usize..=2, n).prop_flat_map(move |(dim, n)| {
        (Just(dim), prop::collection::vec((0i64..20, 0i64..50), n * dim), prop::collection::vec(1..=max_w, n)).prop_map(
            |(dim, c, weights)| GenInstance {
                dim,
                coords: c.into_iter().map(|(a, b)| (a * 100 + b) as f64).collect(),
                weights,
            },
        )
    })
}

pub fn ids(v: &[usize]) -> Vec<PointId> {
    v.iter().map(|&i| PointId::from(i)).collect()
}

/// Exact k-median optimum by enumeration, written independently of the
/// library's brute-force solver.
pub fn opt_cost(m: &MetricInstance, pts: &[Weighted], k: usize) -> f64 {
    let n = pts.len();
    let r = k.min(n);
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        let centers: Vec<PointId> = idx.iter().map(|&i| pts[i].id).collect();
        let c: f64 = pts
            .iter()
            .map(|p| p.weight as f64 * centers.iter().map(|&c| m.dist(p.id, c)).fold(f64::INFINITY, f64::min))
            .sum();
        best = best.min(c);
        let mut i = r;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < n - r + i {
                idx[i] += 1;
                for j in i + 1..r {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}
