//! Offline k-median solvers: exhaustive oracles, local search, and the LP
//! lower bound used to guess the optimum.

mod brute;
mod fractional;
mod local_search;

pub use brute::{best_l_swap_bruteforce, brute_force_kmedian, for_each_combination, n_choose_k, BRUTE_FORCE_GUARD};
pub use fractional::{estimate_gopt, klp_fractional, FractionalKMedian, GoptEstimate};
pub use local_search::{greedy_kmedian, local_search_from, local_search_kmedian, LocalSearchOutcome};

use crate::metric::{MetricInstance, PointId, Weighted};

/// Row-major `candidates x clients` table of weighted distances
/// `w(j) * d(i, j)` and plain distances.
pub(crate) struct DenseTable {
    pub cands: Vec<PointId>,
    pub n_clients: usize,
    pub dist: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DenseTable {
    pub fn new(metric: &MetricInstance, cands: &[PointId], clients: &[Weighted]) -> Self {
        let n_clients = clients.len();
        let mut dist = Vec::with_capacity(cands.len() * n_clients);
        for &c in cands {
            dist.extend(clients.iter().map(|p| metric.dist(c, p.id)));
        }
        Self { cands: cands.to_vec(), n_clients, dist, weights: clients.iter().map(|p| p.weight as f64).collect() }
    }

    #[inline]
    pub fn row(&self, ci: usize) -> &[f64] {
        &self.dist[ci * self.n_clients..(ci + 1) * self.n_clients]
    }

    /// Cost of the candidate-index set `set`; the empty set pays `empty` per unit weight.
    pub fn cost_of(&self, set: &[usize], empty: f64) -> f64 {
        let mut total = 0.0;
        for j in 0..self.n_clients {
            let mut best = if set.is_empty() { empty } else { f64::INFINITY };
            for &ci in set {
                best = best.min(self.dist[ci * self.n_clients + j]);
            }
            total += self.weights[j] * best;
        }
        total
    }
}

pub(crate) fn ids_of(points: &[Weighted]) -> Vec<PointId> {
    points.iter().map(|p| p.id).collect()
}
