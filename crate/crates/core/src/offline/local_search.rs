use rand::seq::SliceRandom;

use crate::metric::{CenterSolution, MetricInstance, PointId, Weighted};
use crate::rng::{substream, TAG_TRACKER};

use super::{ids_of, DenseTable};

#[derive(Clone, Debug)]
pub struct LocalSearchOutcome {
    pub solution: CenterSolution,
    /// Cost after initialization and after every accepted swap.
    pub trace: Vec<f64>,
    pub swaps: usize,
}

struct Assign {
    near: Vec<usize>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

fn assign(t: &DenseTable, med: &[usize]) -> Assign {
    let n = t.n_clients;
    let mut a = Assign { near: vec![0; n], d1: vec![f64::INFINITY; n], d2: vec![f64::INFINITY; n] };
    for (slot, &ci) in med.iter().enumerate() {
        let row = t.row(ci);
        for j in 0..n {
            let d = row[j];
            if d < a.d1[j] {
                a.d2[j] = a.d1[j];
                a.d1[j] = d;
                a.near[j] = slot;
            } else if d < a.d2[j] {
                a.d2[j] = d;
            }
        }
    }
    a
}

fn greedy_indices(t: &DenseTable, k: usize, start: Vec<usize>) -> Vec<usize> {
    let nj = t.n_clients;
    let mut med = start;
    let mut d1 = vec![f64::INFINITY; nj];
    for &ci in &med {
        for (j, &d) in t.row(ci).iter().enumerate() {
            d1[j] = d1[j].min(d);
        }
    }
    let mut current: f64 =
        if med.is_empty() { f64::INFINITY } else { d1.iter().zip(&t.weights).map(|(d, w)| d * w).sum() };
    while med.len() < k.min(t.cands.len()) {
        let mut best: Option<(f64, usize)> = None;
        for ci in 0..t.cands.len() {
            if med.contains(&ci) {
                continue;
            }
            let row = t.row(ci);
            let mut c = 0.0;
            for j in 0..nj {
                c += t.weights[j] * d1[j].min(row[j]);
            }
            if best.is_none_or(|b| c < b.0) {
                best = Some((c, ci));
            }
        }
        match best {
            Some((c, ci)) if c < current => {
                med.push(ci);
                for (j, &d) in t.row(ci).iter().enumerate() {
                    d1[j] = d1[j].min(d);
                }
                current = c;
            }
            _ => break,
        }
    }
    med
}

/// Greedy forward selection: repeatedly add the candidate that lowers the
/// cost most, stopping at `k` centers or when no addition helps.
pub fn greedy_kmedian(metric: &MetricInstance, points: &[Weighted], k: usize) -> CenterSolution {
    if points.is_empty() || k == 0 {
        return CenterSolution::new(Vec::new());
    }
    let cands = ids_of(points);
    let t = DenseTable::new(metric, &cands, points);
    let med = greedy_indices(&t, k, Vec::new());
    let cost = t.cost_of(&med, metric.delta());
    CenterSolution::with_cost(med.iter().map(|&i| cands[i]).collect(), cost)
}

/// Greedy initialization followed by single-swap local search.
pub fn local_search_kmedian(
    metric: &MetricInstance,
    points: &[Weighted],
    k: usize,
    max_iters: usize,
    seed: u64,
) -> LocalSearchOutcome {
    local_search_from(metric, points, k, &[], max_iters, seed)
}

/// Single-swap local search started from `init` (topped up greedily to `k`
/// centers). Swaps are applied eagerly: candidates are scanned in a seeded
/// order and the first improving swap found for a candidate is taken, using
/// the best center to drop for it. Stops after a full scan without
/// improvement or after `max_iters` swaps.
pub fn local_search_from(
    metric: &MetricInstance,
    points: &[Weighted],
    k: usize,
    init: &[PointId],
    max_iters: usize,
    seed: u64,
) -> LocalSearchOutcome {
    if points.is_empty() || k == 0 {
        let c = metric.cost(&[], points);
        return LocalSearchOutcome { solution: CenterSolution::with_cost(Vec::new(), c), trace: vec![c], swaps: 0 };
    }
    let mut cands = ids_of(points);
    for &p in init {
        if !cands.contains(&p) {
            cands.push(p);
        }
    }
    let t = DenseTable::new(metric, &cands, points);
    let mut start: Vec<usize> = Vec::new();
    for &p in init.iter().take(k) {
        let ci = cands.iter().position(|&c| c == p).expect("init member is a candidate");
        if !start.contains(&ci) {
            start.push(ci);
        }
    }
    let mut med = greedy_indices(&t, k, start);
    let mut a = assign(&t, &med);
    let mut cost: f64 = a.d1.iter().zip(&t.weights).map(|(d, w)| d * w).sum();
    let mut trace = vec![cost];
    let mut swaps = 0;

    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.shuffle(&mut substream(seed, TAG_TRACKER, cands.len() as u64));
    let mut is_med = vec![false; cands.len()];
    for &ci in &med {
        is_med[ci] = true;
    }
    let nj = t.n_clients;
    let mut delta = vec![0.0; med.len()];
    let mut since_improve = 0;
    let mut pos = 0;
    while since_improve < order.len() && swaps < max_iters && cost > 0.0 {
        let ci = order[pos];
        pos = (pos + 1) % order.len();
        since_improve += 1;
        if is_med[ci] {
            continue;
        }
        let row = t.row(ci);
        let mut base = 0.0;
        delta.iter_mut().for_each(|d| *d = 0.0);
        for j in 0..nj {
            let d = row[j];
            let w = t.weights[j];
            let keep = a.d1[j].min(d);
            base += w * (keep - a.d1[j]);
            delta[a.near[j]] += w * (a.d2[j].min(d) - keep);
        }
        let (slot, best) =
            delta.iter().enumerate().fold((0, f64::INFINITY), |acc, (s, &v)| if v < acc.1 { (s, v) } else { acc });
        let gain = base + best;
        if gain < -1e-12 * cost.max(1.0) {
            let old = med[slot];
            med[slot] = ci;
            let na = assign(&t, &med);
            let new_cost: f64 = na.d1.iter().zip(&t.weights).map(|(d, w)| d * w).sum();
            if new_cost < cost {
                is_med[old] = false;
                is_med[ci] = true;
                a = na;
                cost = new_cost;
                trace.push(cost);
                swaps += 1;
                since_improve = 0;
            } else {
                med[slot] = old;
            }
        }
    }
    let solution = CenterSolution::with_cost(med.iter().map(|&i| cands[i]).collect(), cost);
    LocalSearchOutcome { solution, trace, swaps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offline::brute_force_kmedian;

    #[test]
    fn k_equals_n_is_free() {
        let m = MetricInstance::line(&[0.0, 3.0, 9.0]);
        let r = local_search_kmedian(&m, &m.all_points(), 3, 100, 1);
        assert_eq!(r.solution.cached_cost(), Some(0.0));
    }

    #[test]
    fn line_example_matches_brute_force() {
        let m = MetricInstance::line(&[0.0, 1.0, 2.0, 100.0]);
        let r = local_search_kmedian(&m, &m.all_points(), 2, 100, 7);
        assert_eq!(r.solution.cached_cost(), Some(2.0));
        let b = brute_force_kmedian(&m, &m.all_points(), 2).unwrap();
        assert_eq!(r.solution.cached_cost(), b.cached_cost());
    }

    #[test]
    fn trace_is_monotone_and_warm_start_keeps_init() {
        let xs: Vec<f64> = (0..40).map(|i| ((i * 37) % 101) as f64).collect();
        let m = MetricInstance::line(&xs);
        let pts = m.all_points();
        let r = local_search_kmedian(&m, &pts, 3, 1000, 3);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        let warm = local_search_from(&m, &pts, 3, r.solution.centers(), 1000, 3);
        assert_eq!(warm.swaps, 0);
        assert_eq!(warm.solution.centers(), r.solution.centers());
    }

    #[test]
    fn weights_pull_the_median() {
        let m = MetricInstance::line(&[0.0, 10.0]).with_weights(vec![1, 5]).unwrap();
        let r = local_search_kmedian(&m, &m.all_points(), 1, 10, 0);
        assert_eq!(r.solution.centers(), &[PointId(1)]);
        assert_eq!(r.solution.cached_cost(), Some(10.0));
    }
}
