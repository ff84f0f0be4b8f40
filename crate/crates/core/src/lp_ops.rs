//! LP-based center operations: bounded-swap improvement and center removal.

use rand::Rng;
use serde::Serialize;

use crate::error::SolveError;
use crate::lp::{KMedianLp, LpSolution, SwapConstraint};
use crate::metric::{set_difference_count, CenterSolution, MetricInstance, PointId, Weighted};
use crate::offline::{for_each_combination, n_choose_k, DenseTable, BRUTE_FORCE_GUARD};
use crate::rounding::systematic_round;

/// Per-draw acceptance factor for swap rounding.
pub const SWAP_COST_FACTOR: f64 = 13.0;
/// Per-draw acceptance factor when removal falls back to rounding.
pub const REMOVE_ROUNDING_FACTOR: f64 = 3.25;

/// `ceil(10 * log2(n + delta))`, at least 1.
pub fn retry_budget(n: usize, delta: f64) -> usize {
    ((10.0 * (n as f64 + delta).log2()).ceil() as usize).max(1)
}

#[derive(Clone, Debug, Serialize)]
pub struct SwapResult {
    pub centers: CenterSolution,
    pub swaps_used: usize,
    pub cost: f64,
    pub lp_value: f64,
    pub rounds_tried: usize,
    pub certified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RemoveResult {
    pub centers: CenterSolution,
    /// Largest `l` whose `(k - l)`-center LP over `U` stays within the factor.
    pub l: usize,
    pub lp_value: f64,
    /// Whether the exact subset solver produced `centers`.
    pub exact: bool,
    /// Cost guarantee relative to `c * cost(U)`: 3 for exact, 3.25 for rounded.
    pub bound_factor: f64,
    pub certified: bool,
}

/// The swap LP anchored at `u`: candidates are every point, at most `k`
/// opened in total and at most `l + (k - |u|)` opening mass outside `u`.
///
/// Swaps are counted as centers of `u` that get dropped, so the `k - |u|`
/// free slots may be filled at no charge. Without that allowance the LP would
/// not relax every `W` with `|u \ W| <= l` when `|u| < k`.
pub fn build_swap_lp<'a>(
    metric: &'a MetricInstance,
    u: &CenterSolution,
    points: &'a [Weighted],
    k: usize,
    l: usize,
) -> KMedianLp<'a> {
    let mut candidates: Vec<PointId> = points.iter().map(|p| p.id).collect();
    for &c in u.centers() {
        if !candidates.contains(&c) {
            candidates.push(c);
        }
    }
    let anchors = if u.is_empty() { candidates.iter().take(1).copied().collect() } else { u.centers().to_vec() };
    KMedianLp {
        metric,
        clients: points,
        candidates,
        budget: k as f64,
        swap: Some(SwapConstraint { anchor: u.centers().to_vec(), l: (l + k.saturating_sub(u.len())) as f64 }),
        anchors,
    }
}

/// Solves the swap LP and rounds it, accepting the first draw that changes
/// at most `4l` centers of `u` and costs at most `13 x` the LP value.
pub fn lp_swap<R: Rng + ?Sized>(
    metric: &MetricInstance,
    u: &CenterSolution,
    points: &[Weighted],
    k: usize,
    l: usize,
    rng: &mut R,
) -> Result<SwapResult, SolveError> {
    let base = metric.cost(u.centers(), points);
    // With free slots even l = 0 may add centers.
    if (l == 0 && u.len() >= k) || points.is_empty() {
        return Ok(SwapResult {
            centers: CenterSolution::with_cost(u.centers().to_vec(), base),
            swaps_used: 0,
            cost: base,
            lp_value: base,
            rounds_tried: 0,
            certified: true,
        });
    }
    let sol = build_swap_lp(metric, u, points, k, l).solve()?;
    let budget = retry_budget(points.len(), metric.delta());
    let mut best: Option<(bool, f64, Vec<PointId>, usize)> = None;
    for round in 1..=budget {
        let draw = systematic_round(&sol.y, k, rng);
        let swaps = set_difference_count(u.centers(), &draw);
        let cost = metric.cost(&draw, points);
        if swaps <= 4 * l && cost <= SWAP_COST_FACTOR * sol.value {
            return Ok(SwapResult {
                centers: CenterSolution::with_cost(draw, cost),
                swaps_used: swaps,
                cost,
                lp_value: sol.value,
                rounds_tried: round,
                certified: true,
            });
        }
        let within = swaps <= 4 * l;
        let better = best.as_ref().is_none_or(|b| (within, -cost) > (b.0, -b.1));
        if better {
            best = Some((within, cost, draw, swaps));
        }
    }
    let (_, cost, draw, swaps) = best.expect("at least one draw");
    Ok(SwapResult {
        centers: CenterSolution::with_cost(draw, cost),
        swaps_used: swaps,
        cost,
        lp_value: sol.value,
        rounds_tried: budget,
        certified: false,
    })
}

fn removal_lp(
    metric: &MetricInstance,
    u: &[PointId],
    points: &[Weighted],
    budget: usize,
) -> Result<LpSolution, SolveError> {
    KMedianLp {
        metric,
        clients: points,
        candidates: u.to_vec(),
        budget: budget as f64,
        swap: None,
        anchors: u.to_vec(),
    }
    .solve()
}

/// Finds the largest `l < k` such that the LP with at most `k - l` centers
/// drawn from `u` costs at most `c * cost(u)`, then returns an integral subset
/// of `u` with at most `k - l` centers.
pub fn lp_remove<R: Rng + ?Sized>(
    metric: &MetricInstance,
    u: &CenterSolution,
    points: &[Weighted],
    k: usize,
    c: f64,
    rng: &mut R,
) -> Result<RemoveResult, SolveError> {
    let base = metric.cost(u.centers(), points);
    let full = |l: usize| RemoveResult {
        centers: CenterSolution::with_cost(u.centers().to_vec(), base),
        l,
        lp_value: base,
        exact: true,
        bound_factor: 3.0,
        certified: true,
    };
    if u.is_empty() || k == 0 {
        return Ok(full(k.saturating_sub(1)));
    }
    if points.is_empty() {
        // Nothing to serve: a single center suffices.
        let one = CenterSolution::with_cost(u.centers()[..1].to_vec(), 0.0);
        return Ok(RemoveResult { centers: one, l: k - 1, lp_value: 0.0, ..full(k - 1) });
    }
    let limit = c * base * (1.0 + 1e-9) + 1e-9;
    // Smallest feasible budget; every budget >= |u| is feasible (value = cost(u)).
    let (mut lo, mut hi) = (1usize, u.len().min(k));
    let mut hi_value = if hi == u.len() { base } else { removal_lp(metric, u.centers(), points, hi)?.value };
    let mut hi_sol: Option<LpSolution> = None;
    while lo < hi {
        let mid = (lo + hi) / 2;
        let s = removal_lp(metric, u.centers(), points, mid)?;
        if s.value <= limit {
            hi = mid;
            hi_value = s.value;
            hi_sol = Some(s);
        } else {
            lo = mid + 1;
        }
    }
    let b = hi;
    let l = k - b;
    let table = DenseTable::new(metric, u.centers(), points);
    if n_choose_k(u.len(), b) <= BRUTE_FORCE_GUARD {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for_each_combination(u.len(), b, |set| {
            let cost = table.cost_of(set, metric.delta());
            if best.as_ref().is_none_or(|x| cost < x.0) {
                best = Some((cost, set.to_vec()));
            }
        });
        let (cost, set) = best.expect("b <= |u|");
        let centers = set.iter().map(|&i| u.centers()[i]).collect();
        return Ok(RemoveResult {
            centers: CenterSolution::with_cost(centers, cost),
            l,
            lp_value: hi_value,
            exact: true,
            bound_factor: 3.0,
            certified: true,
        });
    }
    let sol = match hi_sol {
        Some(s) => s,
        None => removal_lp(metric, u.centers(), points, b)?,
    };
    let budget = retry_budget(points.len(), metric.delta());
    let mut best: Option<(f64, Vec<PointId>)> = None;
    for _ in 0..budget {
        let draw = systematic_round(&sol.y, b, rng);
        let cost = metric.cost(&draw, points);
        if cost <= REMOVE_ROUNDING_FACTOR * sol.value {
            return Ok(RemoveResult {
                centers: CenterSolution::with_cost(draw, cost),
                l,
                lp_value: sol.value,
                exact: false,
                bound_factor: REMOVE_ROUNDING_FACTOR,
                certified: true,
            });
        }
        if best.as_ref().is_none_or(|x| cost < x.0) {
            best = Some((cost, draw));
        }
    }
    let (cost, draw) = best.expect("at least one draw");
    Ok(RemoveResult {
        centers: CenterSolution::with_cost(draw, cost),
        l,
        lp_value: sol.value,
        exact: false,
        bound_factor: REMOVE_ROUNDING_FACTOR,
        certified: false,
    })
}
