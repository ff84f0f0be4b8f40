//! Recompute-from-scratch comparator: a fresh local search after every
//! insertion, with the same ledger and lower-bound policy as the engine.

use std::time::Instant;

use crate::error::SolveError;
use crate::metric::{set_difference_count, MetricInstance, PointId, Weighted};
use crate::offline::{klp_fractional, local_search_kmedian};

use super::ledger::{ConsistencyLedger, StepRecord};

#[derive(Clone, Debug)]
pub struct BaselineConfig {
    pub k: usize,
    pub seed: u64,
    pub iters: usize,
    pub lb_interval: usize,
    pub timing: bool,
}

impl BaselineConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, seed, iters: 10_000, lb_interval: 100, timing: false }
    }
}

pub fn run_baseline(
    metric: &MetricInstance,
    cfg: &BaselineConfig,
    order: &[PointId],
) -> Result<ConsistencyLedger, SolveError> {
    run_baseline_until(metric, cfg, order, |_| false)
}

/// Like [`run_baseline`], but stops after the first step for which `stop`
/// returns true (that step is kept).
pub fn run_baseline_until(
    metric: &MetricInstance,
    cfg: &BaselineConfig,
    order: &[PointId],
    mut stop: impl FnMut(&StepRecord) -> bool,
) -> Result<ConsistencyLedger, SolveError> {
    let mut ledger = ConsistencyLedger::new(true);
    let mut raw: Vec<Weighted> = Vec::with_capacity(order.len());
    let mut prev: Vec<PointId> = Vec::new();
    let (mut lb, mut lb_n) = (0.0, 0);
    for (i, &x) in order.iter().enumerate() {
        let started = cfg.timing.then(Instant::now);
        let step = i as u64 + 1;
        raw.push(Weighted::new(x, metric.weight(x)));
        let out = local_search_kmedian(metric, &raw, cfg.k, cfg.iters, cfg.seed);
        let sol = out.solution.centers().to_vec();
        let cost = out.solution.cached_cost().unwrap_or(0.0);
        let stale_zero = lb == 0.0 && cost > 0.0 && lb_n != raw.len();
        if step == 1 || stale_zero || (cfg.lb_interval > 0 && step.is_multiple_of(cfg.lb_interval as u64)) {
            let ids: Vec<PointId> = raw.iter().map(|p| p.id).collect();
            lb = klp_fractional(metric, &raw, &ids, cfg.k)?.value;
            lb_n = raw.len();
        }
        let lower_bound = if lb_n == raw.len() { lb } else { lb / 2.0 };
        let rec = StepRecord {
            step,
            n_so_far: raw.len() as u64,
            cost,
            lower_bound,
            changes: set_difference_count(&sol, &prev) as u64,
            cum_changes: 0,
            phase_id: 0,
            epoch_id: 0,
            wall_micros: started.map_or(0, |t| t.elapsed().as_micros() as u64),
        };
        let done = stop(ledger.push(rec, &sol));
        prev = sol;
        if done {
            break;
        }
    }
    Ok(ledger)
}
