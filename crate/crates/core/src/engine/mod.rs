//! The online engine: phase restarts, sketch feeding, epochs and the
//! consistency ledger.
//!
//! Per raw insertion the tracker is refreshed first. If its cost reached
//! `phase_factor` times the value recorded at the phase start (or no phase
//! exists yet) a new phase starts from all points seen so far. Otherwise the
//! point goes through the sketch and every emitted weighted point advances the
//! current epoch:
//!
//! 1. on the first emission of an epoch, `lp_remove` shrinks the epoch's start
//!    solution `U0` and fixes `l`;
//! 2. the next `l` emissions are opened as centers verbatim;
//! 3. the emission after that triggers `lp_swap` anchored at `U0` with budget
//!    `a * l + b`, followed by Robustify; the result starts the next epoch.
//!
//! Certificates near an emitted point are invalidated before the epoch
//! consumes it.

pub mod audit;
pub mod baseline;
pub mod config;
pub mod diag;
pub mod ledger;

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use serde::Serialize;

pub use audit::{AuditEntry, AuditReport};
pub use baseline::{run_baseline, run_baseline_until, BaselineConfig};
pub use config::{ConstantsProfile, EngineConfig, TrackerMode};
pub use diag::count_well_separated;
pub use ledger::{write_steps_csv, ConsistencyLedger, StepRecord, STEPS_HEADER};

use crate::error::EngineError;
use crate::lp_ops::{lp_remove, lp_swap, retry_budget, REMOVE_ROUNDING_FACTOR};
use crate::metric::{set_difference_count, CenterSolution, MetricInstance, PointId, Weight, Weighted};
use crate::offline::{brute_force_kmedian, estimate_gopt, klp_fractional, local_search_from, n_choose_k, GoptEstimate};
use crate::rng::{substream, TAG_PHASE, TAG_REMOVE, TAG_SWAP};
use crate::robust::{invalidate_certificates, required_t, robustify, verify_robust_tuple, CertificateStore};
use crate::rounding::systematic_round;
use crate::sketch::MultiMeyerson;

/// Work bound (candidate sets times evaluation cost) under which the phase
/// start solves the initial weighted set exactly.
const EXACT_START_WORK: u128 = 20_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct SolutionUpdate {
    pub step: u64,
    pub centers: CenterSolution,
    pub changes: u64,
    pub cost: f64,
    pub lower_bound: f64,
    pub phase_id: u64,
    pub epoch_id: u64,
    pub emissions: usize,
    pub restarted: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EngineStats {
    pub emissions: u64,
    pub phases: u64,
    pub epochs_completed: u64,
    pub removals: u64,
    pub removed_total: u64,
    pub opened_verbatim: u64,
    pub swaps: u64,
    pub uncertified_swaps: u64,
    pub uncertified_removals: u64,
    pub swap_rounds: u64,
    pub make_robust_calls: u64,
    pub robustify_moves: u64,
    pub lp_lower_bounds: u64,
    pub q: usize,
    pub cap: usize,
    pub rescales: u64,
}

struct Phase {
    start_tracker_cost: f64,
    gopt: GoptEstimate,
    sketch: MultiMeyerson,
    points: Vec<Weighted>,
    index: HashMap<PointId, usize>,
}

impl Phase {
    fn add(&mut self, y: PointId, w: Weight) {
        match self.index.get(&y) {
            Some(&i) => self.points[i].weight += w,
            None => {
                self.index.insert(y, self.points.len());
                self.points.push(Weighted::new(y, w));
            }
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Stage {
    Fresh,
    Opening { remaining: usize },
}

struct Epoch {
    u0: CenterSolution,
    l: usize,
    inserted: usize,
    stage: Stage,
}

pub struct Engine<'a> {
    metric: &'a MetricInstance,
    cfg: EngineConfig,
    raw: Vec<Weighted>,
    tracker: CenterSolution,
    tracker_cost: f64,
    phase: Option<Phase>,
    epoch: Epoch,
    certs: CertificateStore,
    current: CenterSolution,
    ledger: ConsistencyLedger,
    lb_value: f64,
    lb_points: usize,
    observed_min: f64,
    observed_max: f64,
    stats: EngineStats,
    audit: AuditReport,
    step: u64,
    phase_id: u64,
    epoch_id: u64,
    tracker_ratio_max: f64,
}

impl<'a> Engine<'a> {
    pub fn new(metric: &'a MetricInstance, cfg: EngineConfig) -> Result<Self, EngineError> {
        if cfg.k == 0 {
            return Err(EngineError::Config("k must be at least 1".into()));
        }
        cfg.profile.validate().map_err(EngineError::Config)?;
        let audit = cfg.audit;
        Ok(Self {
            metric,
            cfg,
            raw: Vec::new(),
            tracker: CenterSolution::new(Vec::new()),
            tracker_cost: 0.0,
            phase: None,
            epoch: Epoch { u0: CenterSolution::new(Vec::new()), l: 0, inserted: 0, stage: Stage::Fresh },
            certs: CertificateStore::new(),
            current: CenterSolution::new(Vec::new()),
            ledger: ConsistencyLedger::new(audit),
            lb_value: 0.0,
            lb_points: 0,
            observed_min: f64::INFINITY,
            observed_max: 0.0,
            stats: EngineStats::default(),
            audit: AuditReport::with_standard_checks(),
            step: 0,
            phase_id: 0,
            epoch_id: 0,
            tracker_ratio_max: 0.0,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn solution(&self) -> &CenterSolution {
        &self.current
    }

    pub fn ledger(&self) -> &ConsistencyLedger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut ConsistencyLedger {
        &mut self.ledger
    }

    pub fn stats(&self) -> &EngineStats {
        &self.stats
    }

    pub fn audit(&self) -> &AuditReport {
        &self.audit
    }

    pub fn certificates(&self) -> &CertificateStore {
        &self.certs
    }

    /// Weighted point set of the current phase (initial set plus stream).
    pub fn phase_points(&self) -> &[Weighted] {
        self.phase.as_ref().map_or(&[], |p| &p.points)
    }

    pub fn raw_points(&self) -> &[Weighted] {
        &self.raw
    }

    pub fn sketch(&self) -> Option<&MultiMeyerson> {
        self.phase.as_ref().map(|p| &p.sketch)
    }

    pub fn tracker_cost(&self) -> f64 {
        self.tracker_cost
    }

    pub fn phase_start_tracker_cost(&self) -> Option<f64> {
        self.phase.as_ref().map(|p| p.start_tracker_cost)
    }

    pub fn gopt(&self) -> Option<GoptEstimate> {
        self.phase.as_ref().map(|p| p.gopt)
    }

    /// Processes one raw insertion and records it in the ledger.
    pub fn process_insertion(&mut self, x: PointId) -> Result<SolutionUpdate, EngineError> {
        let started = self.cfg.timing.then(Instant::now);
        self.step += 1;
        let before = self.current.centers().to_vec();
        self.observe(x);
        self.raw.push(Weighted::new(x, self.metric.weight(x)));
        let forced = self.cfg.auto_rescale && self.rescale();
        self.update_tracker()?;

        let restart = forced
            || match &self.phase {
                None => true,
                Some(p) => {
                    self.tracker_cost > 0.0 && self.tracker_cost >= self.cfg.profile.phase_factor * p.start_tracker_cost
                }
            };
        let mut emissions = 0;
        if restart {
            self.start_phase()?;
        } else {
            let start = self.phase.as_ref().expect("phase exists").start_tracker_cost;
            let bound = self.cfg.profile.phase_factor * start;
            let cost = self.tracker_cost;
            self.audit.check(audit::PHASE_INVARIANT, cost < bound || cost == 0.0, || {
                format!("step {}: tracker {cost} >= {bound} without restart", self.step)
            });
            let out = {
                let phase = self.phase.as_mut().expect("phase exists");
                phase.sketch.insert(self.metric, x)
            };
            emissions = out.len();
            for (y, w) in out {
                self.handle_emission(y, w)?;
            }
        }

        let cost = self.metric.cost(self.current.centers(), &self.raw);
        let lower_bound = self.lower_bound(restart, cost)?;
        self.current = CenterSolution::with_cost(self.current.centers().to_vec(), cost);
        let changes = set_difference_count(self.current.centers(), &before) as u64;
        let k = self.cfg.k;
        let n_centers = self.current.len();
        let registered = self.current.centers().iter().all(|c| c.idx() < self.metric.len());
        self.audit.check(audit::CENTER_COUNT, n_centers <= k && registered, || {
            format!("step {}: {n_centers} centers (k = {k})", self.step)
        });
        let ceiling = self.cfg.profile.cost_ceiling();
        let rec = StepRecord {
            step: self.step,
            n_so_far: self.raw.len() as u64,
            cost,
            lower_bound,
            changes,
            cum_changes: 0,
            phase_id: self.phase_id,
            epoch_id: self.epoch_id,
            wall_micros: started.map_or(0, |t| t.elapsed().as_micros() as u64),
        };
        let ratio = rec.ratio();
        self.audit.check(audit::COST_CEILING, ratio <= ceiling, || {
            format!("step {}: cost/LB {ratio} above {ceiling}", self.step)
        });
        if lower_bound > 0.0 {
            self.tracker_ratio_max = self.tracker_ratio_max.max(self.tracker_cost / lower_bound);
        }
        self.ledger.push(rec, self.current.centers());
        Ok(SolutionUpdate {
            step: self.step,
            centers: self.current.clone(),
            changes,
            cost,
            lower_bound,
            phase_id: self.phase_id,
            epoch_id: self.epoch_id,
            emissions,
            restarted: restart,
        })
    }

    /// Runs the end-of-run audits (ledger recount) and returns the report.
    pub fn finish_audit(&mut self) -> &AuditReport {
        if self.cfg.audit {
            let r = self.ledger.recount();
            self.audit.check(audit::LEDGER_RECOUNT, r.is_ok(), || r.clone().unwrap_err());
        }
        &self.audit
    }

    fn observe(&mut self, x: PointId) {
        for p in &self.raw {
            let d = self.metric.dist(p.id, x);
            if d > 0.0 {
                self.observed_min = self.observed_min.min(d);
                self.observed_max = self.observed_max.max(d);
            }
        }
    }

    /// Doubles `n` and `delta` as needed; true if anything changed.
    fn rescale(&mut self) -> bool {
        let mut changed = false;
        while self.raw.len() > self.cfg.n {
            self.cfg.n = (self.cfg.n * 2).max(1);
            changed = true;
        }
        if self.observed_min.is_finite() {
            let observed = self.observed_max / self.observed_min;
            while observed > self.cfg.delta {
                self.cfg.delta *= 2.0;
                changed = true;
            }
        }
        if changed {
            self.stats.rescales += 1;
        }
        changed && self.phase.is_some()
    }

    fn update_tracker(&mut self) -> Result<(), EngineError> {
        match self.cfg.tracker {
            TrackerMode::LocalSearch => {
                let out = local_search_from(
                    self.metric,
                    &self.raw,
                    self.cfg.k,
                    self.tracker.centers(),
                    self.cfg.tracker_iters,
                    self.cfg.seed,
                );
                self.tracker_cost = out.solution.cached_cost().unwrap_or(0.0);
                self.tracker = out.solution;
            }
            TrackerMode::Lp => {
                let ids: Vec<PointId> = self.raw.iter().map(|p| p.id).collect();
                let f = klp_fractional(self.metric, &self.raw, &ids, self.cfg.k)?;
                self.tracker_cost = 3.0 * f.value;
                self.lb_value = f.value;
                self.lb_points = self.raw.len();
            }
        }
        Ok(())
    }

    fn lower_bound(&mut self, restarted: bool, cost: f64) -> Result<f64, EngineError> {
        let n = self.raw.len();
        if self.cfg.tracker == TrackerMode::Lp || restarted {
            return Ok(self.lb_value);
        }
        // A carried zero says nothing once the cost is positive.
        let stale_zero = self.lb_value == 0.0 && cost > 0.0 && self.lb_points != n;
        if stale_zero || (self.cfg.lb_interval > 0 && self.step.is_multiple_of(self.cfg.lb_interval as u64)) {
            let ids: Vec<PointId> = self.raw.iter().map(|p| p.id).collect();
            self.lb_value = klp_fractional(self.metric, &self.raw, &ids, self.cfg.k)?.value;
            self.lb_points = n;
            self.stats.lp_lower_bounds += 1;
        }
        // An LP optimum on a subset is at most twice the optimum on any superset.
        Ok(if self.lb_points == n { self.lb_value } else { self.lb_value / 2.0 })
    }

    fn start_phase(&mut self) -> Result<(), EngineError> {
        self.phase_id += 1;
        self.stats.phases += 1;
        let gopt = estimate_gopt(self.metric, &self.raw, self.cfg.k)?;
        self.lb_value = gopt.lower_bound;
        self.lb_points = self.raw.len();
        self.stats.lp_lower_bounds += 1;
        let seed = rand::Rng::gen::<u64>(&mut substream(self.cfg.seed, TAG_PHASE, self.phase_id));
        let mut sketch = MultiMeyerson::new(self.cfg.k, self.cfg.n, self.cfg.delta, gopt.value, seed, self.cfg.sketch)?;
        for p in &self.raw {
            sketch.insert(self.metric, p.id);
        }
        let init = sketch.finalize_initial()?;
        self.stats.q = sketch.q();
        self.stats.cap = sketch.cap();
        self.stats.emissions += sketch.emission_count() as u64;
        let index = init.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
        let start = self.initial_solution(&init)?;
        self.certs.clear();
        let profile = &self.cfg.profile;
        let out = robustify(
            self.metric,
            &start,
            &init,
            &mut self.certs,
            profile.robust_check_denom,
            profile.robust_build_denom,
        )?;
        self.note_robustify(&out, &init);
        self.phase = Some(Phase { start_tracker_cost: self.tracker_cost, gopt, sketch, points: init, index });
        self.current = out.solution;
        self.begin_epoch();
        Ok(())
    }

    fn initial_solution(&self, init: &[Weighted]) -> Result<CenterSolution, EngineError> {
        let k = self.cfg.k;
        if init.len() <= 1 || self.metric.distinct_locations(init) <= 1 {
            return Ok(CenterSolution::new(vec![init[0].id]));
        }
        let r = k.min(init.len());
        let work = n_choose_k(init.len(), r).saturating_mul((init.len() * r) as u128);
        if work <= EXACT_START_WORK {
            return Ok(brute_force_kmedian(self.metric, init, k)?);
        }
        let ids: Vec<PointId> = init.iter().map(|p| p.id).collect();
        let f = klp_fractional(self.metric, init, &ids, k)?;
        let mut rng = substream(self.cfg.seed, TAG_PHASE, 1_000_000 + self.phase_id);
        let mut best: Option<(f64, Vec<PointId>)> = None;
        for _ in 0..retry_budget(init.len(), self.metric.delta()) {
            let draw = systematic_round(&f.y, k, &mut rng);
            let cost = self.metric.cost(&draw, init);
            if best.as_ref().is_none_or(|b| cost < b.0) {
                best = Some((cost, draw));
            }
            if cost <= REMOVE_ROUNDING_FACTOR * f.value {
                break;
            }
        }
        Ok(CenterSolution::new(best.expect("at least one draw").1))
    }

    fn begin_epoch(&mut self) {
        self.epoch_id += 1;
        self.epoch = Epoch { u0: self.current.clone(), l: 0, inserted: 0, stage: Stage::Fresh };
        let u0 = self.current.centers();
        let denom = self.cfg.profile.robust_check_denom;
        let bad = u0.iter().copied().find(|&u| {
            let need = required_t(self.metric, u, u0, denom);
            self.certs.valid_t(u).is_none_or(|t| t < need)
        });
        self.audit.check(audit::EPOCH_ENTRY, bad.is_none(), || {
            format!("epoch {}: center {} lacks a sufficient certificate", self.epoch_id, bad.unwrap())
        });
    }

    fn note_robustify(&mut self, out: &crate::robust::RobustifyOutcome, points: &[Weighted]) {
        self.stats.make_robust_calls += out.make_robust_calls as u64;
        self.stats.robustify_moves += out.changes.len() as u64;
        self.audit.check(audit::AT_MOST_ONCE, true, String::new);
        if self.cfg.audit {
            for &c in out.solution.centers() {
                if let Some(cert) = self.certs.get(c) {
                    let ok = verify_robust_tuple(self.metric, &cert.tuple, points);
                    self.audit.check(audit::TUPLE_REPLAY, ok, || format!("tuple for {c} fails the recurrence"));
                }
            }
        }
    }

    fn handle_emission(&mut self, y: PointId, w: Weight) -> Result<(), EngineError> {
        self.stats.emissions += 1;
        let k = self.cfg.k;
        if self.epoch.stage == Stage::Fresh {
            let phase = self.phase.as_ref().expect("phase exists");
            let mut rng = substream(self.cfg.seed, TAG_REMOVE, self.epoch_id);
            let r = lp_remove(self.metric, &self.epoch.u0, &phase.points, k, self.cfg.profile.c, &mut rng)?;
            self.stats.removals += 1;
            self.stats.removed_total += (self.epoch.u0.len() - r.centers.len()) as u64;
            if !r.certified {
                self.stats.uncertified_removals += 1;
            }
            self.epoch.l = r.l;
            self.epoch.stage = Stage::Opening { remaining: r.l };
            self.current = r.centers;
        }
        self.phase.as_mut().expect("phase exists").add(y, w);
        invalidate_certificates(&mut self.certs, self.metric, y);
        if self.cfg.audit {
            let points = &self.phase.as_ref().expect("phase exists").points;
            for cert in self.certs.iter().filter(|c| c.valid) {
                let ok = verify_robust_tuple(self.metric, &cert.tuple, points);
                self.audit.check(audit::CERT_SOUNDNESS, ok, || {
                    format!("valid certificate of {} no longer verifies", cert.center)
                });
            }
        }
        match self.epoch.stage {
            Stage::Opening { remaining } if remaining > 0 => {
                let mut c = self.current.centers().to_vec();
                c.push(y);
                self.current = CenterSolution::new(c);
                self.epoch.stage = Stage::Opening { remaining: remaining - 1 };
                self.epoch.inserted += 1;
                self.stats.opened_verbatim += 1;
            }
            _ => {
                let l2 = self.cfg.profile.swap_budget(self.epoch.l);
                let points = self.phase.as_ref().expect("phase exists").points.clone();
                let mut rng = substream(self.cfg.seed, TAG_SWAP, self.epoch_id);
                let sw = lp_swap(self.metric, &self.epoch.u0, &points, k, l2, &mut rng)?;
                self.stats.swaps += 1;
                self.stats.swap_rounds += sw.rounds_tried as u64;
                if !sw.certified {
                    self.stats.uncertified_swaps += 1;
                }
                let profile = &self.cfg.profile;
                let out = robustify(
                    self.metric,
                    &sw.centers,
                    &points,
                    &mut self.certs,
                    profile.robust_check_denom,
                    profile.robust_build_denom,
                )?;
                self.note_robustify(&out, &points);
                self.current = out.solution;
                self.stats.epochs_completed += 1;
                self.begin_epoch();
            }
        }
        Ok(())
    }

    pub fn report(&self) -> RunSummary {
        RunSummary::from_engine(self)
    }
}

/// Aggregate view of a finished (or ongoing) run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunSummary {
    pub steps: u64,
    pub cum_changes: u64,
    pub final_cost: f64,
    pub final_lower_bound: f64,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub emissions: u64,
    pub q: usize,
    pub cap: usize,
    pub phases: u64,
    pub epochs: u64,
    pub per_phase_changes: BTreeMap<u64, u64>,
    pub max_epoch_changes: u64,
    pub tracker_ratio_max: f64,
    pub stats: EngineStats,
    pub baseline_cum_changes: Option<u64>,
}

impl RunSummary {
    pub fn from_engine(e: &Engine<'_>) -> Self {
        let mut s = Self::from_ledger(&e.ledger);
        s.emissions = e.stats.emissions;
        s.q = e.stats.q;
        s.cap = e.stats.cap;
        s.phases = e.stats.phases;
        s.epochs = e.epoch_id;
        s.tracker_ratio_max = e.tracker_ratio_max;
        s.stats = e.stats.clone();
        s
    }

    pub fn from_ledger(l: &ConsistencyLedger) -> Self {
        let recs = l.records();
        let ratios: Vec<f64> = recs.iter().map(StepRecord::ratio).collect();
        Self {
            steps: recs.len() as u64,
            cum_changes: l.cumulative(),
            final_cost: recs.last().map_or(0.0, |r| r.cost),
            final_lower_bound: recs.last().map_or(0.0, |r| r.lower_bound),
            max_ratio: ratios.iter().copied().fold(0.0, f64::max),
            mean_ratio: if ratios.is_empty() { 0.0 } else { ratios.iter().sum::<f64>() / ratios.len() as f64 },
            per_phase_changes: l.per_phase(),
            max_epoch_changes: l.per_epoch().values().copied().max().unwrap_or(0),
            ..Self::default()
        }
    }
}

/// Runs the engine over `order` (ids inserted in sequence).
pub fn run_engine<'a>(
    metric: &'a MetricInstance,
    cfg: EngineConfig,
    order: &[PointId],
) -> Result<Engine<'a>, EngineError> {
    let mut e = Engine::new(metric, cfg)?;
    for &x in order {
        e.process_insertion(x)?;
    }
    e.finish_audit();
    Ok(e)
}
