//! Benchmark harness: loads or generates point streams, runs the consistent
//! engine and the recompute baseline, and writes CSV/JSON artifacts.

pub mod config;
pub mod streams;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use ckm_core::engine::{
    count_well_separated, run_baseline, write_steps_csv, AuditReport, BaselineConfig, ConsistencyLedger, Engine,
    EngineConfig, RunSummary, StepRecord,
};
use ckm_core::offline::{brute_force_kmedian, local_search_kmedian, n_choose_k, BRUTE_FORCE_GUARD};
use ckm_core::{CenterSolution, MetricInstance, PointId};

pub use config::{RunConfig, StreamOrder};

/// Failure classes mapped to process exit codes.
#[derive(Debug)]
pub enum Outcome {
    Ok,
    AuditFailed(Vec<String>),
}

/// Result of one engine run, kept in memory for tests and sweeps.
pub struct EngineRun {
    pub records: Vec<StepRecord>,
    pub summary: RunSummary,
    pub audit: AuditReport,
    pub checkpoints: Vec<(u64, CenterSolution)>,
    pub ledger: ConsistencyLedger,
}

/// Runs the engine over every point of `metric` in id order.
pub fn run_engine_on(metric: &MetricInstance, cfg: EngineConfig, checkpoints: &[u64]) -> Result<EngineRun> {
    let mut engine = Engine::new(metric, cfg)?;
    let mut kept = Vec::new();
    for x in metric.ids() {
        let u = engine.process_insertion(x)?;
        if checkpoints.contains(&u.step) {
            kept.push((u.step, u.centers));
        }
    }
    engine.finish_audit();
    Ok(EngineRun {
        records: engine.ledger().records().to_vec(),
        summary: engine.report(),
        audit: engine.audit().clone(),
        checkpoints: kept,
        ledger: engine.ledger().clone(),
    })
}

/// Runs the recompute baseline over every point of `metric` in id order.
pub fn run_baseline_on(metric: &MetricInstance, cfg: &BaselineConfig) -> Result<ConsistencyLedger> {
    let order: Vec<PointId> = metric.ids().collect();
    Ok(run_baseline(metric, cfg, &order)?)
}

pub fn steps_csv_bytes(records: &[StepRecord]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_steps_csv(records, &mut buf)?;
    Ok(buf)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    command: &'a str,
    k: usize,
    seed: u64,
    profile: &'a str,
    n: usize,
    delta: f64,
    #[serde(flatten)]
    summary: RunSummary,
}

/// `run`: engine over the configured stream; writes `steps.csv` and `summary.json`.
pub fn cmd_run(cfg: &RunConfig) -> Result<Outcome> {
    let metric = cfg.load_stream()?;
    let ecfg = cfg.engine_config(&metric);
    let run = run_engine_on(&metric, ecfg.clone(), &[])?;
    let mut summary = run.summary;
    if cfg.with_baseline {
        let l = run_baseline_on(&metric, &cfg.baseline_config())?;
        summary.baseline_cum_changes = Some(l.cumulative());
    }
    prepare_out(&cfg.out)?;
    fs::write(cfg.out.join("steps.csv"), steps_csv_bytes(&run.records)?)?;
    write_json(
        &cfg.out.join("summary.json"),
        &SummaryFile {
            command: "run",
            k: cfg.k,
            seed: cfg.seed,
            profile: &ecfg.profile.name,
            n: metric.len(),
            delta: metric.delta(),
            summary,
        },
    )?;
    Ok(Outcome::Ok)
}

/// `baseline`: local search recomputed after every insertion, same CSV schema.
pub fn cmd_baseline(cfg: &RunConfig) -> Result<Outcome> {
    let metric = cfg.load_stream()?;
    let ledger = run_baseline_on(&metric, &cfg.baseline_config())?;
    prepare_out(&cfg.out)?;
    fs::write(cfg.out.join("steps.csv"), steps_csv_bytes(ledger.records())?)?;
    write_json(
        &cfg.out.join("summary.json"),
        &SummaryFile {
            command: "baseline",
            k: cfg.k,
            seed: cfg.seed,
            profile: "baseline",
            n: metric.len(),
            delta: metric.delta(),
            summary: RunSummary::from_ledger(&ledger),
        },
    )?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
pub struct WellSeparatedCheck {
    pub step: u64,
    pub reference: &'static str,
    pub pairs: usize,
    pub centers: usize,
}

#[derive(Serialize)]
pub struct DiagFile {
    pub passed: bool,
    pub steps: u64,
    pub audits: AuditReport,
    pub well_separated: Vec<WellSeparatedCheck>,
}

/// Runs the engine with every audit enabled and compares checkpoint solutions
/// with a reference solution through the well-separated pair count.
pub fn diagnose(metric: &MetricInstance, mut ecfg: EngineConfig) -> Result<DiagFile> {
    ecfg.audit = true;
    let n = metric.len() as u64;
    let checkpoints: Vec<u64> = if n == 0 { Vec::new() } else { (1..=5).map(|i| (n * i).div_ceil(5)).collect() };
    let gamma = ecfg.profile.gamma;
    let k = ecfg.k;
    let seed = ecfg.seed;
    let run = run_engine_on(metric, ecfg, &checkpoints)?;
    let mut ws = Vec::new();
    for (step, sol) in &run.checkpoints {
        let prefix = metric.prefix(*step as usize);
        let exact = n_choose_k(prefix.len(), k.min(prefix.len())) <= BRUTE_FORCE_GUARD / 100;
        let (reference, name) = if exact {
            (brute_force_kmedian(metric, &prefix, k)?, "brute_force")
        } else {
            (local_search_kmedian(metric, &prefix, k, 10_000, seed).solution, "local_search")
        };
        ws.push(WellSeparatedCheck {
            step: *step,
            reference: name,
            pairs: count_well_separated(metric, sol, &reference, gamma),
            centers: sol.len(),
        });
    }
    Ok(DiagFile { passed: run.audit.passed(), steps: run.summary.steps, audits: run.audit, well_separated: ws })
}

/// `diag`: writes `diag.json`; any failed audit yields [`Outcome::AuditFailed`].
pub fn cmd_diag(cfg: &RunConfig) -> Result<Outcome> {
    let metric = cfg.load_stream()?;
    let diag = diagnose(&metric, cfg.engine_config(&metric))?;
    prepare_out(&cfg.out)?;
    write_json(&cfg.out.join("diag.json"), &diag)?;
    if diag.passed {
        Ok(Outcome::Ok)
    } else {
        let failed = diag
            .audits
            .failures()
            .into_iter()
            .map(|(name, e)| format!("{name}: {}", e.first_violation.clone().unwrap_or_default()))
            .collect();
        Ok(Outcome::AuditFailed(failed))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    pub engine_cum_changes: u64,
    pub baseline_cum_changes: u64,
    pub engine_max_ratio: f64,
    pub baseline_max_ratio: f64,
    pub emissions: u64,
    pub phases: u64,
    pub engine_secs: f64,
    pub baseline_secs: f64,
}

/// Paired engine/baseline run on a generated uniform 2-D stream.
pub fn sweep_one(cfg: &RunConfig, k: usize, n: usize, seed: u64) -> Result<(SweepRow, EngineRun, ConsistencyLedger)> {
    let metric = streams::uniform_grid(n, seed);
    let mut c = cfg.clone();
    c.k = k;
    c.seed = seed;
    let t0 = std::time::Instant::now();
    let run = run_engine_on(&metric, c.engine_config(&metric), &[])?;
    let engine_secs = t0.elapsed().as_secs_f64();
    let t1 = std::time::Instant::now();
    let base = run_baseline_on(&metric, &c.baseline_config())?;
    let baseline_secs = t1.elapsed().as_secs_f64();
    let row = SweepRow {
        k,
        n,
        seed,
        engine_cum_changes: run.summary.cum_changes,
        baseline_cum_changes: base.cumulative(),
        engine_max_ratio: run.summary.max_ratio,
        baseline_max_ratio: RunSummary::from_ledger(&base).max_ratio,
        emissions: run.summary.emissions,
        phases: run.summary.phases,
        engine_secs,
        baseline_secs,
    };
    Ok((row, run, base))
}

/// `sweep`: paired runs over the configured grid of `(k, n, seed)`; writes
/// `sweep.csv` and per-run step files under `out/`.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Outcome> {
    prepare_out(&cfg.out)?;
    let mut wtr = csv::Writer::from_path(cfg.out.join("sweep.csv"))?;
    for &k in &cfg.sweep_k {
        for &n in &cfg.sweep_n {
            for &seed in &cfg.sweep_seeds {
                let (row, run, base) = sweep_one(cfg, k, n, seed)?;
                let tag = format!("k{k}_n{n}_s{seed}");
                fs::write(cfg.out.join(format!("engine_{tag}.csv")), steps_csv_bytes(&run.records)?)?;
                fs::write(cfg.out.join(format!("baseline_{tag}.csv")), steps_csv_bytes(base.records())?)?;
                wtr.serialize(&row)?;
                wtr.flush()?;
            }
        }
    }
    Ok(Outcome::Ok)
}

pub fn default_out() -> PathBuf {
    PathBuf::from("out")
}
