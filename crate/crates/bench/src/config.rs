//! Run configuration: command-line flags merged over an optional flat
//! `key=value` file. Flags win.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use rand::seq::SliceRandom;

use ckm_core::engine::{BaselineConfig, ConstantsProfile, EngineConfig, TrackerMode};
use ckm_core::io::{load_path, InputKind};
use ckm_core::rng::{substream, TAG_ORDER};
use ckm_core::sketch::SketchParams;
use ckm_core::{MetricInstance, PointId};

use crate::streams;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum StreamOrder {
    /// Insert points in file order.
    File,
    /// Insert points in a seed-determined random order.
    Shuffled,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Coords,
    Matrix,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum TrackerArg {
    LocalSearch,
    Lp,
}

/// Flags shared by every subcommand. Every field is optional so that values
/// from `--config` can fill the gaps.
#[derive(Args, Clone, Debug, Default)]
pub struct CliArgs {
    /// Flat `key=value` file; keys use the long flag names without dashes.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Maximum number of centers.
    #[arg(long)]
    pub k: Option<usize>,
    /// Master seed for every random choice (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// `practical` or `paper`.
    #[arg(long)]
    pub profile: Option<String>,
    /// CSV point file (`id,x1,...,xd[,weight]`, or a distance matrix).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub input_kind: Option<KindArg>,
    /// Generate a uniform 2-D integer stream of this length instead of reading `--input`.
    #[arg(long)]
    pub uniform: Option<usize>,
    #[arg(long, value_enum)]
    pub order: Option<StreamOrder>,
    #[arg(long, value_enum)]
    pub tracker: Option<TrackerArg>,
    /// Output directory (default `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Removal factor override.
    #[arg(long)]
    pub c: Option<f64>,
    /// Tracked-cost growth that ends a phase.
    #[arg(long)]
    pub phase_factor: Option<f64>,
    /// Swap budget is `swap_a * l + swap_b`.
    #[arg(long)]
    pub swap_a: Option<usize>,
    #[arg(long)]
    pub swap_b: Option<usize>,
    /// Sketch copies: `ceil(copies_factor * log2(n + delta))`.
    #[arg(long)]
    pub copies_factor: Option<f64>,
    /// Per-copy facility cap: `ceil(cap_factor * k * (log2(delta) + 1))`.
    #[arg(long)]
    pub cap_factor: Option<f64>,
    /// Steps between exact LP lower bounds (0: phase starts only).
    #[arg(long)]
    pub lb_interval: Option<usize>,
    /// Swap cap of each baseline local search.
    #[arg(long)]
    pub baseline_iters: Option<usize>,
    /// Record per-step wall time (breaks byte-identical reruns).
    #[arg(long)]
    pub timing: Option<bool>,
    /// Double n or delta and restart when the stream outgrows them.
    #[arg(long)]
    pub auto_rescale: Option<bool>,
    /// `run` also executes the baseline and records its churn in the summary.
    #[arg(long)]
    pub with_baseline: Option<bool>,
    /// Comma-separated sweep grids.
    #[arg(long)]
    pub sweep_k: Option<String>,
    #[arg(long)]
    pub sweep_n: Option<String>,
    #[arg(long)]
    pub sweep_seeds: Option<String>,
}

/// Fully resolved and validated configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub k: usize,
    pub seed: u64,
    pub profile: ConstantsProfile,
    pub input: Option<PathBuf>,
    pub input_kind: InputKind,
    pub uniform: Option<usize>,
    pub order: StreamOrder,
    pub tracker: TrackerMode,
    pub out: PathBuf,
    pub sketch: SketchParams,
    pub lb_interval: usize,
    pub baseline_iters: usize,
    pub timing: bool,
    pub auto_rescale: bool,
    pub with_baseline: bool,
    pub sweep_k: Vec<usize>,
    pub sweep_n: Vec<usize>,
    pub sweep_seeds: Vec<u64>,
}

impl RunConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            profile: ConstantsProfile::practical(),
            input: None,
            input_kind: InputKind::Coords,
            uniform: None,
            order: StreamOrder::File,
            tracker: TrackerMode::LocalSearch,
            out: PathBuf::from("out"),
            sketch: SketchParams::default(),
            lb_interval: 100,
            baseline_iters: 10_000,
            timing: false,
            auto_rescale: false,
            with_baseline: false,
            sweep_k: vec![5, 10],
            sweep_n: vec![500, 2000],
            sweep_seeds: vec![1, 2, 3],
        }
    }

    /// Merges `args` over the file named by `args.config` (if any) and validates.
    pub fn resolve(args: &CliArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => parse_kv(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
            None => BTreeMap::new(),
        };
        let get = |key: &str| file.get(key).map(String::as_str);
        fn pick<T: std::str::FromStr>(flag: Option<T>, file: Option<&str>, key: &str) -> Result<Option<T>> {
            match (flag, file) {
                (Some(v), _) => Ok(Some(v)),
                (None, Some(s)) => s.parse().map(Some).map_err(|_| anyhow!("config key `{key}`: cannot parse `{s}`")),
                (None, None) => Ok(None),
            }
        }
        let k = pick(args.k, get("k"), "k")?.ok_or_else(|| anyhow!("--k is required"))?;
        let seed = pick(args.seed, get("seed"), "seed")?.unwrap_or(0);
        let mut cfg = Self::new(k, seed);

        let profile_name = args.profile.clone().or_else(|| get("profile").map(str::to_owned));
        if let Some(name) = profile_name {
            cfg.profile = ConstantsProfile::by_name(&name).ok_or_else(|| anyhow!("unknown profile `{name}`"))?;
        }
        if let Some(v) = pick(args.c, get("c"), "c")? {
            cfg.profile.c = v;
        }
        if let Some(v) = pick(args.phase_factor, get("phase_factor"), "phase_factor")? {
            cfg.profile.phase_factor = v;
        }
        if let Some(v) = pick(args.swap_a, get("swap_a"), "swap_a")? {
            cfg.profile.swap_a = v;
        }
        if let Some(v) = pick(args.swap_b, get("swap_b"), "swap_b")? {
            cfg.profile.swap_b = v;
        }
        if let Some(v) = pick(args.copies_factor, get("copies_factor"), "copies_factor")? {
            cfg.sketch.copies_factor = v;
        }
        if let Some(v) = pick(args.cap_factor, get("cap_factor"), "cap_factor")? {
            cfg.sketch.cap_factor = v;
        }
        cfg.input = args.input.clone().or_else(|| get("input").map(PathBuf::from));
        if let Some(kind) = args.input_kind.or(pick_enum::<KindArg>(get("input_kind"), "input_kind")?) {
            cfg.input_kind = match kind {
                KindArg::Coords => InputKind::Coords,
                KindArg::Matrix => InputKind::Matrix,
            };
        }
        cfg.uniform = pick(args.uniform, get("uniform"), "uniform")?;
        if let Some(o) = args.order.or(pick_enum::<StreamOrder>(get("order"), "order")?) {
            cfg.order = o;
        }
        if let Some(t) = args.tracker.or(pick_enum::<TrackerArg>(get("tracker"), "tracker")?) {
            cfg.tracker = match t {
                TrackerArg::LocalSearch => TrackerMode::LocalSearch,
                TrackerArg::Lp => TrackerMode::Lp,
            };
        }
        if let Some(o) = args.out.clone().or_else(|| get("out").map(PathBuf::from)) {
            cfg.out = o;
        }
        if let Some(v) = pick(args.lb_interval, get("lb_interval"), "lb_interval")? {
            cfg.lb_interval = v;
        }
        if let Some(v) = pick(args.baseline_iters, get("baseline_iters"), "baseline_iters")? {
            cfg.baseline_iters = v;
        }
        if let Some(v) = pick(args.timing, get("timing"), "timing")? {
            cfg.timing = v;
        }
        if let Some(v) = pick(args.auto_rescale, get("auto_rescale"), "auto_rescale")? {
            cfg.auto_rescale = v;
        }
        if let Some(v) = pick(args.with_baseline, get("with_baseline"), "with_baseline")? {
            cfg.with_baseline = v;
        }
        if let Some(s) = args.sweep_k.as_deref().or(get("sweep_k")) {
            cfg.sweep_k = parse_list(s, "sweep_k")?;
        }
        if let Some(s) = args.sweep_n.as_deref().or(get("sweep_n")) {
            cfg.sweep_n = parse_list(s, "sweep_n")?;
        }
        if let Some(s) = args.sweep_seeds.as_deref().or(get("sweep_seeds")) {
            cfg.sweep_seeds = parse_list(s, "sweep_seeds")?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            bail!("k must be at least 1");
        }
        self.profile.validate().map_err(|e| anyhow!(e))?;
        if !(self.sketch.copies_factor > 0.0 && self.sketch.cap_factor > 0.0) {
            bail!("sketch factors must be positive");
        }
        if self.sweep_k.contains(&0) {
            bail!("sweep_k entries must be at least 1");
        }
        Ok(())
    }

    /// Loads (or generates) the stream, applies the insertion order, rescales
    /// distances so the smallest nonzero one is 1 and caches small inputs.
    pub fn load_stream(&self) -> Result<MetricInstance> {
        let mut m = match (&self.input, self.uniform) {
            (Some(p), _) => load_path(p, self.input_kind)?,
            (None, Some(n)) => streams::uniform_grid(n, self.seed),
            (None, None) => bail!("either --input or --uniform is required"),
        };
        if self.order == StreamOrder::Shuffled {
            let mut ids: Vec<PointId> = m.ids().collect();
            ids.shuffle(&mut substream(self.seed, TAG_ORDER, 0));
            m = m.permuted(&ids);
        }
        m.normalize();
        m.precompute_distances();
        Ok(m)
    }

    pub fn engine_config(&self, metric: &MetricInstance) -> EngineConfig {
        let mut e = EngineConfig::new(self.k, metric.len().max(1), metric.delta(), self.seed);
        e.profile = self.profile.clone();
        e.sketch = self.sketch;
        e.tracker = self.tracker;
        e.lb_interval = self.lb_interval;
        e.auto_rescale = self.auto_rescale;
        e.timing = self.timing;
        e
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        let mut b = BaselineConfig::new(self.k, self.seed);
        b.iters = self.baseline_iters;
        b.lb_interval = self.lb_interval;
        b.timing = self.timing;
        b
    }
}

fn pick_enum<T: ValueEnum>(s: Option<&str>, key: &str) -> Result<Option<T>> {
    s.map(|s| T::from_str(s, true).map_err(|_| anyhow!("config key `{key}`: unknown value `{s}`"))).transpose()
}

fn parse_list<T: std::str::FromStr>(s: &str, key: &str) -> Result<Vec<T>> {
    s.split(',').map(|t| t.trim().parse().map_err(|_| anyhow!("`{key}`: cannot parse `{t}`"))).collect()
}

/// Flat `key=value` lines; `#` starts a comment. Dashes in keys are read as
/// underscores so flag spellings work too.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("config line {}: expected key=value", i + 1))?;
        out.insert(k.trim().replace('-', "_"), v.trim().to_owned());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cfg.txt");
        fs::write(&p, "k=3\nseed = 9 # comment\nprofile=paper\nphase-factor=8\n").unwrap();
        let args = CliArgs { config: Some(p), seed: Some(4), ..Default::default() };
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!((cfg.k, cfg.seed), (3, 4));
        assert_eq!(cfg.profile.name, "paper");
        assert_eq!(cfg.profile.phase_factor, 8.0);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::resolve(&CliArgs { k: Some(0), ..Default::default() }).is_err());
        assert!(RunConfig::resolve(&CliArgs::default()).is_err());
        let bad = CliArgs { k: Some(2), profile: Some("nope".into()), ..Default::default() };
        assert!(RunConfig::resolve(&bad).is_err());
        let bad = CliArgs { k: Some(2), c: Some(0.5), ..Default::default() };
        assert!(RunConfig::resolve(&bad).is_err());
        assert!(parse_kv("novalue").is_err());
    }
}
