use serde::{Deserialize, Serialize};

use crate::sketch::SketchParams;

/// Constants that drive the epoch and phase machinery.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsProfile {
    pub name: String,
    /// Removal factor: removing centers may raise the LP cost to `c * cost(U)`.
    pub c: f64,
    /// A phase ends when the tracked cost reaches this multiple of its start value.
    pub phase_factor: f64,
    /// Swap budget `l' = swap_a * l + swap_b`.
    pub swap_a: usize,
    pub swap_b: usize,
    pub robust_check_denom: f64,
    pub robust_build_denom: f64,
    /// Separation factor for the well-separated pair diagnostic.
    pub gamma: f64,
}

impl ConstantsProfile {
    pub fn paper() -> Self {
        Self {
            name: "paper".into(),
            c: 228_000.0,
            phase_factor: 6.0,
            swap_a: 5,
            swap_b: 5,
            robust_check_denom: 200.0,
            robust_build_denom: 100.0,
            gamma: 2000.0,
        }
    }

    pub fn practical() -> Self {
        Self { name: "practical".into(), c: 4.0, swap_a: 1, swap_b: 1, ..Self::paper() }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "paper" => Some(Self::paper()),
            "practical" => Some(Self::practical()),
            _ => None,
        }
    }

    pub fn swap_budget(&self, l: usize) -> usize {
        self.swap_a * l + self.swap_b
    }

    /// Approximation ceiling `6 * 100 * c` against the LP lower bound.
    pub fn cost_ceiling(&self) -> f64 {
        600.0 * self.c
    }

    /// Checks the value constraints (`c > 1`, positive factors).
    pub fn validate(&self) -> Result<(), String> {
        if !(self.c > 1.0) {
            return Err(format!("c must exceed 1, got {}", self.c));
        }
        if !(self.phase_factor > 1.0) {
            return Err(format!("phase_factor must exceed 1, got {}", self.phase_factor));
        }
        if !(self.robust_check_denom > 0.0 && self.robust_build_denom > 0.0) {
            return Err("robustness denominators must be positive".into());
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackerMode {
    /// Warm-started single-swap local search after every insertion.
    LocalSearch,
    /// Three times the LP optimum after every insertion (small inputs).
    Lp,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EngineConfig {
    pub k: usize,
    /// Expected stream length, used for the sketch copy count and retries.
    pub n: usize,
    /// Aspect ratio bound used by the sketch.
    pub delta: f64,
    pub seed: u64,
    pub profile: ConstantsProfile,
    pub sketch: SketchParams,
    pub tracker: TrackerMode,
    /// Swap budget of each tracker update.
    pub tracker_iters: usize,
    /// An exact LP lower bound is recomputed every this many steps (0: only
    /// at phase starts). In between half of the last exact value is carried,
    /// which stays a valid bound for any superset of points.
    pub lb_interval: usize,
    /// Double `n` or `delta` and restart when the observed stream exceeds them.
    pub auto_rescale: bool,
    /// Run the invariant audits while processing.
    pub audit: bool,
    /// Record wall-clock time per step (otherwise 0 for reproducible output).
    pub timing: bool,
}

impl EngineConfig {
    pub fn new(k: usize, n: usize, delta: f64, seed: u64) -> Self {
        Self {
            k,
            n,
            delta: delta.max(1.0),
            seed,
            profile: ConstantsProfile::practical(),
            sketch: SketchParams::default(),
            tracker: TrackerMode::LocalSearch,
            tracker_iters: 10_000,
            lb_interval: 100,
            auto_rescale: false,
            audit: false,
            timing: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles() {
        let p = ConstantsProfile::paper();
        assert_eq!((p.c, p.phase_factor, p.swap_a, p.swap_b), (228_000.0, 6.0, 5, 5));
        assert_eq!((p.robust_check_denom, p.robust_build_denom, p.gamma), (200.0, 100.0, 2000.0));
        assert_eq!(p.swap_budget(2), 15);
        let q = ConstantsProfile::practical();
        assert_eq!((q.c, q.swap_budget(2)), (4.0, 3));
        assert_eq!(q.cost_ceiling(), 2400.0);
        assert!(ConstantsProfile { c: 1.0, ..q }.validate().is_err());
    }
}
