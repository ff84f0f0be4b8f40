use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::metric::{set_difference_count, PointId};

pub const STEPS_HEADER: [&str; 9] =
    ["step", "n_so_far", "cost", "lower_bound", "changes", "cum_changes", "phase_id", "epoch_id", "wall_micros"];

/// One row per raw insertion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub n_so_far: u64,
    pub cost: f64,
    pub lower_bound: f64,
    pub changes: u64,
    pub cum_changes: u64,
    pub phase_id: u64,
    pub epoch_id: u64,
    pub wall_micros: u64,
}

impl StepRecord {
    /// `cost / lower_bound`, with `0 / 0` read as 1.
    pub fn ratio(&self) -> f64 {
        if self.lower_bound > 0.0 {
            self.cost / self.lower_bound
        } else if self.cost == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    }
}

/// Per-step change counts `|U_{i+1} \ U_i|` and their running total.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ConsistencyLedger {
    records: Vec<StepRecord>,
    cumulative: u64,
    /// Solution after every step; kept only when auditing.
    transcript: Option<Vec<Vec<PointId>>>,
}

impl ConsistencyLedger {
    pub fn new(keep_transcript: bool) -> Self {
        Self { records: Vec::new(), cumulative: 0, transcript: keep_transcript.then(Vec::new) }
    }

    /// Appends a record; `changes` is taken from the record and the running
    /// total is filled in.
    pub fn push(&mut self, mut rec: StepRecord, solution: &[PointId]) -> &StepRecord {
        self.cumulative += rec.changes;
        rec.cum_changes = self.cumulative;
        self.records.push(rec);
        if let Some(t) = &mut self.transcript {
            t.push(solution.to_vec());
        }
        self.records.last().expect("just pushed")
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn cumulative(&self) -> u64 {
        self.cumulative
    }

    pub fn transcript(&self) -> Option<&[Vec<PointId>]> {
        self.transcript.as_deref()
    }

    /// Test hook: overwrite the stored solution of one step.
    pub fn corrupt_transcript(&mut self, step: usize, solution: Vec<PointId>) {
        if let Some(t) = &mut self.transcript {
            t[step] = solution;
        }
    }

    /// Recomputes the total from the solution transcript (starting from the
    /// empty solution) and compares with the recorded per-step counts.
    pub fn recount(&self) -> Result<u64, String> {
        let Some(t) = &self.transcript else {
            return Err("no transcript recorded".into());
        };
        let mut prev: Vec<PointId> = Vec::new();
        let mut total = 0;
        for (i, (sol, rec)) in t.iter().zip(&self.records).enumerate() {
            let d = set_difference_count(sol, &prev) as u64;
            if d != rec.changes {
                return Err(format!("step {}: recorded {} changes, transcript gives {d}", i + 1, rec.changes));
            }
            total += d;
            if total != rec.cum_changes {
                return Err(format!("step {}: cum_changes {} but running sum {total}", i + 1, rec.cum_changes));
            }
            prev = sol.clone();
        }
        if total != self.cumulative {
            return Err(format!("cumulative {} but recount {total}", self.cumulative));
        }
        Ok(total)
    }

    pub fn per_phase(&self) -> BTreeMap<u64, u64> {
        let mut m = BTreeMap::new();
        for r in &self.records {
            *m.entry(r.phase_id).or_insert(0) += r.changes;
        }
        m
    }

    pub fn per_epoch(&self) -> BTreeMap<u64, u64> {
        let mut m = BTreeMap::new();
        for r in &self.records {
            *m.entry(r.epoch_id).or_insert(0) += r.changes;
        }
        m
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        write_steps_csv(&self.records, out)
    }
}

/// Writes records with the fixed `steps.csv` header. Floats use Rust's
/// shortest round-trip formatting.
pub fn write_steps_csv<W: Write>(records: &[StepRecord], out: W) -> csv::Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    wtr.write_record(STEPS_HEADER)?;
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
