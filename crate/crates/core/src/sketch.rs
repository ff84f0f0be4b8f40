//! Parallel Meyerson facility-location copies that compress a raw point
//! stream into a short weighted stream.
//!
//! Each copy opens an arriving point `x` with probability
//! `min(1, dist(x, S) * k * (log2(delta) + 1) / gopt)` until it holds `cap`
//! facilities. When some copy opens `x`, `x` is emitted with weight 1.
//! Otherwise `x` is charged to the nearest emitted point `y`; whenever the
//! charge count `w(y)` reaches a power of two `2^l`, `y` is re-emitted with
//! weight `2^l`. The emitted weight `v(y)` therefore stays in `[w(y), 2 w(y)]`.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SketchError;
use crate::metric::{MetricInstance, PointId, Weight, Weighted};
use crate::rng::{substream, TAG_SKETCH};

/// Constants of the copy count and the per-copy cap.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchParams {
    /// `q = ceil(copies_factor * log2(n + delta))`.
    pub copies_factor: f64,
    /// `cap = ceil(cap_factor * k * (log2(delta) + 1))`.
    pub cap_factor: f64,
}

impl Default for SketchParams {
    fn default() -> Self {
        Self { copies_factor: 10.0, cap_factor: 292.0 }
    }
}

impl SketchParams {
    pub fn copies(&self, n: usize, delta: f64) -> usize {
        ((self.copies_factor * (n as f64 + delta).log2()).ceil() as usize).max(1)
    }

    pub fn cap(&self, k: usize, delta: f64) -> usize {
        ((self.cap_factor * k as f64 * (delta.log2() + 1.0)).ceil() as usize).max(1)
    }
}

#[derive(Clone, Debug)]
pub struct MeyersonCopy {
    pub centers: Vec<PointId>,
    pub capped: bool,
    rng: ChaCha8Rng,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Emission {
    pub step: u64,
    pub point: PointId,
    pub weight: Weight,
}

#[derive(Clone, Debug)]
pub struct MultiMeyerson {
    copies: Vec<MeyersonCopy>,
    /// Emitted points in order of first emission.
    emitted: Vec<PointId>,
    w: BTreeMap<PointId, Weight>,
    v: BTreeMap<PointId, Weight>,
    initial: Option<Vec<Weighted>>,
    transcript: Vec<Emission>,
    k: usize,
    log_term: f64,
    gopt: f64,
    cap: usize,
    steps: u64,
}

impl MultiMeyerson {
    /// `gopt == 0` is accepted and means every point at positive distance
    /// from a copy's facilities is opened by it.
    pub fn new(
        k: usize,
        n: usize,
        delta: f64,
        gopt: f64,
        seed: u64,
        params: SketchParams,
    ) -> Result<Self, SketchError> {
        if !(gopt >= 0.0) || !gopt.is_finite() {
            return Err(SketchError::NonPositiveGopt);
        }
        let q = params.copies(n, delta);
        let copies = (0..q)
            .map(|i| MeyersonCopy { centers: Vec::new(), capped: false, rng: substream(seed, TAG_SKETCH, i as u64) })
            .collect();
        Ok(Self {
            copies,
            emitted: Vec::new(),
            w: BTreeMap::new(),
            v: BTreeMap::new(),
            initial: None,
            transcript: Vec::new(),
            k,
            log_term: delta.log2() + 1.0,
            gopt,
            cap: params.cap(k, delta),
            steps: 0,
        })
    }

    pub fn q(&self) -> usize {
        self.copies.len()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn gopt(&self) -> f64 {
        self.gopt
    }

    pub fn copies(&self) -> &[MeyersonCopy] {
        &self.copies
    }

    fn open_probability(&self, d: f64) -> f64 {
        if d.is_infinite() {
            1.0
        } else if self.gopt == 0.0 {
            if d > 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            (d * self.k as f64 * self.log_term / self.gopt).min(1.0)
        }
    }

    /// Feeds one raw point; returns the emissions it caused (zero or one).
    pub fn insert(&mut self, metric: &MetricInstance, x: PointId) -> Vec<(PointId, Weight)> {
        self.steps += 1;
        let mut opened = false;
        for i in 0..self.copies.len() {
            if self.copies[i].capped {
                continue;
            }
            let d = if self.copies[i].centers.is_empty() {
                f64::INFINITY
            } else {
                metric.dist_to_set(x, &self.copies[i].centers)
            };
            let h = self.open_probability(d);
            let copy = &mut self.copies[i];
            let open = if h >= 1.0 {
                true
            } else if h <= 0.0 {
                false
            } else {
                copy.rng.gen::<f64>() < h
            };
            if open {
                copy.centers.push(x);
                opened = true;
                if copy.centers.len() >= self.cap {
                    copy.capped = true;
                }
            }
        }
        let out = if opened {
            self.emitted.push(x);
            self.w.insert(x, 1);
            self.v.insert(x, 1);
            (x, 1)
        } else {
            let (y, _) = metric.nearest(x, &self.emitted).expect("the first insertion is always opened");
            let w = self.w.get_mut(&y).expect("emitted point has a count");
            *w += 1;
            if !w.is_power_of_two() {
                return Vec::new();
            }
            let wt = *w;
            *self.v.get_mut(&y).expect("emitted point has a weight") += wt;
            (y, wt)
        };
        self.transcript.push(Emission { step: self.steps, point: out.0, weight: out.1 });
        vec![out]
    }

    /// Closes the initial segment: everything emitted so far, aggregated per
    /// point, becomes the initial weighted set.
    pub fn finalize_initial(&mut self) -> Result<Vec<Weighted>, SketchError> {
        if self.initial.is_some() {
            return Err(SketchError::AlreadyFinalized);
        }
        let init: Vec<Weighted> = self.emitted.iter().map(|&y| Weighted::new(y, self.v[&y])).collect();
        self.initial = Some(init.clone());
        Ok(init)
    }

    pub fn initial_set(&self) -> Option<&[Weighted]> {
        self.initial.as_deref()
    }

    pub fn emitted(&self) -> &[PointId] {
        &self.emitted
    }

    /// Live charge count `w(y)`.
    pub fn w(&self, y: PointId) -> Option<Weight> {
        self.w.get(&y).copied()
    }

    /// Total emitted weight `v(y)`.
    pub fn v(&self, y: PointId) -> Option<Weight> {
        self.v.get(&y).copied()
    }

    /// Current weighted set `{(y, v(y))}` in order of first emission.
    pub fn weighted_set(&self) -> Vec<Weighted> {
        self.emitted.iter().map(|&y| Weighted::new(y, self.v[&y])).collect()
    }

    pub fn total_weight(&self) -> Weight {
        self.v.values().sum()
    }

    pub fn transcript(&self) -> &[Emission] {
        &self.transcript
    }

    pub fn emission_count(&self) -> usize {
        self.transcript.len()
    }

    pub fn write_transcript<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["step", "point_id", "weight"])?;
        for e in &self.transcript {
            wtr.write_record(&[e.step.to_string(), e.point.0.to_string(), e.weight.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}
