use serde::Serialize;

use crate::error::SolveError;
use crate::lp::KMedianLp;
use crate::metric::{MetricInstance, PointId, Weighted};

/// Fractional k-median solution: openings `y`, assignments `x` keyed by
/// `(center, client)`, and the objective value.
#[derive(Clone, Debug, Default, Serialize)]
pub struct FractionalKMedian {
    pub y: Vec<(PointId, f64)>,
    pub x: Vec<(PointId, PointId, f64)>,
    pub value: f64,
}

impl FractionalKMedian {
    pub fn y_of(&self, p: PointId) -> f64 {
        self.y.iter().find(|e| e.0 == p).map_or(0.0, |e| e.1)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct GoptEstimate {
    pub value: f64,
    pub lower_bound: f64,
}

/// Optimal fractional solution of the weighted k-median LP whose centers are
/// restricted to `candidates`.
pub fn klp_fractional(
    metric: &MetricInstance,
    points: &[Weighted],
    candidates: &[PointId],
    k: usize,
) -> Result<FractionalKMedian, SolveError> {
    if candidates.is_empty() {
        return Err(SolveError::NoCandidates);
    }
    if points.is_empty() {
        return Ok(FractionalKMedian::default());
    }
    let lp = KMedianLp {
        metric,
        clients: points,
        candidates: candidates.to_vec(),
        budget: k as f64,
        swap: None,
        anchors: vec![candidates[0]],
    };
    let s = lp.solve()?;
    Ok(FractionalKMedian { y: s.y, x: s.x.into_iter().map(|(c, j, v)| (c, points[j].id, v)).collect(), value: s.value })
}

/// `GOPT = 3 x` the LP optimum over all points as candidates.
pub fn estimate_gopt(metric: &MetricInstance, points: &[Weighted], k: usize) -> Result<GoptEstimate, SolveError> {
    if points.is_empty() {
        return Ok(GoptEstimate { value: 0.0, lower_bound: 0.0 });
    }
    let cands: Vec<PointId> = points.iter().map(|p| p.id).collect();
    let lb = klp_fractional(metric, points, &cands, k)?.value;
    Ok(GoptEstimate { value: 3.0 * lb, lower_bound: lb })
}
