//! Point registry, distance oracle and the cost/ball primitives.
//!
//! All distances are `f64`. Threshold comparisons elsewhere in the crate are
//! exact (`<=`, `>=`) with no epsilon, so results are reproducible bit for bit
//! given the same input and seed.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::MetricError;

/// Integer point weight. Every registered or sketched point has weight >= 1.
pub type Weight = u64;

/// Dense point identifier, assigned in registration order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointId(pub u32);

impl PointId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for PointId {
    fn from(i: usize) -> Self {
        PointId(i as u32)
    }
}

/// A point of some weighted point set: the point set a cost or a ball is
/// computed over is always given as a slice of these.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Weighted {
    pub id: PointId,
    pub weight: Weight,
}

impl Weighted {
    pub fn new(id: PointId, weight: Weight) -> Self {
        Self { id, weight }
    }
}

/// Total weight of a point set.
pub fn total_weight(points: &[Weighted]) -> Weight {
    points.iter().map(|p| p.weight).sum()
}

#[derive(Clone, Debug)]
enum Backend {
    /// Row-major coordinates, `dim` values per point.
    Euclidean { dim: usize, coords: Vec<f64> },
    /// Row-major symmetric `n x n` matrix.
    Matrix { n: usize, entries: Vec<f64> },
    /// Euclidean coordinates plus a precomputed distance matrix.
    Cached { dim: usize, coords: Vec<f64>, n: usize, entries: Vec<f64> },
}

/// Largest instance for which [`MetricInstance::precompute_distances`] builds a table.
pub const CACHE_LIMIT: usize = 6000;

/// Registry of points together with the metric over them.
///
/// Points are registered up front (or appended with [`MetricInstance::push_coords`]
/// while the instance is still being built); the streaming engine then treats
/// ids `0..i` as the points inserted so far.
#[derive(Clone, Debug)]
pub struct MetricInstance {
    backend: Backend,
    weights: Vec<Weight>,
    delta: f64,
    scale: f64,
}

impl MetricInstance {
    /// Euclidean instance from row-major coordinates. Weights default to 1.
    pub fn euclidean(dim: usize, coords: Vec<f64>) -> Result<Self, MetricError> {
        if dim == 0 {
            return Err(MetricError::Malformed("dimension must be at least 1".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(MetricError::Malformed(format!(
                "{} coordinates is not a multiple of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().position(|c| !c.is_finite()) {
            return Err(MetricError::Malformed(format!("non-finite coordinate at point {}", bad / dim)));
        }
        let n = coords.len() / dim;
        let mut inst =
            Self { backend: Backend::Euclidean { dim, coords }, weights: vec![1; n], delta: 1.0, scale: 1.0 };
        inst.delta = inst.aspect_ratio();
        Ok(inst)
    }

    /// One-dimensional instance, handy for the line examples in tests.
    pub fn line(xs: &[f64]) -> Self {
        Self::euclidean(1, xs.to_vec()).expect("finite line coordinates")
    }

    /// Explicit distance matrix. Validates shape, symmetry, zero diagonal,
    /// non-negativity and the triangle inequality (cubic; meant for small inputs).
    pub fn from_matrix(n: usize, entries: Vec<f64>) -> Result<Self, MetricError> {
        if entries.len() != n * n {
            return Err(MetricError::Malformed(format!("expected {} matrix entries, found {}", n * n, entries.len())));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(MetricError::NotMetric(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let d = entries[i * n + j];
                if !d.is_finite() || d < 0.0 {
                    return Err(MetricError::NotMetric(format!("bad distance at ({i},{j})")));
                }
                if d != entries[j * n + i] {
                    return Err(MetricError::NotMetric(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let dij = entries[i * n + j];
                for m in 0..n {
                    let bound = entries[i * n + m] + entries[m * n + j];
                    if dij > bound * (1.0 + 1e-12) {
                        return Err(MetricError::NotMetric(format!("triangle inequality fails on ({i},{m},{j})")));
                    }
                }
            }
        }
        let mut inst = Self { backend: Backend::Matrix { n, entries }, weights: vec![1; n], delta: 1.0, scale: 1.0 };
        inst.delta = inst.aspect_ratio();
        Ok(inst)
    }

    /// Replaces the per-point weights (all must be >= 1).
    pub fn with_weights(mut self, weights: Vec<Weight>) -> Result<Self, MetricError> {
        if weights.len() != self.len() {
            return Err(MetricError::Malformed(format!("{} weights for {} points", weights.len(), self.len())));
        }
        if weights.contains(&0) {
            return Err(MetricError::Malformed("weights must be >= 1".into()));
        }
        self.weights = weights;
        Ok(self)
    }

    /// Appends a point to a Euclidean instance under construction.
    pub fn push_coords(&mut self, coords: &[f64], weight: Weight) -> Result<PointId, MetricError> {
        match &mut self.backend {
            Backend::Euclidean { dim, coords: all } => {
                if coords.len() != *dim {
                    return Err(MetricError::Malformed(format!(
                        "point has {} coordinates, instance dimension is {dim}",
                        coords.len()
                    )));
                }
                if weight == 0 {
                    return Err(MetricError::Malformed("weights must be >= 1".into()));
                }
                all.extend(coords.iter().map(|c| c / self.scale));
                self.weights.push(weight);
                Ok(PointId::from(self.weights.len() - 1))
            }
            Backend::Matrix { .. } | Backend::Cached { .. } => {
                Err(MetricError::Malformed("cannot append to a matrix-backed instance".into()))
            }
        }
    }

    /// Rescales distances so that the smallest nonzero distance is 1 and
    /// recomputes the aspect ratio. No-op when every point is co-located.
    pub fn normalize(&mut self) {
        let Some(min) = self.min_nonzero_distance() else {
            self.delta = 1.0;
            return;
        };
        let rebuild = match &mut self.backend {
            Backend::Euclidean { coords, .. } => {
                coords.iter_mut().for_each(|c| *c /= min);
                false
            }
            Backend::Matrix { entries, .. } => {
                entries.iter_mut().for_each(|d| *d /= min);
                false
            }
            Backend::Cached { coords, .. } => {
                coords.iter_mut().for_each(|c| *c /= min);
                true
            }
        };
        if rebuild {
            // Rebuild from the scaled coordinates so both paths agree bit for bit.
            let placeholder = Backend::Matrix { n: 0, entries: Vec::new() };
            if let Backend::Cached { dim, coords, .. } = std::mem::replace(&mut self.backend, placeholder) {
                self.backend = Backend::Euclidean { dim, coords };
                self.precompute_distances();
            }
        }
        self.scale *= min;
        self.delta = self.aspect_ratio();
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Aspect ratio recorded at construction / normalization.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Factor the original distances were divided by during normalization.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn weight(&self, p: PointId) -> Weight {
        self.weights[p.idx()]
    }

    pub fn dim(&self) -> Option<usize> {
        match &self.backend {
            Backend::Euclidean { dim, .. } | Backend::Cached { dim, .. } => Some(*dim),
            Backend::Matrix { .. } => None,
        }
    }

    pub fn coords(&self, p: PointId) -> Option<&[f64]> {
        match &self.backend {
            Backend::Euclidean { dim, coords } | Backend::Cached { dim, coords, .. } => {
                Some(&coords[p.idx() * dim..(p.idx() + 1) * dim])
            }
            Backend::Matrix { .. } => None,
        }
    }

    /// A copy whose point `i` is point `order[i]` of `self` (ids are
    /// reassigned in the new order). Aspect ratio and scale carry over.
    pub fn permuted(&self, order: &[PointId]) -> Self {
        let backend = match &self.backend {
            Backend::Euclidean { dim, coords } | Backend::Cached { dim, coords, .. } => {
                let mut c = Vec::with_capacity(order.len() * dim);
                for p in order {
                    c.extend_from_slice(&coords[p.idx() * dim..(p.idx() + 1) * dim]);
                }
                Backend::Euclidean { dim: *dim, coords: c }
            }
            Backend::Matrix { n, entries } => {
                let m = order.len();
                let mut e = Vec::with_capacity(m * m);
                for a in order {
                    for b in order {
                        e.push(entries[a.idx() * n + b.idx()]);
                    }
                }
                Backend::Matrix { n: m, entries: e }
            }
        };
        let cached = matches!(self.backend, Backend::Cached { .. });
        let mut out = Self {
            backend,
            weights: order.iter().map(|p| self.weights[p.idx()]).collect(),
            delta: self.delta,
            scale: self.scale,
        };
        if cached {
            out.precompute_distances();
        }
        out
    }

    /// Replaces on-the-fly Euclidean distances by a lookup table when the
    /// instance has at most [`CACHE_LIMIT`] points. Distances are unchanged.
    pub fn precompute_distances(&mut self) {
        let n = self.len();
        if n > CACHE_LIMIT {
            return;
        }
        if let Backend::Euclidean { dim, coords } = &self.backend {
            let mut entries = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = self.dist(PointId::from(i), PointId::from(j));
                    entries[i * n + j] = d;
                    entries[j * n + i] = d;
                }
            }
            self.backend = Backend::Cached { dim: *dim, coords: coords.clone(), n, entries };
        }
    }

    pub fn ids(&self) -> impl Iterator<Item = PointId> {
        (0..self.len()).map(PointId::from)
    }

    /// The first `n` registered points with their registered weights.
    pub fn prefix(&self, n: usize) -> Vec<Weighted> {
        (0..n.min(self.len())).map(|i| Weighted::new(PointId::from(i), self.weights[i])).collect()
    }

    pub fn all_points(&self) -> Vec<Weighted> {
        self.prefix(self.len())
    }

    /// Checked distance; unknown ids are an error.
    pub fn distance(&self, a: PointId, b: PointId) -> Result<f64, MetricError> {
        for p in [a, b] {
            if p.idx() >= self.len() {
                return Err(MetricError::UnknownPoint(p));
            }
        }
        Ok(self.dist(a, b))
    }

    /// Unchecked distance for hot loops. Panics on unknown ids.
    #[inline]
    pub fn dist(&self, a: PointId, b: PointId) -> f64 {
        match &self.backend {
            Backend::Euclidean { dim, coords } => {
                let (a, b) = (a.idx() * dim, b.idx() * dim);
                let mut s = 0.0;
                for t in 0..*dim {
                    let d = coords[a + t] - coords[b + t];
                    s += d * d;
                }
                s.sqrt()
            }
            Backend::Matrix { n, entries } | Backend::Cached { n, entries, .. } => entries[a.idx() * n + b.idx()],
        }
    }

    /// Distance from `x` to the closest point of `set`; `delta()` for the empty set.
    pub fn dist_to_set(&self, x: PointId, set: &[PointId]) -> f64 {
        if set.is_empty() {
            return self.delta;
        }
        set.iter().map(|&s| self.dist(x, s)).fold(f64::INFINITY, f64::min)
    }

    /// Closest member of `set` to `x` (lowest id on ties).
    pub fn nearest(&self, x: PointId, set: &[PointId]) -> Option<(PointId, f64)> {
        let mut best: Option<(PointId, f64)> = None;
        for &s in set {
            let d = self.dist(x, s);
            best = match best {
                Some((b, bd)) if bd < d || (bd == d && b < s) => Some((b, bd)),
                _ => Some((s, d)),
            };
        }
        best
    }

    /// Weighted k-median cost of serving `points` from `centers`.
    ///
    /// With no centers every point pays `delta()`.
    pub fn cost(&self, centers: &[PointId], points: &[Weighted]) -> f64 {
        points.iter().map(|p| p.weight as f64 * self.dist_to_set(p.id, centers)).sum()
    }

    /// `cost({u}, points) / w(points)`.
    pub fn avgcost(&self, u: PointId, points: &[Weighted]) -> Result<f64, MetricError> {
        let w = total_weight(points);
        if w == 0 {
            return Err(MetricError::EmptySet);
        }
        Ok(self.cost(&[u], points) / w as f64)
    }

    /// Members of `points` within distance `r` of `u` (inclusive).
    pub fn ball(&self, u: PointId, r: f64, points: &[Weighted]) -> Vec<Weighted> {
        points.iter().copied().filter(|p| self.dist(u, p.id) <= r).collect()
    }

    fn min_nonzero_distance(&self) -> Option<f64> {
        let n = self.len();
        let mut min = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.dist(PointId::from(i), PointId::from(j));
                if d > 0.0 && d < min {
                    min = d;
                }
            }
        }
        min.is_finite().then_some(min)
    }

    /// Largest over smallest nonzero pairwise distance; 1 when fewer than two
    /// distinct locations exist.
    pub fn aspect_ratio(&self) -> f64 {
        let n = self.len();
        let (mut min, mut max) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.dist(PointId::from(i), PointId::from(j));
                if d > 0.0 {
                    min = min.min(d);
                    max = max.max(d);
                }
            }
        }
        if min.is_finite() {
            max / min
        } else {
            1.0
        }
    }

    /// Number of distinct locations among `points` (quadratic).
    pub fn distinct_locations(&self, points: &[Weighted]) -> usize {
        let mut reps: Vec<PointId> = Vec::new();
        for p in points {
            if !reps.iter().any(|&r| self.dist(r, p.id) == 0.0) {
                reps.push(p.id);
            }
        }
        reps.len()
    }
}

/// A set of at most `k` centers with an optional cached cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterSolution {
    centers: Vec<PointId>,
    cached_cost: Option<f64>,
}

impl CenterSolution {
    /// Builds a solution from any list of ids; duplicates are dropped and the
    /// ids are kept sorted.
    pub fn new(mut centers: Vec<PointId>) -> Self {
        centers.sort_unstable();
        centers.dedup();
        Self { centers, cached_cost: None }
    }

    pub fn with_cost(centers: Vec<PointId>, cost: f64) -> Self {
        let mut s = Self::new(centers);
        s.cached_cost = Some(cost);
        s
    }

    pub fn centers(&self) -> &[PointId] {
        &self.centers
    }

    pub fn into_centers(self) -> Vec<PointId> {
        self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn contains(&self, p: PointId) -> bool {
        self.centers.binary_search(&p).is_ok()
    }

    pub fn cached_cost(&self) -> Option<f64> {
        self.cached_cost
    }

    /// Recomputes and caches the cost over `points`.
    pub fn refresh_cost(&mut self, metric: &MetricInstance, points: &[Weighted]) -> f64 {
        let c = metric.cost(&self.centers, points);
        self.cached_cost = Some(c);
        c
    }

    /// `|self \ other|`, the number of centers of `self` missing from `other`.
    pub fn difference_count(&self, other: &CenterSolution) -> usize {
        set_difference_count(&self.centers, &other.centers)
    }
}

/// `|a \ b|` for sorted, duplicate-free id lists.
pub fn set_difference_count(a: &[PointId], b: &[PointId]) -> usize {
    a.iter().filter(|p| b.binary_search(p).is_err()).count()
}
