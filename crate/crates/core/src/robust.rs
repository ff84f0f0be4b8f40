//! Robust tuples, MakeRobust, Robustify and the certificate store.
//!
//! A tuple `(p0, ..., pt)` is built top-down from `pt = p`: at level `i` let
//! `B = Ball(p_i, 10^i)`. If the average cost of serving `B` from `p_i` is at
//! least `10^i / 5` the center stays (`p_{i-1} = p_i`), otherwise it moves to
//! the 1-median of `B` (lowest id on ties). The final `p0` is the robust
//! center; its certificate stays valid until a point lands within `2 * 10^t`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::RobustError;
use crate::metric::{CenterSolution, MetricInstance, PointId, Weighted};

/// Exact `10^i` for the levels used here.
pub fn pow10(i: u32) -> f64 {
    10f64.powi(i as i32)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RobustTuple {
    /// `points[i] = p_i`, so `points[0]` is the robust center.
    pub points: Vec<PointId>,
}

impl RobustTuple {
    pub fn t(&self) -> u32 {
        (self.points.len() - 1) as u32
    }

    pub fn p0(&self) -> PointId {
        self.points[0]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustCertificate {
    pub tuple: RobustTuple,
    pub center: PointId,
    pub radius: f64,
    pub valid: bool,
}

impl RobustCertificate {
    pub fn new(tuple: RobustTuple) -> Self {
        let radius = 2.0 * pow10(tuple.t());
        Self { center: tuple.p0(), tuple, radius, valid: true }
    }

    pub fn t(&self) -> u32 {
        self.tuple.t()
    }
}

/// Smallest `t >= 0` with `10^t >= dist(u, S \ {u}) / denom`. With no other
/// member the distance is taken to be `delta`.
pub fn required_t(metric: &MetricInstance, u: PointId, set: &[PointId], denom: f64) -> u32 {
    let others: Vec<PointId> = set.iter().copied().filter(|&s| s != u).collect();
    let ratio = metric.dist_to_set(u, &others) / denom;
    let mut t = 0;
    while pow10(t) < ratio {
        t += 1;
    }
    t
}

fn one_median(metric: &MetricInstance, ball: &[Weighted]) -> (PointId, f64) {
    let mut best = (ball[0].id, f64::INFINITY);
    for q in ball {
        let c = metric.cost(&[q.id], ball);
        if c < best.1 || (c == best.1 && q.id < best.0) {
            best = (q.id, c);
        }
    }
    best
}

/// Builds a `t`-robust tuple ending at `p` with respect to `points`.
pub fn make_robust(metric: &MetricInstance, t: u32, p: PointId, points: &[Weighted]) -> RobustTuple {
    let mut rev = vec![p];
    let mut cur = p;
    for i in (1..=t).rev() {
        let r = pow10(i);
        let ball = metric.ball(cur, r, points);
        if !ball.is_empty() {
            let avg = metric.avgcost(cur, &ball).expect("ball has positive weight");
            if avg < r / 5.0 {
                cur = one_median(metric, &ball).0;
            }
        }
        rev.push(cur);
    }
    rev.reverse();
    RobustTuple { points: rev }
}

/// Rechecks the recurrence level by level against `points`. Any 1-median of
/// the ball is accepted where the recurrence moves (relative slack 1e-12).
pub fn verify_robust_tuple(metric: &MetricInstance, tuple: &RobustTuple, points: &[Weighted]) -> bool {
    if tuple.points.is_empty() {
        return false;
    }
    for i in (1..=tuple.t()).rev() {
        let (pi, prev) = (tuple.points[i as usize], tuple.points[i as usize - 1]);
        let r = pow10(i);
        let ball = metric.ball(pi, r, points);
        if ball.is_empty() {
            if prev != pi {
                return false;
            }
            continue;
        }
        let avg = metric.avgcost(pi, &ball).expect("ball has positive weight");
        if avg >= r / 5.0 {
            if prev != pi {
                return false;
            }
        } else {
            if !ball.iter().any(|q| q.id == prev) {
                return false;
            }
            let best = one_median(metric, &ball).1;
            if metric.cost(&[prev], &ball) > best + 1e-12 * best.abs() {
                return false;
            }
        }
    }
    true
}

/// Certificates keyed by their center.
#[derive(Clone, Debug, Default, Serialize)]
pub struct CertificateStore {
    certs: BTreeMap<PointId, RobustCertificate>,
}

impl CertificateStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, cert: RobustCertificate) {
        self.certs.insert(cert.center, cert);
    }

    pub fn get(&self, center: PointId) -> Option<&RobustCertificate> {
        self.certs.get(&center)
    }

    /// Valid certificate level held by `center`, if any.
    pub fn valid_t(&self, center: PointId) -> Option<u32> {
        self.certs.get(&center).filter(|c| c.valid).map(|c| c.t())
    }

    pub fn iter(&self) -> impl Iterator<Item = &RobustCertificate> {
        self.certs.values()
    }

    pub fn len(&self) -> usize {
        self.certs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.certs.is_empty()
    }

    pub fn clear(&mut self) {
        self.certs.clear();
    }

    /// Drops certificates whose center is not in `keep`.
    pub fn retain_centers(&mut self, keep: &[PointId]) {
        self.certs.retain(|c, _| keep.contains(c));
    }
}

/// Marks invalid every certificate whose center lies within its radius of
/// `new_point`. Returns how many were invalidated.
pub fn invalidate_certificates(store: &mut CertificateStore, metric: &MetricInstance, new_point: PointId) -> usize {
    let mut n = 0;
    for cert in store.certs.values_mut() {
        if cert.valid && metric.dist(cert.center, new_point) <= cert.radius {
            cert.valid = false;
            n += 1;
        }
    }
    n
}

#[derive(Clone, Debug)]
pub struct RobustifyOutcome {
    pub solution: CenterSolution,
    /// `(removed, added)` for every MakeRobust call that moved its center.
    pub changes: Vec<(PointId, PointId)>,
    pub make_robust_calls: usize,
}

/// Replaces every center lacking a sufficient valid certificate by the head
/// of a freshly built robust tuple until all centers are covered.
///
/// A center is covered when it holds a valid certificate with level at least
/// `required_t(.., check_denom)`; new tuples are built at level
/// `required_t(.., build_denom)`. Violators are handled in ascending id order.
/// Passing a center that MakeRobust already produced or consumed in this call
/// back to MakeRobust is reported as an error.
pub fn robustify(
    metric: &MetricInstance,
    w: &CenterSolution,
    points: &[Weighted],
    certs: &mut CertificateStore,
    check_denom: f64,
    build_denom: f64,
) -> Result<RobustifyOutcome, RobustError> {
    if w.is_empty() {
        return Err(RobustError::EmptySolution);
    }
    let mut cur: BTreeSet<PointId> = w.centers().iter().copied().collect();
    let mut touched: BTreeSet<PointId> = BTreeSet::new();
    let mut changes = Vec::new();
    let mut calls = 0;
    loop {
        let list: Vec<PointId> = cur.iter().copied().collect();
        let violator = list.iter().copied().find(|&u| {
            let need = required_t(metric, u, &list, check_denom);
            certs.valid_t(u).is_none_or(|t| t < need)
        });
        let Some(u) = violator else { break };
        if !touched.insert(u) {
            return Err(RobustError::RepeatedMakeRobust(u));
        }
        let t = required_t(metric, u, &list, build_denom);
        let tuple = make_robust(metric, t, u, points);
        let u0 = tuple.p0();
        calls += 1;
        cur.remove(&u);
        cur.insert(u0);
        if u0 != u {
            changes.push((u, u0));
            touched.insert(u0);
        }
        certs.insert(RobustCertificate::new(tuple));
    }
    Ok(RobustifyOutcome { solution: CenterSolution::new(cur.into_iter().collect()), changes, make_robust_calls: calls })
}
