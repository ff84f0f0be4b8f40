//! Marginal-preserving dependent rounding of fractional openings.
//!
//! Candidates are laid out in a random order along a line, each occupying an
//! interval of length `y(i)`. A single uniform offset `u` is drawn and the
//! candidates whose interval contains one of `u, u+1, u+2, ...` are opened.
//! Every candidate is opened with probability exactly `y(i)` and at most
//! `ceil(sum y)` candidates are opened.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::metric::PointId;

/// Rounds `y` to an integral set of at most `k` ids (sorted). Values are
/// clipped to `[0, 1]`; if the total exceeds `k` through solver noise it is
/// scaled down to `k` first.
pub fn systematic_round<R: Rng + ?Sized>(y: &[(PointId, f64)], k: usize, rng: &mut R) -> Vec<PointId> {
    let mut items: Vec<(PointId, f64)> = y.iter().map(|&(p, v)| (p, v.clamp(0.0, 1.0))).filter(|e| e.1 > 0.0).collect();
    items.sort_by_key(|e| e.0);
    let total: f64 = items.iter().map(|e| e.1).sum();
    if total > k as f64 {
        let s = k as f64 / total;
        items.iter_mut().for_each(|e| e.1 *= s);
    }
    items.shuffle(rng);
    let u: f64 = rng.gen();
    let mut opened = Vec::new();
    let mut cum = 0.0;
    let mut next = u;
    for (p, v) in items {
        let end = cum + v;
        if next < end && opened.len() < k {
            opened.push(p);
            next += 1.0;
        }
        cum = end;
    }
    opened.sort_unstable();
    opened
}
