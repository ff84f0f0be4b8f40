use crate::error::SolveError;
use crate::metric::{set_difference_count, CenterSolution, MetricInstance, PointId, Weighted};

use super::{ids_of, DenseTable};

/// Largest number of candidate sets the exhaustive solvers will enumerate.
pub const BRUTE_FORCE_GUARD: u128 = 10_000_000;

pub fn n_choose_k(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Calls `f` on every `r`-subset of `0..n` in lexicographic order.
pub fn for_each_combination(n: usize, r: usize, mut f: impl FnMut(&[usize])) {
    if r > n {
        return;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        f(&idx);
        let mut i = r;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - r {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn sorted_candidates(points: &[Weighted], extra: &[PointId]) -> Vec<PointId> {
    let mut c = ids_of(points);
    c.extend_from_slice(extra);
    c.sort_unstable();
    c.dedup();
    c
}

fn guard(n: usize, r: usize) -> Result<(), SolveError> {
    let count = n_choose_k(n, r);
    if count > BRUTE_FORCE_GUARD {
        return Err(SolveError::TooLarge(count, BRUTE_FORCE_GUARD));
    }
    Ok(())
}

/// Exact minimum-cost set of `min(k, |P|)` centers drawn from `points`.
/// Among equal costs the lexicographically smallest id set wins.
pub fn brute_force_kmedian(
    metric: &MetricInstance,
    points: &[Weighted],
    k: usize,
) -> Result<CenterSolution, SolveError> {
    let cands = sorted_candidates(points, &[]);
    let r = k.min(cands.len());
    guard(cands.len(), r)?;
    let table = DenseTable::new(metric, &cands, points);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for_each_combination(cands.len(), r, |set| {
        let c = table.cost_of(set, metric.delta());
        if best.as_ref().is_none_or(|b| c < b.0) {
            best = Some((c, set.to_vec()));
        }
    });
    let (c, set) = best.unwrap_or((metric.cost(&[], points), Vec::new()));
    Ok(CenterSolution::with_cost(set.iter().map(|&i| cands[i]).collect(), c))
}

/// Exact minimizer of cost over all center sets `W` with `|W| <= k` drawn from
/// `points` (plus the members of `u`) and `|u \ W| <= l`.
pub fn best_l_swap_bruteforce(
    metric: &MetricInstance,
    u: &CenterSolution,
    points: &[Weighted],
    k: usize,
    l: usize,
) -> Result<CenterSolution, SolveError> {
    let cands = sorted_candidates(points, u.centers());
    let r = k.min(cands.len());
    guard(cands.len(), r)?;
    let table = DenseTable::new(metric, &cands, points);
    let mut best: Option<(f64, Vec<PointId>)> = None;
    let mut ids = Vec::with_capacity(r);
    for_each_combination(cands.len(), r, |set| {
        ids.clear();
        ids.extend(set.iter().map(|&i| cands[i]));
        if set_difference_count(u.centers(), &ids) > l {
            return;
        }
        let c = table.cost_of(set, metric.delta());
        if best.as_ref().is_none_or(|b| c < b.0) {
            best = Some((c, ids.clone()));
        }
    });
    // Only reachable when every size-r set removes more than l members of u,
    // which cannot happen because u itself (padded) is admissible.
    let (c, set) = best.expect("u is always admissible");
    Ok(CenterSolution::with_cost(set, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<PointId> {
        v.iter().map(|&i| PointId(i)).collect()
    }

    #[test]
    fn combinations_in_lex_order() {
        let mut seen = Vec::new();
        for_each_combination(4, 2, |s| seen.push(s.to_vec()));
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        let mut count = 0;
        for_each_combination(5, 0, |_| count += 1);
        assert_eq!(count, 1);
        assert_eq!(n_choose_k(60, 3), 34_220);
    }

    #[test]
    fn brute_force_examples() {
        let m = MetricInstance::line(&[0.0, 1.0, 2.0]);
        let s = brute_force_kmedian(&m, &m.all_points(), 1).unwrap();
        assert_eq!(s.centers(), &ids(&[1])[..]);
        assert_eq!(s.cached_cost(), Some(2.0));
        let s = brute_force_kmedian(&m, &m.all_points(), 3).unwrap();
        assert_eq!(s.cached_cost(), Some(0.0));

        let m = MetricInstance::line(&[0.0, 1.0, 2.0, 100.0]);
        let s = brute_force_kmedian(&m, &m.all_points(), 2).unwrap();
        assert_eq!(s.centers(), &ids(&[1, 3])[..]);
        assert_eq!(s.cached_cost(), Some(2.0));
    }

    #[test]
    fn brute_force_guard_refuses() {
        let m = MetricInstance::line(&(0..200).map(f64::from).collect::<Vec<_>>());
        let err = brute_force_kmedian(&m, &m.all_points(), 5).unwrap_err();
        assert!(matches!(err, SolveError::TooLarge(..)));
    }

    #[test]
    fn best_l_swap_examples() {
        let m = MetricInstance::line(&[0.0, 1.0, 2.0, 100.0]);
        let all = m.all_points();
        let u = CenterSolution::new(ids(&[0, 2]));
        let s0 = best_l_swap_bruteforce(&m, &u, &all, 2, 0).unwrap();
        assert_eq!(s0.centers(), u.centers());
        // {0,100} and {2,100} both cost 3; lexicographic order picks {0,100}.
        let s1 = best_l_swap_bruteforce(&m, &u, &all, 2, 1).unwrap();
        assert_eq!(s1.centers(), &ids(&[0, 3])[..]);
        assert_eq!(s1.cached_cost(), Some(3.0));
        let s2 = best_l_swap_bruteforce(&m, &u, &all, 2, 2).unwrap();
        let opt = brute_force_kmedian(&m, &all, 2).unwrap();
        assert_eq!(s2, opt);
    }
}
