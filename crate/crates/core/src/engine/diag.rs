use crate::metric::{CenterSolution, MetricInstance};

/// Counts pairs `(u, v)`, `u` in `a`, `v` in `b`, that are each at least
/// `gamma` times closer to one another than to any other center of their
/// own solution.
pub fn count_well_separated(metric: &MetricInstance, a: &CenterSolution, b: &CenterSolution, gamma: f64) -> usize {
    let sep = |set: &CenterSolution, x| {
        let others: Vec<_> = set.centers().iter().copied().filter(|&c| c != x).collect();
        metric.dist_to_set(x, &others)
    };
    let sa: Vec<f64> = a.centers().iter().map(|&u| sep(a, u)).collect();
    let sb: Vec<f64> = b.centers().iter().map(|&v| sep(b, v)).collect();
    let mut count = 0;
    for (i, &u) in a.centers().iter().enumerate() {
        for (j, &v) in b.centers().iter().enumerate() {
            let d = gamma * metric.dist(u, v);
            if sa[i] >= d && sb[j] >= d {
                count += 1;
            }
        }
    }
    count
}
