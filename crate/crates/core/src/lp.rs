//! Weighted k-median LP relaxations solved with HiGHS.
//!
//! One model covers both relaxations used by the crate:
//!
//! ```text
//! min  sum_{i,j} x(i,j) w(j) d(i,j)
//! s.t. sum_i x(i,j) >= 1              every client j
//!      x(i,j) <= y(i)                 every pair
//!      sum_i y(i) <= budget
//!      v(i) >= y(i) - y0(i)           swap variant only
//!      sum_i v(i) <= l                swap variant only
//!      0 <= x, y, v <= 1
//! ```
//!
//! Large instances are solved by column generation. The master problem starts
//! with the anchor candidates (which alone make it feasible) and all their
//! assignment pairs. Each round prices, against the current duals,
//! - missing pairs of active candidates (reduced cost `w(j) d(i,j) - pi(j)`),
//! - inactive candidates as a whole: candidate `i` is worth opening when
//!   `sum_j max(0, pi(j) - w(j) d(i,j))` exceeds the budget dual (plus the
//!   swap-budget dual when `y0(i) = 0`).
//!
//! When neither finds anything the duals are feasible for the full model, so
//! the master optimum is the full optimum.

use std::os::raw::c_int;

use highs::{ColProblem, HighsModelStatus, Model, Row, Sense, SolvedModel};
use highs_sys::{Highs_addCols, Highs_addRows, STATUS_ERROR};

use crate::error::SolveError;
use crate::metric::{MetricInstance, PointId, Weighted};

/// At most this many (candidate, client) pairs: every pair goes in up front.
const FULL_PAIR_LIMIT: usize = 2_500;
/// Missing pairs of active candidates added per client per round.
const PRICE_PER_CLIENT: usize = 8;
/// Inactive candidates activated per round.
const ACTIVATE_PER_ROUND: usize = 12;
const PRIMAL_TOL: f64 = 1e-7;
/// Relative gap between the master objective and the Lagrangian bound of its
/// covering duals at which the master solution is accepted as optimal.
const GAP_TOL: f64 = 1e-9;

/// Swap side constraints: `y0` is the indicator of `anchor`.
#[derive(Clone, Debug)]
pub struct SwapConstraint {
    pub anchor: Vec<PointId>,
    pub l: f64,
}

/// A k-median LP over explicit candidates and weighted clients.
#[derive(Clone, Debug)]
pub struct KMedianLp<'a> {
    pub metric: &'a MetricInstance,
    pub clients: &'a [Weighted],
    pub candidates: Vec<PointId>,
    pub budget: f64,
    pub swap: Option<SwapConstraint>,
    /// Candidates active from the start, with all their pairs. Must admit a
    /// feasible solution on their own.
    pub anchors: Vec<PointId>,
}

/// Optimal fractional solution. Entries at zero are omitted.
#[derive(Clone, Debug, Default)]
pub struct LpSolution {
    pub value: f64,
    pub y: Vec<(PointId, f64)>,
    /// `(center, client index, value)`
    pub x: Vec<(PointId, usize, f64)>,
    pub v: Vec<(PointId, f64)>,
    /// Largest primal constraint violation, recomputed outside the solver.
    pub residual: f64,
    pub rounds: usize,
}

impl LpSolution {
    pub fn y_of(&self, p: PointId) -> f64 {
        self.y.iter().find(|(q, _)| *q == p).map_or(0.0, |e| e.1)
    }

    pub fn y_sum(&self) -> f64 {
        self.y.iter().map(|e| e.1).sum()
    }
}

/// Column-wise batch in HiGHS' compressed layout.
#[derive(Default)]
struct Batch {
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    starts: Vec<c_int>,
    index: Vec<c_int>,
    value: Vec<f64>,
}

impl Batch {
    fn push(&mut self, cost: f64, lower: f64, upper: f64, entries: &[(usize, f64)]) {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.starts.push(self.index.len() as c_int);
        for &(i, v) in entries {
            self.index.push(i as c_int);
            self.value.push(v);
        }
    }

    fn len(&self) -> usize {
        self.lower.len()
    }

    fn add_cols(&self, model: &mut Model) -> Result<(), SolveError> {
        if self.len() == 0 {
            return Ok(());
        }
        // SAFETY: every array has the length HiGHS expects for `len()` columns
        // and `index.len()` nonzeros, and all row indices exist.
        let status = unsafe {
            Highs_addCols(
                model.as_mut_ptr(),
                self.len() as c_int,
                self.cost.as_ptr(),
                self.lower.as_ptr(),
                self.upper.as_ptr(),
                self.index.len() as c_int,
                self.starts.as_ptr(),
                self.index.as_ptr(),
                self.value.as_ptr(),
            )
        };
        check(status, "addCols")
    }

    fn add_rows(&self, model: &mut Model) -> Result<(), SolveError> {
        if self.len() == 0 {
            return Ok(());
        }
        // SAFETY: as in `add_cols`, with rows in place of columns.
        let status = unsafe {
            Highs_addRows(
                model.as_mut_ptr(),
                self.len() as c_int,
                self.lower.as_ptr(),
                self.upper.as_ptr(),
                self.index.len() as c_int,
                self.starts.as_ptr(),
                self.index.as_ptr(),
                self.value.as_ptr(),
            )
        };
        check(status, "addRows")
    }
}

fn check(status: c_int, what: &str) -> Result<(), SolveError> {
    if status == STATUS_ERROR {
        Err(SolveError::Lp(format!("{what} failed")))
    } else {
        Ok(())
    }
}

/// Restricted master problem and its column bookkeeping.
struct Master<'m, 'a> {
    lp: &'m KMedianLp<'a>,
    nj: usize,
    n_cols: usize,
    y_col: Vec<Option<usize>>,
    v_col: Vec<Option<usize>>,
    y0: Vec<f64>,
    active: Vec<usize>,
    /// `(candidate index, client index)` per x column, in column order.
    pairs: Vec<(usize, usize)>,
    x_col: Vec<usize>,
    present: Vec<bool>,
}

impl<'m, 'a> Master<'m, 'a> {
    fn budget_row(&self) -> usize {
        self.nj
    }

    fn swap_total_row(&self) -> usize {
        self.nj + 1
    }

    fn pair_cost(&self, ci: usize, j: usize) -> f64 {
        let c = &self.lp.clients[j];
        c.weight as f64 * self.lp.metric.dist(self.lp.candidates[ci], c.id)
    }

    /// Adds `y` (and `v`) columns plus the swap rows for new candidates.
    fn activate(&mut self, model: &mut Model, cands: &[usize]) -> Result<(), SolveError> {
        let swap = self.lp.swap.is_some();
        let mut cols = Batch::default();
        for _ in cands {
            cols.push(0.0, 0.0, 1.0, &[(self.budget_row(), 1.0)]);
        }
        if swap {
            for _ in cands {
                cols.push(0.0, 0.0, 1.0, &[(self.swap_total_row(), 1.0)]);
            }
        }
        cols.add_cols(model)?;
        let base = self.n_cols;
        self.n_cols += cols.len();
        let mut rows = Batch::default();
        for (t, &ci) in cands.iter().enumerate() {
            self.y_col[ci] = Some(base + t);
            if swap {
                let v = base + cands.len() + t;
                self.v_col[ci] = Some(v);
                rows.push(0.0, f64::NEG_INFINITY, self.y0[ci], &[(base + t, 1.0), (v, -1.0)]);
            }
            self.active.push(ci);
        }
        rows.add_rows(model)
    }

    /// Adds `x` columns and their linking rows; every candidate must be active.
    fn add_pairs(&mut self, model: &mut Model, pairs: &[(usize, usize)]) -> Result<(), SolveError> {
        let mut cols = Batch::default();
        for &(ci, j) in pairs {
            cols.push(self.pair_cost(ci, j), 0.0, 1.0, &[(j, 1.0)]);
        }
        cols.add_cols(model)?;
        let base = self.n_cols;
        self.n_cols += pairs.len();
        let mut rows = Batch::default();
        for (t, &(ci, j)) in pairs.iter().enumerate() {
            let y = self.y_col[ci].expect("pair of an active candidate");
            rows.push(0.0, f64::NEG_INFINITY, 0.0, &[(base + t, 1.0), (y, -1.0)]);
            self.present[ci * self.nj + j] = true;
            self.pairs.push((ci, j));
            self.x_col.push(base + t);
        }
        rows.add_rows(model)
    }

    /// `g(i) = sum_j max(0, pi(j) - w(j) d(i,j))` for every candidate.
    fn gains(&self, pi: &[f64]) -> Vec<f64> {
        (0..self.lp.candidates.len())
            .map(|ci| (0..self.nj).map(|j| (pi[j] - self.pair_cost(ci, j)).max(0.0)).sum())
            .collect()
    }

    /// Lagrangian bound for covering duals `pi` (valid for any `pi >= 0`):
    /// `sum_j pi(j)` minus the best openings, which take the largest gains
    /// within the budget and put at most `l` mass outside the anchor set.
    fn lagrangian(&self, pi: &[f64], gains: &[f64]) -> f64 {
        let mut order: Vec<usize> = (0..gains.len()).filter(|&ci| gains[ci] > 0.0).collect();
        order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
        let mut budget = self.lp.budget;
        let mut outside = self.lp.swap.as_ref().map_or(f64::INFINITY, |s| s.l);
        let mut value: f64 = pi.iter().sum();
        for ci in order {
            if budget <= 0.0 {
                break;
            }
            let mut y = budget.min(1.0);
            if self.y0[ci] == 0.0 {
                y = y.min(outside);
                outside -= y;
            }
            if y <= 0.0 {
                continue;
            }
            budget -= y;
            value -= y * gains[ci];
        }
        value
    }

    /// Dual-feasibility pricing: missing pairs of active candidates with
    /// negative reduced cost, and inactive candidates whose gain exceeds the
    /// budget (and swap) duals. Finding nothing certifies optimality.
    fn price(&self, duals: &[f64], pi: &[f64], gains: &[f64]) -> (Vec<usize>, Vec<(usize, usize)>) {
        let nj = self.nj;
        let lambda = (-duals[self.budget_row()]).max(0.0);
        let nu = if self.lp.swap.is_some() { (-duals[self.swap_total_row()]).max(0.0) } else { 0.0 };

        let mut pairs = Vec::new();
        let mut cand: Vec<(f64, usize)> = Vec::new();
        for j in 0..nj {
            if pi[j] <= 0.0 {
                continue;
            }
            cand.clear();
            for &ci in &self.active {
                if !self.present[ci * nj + j] {
                    let rc = self.pair_cost(ci, j) - pi[j];
                    if rc < -1e-9 * pi[j].max(1.0) {
                        cand.push((rc, ci));
                    }
                }
            }
            if cand.len() > PRICE_PER_CLIENT {
                cand.select_nth_unstable_by(PRICE_PER_CLIENT - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                cand.truncate(PRICE_PER_CLIENT);
            }
            pairs.extend(cand.iter().map(|&(_, ci)| (ci, j)));
        }

        let mut open: Vec<(f64, usize)> = Vec::new();
        for (ci, &gain) in gains.iter().enumerate() {
            if self.y_col[ci].is_some() {
                continue;
            }
            let threshold = lambda + if self.y0[ci] > 0.0 { 0.0 } else { nu };
            let excess = gain - threshold;
            if excess > 1e-7 * threshold.max(1.0) {
                open.push((-excess, ci));
            }
        }
        open.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        open.truncate(ACTIVATE_PER_ROUND);
        let open: Vec<usize> = open.into_iter().map(|e| e.1).collect();
        for &ci in &open {
            pairs.extend((0..nj).filter(|&j| pi[j] - self.pair_cost(ci, j) > 0.0).map(|j| (ci, j)));
        }
        (open, pairs)
    }
}

impl<'a> KMedianLp<'a> {
    pub fn solve(&self) -> Result<LpSolution, SolveError> {
        if self.candidates.is_empty() {
            return Err(SolveError::NoCandidates);
        }
        let nc = self.candidates.len();
        let nj = self.clients.len();
        if nj == 0 {
            return Ok(LpSolution::default());
        }
        let y0: Vec<f64> = match &self.swap {
            Some(s) => self.candidates.iter().map(|c| if s.anchor.contains(c) { 1.0 } else { 0.0 }).collect(),
            None => vec![0.0; nc],
        };
        let mut pb = ColProblem::default();
        let _cover: Vec<Row> = (0..nj).map(|_| pb.add_row(1.0..)).collect();
        pb.add_row(..=self.budget);
        if let Some(s) = &self.swap {
            pb.add_row(..=s.l);
        }
        let mut model = pb.optimise(Sense::Minimise);
        model.make_quiet();
        model.set_option("solver", "simplex");
        model.set_option("threads", 1);

        let mut master = Master {
            lp: self,
            nj,
            n_cols: 0,
            y_col: vec![None; nc],
            v_col: vec![None; nc],
            y0,
            active: Vec::new(),
            pairs: Vec::new(),
            x_col: Vec::new(),
            present: vec![false; nc * nj],
        };
        let full = nc.saturating_mul(nj) <= FULL_PAIR_LIMIT;
        let mut first: Vec<usize> = if full {
            (0..nc).collect()
        } else {
            self.anchors.iter().filter_map(|a| self.candidates.iter().position(|c| c == a)).collect()
        };
        first.sort_unstable();
        first.dedup();
        if first.is_empty() {
            first.push(0);
        }
        master.activate(&mut model, &first)?;
        let pairs: Vec<(usize, usize)> = first.iter().flat_map(|&ci| (0..nj).map(move |j| (ci, j))).collect();
        master.add_pairs(&mut model, &pairs)?;

        let mut solved = solve_model(model)?;
        let mut rounds = 1;
        loop {
            let (open, pairs) = {
                let sol = solved.get_solution();
                let duals = sol.dual_rows();
                let pi: Vec<f64> = duals[..nj].iter().map(|d| d.max(0.0)).collect();
                let gains = master.gains(&pi);
                let obj = solved.objective_value();
                if obj - master.lagrangian(&pi, &gains) <= GAP_TOL * obj.abs().max(1.0) {
                    break;
                }
                master.price(duals, &pi, &gains)
            };
            if open.is_empty() && pairs.is_empty() {
                break;
            }
            let mut model: Model = solved.into();
            master.activate(&mut model, &open)?;
            master.add_pairs(&mut model, &pairs)?;
            solved = solve_model(model)?;
            rounds += 1;
        }
        let mut out = self.extract(&solved, &master);
        out.rounds = rounds;
        if out.residual > PRIMAL_TOL {
            return Err(SolveError::Residual(out.residual));
        }
        Ok(out)
    }

    fn extract(&self, solved: &SolvedModel, master: &Master<'_, '_>) -> LpSolution {
        let sol = solved.get_solution();
        let cols = sol.columns();
        let nc = self.candidates.len();
        let nj = self.clients.len();
        let clamp = |v: f64| v.clamp(0.0, 1.0);
        let y: Vec<f64> = (0..nc).map(|ci| master.y_col[ci].map_or(0.0, |c| clamp(cols[c]))).collect();
        let mut cover = vec![0.0; nj];
        let mut resid = 0.0f64;
        let mut x = Vec::new();
        let mut value = 0.0;
        for (p, &(ci, j)) in master.pairs.iter().enumerate() {
            let xv = clamp(cols[master.x_col[p]]);
            if xv > 0.0 {
                cover[j] += xv;
                resid = resid.max(xv - y[ci]);
                value += xv * master.pair_cost(ci, j);
                x.push((self.candidates[ci], j, xv));
            }
        }
        for c in &cover {
            resid = resid.max(1.0 - c);
        }
        let ysum: f64 = y.iter().sum();
        resid = resid.max(ysum - self.budget);
        let mut v = Vec::new();
        if let Some(s) = &self.swap {
            let mut vsum = 0.0;
            for ci in 0..nc {
                let vv = master.v_col[ci].map_or(0.0, |c| clamp(cols[c]));
                resid = resid.max(y[ci] - master.y0[ci] - vv);
                vsum += vv;
                if vv > 0.0 {
                    v.push((self.candidates[ci], vv));
                }
            }
            resid = resid.max(vsum - s.l);
        }
        let y = self.candidates.iter().zip(y).filter(|(_, v)| *v > 0.0).map(|(&c, v)| (c, v)).collect();
        LpSolution { value, y, x, v, residual: resid.max(0.0), rounds: 0 }
    }
}

fn solve_model(model: Model) -> Result<SolvedModel, SolveError> {
    let solved = model.try_solve().map_err(|e| SolveError::Lp(format!("{e:?}")))?;
    match solved.status() {
        HighsModelStatus::Optimal => Ok(solved),
        s => Err(SolveError::Lp(format!("{s:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, seed: u64) -> MetricInstance {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let coords: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(0..1000) as f64).collect();
        MetricInstance::euclidean(2, coords).unwrap()
    }

    #[test]
    fn two_point_line() {
        let m = MetricInstance::line(&[0.0, 10.0]);
        let pts = m.all_points();
        let lp = KMedianLp {
            metric: &m,
            clients: &pts,
            candidates: vec![PointId(0), PointId(1)],
            budget: 1.0,
            swap: None,
            anchors: vec![PointId(0)],
        };
        let s = lp.solve().unwrap();
        assert!((s.value - 10.0).abs() < 1e-9);
        assert!(s.residual <= 1e-7);
    }

    #[test]
    fn column_generation_matches_full_model() {
        // 220 clients x 220 candidates crosses the full-pair limit.
        let m = grid(220, 3);
        let pts = m.all_points();
        let cands: Vec<PointId> = m.ids().collect();
        let cg = KMedianLp {
            metric: &m,
            clients: &pts,
            candidates: cands.clone(),
            budget: 4.0,
            swap: None,
            anchors: vec![PointId(0)],
        }
        .solve()
        .unwrap();
        assert!(cg.rounds > 1);

        // Reference: every pair present from the start.
        let mut pb = ColProblem::default();
        let n = pts.len();
        let cover: Vec<Row> = (0..n).map(|_| pb.add_row(1.0..)).collect();
        let budget = pb.add_row(..=4.0);
        let links: Vec<Row> = (0..n * n).map(|_| pb.add_row(..=0.0)).collect();
        for i in 0..n {
            let mut f = vec![(budget, 1.0)];
            f.extend((0..n).map(|j| (links[i * n + j], -1.0)));
            pb.add_column(0.0, 0.0..=1.0, f);
        }
        for i in 0..n {
            for j in 0..n {
                let c = m.dist(PointId::from(i), PointId::from(j));
                pb.add_column(c, 0.0..=1.0, [(cover[j], 1.0), (links[i * n + j], 1.0)]);
            }
        }
        let mut model = pb.optimise(Sense::Minimise);
        model.make_quiet();
        let reference = model.solve().objective_value();
        assert!((cg.value - reference).abs() <= 1e-7 * reference.max(1.0), "{} vs {}", cg.value, reference);
    }
}
