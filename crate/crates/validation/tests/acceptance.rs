//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use ckm_bench::{steps_csv_bytes, streams::uniform_grid, RunConfig};
use ckm_core::engine::{run_baseline_until, Engine, StepRecord};
use ckm_core::lp_ops::{lp_remove, lp_swap};
use ckm_core::metric::set_difference_count;
use ckm_core::offline::{best_l_swap_bruteforce, brute_force_kmedian, estimate_gopt};
use ckm_core::robust::{make_robust, pow10, robustify, verify_robust_tuple, CertificateStore, RobustTuple};
use ckm_core::rounding::systematic_round;
use ckm_core::sketch::{MultiMeyerson, SketchParams};
use ckm_core::RobustError;
use ckm_core::{CenterSolution, MetricInstance, PointId, Weighted};

const SEED: u64 = 20_240_601;

fn rng(tag: u64) -> ChaCha8Rng {
    ckm_core::rng::substream(SEED, 100 + tag, 0)
}

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Random weighted instance on the line or in the plane with integer
/// coordinates spread over several powers of ten.
fn instance(r: &mut ChaCha8Rng, n: usize, max_w: u64) -> MetricInstance {
    let dim = r.gen_range(1..=2);
    let coords = (0..n * dim).map(|_| (r.gen_range(0..20) * 100 + r.gen_range(0..50)) as f64).collect();
    let weights = (0..n).map(|_| r.gen_range(1..=max_w)).collect();
    let mut m = MetricInstance::euclidean(dim, coords).unwrap().with_weights(weights).unwrap();
    m.normalize();
    m
}

fn random_centers(r: &mut ChaCha8Rng, n: usize, k: usize) -> CenterSolution {
    let size = r.gen_range(1..=k.min(n));
    CenterSolution::new(sample(r, n, size).into_iter().map(PointId::from).collect())
}

fn tuples() -> Vec<(MetricInstance, RobustTuple)> {
    let mut r = rng(1);
    (0..200)
        .map(|_| {
            let n = r.gen_range(1..=50);
            let m = instance(&mut r, n, 5);
            let t = r.gen_range(0..=4);
            let p = PointId::from(r.gen_range(0..n));
            let tuple = make_robust(&m, t, p, &m.all_points());
            (m, tuple)
        })
        .collect()
}

fn criterion_1(tuples: &[(MetricInstance, RobustTuple)], elapsed: Duration) -> Verdict {
    let ok = tuples.iter().filter(|(m, t)| verify_robust_tuple(m, t, &m.all_points())).count();
    Verdict::new(
        ok == tuples.len() && elapsed < Duration::from_secs(10),
        format!("{ok}/{} tuples verified in {:.2}s", tuples.len(), elapsed.as_secs_f64()),
    )
}

fn criterion_2(tuples: &[(MetricInstance, RobustTuple)]) -> Verdict {
    let mut r = rng(2);
    let (mut checks, mut violations) = (0usize, Vec::new());
    for (case, (m, tuple)) in tuples.iter().enumerate() {
        let pts = m.all_points();
        let p0 = tuple.p0();
        for j in 1..=tuple.t() as usize {
            let r_j = pow10(j as u32);
            checks += 2;
            if m.dist(p0, tuple.points[j]) > r_j / 2.0 {
                violations.push(format!("case {case}: dist(p0, p{j}) > 10^{j}/2"));
            }
            let outer = m.ball(tuple.points[j], r_j, &pts);
            if m.ball(tuple.points[j - 1], pow10(j as u32 - 1), &pts).iter().any(|q| !outer.contains(q)) {
                violations.push(format!("case {case}: ball {} not nested in ball {j}", j - 1));
            }
        }
        for i in 0..=tuple.t() as usize {
            let pi = tuple.points[i];
            let ball = m.ball(pi, pow10(i as u32), &pts);
            for _ in 0..20 {
                let keep = r.gen_range(0.0..1.0);
                let sup: Vec<Weighted> = pts.iter().filter(|q| ball.contains(q) || r.gen_bool(keep)).copied().collect();
                checks += 1;
                let (lhs, rhs) = (m.cost(&[p0], &sup), m.cost(&[pi], &sup));
                if lhs > 1.5 * rhs + 1e-9 {
                    violations.push(format!("case {case} level {i}: {lhs} > 1.5 * {rhs}"));
                }
            }
        }
    }
    Verdict::new(
        violations.is_empty(),
        format!("{checks} checks, {} violations{}", violations.len(), first(&violations)),
    )
}

fn criterion_3() -> Verdict {
    let mut r = rng(3);
    let mut bad = Vec::new();
    let mut calls = 0;
    for case in 0..100 {
        let n = r.gen_range(1..=60);
        let m = instance(&mut r, n, 5);
        let pts = m.all_points();
        let k = r.gen_range(1..=8);
        let w = random_centers(&mut r, n, k);
        let mut store = CertificateStore::new();
        match robustify(&m, &w, &pts, &mut store, 200.0, 100.0) {
            Ok(out) => {
                calls += out.make_robust_calls;
                let (before, after) = (m.cost(w.centers(), &pts), m.cost(out.solution.centers(), &pts));
                if after > 1.5 * before + 1e-9 {
                    bad.push(format!("case {case}: cost {after} > 1.5 * {before}"));
                }
            }
            Err(RobustError::RepeatedMakeRobust(u)) => bad.push(format!("case {case}: center {u} made robust twice")),
            Err(e) => bad.push(format!("case {case}: {e}")),
        }
    }
    Verdict::new(
        bad.is_empty(),
        format!("100 calls, {calls} MakeRobust invocations, {} violations{}", bad.len(), first(&bad)),
    )
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let c = 2.0;
    let mut r = rng(4);
    let mut bad = Vec::new();
    for case in 0..100 {
        let n = r.gen_range(1..=12);
        let k = r.gen_range(1..=4);
        let m = instance(&mut r, n, 5);
        let pts = m.all_points();
        let u = random_centers(&mut r, n, k);
        let base = m.cost(u.centers(), &pts);
        let v = lp_remove(&m, &u, &pts, k, c, &mut r).unwrap();
        let cost_v = m.cost(v.centers.centers(), &pts);
        if !v.exact {
            bad.push(format!("case {case}: rounding path used"));
        }
        if cost_v > 3.0 * c * base + 1e-9 {
            bad.push(format!("case {case}: cost {cost_v} > 3c * {base}"));
        }
        for mask in 1u32..(1 << u.len()) {
            let w: Vec<PointId> = (0..u.len()).filter(|i| mask >> i & 1 == 1).map(|i| u.centers()[i]).collect();
            if m.cost(&w, &pts) <= c * base && v.centers.len() > w.len() {
                bad.push(format!("case {case}: |V| = {} > |W| = {}", v.centers.len(), w.len()));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        bad.is_empty() && secs < 60.0,
        format!("100 instances, {} failures in {secs:.2}s{}", bad.len(), first(&bad)),
    )
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let mut r = rng(5);
    let (mut certified, mut bad) = (0, Vec::new());
    for case in 0..100 {
        let n = r.gen_range(1..=12);
        let k = r.gen_range(1..=4);
        let l = r.gen_range(0..=2);
        let m = instance(&mut r, n, 5);
        let pts = m.all_points();
        let u = random_centers(&mut r, n, k);
        let res = lp_swap(&m, &u, &pts, k, l, &mut r).unwrap();
        if !res.certified {
            continue;
        }
        certified += 1;
        let oracle = best_l_swap_bruteforce(&m, &u, &pts, k, l).unwrap().cached_cost().unwrap();
        let swaps = set_difference_count(u.centers(), res.centers.centers());
        let cost = m.cost(res.centers.centers(), &pts);
        if swaps > 4 * l || cost > 13.0 * oracle + 1e-9 {
            bad.push(format!("case {case}: {swaps} swaps (l = {l}), cost {cost} vs oracle {oracle}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        bad.is_empty() && certified >= 99 && secs < 120.0,
        format!("{certified}/100 certified, {} violations in {secs:.2}s{}", bad.len(), first(&bad)),
    )
}

fn criterion_6() -> Verdict {
    let y: Vec<(PointId, f64)> =
        [0.9, 0.75, 0.5, 0.35, 0.2, 0.15, 0.1, 0.05].iter().enumerate().map(|(i, &v)| (PointId::from(i), v)).collect();
    let k = 3;
    let draws = 10_000;
    let mut r = rng(6);
    let mut hits = vec![0usize; y.len()];
    let mut too_many = 0;
    for _ in 0..draws {
        let open = systematic_round(&y, k, &mut r);
        too_many += usize::from(open.len() > k);
        for p in open {
            hits[p.idx()] += 1;
        }
    }
    let worst = y.iter().zip(&hits).map(|(e, &h)| (h as f64 / draws as f64 - e.1).abs()).fold(0.0, f64::max);
    Verdict::new(worst <= 0.02 && too_many == 0, format!("max |freq - y| = {worst:.4}, draws over k: {too_many}"))
}

fn criterion_7() -> Verdict {
    let mut r = rng(7);
    let mut bad = Vec::new();
    let mut max_frac: f64 = 0.0;
    for case in 0..50 {
        let n = r.gen_range(1..=500);
        let k = r.gen_range(1..=5);
        let m = uniform_grid(n, r.gen());
        let gopt = estimate_gopt(&m, &m.all_points(), k).unwrap().value;
        let mut sk = MultiMeyerson::new(k, n, m.delta(), gopt, r.gen(), SketchParams::default()).unwrap();
        for (i, x) in m.ids().enumerate() {
            for (_, wt) in sk.insert(&m, x) {
                if !wt.is_power_of_two() {
                    bad.push(format!("case {case}: emitted weight {wt}"));
                }
            }
            if let Some(y) = sk.emitted().iter().find(|&&y| {
                let (w, v) = (sk.w(y).unwrap(), sk.v(y).unwrap());
                !(w <= v && v <= 2 * w)
            }) {
                bad.push(format!("case {case} step {}: w/v law broken at {y}", i + 1));
            }
        }
        let total = sk.total_weight();
        max_frac = max_frac.max(total as f64 / n as f64);
        if total > 2 * n as u64 {
            bad.push(format!("case {case}: total weight {total} > 2n = {}", 2 * n));
        }
        let ceiling = (sk.q() * sk.cap()) as f64 * ((n as f64).log2() + 1.0);
        if sk.emission_count() as f64 > ceiling {
            bad.push(format!("case {case}: {} emissions > {ceiling}", sk.emission_count()));
        }
    }
    Verdict::new(
        bad.is_empty(),
        format!("50 streams, max total weight / n = {max_frac:.3}, {} violations{}", bad.len(), first(&bad)),
    )
}

fn criterion_8() -> Verdict {
    let mut r = rng(8);
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for case in 0..30 {
        let n = r.gen_range(1..=60);
        let k = r.gen_range(1..=3);
        let m = uniform_grid(n, r.gen());
        let seed: u64 = r.gen();
        let marks: Vec<usize> = (1..=5).map(|i| (n * i).div_ceil(5)).collect();
        for &cp in &marks {
            let prefix = m.prefix(cp);
            let gopt = estimate_gopt(&m, &prefix, k).unwrap().value;
            let mut sk = MultiMeyerson::new(k, n, m.delta(), gopt, seed, SketchParams::default()).unwrap();
            for p in &prefix {
                sk.insert(&m, p.id);
            }
            let on_sketch = brute_force_kmedian(&m, &sk.weighted_set(), k).unwrap();
            let opt = brute_force_kmedian(&m, &prefix, k).unwrap().cached_cost().unwrap();
            let cost = m.cost(on_sketch.centers(), &prefix);
            if opt > 0.0 {
                worst = worst.max(cost / opt);
            }
            if cost > 122.0 * opt + 1e-9 {
                bad.push(format!("case {case} at {cp}: {cost} > 122 * {opt}"));
            }
        }
    }
    Verdict::new(
        bad.is_empty(),
        format!("150 checkpoints, worst ratio {worst:.3}, {} violations{}", bad.len(), first(&bad)),
    )
}

const RUN_LIMIT: Duration = Duration::from_secs(300);

/// Outcome of one engine/baseline pairing.
struct Pairing {
    k: usize,
    n: usize,
    seed: u64,
    baseline: Vec<StepRecord>,
    baseline_secs: f64,
    baseline_complete: bool,
    engine: Vec<StepRecord>,
    engine_secs: f64,
    engine_complete: bool,
    max_ratio: f64,
    ceiling: f64,
}

impl Pairing {
    fn baseline_cum(&self) -> u64 {
        self.baseline.last().map_or(0, |r| r.cum_changes)
    }

    fn engine_cum(&self) -> u64 {
        self.engine.last().map_or(0, |r| r.cum_changes)
    }

    fn passed(&self) -> bool {
        self.baseline_complete
            && self.engine_complete
            && 3 * self.engine_cum() <= self.baseline_cum()
            && self.max_ratio <= self.ceiling
    }

    fn describe(&self) -> String {
        let engine = if self.engine_complete {
            format!("engine {} changes in {:.1}s", self.engine_cum(), self.engine_secs)
        } else {
            format!(
                "engine stopped at step {} with {} changes after {:.1}s",
                self.engine.len(),
                self.engine_cum(),
                self.engine_secs
            )
        };
        let baseline = if self.baseline_complete {
            format!("baseline {} changes in {:.1}s", self.baseline_cum(), self.baseline_secs)
        } else {
            format!("baseline hit the time limit at step {}", self.baseline.len())
        };
        format!(
            "k={} n={} seed={}: {baseline}, {engine}, max cost/LB {:.2} (ceiling {})",
            self.k, self.n, self.seed, self.max_ratio, self.ceiling
        )
    }
}

fn run_config(k: usize, seed: u64) -> RunConfig {
    RunConfig::new(k, seed)
}

/// Runs the baseline to completion (or the time limit), then the engine until
/// it completes, exceeds a third of the baseline's changes (the pairing can no
/// longer pass) or hits the time limit.
fn pairing(k: usize, n: usize, seed: u64) -> Pairing {
    let cfg = run_config(k, seed);
    let metric = uniform_grid(n, seed);
    let order: Vec<PointId> = metric.ids().collect();
    let t0 = Instant::now();
    let ledger = run_baseline_until(&metric, &cfg.baseline_config(), &order, |_| t0.elapsed() > RUN_LIMIT).unwrap();
    let baseline_secs = t0.elapsed().as_secs_f64();
    let baseline = ledger.records().to_vec();
    let baseline_complete = baseline.len() == n && baseline_secs < RUN_LIMIT.as_secs_f64();
    let budget = baseline.last().map_or(0, |r| r.cum_changes) / 3;

    let ecfg = cfg.engine_config(&metric);
    let ceiling = ecfg.profile.cost_ceiling();
    let t1 = Instant::now();
    let mut engine = Engine::new(&metric, ecfg).unwrap();
    let mut max_ratio: f64 = 0.0;
    for &x in &order {
        engine.process_insertion(x).unwrap();
        let rec = engine.ledger().records().last().unwrap();
        max_ratio = max_ratio.max(rec.ratio());
        if rec.cum_changes > budget || t1.elapsed() > RUN_LIMIT {
            break;
        }
    }
    let engine_secs = t1.elapsed().as_secs_f64();
    let records = engine.ledger().records().to_vec();
    let engine_complete = records.len() == n && engine_secs < RUN_LIMIT.as_secs_f64();
    Pairing {
        k,
        n,
        seed,
        baseline,
        baseline_secs,
        baseline_complete,
        engine: records,
        engine_secs,
        engine_complete,
        max_ratio,
        ceiling,
    }
}

fn criterion_9() -> (Verdict, Vec<Pairing>) {
    let mut done = Vec::new();
    let mut lines = Vec::new();
    for n in [500, 2000] {
        for k in [5, 10] {
            for seed in 1..=3 {
                let p = pairing(k, n, seed);
                eprintln!("  criterion 9 pairing {}", p.describe());
                lines.push(p.describe());
                let ok = p.passed();
                done.push(p);
                if !ok {
                    let detail = format!(
                        "{} of 12 pairings run; failing pairing {}; the remaining pairings cannot change the verdict",
                        done.len(),
                        lines.last().unwrap()
                    );
                    return (Verdict::new(false, detail), done);
                }
            }
        }
    }
    let mut growth = Vec::new();
    for k in [5, 10] {
        for seed in 1..=3 {
            let cum = |n: usize| done.iter().find(|p| p.k == k && p.n == n && p.seed == seed).unwrap().engine_cum();
            let (small, large) = (cum(500), cum(2000));
            growth.push((k, seed, large as f64 / small.max(1) as f64));
        }
    }
    let worst = growth.iter().map(|g| g.2).fold(0.0, f64::max);
    (
        Verdict::new(worst <= 3.0, format!("all 12 pairings within a third of the baseline; worst growth {worst:.2}")),
        done,
    )
}

fn criterion_10(runs: &[Pairing]) -> Verdict {
    if runs.is_empty() {
        return Verdict::new(false, "no runs to repeat");
    }
    let mut mismatches = Vec::new();
    for p in runs {
        let cfg = run_config(p.k, p.seed);
        let metric = uniform_grid(p.n, p.seed);
        let order: Vec<PointId> = metric.ids().collect();
        let steps = p.baseline.len() as u64;
        let again = run_baseline_until(&metric, &cfg.baseline_config(), &order, |r| r.step >= steps).unwrap();
        if steps_csv_bytes(again.records()).unwrap() != steps_csv_bytes(&p.baseline).unwrap() {
            mismatches.push(format!("baseline k={} n={} seed={}", p.k, p.n, p.seed));
        }
        let mut engine = Engine::new(&metric, cfg.engine_config(&metric)).unwrap();
        for &x in &order[..p.engine.len()] {
            engine.process_insertion(x).unwrap();
        }
        if steps_csv_bytes(engine.ledger().records()).unwrap() != steps_csv_bytes(&p.engine).unwrap() {
            mismatches.push(format!("engine k={} n={} seed={}", p.k, p.n, p.seed));
        }
    }
    let rows: usize = runs.iter().map(|p| p.baseline.len() + p.engine.len()).sum();
    Verdict::new(
        mismatches.is_empty(),
        format!(
            "{} runs repeated ({rows} steps.csv rows), {} mismatches{}",
            2 * runs.len(),
            mismatches.len(),
            first(&mismatches)
        ),
    )
}

fn first(v: &[String]) -> String {
    v.first().map_or(String::new(), |s| format!("; first: {s}"))
}

fn main() {
    let mut results = Vec::new();
    let mut report = |id: usize, v: Verdict| {
        println!("criterion {id:>2}: {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push(v.pass);
    };

    let t = Instant::now();
    let tuples = tuples();
    report(1, criterion_1(&tuples, t.elapsed()));
    report(2, criterion_2(&tuples));
    report(3, criterion_3());
    report(4, criterion_4());
    report(5, criterion_5());
    report(6, criterion_6());
    report(7, criterion_7());
    report(8, criterion_8());
    let (v9, runs) = criterion_9();
    report(9, v9);
    report(10, criterion_10(&runs));

    let failed = results.iter().filter(|&&p| !p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
