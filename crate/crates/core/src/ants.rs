//! The multi-nest ants process and the single-nest process.
//!
//! Every step sends one ant from a nest to the food along a weighted walk,
//! erases the walk's loops backwards and adds 1 to the weight of each edge
//! of the resulting path. `N_i` counts the steps whose path touched `G_i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sp_graph::{self, FlatGraph, SpExpr};
use crate::theory::{self, TheoryParams};
use crate::triangle::{Component, TriangleSp, FOOD, N1, N2};
use crate::walk::{self, SimplePath, Trajectory, WalkError, DEFAULT_STEP_CAP};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AntsError {
    #[error("alpha must lie in [0, 1], got {0}")]
    Alpha(f64),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error("invariant violated at step {step}: {what}")]
    Invariant { step: u64, what: String },
}

/// The four shapes a reinforced path can take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    /// `N1 -> F` inside `G1`.
    G1Only,
    /// `N1 -> N2` through `G3`, then `N2 -> F` through `G2`.
    G3ThenG2,
    /// `N2 -> F` inside `G2`.
    G2Only,
    /// `N2 -> N1` through `G3`, then `N1 -> F` through `G1`.
    G3ThenG1,
}

impl Category {
    /// Counter increments `(dN1, dN2, dN3)`.
    pub fn increments(self) -> [u64; 3] {
        match self {
            Category::G1Only => [1, 0, 0],
            Category::G3ThenG2 => [0, 1, 1],
            Category::G2Only => [0, 1, 0],
            Category::G3ThenG1 => [1, 0, 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Step index after the update (1 for the first ant).
    pub step: u64,
    /// 1 or 2.
    pub nest: u8,
    pub walk_len: usize,
    pub path: SimplePath,
    pub category: Category,
}

/// Classifies a path from `N1` or `N2` to `F` by the components it uses.
pub fn categorize(triangle: &TriangleSp, path: &SimplePath) -> Option<Category> {
    let mut used = [false; 3];
    for &e in &path.edges {
        used[triangle.owner(e).index()] = true;
    }
    if path.end() != FOOD {
        return None;
    }
    match (path.start(), used) {
        (N1, [true, false, false]) => Some(Category::G1Only),
        (N1, [false, true, true]) => Some(Category::G3ThenG2),
        (N2, [false, true, false]) => Some(Category::G2Only),
        (N2, [true, false, true]) => Some(Category::G3ThenG1),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Checkpoints {
    /// Powers of two up to `n_steps`, plus `n_steps`.
    Geometric,
    /// These steps only (values above `n_steps` are ignored).
    At(Vec<u64>),
}

impl Checkpoints {
    pub fn resolve(&self, n_steps: u64) -> Vec<u64> {
        let mut out: Vec<u64> = match self {
            Checkpoints::Geometric => {
                let mut v: Vec<u64> = (0..64).map(|k| 1u64 << k).take_while(|&p| p <= n_steps).collect();
                v.push(n_steps);
                v
            }
            Checkpoints::At(list) => list.iter().copied().filter(|&n| n >= 1 && n <= n_steps).collect(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub n: u64,
    #[serde(rename = "N")]
    pub counts: [u64; 3],
    #[serde(rename = "Nhat")]
    pub nhat: [f64; 3],
    #[serde(rename = "C")]
    pub conductance: [f64; 3],
    pub r: [Option<f64>; 3],
    pub delta: Option<f64>,
    #[serde(rename = "W", skip_serializing_if = "Option::is_none", default)]
    pub weights: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    /// Minima over the second half of the run of `(N1 + N3)/(n + 2)` and
    /// `(N2 + N3)/(n + 2)`.
    pub floor_min: [f64; 2],
    pub category_counts: [u64; 4],
}

/// `P_i(C) - p_i(N)`; `None` while some counter is zero.
pub fn residual(counts: [u64; 3], conductance: [f64; 3], alpha: f64, lengths: [usize; 3]) -> Option<[f64; 3]> {
    if counts.contains(&0) {
        return None;
    }
    let params = TheoryParams::from_lengths(alpha, lengths).ok()?;
    let big = theory::big_p(conductance, alpha).ok()?;
    let small = theory::small_p(counts.map(|c| c as f64), &params).ok()?;
    Some([big[0] - small[0], big[1] - small[1], big[2] - small[2]])
}

/// `max_i |l_i C_i / N_i - 1|`; `None` while some counter is zero.
pub fn measured_delta(counts: [u64; 3], conductance: [f64; 3], lengths: [usize; 3]) -> Option<f64> {
    if counts.contains(&0) {
        return None;
    }
    Some((0..3).map(|i| (lengths[i] as f64 * conductance[i] / counts[i] as f64 - 1.0).abs()).fold(0.0, f64::max))
}

/// Upper bound on `|r_i|` implied by a conductance ratio error `delta < 1`.
pub fn residual_bound(delta: f64) -> f64 {
    (1.0 + delta) / (1.0 - delta) - 1.0
}

#[derive(Debug, Clone)]
pub struct AntsState {
    triangle: TriangleSp,
    alpha: f64,
    n: u64,
    weights: Vec<u64>,
    counts: [u64; 3],
    rng: ChaCha8Rng,
    step_cap: u64,
    traj: Trajectory,
    first_hit: Vec<usize>,
}

impl AntsState {
    pub fn init(triangle: TriangleSp, alpha: f64, seed: u64) -> Result<Self, AntsError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(AntsError::Alpha(alpha));
        }
        let weights = vec![1; triangle.graph().num_edges()];
        Ok(AntsState {
            triangle,
            alpha,
            n: 0,
            weights,
            counts: [0; 3],
            rng: ChaCha8Rng::seed_from_u64(seed),
            step_cap: DEFAULT_STEP_CAP,
            traj: Trajectory::default(),
            first_hit: Vec::new(),
        })
    }

    pub fn with_step_cap(mut self, cap: u64) -> Self {
        self.step_cap = cap;
        self
    }

    pub fn triangle(&self) -> &TriangleSp {
        &self.triangle
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    /// `(N1, N2, N3)`.
    pub fn counts(&self) -> [u64; 3] {
        self.counts
    }

    pub fn nhat(&self) -> [f64; 3] {
        if self.n == 0 {
            return [0.0; 3];
        }
        self.counts.map(|c| c as f64 / self.n as f64)
    }

    /// Effective conductance of each component at its current weights.
    pub fn conductances(&self) -> [f64; 3] {
        Component::ALL.map(|c| {
            let w = &self.weights[self.triangle.edge_range(c)];
            num_traits::ToPrimitive::to_f64(&sp_graph::effective_conductance(self.triangle.component(c), w))
                .unwrap_or(f64::NAN)
        })
    }

    pub fn residual(&self) -> Option<[f64; 3]> {
        residual(self.counts, self.conductances(), self.alpha, self.triangle.lengths())
    }

    pub fn snapshot(&self, with_weights: bool) -> Snapshot {
        let c = self.conductances();
        let lengths = self.triangle.lengths();
        let r = residual(self.counts, c, self.alpha, lengths);
        Snapshot {
            n: self.n,
            counts: self.counts,
            nhat: self.nhat(),
            conductance: c,
            r: r.map_or([None; 3], |r| r.map(Some)),
            delta: measured_delta(self.counts, c, lengths),
            weights: with_weights.then(|| self.weights.clone()),
        }
    }

    fn violation(&self, what: impl Into<String>) -> AntsError {
        AntsError::Invariant { step: self.n + 1, what: what.into() }
    }

    /// One ant: pick a nest, walk to the food, erase loops, reinforce.
    pub fn step(&mut self) -> Result<StepRecord, AntsError> {
        let from_one = self.rng.gen_bool(self.alpha);
        let start = if from_one { N1 } else { N2 };
        walk::walk_into(
            self.triangle.graph(),
            &self.weights,
            start,
            FOOD,
            &mut self.rng,
            self.step_cap,
            &mut self.traj,
        )?;
        let path = walk::loop_erase_with(&self.traj, &mut self.first_hit);
        if !path.is_simple_in(self.triangle.graph()) || path.start() != start {
            return Err(self.violation(format!("reinforced path {:?} is not simple", path.vertices)));
        }
        let category = categorize(&self.triangle, &path)
            .ok_or_else(|| self.violation(format!("path {:?} fits no category", path.edges)))?;
        for &e in &path.edges {
            self.weights[e] += 1;
        }
        let inc = category.increments();
        for i in 0..3 {
            self.counts[i] += inc[i];
        }
        self.n += 1;
        if self.counts[0] + self.counts[1] != self.n {
            return Err(AntsError::Invariant { step: self.n, what: "N1 + N2 != n".into() });
        }
        Ok(StepRecord { step: self.n, nest: if from_one { 1 } else { 2 }, walk_len: self.traj.len(), path, category })
    }

    /// Runs `n_steps` further steps, taking snapshots at the resolved
    /// checkpoints (counted from the current step).
    pub fn run(&mut self, n_steps: u64, checkpoints: &Checkpoints, with_weights: bool) -> Result<RunOutput, AntsError> {
        self.run_observed(n_steps, checkpoints, with_weights, |_, _| {})
    }

    /// [`run`](Self::run), calling `observe` after every step.
    pub fn run_observed(
        &mut self,
        n_steps: u64,
        checkpoints: &Checkpoints,
        with_weights: bool,
        mut observe: impl FnMut(&StepRecord, &AntsState),
    ) -> Result<RunOutput, AntsError> {
        let base = self.n;
        let marks = checkpoints.resolve(n_steps);
        let mut next_mark = 0;
        let mut snapshots = Vec::with_capacity(marks.len());
        let mut floor_min = [f64::INFINITY; 2];
        let mut category_counts = [0u64; 4];
        for k in 1..=n_steps {
            let rec = self.step()?;
            category_counts[rec.category as usize] += 1;
            observe(&rec, self);
            if 2 * k >= n_steps {
                let denom = (self.n + 2) as f64;
                let [a, b, c] = self.counts;
                floor_min[0] = floor_min[0].min((a + c) as f64 / denom);
                floor_min[1] = floor_min[1].min((b + c) as f64 / denom);
            }
            if next_mark < marks.len() && marks[next_mark] == k {
                snapshots.push(self.snapshot(with_weights));
                next_mark += 1;
            }
        }
        debug_assert_eq!(self.n, base + n_steps);
        Ok(RunOutput { snapshots, floor_min, category_counts })
    }
}

/// Times at which the weights of one component changed, with the
/// component-local weights right after each change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictedStep {
    pub time: u64,
    /// Component-local edge ids reinforced at this time, in path order.
    pub path: Vec<usize>,
    pub weights: Vec<u64>,
}

/// The restricted weight process of component `c`, read off step records
/// that started from all-ones weights.
pub fn restriction_times(records: &[StepRecord], triangle: &TriangleSp, c: Component) -> Vec<RestrictedStep> {
    let range = triangle.edge_range(c);
    let mut weights = vec![1u64; range.len()];
    let mut out = Vec::new();
    for rec in records {
        let local: Vec<usize> = rec.path.edges.iter().filter(|e| range.contains(e)).map(|e| e - range.start).collect();
        if local.is_empty() {
            continue;
        }
        for &e in &local {
            weights[e] += 1;
        }
        out.push(RestrictedStep { time: rec.step, path: local, weights: weights.clone() });
    }
    out
}

/// The ants process on a single SP graph, nest at the source and food at
/// the sink.
#[derive(Debug, Clone)]
pub struct SingleNestProcess {
    expr: SpExpr,
    graph: FlatGraph,
    n: u64,
    weights: Vec<u64>,
    rng: ChaCha8Rng,
    traj: Trajectory,
    first_hit: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleNestSnapshot {
    pub n: u64,
    pub conductance: f64,
    pub weights: Vec<u64>,
}

impl SingleNestProcess {
    pub fn new(expr: SpExpr, seed: u64) -> Self {
        let graph = sp_graph::flatten(&expr);
        let weights = vec![1; graph.num_edges()];
        SingleNestProcess {
            expr,
            graph,
            n: 0,
            weights,
            rng: ChaCha8Rng::seed_from_u64(seed),
            traj: Trajectory::default(),
            first_hit: Vec::new(),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn expr(&self) -> &SpExpr {
        &self.expr
    }

    pub fn conductance(&self) -> num_rational::BigRational {
        sp_graph::effective_conductance(&self.expr, &self.weights)
    }

    pub fn step(&mut self) -> Result<SimplePath, WalkError> {
        let (s, t) = (self.graph.source(), self.graph.sink());
        walk::walk_into(&self.graph, &self.weights, s, t, &mut self.rng, DEFAULT_STEP_CAP, &mut self.traj)?;
        let path = walk::loop_erase_with(&self.traj, &mut self.first_hit);
        for &e in &path.edges {
            self.weights[e] += 1;
        }
        self.n += 1;
        Ok(path)
    }
}

pub fn single_nest_run(
    expr: &SpExpr,
    n_steps: u64,
    seed: u64,
    checkpoints: &Checkpoints,
) -> Result<Vec<SingleNestSnapshot>, WalkError> {
    let mut proc = SingleNestProcess::new(expr.clone(), seed);
    let marks = checkpoints.resolve(n_steps);
    let mut out = Vec::with_capacity(marks.len());
    let mut next = 0;
    for k in 1..=n_steps {
        proc.step()?;
        if next < marks.len() && marks[next] == k {
            out.push(SingleNestSnapshot {
                n: k,
                conductance: num_traits::ToPrimitive::to_f64(&proc.conductance()).unwrap_or(f64::NAN),
                weights: proc.weights.clone(),
            });
            next += 1;
        }
    }
    Ok(out)
}

/// Least-squares slope of `log y` against `log x` over points with both
/// coordinates positive.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sp_graph::parse_sp;

    #[test]
    fn init_state() {
        let s = AntsState::init(TriangleSp::line(2, 4, 3).unwrap(), 0.3, 1).unwrap();
        assert!(s.weights().iter().all(|&w| w == 1));
        assert_eq!(s.counts(), [0, 0, 0]);
        assert_eq!(s.n(), 0);
        assert_eq!(AntsState::init(TriangleSp::line(1, 1, 1).unwrap(), 1.5, 1).unwrap_err(), AntsError::Alpha(1.5));
    }

    #[test]
    fn extreme_alpha_uses_one_nest() {
        for (alpha, nest) in [(0.0, 2), (1.0, 1)] {
            let mut s = AntsState::init(TriangleSp::line(1, 1, 1).unwrap(), alpha, 4).unwrap();
            for _ in 0..200 {
                assert_eq!(s.step().unwrap().nest, nest);
            }
        }
    }

    #[test]
    fn step_invariants() {
        let tri = TriangleSp::parse("par(e,series(e,e))", "series(e,e)", "par(e,e)").unwrap();
        let mut s = AntsState::init(tri, 0.4, 9).unwrap();
        let mut prev = s.counts();
        for _ in 0..2000 {
            let rec = s.step().unwrap();
            let now = s.counts();
            let inc = [now[0] - prev[0], now[1] - prev[1], now[2] - prev[2]];
            assert_eq!(inc, rec.category.increments());
            assert_eq!(now[0] + now[1], s.n());
            assert!(s.weights().iter().all(|&w| w <= s.n() + 1));
            prev = now;
        }
    }

    #[test]
    fn categories_match_components() {
        let tri = TriangleSp::line(1, 1, 1).unwrap();
        let p = |v: &[usize], e: &[usize]| SimplePath { vertices: v.to_vec(), edges: e.to_vec() };
        assert_eq!(categorize(&tri, &p(&[N1, FOOD], &[0])), Some(Category::G1Only));
        assert_eq!(categorize(&tri, &p(&[N1, N2, FOOD], &[2, 1])), Some(Category::G3ThenG2));
        assert_eq!(categorize(&tri, &p(&[N2, FOOD], &[1])), Some(Category::G2Only));
        assert_eq!(categorize(&tri, &p(&[N2, N1, FOOD], &[2, 0])), Some(Category::G3ThenG1));
        assert_eq!(categorize(&tri, &p(&[N1, N2], &[2])), None);
    }

    #[test]
    fn checkpoint_schedule() {
        assert_eq!(Checkpoints::Geometric.resolve(10), vec![1, 2, 4, 8, 10]);
        assert_eq!(Checkpoints::Geometric.resolve(8), vec![1, 2, 4, 8]);
        assert_eq!(Checkpoints::At(vec![5, 0, 3, 99]).resolve(10), vec![3, 5]);
    }

    #[test]
    fn single_step_run() {
        let mut s = AntsState::init(TriangleSp::line(1, 1, 2).unwrap(), 0.5, 3).unwrap();
        let out = s.run(1, &Checkpoints::At(vec![1]), false).unwrap();
        assert_eq!(out.snapshots.len(), 1);
        let snap = &out.snapshots[0];
        assert_eq!(snap.n, 1);
        assert_eq!(snap.counts[0] + snap.counts[1], 1);
    }

    #[test]
    fn reruns_are_identical() {
        let run = || {
            let mut s = AntsState::init(TriangleSp::line(2, 4, 3).unwrap(), 0.3, 77).unwrap();
            s.run(5000, &Checkpoints::Geometric, true).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn residual_definition() {
        let lengths = [2, 4, 3];
        let counts = [10, 30, 12];
        let c = [5.0, 7.5, 4.0];
        assert_eq!(residual(counts, c, 0.3, lengths), Some([0.0, 0.0, 0.0]));
        assert_eq!(measured_delta(counts, c, lengths), Some(0.0));
        assert_eq!(residual([0, 3, 1], c, 0.3, lengths), None);
        assert_eq!(measured_delta([1, 0, 1], c, lengths), None);
    }

    #[test]
    fn residual_within_bound_on_sp_state() {
        let tri = TriangleSp::parse("par(e,series(e,e))", "series(e,par(e,e))", "par(e,e)").unwrap();
        let mut s = AntsState::init(tri, 0.45, 21).unwrap();
        let out = s.run(20_000, &Checkpoints::Geometric, false).unwrap();
        for snap in &out.snapshots {
            if let (Some(d), [Some(r1), Some(r2), Some(r3)]) = (snap.delta, snap.r) {
                if d < 1.0 {
                    let b = residual_bound(d) + 1e-12;
                    assert!(r1.abs() <= b && r2.abs() <= b && r3.abs() <= b, "{snap:?}");
                }
            }
        }
    }

    #[test]
    fn single_nest_examples() {
        let mut single = SingleNestProcess::new(SpExpr::edge(), 1);
        for _ in 0..50 {
            single.step().unwrap();
        }
        assert_eq!(single.weights(), &[51]);

        let line = SpExpr::line(3);
        let snaps = single_nest_run(&line, 64, 2, &Checkpoints::Geometric).unwrap();
        for s in snaps {
            assert_eq!(s.conductance, (s.n + 1) as f64 / 3.0);
        }

        let snaps = single_nest_run(&parse_sp("par(e,e)").unwrap(), 100, 3, &Checkpoints::Geometric).unwrap();
        for s in snaps {
            assert_eq!(s.weights.iter().sum::<u64>(), s.n + 2);
        }
    }

    #[test]
    fn restriction_bookkeeping() {
        let tri = TriangleSp::parse("par(e,e)", "series(e,e)", "par(e,series(e,e))").unwrap();
        let mut s = AntsState::init(tri.clone(), 0.5, 5).unwrap();
        let mut records = Vec::new();
        for _ in 0..500 {
            records.push(s.step().unwrap());
        }
        let r1 = restriction_times(&records, &tri, Component::G1);
        let expected: Vec<u64> = records.iter().filter(|r| r.category.increments()[0] == 1).map(|r| r.step).collect();
        assert_eq!(r1.iter().map(|r| r.time).collect::<Vec<_>>(), expected);
        assert_eq!(r1.len() as u64, s.counts()[0]);
        let r3 = restriction_times(&records, &tri, Component::G3);
        assert_eq!(r3.len() as u64, s.counts()[2]);
        let mut prev_total = tri.edge_range(Component::G3).len() as u64;
        for step in &r3 {
            let total: u64 = step.weights.iter().sum();
            assert_eq!(total - prev_total, step.path.len() as u64);
            prev_total = total;
        }
        assert_eq!(r3.last().unwrap().weights, s.weights()[tri.edge_range(Component::G3)].to_vec());
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = (1..20).map(|k| (k as f64, 3.0 * (k as f64).powf(0.4))).collect();
        assert!((loglog_slope(&pts).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(loglog_slope(&[(1.0, 1.0)]), None);
    }
}
