//! Exact laws of loop-erased walks on small graphs.
//!
//! The backward loop-erasure of a walk is the chain of first-entry edges
//! from the absorbing vertex, so the pair (first-entry tree, current
//! vertex) is a sufficient state. Between two discoveries of a new vertex
//! the tree is fixed and the walk moves inside the visited set `S`; the
//! probability of leaving `S` through a given edge comes from the Green's
//! function of the walk killed on leaving `S`. Processing trees by size of
//! `S` turns the whole law into a sequence of small linear solves.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::linalg::{self, Scalar, SingularMatrix};
use crate::sp_graph::FlatGraph;
use crate::walk::SimplePath;

pub const DEFAULT_VERTEX_CAP: usize = 8;
pub const DEFAULT_STATE_CAP: usize = 2_000_000;
/// Largest accepted residual of a floating-point solve.
pub const FLOAT_RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("graph has {0} vertices, above the cap of {1}")]
    TooManyVertices(usize, usize),
    #[error("augmented chain exceeded {0} states")]
    TooManyStates(usize),
    #[error("weights length {0} does not match {1} edges")]
    WeightCount(usize, usize),
    #[error("negative weight on edge {0}")]
    NegativeWeight(usize),
    #[error("vertex {0} has zero total weight")]
    DeadEnd(usize),
    #[error("start and absorbing vertex coincide")]
    StartIsAbsorb,
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
    #[error(transparent)]
    Singular(#[from] SingularMatrix),
    #[error("linear solve residual {0:e} exceeds tolerance")]
    Residual(f64),
    #[error("absorbing vertex is not reached with positive probability")]
    Unreachable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleOptions {
    pub vertex_cap: usize,
    pub state_cap: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { vertex_cap: DEFAULT_VERTEX_CAP, state_cap: DEFAULT_STATE_CAP }
    }
}

/// Law of a random simple path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDistribution<T> {
    pub probs: BTreeMap<SimplePath, T>,
}

impl<T: Scalar> PathDistribution<T> {
    pub fn total(&self) -> T {
        self.probs.values().cloned().fold(T::zero(), |a, b| a + b)
    }

    pub fn get(&self, path: &SimplePath) -> T {
        self.probs.get(path).cloned().unwrap_or_else(T::zero)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Same law with every path reversed.
    pub fn reversed(&self) -> PathDistribution<T> {
        PathDistribution { probs: self.probs.iter().map(|(p, v)| (p.reverse(), v.clone())).collect() }
    }

    pub fn to_f64(&self) -> PathDistribution<f64> {
        PathDistribution { probs: self.probs.iter().map(|(p, v)| (p.clone(), v.to_f64())).collect() }
    }
}

impl PathDistribution<BigRational> {
    /// `(edge ids, "num/den")` rows.
    pub fn to_rows(&self) -> Vec<(Vec<usize>, String)> {
        self.probs.iter().map(|(p, v)| (p.edges.clone(), format!("{}/{}", v.numer(), v.denom()))).collect()
    }
}

pub fn rational_weights(weights: &[u64]) -> Vec<BigRational> {
    weights.iter().map(|&w| BigRational::from_integer(BigInt::from(w))).collect()
}

fn abs<T: Scalar>(x: T) -> T {
    if x.is_negative() {
        -x
    } else {
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvMode {
    /// Compare `d1(g)` with `d2(g)`.
    Direct,
    /// Compare `d1(g)` with `d2(reverse(g))`.
    Reversed,
}

/// Total-variation distance over the union of supports.
pub fn tv_distance<T: Scalar>(d1: &PathDistribution<T>, d2: &PathDistribution<T>, mode: TvMode) -> T {
    let d2 = match mode {
        TvMode::Direct => d2.clone(),
        TvMode::Reversed => d2.reversed(),
    };
    let mut sum = T::zero();
    for (p, v) in &d1.probs {
        sum = sum + abs(v.clone() - d2.get(p));
    }
    for (p, v) in &d2.probs {
        if !d1.probs.contains_key(p) {
            sum = sum + abs(v.clone());
        }
    }
    sum / T::from_u64(2)
}

fn check_inputs<T: Scalar>(graph: &FlatGraph, weights: &[T], vertices: &[usize]) -> Result<Vec<T>, OracleError> {
    if weights.len() != graph.num_edges() {
        return Err(OracleError::WeightCount(weights.len(), graph.num_edges()));
    }
    if let Some(e) = weights.iter().position(|w| w.is_negative()) {
        return Err(OracleError::NegativeWeight(e));
    }
    if let Some(&v) = vertices.iter().find(|&&v| v >= graph.num_vertices()) {
        return Err(OracleError::VertexOutOfRange(v));
    }
    Ok((0..graph.num_vertices())
        .map(|v| graph.incident(v).iter().map(|(e, _)| weights[*e].clone()).fold(T::zero(), |a, b| a + b))
        .collect())
}

fn reaches<T: Scalar>(graph: &FlatGraph, weights: &[T], from: usize, to: usize) -> bool {
    let mut seen = vec![false; graph.num_vertices()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(u) = stack.pop() {
        if u == to {
            return true;
        }
        for &(e, y) in graph.incident(u) {
            if !weights[e].is_zero() && !std::mem::replace(&mut seen[y], true) {
                stack.push(y);
            }
        }
    }
    false
}

/// First-entry tree: `pred[v]` for every visited vertex other than the root.
type Tree = Vec<Option<(usize, usize)>>;

fn chain(tree: &Tree, start: usize, end: usize) -> SimplePath {
    let mut vertices = vec![end];
    let mut edges = Vec::new();
    let mut v = end;
    while v != start {
        let (p, e) = tree[v].expect("visited vertices have a first-entry edge");
        edges.push(e);
        vertices.push(p);
        v = p;
    }
    vertices.reverse();
    edges.reverse();
    SimplePath { vertices, edges }
}

fn solve_checked<T: Scalar>(a: Vec<Vec<T>>, b: Vec<T>) -> Result<Vec<T>, OracleError> {
    let x = linalg::solve(a.clone(), b.clone())?;
    let res = linalg::residual(&a, &x, &b);
    if res > FLOAT_RESIDUAL_TOL {
        return Err(OracleError::Residual(res));
    }
    Ok(x)
}

fn le_law<T: Scalar>(
    graph: &FlatGraph,
    weights: &[T],
    start: usize,
    absorb: usize,
    kill_at_start: bool,
    opts: &OracleOptions,
) -> Result<PathDistribution<T>, OracleError> {
    let n = graph.num_vertices();
    if n > opts.vertex_cap {
        return Err(OracleError::TooManyVertices(n, opts.vertex_cap));
    }
    if start == absorb {
        return Err(OracleError::StartIsAbsorb);
    }
    let total = check_inputs(graph, weights, &[start, absorb])?;
    if !reaches(graph, weights, start, absorb) {
        return Err(OracleError::Unreachable);
    }

    let root: Tree = vec![None; n];
    let mut layer: BTreeMap<(Tree, usize), T> = BTreeMap::from([((root, start), T::one())]);
    let mut law: BTreeMap<SimplePath, T> = BTreeMap::new();
    let mut states = 0usize;

    while !layer.is_empty() {
        states += layer.len();
        if states > opts.state_cap {
            return Err(OracleError::TooManyStates(opts.state_cap));
        }
        let mut next: BTreeMap<(Tree, usize), T> = BTreeMap::new();
        let entries: Vec<_> = layer.into_iter().collect();
        let mut i = 0;
        while i < entries.len() {
            let tree = &entries[i].0 .0;
            let mut j = i;
            while j < entries.len() && entries[j].0 .0 == *tree {
                j += 1;
            }

            let visited: Vec<usize> = (0..n).filter(|&v| v == start || tree[v].is_some()).collect();
            let mut index = vec![usize::MAX; n];
            for (k, &v) in visited.iter().enumerate() {
                index[v] = k;
                if total[v].is_zero() {
                    return Err(OracleError::DeadEnd(v));
                }
            }
            let m = visited.len();
            // Transposed (I - Q) so that solving against e_x yields row x of
            // the Green's function.
            let mut mt = vec![vec![T::zero(); m]; m];
            for k in 0..m {
                mt[k][k] = T::one();
            }
            for (k, &u) in visited.iter().enumerate() {
                for &(e, y) in graph.incident(u) {
                    let ky = index[y];
                    if ky == usize::MAX || (kill_at_start && y == start) {
                        continue;
                    }
                    let q = weights[e].clone() / total[u].clone();
                    mt[ky][k] = mt[ky][k].clone() - q;
                }
            }

            for ((_, x), mass) in &entries[i..j] {
                let mut rhs = vec![T::zero(); m];
                rhs[index[*x]] = T::one();
                let green = solve_checked(mt.clone(), rhs)?;
                for (k, &u) in visited.iter().enumerate() {
                    if green[k].is_zero() {
                        continue;
                    }
                    for &(e, y) in graph.incident(u) {
                        if index[y] != usize::MAX || weights[e].is_zero() {
                            continue;
                        }
                        let p = mass.clone() * green[k].clone() * weights[e].clone() / total[u].clone();
                        let mut grown = tree.clone();
                        grown[y] = Some((u, e));
                        if y == absorb {
                            let path = chain(&grown, start, absorb);
                            let slot = law.entry(path).or_insert_with(T::zero);
                            *slot = slot.clone() + p;
                        } else {
                            let slot = next.entry((grown, y)).or_insert_with(T::zero);
                            *slot = slot.clone() + p;
                        }
                    }
                }
            }
            i = j;
        }
        layer = next;
    }

    let dist = PathDistribution { probs: law };
    if dist.is_empty() || dist.total().is_zero() {
        return Err(OracleError::Unreachable);
    }
    Ok(dist)
}

/// Exact law of the backward loop-erasure of the walk from `start` stopped
/// at `absorb`.
pub fn exact_le_distribution<T: Scalar>(
    graph: &FlatGraph,
    weights: &[T],
    start: usize,
    absorb: usize,
    opts: &OracleOptions,
) -> Result<PathDistribution<T>, OracleError> {
    le_law(graph, weights, start, absorb, false, opts)
}

/// Law of the loop-erasure of the walk conditioned to reach `absorb`
/// before coming back to `start`.
pub fn excursion_le_distribution<T: Scalar>(
    graph: &FlatGraph,
    weights: &[T],
    start: usize,
    absorb: usize,
    opts: &OracleOptions,
) -> Result<PathDistribution<T>, OracleError> {
    let killed = le_law(graph, weights, start, absorb, true, opts)?;
    let z = killed.total();
    Ok(PathDistribution { probs: killed.probs.into_iter().map(|(p, v)| (p, v / z.clone())).collect() })
}

/// Probability that the walk from `start` hits `a` before `b`.
pub fn exact_hit_before<T: Scalar>(
    graph: &FlatGraph,
    weights: &[T],
    start: usize,
    a: usize,
    b: usize,
) -> Result<T, OracleError> {
    let total = check_inputs(graph, weights, &[start, a, b])?;
    if start == a {
        return Ok(T::one());
    }
    if start == b {
        return Ok(T::zero());
    }
    // Vertices reachable from start without passing through a or b.
    let n = graph.num_vertices();
    let mut index = vec![usize::MAX; n];
    let mut order = vec![start];
    index[start] = 0;
    let mut hits_target = false;
    let mut k = 0;
    while k < order.len() {
        let u = order[k];
        k += 1;
        if total[u].is_zero() {
            return Err(OracleError::DeadEnd(u));
        }
        for &(e, y) in graph.incident(u) {
            if weights[e].is_zero() {
                continue;
            }
            if y == a || y == b {
                hits_target = true;
            } else if index[y] == usize::MAX {
                index[y] = order.len();
                order.push(y);
            }
        }
    }
    if !hits_target {
        return Err(OracleError::Unreachable);
    }
    let m = order.len();
    let mut mat = vec![vec![T::zero(); m]; m];
    let mut rhs = vec![T::zero(); m];
    for (k, &u) in order.iter().enumerate() {
        mat[k][k] = T::one();
        for &(e, y) in graph.incident(u) {
            let q = weights[e].clone() / total[u].clone();
            if y == a {
                rhs[k] = rhs[k].clone() + q;
            } else if y != b {
                let ky = index[y];
                mat[k][ky] = mat[k][ky].clone() - q;
            }
        }
    }
    Ok(solve_checked(mat, rhs)?[0].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sp_graph::{effective_conductance, flatten, parse_sp, SpExpr};

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn rational_law(text: &str, w: &[u64]) -> PathDistribution<BigRational> {
        let g = flatten(&parse_sp(text).unwrap());
        exact_le_distribution(&g, &rational_weights(w), g.source(), g.sink(), &OracleOptions::default()).unwrap()
    }

    #[test]
    fn parallel_pair_follows_weights() {
        let d = rational_law("par(e,e)", &[2, 1]);
        assert_eq!(d.len(), 2);
        let by_edge: BTreeMap<_, _> = d.probs.iter().map(|(p, v)| (p.edges.clone(), v.clone())).collect();
        assert_eq!(by_edge[&vec![0]], q(2, 3));
        assert_eq!(by_edge[&vec![1]], q(1, 3));
    }

    #[test]
    fn line_has_one_path() {
        let d = rational_law("series(e,e)", &[1, 1]);
        assert_eq!(d.len(), 1);
        assert!(d.total() == q(1, 1));
    }

    #[test]
    fn triangle_law_is_exact() {
        // s-t direct (edge 0) against s-m-t (edges 1, 2), unit weights.
        let d = rational_law("par(e,series(e,e))", &[1, 1, 1]);
        let by_edge: BTreeMap<_, _> = d.probs.iter().map(|(p, v)| (p.edges.clone(), v.clone())).collect();
        // Hit t via the direct edge before via m: from s the walk sees
        // conductance 1 directly and 1/2 through m, so the last entry into
        // t is direct with probability 2/3.
        assert_eq!(by_edge[&vec![0]], q(2, 3));
        assert_eq!(by_edge[&vec![1, 2]], q(1, 3));
    }

    #[test]
    fn excursion_matches_without_returns() {
        let g = flatten(&parse_sp("par(e,e)").unwrap());
        let w = rational_weights(&[2, 1]);
        let o = OracleOptions::default();
        let a = exact_le_distribution(&g, &w, 0, 1, &o).unwrap();
        let b = excursion_le_distribution(&g, &w, 0, 1, &o).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pendant_loop_is_erased() {
        // Source 0, sink 1, pendant vertex 2 hanging off the source.
        let g = FlatGraph::new(3, &[(0, 1), (0, 2)], 0, 1).unwrap();
        let w = rational_weights(&[1, 3]);
        let o = OracleOptions::default();
        let a = exact_le_distribution(&g, &w, 0, 1, &o).unwrap();
        let b = excursion_le_distribution(&g, &w, 0, 1, &o).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a, b);
    }

    #[test]
    fn hit_before_examples() {
        let g = flatten(&parse_sp("par(e,e)").unwrap());
        // Split the two parallel edges into distinct targets.
        let star = FlatGraph::new(3, &[(0, 1), (0, 2)], 0, 1).unwrap();
        assert_eq!(exact_hit_before(&star, &rational_weights(&[2, 1]), 0, 1, 2).unwrap(), q(2, 3));
        let sym = FlatGraph::new(5, &[(0, 1), (1, 2), (0, 3), (3, 4)], 0, 2).unwrap();
        assert_eq!(exact_hit_before(&sym, &rational_weights(&[1; 4]), 0, 2, 4).unwrap(), q(1, 2));
        assert!(exact_hit_before(&g, &rational_weights(&[1, 1]), 1, 1, 0).unwrap() == q(1, 1));
        assert!(exact_hit_before(&g, &rational_weights(&[1, 1]), 0, 1, 0).unwrap().is_zero());
    }

    #[test]
    fn hit_before_two_blocks_is_conductance_ratio() {
        let left = parse_sp("par(e,series(e,e))").unwrap();
        let right = parse_sp("series(e,par(e,e))").unwrap();
        let mut b = crate::sp_graph::GraphBuilder::new();
        let (s, t1, t2) = (b.add_vertex(), b.add_vertex(), b.add_vertex());
        b.embed(&left, s, t1);
        b.embed(&right, s, t2);
        let g = b.build(s, t1).unwrap();
        let w = [2u64, 3, 1, 4, 1, 2];
        let c1 = effective_conductance(&left, &w[..3]);
        let c2 = effective_conductance(&right, &w[3..]);
        let p = exact_hit_before(&g, &rational_weights(&w), s, t1, t2).unwrap();
        assert_eq!(p, c1.clone() / (c1 + c2));
    }

    #[test]
    fn tv_examples() {
        let d = rational_law("par(e,series(e,e))", &[1, 2, 1]);
        assert!(tv_distance(&d, &d, TvMode::Direct).is_zero());
        let other = rational_law("series(e,e)", &[1, 1]);
        assert!(tv_distance(&d, &other, TvMode::Direct) == q(1, 1));
    }

    #[test]
    fn float_mode_agrees() {
        let g = flatten(&parse_sp("par(series(e,e),series(e,par(e,e)))").unwrap());
        let w = [3u64, 1, 2, 5, 1];
        let o = OracleOptions::default();
        let exact = exact_le_distribution(&g, &rational_weights(&w), 0, 1, &o).unwrap();
        let wf: Vec<f64> = w.iter().map(|&x| x as f64).collect();
        let float = exact_le_distribution(&g, &wf, 0, 1, &o).unwrap();
        assert!(tv_distance(&exact.to_f64(), &float, TvMode::Direct) < 1e-12);
        assert_eq!(exact.total(), q(1, 1));
    }

    #[test]
    fn errors() {
        let g = flatten(&parse_sp("par(e,e)").unwrap());
        let o = OracleOptions::default();
        assert_eq!(
            exact_le_distribution(&g, &rational_weights(&[1]), 0, 1, &o).unwrap_err(),
            OracleError::WeightCount(1, 2)
        );
        assert_eq!(
            exact_le_distribution(&g, &rational_weights(&[1, 1]), 0, 0, &o).unwrap_err(),
            OracleError::StartIsAbsorb
        );
        let big = flatten(&SpExpr::line(9));
        assert_eq!(
            exact_le_distribution(&big, &rational_weights(&[1; 9]), 0, 1, &o).unwrap_err(),
            OracleError::TooManyVertices(10, 8)
        );
        let cut = FlatGraph::new(3, &[(0, 2), (2, 1)], 0, 1).unwrap();
        assert_eq!(
            exact_le_distribution(&cut, &rational_weights(&[1, 0]), 0, 1, &o).unwrap_err(),
            OracleError::Unreachable
        );
    }
}
