//! Weighted random walks with backward loop-erasure.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::sp_graph::FlatGraph;

pub const DEFAULT_STEP_CAP: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WalkError {
    #[error("walk exceeded the step cap of {0}")]
    StepCap(u64),
    #[error("vertex {0} has zero total incident weight")]
    DeadEnd(usize),
    #[error("start and absorbing vertex coincide ({0})")]
    StartIsAbsorb(usize),
}

/// Raw walk: `vertices[i] -> vertices[i + 1]` crosses `edges[i]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

impl Trajectory {
    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    pub fn end(&self) -> usize {
        *self.vertices.last().expect("non-empty trajectory")
    }

    /// Number of steps taken.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Builds a trajectory from a vertex sequence on a graph without
    /// parallel edges between consecutive vertices; picks the first
    /// connecting edge. Returns `None` if two consecutive vertices are not
    /// adjacent.
    pub fn from_vertices(graph: &FlatGraph, vertices: &[usize]) -> Option<Self> {
        let edges = vertices
            .windows(2)
            .map(|w| graph.incident(w[0]).iter().find(|(_, y)| *y == w[1]).map(|(e, _)| *e))
            .collect::<Option<Vec<_>>>()?;
        Some(Trajectory { vertices: vertices.to_vec(), edges })
    }
}

/// Loop-free path given by its vertices and the edges between them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SimplePath {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

impl SimplePath {
    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    pub fn end(&self) -> usize {
        *self.vertices.last().expect("non-empty path")
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Same edges, traversed from the other end.
    pub fn reverse(&self) -> SimplePath {
        SimplePath {
            vertices: self.vertices.iter().rev().copied().collect(),
            edges: self.edges.iter().rev().copied().collect(),
        }
    }

    /// No repeated vertex, and each edge joins its two neighbours in
    /// `vertices`.
    pub fn is_simple_in(&self, graph: &FlatGraph) -> bool {
        if self.vertices.len() != self.edges.len() + 1 {
            return false;
        }
        let mut seen = vec![false; graph.num_vertices()];
        for &v in &self.vertices {
            if v >= seen.len() || std::mem::replace(&mut seen[v], true) {
                return false;
            }
        }
        self.edges.iter().enumerate().all(|(i, &e)| {
            let edge = graph.edge(e);
            let (a, b) = (self.vertices[i], self.vertices[i + 1]);
            (edge.u, edge.v) == (a, b) || (edge.u, edge.v) == (b, a)
        })
    }
}

/// Samples one step out of `u`: an incident edge with probability
/// proportional to its weight, using one integer draw against the exact
/// cumulative sum.
#[inline]
fn sample_edge<R: Rng + ?Sized>(
    graph: &FlatGraph,
    weights: &[u64],
    u: usize,
    rng: &mut R,
) -> Result<(usize, usize), WalkError> {
    let incident = graph.incident(u);
    let total: u64 = incident.iter().map(|(e, _)| weights[*e]).sum();
    if total == 0 {
        return Err(WalkError::DeadEnd(u));
    }
    let mut r = rng.gen_range(0..total);
    for &(e, y) in incident {
        let w = weights[e];
        if r < w {
            return Ok((e, y));
        }
        r -= w;
    }
    unreachable!("draw below total weight always lands on an edge")
}

/// Runs the walk from `start` until it first hits `absorb`.
pub fn run_walk<R: Rng + ?Sized>(
    graph: &FlatGraph,
    weights: &[u64],
    start: usize,
    absorb: usize,
    rng: &mut R,
    step_cap: u64,
) -> Result<Trajectory, WalkError> {
    let mut traj = Trajectory::default();
    walk_into(graph, weights, start, absorb, rng, step_cap, &mut traj)?;
    Ok(traj)
}

/// Same as [`run_walk`], writing into a reusable buffer.
pub fn walk_into<R: Rng + ?Sized>(
    graph: &FlatGraph,
    weights: &[u64],
    start: usize,
    absorb: usize,
    rng: &mut R,
    step_cap: u64,
    traj: &mut Trajectory,
) -> Result<(), WalkError> {
    if start == absorb {
        return Err(WalkError::StartIsAbsorb(start));
    }
    traj.vertices.clear();
    traj.edges.clear();
    traj.vertices.push(start);
    let mut u = start;
    let mut steps = 0u64;
    while u != absorb {
        if steps == step_cap {
            return Err(WalkError::StepCap(step_cap));
        }
        let (e, y) = sample_edge(graph, weights, u, rng)?;
        traj.edges.push(e);
        traj.vertices.push(y);
        u = y;
        steps += 1;
    }
    Ok(())
}

/// Erases loops going backwards from the first hit of the endpoint.
///
/// With `i_0` the first hitting time of the endpoint, the recursion is
/// `i_{j+1} = min{i : X_i = X_{i_j}} - 1` until `X_{i_j} = X_0`; the path
/// keeps edge `edges[i_{j+1}]` at each stage, i.e. the edge by which
/// `X_{i_j}` was first entered.
pub fn loop_erase_backward(traj: &Trajectory) -> SimplePath {
    let mut scratch = Vec::new();
    loop_erase_with(traj, &mut scratch)
}

/// [`loop_erase_backward`] with a caller-owned first-hit table (indexed by
/// vertex, grown as needed, left cleared on return).
pub fn loop_erase_with(traj: &Trajectory, first_hit: &mut Vec<usize>) -> SimplePath {
    const UNSEEN: usize = usize::MAX;
    let top = traj.vertices.iter().copied().max().unwrap_or(0);
    if first_hit.len() <= top {
        first_hit.resize(top + 1, UNSEEN);
    }
    for (i, &v) in traj.vertices.iter().enumerate() {
        if first_hit[v] == UNSEEN {
            first_hit[v] = i;
        }
    }

    let x0 = traj.vertices[0];
    let end = traj.end();
    let mut i = first_hit[end];
    let mut vertices = vec![traj.vertices[i]];
    let mut edges = Vec::new();
    while traj.vertices[i] != x0 {
        let next = first_hit[traj.vertices[i]] - 1;
        edges.push(traj.edges[next]);
        vertices.push(traj.vertices[next]);
        i = next;
    }

    for &v in &traj.vertices {
        first_hit[v] = UNSEEN;
    }
    vertices.reverse();
    edges.reverse();
    SimplePath { vertices, edges }
}

/// For every visited vertex other than the start, the `(predecessor,
/// edge)` by which it was first entered.
pub fn first_entry_predecessors(traj: &Trajectory) -> BTreeMap<usize, (usize, usize)> {
    let x0 = traj.vertices[0];
    let mut preds = BTreeMap::new();
    for (i, &e) in traj.edges.iter().enumerate() {
        let v = traj.vertices[i + 1];
        if v != x0 {
            preds.entry(v).or_insert((traj.vertices[i], e));
        }
    }
    preds
}

/// Follows first-entry predecessors from `end` back to `start`.
///
/// Returns `None` when the chain is broken or cycles.
pub fn predecessor_chain(preds: &BTreeMap<usize, (usize, usize)>, start: usize, end: usize) -> Option<SimplePath> {
    let mut vertices = vec![end];
    let mut edges = Vec::new();
    let mut v = end;
    while v != start {
        let &(p, e) = preds.get(&v)?;
        if edges.len() > preds.len() {
            return None;
        }
        edges.push(e);
        vertices.push(p);
        v = p;
    }
    vertices.reverse();
    edges.reverse();
    Some(SimplePath { vertices, edges })
}
