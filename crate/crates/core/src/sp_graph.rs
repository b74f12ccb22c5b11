//! Series-parallel graph algebra.
//!
//! An [`SpExpr`] is a binary composition tree of edges. Leaves are labelled
//! by their left-to-right position, and that label doubles as the edge id in
//! every realization of the expression, so a weight vector indexed by edge id
//! can be handed to the tree-based routines ([`effective_conductance`],
//! [`heights`]) and to the graph-based ones ([`crate::walk`]) alike.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::ops::Range;

use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Scalar;

/// Recursive series/parallel composition of edges.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SpExpr {
    Leaf(usize),
    Series(Box<SpExpr>, Box<SpExpr>),
    Parallel(Box<SpExpr>, Box<SpExpr>),
}

impl SpExpr {
    /// The single-edge graph.
    pub fn edge() -> Self {
        SpExpr::Leaf(0)
    }

    /// Merges `right`'s source onto `left`'s sink. Leaves of `right` are
    /// relabelled to follow those of `left`.
    pub fn series(left: SpExpr, right: SpExpr) -> Self {
        let shift = left.leaf_count();
        SpExpr::Series(Box::new(left), Box::new(right.shifted(shift)))
    }

    /// Merges sources together and sinks together.
    pub fn parallel(left: SpExpr, right: SpExpr) -> Self {
        let shift = left.leaf_count();
        SpExpr::Parallel(Box::new(left), Box::new(right.shifted(shift)))
    }

    /// `len` edges in series. Panics if `len == 0`.
    pub fn line(len: usize) -> Self {
        assert!(len >= 1, "a line needs at least one edge");
        (1..len).fold(SpExpr::edge(), |acc, _| SpExpr::series(acc, SpExpr::edge()))
    }

    fn shifted(self, by: usize) -> Self {
        match self {
            SpExpr::Leaf(l) => SpExpr::Leaf(l + by),
            SpExpr::Series(a, b) => SpExpr::Series(Box::new(a.shifted(by)), Box::new(b.shifted(by))),
            SpExpr::Parallel(a, b) => SpExpr::Parallel(Box::new(a.shifted(by)), Box::new(b.shifted(by))),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            SpExpr::Leaf(_) => 1,
            SpExpr::Series(a, b) | SpExpr::Parallel(a, b) => a.leaf_count() + b.leaf_count(),
        }
    }

    /// Number of vertices of the realized graph.
    pub fn vertex_count(&self) -> usize {
        match self {
            SpExpr::Leaf(_) => 2,
            SpExpr::Series(a, b) => a.vertex_count() + b.vertex_count() - 1,
            SpExpr::Parallel(a, b) => a.vertex_count() + b.vertex_count() - 2,
        }
    }

    /// Leaf labels in left-to-right order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.leaf_count());
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            SpExpr::Leaf(l) => out.push(*l),
            SpExpr::Series(a, b) | SpExpr::Parallel(a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }

    /// True when leaves are labelled `0, 1, 2, ...` from left to right,
    /// which is what the constructors and the parser produce.
    pub fn is_canonical(&self) -> bool {
        self.leaves().into_iter().enumerate().all(|(i, l)| i == l)
    }

    /// True when every composition node is a series merge.
    pub fn is_line(&self) -> bool {
        match self {
            SpExpr::Leaf(_) => true,
            SpExpr::Series(a, b) => a.is_line() && b.is_line(),
            SpExpr::Parallel(..) => false,
        }
    }

    /// Bottom-up evaluation of the composition tree.
    pub fn fold<T>(&self, leaf: &impl Fn(usize) -> T, series: &impl Fn(T, T) -> T, parallel: &impl Fn(T, T) -> T) -> T {
        match self {
            SpExpr::Leaf(l) => leaf(*l),
            SpExpr::Series(a, b) => {
                let x = a.fold(leaf, series, parallel);
                let y = b.fold(leaf, series, parallel);
                series(x, y)
            }
            SpExpr::Parallel(a, b) => {
                let x = a.fold(leaf, series, parallel);
                let y = b.fold(leaf, series, parallel);
                parallel(x, y)
            }
        }
    }
}

impl fmt::Display for SpExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpExpr::Leaf(_) => write!(f, "e"),
            SpExpr::Series(a, b) => write!(f, "series({a},{b})"),
            SpExpr::Parallel(a, b) => write!(f, "par({a},{b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("empty SP expression")]
    Empty,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
}

/// Parses the textual form `e | series(X,Y) | par(X,Y)`. Whitespace between
/// tokens is ignored.
pub fn parse_sp(text: &str) -> Result<SpExpr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, next_leaf: 0 };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(ParseError::Empty);
    }
    let expr = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("trailing input after expression"));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    next_leaf: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn error(&self, message: &str) -> ParseError {
        ParseError::Syntax { offset: self.pos, message: message.to_string() }
    }

    fn expect(&mut self, byte: u8) -> Result<(), ParseError> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", byte as char)))
        }
    }

    fn ident(&mut self) -> &[u8] {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn expr(&mut self) -> Result<SpExpr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let series = match self.ident() {
            b"e" => {
                let leaf = SpExpr::Leaf(self.next_leaf);
                self.next_leaf += 1;
                return Ok(leaf);
            }
            b"series" => true,
            b"par" => false,
            _ => {
                self.pos = start;
                return Err(self.error("expected 'e', 'series(' or 'par('"));
            }
        };
        self.expect(b'(')?;
        let left = self.expr()?;
        self.expect(b',')?;
        let right = self.expr()?;
        self.expect(b')')?;
        let (l, r) = (Box::new(left), Box::new(right));
        Ok(if series { SpExpr::Series(l, r) } else { SpExpr::Parallel(l, r) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: usize,
    pub u: usize,
    pub v: usize,
}

impl Edge {
    /// The endpoint opposite to `x`.
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("source and sink coincide (vertex {0})")]
    SourceIsSink(usize),
    #[error("vertex {vertex} out of range (graph has {count} vertices)")]
    VertexOutOfRange { vertex: usize, count: usize },
    #[error("edge {0} is a self-loop")]
    SelfLoop(usize),
    #[error("edge ids must be 0..{count} without gaps; found id {id}")]
    BadEdgeId { id: usize, count: usize },
    #[error("graph is not connected")]
    Disconnected,
}

/// A concrete undirected multigraph with a marked source and sink.
///
/// Vertex ids are `0..num_vertices` and edge ids `0..edges.len()`. Weights
/// live outside the graph as slices indexed by edge id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatGraph {
    num_vertices: usize,
    edges: Vec<Edge>,
    source: usize,
    sink: usize,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl FlatGraph {
    pub fn new(
        num_vertices: usize,
        endpoints: &[(usize, usize)],
        source: usize,
        sink: usize,
    ) -> Result<Self, GraphError> {
        let edges = endpoints.iter().enumerate().map(|(id, &(u, v))| Edge { id, u, v }).collect();
        Self::from_edges(num_vertices, edges, source, sink)
    }

    fn from_edges(num_vertices: usize, mut edges: Vec<Edge>, source: usize, sink: usize) -> Result<Self, GraphError> {
        for &x in &[source, sink] {
            if x >= num_vertices {
                return Err(GraphError::VertexOutOfRange { vertex: x, count: num_vertices });
            }
        }
        if source == sink {
            return Err(GraphError::SourceIsSink(source));
        }
        edges.sort_by_key(|e| e.id);
        let count = edges.len();
        let mut adjacency = vec![Vec::new(); num_vertices];
        for (i, e) in edges.iter().enumerate() {
            if e.id != i {
                return Err(GraphError::BadEdgeId { id: e.id, count });
            }
            for &x in &[e.u, e.v] {
                if x >= num_vertices {
                    return Err(GraphError::VertexOutOfRange { vertex: x, count: num_vertices });
                }
            }
            if e.u == e.v {
                return Err(GraphError::SelfLoop(e.id));
            }
            adjacency[e.u].push((e.id, e.v));
            adjacency[e.v].push((e.id, e.u));
        }
        let graph = FlatGraph { num_vertices, edges, source, sink, adjacency };
        if graph.bfs_distances(source).iter().any(Option::is_none) {
            return Err(GraphError::Disconnected);
        }
        Ok(graph)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> Edge {
        self.edges[id]
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    /// `(edge id, neighbour)` pairs incident to `v`; parallel edges appear
    /// once each.
    pub fn incident(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    /// Unweighted graph distances from `from`; `None` for unreachable vertices.
    pub fn bfs_distances(&self, from: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_vertices];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap_or(0);
            for &(_, y) in &self.adjacency[x] {
                if dist[y].is_none() {
                    dist[y] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&FlatGraphJson::from(self)).expect("graph serialization")
    }

    pub fn from_json(text: &str) -> Result<Self, FlatGraphJsonError> {
        let raw: FlatGraphJson = serde_json::from_str(text)?;
        Ok(raw.try_into()?)
    }
}

/// Wire form: `{vertices:[int], edges:[{id,u,v}], source, sink}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatGraphJson {
    pub vertices: Vec<usize>,
    pub edges: Vec<Edge>,
    pub source: usize,
    pub sink: usize,
}

impl From<&FlatGraph> for FlatGraphJson {
    fn from(g: &FlatGraph) -> Self {
        FlatGraphJson {
            vertices: (0..g.num_vertices).collect(),
            edges: g.edges.clone(),
            source: g.source,
            sink: g.sink,
        }
    }
}

impl TryFrom<FlatGraphJson> for FlatGraph {
    type Error = GraphError;

    fn try_from(raw: FlatGraphJson) -> Result<Self, GraphError> {
        let n = raw.vertices.len();
        let mut seen = vec![false; n];
        for &v in &raw.vertices {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(GraphError::VertexOutOfRange { vertex: v, count: n });
            }
        }
        FlatGraph::from_edges(n, raw.edges, raw.source, raw.sink)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FlatGraphJsonError {
    #[error("malformed graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Incremental construction of graphs obtained by gluing SP expressions
/// between existing vertices.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    num_vertices: usize,
    endpoints: Vec<(usize, usize)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self) -> usize {
        self.num_vertices += 1;
        self.num_vertices - 1
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> usize {
        self.endpoints.push((u, v));
        self.endpoints.len() - 1
    }

    /// Realizes `expr` between `source` and `sink`. Leaf `k` of the
    /// expression becomes edge `start + k` of the returned range.
    pub fn embed(&mut self, expr: &SpExpr, source: usize, sink: usize) -> Range<usize> {
        let start = self.endpoints.len();
        self.embed_rec(expr, source, sink);
        start..self.endpoints.len()
    }

    fn embed_rec(&mut self, expr: &SpExpr, source: usize, sink: usize) {
        match expr {
            SpExpr::Leaf(_) => {
                self.add_edge(source, sink);
            }
            SpExpr::Series(a, b) => {
                let mid = self.add_vertex();
                self.embed_rec(a, source, mid);
                self.embed_rec(b, mid, sink);
            }
            SpExpr::Parallel(a, b) => {
                self.embed_rec(a, source, sink);
                self.embed_rec(b, source, sink);
            }
        }
    }

    pub fn build(self, source: usize, sink: usize) -> Result<FlatGraph, GraphError> {
        FlatGraph::new(self.num_vertices, &self.endpoints, source, sink)
    }
}

/// Realizes an expression with source `0`, sink `1`, and internal vertices
/// numbered in depth-first order. Edge id equals leaf label.
pub fn flatten(expr: &SpExpr) -> FlatGraph {
    let mut b = GraphBuilder::new();
    let s = b.add_vertex();
    let t = b.add_vertex();
    b.embed(expr, s, t);
    b.build(s, t).expect("an SP realization is always connected")
}

/// `(h_min, h_max)`: shortest and longest self-avoiding source-sink path
/// lengths.
pub fn heights(expr: &SpExpr) -> (usize, usize) {
    expr.fold(&|_| (1, 1), &|(a, b), (c, d)| (a + c, b + d), &|(a, b), (c, d)| (a.min(c), b.max(d)))
}

/// Composition rule shared by the exact and float conductance routines.
/// A zero conductance in series gives zero.
fn conductance_with<T: Scalar>(expr: &SpExpr, leaf: impl Fn(usize) -> T) -> T {
    expr.fold(
        &leaf,
        &|a: T, b: T| {
            if a.is_zero() || b.is_zero() {
                T::zero()
            } else {
                a.clone() * b.clone() / (a + b)
            }
        },
        &|a, b| a + b,
    )
}

/// Exact effective conductance for integer weights indexed by leaf label.
pub fn effective_conductance(expr: &SpExpr, weights: &[u64]) -> BigRational {
    conductance_with(expr, |l| <BigRational as Scalar>::from_u64(weights[l]))
}

/// Floating-point effective conductance. Weights must be non-negative.
pub fn effective_conductance_f64(expr: &SpExpr, weights: &[f64]) -> f64 {
    debug_assert!(weights.iter().all(|w| *w >= 0.0));
    conductance_with(expr, |l| weights[l])
}

/// Edges lying on at least one shortest source-sink path.
pub fn shortest_path_edges(graph: &FlatGraph) -> BTreeSet<usize> {
    let from_s = graph.bfs_distances(graph.source());
    let from_t = graph.bfs_distances(graph.sink());
    let Some(h) = from_s[graph.sink()] else {
        return BTreeSet::new();
    };
    let on_geodesic = |a: usize, b: usize| match (from_s[a], from_t[b]) {
        (Some(x), Some(y)) => x + 1 + y == h,
        _ => false,
    };
    graph.edges().iter().filter(|e| on_geodesic(e.u, e.v) || on_geodesic(e.v, e.u)).map(|e| e.id).collect()
}

/// Uniformly random binary composition shape with `leaves` edges; each
/// internal node is series or parallel with probability 1/2.
pub fn random_sp<R: Rng + ?Sized>(rng: &mut R, leaves: usize) -> SpExpr {
    assert!(leaves >= 1);
    if leaves == 1 {
        return SpExpr::edge();
    }
    let left = rng.gen_range(1..leaves);
    let a = random_sp(rng, left);
    let b = random_sp(rng, leaves - left);
    if rng.gen_bool(0.5) {
        SpExpr::series(a, b)
    } else {
        SpExpr::parallel(a, b)
    }
}
