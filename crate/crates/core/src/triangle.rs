//! Triangle-SP graphs: three SP components glued on the marked vertices
//! `N1`, `N2` and `F`.
//!
//! Component 1 runs `N1 -> F`, component 2 runs `N2 -> F` and component 3
//! runs `N1 -> N2`. Edge ids are laid out contiguously per component
//! (`E1`, then `E2`, then `E3`), and inside each block the edge order is the
//! component's own leaf order, so `weights[triangle.edge_range(i)]` is a
//! valid weight vector for the component expression.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::sp_graph::{self, parse_sp, FlatGraph, GraphBuilder, ParseError, SpExpr};

pub const N1: usize = 0;
pub const N2: usize = 1;
pub const FOOD: usize = 2;

/// Component index (0-based) of `G1`, `G2`, `G3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Component {
    G1,
    G2,
    G3,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::G1, Component::G2, Component::G3];

    pub fn index(self) -> usize {
        self as usize
    }

    /// `(source, sink)` of the component inside the triangle.
    pub fn endpoints(self) -> (usize, usize) {
        match self {
            Component::G1 => (N1, FOOD),
            Component::G2 => (N2, FOOD),
            Component::G3 => (N1, N2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TriangleError {
    #[error("component lengths must be >= 1, got {0:?}")]
    BadLength([usize; 3]),
    #[error("component {component:?}: {source}")]
    Parse { component: Component, source: ParseError },
}

#[derive(Debug, Clone)]
pub struct TriangleSp {
    components: [SpExpr; 3],
    graph: FlatGraph,
    ranges: [Range<usize>; 3],
    lengths: [usize; 3],
    owner: Vec<Component>,
}

impl TriangleSp {
    pub fn assemble(g1: SpExpr, g2: SpExpr, g3: SpExpr) -> Self {
        let mut b = GraphBuilder::new();
        let (n1, n2, food) = (b.add_vertex(), b.add_vertex(), b.add_vertex());
        debug_assert_eq!((n1, n2, food), (N1, N2, FOOD));
        let r1 = b.embed(&g1, N1, FOOD);
        let r2 = b.embed(&g2, N2, FOOD);
        let r3 = b.embed(&g3, N1, N2);
        let graph = b.build(N1, FOOD).expect("a triangle of SP graphs is connected");
        let ranges = [r1, r2, r3];
        let mut owner = Vec::with_capacity(graph.num_edges());
        for c in Component::ALL {
            owner.extend(ranges[c.index()].clone().map(|_| c));
        }
        let components = [g1, g2, g3];
        let lengths = [0, 1, 2].map(|i| sp_graph::heights(&components[i]).0);
        TriangleSp { components, graph, ranges, lengths, owner }
    }

    /// The `(l1, l2, l3)`-triangle: every component is a line.
    pub fn line(l1: usize, l2: usize, l3: usize) -> Result<Self, TriangleError> {
        if l1 == 0 || l2 == 0 || l3 == 0 {
            return Err(TriangleError::BadLength([l1, l2, l3]));
        }
        Ok(Self::assemble(SpExpr::line(l1), SpExpr::line(l2), SpExpr::line(l3)))
    }

    pub fn parse(g1: &str, g2: &str, g3: &str) -> Result<Self, TriangleError> {
        let p = |c, text| parse_sp(text).map_err(|source| TriangleError::Parse { component: c, source });
        Ok(Self::assemble(p(Component::G1, g1)?, p(Component::G2, g2)?, p(Component::G3, g3)?))
    }

    pub fn graph(&self) -> &FlatGraph {
        &self.graph
    }

    pub fn component(&self, c: Component) -> &SpExpr {
        &self.components[c.index()]
    }

    pub fn edge_range(&self, c: Component) -> Range<usize> {
        self.ranges[c.index()].clone()
    }

    pub fn owner(&self, edge: usize) -> Component {
        self.owner[edge]
    }

    /// `h_min` of each component.
    pub fn lengths(&self) -> [usize; 3] {
        self.lengths
    }

    pub fn is_line_triangle(&self) -> bool {
        self.components.iter().all(SpExpr::is_line)
    }

    /// Global ids of the edges lying on a shortest source-sink path of the
    /// component (computed on the component alone).
    pub fn component_shortest_path_edges(&self, c: Component) -> BTreeSet<usize> {
        let local = sp_graph::flatten(self.component(c));
        let offset = self.ranges[c.index()].start;
        sp_graph::shortest_path_edges(&local).into_iter().map(|e| e + offset).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_triangle() {
        let t = TriangleSp::assemble(SpExpr::edge(), SpExpr::edge(), SpExpr::edge());
        let g = t.graph();
        assert_eq!((g.num_vertices(), g.num_edges()), (3, 3));
        assert_eq!(g.edge(0).u, N1);
        assert_eq!(g.edge(0).v, FOOD);
        assert_eq!((g.edge(1).u, g.edge(1).v), (N2, FOOD));
        assert_eq!((g.edge(2).u, g.edge(2).v), (N1, N2));
        assert_eq!(t.lengths(), [1, 1, 1]);
    }

    #[test]
    fn assembled_sizes() {
        let t = TriangleSp::assemble(SpExpr::edge(), SpExpr::edge(), SpExpr::line(2));
        assert_eq!((t.graph().num_vertices(), t.graph().num_edges()), (4, 4));
        let t = TriangleSp::line(2, 4, 3).unwrap();
        assert_eq!((t.graph().num_vertices(), t.graph().num_edges()), (9, 9));
        let t = TriangleSp::line(2, 2, 3).unwrap();
        assert_eq!(t.graph().num_edges(), 7);
        assert_eq!(t.graph().num_vertices(), 7);
        assert!(t.is_line_triangle());
    }

    #[test]
    fn line_rejects_zero() {
        assert_eq!(TriangleSp::line(1, 0, 2).unwrap_err(), TriangleError::BadLength([1, 0, 2]));
    }

    #[test]
    fn partition_covers_edges() {
        let t = TriangleSp::parse("par(e,series(e,e))", "e", "series(e,par(e,e))").unwrap();
        let total: usize = Component::ALL.iter().map(|&c| t.edge_range(c).len()).sum();
        assert_eq!(total, t.graph().num_edges());
        for c in Component::ALL {
            for e in t.edge_range(c) {
                assert_eq!(t.owner(e), c);
            }
        }
        assert_eq!(t.lengths(), [1, 1, 2]);
        assert_eq!(t.component_shortest_path_edges(Component::G1), BTreeSet::from([0]));
        assert_eq!(t.component_shortest_path_edges(Component::G3), (4..7).collect());
    }

    #[test]
    fn parse_error_names_component() {
        let err = TriangleSp::parse("e", "par(e", "e").unwrap_err();
        assert!(matches!(err, TriangleError::Parse { component: Component::G2, .. }));
    }
}
