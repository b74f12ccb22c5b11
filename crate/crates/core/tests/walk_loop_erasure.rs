use antnet::sp_graph::{self, flatten, parse_sp, FlatGraph};
use antnet::walk::{
    first_entry_predecessors, loop_erase_backward, predecessor_chain, run_walk, SimplePath, Trajectory,
    DEFAULT_STEP_CAP,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Chronological loop-erasure of the time-reversed walk, reversed back.
/// Stack based, so it shares no code path with the first-hit recursion.
fn reversed_chronological(traj: &Trajectory) -> SimplePath {
    let mut verts = vec![traj.end()];
    let mut edges: Vec<usize> = Vec::new();
    for i in (0..traj.len()).rev() {
        let v = traj.vertices[i];
        if let Some(pos) = verts.iter().position(|&x| x == v) {
            verts.truncate(pos + 1);
            edges.truncate(pos);
        } else {
            verts.push(v);
            edges.push(traj.edges[i]);
        }
    }
    verts.reverse();
    edges.reverse();
    SimplePath { vertices: verts, edges }
}

fn check(graph: &FlatGraph, traj: &Trajectory) {
    let le = loop_erase_backward(traj);
    assert!(le.is_simple_in(graph), "{traj:?}");
    assert_eq!(le.start(), traj.start());
    assert_eq!(le.end(), traj.end());
    let chain = predecessor_chain(&first_entry_predecessors(traj), traj.start(), traj.end());
    assert_eq!(chain.as_ref(), Some(&le), "{traj:?}");
    assert_eq!(reversed_chronological(traj), le, "{traj:?}");
}

/// Every walk of at most `max_len` steps from `start`, calling `f` on each.
fn for_each_walk(graph: &FlatGraph, start: usize, max_len: usize, f: &mut impl FnMut(&Trajectory)) -> usize {
    fn go(graph: &FlatGraph, t: &mut Trajectory, max_len: usize, f: &mut impl FnMut(&Trajectory)) -> usize {
        f(t);
        let mut count = 1;
        if t.len() == max_len {
            return count;
        }
        let v = t.end();
        for &(e, w) in graph.incident(v) {
            t.vertices.push(w);
            t.edges.push(e);
            count += go(graph, t, max_len, f);
            t.vertices.pop();
            t.edges.pop();
        }
        count
    }
    let mut t = Trajectory { vertices: vec![start], edges: vec![] };
    go(graph, &mut t, max_len, f)
}

#[test]
fn exhaustive_short_walks_on_four_vertex_graphs() {
    for text in [
        "series(e,par(e,series(e,e)))",
        "par(series(e,series(e,e)),e)",
        "series(par(e,e),series(e,e))",
        "par(series(e,par(e,e)),series(par(e,e),e))",
    ] {
        let g = flatten(&parse_sp(text).unwrap());
        assert_eq!(g.num_vertices(), 4, "{text}");
        for start in 0..g.num_vertices() {
            let n = for_each_walk(&g, start, 8, &mut |t| check(&g, t));
            assert!(n > 300, "{text}: only {n} walks");
        }
    }
}

#[test]
fn random_walks_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10_000 {
        let leaves = rng.gen_range(1..=12);
        let g = flatten(&sp_graph::random_sp(&mut rng, leaves));
        let w: Vec<u64> = (0..g.num_edges()).map(|_| rng.gen_range(1..=4)).collect();
        let traj = run_walk(&g, &w, g.source(), g.sink(), &mut rng, DEFAULT_STEP_CAP).unwrap();
        assert_eq!(traj.vertices.iter().position(|&v| v == g.sink()), Some(traj.len()));
        check(&g, &traj);
    }
}

#[test]
fn walks_are_reproducible() {
    let g = flatten(&parse_sp("par(series(e,par(e,e)),series(e,e))").unwrap());
    let w = vec![1, 3, 2, 5, 1];
    let run = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..50).map(|_| run_walk(&g, &w, g.sink(), g.source(), &mut rng, DEFAULT_STEP_CAP).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5), run(6));
}
