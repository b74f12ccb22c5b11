use std::collections::BTreeMap;

use antnet::linalg::Scalar;
use antnet::oracle::{
    exact_hit_before, exact_le_distribution, excursion_le_distribution, rational_weights, tv_distance, OracleOptions,
    TvMode,
};
use antnet::sp_graph::{self, flatten, parse_sp, FlatGraph, GraphBuilder};
use antnet::walk::{loop_erase_backward, run_walk, SimplePath, DEFAULT_STEP_CAP};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus(seed: u64, count: usize) -> Vec<(FlatGraph, Vec<u64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let leaves = rng.gen_range(1..=10);
        let expr = sp_graph::random_sp(&mut rng, leaves);
        if expr.vertex_count() > 8 {
            continue;
        }
        let g = flatten(&expr);
        let w = (0..g.num_edges()).map(|_| rng.gen_range(1..=9)).collect();
        out.push((g, w));
    }
    out
}

#[test]
fn monte_carlo_matches_exact_law() {
    let g = flatten(&parse_sp("par(e,series(e,e))").unwrap());
    let w = [1u64, 1, 1];
    let law =
        exact_le_distribution(&g, &rational_weights(&w), g.source(), g.sink(), &OracleOptions::default()).unwrap();
    assert_eq!(law.len(), 2);

    let walks = 1_000_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut counts: BTreeMap<SimplePath, u64> = BTreeMap::new();
    for _ in 0..walks {
        let traj = run_walk(&g, &w, g.source(), g.sink(), &mut rng, DEFAULT_STEP_CAP).unwrap();
        *counts.entry(loop_erase_backward(&traj)).or_default() += 1;
    }
    assert_eq!(counts.len(), 2);
    for (path, p) in &law.probs {
        let p = Scalar::to_f64(p);
        let freq = counts[path] as f64 / walks as f64;
        let se = (p * (1.0 - p) / walks as f64).sqrt();
        assert!((freq - p).abs() <= 4.0 * se, "{path:?}: {freq} vs {p}");
    }
}

#[test]
fn distributions_are_exact_probability_laws() {
    let opts = OracleOptions::default();
    for (g, w) in corpus(1, 20) {
        let w = rational_weights(&w);
        for (s, t) in [(g.source(), g.sink()), (g.sink(), g.source())] {
            let d = exact_le_distribution(&g, &w, s, t, &opts).unwrap();
            assert_eq!(d.total(), BigRational::from_integer(BigInt::from(1)));
            for (path, p) in &d.probs {
                assert!(path.is_simple_in(&g));
                assert_eq!((path.start(), path.end()), (s, t));
                assert!(!Scalar::is_negative(p) && !Scalar::is_zero(p));
            }
        }
    }
}

#[test]
fn reversal_and_excursion_identities() {
    let opts = OracleOptions::default();
    for (g, w) in corpus(2, 25) {
        let w = rational_weights(&w);
        let fwd = exact_le_distribution(&g, &w, g.source(), g.sink(), &opts).unwrap();
        let bwd = exact_le_distribution(&g, &w, g.sink(), g.source(), &opts).unwrap();
        assert_eq!(fwd, bwd.reversed());
        assert!(Scalar::is_zero(&tv_distance(&fwd, &bwd, TvMode::Reversed)));
        let exc = excursion_le_distribution(&g, &w, g.source(), g.sink(), &opts).unwrap();
        assert_eq!(fwd, exc);
    }
}

#[test]
fn float_mode_agrees_with_rational_mode() {
    let opts = OracleOptions::default();
    for (g, w) in corpus(3, 10) {
        let exact = exact_le_distribution(&g, &rational_weights(&w), g.source(), g.sink(), &opts).unwrap();
        let wf: Vec<f64> = w.iter().map(|&x| x as f64).collect();
        let float = exact_le_distribution(&g, &wf, g.source(), g.sink(), &opts).unwrap();
        assert!(tv_distance(&exact.to_f64(), &float, TvMode::Direct) < 1e-12);
    }
}

#[test]
fn hit_before_is_conductance_ratio_on_parallel_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    while checked < 30 {
        let (la, lb) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let ea = sp_graph::random_sp(&mut rng, la);
        let eb = sp_graph::random_sp(&mut rng, lb);
        if ea.vertex_count() + eb.vertex_count() - 1 > 8 {
            continue;
        }
        let mut b = GraphBuilder::new();
        let (s, ta, tb) = (b.add_vertex(), b.add_vertex(), b.add_vertex());
        let ra = b.embed(&ea, s, ta);
        let rb = b.embed(&eb, s, tb);
        let g = b.build(s, ta).unwrap();
        let w: Vec<u64> = (0..g.num_edges()).map(|_| rng.gen_range(1..=9)).collect();
        let ca = sp_graph::effective_conductance(&ea, &w[ra]);
        let cb = sp_graph::effective_conductance(&eb, &w[rb]);
        let p = exact_hit_before(&g, &rational_weights(&w), s, ta, tb).unwrap();
        assert_eq!(p, ca.clone() / (ca + cb));
        checked += 1;
    }
}
