use hedcs::graph::{EdgeKey, GraphView, RankedDynamicGraph, StaticGraph};
use hedcs::matching::{approx_max_matching, maximum_matching_exact, MaximalMatchingMaintainer, UpdateKind};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Maximum matching size by exhaustive branching on the lowest unresolved
/// vertex: leave it unmatched or match it to each free neighbour.
fn brute_force_mu(n: usize, edges: &[(u32, u32)]) -> usize {
    let mut adj = vec![0u32; n];
    for &(a, b) in edges {
        adj[a as usize] |= 1 << b;
        adj[b as usize] |= 1 << a;
    }
    fn go(adj: &[u32], free: u32) -> usize {
        if free == 0 {
            return 0;
        }
        let v = free.trailing_zeros() as usize;
        let rest = free & !(1 << v);
        let mut best = go(adj, rest);
        let mut cand = adj[v] & rest;
        while cand != 0 {
            let w = cand.trailing_zeros();
            cand &= cand - 1;
            best = best.max(1 + go(adj, rest & !(1 << w)));
        }
        best
    }
    go(&adj, (1u32 << n) - 1)
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> (StaticGraph, Vec<(u32, u32)>) {
    let mut edges = Vec::new();
    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    let g = StaticGraph::from_edges(n, edges.iter().map(|&(a, b)| EdgeKey::new(a, b).unwrap()));
    (g, edges)
}

#[test]
fn brute_force_oracle_on_known_graphs() {
    // Petersen graph: perfect matching of size 5.
    let mut e = Vec::new();
    for i in 0..5 {
        e.push((i, (i + 1) % 5));
        e.push((i, i + 5));
        e.push((i + 5, (i + 2) % 5 + 5));
    }
    let e: Vec<_> = e.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
    assert_eq!(brute_force_mu(10, &e), 5);
    // Triangle and K4.
    assert_eq!(brute_force_mu(3, &[(0, 1), (1, 2), (0, 2)]), 1);
    assert_eq!(brute_force_mu(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]), 2);
}

#[test]
fn exact_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=10);
        let p = rng.gen_range(0.05..0.9);
        let (g, edges) = random_graph(&mut rng, n, p);
        let m = maximum_matching_exact(&g).unwrap();
        assert!(m.is_matching_of(&g));
        assert_eq!(m.len(), brute_force_mu(n, &edges), "edges {edges:?}");
    }
}

#[test]
fn approx_meets_guarantee_on_small_dense_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for eps in [0.1, 0.3] {
        for _ in 0..50 {
            let (g, _) = random_graph(&mut rng, 20, 0.3);
            let mu = maximum_matching_exact(&g).unwrap().len();
            let m = approx_max_matching(&g, eps);
            assert!(m.is_matching_of(&g));
            assert!(m.len() >= ((1.0 - eps) * mu as f64).ceil() as usize, "{} vs mu {mu}", m.len());
        }
    }
}

proptest! {
    #[test]
    fn maintainer_stays_maximal(ops in prop::collection::vec((0u32..8, 0u32..8), 1..120)) {
        let mut g = RankedDynamicGraph::new(8, 7, 28, 3);
        let mut m = MaximalMatchingMaintainer::new(8);
        for (a, b) in ops {
            let Ok(e) = EdgeKey::new(a, b) else { continue };
            let kind = if g.contains(e) {
                g.delete_edge(e).unwrap();
                UpdateKind::Delete
            } else {
                g.insert_edge(e).unwrap();
                UpdateKind::Insert
            };
            let size = m.apply_update(&g.full(), kind, e).unwrap();
            let view = g.full();
            prop_assert!(m.matching().is_matching_of(&view));
            prop_assert!(m.matching().is_maximal_in(&view));
            let edges: Vec<_> = view.edge_list().into_iter().map(|e| e.endpoints()).collect();
            let mu = brute_force_mu(8, &edges);
            prop_assert!(2 * size >= mu && size <= mu);
        }
    }

    #[test]
    fn exact_is_at_least_approx(seed in any::<u64>(), n in 2usize..40, p in 0.02f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, _) = random_graph(&mut rng, n, p);
        let exact = maximum_matching_exact(&g).unwrap();
        let approx = approx_max_matching(&g, 0.2);
        prop_assert!(exact.len() >= approx.len());
        prop_assert!(approx.is_maximal_in(&g));
    }
}
