use hedcs::engine::{EngineConfig, HedcsEngine, Mode};
use hedcs::graph::{EdgeKey, RankedDynamicGraph};
use hedcs::matching::UpdateKind;
use hedcs::verify::{check_state_invariants, is_valid_hedcs, witness_of, ViolationKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random insert/delete churn respecting the degree and edge caps.
fn churn(n: u32, delta: usize, m_cap: usize, len: usize, seed: u64) -> Vec<(UpdateKind, EdgeKey)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut present: Vec<EdgeKey> = Vec::new();
    let mut deg = vec![0usize; n as usize];
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let delete = !present.is_empty() && (present.len() >= m_cap || rng.gen_bool(0.45));
        if delete {
            let e = present.swap_remove(rng.gen_range(0..present.len()));
            deg[e.u() as usize] -= 1;
            deg[e.v() as usize] -= 1;
            out.push((UpdateKind::Delete, e));
        } else {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let Ok(e) = EdgeKey::new(a, b) else { continue };
            if present.contains(&e) || deg[a as usize] >= delta || deg[b as usize] >= delta {
                continue;
            }
            deg[a as usize] += 1;
            deg[b as usize] += 1;
            present.push(e);
            out.push((UpdateKind::Insert, e));
        }
    }
    out
}

fn run(k: usize, beta: usize, mode: Mode, seed: u64) {
    let (n, delta, m_cap) = (60u32, 12usize, 300usize);
    let g = RankedDynamicGraph::new(n as usize, delta, m_cap, seed ^ 0xA5A5);
    let mut cfg = EngineConfig::new(k, beta, 0.05);
    cfg.mode = mode;
    cfg.record_add_layers = true;
    let mut engine = HedcsEngine::preprocess(g, cfg).unwrap();
    for (t, (kind, e)) in churn(n, delta, m_cap, 2000, seed).into_iter().enumerate() {
        let report = engine.apply_update(kind, e).unwrap();
        if report.applied_level.is_some() {
            let verdict = is_valid_hedcs(&witness_of(&engine)).unwrap();
            assert!(verdict.is_valid(), "update {t}: {:?}", verdict.violations);
        }
        for rec in engine.take_add_layer_log() {
            assert!(rec.insertions as i64 <= rec.potential_cap(), "{rec:?}");
            assert!(rec.min_phi_step.is_none_or(|s| s >= 1), "{rec:?}");
        }
        if t % 25 == 0 {
            let verdict = check_state_invariants(&engine);
            assert!(verdict.is_valid(), "update {t}: {:?}", verdict.violations);
        }
        assert!(engine.current_matching().is_matching_of(&engine.graph().full()));
    }
}

#[test]
fn amortized_k1() {
    for seed in 0..3 {
        run(1, 4, Mode::Amortized, seed);
    }
}

#[test]
fn amortized_k2() {
    for seed in 0..3 {
        run(2, 8, Mode::Amortized, seed);
    }
}

#[test]
fn deamortized_k2() {
    for seed in 0..3 {
        run(2, 4, Mode::Deamortized, seed);
    }
}

#[test]
fn k_zero() {
    run(0, 4, Mode::Amortized, 9);
}

#[test]
fn injected_h_edge_breaks_u_characterization() {
    let mut g = RankedDynamicGraph::new(30, 29, 435, 1);
    for a in 0..30u32 {
        for b in a + 1..30 {
            g.insert_edge(EdgeKey::new(a, b).unwrap()).unwrap();
        }
    }
    let mut engine = HedcsEngine::preprocess(g, EngineConfig::new(1, 4, 0.05)).unwrap();
    assert!(check_state_invariants(&engine).is_valid());
    let e = engine.h_edges(1)[0];
    engine.debug_inject_uncovered(2, e);
    let verdict = check_state_invariants(&engine);
    assert!(verdict.violations.iter().any(|v| v.kind == ViolationKind::UCharacterization));
}

#[test]
fn same_seed_same_reports() {
    let go = || {
        let g = RankedDynamicGraph::new(40, 10, 150, 3);
        let mut engine = HedcsEngine::preprocess(g, EngineConfig::new(1, 4, 0.05)).unwrap();
        churn(40, 10, 150, 800, 5)
            .into_iter()
            .map(|(kind, e)| engine.apply_update(kind, e).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(go(), go());
}
