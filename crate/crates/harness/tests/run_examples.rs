use hedcs::engine::Mode;
use hedcs_harness::run::{engine_config, run_trace, RunConfig};
use hedcs_harness::trace::{generate_trace, Trace, TraceKind};

#[test]
fn churn_trace_is_legal() {
    let t = generate_trace(TraceKind::Churn, 200, 50, 5000, 10_000, 17).unwrap();
    assert_eq!(t.len(), 10_000);
    t.validate().unwrap();
    // Reparsing the text goes through the same validator.
    assert_eq!(Trace::load(&t.to_text()).unwrap().events, t.events);
}

#[test]
fn churn_ratio_example() {
    let t = generate_trace(TraceKind::Churn, 300, 40, 6000, 20_000, 21).unwrap();
    let mut cfg = RunConfig::new(engine_config(1, 16, 0.05, Mode::Amortized), 5);
    cfg.oracle_every = 200;
    cfg.check_every = 1000;
    let s = run_trace(&t, &cfg, std::io::sink()).unwrap();
    assert_eq!(s.checkpoints, 100);
    assert!(s.gated_checkpoints > 0);
    assert!(s.min_ratio.unwrap() >= 0.6, "{s:?}");
    assert_eq!(s.add_layer.insertion_cap_violations + s.add_layer.step_violations, 0);
}

#[test]
fn csv_is_byte_identical_per_mode() {
    let t = generate_trace(TraceKind::SlidingWindow, 120, 20, 900, 4000, 8).unwrap();
    for mode in [Mode::Amortized, Mode::Deamortized] {
        let mut cfg = RunConfig::new(engine_config(2, 4, 0.05, mode), 12);
        cfg.oracle_every = 100;
        cfg.check_every = 50;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        run_trace(&t, &cfg, &mut a).unwrap();
        run_trace(&t, &cfg, &mut b).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{mode:?}");
    }
}

#[test]
fn ratio_column_stays_in_unit_interval() {
    let t = generate_trace(TraceKind::Random, 80, 10, 300, 3000, 2).unwrap();
    let mut cfg = RunConfig::new(engine_config(1, 4, 0.05, Mode::Amortized), 1);
    cfg.oracle_every = 10;
    cfg.sparsify = Some(0.1);
    let mut out = Vec::new();
    run_trace(&t, &cfg, &mut out).unwrap();
    let mut rdr = csv::Reader::from_reader(&out[..]);
    let headers = rdr.headers().unwrap().clone();
    let ratio = headers.iter().position(|h| h == "ratio").unwrap();
    let fwd = headers.iter().position(|h| h == "forwarded").unwrap();
    let mut seen = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        if let Ok(r) = rec[ratio].parse::<f64>() {
            assert!((0.0..=1.0).contains(&r));
            seen += 1;
        }
        assert!(rec[fwd].parse::<usize>().unwrap() <= 3);
    }
    assert!(seen > 0);
}
