use hedcs_bounds::{build_lp, lp_size, parse_lp, solve_lp, write_lp, LpChecker, LpStatus, RowKind};
use std::io::Write;

/// LP(1, β, β⁻) by hand reduction. With k = 1 the balance rows force
/// x(p, q) = 0 unless p, q ≥ 1, and eliminate n_P, n_Q, leaving
///   min Σ x/q  s.t.  Σ x/p ≤ 1,  Σ x ≥ β⁻/2,  x ≥ 0.
/// Two structural rows mean some optimum uses at most two cells, so try
/// every pair and every vertex of the 2-D feasible region.
fn k1_oracle(beta: u32, beta_minus: u32) -> f64 {
    let need = beta_minus as f64 / 2.0;
    let cells: Vec<(f64, f64)> = (1..beta).flat_map(|p| (1..=beta - p).map(move |q| (p as f64, q as f64))).collect();
    let mut best = f64::INFINITY;
    for &(pa, qa) in &cells {
        for &(pb, qb) in &cells {
            // Lines: a·x + b·y = c.
            let lines = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (1.0 / pa, 1.0 / pb, 1.0), (1.0, 1.0, need)];
            for i in 0..4 {
                for j in i + 1..4 {
                    let (a1, b1, c1) = lines[i];
                    let (a2, b2, c2) = lines[j];
                    let det = a1 * b2 - a2 * b1;
                    if det.abs() < 1e-12 {
                        continue;
                    }
                    let x = (c1 * b2 - c2 * b1) / det;
                    let y = (a1 * c2 - a2 * c1) / det;
                    let ok = x >= -1e-12 && y >= -1e-12 && x / pa + y / pb <= 1.0 + 1e-12 && x + y >= need - 1e-12;
                    if ok {
                        best = best.min(x / qa + y / qb);
                    }
                }
            }
        }
    }
    best
}

#[test]
fn lp_1_2_1_is_half() {
    assert!((k1_oracle(2, 1) - 0.5).abs() < 1e-12);
    let sol = solve_lp(&build_lp(1, 2, 1).unwrap());
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.r - 0.5).abs() < 1e-6);
}

#[test]
fn k1_matches_hand_reduction() {
    for beta in 2..=20 {
        for beta_minus in [1, beta / 2, beta - 1] {
            if beta_minus == 0 {
                continue;
            }
            let sol = solve_lp(&build_lp(1, beta, beta_minus).unwrap());
            assert_eq!(sol.status, LpStatus::Optimal);
            let want = k1_oracle(beta, beta_minus);
            assert!((sol.r - want).abs() < 1e-7, "beta={beta} beta_minus={beta_minus}: {} vs {want}", sol.r);
        }
    }
}

#[test]
fn nondecreasing_in_beta_along_diagonal() {
    let vals: Vec<f64> = (2..=20).map(|b| solve_lp(&build_lp(1, b, b - 1).unwrap()).r).collect();
    for w in vals.windows(2) {
        assert!(w[1] >= w[0] - 1e-7, "{vals:?}");
    }
}

#[test]
fn nondecreasing_in_beta_minus() {
    let vals: Vec<f64> = (1..6).map(|bm| solve_lp(&build_lp(2, 6, bm).unwrap()).r).collect();
    for w in vals.windows(2) {
        assert!(w[1] >= w[0] - 1e-7, "{vals:?}");
    }
}

#[test]
fn more_levels_never_raise_the_bound() {
    for beta in [4, 6] {
        let one = solve_lp(&build_lp(1, beta, beta - 1).unwrap());
        let two = solve_lp(&build_lp(2, beta, beta - 1).unwrap());
        assert_eq!(two.status, LpStatus::Optimal);
        assert!(two.max_residual < 1e-7);
        assert!(two.r <= one.r + 1e-7, "beta={beta}: {} > {}", two.r, one.r);
    }
}

#[test]
fn export_round_trips() {
    for (k, beta, bm) in [(1, 2, 1), (2, 3, 2), (3, 2, 1)] {
        let inst = build_lp(k, beta, bm).unwrap();
        let mut out = Vec::new();
        let stats = write_lp(k, beta, bm, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let parsed = parse_lp(&text).unwrap();
        assert_eq!(parsed.header, Some((k, beta, bm)));
        assert_eq!(parsed.objective, vec![(1.0, "r".to_string())]);
        assert_eq!(parsed.rows.len(), inst.rows.len());
        assert_eq!(stats.rows as usize, inst.rows.len());
        for (row, prow) in inst.rows.iter().zip(&parsed.rows) {
            assert_eq!(prow.name, inst.row_name(row.kind));
            assert_eq!(prow.sense, row.sense);
            assert_eq!(prow.rhs, row.rhs);
            let want: Vec<(f64, String)> = row.coeffs.iter().map(|&(c, v)| (v, inst.var_name(c))).collect();
            assert_eq!(prow.terms, want, "row {}", prow.name);
        }
        assert!(inst.rows.iter().any(|r| matches!(r.kind, RowKind::QBalance { .. })));
    }
}

#[test]
fn lp_1_2_1_file_text() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lp.lp");
    hedcs_bounds::export_lp_file(1, 2, 1, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("\\ factor-revealing LP k=1 beta=2 beta_minus=1\n"));
    assert!(text.contains(" bp_1_1: nP_1 - x_1_0_1 - x_1_1_1 = 0\n"), "{text}");
    assert!(text.contains(" edges: x_0_0_1 + x_0_1_1 + x_0_2_1 + x_1_0_1 + x_1_1_1 + x_2_0_1 >= 0.5\n"));
}

#[test]
fn streaming_checker_counts_terms() {
    let (k, beta, bm) = (2, 12, 11);
    let mut checker = LpChecker::new(false);
    let written = write_lp(k, beta, bm, &mut checker).unwrap();
    let seen = checker.stats();
    checker.finish().unwrap();
    assert_eq!(seen.rows, written.rows);
    assert_eq!(seen.terms, written.terms);
    assert_eq!(seen.bytes, written.bytes);
    let size = lp_size(k, beta);
    // Each x appears in one P row, one Q row and the edge row.
    let np = size.profiles as u64;
    let own_terms: u64 =
        2 * (0..np).map(|i| [(i / 13) % 13, i % 13].iter().filter(|&&v| v > 0).count() as u64).sum::<u64>();
    assert_eq!(written.terms, 3 * size.x_vars as u64 + own_terms + 2 * np + 1);
}

#[test]
fn checker_rejects_garbage() {
    for bad in [
        "Minimize\n obj: r\nSubject To\n c1: x + = 0\nEnd\n",
        "Minimize\n obj: r\nSubject To\n c1 x = 0\nEnd\n",
        "Minimize\n obj: r\nSubject To\n c1: x = 0\n",
        "Subject To\n c1: x = 0\nMinimize\n obj: r\nEnd\n",
        "\\ k=1 beta=2 beta_minus=1\nMinimize\n obj: r\nSubject To\n c1: 2 3 x = 0\nEnd\n",
    ] {
        assert!(parse_lp(bad).is_err(), "{bad}");
    }
    let mut c = LpChecker::new(false);
    c.write_all(b"\\ k=1 beta=2 beta_minus=1\nMinimize\n obj: r\nSubject To\n c1: x = 0\n c1: y = 0\nEnd\n").unwrap();
    assert!(c.finish().is_err());
}
