use std::collections::HashMap;

use serde::Serialize;

use crate::profile::{binomial, prefix_sum, profile_name, Profiles};
use crate::simplex::{self, Constraint, Problem, Sense, SimplexOptions, SimplexStatus};
use crate::{check_params, BoundsError};

pub const DEFAULT_VAR_CAP: u128 = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LpSize {
    pub profiles: u128,
    pub x_vars: u128,
    pub vars: u128,
}

/// Variable counts without building anything.
pub fn lp_size(k: usize, beta: u32) -> LpSize {
    let radix = beta as u128 + 1;
    let profiles = radix.saturating_pow(k as u32);
    let mut x_vars: u128 = 0;
    for j in 1..=k {
        let head = binomial(beta as u64 + 2 * j as u64, 2 * j as u64);
        let tail = radix.saturating_pow(2 * (k - j) as u32);
        x_vars = x_vars.saturating_add(head.saturating_mul(tail));
    }
    LpSize { profiles, x_vars, vars: x_vars.saturating_add(profiles.saturating_mul(2)).saturating_add(1) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Triplet {
    pub p: u64,
    pub q: u64,
    /// 1-based level.
    pub j: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    PBalance { p: u64, j: u8 },
    QBalance { q: u64, j: u8 },
    SumQ,
    SumP,
    MinEdges,
}

#[derive(Clone, Debug)]
pub struct LpRow {
    pub kind: RowKind,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Column layout: x variables, then n_P, then n_Q, then r.
#[derive(Clone, Debug)]
pub struct LpInstance {
    pub k: usize,
    pub beta: u32,
    pub beta_minus: u32,
    pub profiles: Profiles,
    pub triplets: Vec<Triplet>,
    pub rows: Vec<LpRow>,
}

impl LpInstance {
    pub fn profile_count(&self) -> usize {
        self.profiles.count().expect("built instances are small") as usize
    }

    pub fn num_vars(&self) -> usize {
        self.triplets.len() + 2 * self.profile_count() + 1
    }

    pub fn np_col(&self, p: u64) -> usize {
        self.triplets.len() + p as usize
    }

    pub fn nq_col(&self, q: u64) -> usize {
        self.triplets.len() + self.profile_count() + q as usize
    }

    pub fn r_col(&self) -> usize {
        self.num_vars() - 1
    }

    pub fn var_name(&self, col: usize) -> String {
        let t = self.triplets.len();
        let np = self.profile_count();
        let mut buf = vec![0; self.k];
        if col < t {
            let tr = self.triplets[col];
            self.profiles.entries(tr.p, &mut buf);
            let p = profile_name(&buf);
            self.profiles.entries(tr.q, &mut buf);
            format!("x_{p}_{}_{}", profile_name(&buf), tr.j)
        } else if col < t + np {
            self.profiles.entries((col - t) as u64, &mut buf);
            format!("nP_{}", profile_name(&buf))
        } else if col < t + 2 * np {
            self.profiles.entries((col - t - np) as u64, &mut buf);
            format!("nQ_{}", profile_name(&buf))
        } else {
            "r".into()
        }
    }

    pub fn row_name(&self, kind: RowKind) -> String {
        let mut buf = vec![0; self.k];
        match kind {
            RowKind::PBalance { p, j } => {
                self.profiles.entries(p, &mut buf);
                format!("bp_{}_{j}", profile_name(&buf))
            }
            RowKind::QBalance { q, j } => {
                self.profiles.entries(q, &mut buf);
                format!("bq_{}_{j}", profile_name(&buf))
            }
            RowKind::SumQ => "sumq".into(),
            RowKind::SumP => "sump".into(),
            RowKind::MinEdges => "edges".into(),
        }
    }

    pub fn problem(&self) -> Problem {
        Problem {
            num_vars: self.num_vars(),
            objective: vec![(self.r_col(), 1.0)],
            rows: self
                .rows
                .iter()
                .map(|r| Constraint { coeffs: r.coeffs.clone(), sense: r.sense, rhs: r.rhs })
                .collect(),
        }
    }
}

pub fn build_lp(k: usize, beta: u32, beta_minus: u32) -> Result<LpInstance, BoundsError> {
    build_lp_with_cap(k, beta, beta_minus, DEFAULT_VAR_CAP)
}

pub fn build_lp_with_cap(k: usize, beta: u32, beta_minus: u32, cap: u128) -> Result<LpInstance, BoundsError> {
    check_params(k, beta, beta_minus)?;
    let size = lp_size(k, beta);
    if size.vars > cap {
        return Err(BoundsError::SizeExceeded { vars: size.vars, cap });
    }
    let profiles = Profiles::new(k, beta);
    let np = profiles.count().expect("bounded by the cap") as usize;

    let mut triplets = Vec::with_capacity(size.x_vars as usize);
    let mut buf = vec![0u32; k];
    for j in 1..=k {
        for p in 0..np as u64 {
            profiles.entries(p, &mut buf);
            let s = prefix_sum(&buf, j);
            if s > beta {
                continue;
            }
            profiles.for_each_bounded(j, beta - s, &mut |q| {
                triplets.push(Triplet { p, q: profiles.index(q), j: j as u8 });
            });
        }
    }
    debug_assert_eq!(triplets.len() as u128, size.x_vars);

    let mut p_terms: Vec<Vec<usize>> = vec![Vec::new(); np * k];
    let mut q_terms: Vec<Vec<usize>> = vec![Vec::new(); np * k];
    for (col, t) in triplets.iter().enumerate() {
        let jj = t.j as usize - 1;
        p_terms[t.p as usize * k + jj].push(col);
        q_terms[t.q as usize * k + jj].push(col);
    }

    let x_len = triplets.len();
    let mut rows = Vec::new();
    for (side, terms) in [(0, &p_terms), (1, &q_terms)] {
        for idx in 0..np {
            profiles.entries(idx as u64, &mut buf);
            for j in 1..=k {
                let coef = buf[j - 1] as f64;
                let xs = &terms[idx * k + j - 1];
                if coef == 0.0 && xs.is_empty() {
                    continue;
                }
                let own = if side == 0 { x_len + idx } else { x_len + np + idx };
                let mut coeffs = Vec::with_capacity(xs.len() + 1);
                if coef != 0.0 {
                    coeffs.push((own, coef));
                }
                coeffs.extend(xs.iter().map(|&c| (c, -1.0)));
                let kind = if side == 0 {
                    RowKind::PBalance { p: idx as u64, j: j as u8 }
                } else {
                    RowKind::QBalance { q: idx as u64, j: j as u8 }
                };
                rows.push(LpRow { kind, coeffs, sense: Sense::Eq, rhs: 0.0 });
            }
        }
    }
    let r_col = x_len + 2 * np;
    let mut sumq: Vec<(usize, f64)> = (0..np).map(|q| (x_len + np + q, 1.0)).collect();
    sumq.push((r_col, -1.0));
    rows.push(LpRow { kind: RowKind::SumQ, coeffs: sumq, sense: Sense::Eq, rhs: 0.0 });
    rows.push(LpRow {
        kind: RowKind::SumP,
        coeffs: (0..np).map(|p| (x_len + p, 1.0)).collect(),
        sense: Sense::Eq,
        rhs: 1.0,
    });
    rows.push(LpRow {
        kind: RowKind::MinEdges,
        coeffs: (0..x_len).map(|c| (c, 1.0)).collect(),
        sense: Sense::Ge,
        rhs: beta_minus as f64 / 2.0,
    });

    Ok(LpInstance { k, beta, beta_minus, profiles, triplets, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    SizeExceeded,
    NumericalFailure,
}

#[derive(Clone, Debug, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub r: f64,
    #[serde(skip)]
    pub x: Vec<f64>,
    #[serde(skip)]
    pub n_p: Vec<f64>,
    #[serde(skip)]
    pub n_q: Vec<f64>,
    /// Largest residual found by `verify_solution`.
    pub max_residual: f64,
    pub pivots: usize,
    pub diagnostics: Option<String>,
}

pub fn solve_lp(inst: &LpInstance) -> LpSolution {
    solve_lp_with(inst, &SimplexOptions::default())
}

pub fn solve_lp_with(inst: &LpInstance, opts: &SimplexOptions) -> LpSolution {
    let res = simplex::solve(&inst.problem(), opts);
    let t = inst.triplets.len();
    let np = inst.profile_count();
    let mut sol = LpSolution {
        status: LpStatus::Optimal,
        r: res.x[inst.r_col()],
        x: res.x[..t].to_vec(),
        n_p: res.x[t..t + np].to_vec(),
        n_q: res.x[t + np..t + 2 * np].to_vec(),
        max_residual: 0.0,
        pivots: res.pivots,
        diagnostics: None,
    };
    match res.status {
        SimplexStatus::Optimal => {}
        SimplexStatus::Infeasible => {
            sol.status = LpStatus::Infeasible;
            return sol;
        }
        SimplexStatus::TooLarge => {
            sol.status = LpStatus::SizeExceeded;
            sol.diagnostics = Some("tableau above the dense solver's cell limit".into());
            return sol;
        }
        s => {
            sol.status = LpStatus::NumericalFailure;
            sol.diagnostics = Some(format!("simplex stopped with {s:?} after {} pivots", res.pivots));
            return sol;
        }
    }
    sol.max_residual = verify_solution(inst, &sol);
    if sol.max_residual > 1e-7 {
        sol.status = LpStatus::NumericalFailure;
        sol.diagnostics = Some(format!("residual {:.3e} above 1e-7", sol.max_residual));
    }
    sol
}

/// Re-checks a solution against the LP's definition by enumerating all of
/// P × Q × [k] directly, without the stored rows. Returns the largest
/// violation, scaled by the row's magnitude.
pub fn verify_solution(inst: &LpInstance, sol: &LpSolution) -> f64 {
    let (k, beta) = (inst.k, inst.beta);
    let pr = Profiles::new(k, beta);
    let np = pr.count().expect("small instance");
    let mut x: HashMap<(u64, u64, u8), f64> = HashMap::with_capacity(inst.triplets.len());
    let mut worst: f64 = 0.0;
    let (mut pb, mut qb) = (vec![0u32; k], vec![0u32; k]);
    for (t, &v) in inst.triplets.iter().zip(&sol.x) {
        pr.entries(t.p, &mut pb);
        pr.entries(t.q, &mut qb);
        let j = t.j as usize;
        if prefix_sum(&pb, j) + prefix_sum(&qb, j) > beta {
            return f64::INFINITY;
        }
        worst = worst.max(-v);
        x.insert((t.p, t.q, t.j), v);
    }
    let get = |p: u64, q: u64, j: u8| x.get(&(p, q, j)).copied().unwrap_or(0.0);

    let mut members = 0u128;
    let mut p_side = vec![vec![0.0; k]; np as usize];
    let mut q_side = vec![vec![0.0; k]; np as usize];
    let mut total = 0.0;
    for p in 0..np {
        pr.entries(p, &mut pb);
        for q in 0..np {
            pr.entries(q, &mut qb);
            for j in 1..=k {
                if prefix_sum(&pb, j) + prefix_sum(&qb, j) <= beta {
                    members += 1;
                    let v = get(p, q, j as u8);
                    p_side[p as usize][j - 1] += v;
                    q_side[q as usize][j - 1] += v;
                    total += v;
                }
            }
        }
    }
    if members != inst.triplets.len() as u128 {
        return f64::INFINITY;
    }
    for p in 0..np {
        pr.entries(p, &mut pb);
        for j in 1..=k {
            let lhs = sol.n_p[p as usize] * pb[j - 1] as f64;
            let rhs = p_side[p as usize][j - 1];
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
            let lhs = sol.n_q[p as usize] * pb[j - 1] as f64;
            let rhs = q_side[p as usize][j - 1];
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
        }
    }
    for v in sol.n_p.iter().chain(&sol.n_q) {
        worst = worst.max(-v);
    }
    let sum_q: f64 = sol.n_q.iter().sum();
    let sum_p: f64 = sol.n_p.iter().sum();
    worst = worst.max((sum_q - sol.r).abs() / sol.r.abs().max(1.0));
    worst = worst.max((sum_p - 1.0).abs());
    let need = inst.beta_minus as f64 / 2.0;
    worst = worst.max((need - total) / need.max(1.0));
    worst.max(0.0)
}
