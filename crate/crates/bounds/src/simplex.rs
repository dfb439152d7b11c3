//! Dense two-phase tableau simplex for `min c·x` subject to linear rows and
//! `x ≥ 0`.
//!
//! Entering columns follow Dantzig's rule. After a run of degenerate pivots
//! the solver switches to Bland's rule until the objective moves again.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sense {
    Eq,
    Ge,
    Le,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Problem {
    pub num_vars: usize,
    pub objective: Vec<(usize, f64)>,
    pub rows: Vec<Constraint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    TooLarge,
}

#[derive(Clone, Debug)]
pub struct SimplexResult {
    pub status: SimplexStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub tol: f64,
    pub max_pivots: usize,
    /// Tableaux with more cells than this are refused.
    pub max_cells: usize,
    pub degenerate_streak: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_pivots: 200_000, max_cells: 400_000_000, degenerate_streak: 50 }
    }
}

struct Tableau {
    width: usize,
    cells: Vec<f64>,
    basis: Vec<usize>,
    cost: Vec<f64>,
    /// Columns allowed to enter.
    allowed: usize,
    pivots: usize,
    streak: usize,
}

impl Tableau {
    fn row(&self, r: usize) -> &[f64] {
        &self.cells[r * self.width..(r + 1) * self.width]
    }

    fn rhs_col(&self) -> usize {
        self.width - 1
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.cells[pr * w + pc];
        for v in &mut self.cells[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        self.cells[pr * w + pc] = 1.0;
        let nz: Vec<usize> = (0..w).filter(|&c| self.cells[pr * w + c] != 0.0).collect();
        let prow: Vec<f64> = nz.iter().map(|&c| self.cells[pr * w + c]).collect();
        let rows = self.basis.len();
        for r in 0..rows {
            if r == pr {
                continue;
            }
            let f = self.cells[r * w + pc];
            if f == 0.0 {
                continue;
            }
            let base = r * w;
            for (&c, &pv) in nz.iter().zip(&prow) {
                self.cells[base + c] -= f * pv;
            }
            self.cells[base + pc] = 0.0;
        }
        let f = self.cost[pc];
        if f != 0.0 {
            for (&c, &pv) in nz.iter().zip(&prow) {
                self.cost[c] -= f * pv;
            }
            self.cost[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Runs until optimal. Returns `Unbounded` or `IterationLimit` on failure.
    fn run(&mut self, opts: &SimplexOptions) -> SimplexStatus {
        let rhs = self.rhs_col();
        loop {
            if self.pivots >= opts.max_pivots {
                return SimplexStatus::IterationLimit;
            }
            let bland = self.streak >= opts.degenerate_streak;
            let mut enter = None;
            let mut best = -opts.tol;
            for c in 0..self.allowed {
                if self.cost[c] < best {
                    enter = Some(c);
                    if bland {
                        break;
                    }
                    best = self.cost[c];
                }
            }
            let Some(pc) = enter else { return SimplexStatus::Optimal };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.basis.len() {
                let a = self.row(r)[pc];
                if a > opts.tol {
                    let ratio = self.row(r)[rhs] / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - opts.tol || (ratio <= lratio + opts.tol && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((pr, ratio)) = leave else { return SimplexStatus::Unbounded };
            if ratio.abs() <= opts.tol {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
            self.pivot(pr, pc);
        }
    }
}

pub fn solve(problem: &Problem, opts: &SimplexOptions) -> SimplexResult {
    let n = problem.num_vars;
    let m = problem.rows.len();
    let mut slack_cols = 0;
    let mut art_cols = 0;
    for row in &problem.rows {
        let flipped = row.rhs < 0.0;
        let sense = match (row.sense, flipped) {
            (Sense::Ge, true) => Sense::Le,
            (Sense::Le, true) => Sense::Ge,
            (s, _) => s,
        };
        match sense {
            Sense::Le => slack_cols += 1,
            Sense::Ge => {
                slack_cols += 1;
                art_cols += 1;
            }
            Sense::Eq => art_cols += 1,
        }
    }
    let width = n + slack_cols + art_cols + 1;
    let fail = |status| SimplexResult { status, x: vec![0.0; n], objective: f64::NAN, pivots: 0 };
    if width.saturating_mul(m) > opts.max_cells {
        return fail(SimplexStatus::TooLarge);
    }

    let mut t = Tableau {
        width,
        cells: vec![0.0; width * m],
        basis: vec![0; m],
        cost: vec![0.0; width],
        allowed: n + slack_cols + art_cols,
        pivots: 0,
        streak: 0,
    };
    let (mut next_slack, mut next_art) = (n, n + slack_cols);
    let art_start = n + slack_cols;
    for (r, row) in problem.rows.iter().enumerate() {
        let sign = if row.rhs < 0.0 { -1.0 } else { 1.0 };
        let sense = match (row.sense, sign < 0.0) {
            (Sense::Ge, true) => Sense::Le,
            (Sense::Le, true) => Sense::Ge,
            (s, _) => s,
        };
        let base = r * width;
        for &(c, v) in &row.coeffs {
            t.cells[base + c] += sign * v;
        }
        t.cells[base + width - 1] = sign * row.rhs;
        match sense {
            Sense::Le => {
                t.cells[base + next_slack] = 1.0;
                t.basis[r] = next_slack;
                next_slack += 1;
            }
            Sense::Ge => {
                t.cells[base + next_slack] = -1.0;
                next_slack += 1;
                t.cells[base + next_art] = 1.0;
                t.basis[r] = next_art;
                next_art += 1;
            }
            Sense::Eq => {
                t.cells[base + next_art] = 1.0;
                t.basis[r] = next_art;
                next_art += 1;
            }
        }
    }

    // Phase one: minimise the sum of artificials.
    for r in 0..m {
        if t.basis[r] >= art_start {
            let base = r * width;
            for c in 0..width {
                if c < art_start || c == width - 1 {
                    t.cost[c] -= t.cells[base + c];
                }
            }
        }
    }
    match t.run(opts) {
        SimplexStatus::Optimal => {}
        SimplexStatus::Unbounded => unreachable!("phase one is bounded below by zero"),
        s => return SimplexResult { pivots: t.pivots, ..fail(s) },
    }
    let infeasibility = -t.cost[width - 1];
    let scale = problem.rows.iter().map(|r| r.rhs.abs()).fold(1.0, f64::max);
    if infeasibility > 1e-7 * scale {
        return SimplexResult { pivots: t.pivots, ..fail(SimplexStatus::Infeasible) };
    }
    for r in 0..m {
        if t.basis[r] < art_start {
            continue;
        }
        if let Some(c) = (0..art_start).find(|&c| t.row(r)[c].abs() > 1e-7) {
            t.pivot(r, c);
        }
    }

    // Phase two.
    t.allowed = art_start;
    t.streak = 0;
    t.cost.iter_mut().for_each(|v| *v = 0.0);
    for &(c, v) in &problem.objective {
        t.cost[c] += v;
    }
    for r in 0..m {
        let b = t.basis[r];
        let cb = t.cost[b];
        if cb != 0.0 {
            let base = r * width;
            for c in 0..width {
                t.cost[c] -= cb * t.cells[base + c];
            }
        }
    }
    let status = t.run(opts);
    let mut x = vec![0.0; n];
    for r in 0..m {
        if t.basis[r] < n {
            x[t.basis[r]] = t.row(r)[width - 1];
        }
    }
    let objective = problem.objective.iter().map(|&(c, v)| v * x[c]).sum();
    SimplexResult { status, x, objective, pivots: t.pivots }
}
