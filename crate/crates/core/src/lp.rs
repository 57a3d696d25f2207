//! Small dense linear programs over the belief simplex.
//!
//! Every program has belief variables `b(s) ≥ 0` with `Σ b(s) = 1`, and
//! optionally a free slack variable `x`. Inequality rows have the shape
//! `c·b ≥ x` (or `c·b ≥ 0` when the row does not carry the slack), where `c`
//! is a difference of two alpha vectors. The objective is either to maximize
//! `x` or to maximize a linear functional of `b`.
//!
//! The engine is a two-phase tableau simplex. It prices by largest reduced
//! cost with a two-pass ratio test and falls back to the smallest-index rule
//! after a run of degenerate pivots. Every choice is deterministic, so pivots
//! and maximizers are reproducible for identical input.

use std::cell::Cell;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{dot, Belief};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("simplex exceeded {0} pivots (ill-conditioned program)")]
    PivotLimit(usize),
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

/// `coeffs·b ≥ x` when `slack` is set, `coeffs·b ≥ 0` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityRow {
    pub coeffs: Vec<f64>,
    pub slack: bool,
}

/// `coeffs·b = rhs`
#[derive(Debug, Clone, PartialEq)]
pub struct EqualityRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// Maximize the free slack variable `x`.
    Slack,
    /// Maximize `c·b`.
    Linear(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    belief_dim: usize,
    objective: Objective,
    inequality_rows: Vec<InequalityRow>,
    equality_rows: Vec<EqualityRow>,
    fixed_zero: Vec<bool>,
}

impl LinearProgram {
    /// Maximize `x` subject to the simplex constraints only.
    pub fn maximize_slack(belief_dim: usize) -> Self {
        Self::with_objective(belief_dim, Objective::Slack)
    }

    /// Maximize `c·b` over the simplex.
    pub fn maximize_linear(coeffs: Vec<f64>) -> Self {
        let n = coeffs.len();
        Self::with_objective(n, Objective::Linear(coeffs))
    }

    fn with_objective(belief_dim: usize, objective: Objective) -> Self {
        LinearProgram {
            belief_dim,
            objective,
            inequality_rows: Vec::new(),
            equality_rows: vec![EqualityRow {
                coeffs: vec![1.0; belief_dim],
                rhs: 1.0,
            }],
            fixed_zero: vec![false; belief_dim],
        }
    }

    /// Adds `better·b ≥ x + other·b` (or without `x`).
    pub fn push_dominance(&mut self, better: &[f64], other: &[f64], slack: bool) {
        let coeffs = better.iter().zip(other).map(|(a, b)| a - b).collect();
        self.inequality_rows.push(InequalityRow { coeffs, slack });
    }

    pub fn push_inequality(&mut self, row: InequalityRow) {
        self.inequality_rows.push(row);
    }

    pub fn push_equality(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.equality_rows.push(EqualityRow { coeffs, rhs });
    }

    /// Forces `b(state) = 0`.
    pub fn fix_zero(&mut self, state: usize) {
        self.fixed_zero[state] = true;
    }

    pub fn belief_dim(&self) -> usize {
        self.belief_dim
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn has_slack(&self) -> bool {
        matches!(self.objective, Objective::Slack)
    }

    pub fn inequality_rows(&self) -> &[InequalityRow] {
        &self.inequality_rows
    }

    pub fn equality_rows(&self) -> &[EqualityRow] {
        &self.equality_rows
    }

    pub fn fixed_zero(&self) -> &[bool] {
        &self.fixed_zero
    }

    /// Number of inequality rows that carry the slack variable.
    pub fn slack_row_count(&self) -> usize {
        self.inequality_rows.iter().filter(|r| r.slack).count()
    }

    /// Constraint count: inequalities, equalities, and one bound per free
    /// belief variable. For the pairwise intersection program over full sets
    /// this is `|W| + |X| + n - 1`.
    pub fn row_count(&self) -> usize {
        let bounds = self.fixed_zero.iter().filter(|z| !**z).count();
        self.inequality_rows.len() + self.equality_rows.len() + bounds
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.belief_dim;
        if n == 0 {
            return Err(LpError::Malformed("no belief variables".into()));
        }
        if self.equality_rows.is_empty() {
            return Err(LpError::Malformed("missing simplex equality".into()));
        }
        let bad = self.inequality_rows.iter().any(|r| r.coeffs.len() != n)
            || self.equality_rows.iter().any(|r| r.coeffs.len() != n)
            || matches!(&self.objective, Objective::Linear(c) if c.len() != n);
        if bad {
            return Err(LpError::Malformed(
                "row length differs from belief dimension".into(),
            ));
        }
        Ok(())
    }

    /// Plain-text listing of the program, one constraint per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let fmt_row = |c: &[f64]| {
            c.iter()
                .enumerate()
                .map(|(i, v)| format!("{v:+}*b{i}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        match &self.objective {
            Objective::Slack => out.push_str("maximize x\n"),
            Objective::Linear(c) => {
                let _ = writeln!(out, "maximize {}", fmt_row(c));
            }
        }
        for r in &self.inequality_rows {
            let _ = writeln!(
                out,
                "{} >= {}",
                fmt_row(&r.coeffs),
                if r.slack { "x" } else { "0" }
            );
        }
        for r in &self.equality_rows {
            let _ = writeln!(out, "{} = {}", fmt_row(&r.coeffs), r.rhs);
        }
        for (s, z) in self.fixed_zero.iter().enumerate() {
            if *z {
                let _ = writeln!(out, "b{s} = 0");
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal {
        value: f64,
        point: Belief,
    },
    Infeasible,
    /// The objective grows without bound; `point` is a feasible belief.
    Unbounded {
        point: Belief,
    },
}

impl LpOutcome {
    /// The maximizer when the optimum exceeds `threshold`; an unbounded
    /// program counts as exceeding any threshold.
    pub fn positive_point(&self, threshold: f64) -> Option<&Belief> {
        match self {
            LpOutcome::Optimal { value, point } if *value > threshold => Some(point),
            LpOutcome::Unbounded { point } => Some(point),
            _ => None,
        }
    }

    pub fn point(&self) -> Option<&Belief> {
        match self {
            LpOutcome::Optimal { point, .. } | LpOutcome::Unbounded { point } => Some(point),
            LpOutcome::Infeasible => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            LpOutcome::Unbounded { .. } => Some(f64::INFINITY),
            LpOutcome::Infeasible => None,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, LpOutcome::Infeasible)
    }
}

/// An LP oracle. Implementations must be deterministic.
pub trait LpSolver {
    fn solve(&self, lp: &LinearProgram) -> Result<LpOutcome, LpError>;
}

/// Dense two-phase primal simplex.
#[derive(Debug, Clone, Copy)]
pub struct DenseSimplex {
    pub max_pivots: usize,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        DenseSimplex { max_pivots: 50_000 }
    }
}

const PIVOT_EPS: f64 = 1e-9;
const HARRIS_DELTA: f64 = 1e-9;
const DEGENERATE_RUN_LIMIT: usize = 50;
const COST_EPS: f64 = 1e-11;
const FEASIBILITY_EPS: f64 = 1e-9;

impl LpSolver for DenseSimplex {
    fn solve(&self, lp: &LinearProgram) -> Result<LpOutcome, LpError> {
        lp.validate()?;
        Tableau::build(lp).run(lp, self.max_pivots)
    }
}

/// Wraps a solver and counts invocations and constraint rows.
#[derive(Debug, Default)]
pub struct CountingSolver<S> {
    inner: S,
    calls: Cell<usize>,
    rows: Cell<usize>,
}

impl<S: LpSolver> CountingSolver<S> {
    pub fn new(inner: S) -> Self {
        CountingSolver {
            inner,
            calls: Cell::new(0),
            rows: Cell::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.get()
    }

    pub fn rows(&self) -> usize {
        self.rows.get()
    }
}

impl<S: LpSolver> LpSolver for CountingSolver<S> {
    fn solve(&self, lp: &LinearProgram) -> Result<LpOutcome, LpError> {
        self.calls.set(self.calls.get() + 1);
        self.rows.set(self.rows.get() + lp.row_count());
        self.inner.solve(lp)
    }
}

struct Tableau {
    /// Row-major, `rows x (cols + 1)`, last column is the right-hand side.
    data: Vec<f64>,
    rows: usize,
    cols: usize,
    basis: Vec<usize>,
    /// Columns eligible to enter the basis.
    allowed: Vec<bool>,
    /// Maps belief state to its column, `None` when fixed to zero.
    belief_col: Vec<Option<usize>>,
    slack_cols: Option<(usize, usize)>,
    first_artificial: usize,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.belief_dim;
        let mut belief_col = vec![None; n];
        let mut next = 0;
        for (col, &fixed) in belief_col.iter_mut().zip(&lp.fixed_zero) {
            if !fixed {
                *col = Some(next);
                next += 1;
            }
        }
        let slack_cols = lp.has_slack().then(|| {
            let c = (next, next + 1);
            next += 2;
            c
        });
        let n_ineq = lp.inequality_rows.len();
        let n_eq = lp.equality_rows.len();
        let first_slack = next;
        let first_artificial = first_slack + n_ineq;
        let cols = first_artificial + n_eq;
        let rows = n_ineq + n_eq;
        let width = cols + 1;
        let mut data = vec![0.0; rows * width];
        let mut basis = Vec::with_capacity(rows);

        // Rows without the slack are scaled to unit max coefficient, which
        // keeps the absolute ratio-test tolerance meaningful on tiny rows.
        let unit_scale = |coeffs: &[f64]| {
            let m = coeffs
                .iter()
                .enumerate()
                .filter(|(s, _)| belief_col[*s].is_some())
                .fold(0.0f64, |m, (_, c)| m.max(c.abs()));
            if m > 0.0 {
                1.0 / m
            } else {
                1.0
            }
        };
        for (i, row) in lp.inequality_rows.iter().enumerate() {
            let r = &mut data[i * width..(i + 1) * width];
            let scale = if row.slack {
                1.0
            } else {
                unit_scale(&row.coeffs)
            };
            // -c·b + x ≤ 0
            for (s, &c) in row.coeffs.iter().enumerate() {
                if let Some(col) = belief_col[s] {
                    r[col] = -c * scale;
                }
            }
            if row.slack {
                if let Some((xp, xm)) = slack_cols {
                    r[xp] = 1.0;
                    r[xm] = -1.0;
                }
            }
            r[first_slack + i] = 1.0;
            basis.push(first_slack + i);
        }
        for (k, row) in lp.equality_rows.iter().enumerate() {
            let i = n_ineq + k;
            let r = &mut data[i * width..(i + 1) * width];
            let sign = if row.rhs < 0.0 { -1.0 } else { 1.0 };
            let scale = sign * unit_scale(&row.coeffs);
            for (s, &c) in row.coeffs.iter().enumerate() {
                if let Some(col) = belief_col[s] {
                    r[col] = scale * c;
                }
            }
            r[first_artificial + k] = 1.0;
            r[cols] = scale * row.rhs;
            basis.push(first_artificial + k);
        }
        Tableau {
            data,
            rows,
            cols,
            basis,
            allowed: vec![true; cols],
            belief_col,
            slack_cols,
            first_artificial,
            pivots: 0,
        }
    }

    #[inline]
    fn width(&self) -> usize {
        self.cols + 1
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    fn pivot(&mut self, obj: &mut [f64], pr: usize, pc: usize) {
        let w = self.width();
        let inv = 1.0 / self.at(pr, pc);
        for c in 0..w {
            self.data[pr * w + c] *= inv;
        }
        self.data[pr * w + pc] = 1.0;
        let (before, rest) = self.data.split_at_mut(pr * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[pc];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
                row[pc] = 0.0;
            }
        };
        for row in before.chunks_mut(w) {
            eliminate(row);
        }
        for row in after.chunks_mut(w) {
            eliminate(row);
        }
        eliminate(obj);
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Reduced-cost row for maximizing `costs·z` under the current basis.
    fn objective_row(&self, costs: &[f64]) -> Vec<f64> {
        let w = self.width();
        let mut obj = vec![0.0; w];
        obj[..self.cols].copy_from_slice(costs);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb != 0.0 {
                for (o, d) in obj.iter_mut().zip(&self.data[r * w..(r + 1) * w]) {
                    *o -= cb * d;
                }
            }
        }
        obj
    }

    /// Primal simplex: largest reduced cost enters, Harris two-pass ratio
    /// test picks the largest admissible pivot. After a run of degenerate
    /// pivots it switches to Bland's rule, which cannot cycle. Returns
    /// `false` when unbounded.
    fn optimize(&mut self, obj: &mut [f64], max_pivots: usize) -> Result<bool, LpError> {
        let mut degenerate_run = 0usize;
        loop {
            if self.pivots >= max_pivots {
                return Err(LpError::PivotLimit(max_pivots));
            }
            let bland = degenerate_run > DEGENERATE_RUN_LIMIT;
            let candidates = (0..self.cols).filter(|&c| self.allowed[c] && obj[c] > COST_EPS);
            let entering = if bland {
                candidates.min()
            } else {
                candidates.max_by(|&p, &q| obj[p].total_cmp(&obj[q]).then(q.cmp(&p)))
            };
            let Some(pc) = entering else {
                return Ok(true);
            };
            let rhs = |t: &Self, r: usize| t.at(r, t.cols).max(0.0);
            let mut best: Option<(usize, f64)> = None;
            if bland {
                for r in 0..self.rows {
                    let a = self.at(r, pc);
                    if a > PIVOT_EPS {
                        let ratio = rhs(self, r) / a;
                        let better = match best {
                            None => true,
                            Some((br, bratio)) => {
                                ratio < bratio
                                    || (ratio == bratio && self.basis[r] < self.basis[br])
                            }
                        };
                        if better {
                            best = Some((r, ratio));
                        }
                    }
                }
            } else {
                let mut theta = f64::INFINITY;
                for r in 0..self.rows {
                    let a = self.at(r, pc);
                    if a > PIVOT_EPS {
                        theta = theta.min((rhs(self, r) + HARRIS_DELTA) / a);
                    }
                }
                let mut best_a = 0.0;
                for r in 0..self.rows {
                    let a = self.at(r, pc);
                    if a > PIVOT_EPS && rhs(self, r) / a <= theta && a > best_a {
                        best_a = a;
                        best = Some((r, rhs(self, r) / a));
                    }
                }
            }
            match best {
                None => return Ok(false),
                Some((pr, ratio)) => {
                    if ratio <= 1e-12 {
                        degenerate_run += 1;
                    } else {
                        degenerate_run = 0;
                    }
                    self.pivot(obj, pr, pc);
                }
            }
        }
    }

    fn drop_row(&mut self, r: usize) {
        let w = self.width();
        self.data.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.rows -= 1;
    }

    fn run(mut self, lp: &LinearProgram, max_pivots: usize) -> Result<LpOutcome, LpError> {
        // Phase 1: drive artificial variables to zero.
        let mut costs = vec![0.0; self.cols];
        costs[self.first_artificial..].fill(-1.0);
        let mut obj = self.objective_row(&costs);
        self.optimize(&mut obj, max_pivots)?;
        let infeasibility = obj[self.cols];
        // obj[rhs] holds minus the phase-1 objective, i.e. the artificial sum.
        let scale = 1.0
            + lp.equality_rows
                .iter()
                .map(|r| r.rhs.abs())
                .fold(0.0, f64::max);
        if infeasibility > FEASIBILITY_EPS * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // Pivot remaining artificials out of the basis or drop redundant rows.
        let mut r = 0;
        while r < self.rows {
            if self.basis[r] >= self.first_artificial {
                let col = (0..self.first_artificial).find(|&c| self.at(r, c).abs() > 1e-9);
                match col {
                    Some(c) => {
                        let mut dummy = vec![0.0; self.width()];
                        self.pivot(&mut dummy, r, c);
                        r += 1;
                    }
                    None => self.drop_row(r),
                }
            } else {
                r += 1;
            }
        }
        for c in self.first_artificial..self.cols {
            self.allowed[c] = false;
        }

        // Phase 2.
        let mut costs = vec![0.0; self.cols];
        match &lp.objective {
            Objective::Slack => {
                if let Some((xp, xm)) = self.slack_cols {
                    costs[xp] = 1.0;
                    costs[xm] = -1.0;
                }
            }
            Objective::Linear(c) => {
                for (s, &v) in c.iter().enumerate() {
                    if let Some(col) = self.belief_col[s] {
                        costs[col] = v;
                    }
                }
            }
        }
        let mut obj = self.objective_row(&costs);
        let bounded = self.optimize(&mut obj, max_pivots)?;

        let mut raw = vec![0.0; lp.belief_dim];
        for (r, &b) in self.basis.iter().enumerate() {
            for (s, col) in self.belief_col.iter().enumerate() {
                if *col == Some(b) {
                    raw[s] = self.at(r, self.cols);
                }
            }
        }
        let point = Belief::from_weights(&raw).ok_or_else(|| {
            LpError::Malformed("simplex produced a point outside the belief simplex".into())
        })?;
        if !bounded {
            return Ok(LpOutcome::Unbounded { point });
        }
        // Report the objective as attained at the returned point.
        let value = match &lp.objective {
            Objective::Slack => {
                let margin = lp
                    .inequality_rows
                    .iter()
                    .filter(|r| r.slack)
                    .map(|r| dot(&r.coeffs, point.as_slice()))
                    .fold(f64::INFINITY, f64::min);
                if margin == f64::INFINITY {
                    return Ok(LpOutcome::Unbounded { point });
                }
                margin
            }
            Objective::Linear(c) => dot(c, point.as_slice()),
        };
        Ok(LpOutcome::Optimal { value, point })
    }
}
