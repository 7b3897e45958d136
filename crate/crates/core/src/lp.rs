//! Dense bounded-variable revised simplex.
//!
//! Problems are stated as
//!
//! ```text
//! minimize    cᵀx
//! subject to  A_ub x ≤ b_ub
//!             A_eq x = b_eq
//!             l ≤ x ≤ u          (l, u may be ±∞)
//! ```
//!
//! Unbounded variable bounds are carried as IEEE infinities, never as large
//! finite numbers. The solver keeps an explicit dense basis inverse, updated by
//! product-form pivots and refactorized periodically. Pricing is Dantzig with a
//! Harris two-pass ratio test; after `5·(rows + cols)` iterations it switches
//! to Bland's rule so degenerate cycling cannot persist.

use std::fmt;
use std::io::Write;

use ndarray::{Array1, Array2, Axis};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid problem data: {0}")]
    InvalidData(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverTolerances<S> {
    /// Maximum constraint/bound violation accepted in a solution.
    pub feas_tol: S,
    /// Smallest pivot magnitude admitted by the ratio test.
    pub pivot_tol: S,
    /// Reduced-cost threshold for optimality.
    pub opt_tol: S,
}

impl<S: Scalar> Default for SolverTolerances<S> {
    fn default() -> Self {
        Self { feas_tol: S::lit(1e-7), pivot_tol: S::lit(1e-9), opt_tol: S::lit(1e-8) }
    }
}

impl<S: Scalar> SolverTolerances<S> {
    /// Tolerances suited to single precision.
    pub fn relaxed() -> Self {
        Self { feas_tol: S::lit(1e-4), pivot_tol: S::lit(1e-6), opt_tol: S::lit(1e-5) }
    }

    /// Looser pivoting, used when a first attempt breaks down.
    pub fn perturbed(&self) -> Self {
        Self {
            feas_tol: self.feas_tol,
            pivot_tol: self.pivot_tol * S::lit(100.0),
            opt_tol: self.opt_tol * S::lit(10.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<S> {
    pub status: LpStatus,
    /// Primal point. Meaningful only when `status == Optimal`.
    pub x: Vec<S>,
    pub objective_value: S,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem<S> {
    pub objective: Vec<S>,
    pub a_ub: Array2<S>,
    pub b_ub: Vec<S>,
    pub a_eq: Array2<S>,
    pub b_eq: Vec<S>,
    pub lower: Vec<S>,
    pub upper: Vec<S>,
}

impl<S: Scalar> LpProblem<S> {
    /// `n` free variables, zero objective, no constraints.
    pub fn new(n: usize) -> Self {
        Self {
            objective: vec![S::zero(); n],
            a_ub: Array2::zeros((0, n)),
            b_ub: Vec::new(),
            a_eq: Array2::zeros((0, n)),
            b_eq: Vec::new(),
            lower: vec![S::neg_infinity(); n],
            upper: vec![S::infinity(); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b_ub.len() + self.b_eq.len()
    }

    pub fn set_objective(&mut self, c: &[S]) {
        self.objective.copy_from_slice(c);
    }

    pub fn set_bounds(&mut self, j: usize, lo: S, hi: S) {
        self.lower[j] = lo;
        self.upper[j] = hi;
    }

    pub fn set_nonneg(&mut self, j: usize) {
        self.set_bounds(j, S::zero(), S::infinity());
    }

    /// `row · x ≤ rhs`
    pub fn add_le(&mut self, row: &[S], rhs: S) {
        self.a_ub.push_row(ndarray::ArrayView1::from(row)).expect("row length equals variable count");
        self.b_ub.push(rhs);
    }

    /// `row · x ≥ rhs`
    pub fn add_ge(&mut self, row: &[S], rhs: S) {
        let neg: Vec<S> = row.iter().map(|v| -*v).collect();
        self.add_le(&neg, -rhs);
    }

    /// `row · x = rhs`
    pub fn add_eq(&mut self, row: &[S], rhs: S) {
        self.a_eq.push_row(ndarray::ArrayView1::from(row)).expect("row length equals variable count");
        self.b_eq.push(rhs);
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        let dims_ok = self.a_ub.ncols() == n
            && self.a_eq.ncols() == n
            && self.a_ub.nrows() == self.b_ub.len()
            && self.a_eq.nrows() == self.b_eq.len()
            && self.lower.len() == n
            && self.upper.len() == n;
        if !dims_ok {
            return Err(LpError::DimensionMismatch(format!(
                "n={n}, A_ub {:?}, b_ub {}, A_eq {:?}, b_eq {}, bounds {}/{}",
                self.a_ub.dim(),
                self.b_ub.len(),
                self.a_eq.dim(),
                self.b_eq.len(),
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.objective.iter().any(|v| !v.is_finite())
            || self.a_ub.iter().any(|v| !v.is_finite())
            || self.a_eq.iter().any(|v| !v.is_finite())
            || self.b_ub.iter().chain(&self.b_eq).any(|v| !v.is_finite())
        {
            return Err(LpError::InvalidData("non-finite coefficient".into()));
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == S::infinity() || hi == S::neg_infinity() {
                return Err(LpError::InvalidData(format!("bounds of x{j}: [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[S]) -> S {
        let xv = ndarray::ArrayView1::from(x);
        let mut worst = S::zero();
        if self.a_ub.nrows() > 0 {
            for (ax, b) in self.a_ub.dot(&xv).iter().zip(&self.b_ub) {
                worst = worst.max(*ax - *b);
            }
        }
        if self.a_eq.nrows() > 0 {
            for (ax, b) in self.a_eq.dot(&xv).iter().zip(&self.b_eq) {
                worst = worst.max((*ax - *b).abs());
            }
        }
        for j in 0..x.len() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }

    /// Writes the problem as plain text, one constraint per line, for
    /// cross-checking with external solvers.
    pub fn write_debug_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let fmt_row = |row: ndarray::ArrayView1<S>| {
            row.iter().map(|v| format!("{:.17e}", v.as_f64())).collect::<Vec<_>>().join(" ")
        };
        writeln!(out, "vars {}", self.num_vars())?;
        writeln!(out, "min {}", fmt_row(ndarray::ArrayView1::from(&self.objective[..])))?;
        for (row, b) in self.a_ub.axis_iter(Axis(0)).zip(&self.b_ub) {
            writeln!(out, "le {} | {:.17e}", fmt_row(row), b.as_f64())?;
        }
        for (row, b) in self.a_eq.axis_iter(Axis(0)).zip(&self.b_eq) {
            writeln!(out, "eq {} | {:.17e}", fmt_row(row), b.as_f64())?;
        }
        for j in 0..self.num_vars() {
            writeln!(out, "bound {j} {} {}", self.lower[j].as_f64(), self.upper[j].as_f64())?;
        }
        Ok(())
    }
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        };
        f.write_str(s)
    }
}

/// Feasibility result of [`solve_feasibility`].
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility<S> {
    pub feasible: bool,
    pub witness: Option<Vec<S>>,
}

/// Solves `problem` to optimality.
pub fn solve<S: Scalar>(problem: &LpProblem<S>, tols: &SolverTolerances<S>) -> Result<LpSolution<S>, LpError> {
    problem.validate()?;
    let mut simplex = Simplex::new(problem, *tols);
    simplex.run()
}

/// Decides whether the constraint set of `problem` is nonempty (objective ignored).
pub fn solve_feasibility<S: Scalar>(
    problem: &LpProblem<S>,
    tols: &SolverTolerances<S>,
) -> Result<Feasibility<S>, LpError> {
    let mut zero = problem.clone();
    zero.objective.iter_mut().for_each(|c| *c = S::zero());
    let sol = solve(&zero, tols)?;
    Ok(match sol.status {
        LpStatus::Optimal => Feasibility { feasible: true, witness: Some(sol.x) },
        _ => Feasibility { feasible: false, witness: None },
    })
}

/// Solves with `tols`; on a numerical breakdown retries once with perturbed tolerances.
pub fn solve_with_retry<S: Scalar>(
    problem: &LpProblem<S>,
    tols: &SolverTolerances<S>,
) -> Result<LpSolution<S>, LpError> {
    match solve(problem, tols) {
        Err(LpError::NumericalFailure(_)) => solve(problem, &tols.perturbed()),
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable sitting at zero.
    AtZero,
}

#[derive(Debug, Clone, Copy)]
enum Column {
    Structural(usize),
    /// Unit column `sign·e_row` (slack or artificial).
    Unit {
        row: usize,
        sign: i8,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum StepOutcome {
    Optimal,
    Unbounded,
    Continue,
}

const REFACTOR_EVERY: usize = 100;

struct Simplex<'p, S: Scalar> {
    problem: &'p LpProblem<S>,
    tols: SolverTolerances<S>,
    harris_tol: S,
    /// Stacked `[A_ub; A_eq]`.
    rows: Array2<S>,
    rhs: Vec<S>,
    m: usize,
    n: usize,
    columns: Vec<Column>,
    first_artificial: usize,
    lo: Vec<S>,
    hi: Vec<S>,
    cost: Vec<S>,
    x: Vec<S>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    binv: Array2<S>,
    iterations: usize,
    bland_after: usize,
    max_iterations: usize,
}

impl<'p, S: Scalar> Simplex<'p, S> {
    fn new(problem: &'p LpProblem<S>, tols: SolverTolerances<S>) -> Self {
        let n = problem.num_vars();
        let m_ub = problem.b_ub.len();
        let m = problem.num_rows();
        let rows = ndarray::concatenate(Axis(0), &[problem.a_ub.view(), problem.a_eq.view()])
            .expect("validated column counts");
        let rhs: Vec<S> = problem.b_ub.iter().chain(&problem.b_eq).copied().collect();

        let mut columns: Vec<Column> = (0..n).map(Column::Structural).collect();
        let mut lo = problem.lower.clone();
        let mut hi = problem.upper.clone();
        for i in 0..m_ub {
            columns.push(Column::Unit { row: i, sign: 1 });
            lo.push(S::zero());
            hi.push(S::infinity());
        }
        let first_artificial = columns.len();
        let total = columns.len();
        let bland_after = 5 * (m + total);
        Self {
            problem,
            tols,
            harris_tol: tols.feas_tol * S::lit(0.5),
            rows,
            rhs,
            m,
            n,
            columns,
            first_artificial,
            lo,
            hi,
            cost: vec![S::zero(); total],
            x: vec![S::zero(); total],
            state: vec![VarState::AtLower; total],
            basis: Vec::with_capacity(m),
            binv: Array2::zeros((m, m)),
            iterations: 0,
            bland_after,
            max_iterations: bland_after + 50 * (m + total) + 10_000,
        }
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.first_artificial
    }

    /// Nonbasic starting value and state for a variable with the given bounds.
    fn initial_position(lo: S, hi: S) -> (S, VarState) {
        if lo.is_finite() {
            (lo, VarState::AtLower)
        } else if hi.is_finite() {
            (hi, VarState::AtUpper)
        } else {
            (S::zero(), VarState::AtZero)
        }
    }

    /// Builds a diagonal starting basis from slacks, singleton columns and,
    /// where neither fits, artificials. Returns the number of artificials.
    fn crash(&mut self) -> usize {
        let n_cols = self.columns.len();
        for j in 0..n_cols {
            let (v, st) = Self::initial_position(self.lo[j], self.hi[j]);
            self.x[j] = v;
            self.state[j] = st;
        }
        let mut residual = self.rhs.clone();
        for i in 0..self.m {
            let row = self.rows.row(i);
            let mut acc = S::zero();
            for j in 0..self.n {
                acc += row[j] * self.x[j];
            }
            residual[i] -= acc;
        }

        // Structural singleton columns per row.
        let mut singleton_of_row: Vec<Vec<usize>> = vec![Vec::new(); self.m];
        for j in 0..self.n {
            let col = self.rows.column(j);
            let mut nz = col.iter().enumerate().filter(|(_, v)| **v != S::zero());
            if let (Some((i, _)), None) = (nz.next(), nz.next()) {
                singleton_of_row[i].push(j);
            }
        }

        let m_ub = self.problem.b_ub.len();
        let mut diag = vec![S::one(); self.m];
        self.basis.clear();
        for i in 0..self.m {
            let r = residual[i];
            if i < m_ub && r >= S::zero() {
                let s = self.n + i;
                self.x[s] = r;
                self.state[s] = VarState::Basic;
                self.basis.push(s);
                continue;
            }
            let mut chosen = None;
            for &j in &singleton_of_row[i] {
                let a = self.rows[(i, j)];
                let v = self.x[j] + r / a;
                if v >= self.lo[j] && v <= self.hi[j] {
                    chosen = Some((j, a, v));
                    break;
                }
            }
            if let Some((j, a, v)) = chosen {
                self.x[j] = v;
                self.state[j] = VarState::Basic;
                self.basis.push(j);
                diag[i] = a;
                continue;
            }
            let sign: i8 = if r >= S::zero() { 1 } else { -1 };
            self.columns.push(Column::Unit { row: i, sign });
            self.lo.push(S::zero());
            self.hi.push(S::infinity());
            self.cost.push(S::zero());
            self.x.push(r.abs());
            self.state.push(VarState::Basic);
            self.basis.push(self.columns.len() - 1);
            diag[i] = if sign > 0 { S::one() } else { -S::one() };
        }
        self.binv = Array2::zeros((self.m, self.m));
        for i in 0..self.m {
            self.binv[(i, i)] = S::one() / diag[i];
        }
        let total = self.columns.len();
        self.bland_after = 5 * (self.m + total);
        self.max_iterations = self.bland_after + 50 * (self.m + total) + 10_000;
        self.columns.len() - self.first_artificial
    }

    fn column_entry(&self, j: usize, i: usize) -> S {
        match self.columns[j] {
            Column::Structural(c) => self.rows[(i, c)],
            Column::Unit { row, sign } => {
                if row == i {
                    if sign > 0 {
                        S::one()
                    } else {
                        -S::one()
                    }
                } else {
                    S::zero()
                }
            }
        }
    }

    /// `B⁻¹ a_j`
    fn ftran(&self, j: usize) -> Array1<S> {
        match self.columns[j] {
            Column::Structural(c) => self.binv.dot(&self.rows.column(c)),
            Column::Unit { row, sign } => {
                let col = self.binv.column(row).to_owned();
                if sign > 0 {
                    col
                } else {
                    -col
                }
            }
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut b = Array2::<S>::zeros((m, m));
        for (k, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                b[(i, k)] = self.column_entry(j, i);
            }
        }
        self.binv = invert(b)
            .ok_or_else(|| LpError::NumericalFailure(format!("singular basis after {} iterations", self.iterations)))?;
        // x_B = B⁻¹ (b − N x_N)
        let mut r = Array1::from(self.rhs.clone());
        let mut x_struct = Array1::<S>::zeros(self.n);
        for j in 0..self.n {
            if self.state[j] != VarState::Basic {
                x_struct[j] = self.x[j];
            }
        }
        r -= &self.rows.dot(&x_struct);
        for j in self.n..self.columns.len() {
            if self.state[j] != VarState::Basic && self.x[j] != S::zero() {
                if let Column::Unit { row, sign } = self.columns[j] {
                    let v = self.x[j];
                    r[row] -= if sign > 0 { v } else { -v };
                }
            }
        }
        let xb = self.binv.dot(&r);
        for (k, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[k];
        }
        Ok(())
    }

    fn reduced_costs(&self) -> Vec<S> {
        let cb = Array1::from_iter(self.basis.iter().map(|&j| self.cost[j]));
        let y = self.binv.t().dot(&cb);
        let ya = self.rows.t().dot(&y);
        let mut d = self.cost.clone();
        for j in 0..self.n {
            d[j] -= ya[j];
        }
        for j in self.n..self.columns.len() {
            if let Column::Unit { row, sign } = self.columns[j] {
                d[j] -= if sign > 0 { y[row] } else { -y[row] };
            }
        }
        d
    }

    /// Entering variable and its direction (+1 increase, −1 decrease).
    fn price(&self, d: &[S], phase: Phase, bland: bool) -> Option<(usize, S)> {
        let tol = self.tols.opt_tol;
        let mut best: Option<(usize, S, S)> = None;
        for j in 0..self.columns.len() {
            if phase == Phase::Two && self.is_artificial(j) {
                continue;
            }
            if self.lo[j] == self.hi[j] {
                continue;
            }
            let dj = d[j];
            let dir = match self.state[j] {
                VarState::Basic => continue,
                VarState::AtLower if dj < -tol => S::one(),
                VarState::AtUpper if dj > tol => -S::one(),
                VarState::AtZero if dj.abs() > tol => {
                    if dj < S::zero() {
                        S::one()
                    } else {
                        -S::one()
                    }
                }
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            let score = dj.abs();
            if best.map_or(true, |(_, _, s)| score > s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Ratio test. Returns `None` when the ray is unbounded, otherwise the
    /// step length and the leaving row (`None` for an entering bound flip).
    fn ratio_test(&self, q: usize, dir: S, alpha: &Array1<S>, bland: bool) -> Option<(S, Option<usize>)> {
        let flip = self.hi[q] - self.lo[q];
        let ptol = self.tols.pivot_tol;
        let rate = |i: usize| -dir * alpha[i];

        if bland {
            let mut best: Option<(S, usize)> = None;
            for i in 0..self.m {
                if alpha[i].abs() <= ptol {
                    continue;
                }
                let Some(ratio) = self.exact_ratio(i, rate(i)) else { continue };
                let better = match best {
                    None => true,
                    Some((t, r)) => ratio < t || (ratio == t && self.basis[i] < self.basis[r]),
                };
                if better {
                    best = Some((ratio, i));
                }
            }
            return match best {
                Some((t, _)) if flip.is_finite() && flip <= t => Some((flip, None)),
                Some((t, i)) => Some((t, Some(i))),
                None if flip.is_finite() => Some((flip, None)),
                None => None,
            };
        }

        // Harris pass 1: largest step keeping every basic variable within
        // its bounds relaxed by harris_tol.
        let mut theta_max = S::infinity();
        for i in 0..self.m {
            if alpha[i].abs() <= ptol {
                continue;
            }
            let r = rate(i);
            let j = self.basis[i];
            let relaxed = if r < S::zero() && self.lo[j].is_finite() {
                (self.x[j] - self.lo[j] + self.harris_tol) / -r
            } else if r > S::zero() && self.hi[j].is_finite() {
                (self.hi[j] - self.x[j] + self.harris_tol) / r
            } else {
                continue;
            };
            theta_max = theta_max.min(relaxed.max(S::zero()));
        }
        if flip.is_finite() && flip <= theta_max {
            return Some((flip, None));
        }
        if theta_max == S::infinity() {
            return None;
        }
        // Pass 2: among rows blocking within theta_max pick the largest pivot.
        let mut best: Option<(S, usize, S)> = None;
        for i in 0..self.m {
            if alpha[i].abs() <= ptol {
                continue;
            }
            let Some(ratio) = self.exact_ratio(i, rate(i)) else { continue };
            if ratio <= theta_max {
                let mag = alpha[i].abs();
                if best.map_or(true, |(_, _, b)| mag > b) {
                    best = Some((ratio, i, mag));
                }
            }
        }
        best.map(|(t, i, _)| (t, Some(i)))
    }

    fn exact_ratio(&self, i: usize, rate: S) -> Option<S> {
        let j = self.basis[i];
        if rate < S::zero() && self.lo[j].is_finite() {
            Some(((self.x[j] - self.lo[j]) / -rate).max(S::zero()))
        } else if rate > S::zero() && self.hi[j].is_finite() {
            Some(((self.hi[j] - self.x[j]) / rate).max(S::zero()))
        } else {
            None
        }
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &Array1<S>) {
        let m = self.m;
        let piv = alpha[r];
        {
            let mut row_r = self.binv.row_mut(r);
            row_r.mapv_inplace(|v| v / piv);
        }
        let row_r = self.binv.row(r).to_owned();
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = alpha[i];
            if f != S::zero() {
                let mut row_i = self.binv.row_mut(i);
                row_i.scaled_add(-f, &row_r);
            }
        }
        self.basis[r] = q;
        self.state[q] = VarState::Basic;
    }

    fn step(&mut self, phase: Phase) -> Result<StepOutcome, LpError> {
        let bland = self.iterations >= self.bland_after;
        let d = self.reduced_costs();
        let Some((q, dir)) = self.price(&d, phase, bland) else {
            return Ok(StepOutcome::Optimal);
        };
        let alpha = self.ftran(q);
        let Some((t, leave)) = self.ratio_test(q, dir, &alpha, bland) else {
            return Ok(StepOutcome::Unbounded);
        };
        for i in 0..self.m {
            let j = self.basis[i];
            self.x[j] -= dir * t * alpha[i];
        }
        self.x[q] += dir * t;
        match leave {
            None => {
                if dir > S::zero() {
                    self.x[q] = self.hi[q];
                    self.state[q] = VarState::AtUpper;
                } else {
                    self.x[q] = self.lo[q];
                    self.state[q] = VarState::AtLower;
                }
            }
            Some(r) => {
                let leaving = self.basis[r];
                let rate = -dir * alpha[r];
                if rate < S::zero() {
                    self.x[leaving] = self.lo[leaving];
                    self.state[leaving] = VarState::AtLower;
                } else {
                    self.x[leaving] = self.hi[leaving];
                    self.state[leaving] = VarState::AtUpper;
                }
                self.pivot(r, q, &alpha);
            }
        }
        self.iterations += 1;
        if self.iterations % REFACTOR_EVERY == 0 {
            self.refactor()?;
        }
        Ok(StepOutcome::Continue)
    }

    fn optimize(&mut self, phase: Phase) -> Result<StepOutcome, LpError> {
        loop {
            if self.iterations > self.max_iterations {
                return Err(LpError::NumericalFailure(format!("iteration limit {} exceeded", self.max_iterations)));
            }
            match self.step(phase)? {
                StepOutcome::Continue => {}
                done => return Ok(done),
            }
        }
    }

    /// Replaces basic artificials (at zero) by nonbasic non-artificial columns.
    fn drive_out_artificials(&mut self) {
        let ptol = self.tols.pivot_tol.max(S::lit(1e-7));
        for r in 0..self.m {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let rho = self.binv.row(r).to_owned();
            let ra = rho.dot(&self.rows);
            let mut best: Option<(usize, S)> = None;
            for j in 0..self.first_artificial {
                if self.state[j] == VarState::Basic {
                    continue;
                }
                let v = match self.columns[j] {
                    Column::Structural(c) => ra[c],
                    Column::Unit { row, sign } => {
                        if sign > 0 {
                            rho[row]
                        } else {
                            -rho[row]
                        }
                    }
                };
                if v.abs() > ptol && best.map_or(true, |(_, b)| v.abs() > b) {
                    best = Some((j, v.abs()));
                }
            }
            if let Some((q, _)) = best {
                let alpha = self.ftran(q);
                let leaving = self.basis[r];
                self.x[leaving] = S::zero();
                self.state[leaving] = VarState::AtLower;
                self.pivot(r, q, &alpha);
            }
        }
    }

    fn run(&mut self) -> Result<LpSolution<S>, LpError> {
        let n_art = self.crash();
        if n_art > 0 {
            for j in 0..self.cost.len() {
                self.cost[j] = if self.is_artificial(j) { S::one() } else { S::zero() };
            }
            match self.optimize(Phase::One)? {
                StepOutcome::Optimal => {}
                _ => return Err(LpError::NumericalFailure("phase one reported unbounded".into())),
            }
            self.refactor()?;
            let worst = (self.first_artificial..self.columns.len()).map(|j| self.x[j].abs()).fold(S::zero(), S::max);
            let scale = S::one().max(crate::scalar::max_abs(&self.rhs));
            if worst > self.tols.feas_tol * scale {
                return Ok(self.finish(LpStatus::Infeasible));
            }
            self.drive_out_artificials();
            for j in self.first_artificial..self.columns.len() {
                self.hi[j] = S::zero();
                self.lo[j] = S::zero();
                if self.state[j] != VarState::Basic {
                    self.x[j] = S::zero();
                    self.state[j] = VarState::AtLower;
                }
            }
            self.refactor()?;
        }
        for j in 0..self.cost.len() {
            self.cost[j] = if j < self.n { self.problem.objective[j] } else { S::zero() };
        }
        match self.optimize(Phase::Two)? {
            StepOutcome::Unbounded => return Ok(self.finish(LpStatus::Unbounded)),
            _ => {}
        }
        self.refactor()?;
        let sol = self.finish(LpStatus::Optimal);
        let viol = self.problem.max_violation(&sol.x);
        if viol > self.tols.feas_tol {
            return Err(LpError::NumericalFailure(format!("solution violates constraints by {viol}")));
        }
        Ok(sol)
    }

    fn finish(&self, status: LpStatus) -> LpSolution<S> {
        let mut x: Vec<S> = self.x[..self.n].to_vec();
        // Snap values that drifted within tolerance outside their bounds.
        for (j, v) in x.iter_mut().enumerate() {
            let (lo, hi) = (self.problem.lower[j], self.problem.upper[j]);
            if *v < lo && lo - *v <= self.harris_tol {
                *v = lo;
            } else if *v > hi && *v - hi <= self.harris_tol {
                *v = hi;
            }
        }
        let objective_value = crate::scalar::dot(&self.problem.objective, &x);
        LpSolution { status, x, objective_value, iterations: self.iterations }
    }
}

/// Gauss–Jordan inverse with partial pivoting.
fn invert<S: Scalar>(mut a: Array2<S>) -> Option<Array2<S>> {
    let n = a.nrows();
    let mut inv = Array2::<S>::eye(n);
    let scale = a.iter().fold(S::zero(), |m, v| m.max(v.abs())).max(S::one());
    let tiny = S::epsilon() * S::lit(1e3) * scale;
    for col in 0..n {
        let (piv_row, piv_val) =
            (col..n)
                .map(|r| (r, a[(r, col)].abs()))
                .fold((col, S::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_val <= tiny {
            return None;
        }
        if piv_row != col {
            for k in 0..n {
                a.swap((piv_row, k), (col, k));
                inv.swap((piv_row, k), (col, k));
            }
        }
        let p = a[(col, col)];
        a.row_mut(col).mapv_inplace(|v| v / p);
        inv.row_mut(col).mapv_inplace(|v| v / p);
        let a_row = a.row(col).to_owned();
        let inv_row = inv.row(col).to_owned();
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[(r, col)];
            if f != S::zero() {
                a.row_mut(r).scaled_add(-f, &a_row);
                inv.row_mut(r).scaled_add(-f, &inv_row);
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tols() -> SolverTolerances<f64> {
        SolverTolerances::default()
    }

    #[test]
    fn interval_minimum() {
        let mut p = LpProblem::<f64>::new(1);
        p.set_objective(&[1.0]);
        p.add_ge(&[1.0], 1.0);
        p.add_le(&[1.0], 3.0);
        let s = solve(&p, &tols()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_interval_is_infeasible() {
        let mut p = LpProblem::<f64>::new(1);
        p.add_le(&[1.0], 1.0);
        p.add_le(&[-1.0], -2.0);
        assert_eq!(solve(&p, &tols()).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut p = LpProblem::<f64>::new(1);
        p.set_objective(&[-1.0]);
        p.set_nonneg(0);
        assert_eq!(solve(&p, &tols()).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn feasibility_with_equality() {
        let mut p = LpProblem::<f64>::new(1);
        p.set_bounds(0, 0.0, 1.0);
        p.add_eq(&[1.0], 0.5);
        let f = solve_feasibility(&p, &tols()).unwrap();
        assert!(f.feasible);
        assert!((f.witness.unwrap()[0] - 0.5).abs() < 1e-12);

        let mut q = LpProblem::<f64>::new(1);
        q.set_bounds(0, 0.0, 1.0);
        q.add_eq(&[1.0], 2.0);
        assert!(!solve_feasibility(&q, &tols()).unwrap().feasible);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut p = LpProblem::<f64>::new(2);
        p.b_ub.push(1.0);
        assert!(matches!(solve(&p, &tols()), Err(LpError::DimensionMismatch(_))));
    }

    #[test]
    fn rejects_inverted_bounds() {
        let mut p = LpProblem::<f64>::new(1);
        p.set_bounds(0, 1.0, 0.0);
        assert!(matches!(solve(&p, &tols()), Err(LpError::InvalidData(_))));
    }

    #[test]
    fn classic_two_variable_lp() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18, x,y ≥ 0 → (2, 6), 36
        let mut p = LpProblem::<f64>::new(2);
        p.set_objective(&[-3.0, -5.0]);
        p.set_nonneg(0);
        p.set_nonneg(1);
        p.add_le(&[1.0, 0.0], 4.0);
        p.add_le(&[0.0, 2.0], 12.0);
        p.add_le(&[3.0, 2.0], 18.0);
        let s = solve(&p, &tols()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x + y s.t. x − y = 1, x + y ≥ 3 (free) → x=2, y=1
        let mut p = LpProblem::<f64>::new(2);
        p.set_objective(&[1.0, 1.0]);
        p.add_eq(&[1.0, -1.0], 1.0);
        p.add_ge(&[1.0, 1.0], 3.0);
        let s = solve(&p, &tols()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 3.0).abs() < 1e-9);
        assert!((s.x[0] - s.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut p = LpProblem::<f64>::new(2);
        p.set_objective(&[1.0, 2.0]);
        p.set_nonneg(0);
        p.set_nonneg(1);
        p.add_eq(&[1.0, 1.0], 1.0);
        p.add_eq(&[2.0, 2.0], 2.0);
        let s = solve(&p, &tols()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Classic Beale-type cycling example (degenerate at origin).
        let mut p = LpProblem::<f64>::new(4);
        p.set_objective(&[-0.75, 150.0, -0.02, 6.0]);
        for j in 0..4 {
            p.set_nonneg(j);
        }
        p.add_le(&[0.25, -60.0, -0.04, 9.0], 0.0);
        p.add_le(&[0.5, -90.0, -0.02, 3.0], 0.0);
        p.add_le(&[0.0, 0.0, 1.0, 0.0], 1.0);
        let s = solve(&p, &tols()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value + 0.05).abs() < 1e-9);
    }

    #[test]
    fn single_precision_with_relaxed_tolerances() {
        let mut p = LpProblem::<f32>::new(2);
        p.set_objective(&[-1.0, -1.0]);
        p.set_bounds(0, 0.0, 2.0);
        p.set_bounds(1, 0.0, 2.0);
        p.add_le(&[1.0, 1.0], 3.0);
        let s = solve(&p, &SolverTolerances::relaxed()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value + 3.0).abs() < 1e-5);
    }

    #[test]
    fn deterministic_repeat() {
        let mut p = LpProblem::<f64>::new(3);
        p.set_objective(&[1.0, -2.0, 0.5]);
        for j in 0..3 {
            p.set_bounds(j, -1.0, 1.0);
        }
        p.add_le(&[1.0, 1.0, 1.0], 0.5);
        p.add_eq(&[1.0, 0.0, -1.0], 0.2);
        let a = solve(&p, &tols()).unwrap();
        let b = solve(&p, &tols()).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn debug_dump_has_one_line_per_constraint() {
        let mut p = LpProblem::<f64>::new(2);
        p.add_le(&[1.0, 2.0], 3.0);
        p.add_eq(&[0.0, 1.0], 1.0);
        let mut buf = Vec::new();
        p.write_debug_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("le ")).count(), 1);
        assert_eq!(text.lines().filter(|l| l.starts_with("eq ")).count(), 1);
    }
}
