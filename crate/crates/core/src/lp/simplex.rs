//! Dense two-phase primal simplex over free variables.
//!
//! Each free variable `x` is split into `x⁺ − x⁻` with both parts
//! non-negative; `≥` and `≤` rows get a surplus or slack column. Rows are
//! sign-normalized so the right-hand side is non-negative, and a row whose
//! slack column then has coefficient `+1` starts with that slack in the
//! basis. The remaining rows get an artificial variable, and phase one
//! minimizes their sum.

use std::fmt;

/// Constraint relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Le,
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Ge => ">=",
            Relation::Le => "<=",
            Relation::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sparse `(variable, coefficient)` pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Self {
        Self { coeffs, relation, rhs }
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the constraint (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// `minimize objective · x` subject to the constraints, all variables free.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { num_vars: objective.len(), objective, constraints: Vec::new() }
    }

    pub fn add(&mut self, c: Constraint) {
        debug_assert!(c.coeffs.iter().all(|&(j, _)| j < self.num_vars));
        self.constraints.push(c);
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.constraints.iter().map(|c| c.violation(x)).fold(0.0, f64::max)
    }

    pub fn is_well_formed(&self) -> bool {
        self.objective.len() == self.num_vars
            && self
                .constraints
                .iter()
                .all(|c| c.rhs.is_finite() && c.coeffs.iter().all(|&(j, a)| j < self.num_vars && a.is_finite()))
    }
}

/// Plain-text listing: an objective line, then one constraint per line.
///
/// ```text
/// min: 1 x0 + 1 x1
/// c0: 1 x0 >= 1
/// c1: 1 x0 - 1 x1 >= 4
/// ```
impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn terms(f: &mut fmt::Formatter<'_>, coeffs: impl Iterator<Item = (usize, f64)>) -> fmt::Result {
            let mut first = true;
            for (j, a) in coeffs {
                if first {
                    write!(f, "{a} x{j}")?;
                    first = false;
                } else if a < 0.0 {
                    write!(f, " - {} x{j}", -a)?;
                } else {
                    write!(f, " + {a} x{j}")?;
                }
            }
            if first {
                write!(f, "0")?;
            }
            Ok(())
        }
        write!(f, "min: ")?;
        terms(f, self.objective.iter().copied().enumerate().filter(|(_, c)| *c != 0.0))?;
        writeln!(f)?;
        for (i, c) in self.constraints.iter().enumerate() {
            write!(f, "c{i}: ")?;
            terms(f, c.coeffs.iter().copied())?;
            writeln!(f, " {} {}", c.relation, c.rhs)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// One value per variable; meaningful only when `status` is optimal.
    pub values: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

/// Entering-column rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    /// Smallest eligible index enters, smallest basic index leaves on ties.
    Bland,
    /// Most negative reduced cost enters; switches to Bland after a run of
    /// degenerate pivots so that cycling cannot occur.
    DantzigBlandFallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub pivot_tol: f64,
    pub feas_tol: f64,
    /// Defaults to `100 · (rows + cols)` of the standard-form tableau.
    pub max_pivots: Option<usize>,
    pub rule: PivotRule,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { pivot_tol: 1e-10, feas_tol: 1e-9, max_pivots: None, rule: PivotRule::Bland }
    }
}

impl SimplexOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.feas_tol = tol;
        self
    }
}

const DEGENERATE_RUN_LIMIT: usize = 50;

type StandardRow = (Vec<(usize, f64)>, f64, Option<usize>);

struct Tableau {
    width: usize,
    /// `rows × width`, last column is the right-hand side.
    data: Vec<f64>,
    /// Reduced-cost row; last entry is minus the objective value.
    cost: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let inv = 1.0 / self.data[r * w + c];
        let pivot_row: Vec<f64> = {
            let row = &mut self.data[r * w..(r + 1) * w];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[c] = 1.0;
            row.to_vec()
        };
        let nonzero: Vec<usize> = (0..w).filter(|&j| pivot_row[j] != 0.0).collect();
        for i in 0..self.basis.len() {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[i * w..(i + 1) * w];
            for &j in &nonzero {
                row[j] -= f * pivot_row[j];
            }
            row[c] = 0.0;
        }
        let f = self.cost[c];
        if f != 0.0 {
            for &j in &nonzero {
                self.cost[j] -= f * pivot_row[j];
            }
            self.cost[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Recomputes the reduced-cost row for column costs `c` (length `width - 1`).
    fn price(&mut self, c: &[f64]) {
        let w = self.width;
        self.cost = c.to_vec();
        self.cost.push(0.0);
        for i in 0..self.rows() {
            let cb = c[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            for j in 0..w {
                self.cost[j] -= cb * self.data[i * w + j];
            }
        }
    }
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Runner {
    opts: SimplexOptions,
    pivots: usize,
    max_pivots: usize,
}

impl Runner {
    /// Runs simplex iterations on columns `0..eligible`.
    fn run(&mut self, t: &mut Tableau, eligible: usize) -> PhaseOutcome {
        let mut degenerate_run = 0usize;
        loop {
            let bland = match self.opts.rule {
                PivotRule::Bland => true,
                PivotRule::DantzigBlandFallback => degenerate_run >= DEGENERATE_RUN_LIMIT,
            };
            let entering = if bland {
                (0..eligible).find(|&j| t.cost[j] < -self.opts.feas_tol)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..eligible {
                    let d = t.cost[j];
                    if d < -self.opts.feas_tol && best.is_none_or(|(_, b)| d < b) {
                        best = Some((j, d));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(c) = entering else {
                return PhaseOutcome::Optimal;
            };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..t.rows() {
                let a = t.row(i)[c];
                if a <= self.opts.pivot_tol {
                    continue;
                }
                let ratio = t.rhs(i).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - 1e-12 || (ratio <= br + 1e-12 && t.basis[i] < t.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            let Some((r, ratio)) = leave else {
                return PhaseOutcome::Unbounded;
            };
            if self.pivots >= self.max_pivots {
                return PhaseOutcome::IterationLimit;
            }
            if ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            t.pivot(r, c);
            self.pivots += 1;
        }
    }
}

/// Solves `lp` to optimality or reports why it could not.
pub fn simplex_solve(lp: &LinearProgram, opts: &SimplexOptions) -> LpSolution {
    assert!(lp.is_well_formed(), "malformed linear program");
    let n = lp.num_vars;
    let m = lp.constraints.len();
    let slack_count = lp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();

    // Column layout: x⁺ (n) | x⁻ (n) | slacks | artificials | rhs.
    let slack_start = 2 * n;
    let art_start = slack_start + slack_count;

    // Sparse coefficients, rhs, and the slack column that can start basic.
    let mut rows: Vec<StandardRow> = Vec::with_capacity(m);
    let mut slack_col = slack_start;
    for c in &lp.constraints {
        let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(2 * c.coeffs.len() + 1);
        for &(j, a) in &c.coeffs {
            coeffs.push((j, a));
            coeffs.push((n + j, -a));
        }
        let mut slack_sign = 0.0;
        match c.relation {
            Relation::Ge => slack_sign = -1.0,
            Relation::Le => slack_sign = 1.0,
            Relation::Eq => {}
        }
        let slack = (slack_sign != 0.0).then(|| {
            coeffs.push((slack_col, slack_sign));
            slack_col += 1;
            slack_col - 1
        });
        let mut rhs = c.rhs;
        if rhs < 0.0 || (rhs == 0.0 && slack_sign < 0.0) {
            rhs = -rhs;
            slack_sign = -slack_sign;
            for e in &mut coeffs {
                e.1 = -e.1;
            }
        }
        let basic_slack = slack.filter(|_| slack_sign > 0.0);
        rows.push((coeffs, rhs, basic_slack));
    }
    let art_count = rows.iter().filter(|r| r.2.is_none()).count();
    let width = art_start + art_count + 1;

    let mut data = vec![0.0; m * width];
    let mut basis = Vec::with_capacity(m);
    let mut art_col = art_start;
    for (i, (coeffs, rhs, basic_slack)) in rows.iter().enumerate() {
        let row = &mut data[i * width..(i + 1) * width];
        for &(j, a) in coeffs {
            row[j] += a;
        }
        row[width - 1] = *rhs;
        match basic_slack {
            Some(s) => basis.push(*s),
            None => {
                row[art_col] = 1.0;
                basis.push(art_col);
                art_col += 1;
            }
        }
    }

    let mut t = Tableau { width, data, cost: Vec::new(), basis };
    let mut runner = Runner { opts: *opts, pivots: 0, max_pivots: opts.max_pivots.unwrap_or(100 * (m + width - 1)) };
    let failed =
        |status: LpStatus, pivots: usize| LpSolution { status, values: vec![0.0; n], objective: f64::NAN, pivots };

    if art_count > 0 {
        let mut phase1_cost = vec![0.0; width - 1];
        for c in phase1_cost.iter_mut().skip(art_start) {
            *c = 1.0;
        }
        t.price(&phase1_cost);
        match runner.run(&mut t, width - 1) {
            PhaseOutcome::Optimal => {}
            // Phase one is bounded below by zero.
            PhaseOutcome::Unbounded => unreachable!("phase one cannot be unbounded"),
            PhaseOutcome::IterationLimit => return failed(LpStatus::IterationLimit, runner.pivots),
        }
        let infeasibility = -t.cost[width - 1];
        let scale = 1.0 + rows.iter().map(|r| r.1).fold(0.0, f64::max);
        if infeasibility > opts.feas_tol * scale {
            return failed(LpStatus::Infeasible, runner.pivots);
        }
        // Drive zero-level artificials out of the basis; rows where that is
        // impossible are redundant and dropped.
        let mut redundant = Vec::new();
        for i in 0..t.rows() {
            if t.basis[i] < art_start {
                continue;
            }
            let col = (0..art_start).find(|&j| t.row(i)[j].abs() > opts.pivot_tol);
            match col {
                Some(j) => {
                    t.pivot(i, j);
                    runner.pivots += 1;
                }
                None => redundant.push(i),
            }
        }
        // Rebuild without artificial columns and redundant rows.
        let new_width = art_start + 1;
        let mut data = Vec::with_capacity((t.rows() - redundant.len()) * new_width);
        let mut basis = Vec::with_capacity(t.rows());
        for i in 0..t.rows() {
            if redundant.contains(&i) {
                continue;
            }
            let row = t.row(i);
            data.extend_from_slice(&row[..art_start]);
            data.push(row[width - 1]);
            basis.push(t.basis[i]);
        }
        t = Tableau { width: new_width, data, cost: Vec::new(), basis };
    }

    let mut cost = vec![0.0; t.width - 1];
    for (j, &c) in lp.objective.iter().enumerate() {
        cost[j] = c;
        cost[n + j] = -c;
    }
    t.price(&cost);
    match runner.run(&mut t, art_start) {
        PhaseOutcome::Optimal => {}
        PhaseOutcome::Unbounded => return failed(LpStatus::Unbounded, runner.pivots),
        PhaseOutcome::IterationLimit => return failed(LpStatus::IterationLimit, runner.pivots),
    }

    let mut column_values = vec![0.0; art_start];
    for (i, &b) in t.basis.iter().enumerate() {
        column_values[b] = t.rhs(i);
    }
    let values: Vec<f64> = (0..n).map(|j| column_values[j] - column_values[n + j]).collect();
    LpSolution { status: LpStatus::Optimal, objective: lp.objective_value(&values), values, pivots: runner.pivots }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ge(coeffs: &[(usize, f64)], rhs: f64) -> Constraint {
        Constraint::new(coeffs.to_vec(), Relation::Ge, rhs)
    }

    fn both_rules() -> [SimplexOptions; 2] {
        [SimplexOptions::default(), SimplexOptions { rule: PivotRule::DantzigBlandFallback, ..Default::default() }]
    }

    #[test]
    fn single_bound() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add(ge(&[(0, 1.0)], 5.0));
        for opts in both_rules() {
            let sol = simplex_solve(&lp, &opts);
            assert_eq!(sol.status, LpStatus::Optimal);
            assert!((sol.values[0] - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_variable_free_lp() {
        // min x + y  s.t. x ≥ 1, y ≥ −2, x − y ≥ 4  →  (2, −2).
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.add(ge(&[(0, 1.0)], 1.0));
        lp.add(ge(&[(1, 1.0)], -2.0));
        lp.add(ge(&[(0, 1.0), (1, -1.0)], 4.0));
        for opts in both_rules() {
            let sol = simplex_solve(&lp, &opts);
            assert_eq!(sol.status, LpStatus::Optimal);
            assert!((sol.values[0] - 2.0).abs() < 1e-12, "{:?}", sol.values);
            assert!((sol.values[1] + 2.0).abs() < 1e-12);
            assert!((sol.objective - 0.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unbounded_and_infeasible() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add(ge(&[(0, 1.0)], -3.0));
        lp.add(Constraint::new(vec![(0, 1.0)], Relation::Le, 10.0));
        assert_eq!(simplex_solve(&lp, &SimplexOptions::default()).status, LpStatus::Optimal);

        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add(Constraint::new(vec![(0, 1.0)], Relation::Le, 10.0));
        assert_eq!(simplex_solve(&lp, &SimplexOptions::default()).status, LpStatus::Unbounded);

        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add(ge(&[(0, 1.0)], 3.0));
        lp.add(Constraint::new(vec![(0, 1.0)], Relation::Le, 1.0));
        assert_eq!(simplex_solve(&lp, &SimplexOptions::default()).status, LpStatus::Infeasible);
    }

    #[test]
    fn equality_and_redundant_rows() {
        // x + y = 2 twice, x − y ≤ 0, min −x  →  x = y = 1.
        let mut lp = LinearProgram::new(vec![-1.0, 0.0]);
        lp.add(Constraint::new(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 2.0));
        lp.add(Constraint::new(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 2.0));
        lp.add(Constraint::new(vec![(0, 1.0), (1, -1.0)], Relation::Le, 0.0));
        for opts in both_rules() {
            let sol = simplex_solve(&lp, &opts);
            assert_eq!(sol.status, LpStatus::Optimal);
            assert!((sol.values[0] - 1.0).abs() < 1e-12 && (sol.values[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn iteration_limit() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.add(ge(&[(0, 1.0)], 1.0));
        lp.add(ge(&[(1, 1.0)], 1.0));
        let opts = SimplexOptions { max_pivots: Some(0), ..Default::default() };
        assert_eq!(simplex_solve(&lp, &opts).status, LpStatus::IterationLimit);
    }

    /// Brute force over every pair of tight constraints of a small 2-D LP.
    #[test]
    fn matches_vertex_enumeration() {
        let rows = [([1.0, 2.0], 2.0), ([3.0, 1.0], 3.0), ([1.0, -1.0], -4.0), ([-1.0, 1.0], -6.0), ([0.5, 1.0], 0.5)];
        let objective = [2.0, 3.0];
        let mut lp = LinearProgram::new(objective.to_vec());
        for (a, b) in rows {
            lp.add(ge(&[(0, a[0]), (1, a[1])], b));
        }
        let mut best = f64::INFINITY;
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let (a, b) = (rows[i], rows[j]);
                let det = a.0[0] * b.0[1] - a.0[1] * b.0[0];
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = (a.1 * b.0[1] - a.0[1] * b.1) / det;
                let y = (a.0[0] * b.1 - a.1 * b.0[0]) / det;
                if lp.max_violation(&[x, y]) < 1e-9 {
                    best = best.min(objective[0] * x + objective[1] * y);
                }
            }
        }
        for opts in both_rules() {
            let sol = simplex_solve(&lp, &opts);
            assert_eq!(sol.status, LpStatus::Optimal);
            assert!((sol.objective - best).abs() < 1e-9, "{} vs {best}", sol.objective);
        }
    }

    #[test]
    fn listing_format() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.add(ge(&[(0, 1.0), (1, -1.0)], 4.0));
        assert_eq!(lp.to_string(), "min: 1 x0 + 1 x1\nc0: 1 x0 - 1 x1 >= 4\n");
    }
}
