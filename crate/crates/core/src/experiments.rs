//! Solving, decision tables, emergency-probability sweeps, queries and
//! self-checks. The CLI is a thin layer over these functions.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dynamics::validate_stochastic;
use crate::error::Error;
use crate::lp::{build_bellman_lp, simplex_solve, verify_solution, LpStatus, SimplexOptions};
use crate::model::CompiledModel;
use crate::policy::{Decision, Solution};
use crate::scenario::Scenario;
use crate::state_space::{set_insert, Access, AccessSet, Action, Emergency, Request, State};
use crate::value_file::{format_real, ValueTable};
use crate::vi::{value_iterate, ViOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Lp,
    Vi,
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lp" => Ok(SolverKind::Lp),
            "vi" => Ok(SolverKind::Vi),
            other => Err(format!("unknown solver `{other}` (expected lp or vi)")),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverKind::Lp => "lp",
            SolverKind::Vi => "vi",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Solution,
    pub solver: SolverKind,
    /// Simplex pivots or value-iteration sweeps.
    pub iterations: usize,
    /// Largest Bellman constraint violation at the returned values.
    pub max_residual: f64,
    /// Largest per-state distance between the value and its best decision value.
    pub max_gap_to_bellman: f64,
}

/// Solves `sc` with the chosen method. `tol` overrides the LP feasibility
/// tolerance or the VI stopping threshold.
pub fn solve(sc: &Scenario, solver: SolverKind, tol: Option<f64>) -> Result<SolveReport, Error> {
    sc.validate()?;
    let model = CompiledModel::build(sc);
    let (values, iterations) = match solver {
        SolverKind::Lp => {
            let mut opts = SimplexOptions::default();
            if let Some(t) = tol {
                opts = opts.with_tol(t);
            }
            let sol = simplex_solve(&build_bellman_lp(&model), &opts);
            if sol.status != LpStatus::Optimal {
                return Err(Error::Solve(format!("Bellman LP ended with status {:?}", sol.status)));
            }
            (sol.values, sol.pivots)
        }
        SolverKind::Vi => {
            let mut opts = ViOptions::default();
            if let Some(t) = tol {
                opts.tol = t;
            }
            let out = value_iterate(&model, &opts)?;
            (out.values.into_inner(), out.iterations)
        }
    };
    let report = verify_solution(&model, &values);
    Ok(SolveReport {
        solution: Solution::new(sc.clone(), &model, values.into()),
        solver,
        iterations,
        max_residual: report.max_violation,
        max_gap_to_bellman: report.max_abs_slack(),
    })
}

/// Decision values of one access from the empty granted set.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRow {
    pub status: Emergency,
    pub access: Access,
    pub dv_deny: f64,
    pub dv_allow: f64,
    pub chosen: Action,
    pub gap: f64,
}

/// Rows for every status (calm first) and access (declaration order), all
/// from the empty granted set.
pub fn decision_rows(sol: &Solution) -> Vec<DecisionRow> {
    let sc = &sol.scenario;
    Emergency::ALL
        .iter()
        .flat_map(|&status| {
            sc.dims.accesses().map(move |access| {
                let d = sol.decide(&State::new(status, AccessSet::EMPTY, Request::Access(access)));
                DecisionRow { status, access, dv_deny: d.dv_deny, dv_allow: d.dv_allow, chosen: d.action, gap: d.gap }
            })
        })
        .collect()
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
}

/// Status × decision grid with one column per access, values to 2 decimals.
pub fn render_decision_table(sc: &Scenario, rows: &[DecisionRow]) -> String {
    let headers: Vec<String> =
        sc.dims.accesses().map(|a| format!("({},{})", sc.user_names[a.user], sc.resource_names[a.resource])).collect();
    let width = headers.iter().map(String::len).max().unwrap_or(0).max(9);
    let mut out = String::new();
    let _ = write!(out, "{:<8}{:<10}", "Status", "Decision");
    for h in &headers {
        let _ = write!(out, "{h:>width$}");
    }
    out.push('\n');
    for status in Emergency::ALL {
        for act in Action::ALL {
            let _ = write!(out, "{:<8}{:<10}", capitalize(status.label()), act.label());
            for r in rows.iter().filter(|r| r.status == status) {
                let v = if act == Action::Deny { r.dv_deny } else { r.dv_allow };
                // Avoid printing "-0.00".
                let v = if v.abs() < 0.005 { 0.0 } else { v };
                let _ = write!(out, "{v:>width$.2}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn decision_csv(sc: &Scenario, rows: &[DecisionRow]) -> String {
    let mut out = String::from("status,user,resource,dv_deny,dv_allow,chosen,gap\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.status,
            sc.user_names[r.access.user],
            sc.resource_names[r.access.resource],
            format_real(r.dv_deny),
            format_real(r.dv_allow),
            r.chosen,
            format_real(r.gap)
        );
    }
    out
}

/// Grid over the calm → alert probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// Emergency status of the query states.
    pub status: Emergency,
    /// Bisection stops once the bracket is narrower than this.
    pub bisection_width: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { start: 0.0, stop: 1.0, step: 0.01, status: Emergency::Calm, bisection_width: 1e-4 }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), Error> {
        let ok = 0.0 <= self.start
            && self.start <= self.stop
            && self.stop <= 1.0
            && self.step > 0.0
            && self.bisection_width > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Solve(format!(
                "invalid sweep grid: need 0 <= start <= stop <= 1 and step > 0 (got {}..{} step {})",
                self.start, self.stop, self.step
            )))
        }
    }

    /// `start, start + step, ...` up to `stop`; when the step divides the
    /// span the points are computed as exact fractions of it.
    pub fn grid(&self) -> Vec<f64> {
        let span = self.stop - self.start;
        let ratio = span / self.step;
        let n = (ratio + 1e-9).floor() as usize;
        if n > 0 && (ratio - n as f64).abs() < 1e-9 {
            (0..=n).map(|i| self.start + span * i as f64 / n as f64).collect()
        } else {
            (0..=n).map(|i| self.start + i as f64 * self.step).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverResult {
    pub status: Emergency,
    pub access: Access,
    /// Probability at which `DV(allow) − DV(deny)` changes sign, if it does.
    pub root: Option<f64>,
    pub bracket: (f64, f64),
    /// Final bracket width.
    pub tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub grid: Vec<f64>,
    /// Per grid point, per access (declaration order): `[DV(deny), DV(allow)]`.
    pub points: Vec<Vec<[f64; 2]>>,
    pub crossovers: Vec<CrossoverResult>,
}

fn query_values(sc: &Scenario, p: f64, status: Emergency, solver: SolverKind) -> Result<Vec<[f64; 2]>, Error> {
    let report = solve(&sc.with_alert_probability(p)?, solver, None)?;
    Ok(sc
        .dims
        .accesses()
        .map(|a| {
            let d = report.solution.decide(&State::new(status, AccessSet::EMPTY, Request::Access(a)));
            [d.dv_deny, d.dv_allow]
        })
        .collect())
}

/// Solves every grid point (in parallel), then locates for each access the
/// first sign change of `DV(allow) − DV(deny)` and refines it by bisection.
pub fn sweep(sc: &Scenario, spec: &SweepSpec, solver: SolverKind) -> Result<SweepResult, Error> {
    spec.validate()?;
    let grid = spec.grid();
    let points = grid.par_iter().map(|&p| query_values(sc, p, spec.status, solver)).collect::<Result<Vec<_>, _>>()?;

    let accesses: Vec<Access> = sc.dims.accesses().collect();
    let crossovers = accesses
        .par_iter()
        .enumerate()
        .map(|(k, &access)| {
            let diffs: Vec<f64> = points.iter().map(|pt| pt[k][1] - pt[k][0]).collect();
            let diff_at = |p: f64| -> Result<f64, Error> {
                let v = query_values(sc, p, spec.status, solver)?;
                Ok(v[k][1] - v[k][0])
            };
            locate_crossover(&grid, &diffs, spec.bisection_width, diff_at).map(|(root, bracket)| CrossoverResult {
                status: spec.status,
                access,
                root,
                bracket,
                tolerance: bracket.1 - bracket.0,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(SweepResult { spec: *spec, grid, points, crossovers })
}

/// First sign change of sampled `diffs` over `grid`, refined by bisection
/// with `f` until the bracket is at most `width` wide.
pub fn locate_crossover<F>(
    grid: &[f64],
    diffs: &[f64],
    width: f64,
    mut f: F,
) -> Result<(Option<f64>, (f64, f64)), Error>
where
    F: FnMut(f64) -> Result<f64, Error>,
{
    const ZERO: f64 = 1e-12;
    for i in 0..grid.len() {
        if diffs[i].abs() <= ZERO {
            return Ok((Some(grid[i]), (grid[i], grid[i])));
        }
        if i + 1 < grid.len() && diffs[i].signum() != diffs[i + 1].signum() && diffs[i + 1].abs() > ZERO {
            let (mut lo, mut hi) = (grid[i], grid[i + 1]);
            let mut f_lo = diffs[i];
            while hi - lo > width {
                let mid = 0.5 * (lo + hi);
                let f_mid = f(mid)?;
                if f_mid.abs() <= ZERO {
                    return Ok((Some(mid), (mid, mid)));
                }
                if f_mid.signum() == f_lo.signum() {
                    lo = mid;
                    f_lo = f_mid;
                } else {
                    hi = mid;
                }
            }
            return Ok((Some(0.5 * (lo + hi)), (lo, hi)));
        }
    }
    let bracket = (grid.first().copied().unwrap_or(0.0), grid.last().copied().unwrap_or(0.0));
    Ok((None, bracket))
}

/// `probability,dv_<user>_<resource>_<action>...`, deny before allow.
pub fn sweep_csv(sc: &Scenario, result: &SweepResult) -> String {
    let mut out = String::from("probability");
    for a in sc.dims.accesses() {
        for act in Action::ALL {
            let _ = write!(out, ",dv_{}_{}_{}", sc.user_names[a.user], sc.resource_names[a.resource], act);
        }
    }
    out.push('\n');
    for (p, row) in result.grid.iter().zip(&result.points) {
        out.push_str(&format_real(*p));
        for dv in row {
            let _ = write!(out, ",{},{}", format_real(dv[0]), format_real(dv[1]));
        }
        out.push('\n');
    }
    out
}

pub fn crossover_report(sc: &Scenario, result: &SweepResult) -> String {
    let mut out = String::new();
    for c in &result.crossovers {
        let label = format!("{} ({},{})", c.status, sc.user_names[c.access.user], sc.resource_names[c.access.resource]);
        match c.root {
            Some(root) => {
                let _ = writeln!(
                    out,
                    "{label}: crossover at {root:.4} (bracket [{:.6}, {:.6}], width {:.1e})",
                    c.bracket.0, c.bracket.1, c.tolerance
                );
            }
            None => {
                let _ = writeln!(out, "{label}: no crossover in [{}, {}]", c.bracket.0, c.bracket.1);
            }
        }
    }
    out
}

/// Parses a granted-set spec: a decimal set index, `none`/`-` for the
/// empty set, or `user:resource` pairs joined by `+`.
pub fn parse_granted(table: &ValueTable, spec: &str) -> Result<AccessSet, String> {
    let spec = spec.trim();
    if spec.is_empty() || spec == "none" || spec == "-" {
        return Ok(AccessSet::EMPTY);
    }
    if let Ok(k) = spec.parse::<u64>() {
        return if table.dims.contains_set(AccessSet(k)) {
            Ok(AccessSet(k))
        } else {
            Err(format!("set index {k} out of range"))
        };
    }
    let mut k = AccessSet::EMPTY;
    for pair in spec.split('+') {
        let access = parse_access(table, pair)?;
        k = set_insert(k, access, &table.dims);
    }
    Ok(k)
}

/// `user:resource`.
pub fn parse_access(table: &ValueTable, pair: &str) -> Result<Access, String> {
    let (u, r) = pair.trim().split_once(':').ok_or_else(|| format!("expected `user:resource`, got `{pair}`"))?;
    let user = table.user_index(u).ok_or_else(|| format!("unknown user `{u}`"))?;
    let resource = table.resource_index(r).ok_or_else(|| format!("unknown resource `{r}`"))?;
    Ok(Access { user, resource })
}

/// `eps` or `user:resource`.
pub fn parse_request(table: &ValueTable, spec: &str) -> Result<Request, String> {
    if spec.trim() == "eps" {
        Ok(Request::Empty)
    } else {
        parse_access(table, spec).map(Request::Access)
    }
}

pub fn evaluate(table: &ValueTable, state: &State) -> Result<Decision, String> {
    table.decide(state).ok_or_else(|| "state not found in value table".to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfCheckReport {
    pub checks: Vec<CheckOutcome>,
}

impl SelfCheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| !c.passed)
    }
}

pub const SELFCHECK_FEASIBILITY: f64 = 1e-9;
pub const SELFCHECK_TIGHTNESS: f64 = 1e-7;
pub const SELFCHECK_AGREEMENT: f64 = 1e-6;
pub const SELFCHECK_GAP: f64 = 1e-5;

/// Stochasticity, LP and VI solves, LP optimality structure, LP-vs-VI
/// agreement and policy agreement. Stops after the first failing check
/// whose successors depend on it.
pub fn selfcheck(sc: &Scenario) -> SelfCheckReport {
    let mut checks = Vec::new();
    let mut push = |name, passed, detail: String| checks.push(CheckOutcome { name, passed, detail });

    match validate_stochastic(&sc.transition_model()) {
        Ok(()) => push("stochastic", true, "every successor distribution sums to 1".into()),
        Err(v) => {
            let first = &v[0];
            push(
                "stochastic",
                false,
                format!(
                    "{} state-action pairs violate stochasticity (first: {:?} {} has mass {})",
                    v.len(),
                    first.state,
                    first.action,
                    first.total
                ),
            );
            return SelfCheckReport { checks };
        }
    }
    if let Err(e) = sc.validate() {
        push("scenario", false, e.to_string());
        return SelfCheckReport { checks };
    }

    let model = CompiledModel::build(sc);
    let lp = simplex_solve(&build_bellman_lp(&model), &SimplexOptions::default());
    if lp.status != LpStatus::Optimal {
        push("lp_solve", false, format!("status {:?}", lp.status));
        return SelfCheckReport { checks };
    }
    push("lp_solve", true, format!("optimal after {} pivots", lp.pivots));

    let vi = match value_iterate(&model, &ViOptions::default()) {
        Ok(v) => {
            push("vi_solve", true, format!("converged in {} iterations", v.iterations));
            v
        }
        Err(e) => {
            push("vi_solve", false, e.to_string());
            return SelfCheckReport { checks };
        }
    };

    let report = verify_solution(&model, &lp.values);
    push("lp_feasible", report.feasible(SELFCHECK_FEASIBILITY), format!("max violation {:.3e}", report.max_violation));
    let loose = report.loose_states(SELFCHECK_TIGHTNESS);
    push("lp_tight", loose.is_empty(), format!("{} states without a tight constraint", loose.len()));

    let dist = vi.values.sup_distance(&lp.values);
    push("lp_vs_vi", dist <= SELFCHECK_AGREEMENT, format!("sup-norm distance {dist:.3e}"));

    let lp_sol = Solution::new(sc.clone(), &model, lp.values.into());
    let vi_sol = Solution::new(sc.clone(), &model, vi.values);
    let disagreements = (0..model.num_states())
        .filter(|&i| {
            let confident = lp_sol.policy.gap(i) > SELFCHECK_GAP || vi_sol.policy.gap(i) > SELFCHECK_GAP;
            confident && lp_sol.policy.action(i) != vi_sol.policy.action(i)
        })
        .count();
    push("policy_agreement", disagreements == 0, format!("{disagreements} confident states with differing actions"));
    SelfCheckReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::builtin_scenario;

    #[test]
    fn default_grid_is_exact() {
        let grid = SweepSpec::default().grid();
        assert_eq!(grid.len(), 101);
        assert_eq!(grid[0], 0.0);
        assert_eq!(grid[10], 0.1);
        assert_eq!(grid[100], 1.0);
        let uneven = SweepSpec { stop: 0.25, step: 0.1, ..SweepSpec::default() };
        assert_eq!(uneven.grid().len(), 3);
        assert!(SweepSpec { step: 0.0, ..SweepSpec::default() }.validate().is_err());
        assert!(SweepSpec { stop: 1.5, ..SweepSpec::default() }.validate().is_err());
    }

    #[test]
    fn bisection_on_a_line() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let f = |x: f64| 0.37 - x;
        let diffs: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        let (root, (lo, hi)) = locate_crossover(&grid, &diffs, 1e-6, |x| Ok(f(x))).unwrap();
        assert!((root.unwrap() - 0.37).abs() < 1e-6);
        assert!(lo <= 0.37 && 0.37 <= hi && hi - lo <= 1e-6);
    }

    #[test]
    fn crossover_on_a_grid_point_and_none() {
        let grid = [0.0, 0.5, 1.0];
        let (root, _) = locate_crossover(&grid, &[-1.0, 0.0, 1.0], 1e-4, |_| unreachable!()).unwrap();
        assert_eq!(root, Some(0.5));
        let (root, bracket) = locate_crossover(&grid, &[1.0, 2.0, 3.0], 1e-4, |_| unreachable!()).unwrap();
        assert_eq!((root, bracket), (None, (0.0, 1.0)));
    }

    #[test]
    fn unique_crossover_is_one_half() {
        let sc = builtin_scenario("table2_unique").unwrap();
        let spec = SweepSpec { start: 0.4, stop: 0.6, step: 0.05, ..SweepSpec::default() };
        let result = sweep(&sc, &spec, SolverKind::Vi).unwrap();
        let bob_high = sc.access_by_name("bob", "high").unwrap();
        let c = result.crossovers.iter().find(|c| c.access == bob_high).unwrap();
        assert!((c.root.unwrap() - 0.5).abs() < 1e-3);
        let alice_low = sc.access_by_name("alice", "low").unwrap();
        assert!(result.crossovers.iter().find(|c| c.access == alice_low).unwrap().root.is_none());
    }

    #[test]
    fn solver_names() {
        assert_eq!("lp".parse::<SolverKind>().unwrap(), SolverKind::Lp);
        assert_eq!("vi".parse::<SolverKind>().unwrap().to_string(), "vi");
        assert!("simplex".parse::<SolverKind>().is_err());
    }

    #[test]
    fn granted_set_specs() {
        let sol = solve(&builtin_scenario("table1").unwrap(), SolverKind::Vi, None).unwrap().solution;
        let table = ValueTable::from_solution(&sol);
        assert_eq!(parse_granted(&table, "none").unwrap(), AccessSet::EMPTY);
        assert_eq!(parse_granted(&table, "5").unwrap(), AccessSet(5));
        assert_eq!(parse_granted(&table, "alice:high+bob:high").unwrap(), AccessSet(0b0101));
        assert!(parse_granted(&table, "16").is_err());
        assert!(parse_granted(&table, "alice").is_err());
        assert_eq!(parse_request(&table, "eps").unwrap(), Request::Empty);
    }

    #[test]
    fn selfcheck_stops_at_stochasticity() {
        let mut sc = builtin_scenario("table2_once").unwrap();
        sc.emergency = crate::dynamics::EmergencyMatrix::new_unchecked([[0.7, 0.1], [0.0, 1.0]]);
        let report = selfcheck(&sc);
        assert!(!report.passed());
        assert_eq!(report.first_failure().unwrap().name, "stochastic");
        assert_eq!(report.checks.len(), 1);
    }
}
