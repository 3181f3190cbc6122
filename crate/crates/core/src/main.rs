use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use acmdp::experiments::{
    crossover_report, decision_csv, decision_rows, evaluate, parse_granted, parse_request, render_decision_table,
    selfcheck, solve, sweep, sweep_csv, SolverKind, SweepSpec,
};
use acmdp::value_file::{export_values, import_values, ValueTable};
use acmdp::{builtin_scenario, Action, Emergency, Scenario, ScenarioSource, State, BUILTIN_NAMES};

/// Exit status for errors; `eval` reserves 0 and 1 for allow and deny.
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "acmdp", version, about = "Access control MDP solver and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write its value table.
    Solve {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solver: SolverArgs,
        /// Value-table output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the Bellman LP listing here.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Print decision values from the empty granted set.
    Decisions {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solver: SolverArgs,
        /// CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the calm -> alert probability and locate policy crossovers.
    Sweep {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        #[arg(long, default_value_t = 1.0)]
        stop: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Emergency status of the queried states.
        #[arg(long, default_value = "calm")]
        status: String,
        /// CSV output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Answer a query from a value table. Exit code 0 = allow, 1 = deny.
    Eval {
        /// Value table written by `solve`.
        #[arg(long)]
        values: PathBuf,
        #[arg(long, default_value = "calm")]
        status: String,
        /// Granted set: index, `none`, or `user:resource+user:resource`.
        #[arg(long, default_value = "none")]
        granted: String,
        /// Pending request: `user:resource` or `eps`.
        #[arg(long)]
        request: String,
    },
    /// Cross-check the LP and value-iteration solvers.
    Selfcheck {
        /// Scenario file; every builtin is checked when neither this nor
        /// --builtin is given.
        #[arg(long, conflicts_with = "builtin")]
        scenario: Option<PathBuf>,
        #[arg(long)]
        builtin: Option<String>,
    },
}

#[derive(Args)]
struct Input {
    /// Scenario file.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    scenario: Option<PathBuf>,
    /// Builtin scenario name.
    #[arg(long)]
    builtin: Option<String>,
}

#[derive(Args)]
struct SolverArgs {
    /// lp or vi.
    #[arg(long, default_value = "lp")]
    solver: SolverKind,
    /// LP feasibility tolerance or VI stopping threshold.
    #[arg(long)]
    tol: Option<f64>,
}

fn load(scenario: &Option<PathBuf>, builtin: &Option<String>) -> Result<Scenario, String> {
    match (scenario, builtin) {
        (Some(path), _) => {
            let source = ScenarioSource::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
            source.parse().map_err(|e| format!("{}: {e}", source.provenance))
        }
        (None, Some(name)) => builtin_scenario(name).map_err(|e| e.to_string()),
        (None, None) => Err("one of --scenario or --builtin is required".into()),
    }
}

fn write_output(path: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn status_arg(s: &str) -> Result<Emergency, String> {
    Emergency::from_label(s).ok_or_else(|| format!("unknown status `{s}` (expected calm or alert)"))
}

fn run(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Solve { input, solver, out, dump_lp } => {
            let sc = load(&input.scenario, &input.builtin)?;
            if let Some(path) = &dump_lp {
                let lp = acmdp::lp::build_bellman_lp(&acmdp::CompiledModel::build(&sc));
                std::fs::write(path, lp.to_string()).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            let report = solve(&sc, solver.solver, solver.tol).map_err(|e| e.to_string())?;
            let unit = match solver.solver {
                SolverKind::Lp => "pivots",
                SolverKind::Vi => "iterations",
            };
            eprintln!("states: {}", sc.dims.num_states());
            eprintln!("{unit}: {}", report.iterations);
            eprintln!("max residual: {:.3e}", report.max_residual);
            write_output(&out, &export_values(&ValueTable::from_solution(&report.solution)))?;
            Ok(0)
        }
        Command::Decisions { input, solver, out } => {
            let sc = load(&input.scenario, &input.builtin)?;
            let report = solve(&sc, solver.solver, solver.tol).map_err(|e| e.to_string())?;
            let rows = decision_rows(&report.solution);
            print!("{}", render_decision_table(&sc, &rows));
            if out.is_some() {
                write_output(&out, &decision_csv(&sc, &rows))?;
            }
            Ok(0)
        }
        Command::Sweep { input, solver, start, stop, step, status, out } => {
            let sc = load(&input.scenario, &input.builtin)?;
            let spec = SweepSpec { start, stop, step, status: status_arg(&status)?, ..SweepSpec::default() };
            let result = sweep(&sc, &spec, solver.solver).map_err(|e| e.to_string())?;
            write_output(&out, &sweep_csv(&sc, &result))?;
            eprint!("{}", crossover_report(&sc, &result));
            Ok(0)
        }
        Command::Eval { values, status, granted, request } => {
            let text = std::fs::read_to_string(&values).map_err(|e| format!("{}: {e}", values.display()))?;
            let table = import_values(&text).map_err(|e| format!("{}: {e}", values.display()))?;
            let state =
                State::new(status_arg(&status)?, parse_granted(&table, &granted)?, parse_request(&table, &request)?);
            let d = evaluate(&table, &state)?;
            println!("decision: {}", d.action);
            println!("dv_deny: {}", d.dv_deny);
            println!("dv_allow: {}", d.dv_allow);
            println!("gap: {}", d.gap);
            Ok(if d.action == Action::Allow { 0 } else { 1 })
        }
        Command::Selfcheck { scenario, builtin } => {
            let targets: Vec<(String, Result<Scenario, String>)> = match (&scenario, &builtin) {
                (None, None) => BUILTIN_NAMES
                    .iter()
                    .map(|n| (n.to_string(), builtin_scenario(n).map_err(|e| e.to_string())))
                    .collect(),
                (Some(p), _) => vec![(p.display().to_string(), load(&scenario, &None))],
                (None, Some(n)) => vec![(n.clone(), load(&None, &builtin))],
            };
            let mut ok = true;
            for (name, sc) in targets {
                let sc = match sc {
                    Ok(sc) => sc,
                    Err(e) => {
                        println!("{name}: FAIL scenario: {e}");
                        ok = false;
                        continue;
                    }
                };
                let report = selfcheck(&sc);
                for c in &report.checks {
                    println!("{name}: {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
                }
                if let Some(f) = report.first_failure() {
                    eprintln!("{name}: first failing check: {}", f.name);
                    ok = false;
                }
            }
            Ok(if ok { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
