//! `tsim`: simulate and check timed binary circuits from the command line.
//!
//! Exit status: 0 when every check passed, 1 when something was refuted or a
//! counterexample was found, 2 on usage or parse errors, 3 when an event
//! budget ran out.

mod repro;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use tsim::delay_class::{bd_bound, espf_prime, espf_sweep, wm_demo, DelayClassDecl, SettlingResult};
use tsim::faults::{check_f_tolerant, check_implements, FaultType, InputFamily, TrialPlan};
use tsim::gallery;
use tsim::modules::reference::{AdderSpec, OscEnSpec, OscSpec, Spec, TmrAdderSpec, WmSpec};
use tsim::netlist::Netlist;
use tsim::signal::parse_signal_file;
use tsim::sim::{all_feasible, check_feasible, simulate, Override, SimConfig, SimInit, Window, DEFAULT_BUDGET};
use tsim::stabilization::{
    check_stabilizing, find_counterexample, forgetful_bound, test_forgetful, verify_mem_osc_lemma, ForgetPlan, ForgetfulnessDecl,
    InitFamily, LemmaPlan, StabPlan,
};
use tsim::strategy::{AdversaryStrategy, Policy};
use tsim::{AnalysisError, Execution, Interval, NetlistError, Signal, Time};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "tsim", version, about = "Exact-time simulation and checking of binary circuits")]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for trial sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Maximum number of simulated instants per run.
    #[arg(long = "budget-events", global = true, default_value_t = DEFAULT_BUDGET)]
    budget_events: usize,
    /// Output format for traces and tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpecName {
    Osc,
    OscEn,
    Wm,
    Adder,
    TmrAdder,
}

#[derive(Args)]
struct SpecArgs {
    /// Target specification.
    #[arg(long)]
    spec: SpecName,
    /// High time of the oscillation.
    #[arg(long = "T", value_parser = parse_time)]
    t: Option<Time>,
    /// Delay parameter of the specification.
    #[arg(long, value_parser = parse_time)]
    d: Option<Time>,
}

#[derive(Args)]
struct InputArgs {
    /// Signal file with one block per exported input; random inputs otherwise.
    #[arg(long)]
    inputs: Option<PathBuf>,
    /// Most transitions per random input signal.
    #[arg(long, default_value_t = 8)]
    max_transitions: usize,
    /// Random input transitions fall on multiples of 1/grid.
    #[arg(long, default_value_t = 4)]
    grid: i64,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a netlist and report its structure.
    Validate {
        #[arg(long)]
        netlist: String,
    },
    /// Build one execution and write it as a trace.
    Simulate {
        #[arg(long)]
        netlist: String,
        #[arg(long, value_parser = parse_range)]
        horizon: Interval,
        /// Signal file with one block per exported input.
        #[arg(long)]
        inputs: Option<PathBuf>,
        /// JSON file with channel and memory-cell start state.
        #[arg(long)]
        init: Option<PathBuf>,
        /// Signal file whose blocks force nets on closed-open windows.
        #[arg(long)]
        overrides: Option<PathBuf>,
        #[arg(long, value_parser = parse_policy, default_value = "uniform")]
        policy: Policy,
        /// Ports to write (default: exported inputs and outputs).
        #[arg(long, value_delimiter = ',')]
        ports: Vec<String>,
        /// Write every net, not only exported ports.
        #[arg(long)]
        all_nets: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write gnuplot step data here.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Judge every submodule of a recorded execution on an interval.
    Feasible {
        #[arg(long)]
        netlist: String,
        /// Execution in JSON form, as written by `simulate --format json --all-nets`.
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_parser = parse_range)]
        interval: Interval,
        /// Judge each submodule from one memory span before the interval.
        #[arg(long)]
        lookback: bool,
    },
    /// Sample executions and judge them against a specification.
    Check {
        #[arg(long)]
        netlist: String,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_parser = parse_range)]
        horizon: Interval,
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sweep every set of at most f faulty units.
    Faults {
        #[arg(long)]
        netlist: String,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 1)]
        f: usize,
        #[arg(long, value_parser = parse_fault, default_value = "byzantine")]
        fault: FaultType,
        #[arg(long, value_parser = parse_time, default_value = "1")]
        crash_at: Time,
        #[arg(long, value_parser = parse_range)]
        horizon: Interval,
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run from adversarial start state and judge the run after a cut.
    Stabilize {
        #[arg(long)]
        netlist: String,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_parser = parse_time)]
        cut: Time,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Run length; runs cover [0, horizon].
        #[arg(long, value_parser = parse_time)]
        horizon: Time,
        #[arg(long, default_value_t = 3)]
        max_pulses: usize,
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long)]
        overrides: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compose forgetfulness bounds, and optionally test one by replay.
    Forgetful {
        #[arg(long)]
        netlist: String,
        /// JSON object of per-instance bounds; derived from the modules otherwise.
        #[arg(long)]
        decl: Option<PathBuf>,
        /// Bound to test by paired runs.
        #[arg(long, value_parser = parse_time)]
        test: Option<Time>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, value_parser = parse_time, default_value = "10")]
        horizon: Time,
    },
    /// Compose bounded-delay declarations along the circuit graph.
    DelayBound {
        #[arg(long)]
        netlist: String,
        #[arg(long)]
        decl: Option<PathBuf>,
    },
    /// Instrument the watchdog-oscillator stabilization argument.
    Lemma {
        #[arg(long = "T", value_parser = parse_time)]
        t: Time,
        #[arg(long, value_parser = parse_time)]
        d: Time,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, value_parser = parse_time, default_value = "50")]
        horizon: Time,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Search start states of the watchdog oscillator that never settle.
    Counterexample {
        #[arg(long = "T", value_parser = parse_time)]
        t: Time,
        #[arg(long, value_parser = parse_time)]
        d: Time,
        #[arg(long, default_value_t = 5000)]
        budget: usize,
        #[arg(long, value_parser = parse_time, default_value = "50")]
        horizon: Time,
        /// Write the counterexample trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Settling time of the short-pulse filter loop.
    Espf {
        #[arg(long, value_parser = parse_time, conflicts_with = "delta_sweep")]
        delta: Option<Time>,
        #[arg(long, value_delimiter = ',', value_parser = parse_time)]
        delta_sweep: Vec<Time>,
        #[arg(long, value_parser = parse_time, default_value = "200")]
        horizon: Time,
        /// Also report the filtered single-rise output.
        #[arg(long)]
        prime: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Covering and limit of the all-low single-rise execution.
    WmDemo {
        #[arg(long, default_value_t = 100)]
        imax: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print a built-in netlist as JSON.
    Export {
        name: String,
    },
    /// Run a canned experiment and compare it with its stored artifact.
    Repro {
        name: String,
        /// Directory of stored artifacts.
        #[arg(long)]
        golden: Option<PathBuf>,
        /// Overwrite the stored artifact with this run.
        #[arg(long)]
        bless: bool,
        /// Also write the artifact here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_time(s: &str) -> Result<Time, String> {
    s.parse().map_err(|e: tsim::ParseError| e.message)
}

fn parse_range(s: &str) -> Result<Interval, String> {
    Interval::parse_range(s).map_err(|e| e.message)
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    s.parse().map_err(|e: tsim::ParseError| e.message)
}

fn parse_fault(s: &str) -> Result<FaultType, String> {
    s.parse()
}

/// A file path, or `builtin:<name>` for one of the example circuits.
pub fn load_netlist(arg: &str) -> Result<Netlist> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        return gallery::builtin(name).ok_or_else(|| anyhow!("unknown built-in netlist `{name}` (known: {})", gallery::BUILTINS.join(", ")));
    }
    let text = fs::read_to_string(arg).with_context(|| format!("reading netlist {arg}"))?;
    Netlist::from_json(&text).with_context(|| format!("netlist {arg}"))
}

fn load_signals(path: &Path) -> Result<BTreeMap<String, Signal>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading signal file {}", path.display()))?;
    parse_signal_file(&text).with_context(|| format!("signal file {}", path.display()))
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_overrides(path: Option<&PathBuf>) -> Result<Vec<Override>> {
    let Some(p) = path else {
        return Ok(Vec::new());
    };
    Ok(load_signals(p)?.into_iter().map(|(net, signal)| Override { net, signal }).collect())
}

fn make_spec(a: &SpecArgs) -> Result<Box<dyn Spec>> {
    let need = |v: &Option<Time>, flag: &str| v.clone().ok_or_else(|| anyhow!("--{flag} is required for this spec"));
    Ok(match a.spec {
        SpecName::Osc => Box::new(OscSpec::new(need(&a.t, "T")?, need(&a.d, "d")?)),
        SpecName::OscEn => Box::new(OscEnSpec { d: need(&a.d, "d")? }),
        SpecName::Wm => Box::new(WmSpec),
        SpecName::Adder => Box::new(AdderSpec { d: need(&a.d, "d")? }),
        SpecName::TmrAdder => Box::new(TmrAdderSpec { d: need(&a.d, "d")? }),
    })
}

fn input_family(a: &InputArgs) -> Result<InputFamily> {
    Ok(match &a.inputs {
        Some(p) => InputFamily::Fixed(vec![load_signals(p)?]),
        None => InputFamily::Random {
            max_transitions: a.max_transitions,
            grid: a.grid,
        },
    })
}

/// Versioned JSON report.
fn report(command: &str, body: impl Serialize) -> Result<String> {
    let mut v = json!({ "schema_version": SCHEMA_VERSION, "command": command });
    let body = serde_json::to_value(body)?;
    if let (Value::Object(m), Value::Object(b)) = (&mut v, body) {
        m.extend(b);
    }
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn emit(text: &str, path: Option<&PathBuf>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Passed,
    Refuted,
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Passed
    } else {
        Status::Refuted
    }
}

fn settling_csv(rows: &[SettlingResult]) -> String {
    let opt = |t: &Option<Time>, f: &dyn Fn(&Time) -> String| t.as_ref().map_or_else(|| "not-settled".to_string(), f);
    let mut s = String::from("delta_exact,delta_decimal,settle_exact,settle_decimal,pulse_count,max_gap\n");
    for r in rows {
        s += &format!(
            "{},{},{},{},{},{}\n",
            r.delta.to_string().replace(' ', ""),
            r.delta.to_decimal(6),
            opt(&r.settle, &|t| t.to_string().replace(' ', "")),
            opt(&r.settle, &|t| t.to_decimal(6)),
            r.pulse_count,
            r.max_gap.as_ref().map_or_else(String::new, |g| g.to_decimal(6)),
        );
    }
    s
}

fn run(cli: Cli) -> Result<Status> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let seed = cli.seed;
    match cli.command {
        Command::Validate { netlist } => {
            let n = load_netlist(&netlist)?;
            n.validate()?;
            let g = n.graph_analysis();
            let body = json!({
                "name": n.name,
                "inputs": n.inputs,
                "outputs": n.outputs,
                "modules": n.modules.len(),
                "acyclic": g.acyclic,
                "every_cycle_delayed": g.every_cycle_delayed,
                "cycles": g.cycles,
                "undelayed_cycle": g.undelayed_cycle,
                "fault_units": n.fault_units(),
            });
            emit(&report("validate", body)?, None)?;
            Ok(status(g.every_cycle_delayed))
        }
        Command::Simulate {
            netlist,
            horizon,
            inputs,
            init,
            overrides,
            policy,
            ports,
            all_nets,
            out,
            plot,
        } => {
            let n = load_netlist(&netlist)?;
            let inputs = match inputs {
                Some(p) => load_signals(&p)?,
                None => BTreeMap::new(),
            };
            let init: SimInit = match init {
                Some(p) => load_json(&p)?,
                None => SimInit::default(),
            };
            let cfg = SimConfig {
                overrides: load_overrides(overrides.as_ref())?,
                budget: cli.budget_events,
                ..SimConfig::default().with_strategy(AdversaryStrategy::new(seed, policy)).with_init(init)
            };
            let run = simulate(&n, &inputs, &horizon, &cfg)?;
            let ports: Vec<String> = if all_nets {
                run.execution.signals.keys().cloned().collect()
            } else if ports.is_empty() {
                n.inputs.iter().chain(&n.outputs).cloned().collect()
            } else {
                ports
            };
            let refs: Vec<&str> = ports.iter().map(String::as_str).collect();
            let exec = run.execution.project(&refs.iter().map(|p| (*p, *p)).collect::<Vec<_>>())?;
            let text = match cli.format {
                Format::Csv => exec.to_csv(&refs, 6)?,
                Format::Json => report("simulate", json!({ "execution": exec, "decisions": run.decisions, "instants": run.instants }))?,
            };
            emit(&text, out.as_ref())?;
            if let Some(p) = plot {
                fs::write(&p, exec.to_step_data(&refs)?).with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(Status::Passed)
        }
        Command::Feasible {
            netlist,
            trace,
            interval,
            lookback,
        } => {
            let n = load_netlist(&netlist)?;
            let v: Value = load_json(&trace)?;
            let exec: Execution = serde_json::from_value(v.get("execution").cloned().unwrap_or(v)).context("trace has no execution")?;
            let window = if lookback { Window::Lookback } else { Window::Strict };
            let verdicts = check_feasible(&n, &exec, &interval, window)?;
            let ok = all_feasible(&verdicts);
            let rows: Vec<Value> = verdicts
                .iter()
                .map(|m| json!({ "id": m.id, "kind": m.kind, "interval": m.interval, "verdict": m.verdict }))
                .collect();
            emit(&report("feasible", json!({ "feasible": ok, "modules": rows }))?, None)?;
            Ok(status(ok))
        }
        Command::Check {
            netlist,
            spec,
            horizon,
            inputs,
            trials,
            report: out,
        } => {
            let n = load_netlist(&netlist)?;
            let spec = make_spec(&spec)?;
            let plan = TrialPlan {
                judged: horizon.clone(),
                horizon,
                inputs: input_family(&inputs)?,
                trials,
                seed,
                crash_at: Time::zero(),
                byzantine_rate: tsim::sim::DEFAULT_BYZANTINE_RATE,
            };
            let v = check_implements(&n, spec.as_ref(), &plan)?;
            emit(&report("check", json!({ "spec": spec.name(), "verdict": v }))?, out.as_ref())?;
            Ok(status(v.passed()))
        }
        Command::Faults {
            netlist,
            spec,
            f,
            fault,
            crash_at,
            horizon,
            inputs,
            trials,
            report: out,
        } => {
            let n = load_netlist(&netlist)?;
            let spec = make_spec(&spec)?;
            let plan = TrialPlan {
                judged: horizon.clone(),
                horizon,
                inputs: input_family(&inputs)?,
                trials,
                seed,
                crash_at,
                byzantine_rate: tsim::sim::DEFAULT_BYZANTINE_RATE,
            };
            let reports = check_f_tolerant(&n, spec.as_ref(), f, fault, &plan)?;
            let ok = reports.iter().all(|r| r.verdict.passed());
            emit(&report("faults", json!({ "spec": spec.name(), "f": f, "fault": fault, "tolerant": ok, "fault_sets": reports }))?, out.as_ref())?;
            Ok(status(ok))
        }
        Command::Stabilize {
            netlist,
            spec,
            cut,
            trials,
            horizon,
            max_pulses,
            inputs,
            overrides,
            report: out,
        } => {
            let n = load_netlist(&netlist)?;
            let spec = make_spec(&spec)?;
            let h = Interval::closed(Time::zero(), horizon);
            let plan = StabPlan {
                horizon: h,
                inputs: if n.inputs.is_empty() { InputFamily::Fixed(vec![BTreeMap::new()]) } else { input_family(&inputs)? },
                init: InitFamily::Adversarial { max_pulses },
                overrides: load_overrides(overrides.as_ref())?,
                trials,
                seed,
            };
            let r = check_stabilizing(&n, spec.as_ref(), &cut, &plan)?;
            let ok = r.passed;
            emit(&report("stabilize", r)?, out.as_ref())?;
            Ok(status(ok))
        }
        Command::Forgetful {
            netlist,
            decl,
            test,
            trials,
            horizon,
        } => {
            let n = load_netlist(&netlist)?;
            let decl: ForgetfulnessDecl = match decl {
                Some(p) => load_json(&p)?,
                None => ForgetfulnessDecl::derived(&n),
            };
            let bound = forgetful_bound(&n, &decl);
            let tested = match &test {
                Some(f) => Some(test_forgetful(
                    &n,
                    f,
                    &ForgetPlan {
                        horizon,
                        trials,
                        seed,
                        max_transitions: 8,
                        grid: 8,
                    },
                )?),
                None => None,
            };
            let ok = bound.is_ok() && tested.as_ref().is_none_or(|v| v.passed());
            let bound_json = match &bound {
                Ok(b) => json!({ "bound": b }),
                Err(e) => json!({ "not_applicable": e.to_string() }),
            };
            emit(&report("forgetful", json!({ "declared": decl, "composed": bound_json, "tested_bound": test, "test": tested }))?, None)?;
            Ok(status(ok))
        }
        Command::DelayBound { netlist, decl } => {
            let n = load_netlist(&netlist)?;
            let decl: DelayClassDecl = match decl {
                Some(p) => load_json(&p)?,
                None => DelayClassDecl::derived(&n),
            };
            let body = match bd_bound(&n, &decl) {
                Ok(b) => json!({ "declared": decl, "bound": b }),
                Err(AnalysisError::NotApplicable(why)) => json!({ "declared": decl, "not_applicable": why }),
                Err(e) => return Err(e.into()),
            };
            let ok = body.get("bound").is_some();
            emit(&report("delay-bound", body)?, None)?;
            Ok(status(ok))
        }
        Command::Lemma {
            t,
            d,
            trials,
            horizon,
            report: out,
        } => {
            let r = verify_mem_osc_lemma(&LemmaPlan {
                t,
                d,
                horizon,
                trials,
                seed,
                max_pulses: 3,
            })?;
            let ok = r.all_hold;
            emit(&report("lemma", r)?, out.as_ref())?;
            Ok(status(ok))
        }
        Command::Counterexample {
            t,
            d,
            budget,
            horizon,
            trace,
        } => {
            let r = find_counterexample(&t, &d, budget, &horizon, seed)?;
            if let (Some(p), Some(c)) = (&trace, &r.found) {
                fs::write(p, c.execution.to_csv(&["y", "chn.out", "inv.out"], 6)?).with_context(|| format!("writing {}", p.display()))?;
            }
            let found = r.found.is_some();
            let summary = json!({
                "T": t,
                "d": d,
                "candidates_tried": r.candidates_tried,
                "insufficient_evidence": r.insufficient_evidence,
                "found": r.found.as_ref().map(|c| json!({
                    "candidate": c.candidate,
                    "seed": c.seed,
                    "init": c.init,
                    "judged": c.judged,
                    "violation": c.violation,
                })),
            });
            emit(&report("counterexample", summary)?, None)?;
            Ok(status(!found))
        }
        Command::Espf {
            delta,
            delta_sweep,
            horizon,
            prime,
            out,
        } => {
            let deltas = match (delta, delta_sweep.is_empty()) {
                (Some(d), _) => vec![d],
                (None, false) => delta_sweep,
                (None, true) => bail!("give --delta or --delta-sweep"),
            };
            let rows = espf_sweep(&deltas, &horizon)?;
            let settled = rows.iter().all(|r| r.settle.is_some());
            let csv = cli.format == Format::Csv || out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "csv"));
            let text = if csv {
                settling_csv(&rows)
            } else {
                let primes = if prime {
                    deltas
                        .iter()
                        .map(|d| espf_prime(d, &horizon).map(|p| json!({ "delta": p.delta, "rises": p.rises, "conclusive": p.conclusive })))
                        .collect::<Result<Vec<_>, _>>()?
                } else {
                    Vec::new()
                };
                report("espf", json!({ "horizon": horizon, "settling": rows, "prime": primes }))?
            };
            emit(&text, out.as_ref())?;
            Ok(status(settled))
        }
        Command::WmDemo { imax, report: out } => {
            let r = wm_demo(seed, imax)?;
            let ok = r.prefixes_feasible == r.prefixes && !r.limit_feasible && r.run.feasible;
            emit(&report("wm-demo", r)?, out.as_ref())?;
            Ok(status(ok))
        }
        Command::Export { name } => {
            let n = load_netlist(&format!("builtin:{name}"))?;
            emit(&(n.to_json() + "\n"), None)?;
            Ok(Status::Passed)
        }
        Command::Repro { name, golden, bless, out } => {
            let dir = golden.unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("golden"));
            repro::run(&name, &dir, bless, out.as_deref())
        }
    }
}

fn budget_exhausted(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(c.downcast_ref::<NetlistError>(), Some(NetlistError::BudgetExceeded { .. }))
            || matches!(c.downcast_ref::<AnalysisError>(), Some(AnalysisError::Netlist(NetlistError::BudgetExceeded { .. })))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Passed) => ExitCode::SUCCESS,
        Ok(Status::Refuted) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if budget_exhausted(&e) { 3 } else { 2 })
        }
    }
}
