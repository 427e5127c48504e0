//! Forgetfulness bounds and replay tests, self-stabilization checks with
//! adversarial initial state, and the instrumented watchdog-oscillator
//! experiments.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dag::longest_path;
use crate::error::{AnalysisError, NetlistError};
use crate::faults::{check_ports, random_inputs, trial_policy, InputFamily};
use crate::interval::Interval;
use crate::modules::reference::{OscSpec, Spec};
use crate::modules::{ChannelInit, ChannelMode, MemInit, ModuleKind, SourceKind, Violation};
use crate::netlist::Netlist;
use crate::signal::{Execution, Signal};
use crate::sim::{all_feasible, check_feasible, simulate, Override, SimConfig, SimInit, Window};
use crate::strategy::{AdversaryStrategy, Policy};
use crate::time::Time;

/// Declared forgetfulness bound per instance id.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ForgetfulnessDecl {
    pub bounds: BTreeMap<String, Time>,
}

impl ForgetfulnessDecl {
    /// Bounds known for the basic modules: `d` for pure and bounded channels,
    /// 0 for gates and sources. Inertial channels and memory cells stay
    /// undeclared.
    pub fn derived(n: &Netlist) -> Self {
        let bounds = n
            .modules
            .iter()
            .filter_map(|m| {
                let f = match &m.kind {
                    ModuleKind::Gate { .. } | ModuleKind::Source { .. } => Time::zero(),
                    ModuleKind::Channel(p) if !matches!(p.mode, ChannelMode::Inertial { .. }) => p.d.clone(),
                    _ => return None,
                };
                Some((m.id.clone(), f))
            })
            .collect();
        ForgetfulnessDecl { bounds }
    }
}

/// Forgetfulness of a feedback-free composition: the heaviest path through
/// the circuit graph, weighted by the declared bounds.
pub fn forgetful_bound(n: &Netlist, decl: &ForgetfulnessDecl) -> Result<Time, AnalysisError> {
    n.validate()?;
    longest_path(n, &decl.bounds)
}

/// Whether every instance resolves its behavior without an adversary.
pub fn is_deterministic(n: &Netlist) -> bool {
    n.modules.iter().all(|m| match &m.kind {
        ModuleKind::Channel(p) => !matches!(p.mode, ChannelMode::Bounded),
        ModuleKind::Source { source } => !matches!(source, SourceKind::RandomPulse { .. }),
        _ => true,
    })
}

#[derive(Clone, Debug)]
pub struct ForgetPlan {
    /// Length of the observed interval `[0, horizon]`.
    pub horizon: Time,
    pub trials: usize,
    pub seed: u64,
    pub max_transitions: usize,
    pub grid: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum ForgetVerdict {
    Passed {
        trials: usize,
    },
    /// Two runs that agree on `[0, horizon]` but whose outputs differ after
    /// the bound. For a deterministic circuit this is a proof; otherwise the
    /// second run only replays the first run's delay choices.
    Refuted {
        trial: usize,
        port: String,
        at: Option<Time>,
        conclusive: bool,
    },
}

impl ForgetVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, ForgetVerdict::Passed { .. })
    }
}

/// Length of the pre-history prepended to each forgetfulness run.
fn pre_history(n: &Netlist) -> Time {
    n.modules
        .iter()
        .fold(Time::from_int(1), |acc, m| acc + m.kind.memory_span())
}

/// Signal on `domain` that follows `past` before 0 and `now` from 0 on. If
/// the past ends at the wrong level it is corrected shortly before 0, no
/// later than `-1/(2 grid)`, so no transition sits exactly at 0.
fn splice(past: &Signal, now: &Signal, domain: &Interval, grid: i64) -> Signal {
    let zero = Time::zero();
    let mut toggles: Vec<Time> = past.transitions().iter().filter(|t| **t < zero).cloned().collect();
    if past.level_before(&zero) != now.init() {
        let last = toggles.last().cloned().unwrap_or_else(|| domain.lo_time().expect("bounded").clone());
        let near = Time::frac(-1, grid);
        toggles.push(last.max(near).half());
    }
    toggles.extend(now.transitions().iter().cloned());
    Signal::from_toggles(domain.clone(), past.init(), toggles)
}

/// Channel and cell state drawn at random for a run starting at `lo`.
/// Channels carry up to `max_pulses` pulses in flight.
pub fn random_init(n: &Netlist, lo: &Time, max_pulses: usize, rng: &mut ChaCha8Rng) -> SimInit {
    const GRID: i64 = 1000;
    let mut init = SimInit::default();
    for m in &n.modules {
        match &m.kind {
            ModuleKind::Channel(p) if p.d.is_positive() => {
                let k = 2 * rng.gen_range(0..=max_pulses) + usize::from(rng.gen_bool(0.5));
                let mut ts: Vec<i64> = (0..k).map(|_| rng.gen_range(1..GRID)).collect();
                ts.sort_unstable();
                ts.dedup();
                let pending = ts.into_iter().map(|j| lo + &p.d.scale(&num::BigRational::new(j.into(), GRID.into()))).collect();
                init.channels.insert(
                    m.id.clone(),
                    ChannelInit {
                        initial_output: rng.gen(),
                        pending,
                    },
                );
            }
            ModuleKind::Mem(p) => {
                let high_until = rng
                    .gen_bool(0.5)
                    .then(|| lo + &p.t.scale(&num::BigRational::new(rng.gen_range(1..=GRID).into(), GRID.into())));
                init.mems.insert(m.id.clone(), MemInit { high_until });
            }
            _ => {}
        }
    }
    init
}

/// Runs `n` twice per trial on `[-W, horizon]`, with identical inputs from 0
/// on but different random inputs and state before 0. The second run replays
/// the first run's delay choices; outputs must agree on `[f, horizon]`.
pub fn test_forgetful(n: &Netlist, f: &Time, plan: &ForgetPlan) -> Result<ForgetVerdict, AnalysisError> {
    if f.is_negative() {
        return Err(AnalysisError::Parameter(format!("bound {f} is negative")));
    }
    if !plan.horizon.is_positive() {
        return Err(AnalysisError::Parameter(format!("horizon {} must be positive", plan.horizon)));
    }
    n.validate()?;
    let w = pre_history(n);
    let domain = Interval::closed(-w.clone(), plan.horizon.clone());
    let observed = Interval::closed(Time::zero(), plan.horizon.clone());
    let past_dom = Interval::closed(-w.clone(), Time::zero());
    let compared = Interval::closed(f.clone(), plan.horizon.clone());
    let conclusive = is_deterministic(n);
    // per trial: first differing port and instant, if any
    type Outcome = Result<Option<(usize, String, Option<Time>)>, NetlistError>;
    let outcomes: Vec<Outcome> = (0..plan.trials)
        .into_par_iter()
        .map(|k| {
            let seed = plan.seed.wrapping_add(k as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let now = random_inputs(&n.inputs, &observed, plan.max_transitions, plan.grid, &mut rng);
            let history = |rng: &mut ChaCha8Rng, extremal: Option<bool>| -> BTreeMap<String, Signal> {
                match extremal {
                    Some(v) => n.inputs.iter().map(|p| (p.clone(), Signal::constant(past_dom.clone(), v))).collect(),
                    None => random_inputs(&n.inputs, &past_dom, plan.max_transitions, plan.grid, rng),
                }
            };
            // trial 0 contrasts constant-low with constant-high pasts
            let (pa, pb) = if k == 0 {
                (history(&mut rng, Some(false)), history(&mut rng, Some(true)))
            } else {
                (history(&mut rng, None), history(&mut rng, None))
            };
            let join = |past: &BTreeMap<String, Signal>| -> BTreeMap<String, Signal> {
                n.inputs.iter().map(|p| (p.clone(), splice(&past[p], &now[p], &domain, plan.grid))).collect()
            };
            let (init_a, init_b) = if k == 0 {
                (SimInit::default(), SimInit::default())
            } else {
                (random_init(n, &-w.clone(), 2, &mut rng), random_init(n, &-w.clone(), 2, &mut rng))
            };
            let strategy = AdversaryStrategy::new(seed, trial_policy(k));
            let a = simulate(n, &join(&pa), &domain, &SimConfig::default().with_strategy(strategy.clone()).with_init(init_a))?;
            let cfg_b = SimConfig {
                replay: a.decisions.clone(),
                ..SimConfig::default().with_strategy(strategy).with_init(init_b)
            };
            let b = simulate(n, &join(&pb), &domain, &cfg_b)?;
            for p in &n.outputs {
                let (x, y) = (a.execution.get(p)?, b.execution.get(p)?);
                if !x.equal_on(y, &compared, false)? {
                    let (x, y) = (x.restrict(&compared)?, y.restrict(&compared)?);
                    let at = if x.init() != y.init() {
                        Some(f.clone())
                    } else {
                        x.transitions().iter().zip(y.transitions()).find(|(u, v)| u != v).map(|(u, v)| u.clone().min(v.clone())).or_else(|| {
                            let m = x.transitions().len().min(y.transitions().len());
                            x.transitions().get(m).or(y.transitions().get(m)).cloned()
                        })
                    };
                    return Ok(Some((k, p.clone(), at)));
                }
            }
            Ok(None)
        })
        .collect();
    for o in outcomes {
        if let Some((trial, port, at)) = o? {
            return Ok(ForgetVerdict::Refuted {
                trial,
                port,
                at,
                conclusive,
            });
        }
    }
    Ok(ForgetVerdict::Passed { trials: plan.trials })
}

/// Initial conditions for stabilization trials.
#[derive(Clone, Debug)]
pub enum InitFamily {
    Fixed(SimInit),
    /// Trial 0 starts everything low, trial 1 everything high, later trials
    /// draw up to `max_pulses` pulses in flight per channel and random cell state.
    Adversarial { max_pulses: usize },
}

#[derive(Clone, Debug)]
pub struct StabPlan {
    pub horizon: Interval,
    pub inputs: InputFamily,
    pub init: InitFamily,
    pub overrides: Vec<Override>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabTrial {
    pub trial: usize,
    pub seed: u64,
    pub policy: Policy,
    pub init: SimInit,
    pub feasible: bool,
    /// Earliest candidate onset (start, cut, or any event instant) from
    /// which the rest of the run meets the target.
    pub onset: Option<Time>,
    pub violation: Option<Violation>,
    /// Whether every submodule behaved correctly on the whole run. Not
    /// judged when overrides are present.
    pub components_ok: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilizationReport {
    pub spec: String,
    pub cut: Time,
    pub trials: Vec<StabTrial>,
    pub worst_onset: Option<Time>,
    pub passed: bool,
}

/// Extremal and random initial conditions.
pub fn adversarial_init(n: &Netlist, lo: &Time, max_pulses: usize, trial: usize, rng: &mut ChaCha8Rng) -> SimInit {
    if trial > 1 {
        return random_init(n, lo, max_pulses, rng);
    }
    let high = trial == 1;
    let mut init = SimInit::default();
    for m in &n.modules {
        match &m.kind {
            ModuleKind::Channel(p) if p.d.is_positive() => {
                init.channels.insert(m.id.clone(), ChannelInit::quiescent(high));
            }
            ModuleKind::Mem(p) => {
                let high_until = high.then(|| lo + &p.t);
                init.mems.insert(m.id.clone(), MemInit { high_until });
            }
            _ => {}
        }
    }
    init
}

/// Earliest start among `candidates` (sorted) for which `ok` holds, assuming
/// `ok` is monotone: once it holds it keeps holding for later starts.
fn earliest(candidates: &[Time], ok: impl Fn(&Time) -> bool) -> Option<Time> {
    let (mut a, mut b) = (0, candidates.len());
    while a < b {
        let m = (a + b) / 2;
        if ok(&candidates[m]) {
            b = m;
        } else {
            a = m + 1;
        }
    }
    candidates.get(a).cloned()
}

/// Simulates `n` from adversarial state and judges `spec` on
/// `[lo + cut, hi]` of every trial.
pub fn check_stabilizing(n: &Netlist, spec: &dyn Spec, cut: &Time, plan: &StabPlan) -> Result<StabilizationReport, AnalysisError> {
    check_ports(n, spec)?;
    if cut.is_negative() {
        return Err(AnalysisError::Parameter(format!("cut {cut} is negative")));
    }
    let (Some(lo), Some(hi)) = (plan.horizon.lo_time(), plan.horizon.hi_time()) else {
        return Err(AnalysisError::Parameter(format!("horizon {} must be bounded", plan.horizon)));
    };
    let start = lo + cut;
    if start > *hi {
        return Err(AnalysisError::Parameter(format!("cut {cut} reaches past the horizon {}", plan.horizon)));
    }
    let judged = Interval::closed(start.clone(), hi.clone());
    let trials: Vec<Result<StabTrial, NetlistError>> = (0..plan.trials)
        .into_par_iter()
        .map(|k| {
            let seed = plan.seed.wrapping_add(k as u64);
            let policy = trial_policy(k);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let init = match &plan.init {
                InitFamily::Fixed(i) => i.clone(),
                InitFamily::Adversarial { max_pulses } => adversarial_init(n, lo, *max_pulses, k, &mut rng),
            };
            let inputs = match &plan.inputs {
                InputFamily::Fixed(v) => v[k % v.len()].clone(),
                InputFamily::Random { max_transitions, grid } => random_inputs(&n.inputs, &plan.horizon, *max_transitions, *grid, &mut rng),
            };
            let cfg = SimConfig {
                overrides: plan.overrides.clone(),
                ..SimConfig::default().with_strategy(AdversaryStrategy::new(seed, policy)).with_init(init.clone())
            };
            let run = simulate(n, &inputs, &plan.horizon, &cfg)?;
            let verdict = spec.check(&run.execution, &judged);
            let mut candidates: Vec<Time> = run.execution.event_times();
            candidates.extend(run.retriggers.values().flatten().cloned());
            candidates.push(lo.clone());
            candidates.push(start.clone());
            candidates.retain(|c| plan.horizon.contains(c));
            candidates.sort();
            candidates.dedup();
            let onset = earliest(&candidates, |c| spec.check(&run.execution, &Interval::closed(c.clone(), hi.clone())).is_feasible());
            let components_ok = if plan.overrides.is_empty() {
                Some(all_feasible(&check_feasible(n, &run.execution, &plan.horizon, Window::Strict)?))
            } else {
                None
            };
            Ok(StabTrial {
                trial: k,
                seed,
                policy,
                init,
                feasible: verdict.is_feasible(),
                onset,
                violation: verdict.violation().cloned(),
                components_ok,
            })
        })
        .collect();
    let trials = trials.into_iter().collect::<Result<Vec<_>, _>>()?;
    let passed = trials.iter().all(|t| t.feasible);
    let worst_onset = trials
        .iter()
        .map(|t| t.onset.clone().map(|o| o - lo.clone()))
        .try_fold(Time::zero(), |acc, o| o.map(|o| acc.max(o)));
    Ok(StabilizationReport {
        spec: spec.name(),
        cut: cut.clone(),
        trials,
        worst_onset,
        passed,
    })
}

pub const LEMMA_STEPS: [&str; 7] = [
    "low instant t* in [0, T+d]",
    "rise t0 in [t*, t*+d]",
    "high on (t0, t0+T)",
    "low on [t0+T, t0+T+d)",
    "every later period repeats",
    "osc-feasible from t0",
    "t0 <= T+2d",
];

#[derive(Clone, Debug)]
pub struct LemmaPlan {
    pub t: Time,
    pub d: Time,
    pub horizon: Time,
    pub trials: usize,
    pub seed: u64,
    pub max_pulses: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaTrial {
    pub trial: usize,
    pub seed: u64,
    pub init: SimInit,
    pub t_star: Option<Time>,
    pub t0: Option<Time>,
    pub steps: [bool; 7],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaReport {
    #[serde(rename = "T")]
    pub t: Time,
    pub d: Time,
    pub trials: Vec<LemmaTrial>,
    pub max_t0: Option<Time>,
    pub all_hold: bool,
}

/// `y` is `v` throughout `(a, b)`, with no zero instants inside when `v` holds.
fn steady(y: &Signal, zeros: &[Time], a: &Time, b: &Time, v: bool) -> bool {
    let inside = |t: &Time| t > a && t < b;
    y.level_at(a) == v && !y.transitions().iter().any(inside) && (!v || !zeros.iter().any(inside))
}

fn instrument(y: &Signal, zeros: &[Time], t: &Time, d: &Time, hi: &Time) -> (Option<Time>, Option<Time>, [bool; 7]) {
    let mut steps = [false; 7];
    let zero = Time::zero();
    let period = t + d;
    let falls = y.transitions().iter().filter(|u| !y.level_at(u));
    let t_star = (!y.level_at(&zero))
        .then(|| zero.clone())
        .into_iter()
        .chain(falls.cloned())
        .chain(zeros.iter().cloned())
        .filter(|u| *u <= period)
        .min();
    let Some(ts) = t_star.clone() else {
        return (None, None, steps);
    };
    steps[0] = true;
    let reach = &ts + d;
    let rises = y.transitions().iter().filter(|u| y.level_at(u) && **u > ts);
    let t0 = rises
        .chain(zeros.iter().filter(|u| **u >= ts))
        .filter(|u| **u <= reach)
        .max()
        .cloned();
    let Some(t0) = t0 else {
        return (t_star, None, steps);
    };
    steps[1] = true;
    let up = &t0 + t;
    steps[2] = steady(y, zeros, &t0, &up, true);
    steps[3] = steady(y, zeros, &up, &(&up + d), false);
    let mut ti = t0.clone();
    let mut periodic = true;
    while &(&ti + &period) <= hi {
        let (a, b) = (&ti + t, &ti + &period);
        periodic &= steady(y, zeros, &ti, &a, true) && steady(y, zeros, &a, &b, false) && y.level_at(&b);
        ti = b;
    }
    steps[4] = periodic;
    let osc = OscSpec::new(t.clone(), d.clone());
    steps[5] = osc.fit(y, &Interval::closed(t0.clone(), hi.clone())).is_ok() && !zeros.iter().any(|z| *z > t0);
    steps[6] = t0 <= &period + d;
    (t_star, Some(t0), steps)
}

/// Runs the watchdog oscillator from adversarial state and checks each step
/// of the stabilization argument on every trace.
pub fn verify_mem_osc_lemma(plan: &LemmaPlan) -> Result<LemmaReport, AnalysisError> {
    if plan.t < plan.d {
        return Err(AnalysisError::Hypothesis(format!(
            "window T = {} is shorter than the delay d = {}; use the counterexample search",
            plan.t, plan.d
        )));
    }
    if !plan.d.is_positive() {
        return Err(AnalysisError::Parameter(format!("delay {} must be positive", plan.d)));
    }
    let n = crate::gallery::mem_oscillator(plan.t.clone(), plan.d.clone());
    let zero = Time::zero();
    let h = Interval::closed(zero.clone(), plan.horizon.clone());
    let trials: Vec<Result<LemmaTrial, NetlistError>> = (0..plan.trials)
        .into_par_iter()
        .map(|k| {
            let seed = plan.seed.wrapping_add(k as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let init = adversarial_init(&n, &zero, plan.max_pulses, k, &mut rng);
            let run = simulate(&n, &BTreeMap::new(), &h, &SimConfig::default().with_init(init.clone()))?;
            let y = run.execution.get("y")?;
            let zeros = run.retriggers.get("mem").cloned().unwrap_or_default();
            let (t_star, t0, steps) = instrument(y, &zeros, &plan.t, &plan.d, &plan.horizon);
            Ok(LemmaTrial {
                trial: k,
                seed,
                init,
                t_star,
                t0,
                steps,
            })
        })
        .collect();
    let trials = trials.into_iter().collect::<Result<Vec<_>, _>>()?;
    let all_hold = trials.iter().all(|t| t.steps.iter().all(|&s| s));
    let max_t0 = trials.iter().filter_map(|t| t.t0.clone()).max();
    Ok(LemmaReport {
        t: plan.t.clone(),
        d: plan.d.clone(),
        trials,
        max_t0,
        all_hold,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CexTrace {
    pub candidate: usize,
    pub seed: u64,
    pub init: SimInit,
    /// Why the tail of the output fits no oscillation offset.
    pub violation: Violation,
    /// The tail on which no offset fits.
    pub judged: Interval,
    pub execution: Execution,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CexSearch {
    pub candidates_tried: usize,
    /// The horizon is shorter than one period, so nothing can be concluded.
    pub insufficient_evidence: bool,
    pub found: Option<Box<CexTrace>>,
}

/// Searches initial channel and cell contents of the watchdog oscillator for
/// a run whose last two periods fit no oscillation, and whose every
/// submodule behaves correctly throughout.
pub fn find_counterexample(t: &Time, d: &Time, budget: usize, horizon: &Time, seed: u64) -> Result<CexSearch, AnalysisError> {
    if !t.is_positive() || !d.is_positive() {
        return Err(AnalysisError::Parameter(format!("T = {t} and d = {d} must be positive")));
    }
    let period = t + d;
    if *horizon < period {
        return Ok(CexSearch {
            candidates_tried: 0,
            insufficient_evidence: true,
            found: None,
        });
    }
    let n = crate::gallery::mem_oscillator(t.clone(), d.clone());
    let zero = Time::zero();
    let h = Interval::closed(zero.clone(), horizon.clone());
    let tail = Interval::closed((horizon - &period.scale_int(2)).max(zero.clone()), horizon.clone());
    let spec = OscSpec::new(t.clone(), d.clone());
    let found = (0..budget)
        .into_par_iter()
        .map(|k| -> Result<Option<CexTrace>, NetlistError> {
            let s = seed.wrapping_add(k as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let init = random_init(&n, &zero, 3, &mut rng);
            let run = simulate(&n, &BTreeMap::new(), &h, &SimConfig::default().with_init(init.clone()))?;
            let Err(violation) = spec.fit(run.execution.get("y")?, &tail) else {
                return Ok(None);
            };
            if !all_feasible(&check_feasible(&n, &run.execution, &h, Window::Strict)?) {
                return Ok(None);
            }
            Ok(Some(CexTrace {
                candidate: k,
                seed: s,
                init,
                violation,
                judged: tail.clone(),
                execution: run.execution,
            }))
        })
        .find_map_first(|r| match r {
            Ok(None) => None,
            other => Some(other),
        });
    match found {
        Some(Err(e)) => Err(e.into()),
        Some(Ok(c)) => Ok(CexSearch {
            candidates_tried: c.as_ref().map_or(budget, |c| c.candidate + 1),
            insufficient_evidence: false,
            found: c.map(Box::new),
        }),
        None => Ok(CexSearch {
            candidates_tried: budget,
            insufficient_evidence: false,
            found: None,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::faults::single;
    use crate::gallery;
    use crate::modules::reference::{AdderSpec, BasicSpec, OscEnSpec, OscSpec};
    use crate::modules::{ChannelParams, GateKind};

    fn t(n: i64) -> Time {
        Time::from_int(n)
    }

    fn plan(trials: usize) -> ForgetPlan {
        ForgetPlan {
            horizon: t(10),
            trials,
            seed: 7,
            max_transitions: 8,
            grid: 8,
        }
    }

    #[test]
    fn adder_bound_is_one_channel_delay() {
        let d = Time::frac(3, 2);
        let n = gallery::adder(d.clone());
        assert_eq!(forgetful_bound(&n, &ForgetfulnessDecl::derived(&n)).unwrap(), d);
        let gate = single(ModuleKind::Gate { gate: GateKind::Not });
        assert_eq!(forgetful_bound(&gate, &ForgetfulnessDecl::derived(&gate)).unwrap(), Time::zero());
        let osc = gallery::mem_oscillator(t(2), t(1));
        assert!(matches!(forgetful_bound(&osc, &ForgetfulnessDecl::derived(&osc)), Err(AnalysisError::NotApplicable(_))));
    }

    #[test]
    fn pure_channel_forgets_after_its_delay() {
        let n = single(ModuleKind::Channel(ChannelParams::pure(t(1))));
        assert!(test_forgetful(&n, &t(1), &plan(40)).unwrap().passed());
        match test_forgetful(&n, &Time::frac(1, 2), &plan(40)).unwrap() {
            ForgetVerdict::Refuted { trial, conclusive, .. } => {
                assert_eq!(trial, 0);
                assert!(conclusive);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn explicit_pre_history_shows_through_a_short_bound() {
        // a rise at -1/4 leaves the channel at 3/4, inside [1/2, 10]
        let n = single(ModuleKind::Channel(ChannelParams::pure(t(1))));
        let dom = Interval::closed(t(-2), t(10));
        let rise = Signal::from_toggles(dom.clone(), false, [Time::frac(-1, 4)]);
        let high = Signal::constant(dom.clone(), true);
        let run = |s: Signal| {
            let inputs = BTreeMap::from([("in".to_string(), s)]);
            simulate(&n, &inputs, &dom, &SimConfig::default()).unwrap().execution.get("out").unwrap().clone()
        };
        let (a, b) = (run(rise), run(high));
        let tail = Interval::closed(Time::frac(1, 2), t(10));
        assert!(!a.equal_on(&b, &tail, false).unwrap());
        assert!(a.equal_on(&b, &Interval::closed(t(1), t(10)), false).unwrap());
    }

    #[test]
    fn gates_and_the_adder_forget() {
        let not = single(ModuleKind::Gate { gate: GateKind::Not });
        assert!(test_forgetful(&not, &Time::zero(), &plan(30)).unwrap().passed());
        let n = gallery::adder(t(1));
        assert!(test_forgetful(&n, &t(1), &plan(60)).unwrap().passed());
        assert!(!is_deterministic(&n));
    }
    fn stab_plan(h: Interval, inputs: InputFamily, init: InitFamily, trials: usize) -> StabPlan {
        StabPlan {
            horizon: h,
            inputs,
            init,
            overrides: Vec::new(),
            trials,
            seed: 11,
        }
    }

    #[test]
    fn watchdog_oscillator_stabilizes_within_t_plus_2d() {
        let (tt, d) = (Time::frac(3, 2), t(1));
        let n = gallery::mem_oscillator(tt.clone(), d.clone());
        let p = stab_plan(Interval::closed(t(0), t(30)), InputFamily::Fixed(vec![BTreeMap::new()]), InitFamily::Adversarial { max_pulses: 3 }, 60);
        let spec = OscSpec::new(tt, d);
        let r = check_stabilizing(&n, &spec, &Time::frac(7, 2), &p).unwrap();
        assert!(r.passed, "{:?}", r.trials.iter().find(|t| !t.feasible));
        assert!(r.worst_onset.clone().unwrap() <= Time::frac(7, 2));
        assert!(r.trials.iter().all(|t| t.components_ok == Some(true)));
        // a later cut keeps passing on the same trials
        let later = check_stabilizing(&n, &spec, &t(6), &p).unwrap();
        assert!(later.passed);
    }

    #[test]
    fn faulty_plain_oscillator_never_recovers() {
        let n = gallery::oscillator(t(1));
        let h = Interval::closed(t(0), t(40));
        let mut p = stab_plan(h.clone(), InputFamily::Fixed(vec![gallery::enable_step(&h)]), InitFamily::Fixed(SimInit::default()), 1);
        p.overrides = vec![gallery::oscillator_fault()];
        let spec = OscEnSpec { d: t(1) };
        for cut in [1, 7, 20] {
            let r = check_stabilizing(&n, &spec, &t(cut), &p).unwrap();
            assert!(!r.passed, "cut {cut}");
            // only a sliver at the very end of the run still fits
            assert!(r.trials[0].onset.clone().unwrap() > t(39), "{:?}", r.trials[0].onset);
        }
        p.overrides.clear();
        assert!(check_stabilizing(&n, &spec, &Time::zero(), &p).unwrap().passed);
    }

    #[test]
    fn quiescent_channel_is_already_stable() {
        let k = ModuleKind::Channel(ChannelParams::pure(t(1)));
        let p = stab_plan(Interval::closed(t(0), t(10)), InputFamily::Random { max_transitions: 6, grid: 4 }, InitFamily::Fixed(SimInit::default()), 10);
        let r = check_stabilizing(&single(k.clone()), &BasicSpec { kind: k }, &Time::zero(), &p).unwrap();
        assert!(r.passed);
        assert_eq!(r.worst_onset, Some(Time::zero()));
    }

    #[test]
    fn adder_stabilizes_at_its_forgetfulness_bound() {
        let d = t(1);
        let n = gallery::adder(d.clone());
        let f = forgetful_bound(&n, &ForgetfulnessDecl::derived(&n)).unwrap();
        let h = Interval::closed(t(0), t(8));
        let combos = [(false, false), (false, true), (true, false), (true, true)]
            .iter()
            .map(|&(a, b)| gallery::adder_inputs(a, b, &h, 1))
            .collect();
        let p = stab_plan(h, InputFamily::Fixed(combos), InitFamily::Adversarial { max_pulses: 2 }, 40);
        let r = check_stabilizing(&n, &AdderSpec { d }, &f, &p).unwrap();
        assert!(r.passed, "{:?}", r.trials.iter().find(|t| !t.feasible));
    }

    #[test]
    fn interface_mismatch_is_reported() {
        let n = gallery::adder(t(1));
        let p = stab_plan(Interval::closed(t(0), t(4)), InputFamily::Fixed(vec![BTreeMap::new()]), InitFamily::Fixed(SimInit::default()), 1);
        let spec = OscSpec::new(t(1), t(1));
        assert!(matches!(check_stabilizing(&n, &spec, &t(1), &p), Err(AnalysisError::Interface(_))));
    }
    fn lemma_plan(tt: Time, d: Time, trials: usize) -> LemmaPlan {
        LemmaPlan {
            t: tt,
            d,
            horizon: t(40),
            trials,
            seed: 3,
            max_pulses: 3,
        }
    }

    #[test]
    fn lemma_steps_hold_for_long_windows() {
        let r = verify_mem_osc_lemma(&lemma_plan(Time::frac(3, 2), t(1), 80)).unwrap();
        let bad = r.trials.iter().find(|t| !t.steps.iter().all(|&s| s));
        assert!(r.all_hold, "{bad:?}");
        assert!(r.max_t0.unwrap() <= Time::frac(7, 2));
        // from all-low state the first fall is at T and the next rise one delay later
        let clean = &r.trials[0];
        assert_eq!(clean.t_star, Some(Time::frac(3, 2)));
        assert_eq!(clean.t0, Some(Time::frac(5, 2)));
    }

    #[test]
    fn lemma_boundary_and_hypothesis() {
        assert!(verify_mem_osc_lemma(&lemma_plan(t(1), t(1), 40)).unwrap().all_hold);
        assert!(matches!(verify_mem_osc_lemma(&lemma_plan(t(1), t(2), 1)), Err(AnalysisError::Hypothesis(_))));
    }

    #[test]
    fn long_delay_admits_a_persistent_bad_state() {
        let r = find_counterexample(&t(1), &t(2), 200, &t(50), 1).unwrap();
        let c = r.found.expect("counterexample");
        let n = gallery::mem_oscillator(t(1), t(2));
        let h = Interval::closed(t(0), t(50));
        assert!(all_feasible(&check_feasible(&n, &c.execution, &h, Window::Strict).unwrap()));
        let osc = OscSpec::new(t(1), t(2));
        assert!(osc.fit(c.execution.get("y").unwrap(), &h).is_err());

        let none = find_counterexample(&Time::frac(3, 2), &t(1), 150, &t(50), 1).unwrap();
        assert!(none.found.is_none() && !none.insufficient_evidence);
        assert_eq!(none.candidates_tried, 150);
        let short = find_counterexample(&t(1), &t(2), 10, &Time::frac(5, 2), 1).unwrap();
        assert!(short.insufficient_evidence && short.found.is_none());
    }
}
