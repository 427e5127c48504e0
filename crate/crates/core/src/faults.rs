//! Fault transforms on specifications, and sampled checks of the
//! implements relation with and without faulty submodules.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AnalysisError, NetlistError};
use crate::interval::Interval;
use crate::modules::reference::Spec;
use crate::modules::{ModuleKind, Verdict};
use crate::netlist::Netlist;
use crate::signal::{Execution, Signal};
use crate::sim::{simulate, FaultMode, SimConfig};
use crate::strategy::{AdversaryStrategy, Policy};
use crate::time::Time;

/// A specification whose outputs may freeze at any instant.
pub struct CrashedSpec<S> {
    pub inner: S,
}

impl<S: Spec> Spec for CrashedSpec<S> {
    fn name(&self) -> String {
        format!("crashed({})", self.inner.name())
    }
    fn input_ports(&self) -> Vec<String> {
        self.inner.input_ports()
    }
    fn output_ports(&self) -> Vec<String> {
        self.inner.output_ports()
    }
    fn check(&self, exec: &Execution, i: &Interval) -> Verdict {
        let healthy = self.inner.check(exec, i);
        if healthy.is_feasible() {
            return healthy;
        }
        // the latest output transition is the earliest possible crash instant
        let mut last: Option<Time> = None;
        for p in self.output_ports() {
            let Some(s) = exec.signals.get(&p) else {
                return healthy;
            };
            if let Some(u) = s.transitions_in(i).last() {
                if last.as_ref().is_none_or(|l| u > l) {
                    last = Some(u.clone());
                }
            }
        }
        let Some(c) = last else {
            return Verdict::Feasible;
        };
        match i.with_hi(c) {
            Some(prefix) if self.inner.check(exec, &prefix).is_feasible() => Verdict::Feasible,
            _ => healthy,
        }
    }
}

/// A specification that allows every output.
pub struct ByzantineSpec<S> {
    pub inner: S,
}

impl<S: Spec> Spec for ByzantineSpec<S> {
    fn name(&self) -> String {
        format!("byzantine({})", self.inner.name())
    }
    fn input_ports(&self) -> Vec<String> {
        self.inner.input_ports()
    }
    fn output_ports(&self) -> Vec<String> {
        self.inner.output_ports()
    }
    fn check(&self, _: &Execution, _: &Interval) -> Verdict {
        Verdict::Feasible
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultType {
    Crash,
    Byzantine,
}

impl std::str::FromStr for FaultType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "crash" => Ok(FaultType::Crash),
            "byzantine" => Ok(FaultType::Byzantine),
            _ => Err(format!("unknown fault type `{s}` (expected crash or byzantine)")),
        }
    }
}

/// Input signals for the sampled trials.
#[derive(Clone, Debug)]
pub enum InputFamily {
    /// Trial `k` uses entry `k mod len`.
    Fixed(Vec<BTreeMap<String, Signal>>),
    /// Random signals with up to `max_transitions` transitions on a grid of
    /// `1/grid` time units.
    Random { max_transitions: usize, grid: i64 },
}

#[derive(Clone, Debug)]
pub struct TrialPlan {
    pub horizon: Interval,
    /// Interval on which the target specification is judged.
    pub judged: Interval,
    pub inputs: InputFamily,
    pub trials: usize,
    pub seed: u64,
    /// Crash instant used for crash faults.
    pub crash_at: Time,
    pub byzantine_rate: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Counterexample {
    pub trial: usize,
    pub seed: u64,
    pub policy: Policy,
    pub violation: Verdict,
    pub execution: Execution,
}

/// One-sided outcome of sampling: a counterexample refutes, passing is evidence only.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum ImplVerdict {
    Refuted { counterexample: Box<Counterexample> },
    Passed { trials: usize },
}

impl ImplVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, ImplVerdict::Passed { .. })
    }
}

/// Policy for trial `k`: extremal delays first, then uniform.
pub fn trial_policy(k: usize) -> Policy {
    [Policy::Minimal, Policy::Maximal, Policy::Uniform][k % 3]
}

pub(crate) fn random_inputs(ports: &[String], horizon: &Interval, max_transitions: usize, grid: i64, rng: &mut ChaCha8Rng) -> BTreeMap<String, Signal> {
    let (lo, hi) = (horizon.lo_time().expect("bounded"), horizon.hi_time().expect("bounded"));
    let steps = ((hi - lo).scale_int(grid)).floor();
    let steps: i64 = num::ToPrimitive::to_i64(&steps).unwrap_or(1).max(1);
    ports
        .iter()
        .map(|p| {
            let k = rng.gen_range(0..=max_transitions);
            let mut ts: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=steps)).collect();
            ts.sort_unstable();
            ts.dedup();
            let toggles = ts.into_iter().map(|j| lo + &Time::frac(j, grid));
            (p.clone(), Signal::from_toggles(horizon.clone(), rng.gen(), toggles))
        })
        .collect()
}

pub(crate) fn check_ports(n: &Netlist, spec: &dyn Spec) -> Result<(), AnalysisError> {
    let sorted = |mut v: Vec<String>| {
        v.sort();
        v
    };
    if sorted(n.inputs.clone()) != sorted(spec.input_ports()) || sorted(n.outputs.clone()) != sorted(spec.output_ports()) {
        return Err(AnalysisError::Interface(format!(
            "`{}` has ports {:?} -> {:?}, `{}` has {:?} -> {:?}",
            n.name,
            n.inputs,
            n.outputs,
            spec.name(),
            spec.input_ports(),
            spec.output_ports()
        )));
    }
    Ok(())
}

/// Samples executions of `n` (with the instances in `faulty` failing as
/// `fault`) and judges each against `spec` on the plan's judged interval.
pub fn check_implements_faulty(
    n: &Netlist,
    spec: &dyn Spec,
    plan: &TrialPlan,
    faulty: &[String],
    fault: FaultType,
) -> Result<ImplVerdict, AnalysisError> {
    check_ports(n, spec)?;
    let faults: BTreeMap<String, FaultMode> = faulty
        .iter()
        .map(|id| {
            let mode = match fault {
                FaultType::Crash => FaultMode::Crash {
                    at: plan.crash_at.clone(),
                },
                FaultType::Byzantine => FaultMode::Byzantine {
                    rate: plan.byzantine_rate,
                },
            };
            (id.clone(), mode)
        })
        .collect();
    let outcomes: Vec<Result<Option<Counterexample>, NetlistError>> = (0..plan.trials)
        .into_par_iter()
        .map(|k| {
            let seed = plan.seed.wrapping_add(k as u64);
            let policy = trial_policy(k);
            let inputs = match &plan.inputs {
                InputFamily::Fixed(v) => v[k % v.len()].clone(),
                InputFamily::Random { max_transitions, grid } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    random_inputs(&n.inputs, &plan.horizon, *max_transitions, *grid, &mut rng)
                }
            };
            let cfg = SimConfig {
                strategy: AdversaryStrategy::new(seed, policy),
                faults: faults.clone(),
                ..SimConfig::default()
            };
            let run = simulate(n, &inputs, &plan.horizon, &cfg)?;
            let verdict = spec.check(&run.execution, &plan.judged);
            Ok((!verdict.is_feasible()).then_some(Counterexample {
                trial: k,
                seed,
                policy,
                violation: verdict,
                execution: run.execution,
            }))
        })
        .collect();
    for o in outcomes {
        if let Some(c) = o? {
            return Ok(ImplVerdict::Refuted {
                counterexample: Box::new(c),
            });
        }
    }
    Ok(ImplVerdict::Passed { trials: plan.trials })
}

pub fn check_implements(n: &Netlist, spec: &dyn Spec, plan: &TrialPlan) -> Result<ImplVerdict, AnalysisError> {
    check_implements_faulty(n, spec, plan, &[], FaultType::Byzantine)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FaultSetReport {
    pub units: Vec<String>,
    pub instances: Vec<String>,
    pub verdict: ImplVerdict,
}

/// All sets of at most `f` fault units, smallest first, in name order.
pub fn fault_sets(units: &[String], f: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<(Vec<String>, usize)> = vec![(Vec::new(), 0)];
    for _ in 0..f {
        let mut next = Vec::new();
        for (set, from) in &frontier {
            for (k, u) in units.iter().enumerate().skip(*from) {
                let mut s = set.clone();
                s.push(u.clone());
                out.push(s.clone());
                next.push((s, k + 1));
            }
        }
        frontier = next;
    }
    out
}

/// Runs the sampled implements check for every fault set of size at most `f`.
pub fn check_f_tolerant(
    n: &Netlist,
    spec: &dyn Spec,
    f: usize,
    fault: FaultType,
    plan: &TrialPlan,
) -> Result<Vec<FaultSetReport>, AnalysisError> {
    let units = n.fault_units();
    if f > units.len() {
        return Err(AnalysisError::Parameter(format!("f = {f} exceeds the {} fault units", units.len())));
    }
    let names: Vec<String> = units.keys().cloned().collect();
    fault_sets(&names, f)
        .into_iter()
        .map(|set| {
            let instances: Vec<String> = set.iter().flat_map(|u| units[u].iter().cloned()).collect();
            let verdict = check_implements_faulty(n, spec, plan, &instances, fault)?;
            Ok(FaultSetReport {
                units: set,
                instances,
                verdict,
            })
        })
        .collect()
}

/// Wraps a basic module as a one-instance netlist whose exported ports carry
/// the module's port names.
pub fn single(kind: ModuleKind) -> Netlist {
    let mut n = Netlist::new(kind.name()).module("m", kind.clone());
    for p in kind.input_ports() {
        n = n.input(&p).wire(&p, &format!("m.{p}"));
    }
    for p in kind.output_ports() {
        n = n.output(&p).wire(&format!("m.{p}"), &p);
    }
    n
}
