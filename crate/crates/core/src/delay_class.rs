//! Bounded-delay composition, settling of the eventual short-pulse filter,
//! the single-rise filter built on it, and the limit-closure demonstrations.

use std::collections::BTreeMap;

use num::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dag::longest_path;
use crate::error::AnalysisError;
use crate::gallery;
use crate::interval::Interval;
use crate::modules::channel::{self, inertial_filter};
use crate::modules::reference::{Spec, WmSpec};
use crate::modules::{ChannelParams, ModuleKind, SourceKind};
use crate::netlist::Netlist;
use crate::signal::{limit_of_covering, Closure, Execution, Signal};
use crate::sim::{simulate, SimConfig};
use crate::strategy::{Adversary, AdversaryStrategy, Policy};
use crate::time::Time;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayClass {
    Bd(Time),
    Fd,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DelayClassDecl {
    pub classes: BTreeMap<String, DelayClass>,
}

impl DelayClassDecl {
    /// Channels are bounded by their delay, gates and fixed sources by 0.
    pub fn derived(n: &Netlist) -> Self {
        let classes = n
            .modules
            .iter()
            .filter_map(|m| {
                let c = match &m.kind {
                    ModuleKind::Channel(p) => DelayClass::Bd(p.d.clone()),
                    ModuleKind::Gate { .. } => DelayClass::Bd(Time::zero()),
                    ModuleKind::Source { source } if !matches!(source, SourceKind::RandomPulse { .. }) => DelayClass::Bd(Time::zero()),
                    _ => return None,
                };
                Some((m.id.clone(), c))
            })
            .collect();
        DelayClassDecl { classes }
    }
}

/// Delay bound of a feedback-free composition of bounded-delay modules.
pub fn bd_bound(n: &Netlist, decl: &DelayClassDecl) -> Result<Time, AnalysisError> {
    n.validate()?;
    let mut weights = BTreeMap::new();
    let mut fd = Vec::new();
    for (id, c) in &decl.classes {
        match c {
            DelayClass::Bd(b) => {
                weights.insert(id.clone(), b.clone());
            }
            DelayClass::Fd => fd.push(id.as_str()),
        }
    }
    if !fd.is_empty() && n.graph_analysis().acyclic {
        return Err(AnalysisError::NotApplicable(format!("{} only declared finite-delay", fd.join(", "))));
    }
    longest_path(n, &weights)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettlingResult {
    pub delta: Time,
    pub horizon: Time,
    /// Last instant in `[0, horizon]` at which the output is 0, or `None`
    /// when the output is still switching at the horizon.
    pub settle: Option<Time>,
    pub pulse_count: usize,
    /// Longest stretch on which the output is 0.
    pub max_gap: Option<Time>,
    /// Distance from the pulse start before `settle` to `settle`.
    pub settle_start_gap: Option<Time>,
}

/// Sorted pulse starts `n + m√2` in `[0, horizon]`.
pub fn pulse_starts(horizon: &Time) -> Vec<Time> {
    let r2 = Time::sqrt2();
    let mut out = Vec::new();
    let mut base = Time::zero();
    while &base <= horizon {
        let room = (horizon - &base).floor().to_i64().unwrap_or(0);
        out.extend((0..=room).map(|k| &base + &Time::from_int(k)));
        base = base + r2.clone();
    }
    out.sort();
    out
}

/// Merged high stretches `[a, b)` of the union of pulses of width `delta`.
fn merged(starts: &[Time], delta: &Time) -> Vec<(Time, Time)> {
    let mut blocks: Vec<(Time, Time)> = Vec::new();
    for s in starts {
        let e = s + delta;
        match blocks.last_mut() {
            Some((_, b)) if s <= b => {
                if e > *b {
                    *b = e;
                }
            }
            _ => blocks.push((s.clone(), e)),
        }
    }
    blocks
}

fn check_delta(delta: &Time) -> Result<(), AnalysisError> {
    if !delta.is_positive() {
        return Err(AnalysisError::Parameter(format!("pulse width {delta} must be positive")));
    }
    Ok(())
}

/// Settling of the loop `o(t) = in(t) ∨ o(t-1) ∨ o(t-√2)` after a single
/// input pulse `[0, delta)`, computed from the closed form of the pulse starts.
pub fn espf_settling(delta: &Time, horizon: &Time) -> Result<SettlingResult, AnalysisError> {
    check_delta(delta)?;
    if horizon.is_negative() {
        return Err(AnalysisError::Parameter(format!("horizon {horizon} is negative")));
    }
    let starts = pulse_starts(horizon);
    let blocks = merged(&starts, delta);
    let max_gap = blocks
        .windows(2)
        .map(|w| (w[1].0.clone().min(horizon.clone())) - w[0].1.clone())
        .chain(blocks.last().filter(|(_, b)| b <= horizon).map(|(_, b)| horizon - b))
        .max();
    let (last_a, last_b) = blocks.last().expect("a pulse starts at 0");
    let settle = (last_b > horizon).then(|| last_a.clone());
    let settle_start_gap = settle.as_ref().and_then(|s| {
        let k = starts.partition_point(|x| x < s);
        k.checked_sub(1).map(|j| s - &starts[j])
    });
    Ok(SettlingResult {
        delta: delta.clone(),
        horizon: horizon.clone(),
        settle,
        pulse_count: starts.len(),
        max_gap,
        settle_start_gap,
    })
}

pub fn espf_sweep(deltas: &[Time], horizon: &Time) -> Result<Vec<SettlingResult>, AnalysisError> {
    deltas.par_iter().map(|d| espf_settling(d, horizon)).collect()
}

/// Output of the loop on `domain` (low before 0), from the pulse-set form.
pub fn espf_signal(delta: &Time, domain: &Interval) -> Result<Signal, AnalysisError> {
    check_delta(delta)?;
    let hi = domain
        .hi_time()
        .ok_or_else(|| AnalysisError::Parameter(format!("domain {domain} must be bounded above")))?;
    let highs: Vec<Interval> = merged(&pulse_starts(hi), delta)
        .into_iter()
        .map(|(a, b)| Interval::closed_open(a, b))
        .collect();
    Ok(Signal::from_high_intervals(domain.clone(), &highs))
}

/// The loop followed by an inertial filter of threshold 1, on `[-1, horizon]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrimeResult {
    pub delta: Time,
    pub output: Signal,
    pub rises: Vec<Time>,
    /// False when the loop has not settled at least one time unit before
    /// the horizon, so the filtered output is not yet final.
    pub conclusive: bool,
}

pub fn espf_prime(delta: &Time, horizon: &Time) -> Result<PrimeResult, AnalysisError> {
    let domain = Interval::closed(Time::from_int(-1), horizon.clone());
    let raw = espf_signal(delta, &domain)?;
    let output = inertial_filter(&raw, &Time::from_int(1));
    let settling = espf_settling(delta, horizon)?;
    let conclusive = settling.settle.is_some_and(|s| s + Time::from_int(1) <= *horizon);
    let rises = output.transitions().iter().filter(|t| output.level_at(t)).cloned().collect();
    Ok(PrimeResult {
        delta: delta.clone(),
        output,
        rises,
        conclusive,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WmRun {
    pub seed: u64,
    pub width: Time,
    pub rises: Vec<Time>,
    pub feasible: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WmDemo {
    pub width_range: (Time, Time),
    pub run: WmRun,
    pub prefixes: usize,
    pub prefixes_feasible: usize,
    pub limit_feasible: bool,
    /// Every finite restriction of the all-low limit that was examined is feasible.
    pub no_finite_witness: bool,
    /// Coverings of bounded-channel executions have feasible limits.
    pub channel_limit_feasible: bool,
}

pub const WM_HORIZON: i64 = 120;

/// One generated run of the single-rise module, the all-low covering and its
/// limit, and the bounded-channel counterpart.
pub fn wm_demo(seed: u64, i_max: usize) -> Result<WmDemo, AnalysisError> {
    if i_max == 0 {
        return Err(AnalysisError::Parameter("i_max must be at least 1".into()));
    }
    let (lo_w, hi_w) = (Time::frac(1, 10), Time::from_int(1));
    let n = gallery::wm(lo_w.clone(), hi_w.clone());
    let h = Interval::closed(Time::from_int(-1), Time::from_int(WM_HORIZON));
    let cfg = SimConfig::default().with_strategy(AdversaryStrategy::new(seed, Policy::Uniform));
    let sim = simulate(&n, &BTreeMap::new(), &h, &cfg)?;
    let out = sim.execution.get("out").map_err(crate::error::NetlistError::from)?;
    let src = sim.execution.get("src.out").map_err(crate::error::NetlistError::from)?;
    let width = src.transitions().get(1).cloned().unwrap_or_default();
    let run = WmRun {
        seed,
        width,
        rises: out.transitions().iter().filter(|t| out.level_at(t)).cloned().collect(),
        feasible: WmSpec.check(&sim.execution, &h).is_feasible(),
    };

    let chain: Vec<Execution> = (1..=i_max as i64)
        .map(|i| {
            let dom = Interval::closed(Time::from_int(-i), Time::from_int(i));
            Execution::new(dom.clone()).with("out", Signal::constant(dom, false))
        })
        .collect();
    let prefixes_feasible = chain.iter().filter(|e| WmSpec.check(e, &e.interval).is_feasible()).count();
    let limit = limit_of_covering(&chain, Closure::Constant).map_err(crate::error::NetlistError::from)?.execution();
    let limit_feasible = WmSpec.check(&limit, &limit.interval).is_feasible();

    Ok(WmDemo {
        width_range: (lo_w, hi_w),
        run,
        prefixes: i_max,
        prefixes_feasible,
        limit_feasible,
        no_finite_witness: prefixes_feasible == i_max,
        channel_limit_feasible: channel_limit(seed, i_max.min(20))?,
    })
}

/// A bounded-channel execution on `[-k, k]`, covered by its restrictions to
/// `[-i, i]`: the limit passes the channel check on every member interval.
fn channel_limit(seed: u64, k: usize) -> Result<bool, AnalysisError> {
    let params = ChannelParams::bounded(Time::from_int(1));
    let k = k as i64;
    let dom = Interval::closed(Time::from_int(-k), Time::from_int(k));
    let toggles = (1..4 * k).step_by(3).map(|j| Time::from_int(-k) + Time::frac(j, 2));
    let input = Signal::from_toggles(dom.clone(), false, toggles);
    let mut adv = Adversary::new(AdversaryStrategy::new(seed, Policy::Uniform));
    let (output, _) = channel::generate(&params, &input, &Default::default(), &mut adv, 0).map_err(crate::error::NetlistError::from)?;
    let whole = Execution::new(dom).with("in", input).with("out", output);
    let chain = (1..=k)
        .map(|i| whole.restrict(&Interval::closed(Time::from_int(-i), Time::from_int(i))))
        .collect::<Result<Vec<_>, _>>()
        .map_err(crate::error::NetlistError::from)?;
    let limit = limit_of_covering(&chain, Closure::Finite).map_err(crate::error::NetlistError::from)?.execution();
    let kind = ModuleKind::Channel(params);
    Ok(chain.iter().all(|e| kind.check(&limit, &e.interval).is_feasible()))
}
