//! Delay channels: pure (fixed delay), bounded (any delay in `[0, d]`,
//! order preserving) and inertial (pure delay, short pulses suppressed).

use serde::{Deserialize, Serialize};

use super::Verdict;
use crate::error::SignalError;
use crate::interval::{Bound, Interval};
use crate::signal::Signal;
use crate::strategy::{Adversary, Decision};
use crate::time::Time;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ChannelMode {
    Pure,
    Bounded,
    Inertial { threshold: Time },
}

impl ChannelMode {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelMode::Pure => "pure",
            ChannelMode::Bounded => "bounded",
            ChannelMode::Inertial { .. } => "inertial",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelParams {
    #[serde(flatten)]
    pub mode: ChannelMode,
    pub d: Time,
}

impl ChannelParams {
    pub fn new(mode: ChannelMode, d: Time) -> Result<Self, String> {
        if d.is_negative() {
            return Err(format!("delay {d} is negative"));
        }
        if let ChannelMode::Inertial { threshold } = &mode {
            if !threshold.is_positive() {
                return Err(format!("inertial threshold {threshold} must be positive"));
            }
        }
        Ok(ChannelParams { mode, d })
    }

    pub fn pure(d: Time) -> Self {
        ChannelParams::new(ChannelMode::Pure, d).expect("valid delay")
    }

    pub fn bounded(d: Time) -> Self {
        ChannelParams::new(ChannelMode::Bounded, d).expect("valid delay")
    }

    pub fn inertial(d: Time, threshold: Time) -> Self {
        ChannelParams::new(ChannelMode::Inertial { threshold }, d).expect("valid parameters")
    }
}

/// Channel state at the start of a run: the output value and the output
/// transitions already in flight, strictly inside `(lo, lo + d)`.
///
/// If the output value and the pending transitions do not account for the
/// input value at `lo`, the input is taken to have switched at `lo`, and that
/// transition is delivered like any other.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelInit {
    pub initial_output: bool,
    pub pending: Vec<Time>,
}

impl ChannelInit {
    pub fn quiescent(output: bool) -> Self {
        ChannelInit {
            initial_output: output,
            pending: Vec::new(),
        }
    }

    pub fn validate(&self, lo: &Time, d: &Time) -> Result<(), String> {
        let end = lo + d;
        for w in self.pending.windows(2) {
            if w[0] >= w[1] {
                return Err("pending transitions must be strictly increasing".into());
            }
        }
        for t in &self.pending {
            if t <= lo || *t >= end {
                return Err(format!("pending transition {t} outside ({lo}, {end})"));
            }
        }
        Ok(())
    }
}

/// What a channel does in response to an input transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChannelAction {
    Schedule(Time),
    /// An earlier scheduled output is withdrawn (inertial suppression).
    Cancel(Time),
}

/// Streaming channel state shared by the simulator and [`generate`].
#[derive(Clone, Debug)]
pub struct ChannelState {
    params: ChannelParams,
    instance: usize,
    last_out: Option<Time>,
    /// Surviving `(input, output)` transition pairs, most recent last.
    stack: Vec<(Time, Time)>,
}

impl ChannelState {
    /// Sets up the channel at `lo`. Returns the state, the initial output
    /// value, and the output transitions to schedule.
    pub fn start(
        params: &ChannelParams,
        instance: usize,
        init: &ChannelInit,
        lo: &Time,
        in_lo: bool,
        adv: &mut Adversary,
        decisions: &mut Vec<Decision>,
    ) -> Result<(ChannelState, bool, Vec<Time>), String> {
        init.validate(lo, &params.d)?;
        let mut st = ChannelState {
            params: params.clone(),
            instance,
            last_out: init.pending.last().cloned(),
            stack: Vec::new(),
        };
        let mut out = init.pending.clone();
        let settled = init.initial_output ^ (init.pending.len() % 2 == 1);
        if settled != in_lo {
            let hi = lo + &params.d;
            let t = match &params.mode {
                ChannelMode::Bounded => {
                    let (floor, strict) = match &st.last_out {
                        Some(p) => (p.clone(), true),
                        None => (lo.clone(), true),
                    };
                    let t = adv.choose(instance, lo, &floor, strict, &hi);
                    decisions.push(Decision {
                        instance,
                        input: lo.clone(),
                        output: t.clone(),
                    });
                    t
                }
                _ => hi,
            };
            if let ChannelMode::Inertial { .. } = params.mode {
                st.stack.push((lo.clone(), t.clone()));
            }
            st.last_out = Some(t.clone());
            out.push(t);
        }
        Ok((st, init.initial_output, out))
    }

    /// Start for a signal that extends to `-inf`: nothing in flight.
    pub fn start_unbounded(params: &ChannelParams, instance: usize) -> ChannelState {
        ChannelState {
            params: params.clone(),
            instance,
            last_out: None,
            stack: Vec::new(),
        }
    }

    pub fn on_input(&mut self, tau: &Time, adv: &mut Adversary, decisions: &mut Vec<Decision>) -> ChannelAction {
        let d = &self.params.d;
        match &self.params.mode {
            ChannelMode::Pure => {
                let t = tau + d;
                self.last_out = Some(t.clone());
                ChannelAction::Schedule(t)
            }
            ChannelMode::Bounded => {
                let (floor, strict) = match &self.last_out {
                    Some(p) if p >= tau => (p.clone(), true),
                    _ => (tau.clone(), false),
                };
                let t = adv.choose(self.instance, tau, &floor, strict, &(tau + d));
                decisions.push(Decision {
                    instance: self.instance,
                    input: tau.clone(),
                    output: t.clone(),
                });
                self.last_out = Some(t.clone());
                ChannelAction::Schedule(t)
            }
            ChannelMode::Inertial { threshold } => {
                if let Some((top_in, top_out)) = self.stack.last() {
                    if &(tau - top_in) < threshold {
                        let cancelled = top_out.clone();
                        self.stack.pop();
                        return ChannelAction::Cancel(cancelled);
                    }
                }
                let t = tau + d;
                self.stack.push((tau.clone(), t.clone()));
                if self.stack.len() > 2 {
                    // entries below the top two can never be popped again
                    self.stack.remove(0);
                }
                ChannelAction::Schedule(t)
            }
        }
    }
}

/// Output of the channel for a whole input signal, on the input's domain.
pub fn generate(
    params: &ChannelParams,
    input: &Signal,
    init: &ChannelInit,
    adv: &mut Adversary,
    instance: usize,
) -> Result<(Signal, Vec<Decision>), SignalError> {
    let mut decisions = Vec::new();
    let (mut st, out_init, mut outs) = match input.domain().lo_time() {
        Some(lo) => ChannelState::start(params, instance, init, lo, input.init(), adv, &mut decisions)
            .map_err(SignalError::Invalid)?,
        None => (ChannelState::start_unbounded(params, instance), input.init(), Vec::new()),
    };
    for tau in input.transitions() {
        match st.on_input(tau, adv, &mut decisions) {
            ChannelAction::Schedule(t) => outs.push(t),
            ChannelAction::Cancel(t) => {
                if let Some(pos) = outs.iter().rposition(|x| *x == t) {
                    outs.remove(pos);
                }
            }
        }
    }
    Ok((Signal::from_toggles(input.domain().clone(), out_init, outs), decisions))
}

/// Left-to-right pulse filter: each transition either cancels the most recent
/// surviving one (when closer than `threshold`) or survives itself.
pub fn inertial_filter(signal: &Signal, threshold: &Time) -> Signal {
    let mut stack: Vec<Time> = Vec::new();
    for t in signal.transitions() {
        match stack.last() {
            Some(top) if &(t - top) < threshold => {
                stack.pop();
            }
            _ => stack.push(t.clone()),
        }
    }
    Signal::new(signal.domain().clone(), signal.init(), stack).expect("subsequence of valid transitions")
}

fn beyond_hi(i: &Interval, t: &Time) -> bool {
    match i.hi() {
        Bound::Unbounded => false,
        Bound::Closed(h) => t > h,
        Bound::Open(h) => t >= h,
    }
}

/// Interval feasibility of an input/output pair. Transitions near either end
/// of `i` may be explained by partners outside the interval.
pub fn check(params: &ChannelParams, input: &Signal, output: &Signal, i: &Interval) -> Verdict {
    let (inp, out) = match (input.restrict(i), output.restrict(i)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) => return Verdict::infeasible("in", None, e.to_string()),
        (_, Err(e)) => return Verdict::infeasible("out", None, e.to_string()),
    };
    match &params.mode {
        ChannelMode::Inertial { threshold } => check_inertial(&params.d, threshold, &inp, &out, i),
        mode => check_fifo(matches!(mode, ChannelMode::Pure), &params.d, &inp, &out, i),
    }
}

fn check_fifo(pure: bool, d: &Time, inp: &Signal, out: &Signal, i: &Interval) -> Verdict {
    let ins = inp.transitions();
    let outs = out.transitions();
    let pre_max = match i.lo_time() {
        Some(lo) => {
            let end = lo + d;
            outs.partition_point(|u| *u <= end)
        }
        None => 0,
    };
    let candidates: Vec<usize> = if pure {
        vec![pre_max]
    } else {
        (0..=pre_max).collect()
    };
    // when the window ends before the in-flight period, more pending outputs may lie past it
    let hidden_tail = i.lo_time().is_some_and(|lo| beyond_hi(i, &(lo + d)));
    let mut worst: Option<Verdict> = None;
    for p in candidates {
        if !hidden_tail && out.init() ^ (p % 2 == 1) != inp.init() {
            continue;
        }
        let v = match_from(pure, d, ins, &outs[p..], i);
        if v.is_feasible() {
            return v;
        }
        let later = |a: &Verdict, b: &Verdict| {
            let ta = a.violation().and_then(|v| v.at.clone());
            let tb = b.violation().and_then(|v| v.at.clone());
            ta > tb
        };
        if worst.as_ref().is_none_or(|w| later(&v, w)) {
            worst = Some(v);
        }
    }
    worst.unwrap_or_else(|| {
        Verdict::infeasible(
            "out",
            i.lo_time().cloned(),
            "initial output value cannot be explained by transitions in flight",
        )
    })
}

fn match_from(pure: bool, d: &Time, ins: &[Time], outs: &[Time], i: &Interval) -> Verdict {
    for (k, u) in outs.iter().enumerate() {
        let Some(tau) = ins.get(k) else {
            return Verdict::infeasible("out", Some(u.clone()), "output transition without a matching input transition");
        };
        let ok = if pure { *u == tau + d } else { u >= tau && *u <= tau + d };
        if !ok {
            let at = if u < tau { u.clone() } else { tau.clone() };
            return Verdict::infeasible(
                "out",
                Some(at),
                format!("output transition at {u} does not match input transition at {tau}"),
            );
        }
    }
    for tau in &ins[outs.len().min(ins.len())..] {
        if !beyond_hi(i, &(tau + d)) {
            return Verdict::infeasible("in", Some(tau.clone()), "input transition never reaches the output");
        }
    }
    Verdict::Feasible
}

fn check_inertial(d: &Time, threshold: &Time, inp: &Signal, out: &Signal, i: &Interval) -> Verdict {
    let lo = i.lo_time();
    let outs = out.transitions();
    // every output transition after the in-flight window is a delayed input transition
    for u in outs {
        let tau = u - d;
        let from_inside = lo.is_none_or(|lo| tau > *lo);
        if from_inside && !inp.is_transition(&tau) {
            return Verdict::infeasible("out", Some(u.clone()), "output transition without input transition one delay earlier");
        }
    }
    // surviving transitions are at least `threshold` apart
    let settled_from = lo.map(|lo| lo + d);
    for w in outs.windows(2) {
        if settled_from.as_ref().is_none_or(|s| w[0] >= *s) && &(&w[1] - &w[0]) < threshold {
            return Verdict::infeasible("out", Some(w[1].clone()), "output pulse shorter than the inertial threshold");
        }
    }
    // input stable for `threshold` is reproduced one delay later
    for seg in inp.segments() {
        let (Some(a), Some(b)) = (seg.start.as_ref().or(lo), seg.end.as_ref().or(i.hi_time())) else {
            continue;
        };
        if &(b - a) < threshold {
            continue;
        }
        let from = a + d;
        let to = b + d - threshold.clone();
        let to = match i.hi_time() {
            Some(h) if &to > h => h.clone(),
            _ => to,
        };
        if from > to || !i.contains(&from) {
            continue;
        }
        if out.level_at(&from) != seg.value {
            return Verdict::infeasible("out", Some(from), "stable input not reproduced after the delay");
        }
        if let Some(u) = outs.iter().find(|u| **u > from && **u <= to) {
            return Verdict::infeasible("out", Some(u.clone()), "output changes while the delayed input is stable");
        }
    }
    Verdict::Feasible
}
