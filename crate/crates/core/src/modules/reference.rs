//! Behavioral reference specifications that compound circuits are measured
//! against: the free-running oscillator, the enabled oscillator, the "weird"
//! module that rises exactly once, and one-bit adders (plain and triplicated).

use std::collections::BTreeSet;

use super::{ModuleKind, Verdict, Violation};
use crate::interval::Interval;
use crate::signal::{Execution, Signal};
use crate::time::Time;

/// An input/output specification judged on intervals.
pub trait Spec: Send + Sync {
    fn name(&self) -> String;
    fn input_ports(&self) -> Vec<String>;
    fn output_ports(&self) -> Vec<String>;
    fn check(&self, exec: &Execution, i: &Interval) -> Verdict;
}

fn port<'a>(exec: &'a Execution, p: &str) -> Result<&'a Signal, Verdict> {
    exec.signals
        .get(p)
        .ok_or_else(|| Verdict::infeasible(p, None, "no signal for port"))
}

fn restricted(exec: &Execution, p: &str, i: &Interval) -> Result<Signal, Verdict> {
    port(exec, p)?
        .restrict(i)
        .map_err(|e| Verdict::infeasible(p, None, e.to_string()))
}

fn bounded(i: &Interval, p: &str) -> Result<(Time, Time), Verdict> {
    match (i.lo_time(), i.hi_time()) {
        (Some(a), Some(b)) => Ok((a.clone(), b.clone())),
        _ => Err(Verdict::infeasible(p, None, "periodic behavior cannot be judged on an unbounded interval")),
    }
}

/// First instant where `got` differs from `expected` on `i`, if any (modulo isolated points).
fn mismatch(expected: &Signal, got: &Signal, i: &Interval) -> Option<Option<Time>> {
    match expected.equal_on(got, i, true) {
        Ok(true) => None,
        Ok(false) => {
            let (e, g) = (expected.restrict(i).ok()?, got.restrict(i).ok()?);
            if e.init() != g.init() {
                return Some(i.lo_time().cloned());
            }
            let at = e
                .transitions()
                .iter()
                .zip(g.transitions())
                .find(|(x, y)| x != y)
                .map(|(x, y)| x.clone().min(y.clone()))
                .or_else(|| {
                    let n = e.transitions().len().min(g.transitions().len());
                    e.transitions().get(n).or(g.transitions().get(n)).cloned()
                });
            Some(at)
        }
        Err(_) => Some(None),
    }
}

/// Free-running oscillator: high for exactly `T`, low for `d`, at some fixed phase.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OscSpec {
    pub t: Time,
    pub d: Time,
}

impl OscSpec {
    pub fn new(t: Time, d: Time) -> Self {
        OscSpec { t, d }
    }

    pub fn period(&self) -> Time {
        &self.t + &self.d
    }

    /// The periodic signal with offset `delta` on `domain`: high on
    /// `[delta + zP, delta + zP + T)`.
    pub fn wave(&self, delta: &Time, domain: &Interval) -> Signal {
        let p = self.period();
        let (lo, hi) = (domain.lo_time().expect("bounded"), domain.hi_time().expect("bounded"));
        let phase = (lo - delta).rem_euclid(&p);
        let init = phase < self.t;
        let mut start = lo - &phase;
        let mut toggles = Vec::new();
        while &start <= hi {
            for u in [start.clone(), &start + &self.t] {
                if &u > lo {
                    toggles.push(u);
                }
            }
            start = start + p.clone();
        }
        Signal::from_toggles(domain.clone(), init, toggles)
    }

    /// Finds the offset `δ ∈ [0, T + d)` that `y` follows on `i`.
    pub fn fit(&self, y: &Signal, i: &Interval) -> Result<Time, Violation> {
        let unwrap = |v: Verdict| v.violation().cloned().expect("infeasible verdict");
        let (lo, hi) = bounded(i, "y").map_err(unwrap)?;
        let y = y
            .restrict(i)
            .map_err(|e| Violation { port: "y".into(), at: None, reason: e.to_string() })?;
        let p = self.period();
        let first = y.transitions().iter().find(|u| **u != hi);
        let delta = match first {
            Some(u) if y.level_at(u) => u.rem_euclid(&p),
            Some(u) => (u - &self.t).rem_euclid(&p),
            None => {
                let len = &hi - &lo;
                if y.init() && len <= self.t {
                    lo.rem_euclid(&p)
                } else if !y.init() && len <= self.d {
                    (&lo - &self.t).rem_euclid(&p)
                } else {
                    let why = if y.init() { "high for longer than T" } else { "low for longer than d" };
                    return Err(Violation { port: "y".into(), at: Some(lo), reason: why.into() });
                }
            }
        };
        let expected = self.wave(&delta, i);
        match mismatch(&expected, &y, i) {
            None => Ok(delta),
            Some(at) => Err(Violation {
                port: "y".into(),
                at,
                reason: format!("does not follow the oscillation with offset {delta}"),
            }),
        }
    }
}

impl Spec for OscSpec {
    fn name(&self) -> String {
        format!("osc(T={}, d={})", self.t, self.d)
    }
    fn input_ports(&self) -> Vec<String> {
        vec![]
    }
    fn output_ports(&self) -> Vec<String> {
        vec!["y".into()]
    }
    fn check(&self, exec: &Execution, i: &Interval) -> Verdict {
        match port(exec, "y") {
            Ok(y) => match self.fit(y, i) {
                Ok(_) => Verdict::Feasible,
                Err(v) => Verdict::Infeasible(v),
            },
            Err(v) => v,
        }
    }
}

/// Enabled oscillator: while `en` is high, `y` is a square wave with half
/// period `d` that starts high when `en` rises; while `en` is low, `y` is 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OscEnSpec {
    pub d: Time,
}

impl OscEnSpec {
    fn wave(&self, anchor: &Time, seg: &Interval) -> Signal {
        let (a, b) = (seg.lo_time().expect("bounded"), seg.hi_time().expect("bounded"));
        let k = (a - anchor).checked_div(&self.d).expect("positive half period").floor();
        let init = (&k % 2u32) == num::BigInt::from(0);
        let k = i64::try_from(k).unwrap_or(0);
        let mut toggles = Vec::new();
        let mut u = anchor + &self.d.scale_int(k + 1);
        while &u <= b {
            toggles.push(u.clone());
            u = u + self.d.clone();
        }
        Signal::from_toggles(seg.clone(), init, toggles)
    }
}

impl Spec for OscEnSpec {
    fn name(&self) -> String {
        format!("enabled-osc(d={})", self.d)
    }
    fn input_ports(&self) -> Vec<String> {
        vec!["en".into()]
    }
    fn output_ports(&self) -> Vec<String> {
        vec!["y".into()]
    }
    fn check(&self, exec: &Execution, i: &Interval) -> Verdict {
        let run = || -> Result<Verdict, Verdict> {
            let (lo, hi) = bounded(i, "y")?;
            let en = restricted(exec, "en", i)?;
            let y = restricted(exec, "y", i)?;
            for s in en.segments() {
                let a = s.start.clone().unwrap_or_else(|| lo.clone());
                let b = s.end.clone().unwrap_or_else(|| hi.clone());
                let seg = Interval::closed(a.clone(), b.clone());
                let expected = if !s.value {
                    Signal::constant(seg.clone(), false)
                } else if a != lo {
                    self.wave(&a, &seg)
                } else {
                    let first = y.transitions().iter().find(|u| **u > a && **u < b);
                    match first {
                        Some(u) if y.level_at(u) => self.wave(u, &seg),
                        Some(u) => self.wave(&(u - &self.d), &seg),
                        None if &b - &a <= self.d => continue,
                        None => return Ok(Verdict::infeasible("y", Some(a), "no oscillation while enabled")),
                    }
                };
                if let Some(at) = mismatch(&expected, &y, &seg) {
                    let why = if s.value { "not a square wave of half period d" } else { "high while disabled" };
                    return Ok(Verdict::infeasible("y", at, why));
                }
            }
            Ok(Verdict::Feasible)
        };
        run().unwrap_or_else(|v| v)
    }
}

/// Output rises from 0 to 1 exactly once, at some finite time.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WmSpec;

impl Spec for WmSpec {
    fn name(&self) -> String {
        "wm".into()
    }
    fn input_ports(&self) -> Vec<String> {
        vec![]
    }
    fn output_ports(&self) -> Vec<String> {
        vec!["out".into()]
    }
    fn check(&self, exec: &Execution, i: &Interval) -> Verdict {
        let out = match restricted(exec, "out", i) {
            Ok(s) => s,
            Err(v) => return v,
        };
        match out.transitions() {
            [] if !out.init() && i.hi_time().is_none() => {
                Verdict::infeasible("out", None, "never rises on an interval extending to +inf")
            }
            [] if out.init() && i.lo_time().is_none() => {
                Verdict::infeasible("out", None, "never low on an interval extending to -inf")
            }
            [] => Verdict::Feasible,
            [u] if !out.init() => {
                let _ = u;
                Verdict::Feasible
            }
            [u] => Verdict::infeasible("out", Some(u.clone()), "falling transition"),
            [_, u, ..] => Verdict::infeasible("out", Some(u.clone()), "more than one transition"),
        }
    }
}

/// Pieces of `[lo, hi]` on which all `inputs` are constant, with their values.
fn stable_pieces(inputs: &[&Signal], lo: &Time, hi: &Time) -> Vec<(Time, Time, Vec<bool>)> {
    let cuts: BTreeSet<&Time> = inputs.iter().flat_map(|s| s.transitions()).collect();
    let mut starts: Vec<Time> = vec![lo.clone()];
    starts.extend(cuts.into_iter().cloned());
    let mut out = Vec::new();
    for (k, s) in starts.iter().enumerate() {
        let e = starts.get(k + 1).cloned().unwrap_or_else(|| hi.clone());
        out.push((s.clone(), e, inputs.iter().map(|x| x.level_at(s)).collect()));
    }
    out
}

/// Outputs `sum`, `carry` equal the two-bit sum of `a`, `b` from `d` after
/// the inputs last changed.
#[allow(clippy::too_many_arguments)]
fn check_sum(a: &Signal, b: &Signal, sum: &Signal, carry: &Signal, d: &Time, lo: &Time, hi: &Time, names: [&str; 2]) -> Verdict {
    for (s, e, v) in stable_pieces(&[a, b], lo, hi) {
        let from = &s + d;
        if from >= e {
            continue;
        }
        let win = Interval::closed(from, e);
        for (name, sig, want) in [(names[0], sum, v[0] ^ v[1]), (names[1], carry, v[0] && v[1])] {
            if let Some(at) = mismatch(&Signal::constant(win.clone(), want), sig, &win) {
                return Verdict::infeasible(name, at, format!("expected {} while inputs are stable", u8::from(want)));
            }
        }
    }
    Verdict::Feasible
}

/// One-bit adder with settling time `d`: ports `a`, `b` → `sum`, `carry`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdderSpec {
    pub d: Time,
}

impl Spec for AdderSpec {
    fn name(&self) -> String {
        format!("adder(d={})", self.d)
    }
    fn input_ports(&self) -> Vec<String> {
        vec!["a".into(), "b".into()]
    }
    fn output_ports(&self) -> Vec<String> {
        vec!["sum".into(), "carry".into()]
    }
    fn check(&self, exec: &Execution, i: &Interval) -> Verdict {
        let run = || -> Result<Verdict, Verdict> {
            let (lo, hi) = bounded(i, "sum")?;
            let [a, b, s, c] = ["a", "b", "sum", "carry"].map(|p| restricted(exec, p, i));
            Ok(check_sum(&a?, &b?, &s?, &c?, &self.d, &lo, &hi, ["sum", "carry"]))
        };
        run().unwrap_or_else(|v| v)
    }
}

/// Triplicated adder: inputs `a1..a3`, `b1..b3`; outputs `sum1..3`,
/// `carry1..3`. At every time at least two lanes must show the sum of the
/// majority inputs, from `d` after those last changed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TmrAdderSpec {
    pub d: Time,
}

impl Spec for TmrAdderSpec {
    fn name(&self) -> String {
        format!("tmr-adder(d={})", self.d)
    }
    fn input_ports(&self) -> Vec<String> {
        (1..=3).map(|k| format!("a{k}")).chain((1..=3).map(|k| format!("b{k}"))).collect()
    }
    fn output_ports(&self) -> Vec<String> {
        (1..=3).map(|k| format!("sum{k}")).chain((1..=3).map(|k| format!("carry{k}"))).collect()
    }
    fn check(&self, exec: &Execution, i: &Interval) -> Verdict {
        let run = || -> Result<Verdict, Verdict> {
            let (lo, hi) = bounded(i, "sum1")?;
            let maj = |prefix: &str| -> Result<Signal, Verdict> {
                let sigs = (1..=3)
                    .map(|k| restricted(exec, &format!("{prefix}{k}"), i))
                    .collect::<Result<Vec<_>, _>>()?;
                let refs: Vec<&Signal> = sigs.iter().collect();
                Signal::combine(&refs, |v| v.iter().filter(|&&x| x).count() >= 2)
                    .map_err(|e| Verdict::infeasible(prefix, None, e.to_string()))
            };
            let (a, b, s, c) = (maj("a")?, maj("b")?, maj("sum")?, maj("carry")?);
            Ok(check_sum(&a, &b, &s, &c, &self.d, &lo, &hi, ["sum*", "carry*"]))
        };
        run().unwrap_or_else(|v| v)
    }
}

/// A basic module used as a specification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicSpec {
    pub kind: ModuleKind,
}

impl Spec for BasicSpec {
    fn name(&self) -> String {
        self.kind.name()
    }
    fn input_ports(&self) -> Vec<String> {
        self.kind.input_ports()
    }
    fn output_ports(&self) -> Vec<String> {
        self.kind.output_ports()
    }
    fn check(&self, exec: &Execution, i: &Interval) -> Verdict {
        self.kind.check(exec, i)
    }
}
