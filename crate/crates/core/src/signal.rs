//! Binary signals as right-continuous step functions on an interval, plus
//! executions (one signal per port), restriction, coverings and limits, and
//! the text/CSV formats used for traces.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{ParseError, SignalError};
use crate::interval::{Bound, Interval};
use crate::time::Time;

/// A piecewise-constant binary signal on `domain`.
///
/// `init` is the value at the start of the domain (or as `t → -∞`), and the
/// value flips at every entry of `transitions`. The value on `[τᵢ, τᵢ₊₁)` is
/// constant. Transitions lie strictly after the lower end and within the
/// upper end of the domain.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signal {
    domain: Interval,
    init: bool,
    transitions: Vec<Time>,
}

/// A maximal constant piece of a signal: value on `[start, end)`.
/// `None` ends stand for the domain boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub start: Option<Time>,
    pub end: Option<Time>,
    pub value: bool,
}

impl Signal {
    pub fn new(domain: Interval, init: bool, transitions: Vec<Time>) -> Result<Self, SignalError> {
        for w in transitions.windows(2) {
            if w[0] >= w[1] {
                return Err(SignalError::Invalid(format!(
                    "transitions not strictly increasing at {}",
                    w[1]
                )));
            }
        }
        if let Some(first) = transitions.first() {
            if !domain.after_lo(first) {
                return Err(SignalError::Invalid(format!(
                    "transition {first} not after the start of {domain}"
                )));
            }
        }
        if let Some(last) = transitions.last() {
            if !domain.below_hi(last) {
                return Err(SignalError::Invalid(format!("transition {last} beyond {domain}")));
            }
        }
        Ok(Signal {
            domain,
            init,
            transitions,
        })
    }

    pub fn constant(domain: Interval, value: bool) -> Self {
        Signal {
            domain,
            init: value,
            transitions: Vec::new(),
        }
    }

    /// Builds a signal from arbitrary (possibly unsorted, possibly coinciding)
    /// toggle instants: pairs of equal instants cancel, and instants at or
    /// before the domain start fold into the initial value.
    pub fn from_toggles(domain: Interval, init: bool, toggles: impl IntoIterator<Item = Time>) -> Self {
        let mut counts: BTreeMap<Time, usize> = BTreeMap::new();
        for t in toggles {
            *counts.entry(t).or_default() += 1;
        }
        let mut value = init;
        let mut transitions = Vec::new();
        for (t, c) in counts {
            if c % 2 == 0 || !domain.below_hi(&t) {
                continue;
            }
            if domain.after_lo(&t) {
                transitions.push(t);
            } else {
                value = !value;
            }
        }
        Signal {
            domain,
            init: value,
            transitions,
        }
    }

    /// Signal that is 1 on the union of `highs` (endpoints' closedness is
    /// normalized to the right-continuous form) and 0 elsewhere.
    pub fn from_high_intervals(domain: Interval, highs: &[Interval]) -> Self {
        let mut edges: Vec<(Time, i32)> = Vec::new();
        let mut base = 0i32;
        for h in highs {
            match h.lo_time() {
                Some(a) => edges.push((a.clone(), 1)),
                None => base += 1,
            }
            if let Some(b) = h.hi_time() {
                edges.push((b.clone(), -1));
            }
        }
        edges.sort_by(|a, b| a.0.cmp(&b.0));
        let mut level = base;
        let mut toggles = Vec::new();
        let mut init = None;
        let mut i = 0;
        while i < edges.len() {
            let t = edges[i].0.clone();
            let before = level > 0;
            while i < edges.len() && edges[i].0 == t {
                level += edges[i].1;
                i += 1;
            }
            let after = level > 0;
            if domain.after_lo(&t) {
                if before != after {
                    toggles.push(t);
                }
            } else {
                init = Some(after);
            }
        }
        let init = init.unwrap_or(base > 0);
        Signal::from_toggles(domain, init, toggles)
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn init(&self) -> bool {
        self.init
    }

    pub fn transitions(&self) -> &[Time] {
        &self.transitions
    }

    pub fn is_constant(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Number of transitions at or before `t`.
    pub fn count_le(&self, t: &Time) -> usize {
        self.transitions.partition_point(|x| x <= t)
    }

    /// Number of transitions strictly before `t`.
    pub fn count_lt(&self, t: &Time) -> usize {
        self.transitions.partition_point(|x| x < t)
    }

    /// Value at `t`, extending the signal as a constant outside its domain.
    pub fn level_at(&self, t: &Time) -> bool {
        self.init ^ (self.count_le(t) % 2 == 1)
    }

    /// Value just before `t` (left limit).
    pub fn level_before(&self, t: &Time) -> bool {
        self.init ^ (self.count_lt(t) % 2 == 1)
    }

    pub fn value_at(&self, t: &Time) -> Result<bool, SignalError> {
        if !self.domain.contains(t) {
            return Err(SignalError::OutOfDomain {
                t: t.to_string(),
                domain: self.domain.to_string(),
            });
        }
        Ok(self.level_at(t))
    }

    pub fn final_value(&self) -> bool {
        self.init ^ (self.transitions.len() % 2 == 1)
    }

    pub fn is_transition(&self, t: &Time) -> bool {
        self.transitions.binary_search(t).is_ok()
    }

    /// Transitions lying inside `i`.
    pub fn transitions_in<'a>(&'a self, i: &'a Interval) -> impl Iterator<Item = &'a Time> + 'a {
        self.transitions.iter().filter(move |t| i.contains(t))
    }

    pub fn restrict(&self, i: &Interval) -> Result<Signal, SignalError> {
        if !i.is_subset_of(&self.domain) {
            return Err(SignalError::NotSubinterval {
                inner: i.to_string(),
                outer: self.domain.to_string(),
            });
        }
        Ok(self.restrict_unchecked(i))
    }

    /// Restriction that extends the signal by constants where `i` leaves the domain.
    pub fn restrict_unchecked(&self, i: &Interval) -> Signal {
        let init = match i.lo() {
            Bound::Unbounded => self.init,
            Bound::Closed(a) | Bound::Open(a) => self.level_at(a),
        };
        let transitions = self
            .transitions
            .iter()
            .filter(|t| i.after_lo(t) && i.below_hi(t))
            .cloned()
            .collect();
        Signal {
            domain: i.clone(),
            init,
            transitions,
        }
    }

    /// Same value pattern on a different domain, clipped or extended by constants.
    pub fn with_domain(&self, domain: Interval) -> Signal {
        self.restrict_unchecked(&domain)
    }

    /// Pointwise equality on `i`. With `modulo_isolated`, values at finitely
    /// many isolated points are ignored; for right-continuous signals this
    /// amounts to ignoring a transition exactly at a closed upper end.
    pub fn equal_on(&self, other: &Signal, i: &Interval, modulo_isolated: bool) -> Result<bool, SignalError> {
        let a = self.restrict(i)?;
        let b = other.restrict(i)?;
        if !modulo_isolated {
            return Ok(a.init == b.init && a.transitions == b.transitions);
        }
        let strip = |s: &Signal| -> Vec<Time> {
            let mut v = s.transitions.clone();
            if let Some(hi) = i.hi_time() {
                if v.last() == Some(hi) {
                    v.pop();
                }
            }
            v
        };
        let degenerate = i.length().map(|l| l.is_zero()).unwrap_or(false);
        Ok(degenerate || (a.init == b.init && strip(&a) == strip(&b)))
    }

    /// Maximal constant pieces in order.
    pub fn segments(&self) -> Vec<Segment> {
        let mut out = Vec::with_capacity(self.transitions.len() + 1);
        let mut start = self.domain.lo_time().cloned();
        let mut value = self.init;
        for t in &self.transitions {
            out.push(Segment {
                start: start.clone(),
                end: Some(t.clone()),
                value,
            });
            start = Some(t.clone());
            value = !value;
        }
        out.push(Segment {
            start,
            end: self.domain.hi_time().cloned(),
            value,
        });
        out
    }

    /// Pointwise combination of several signals sharing one domain.
    pub fn combine(signals: &[&Signal], f: impl Fn(&[bool]) -> bool) -> Result<Signal, SignalError> {
        let Some(first) = signals.first() else {
            return Err(SignalError::Invalid("no signals to combine".into()));
        };
        let domain = first.domain.clone();
        if signals.iter().any(|s| s.domain != domain) {
            return Err(SignalError::Invalid("signals have different domains".into()));
        }
        let events: BTreeSet<&Time> = signals.iter().flat_map(|s| s.transitions.iter()).collect();
        let mut vals: Vec<bool> = signals.iter().map(|s| s.init).collect();
        let init = f(&vals);
        let mut cur = init;
        let mut transitions = Vec::new();
        for t in events {
            for (v, s) in vals.iter_mut().zip(signals) {
                *v = s.level_at(t);
            }
            let nv = f(&vals);
            if nv != cur {
                transitions.push(t.clone());
                cur = nv;
            }
        }
        Ok(Signal {
            domain,
            init,
            transitions,
        })
    }

    pub fn invert(&self) -> Signal {
        Signal {
            domain: self.domain.clone(),
            init: !self.init,
            transitions: self.transitions.clone(),
        }
    }

    /// Header plus one transition per line (see [`parse_signal_file`]).
    pub fn to_text(&self, port: &str) -> String {
        let lo = match self.domain.lo() {
            Bound::Unbounded => "-inf".to_string(),
            Bound::Closed(t) => t.to_string().replace(' ', ""),
            Bound::Open(t) => format!("({}", t.to_string().replace(' ', "")),
        };
        let hi = match self.domain.hi() {
            Bound::Unbounded => "inf".to_string(),
            Bound::Closed(t) => t.to_string().replace(' ', ""),
            Bound::Open(t) => format!("{})", t.to_string().replace(' ', "")),
        };
        let mut s = format!("port {port} domain {lo} {hi} init {}\n", u8::from(self.init));
        for t in &self.transitions {
            let _ = writeln!(s, "{t}");
        }
        s
    }
}

fn parse_lo(tok: &str) -> Result<Bound, ParseError> {
    match tok {
        "-inf" => Ok(Bound::Unbounded),
        _ if tok.starts_with('(') => Ok(Bound::Open(tok[1..].parse()?)),
        _ if tok.starts_with('[') => Ok(Bound::Closed(tok[1..].parse()?)),
        _ => Ok(Bound::Closed(tok.parse()?)),
    }
}

fn parse_hi(tok: &str) -> Result<Bound, ParseError> {
    match tok {
        "inf" | "+inf" => Ok(Bound::Unbounded),
        _ if tok.ends_with(')') => Ok(Bound::Open(tok[..tok.len() - 1].parse()?)),
        _ if tok.ends_with(']') => Ok(Bound::Closed(tok[..tok.len() - 1].parse()?)),
        _ => Ok(Bound::Closed(tok.parse()?)),
    }
}

/// Parses one or more signal blocks:
///
/// ```text
/// port <name> domain <lo> <hi> init <0|1>
/// <transition time>
/// ...
/// ```
///
/// Bounds are closed unless written `(lo` / `hi)`; `-inf` / `inf` denote
/// unbounded ends. Blank lines and `#` comments are ignored.
pub fn parse_signal_file(text: &str) -> Result<BTreeMap<String, Signal>, ParseError> {
    let mut out = BTreeMap::new();
    let mut current: Option<(String, Interval, bool, Vec<Time>)> = None;
    let finish = |cur: Option<(String, Interval, bool, Vec<Time>)>,
                  out: &mut BTreeMap<String, Signal>|
     -> Result<(), ParseError> {
        if let Some((name, dom, init, ts)) = cur {
            let sig = Signal::new(dom, init, ts)
                .map_err(|e| ParseError::new(format!("port `{name}`: {e}")))?;
            if out.insert(name.clone(), sig).is_some() {
                return Err(ParseError::new(format!("port `{name}` given twice")));
            }
        }
        Ok(())
    };
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("port ") {
            finish(current.take(), &mut out)?;
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() != 6 || toks[1] != "domain" || toks[4] != "init" {
                return Err(ParseError::new(format!(
                    "line {}: expected `port <name> domain <lo> <hi> init <0|1>`",
                    lineno + 1
                )));
            }
            let dom = Interval::new(parse_lo(toks[2])?, parse_hi(toks[3])?)?;
            let init = match toks[5] {
                "0" => false,
                "1" => true,
                other => return Err(ParseError::new(format!("line {}: bad init `{other}`", lineno + 1))),
            };
            current = Some((toks[0].to_string(), dom, init, Vec::new()));
        } else {
            let Some(cur) = current.as_mut() else {
                return Err(ParseError::new(format!("line {}: time before any `port` header", lineno + 1)));
            };
            cur.3.push(line.parse().map_err(|e: ParseError| {
                ParseError::new(format!("line {}: {}", lineno + 1, e.message))
            })?);
        }
    }
    finish(current, &mut out)?;
    Ok(out)
}

/// An interval plus one signal per port.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Execution {
    pub interval: Interval,
    pub signals: BTreeMap<String, Signal>,
}

impl Execution {
    pub fn new(interval: Interval) -> Self {
        Execution {
            interval,
            signals: BTreeMap::new(),
        }
    }

    pub fn with(mut self, port: impl Into<String>, signal: Signal) -> Self {
        self.signals.insert(port.into(), signal);
        self
    }

    pub fn insert(&mut self, port: impl Into<String>, signal: Signal) {
        self.signals.insert(port.into(), signal);
    }

    pub fn get(&self, port: &str) -> Result<&Signal, SignalError> {
        self.signals
            .get(port)
            .ok_or_else(|| SignalError::Invalid(format!("no signal for port `{port}`")))
    }

    pub fn restrict(&self, i: &Interval) -> Result<Execution, SignalError> {
        let signals = self
            .signals
            .iter()
            .map(|(k, s)| Ok((k.clone(), s.restrict(i)?)))
            .collect::<Result<_, SignalError>>()?;
        Ok(Execution {
            interval: i.clone(),
            signals,
        })
    }

    /// Keeps only the listed ports, renaming `(from, to)`.
    pub fn project(&self, ports: &[(&str, &str)]) -> Result<Execution, SignalError> {
        let mut e = Execution::new(self.interval.clone());
        for (from, to) in ports {
            e.insert(*to, self.get(from)?.clone());
        }
        Ok(e)
    }

    /// All transition instants across ports, sorted.
    pub fn event_times(&self) -> Vec<Time> {
        let set: BTreeSet<&Time> = self.signals.values().flat_map(|s| s.transitions.iter()).collect();
        set.into_iter().cloned().collect()
    }

    /// CSV with columns `time_exact,time_decimal,<port>...`, one row at the
    /// domain start and one per event time.
    pub fn to_csv(&self, ports: &[&str], digits: usize) -> Result<String, SignalError> {
        let sigs: Vec<&Signal> = ports.iter().map(|p| self.get(p)).collect::<Result<_, _>>()?;
        let mut times: BTreeSet<Time> = BTreeSet::new();
        if let Some(lo) = self.interval.lo_time() {
            times.insert(lo.clone());
        }
        for s in &sigs {
            times.extend(s.transitions.iter().cloned());
        }
        let mut out = String::from("time_exact,time_decimal");
        for p in ports {
            out.push(',');
            out.push_str(p);
        }
        out.push('\n');
        for t in &times {
            let _ = write!(out, "{},{}", t.to_string().replace(' ', ""), t.to_decimal(digits));
            for s in &sigs {
                let _ = write!(out, ",{}", u8::from(s.level_at(t)));
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Step-plot data for gnuplot: decimal time then one column per port,
    /// with a duplicated row at each transition so lines render as steps.
    pub fn to_step_data(&self, ports: &[&str]) -> Result<String, SignalError> {
        let sigs: Vec<&Signal> = ports.iter().map(|p| self.get(p)).collect::<Result<_, _>>()?;
        let mut out = format!("# time {}\n", ports.join(" "));
        let mut times: BTreeSet<Time> = sigs.iter().flat_map(|s| s.transitions.iter().cloned()).collect();
        if let Some(lo) = self.interval.lo_time() {
            times.insert(lo.clone());
        }
        if let Some(hi) = self.interval.hi_time() {
            times.insert(hi.clone());
        }
        for t in &times {
            let d = t.to_decimal(6);
            let _ = write!(out, "{d}");
            for s in &sigs {
                let _ = write!(out, " {}", u8::from(s.level_before(t)));
            }
            out.push('\n');
            let _ = write!(out, "{d}");
            for s in &sigs {
                let _ = write!(out, " {}", u8::from(s.level_at(t)));
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// How a finite prefix of an infinite covering is closed off.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Closure {
    /// The limit is taken over the given chain only.
    Finite,
    /// Every signal stays constant after its last transition, on to ±∞.
    Constant,
}

/// Result of [`limit_of_covering`]: the execution on the union of the chain's
/// intervals, and the closure rule that extends it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoveringLimit {
    pub prefix: Execution,
    pub closure: Closure,
}

impl CoveringLimit {
    /// The limit execution itself: the prefix for a finite chain, or the
    /// prefix extended to the whole real line under the constant closure.
    pub fn execution(&self) -> Execution {
        match self.closure {
            Closure::Finite => self.prefix.clone(),
            Closure::Constant => {
                let line = Interval::real_line();
                Execution {
                    interval: line.clone(),
                    signals: self
                        .prefix
                        .signals
                        .iter()
                        .map(|(k, s)| (k.clone(), s.with_domain(line.clone())))
                        .collect(),
                }
            }
        }
    }
}

/// Limit of a chain of executions on nested intervals, each agreeing with its
/// successor on its own interval.
pub fn limit_of_covering(chain: &[Execution], closure: Closure) -> Result<CoveringLimit, SignalError> {
    let Some(last) = chain.last() else {
        return Err(SignalError::Covering("empty chain".into()));
    };
    for (i, w) in chain.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        if !a.interval.is_subset_of(&b.interval) {
            return Err(SignalError::Covering(format!(
                "element {} interval {} not inside element {} interval {}",
                i,
                a.interval,
                i + 1,
                b.interval
            )));
        }
        let keys_a: Vec<_> = a.signals.keys().collect();
        let keys_b: Vec<_> = b.signals.keys().collect();
        if keys_a != keys_b {
            return Err(SignalError::Covering(format!("elements {i} and {} have different ports", i + 1)));
        }
        for (port, sa) in &a.signals {
            let sb = b.signals[port].restrict(&a.interval)?;
            if sb != *sa {
                return Err(SignalError::Covering(format!(
                    "element {} disagrees with element {} on port `{port}`",
                    i + 1,
                    i
                )));
            }
        }
    }
    Ok(CoveringLimit {
        prefix: last.clone(),
        closure,
    })
}
