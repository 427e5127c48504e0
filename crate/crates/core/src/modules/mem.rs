//! Watchdog memory cell: output `y` is 1 at `t` iff at some `t' ∈ (t - T, t)`
//! the output was 0 while the input `x` was 1.
//!
//! In right-continuous form a trigger at `s` makes `y` high on `[s, s + T)`.
//! When the window expires while `x` is still high the cell retriggers; `y`
//! is then 0 only at that single instant, which the stored signal does not
//! show, so retrigger instants are reported separately.

use serde::{Deserialize, Serialize};

use super::Verdict;
use crate::error::SignalError;
use crate::interval::Interval;
use crate::intervalset::IntervalSet;
use crate::signal::Signal;
use crate::time::Time;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemParams {
    #[serde(rename = "T")]
    pub t: Time,
}

impl MemParams {
    pub fn new(t: Time) -> Result<Self, String> {
        if !t.is_positive() {
            return Err(format!("window {t} must be positive"));
        }
        Ok(MemParams { t })
    }
}

/// Boundary condition at the start of a run: `Some(u)` means the output is
/// high and its current window ends at `u ∈ (lo, lo + T]`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemInit {
    pub high_until: Option<Time>,
}

#[derive(Clone, Debug)]
pub struct MemState {
    t: Time,
    until: Option<Time>,
    pub retriggers: Vec<Time>,
}

impl MemState {
    pub fn start(params: &MemParams, init: &MemInit, lo: &Time) -> Result<MemState, String> {
        if let Some(u) = &init.high_until {
            if u <= lo || *u > lo + &params.t {
                return Err(format!("window end {u} outside ({lo}, {}]", lo + &params.t));
            }
        }
        Ok(MemState {
            t: params.t.clone(),
            until: init.high_until.clone(),
            retriggers: Vec::new(),
        })
    }

    pub fn output(&self) -> bool {
        self.until.is_some()
    }

    /// Next instant at which the cell acts on its own.
    pub fn wakeup(&self) -> Option<&Time> {
        self.until.as_ref()
    }

    /// Evaluates the cell at instant `now` with input value `x`; returns the output.
    pub fn step(&mut self, now: &Time, x: bool) -> bool {
        if self.until.as_ref() == Some(now) {
            if x {
                self.retriggers.push(now.clone());
                self.until = Some(now + &self.t);
            } else {
                self.until = None;
            }
        }
        if self.until.is_none() && x {
            self.until = Some(now + &self.t);
        }
        self.output()
    }
}

/// Output for a whole input signal (bounded start required), plus retrigger instants.
pub fn generate(params: &MemParams, x: &Signal, init: &MemInit) -> Result<(Signal, Vec<Time>), SignalError> {
    let dom = x.domain();
    let lo = dom
        .lo_time()
        .ok_or_else(|| SignalError::Invalid("memory cell needs a bounded start".into()))?;
    let mut st = MemState::start(params, init, lo).map_err(SignalError::Invalid)?;
    let y0 = st.step(lo, x.level_at(lo));
    let mut toggles = Vec::new();
    let mut y = y0;
    let mut xs = x.transitions().iter().peekable();
    loop {
        let next_x = xs.peek().cloned();
        let next = match (next_x, st.wakeup()) {
            (Some(a), Some(b)) => a.clone().min(b.clone()),
            (Some(a), None) => a.clone(),
            (None, Some(b)) => b.clone(),
            (None, None) => break,
        };
        if !dom.below_hi(&next) {
            break;
        }
        while xs.peek().is_some_and(|t| **t == next) {
            xs.next();
        }
        let ny = st.step(&next, x.level_at(&next));
        if ny != y {
            toggles.push(next);
            y = ny;
        }
    }
    Ok((Signal::new(dom.clone(), y0, toggles)?, st.retriggers))
}

/// Interval feasibility. The first window of the interval may be justified by
/// an arbitrary history; values at isolated instants are not constrained.
pub fn check(params: &MemParams, x: &Signal, y: &Signal, i: &Interval) -> Verdict {
    let t = &params.t;
    let (x, y) = match (x.restrict(i), y.restrict(i)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) => return Verdict::infeasible("x", None, e.to_string()),
        (_, Err(e)) => return Verdict::infeasible("y", None, e.to_string()),
    };
    // unbounded ends: the signals are eventually constant there, and the
    // definition forces x and y to agree in that constant region
    let marks: Vec<&Time> = x.transitions().iter().chain(y.transitions()).collect();
    let first = marks.iter().min().map(|m| (*m).clone());
    let last = marks.iter().max().map(|m| (*m).clone());
    let lo = match i.lo_time() {
        Some(lo) => lo.clone(),
        None => {
            if x.init() != y.init() {
                return Verdict::infeasible("y", None, "input and output disagree before all transitions");
            }
            first.clone().or(i.hi_time().cloned()).unwrap_or_else(Time::zero) - t.scale_int(2)
        }
    };
    let hi = match i.hi_time() {
        Some(hi) => hi.clone(),
        None => {
            if x.final_value() != y.final_value() {
                return Verdict::infeasible("y", None, "input and output disagree after all transitions");
            }
            let base = last.unwrap_or_else(|| lo.clone()).max(lo.clone());
            base + t.scale_int(2)
        }
    };
    let window = Interval::closed(lo.clone(), hi.clone());
    let x = x.with_domain(window.clone());
    let y = y.with_domain(window);

    let mut highs: Vec<(Time, Time)> = x
        .segments()
        .into_iter()
        .filter(|s| s.value)
        .map(|s| (s.start.unwrap_or_else(|| lo.clone()), s.end.unwrap_or_else(|| hi.clone())))
        .collect();
    let x_high = IntervalSet::from_parts(highs.clone());
    highs.push((lo.clone(), lo.clone()));
    highs.push((hi.clone(), hi.clone()));
    let may_trigger = IntervalSet::from_parts(highs);

    for seg in y.segments() {
        let a = seg.start.clone().unwrap_or_else(|| lo.clone());
        let b = seg.end.clone().unwrap_or_else(|| hi.clone());
        if !seg.value {
            for (c, e) in x_high.parts() {
                let s = if *c > a { c } else { &a };
                let f = if *e < b { e } else { &b };
                if s < f {
                    return Verdict::infeasible("y", Some(s.clone()), "output low while the input is high");
                }
            }
            continue;
        }
        let known_start = a != lo;
        let known_end = b != hi;
        let bad = |at: &Time, why: &str| Verdict::infeasible("y", Some(at.clone()), why.to_string());
        match (known_start, known_end) {
            (true, true) => {
                let len = &b - &a;
                let k = len.checked_div(t).map(|q| q.floor()).unwrap_or_default();
                let k = i64::try_from(k).unwrap_or(0);
                if k < 1 || t.scale_int(k) != len {
                    return bad(&b, "high phase is not a whole number of windows");
                }
                if !may_trigger.contains(&a) {
                    return bad(&a, "output rises without a trigger");
                }
                for j in 1..k {
                    let c = &a + &t.scale_int(j);
                    if !may_trigger.contains(&c) {
                        return bad(&c, "window expires while the input is low, but the output stays high");
                    }
                }
            }
            (true, false) => {
                if !may_trigger.contains(&a) {
                    return bad(&a, "output rises without a trigger");
                }
                let mut c = &a + t;
                while c < hi {
                    if !may_trigger.contains(&c) {
                        return bad(&c, "window expires while the input is low, but the output stays high");
                    }
                    c += t;
                }
            }
            (false, true) => {
                let mut c = &b - t;
                while c >= lo {
                    if !may_trigger.contains(&c) {
                        return bad(&c, "window expires while the input is low, but the output stays high");
                    }
                    c -= t;
                }
            }
            (false, false) => {
                if &(&hi - &lo) <= t {
                    continue;
                }
                // phase of the retrigger chain: c + jT must be a possible trigger while < hi
                let mut phases = IntervalSet::single(lo.clone(), &lo + t);
                let mut j = 0i64;
                loop {
                    let off = t.scale_int(j);
                    if &lo + &off >= hi {
                        break;
                    }
                    let allowed = may_trigger.shift(&-off.clone()).union(&IntervalSet::single(&hi - &off, &lo + t));
                    phases = phases.intersect(&allowed);
                    if phases.is_empty() {
                        return bad(&lo, "output high throughout but no chain of retriggers fits the input");
                    }
                    j += 1;
                }
            }
        }
    }
    Verdict::Feasible
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(n: i64) -> Time {
        Time::from_int(n)
    }

    /// Direct evaluation of the defining predicate at `s`, given the output's
    /// zero set as closed intervals plus isolated points.
    fn predicate(x: &Signal, y: &Signal, retrig: &[Time], s: &Time, big_t: &Time, grid: i64) -> bool {
        let lo = s - big_t;
        (1..grid).any(|k| {
            let tp = &lo + &big_t.scale(&num::BigRational::new(k.into(), grid.into()));
            let y_zero = !y.level_at(&tp) || retrig.contains(&tp) || y.is_transition(&tp);
            y_zero && x.level_at(&tp)
        })
    }

    #[test]
    fn pulse_trigger_example() {
        let dom = Interval::closed(t(-1), t(10));
        let x = Signal::new(dom.clone(), false, vec![t(0), Time::frac(1, 5)]).unwrap();
        let p = MemParams::new(Time::frac(3, 2)).unwrap();
        let (y, r) = generate(&p, &x, &MemInit::default()).unwrap();
        assert_eq!(y.transitions(), &[t(0), Time::frac(3, 2)]);
        assert!(r.is_empty());
        assert!(check(&p, &x, &y, &dom).is_feasible());
        // predicate oracle on a grid of sample points (away from the edges)
        for k in -9..100 {
            let s = Time::frac(2 * k + 1, 20);
            assert_eq!(y.level_at(&s), predicate(&x, &y, &r, &s, &p.t, 600), "at {s}");
        }
    }

    #[test]
    fn quiet_input_gives_quiet_output() {
        let dom = Interval::closed(t(0), t(10));
        let x = Signal::constant(dom.clone(), false);
        let p = MemParams::new(t(1)).unwrap();
        let (y, _) = generate(&p, &x, &MemInit::default()).unwrap();
        assert!(y.is_constant() && !y.init());
    }

    #[test]
    fn retrigger_when_input_stays_high() {
        let dom = Interval::closed(t(0), t(10));
        let x = Signal::new(dom.clone(), false, vec![t(1), Time::frac(7, 2)]).unwrap();
        let p = MemParams::new(t(1)).unwrap();
        let (y, r) = generate(&p, &x, &MemInit::default()).unwrap();
        assert_eq!(y.transitions(), &[t(1), t(4)]);
        assert_eq!(r, vec![t(2), t(3)]);
        assert!(check(&p, &x, &y, &dom).is_feasible());
    }

    #[test]
    fn check_examples() {
        let p = MemParams::new(Time::frac(3, 2)).unwrap();
        let dom = Interval::closed(t(0), t(10));
        let x = Signal::constant(dom.clone(), false);
        let y = Signal::new(dom.clone(), false, vec![t(5), t(6)]).unwrap();
        assert!(!check(&p, &x, &y, &dom).is_feasible());
        // a short interval: a high output is always explained by history
        let short = Interval::closed(t(0), t(1));
        let xs = Signal::new(short.clone(), false, vec![Time::frac(1, 2)]).unwrap();
        assert!(check(&p, &xs, &Signal::constant(short.clone(), true), &short).is_feasible());
        // but a low output with a high input is never feasible
        assert!(!check(&p, &xs, &Signal::constant(short.clone(), false), &short).is_feasible());
        // steady state of the memory oscillator: high 3/2, low 1
        let xo = Signal::new(dom.clone(), true, vec![t(1), Time::frac(5, 2), Time::frac(7, 2), t(5), t(6)]).unwrap();
        let yo = Signal::new(dom.clone(), true, vec![Time::frac(3, 2), Time::frac(5, 2), t(4), t(5), Time::frac(13, 2)]).unwrap();
        assert!(check(&p, &xo, &yo, &dom).is_feasible());
        // the same output with a missing rise trigger
        let xo2 = Signal::new(dom.clone(), true, vec![t(1), Time::frac(5, 2), Time::frac(7, 2), Time::frac(11, 2), t(6)]).unwrap();
        assert!(!check(&p, &xo2, &yo, &dom).is_feasible());
    }

    #[test]
    fn high_throughout_needs_a_retrigger_chain() {
        let p = MemParams::new(t(1)).unwrap();
        let dom = Interval::closed(t(0), t(5));
        let y = Signal::constant(dom.clone(), true);
        let x = Signal::new(dom.clone(), false, vec![Time::frac(1, 2), Time::frac(3, 4)]).unwrap();
        assert!(!check(&p, &x, &y, &dom).is_feasible());
        let chain = Signal::new(
            dom.clone(),
            false,
            (0..5).flat_map(|k| [Time::frac(4 * k + 1, 4), Time::frac(4 * k + 2, 4)]).collect(),
        )
        .unwrap();
        assert!(check(&p, &chain, &y, &dom).is_feasible());
    }

    fn arb_x() -> impl Strategy<Value = Signal> {
        (any::<bool>(), proptest::collection::btree_set(1i64..200, 0..14)).prop_map(|(init, ts)| {
            let ts = ts.into_iter().map(|k| Time::frac(k, 8)).collect();
            Signal::new(Interval::closed(t(0), t(25)), init, ts).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]

        #[test]
        fn generated_output_is_feasible_and_subset_closed(
            x in arb_x(), tk in 1i64..12, h in proptest::option::of(1i64..=8), a in 0i64..200, b in 0i64..200,
        ) {
            let p = MemParams::new(Time::frac(tk, 4)).unwrap();
            let init = MemInit { high_until: h.map(|h| p.t.scale(&num::BigRational::new(h.into(), 8.into()))) };
            let (y, _) = generate(&p, &x, &init).unwrap();
            prop_assert!(check(&p, &x, &y, x.domain()).is_feasible());
            let (a, b) = (a.min(b), a.max(b));
            let sub = Interval::closed(Time::frac(a, 8), Time::frac(b, 8));
            prop_assert!(check(&p, &x, &y, &sub).is_feasible());
        }

        #[test]
        fn every_fall_is_one_window_after_the_last_trigger(x in arb_x(), tk in 1i64..12) {
            let p = MemParams::new(Time::frac(tk, 4)).unwrap();
            let (y, r) = generate(&p, &x, &MemInit::default()).unwrap();
            let mut last_trigger: Option<Time> = if y.init() { Some(t(0)) } else { None };
            for u in y.transitions() {
                if y.level_at(u) {
                    last_trigger = Some(u.clone());
                } else {
                    let mut s = last_trigger.clone().unwrap();
                    let latest = r.iter().rfind(|q| **q > s && *q < u).cloned();
                    if let Some(q) = latest { s = q; }
                    prop_assert_eq!(u.clone(), s + p.t.clone());
                }
            }
        }
    }
}
