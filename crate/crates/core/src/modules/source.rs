//! Input-free signal sources.

use serde::{Deserialize, Serialize};

use super::Verdict;
use crate::interval::Interval;
use crate::signal::Signal;
use crate::strategy::Adversary;
use crate::time::Time;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum SourceKind {
    Constant { value: bool },
    /// Switches to `value` at `at`.
    Step { at: Time, value: bool },
    /// High on `[at, at + width)`.
    Pulse { at: Time, width: Time },
    /// High on `[0, w)` with `w` drawn from `[min_width, max_width]`.
    RandomPulse { min_width: Time, max_width: Time },
}

impl SourceKind {
    pub fn name(&self) -> &'static str {
        match self {
            SourceKind::Constant { .. } => "constant",
            SourceKind::Step { .. } => "step",
            SourceKind::Pulse { .. } => "pulse",
            SourceKind::RandomPulse { .. } => "random-pulse",
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            SourceKind::Pulse { width, .. } if !width.is_positive() => Err(format!("pulse width {width} must be positive")),
            SourceKind::RandomPulse { min_width, max_width } if !min_width.is_positive() || min_width > max_width => {
                Err(format!("width range [{min_width}, {max_width}] must be positive and non-empty"))
            }
            _ => Ok(()),
        }
    }

    pub fn generate(&self, domain: &Interval, adv: &mut Adversary, instance: usize) -> Signal {
        match self {
            SourceKind::Constant { value } => Signal::constant(domain.clone(), *value),
            SourceKind::Step { at, value } => Signal::from_toggles(domain.clone(), !value, [at.clone()]),
            SourceKind::Pulse { at, width } => pulse(domain, at, width),
            SourceKind::RandomPulse { min_width, max_width } => {
                let zero = Time::zero();
                let w = adv.choose(instance, &zero, min_width, false, max_width);
                pulse(domain, &zero, &w)
            }
        }
    }
}

fn pulse(domain: &Interval, at: &Time, width: &Time) -> Signal {
    Signal::from_toggles(domain.clone(), false, [at.clone(), at + width])
}

pub fn check(kind: &SourceKind, out: &Signal, i: &Interval) -> Verdict {
    let matches = |expected: &Signal| expected.equal_on(out, i, true).unwrap_or(false);
    let dom = out.domain();
    let ok = match kind {
        SourceKind::Constant { value } => matches(&Signal::constant(dom.clone(), *value)),
        SourceKind::Step { at, value } => matches(&Signal::from_toggles(dom.clone(), !value, [at.clone()])),
        SourceKind::Pulse { at, width } => matches(&pulse(dom, at, width)),
        SourceKind::RandomPulse { min_width, max_width } => {
            let zero = Time::zero();
            let fall = out.transitions().iter().find(|t| i.contains(t) && t.is_positive() && !out.level_at(t));
            let widths: Vec<Time> = match fall {
                Some(f) if f >= min_width && f <= max_width => vec![f.clone()],
                Some(_) => vec![],
                None => vec![min_width.clone(), max_width.clone()],
            };
            widths.iter().any(|w| matches(&pulse(dom, &zero, w)))
        }
    };
    if ok {
        Verdict::Feasible
    } else {
        Verdict::infeasible("out", out.transitions().first().cloned(), format!("not a {} source signal", kind.name()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::{AdversaryStrategy, Policy};

    fn t(n: i64) -> Time {
        Time::from_int(n)
    }

    #[test]
    fn source_examples() {
        let dom = Interval::closed(t(-1), t(10));
        let mut adv = Adversary::new(AdversaryStrategy::new(7, Policy::Uniform));
        let c = SourceKind::Constant { value: true }.generate(&dom, &mut adv, 0);
        assert!(c.is_constant());
        let p = SourceKind::Pulse { at: t(0), width: Time::frac(1, 2) }.generate(&dom, &mut adv, 0);
        assert_eq!(p.transitions(), &[t(0), Time::frac(1, 2)]);
        let rp = SourceKind::RandomPulse { min_width: Time::frac(1, 10), max_width: t(1) };
        let a = rp.generate(&dom, &mut Adversary::new(AdversaryStrategy::new(7, Policy::Uniform)), 0);
        let b = rp.generate(&dom, &mut Adversary::new(AdversaryStrategy::new(7, Policy::Uniform)), 0);
        assert_eq!(a, b);
        assert!(check(&rp, &a, &dom).is_feasible());
        assert!(check(&rp, &p, &dom).is_feasible());
        let wide = SourceKind::Pulse { at: t(0), width: t(2) }.generate(&dom, &mut adv, 0);
        assert!(!check(&rp, &wide, &dom).is_feasible());
        let sub = Interval::closed(t(5), t(10));
        assert!(check(&rp, &wide, &sub).is_feasible());
    }
}
