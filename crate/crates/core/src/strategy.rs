//! Seeded adversary choosing delays inside the windows channels allow.

use std::collections::BTreeMap;

use num::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::time::Time;

/// Resolution of uniformly drawn delays: a window is split into this many steps.
pub const UNIFORM_STEPS: i64 = 1000;

/// Resolution of the nudge applied to replayed choices that fell out of their window.
const FALLBACK_STEPS: i64 = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    Minimal,
    Maximal,
    #[default]
    Uniform,
}

impl std::str::FromStr for Policy {
    type Err = crate::error::ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "minimal" | "min" => Ok(Policy::Minimal),
            "maximal" | "max" => Ok(Policy::Maximal),
            "uniform" => Ok(Policy::Uniform),
            _ => Err(crate::error::ParseError::new(format!("unknown policy `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryStrategy {
    pub seed: u64,
    pub policy: Policy,
}

impl AdversaryStrategy {
    pub fn new(seed: u64, policy: Policy) -> Self {
        AdversaryStrategy { seed, policy }
    }
}

/// A delay choice made by one channel instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub instance: usize,
    pub input: Time,
    pub output: Time,
}

/// Runtime state of a strategy: one independent random stream per module
/// instance, plus optional forced choices replayed from an earlier run.
#[derive(Clone, Debug)]
pub struct Adversary {
    strategy: AdversaryStrategy,
    streams: BTreeMap<usize, ChaCha8Rng>,
    replay: BTreeMap<(usize, Time), Time>,
}

impl Adversary {
    pub fn new(strategy: AdversaryStrategy) -> Self {
        Adversary {
            strategy,
            streams: BTreeMap::new(),
            replay: BTreeMap::new(),
        }
    }

    pub fn with_replay(mut self, decisions: &[Decision]) -> Self {
        for d in decisions {
            self.replay.insert((d.instance, d.input.clone()), d.output.clone());
        }
        self
    }

    pub fn strategy(&self) -> &AdversaryStrategy {
        &self.strategy
    }

    /// Random stream for `instance`, independent of how other instances draw.
    pub fn rng(&mut self, instance: usize) -> &mut ChaCha8Rng {
        let seed = self.strategy.seed;
        self.streams.entry(instance).or_insert_with(|| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(instance as u64 + 1);
            r
        })
    }

    /// Picks an output instant in the window from `lo` (excluded when
    /// `lo_strict`) to `hi`. A replayed choice for `(instance, input)` wins if
    /// it lies in the window; otherwise the choice is pushed to just above the
    /// window's lower end.
    pub fn choose(&mut self, instance: usize, input: &Time, lo: &Time, lo_strict: bool, hi: &Time) -> Time {
        if let Some(t) = self.replay.get(&(instance, input.clone())) {
            let ok = if lo_strict { t > lo } else { t >= lo } && t <= hi;
            if ok {
                return t.clone();
            }
            if !lo_strict || lo >= hi {
                return lo.clone().min(hi.clone());
            }
            return lo + &(hi - lo).scale(&BigRational::new(1.into(), FALLBACK_STEPS.into()));
        }
        let policy = self.strategy.policy;
        if lo >= hi {
            return hi.clone();
        }
        let width = hi - lo;
        let k = match policy {
            Policy::Maximal => UNIFORM_STEPS,
            Policy::Minimal => i64::from(lo_strict),
            Policy::Uniform => {
                let start = i64::from(lo_strict);
                self.rng(instance).gen_range(start..=UNIFORM_STEPS)
            }
        };
        lo + &width.scale(&BigRational::new(k.into(), UNIFORM_STEPS.into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_hit_window_ends() {
        let (lo, hi) = (Time::from_int(1), Time::from_int(2));
        let mut a = Adversary::new(AdversaryStrategy::new(0, Policy::Minimal));
        assert_eq!(a.choose(0, &lo, &lo, false, &hi), lo);
        assert!(a.choose(0, &lo, &lo, true, &hi) > lo);
        let mut a = Adversary::new(AdversaryStrategy::new(0, Policy::Maximal));
        assert_eq!(a.choose(0, &lo, &lo, true, &hi), hi);
    }

    #[test]
    fn uniform_is_reproducible_per_instance() {
        let (lo, hi) = (Time::zero(), Time::sqrt2());
        let draw = |order: &[usize]| {
            let mut a = Adversary::new(AdversaryStrategy::new(7, Policy::Uniform));
            let mut out = BTreeMap::new();
            for &i in order {
                out.entry(i).or_insert_with(Vec::new).push(a.choose(i, &lo, &lo, false, &hi));
            }
            out
        };
        let x = draw(&[0, 1, 0, 1]);
        let y = draw(&[1, 1, 0, 0]);
        assert_eq!(x, y);
        for v in x.values().flatten() {
            assert!(*v >= lo && *v <= hi);
        }
    }

    #[test]
    fn replay_overrides_inside_window() {
        let d = Decision {
            instance: 3,
            input: Time::from_int(5),
            output: Time::frac(11, 2),
        };
        let mut a = Adversary::new(AdversaryStrategy::new(1, Policy::Maximal)).with_replay(&[d]);
        let r = a.choose(3, &Time::from_int(5), &Time::from_int(5), false, &Time::from_int(6));
        assert_eq!(r, Time::frac(11, 2));
        let r = a.choose(3, &Time::from_int(5), &Time::from_int(5), false, &Time::frac(21, 4));
        assert_eq!(r, Time::from_int(5));
        let r = a.choose(3, &Time::from_int(5), &Time::from_int(6), true, &Time::from_int(7));
        assert_eq!(r, Time::from_int(6) + Time::frac(1, 1_000_000));
    }
}
