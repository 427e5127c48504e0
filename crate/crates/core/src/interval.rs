use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ParseError;
use crate::time::Time;

/// One end of an [`Interval`]. Infinite ends are explicit variants.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bound {
    Unbounded,
    Closed(Time),
    Open(Time),
}

impl Bound {
    pub fn time(&self) -> Option<&Time> {
        match self {
            Bound::Unbounded => None,
            Bound::Closed(t) | Bound::Open(t) => Some(t),
        }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self, Bound::Closed(_))
    }
}

/// A contiguous, non-empty set of time points.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    lo: Bound,
    hi: Bound,
}

impl Interval {
    /// Validates `lo <= hi`, and that a degenerate interval is closed at both ends.
    pub fn new(lo: Bound, hi: Bound) -> Result<Self, ParseError> {
        if let (Some(a), Some(b)) = (lo.time(), hi.time()) {
            match a.cmp(b) {
                Ordering::Greater => {
                    return Err(ParseError::new(format!("empty interval: {a} > {b}")))
                }
                Ordering::Equal if !(lo.is_closed() && hi.is_closed()) => {
                    return Err(ParseError::new(format!("degenerate interval at {a} must be closed")))
                }
                _ => {}
            }
        }
        Ok(Interval { lo, hi })
    }

    /// `[lo, hi]`; panics when `lo > hi`.
    pub fn closed(lo: Time, hi: Time) -> Self {
        Interval::new(Bound::Closed(lo), Bound::Closed(hi)).expect("lo <= hi")
    }

    /// `[lo, hi)`; panics when `lo >= hi`.
    pub fn closed_open(lo: Time, hi: Time) -> Self {
        Interval::new(Bound::Closed(lo), Bound::Open(hi)).expect("lo < hi")
    }

    pub fn real_line() -> Self {
        Interval {
            lo: Bound::Unbounded,
            hi: Bound::Unbounded,
        }
    }

    pub fn lo(&self) -> &Bound {
        &self.lo
    }

    pub fn hi(&self) -> &Bound {
        &self.hi
    }

    pub fn lo_time(&self) -> Option<&Time> {
        self.lo.time()
    }

    pub fn hi_time(&self) -> Option<&Time> {
        self.hi.time()
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.time().is_some() && self.hi.time().is_some()
    }

    pub fn length(&self) -> Option<Time> {
        Some(self.hi.time()? - self.lo.time()?)
    }

    /// `t` is strictly past the lower end (the region where transitions may live).
    pub fn after_lo(&self, t: &Time) -> bool {
        match &self.lo {
            Bound::Unbounded => true,
            Bound::Closed(a) | Bound::Open(a) => t > a,
        }
    }

    pub fn below_hi(&self, t: &Time) -> bool {
        match &self.hi {
            Bound::Unbounded => true,
            Bound::Closed(b) => t <= b,
            Bound::Open(b) => t < b,
        }
    }

    pub fn contains(&self, t: &Time) -> bool {
        let lo_ok = match &self.lo {
            Bound::Unbounded => true,
            Bound::Closed(a) => t >= a,
            Bound::Open(a) => t > a,
        };
        lo_ok && self.below_hi(t)
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        let lo_ok = match (&self.lo, &other.lo) {
            (_, Bound::Unbounded) => true,
            (Bound::Unbounded, _) => false,
            (Bound::Closed(a), Bound::Closed(b)) | (Bound::Open(a), Bound::Open(b)) => a >= b,
            (Bound::Open(a), Bound::Closed(b)) => a >= b,
            (Bound::Closed(a), Bound::Open(b)) => a > b,
        };
        let hi_ok = match (&self.hi, &other.hi) {
            (_, Bound::Unbounded) => true,
            (Bound::Unbounded, _) => false,
            (Bound::Closed(a), Bound::Closed(b)) | (Bound::Open(a), Bound::Open(b)) => a <= b,
            (Bound::Open(a), Bound::Closed(b)) => a <= b,
            (Bound::Closed(a), Bound::Open(b)) => a < b,
        };
        lo_ok && hi_ok
    }

    /// Intersection, or `None` when empty.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = match (&self.lo, &other.lo) {
            (Bound::Unbounded, b) | (b, Bound::Unbounded) => b.clone(),
            (a, b) => {
                let (ta, tb) = (a.time().unwrap(), b.time().unwrap());
                match ta.cmp(tb) {
                    Ordering::Greater => a.clone(),
                    Ordering::Less => b.clone(),
                    Ordering::Equal if a.is_closed() && b.is_closed() => a.clone(),
                    Ordering::Equal => Bound::Open(ta.clone()),
                }
            }
        };
        let hi = match (&self.hi, &other.hi) {
            (Bound::Unbounded, b) | (b, Bound::Unbounded) => b.clone(),
            (a, b) => {
                let (ta, tb) = (a.time().unwrap(), b.time().unwrap());
                match ta.cmp(tb) {
                    Ordering::Less => a.clone(),
                    Ordering::Greater => b.clone(),
                    Ordering::Equal if a.is_closed() && b.is_closed() => a.clone(),
                    Ordering::Equal => Bound::Open(ta.clone()),
                }
            }
        };
        Interval::new(lo, hi).ok()
    }

    /// Same interval with the lower end moved to `t` (closed), clipped to stay non-empty.
    pub fn with_lo(&self, t: Time) -> Option<Interval> {
        Interval::new(Bound::Closed(t), self.hi.clone()).ok()
    }

    pub fn with_hi(&self, t: Time) -> Option<Interval> {
        Interval::new(self.lo.clone(), Bound::Closed(t)).ok()
    }

    /// Parses the `lo..hi` horizon syntax used on the command line (closed ends).
    pub fn parse_range(s: &str) -> Result<Interval, ParseError> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| ParseError::new(format!("expected `lo..hi`, got `{s}`")))?;
        Interval::new(Bound::Closed(a.parse()?), Bound::Closed(b.parse()?))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.lo {
            Bound::Unbounded => write!(f, "(-inf")?,
            Bound::Closed(t) => write!(f, "[{t}")?,
            Bound::Open(t) => write!(f, "({t}")?,
        }
        match &self.hi {
            Bound::Unbounded => write!(f, ", inf)"),
            Bound::Closed(t) => write!(f, ", {t}]"),
            Bound::Open(t) => write!(f, ", {t})"),
        }
    }
}
