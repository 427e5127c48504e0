//! Finite unions of closed time intervals.

use crate::time::Time;

/// Sorted, disjoint closed intervals `[a, b]` (points allowed).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntervalSet {
    parts: Vec<(Time, Time)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet::default()
    }

    pub fn single(a: Time, b: Time) -> Self {
        IntervalSet::from_parts(vec![(a, b)])
    }

    /// Normalizes arbitrary closed intervals: drops empty ones, merges overlaps.
    pub fn from_parts(mut parts: Vec<(Time, Time)>) -> Self {
        parts.retain(|(a, b)| a <= b);
        parts.sort();
        let mut out: Vec<(Time, Time)> = Vec::with_capacity(parts.len());
        for (a, b) in parts {
            match out.last_mut() {
                Some(last) if a <= last.1 => {
                    if b > last.1 {
                        last.1 = b;
                    }
                }
                _ => out.push((a, b)),
            }
        }
        IntervalSet { parts: out }
    }

    pub fn parts(&self) -> &[(Time, Time)] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains(&self, t: &Time) -> bool {
        let i = self.parts.partition_point(|(_, b)| b < t);
        i < self.parts.len() && self.parts[i].0 <= *t
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        IntervalSet::from_parts(self.parts.iter().chain(&other.parts).cloned().collect())
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.parts.len() && j < other.parts.len() {
            let (a1, b1) = &self.parts[i];
            let (a2, b2) = &other.parts[j];
            let lo = if a1 > a2 { a1 } else { a2 };
            let hi = if b1 < b2 { b1 } else { b2 };
            if lo <= hi {
                out.push((lo.clone(), hi.clone()));
            }
            if b1 < b2 {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet { parts: out }
    }

    pub fn shift(&self, by: &Time) -> IntervalSet {
        IntervalSet {
            parts: self.parts.iter().map(|(a, b)| (a + by, b + by)).collect(),
        }
    }

    pub fn first(&self) -> Option<&Time> {
        self.parts.first().map(|(a, _)| a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(n: i64) -> Time {
        Time::from_int(n)
    }

    #[test]
    fn merge_and_intersect() {
        let a = IntervalSet::from_parts(vec![(t(0), t(2)), (t(1), t(3)), (t(5), t(5))]);
        assert_eq!(a.parts(), &[(t(0), t(3)), (t(5), t(5))]);
        let b = IntervalSet::from_parts(vec![(t(3), t(6))]);
        let c = a.intersect(&b);
        assert_eq!(c.parts(), &[(t(3), t(3)), (t(5), t(5))]);
        assert!(c.contains(&t(5)) && !c.contains(&t(4)));
        assert_eq!(a.shift(&t(-1)).first(), Some(&t(-1)));
        assert_eq!(a.union(&b).parts(), &[(t(0), t(6))]);
    }
}
