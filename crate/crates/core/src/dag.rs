//! Longest node-weighted paths through feedback-free circuit graphs, used for
//! composed forgetfulness and delay bounds.

use std::collections::BTreeMap;

use petgraph::algo::toposort;
use petgraph::graph::NodeIndex;
use petgraph::Direction;

use crate::error::AnalysisError;
use crate::netlist::Netlist;
use crate::time::Time;

/// Maximum over all paths of the summed node weights, with `weights` keyed
/// by instance id. Every instance needs a weight and the graph must be acyclic.
pub fn longest_path(n: &Netlist, weights: &BTreeMap<String, Time>) -> Result<Time, AnalysisError> {
    let g = n.graph();
    let order = toposort(&g, None).map_err(|_| {
        let cycle = n.graph_analysis().cycles.into_iter().next().unwrap_or_default();
        AnalysisError::NotApplicable(format!("circuit graph has a cycle through {}", cycle.join(" -> ")))
    })?;
    let mut missing: Vec<&str> = n
        .modules
        .iter()
        .filter(|m| !weights.contains_key(&m.id))
        .map(|m| m.id.as_str())
        .collect();
    if !missing.is_empty() {
        missing.sort_unstable();
        return Err(AnalysisError::NotApplicable(format!("no bound declared for {}", missing.join(", "))));
    }
    if let Some((id, w)) = weights.iter().find(|(_, w)| w.is_negative()) {
        return Err(AnalysisError::Parameter(format!("bound {w} for `{id}` is negative")));
    }
    let mut best: Vec<Time> = vec![Time::zero(); g.node_count()];
    let mut overall = Time::zero();
    for v in order {
        let into = g
            .neighbors_directed(v, Direction::Incoming)
            .map(|u: NodeIndex| best[u.index()].clone())
            .max()
            .unwrap_or_else(Time::zero);
        let here = into + weights[&g[v]].clone();
        overall = overall.max(here.clone());
        best[v.index()] = here;
    }
    Ok(overall)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modules::{ChannelParams, GateKind, ModuleKind};
    use proptest::prelude::*;

    fn channel_chain(ids: &[&str]) -> Netlist {
        let mut n = Netlist::new("chain").input("a").output("z");
        let mut prev = "a".to_string();
        for id in ids {
            n = n
                .module(id, ModuleKind::Channel(ChannelParams::pure(Time::from_int(1))))
                .wire(&prev, &format!("{id}.in"));
            prev = format!("{id}.out");
        }
        n.wire(&prev, "z")
    }

    #[test]
    fn series_channels_add_up() {
        let n = channel_chain(&["c1", "c2"]);
        let w = BTreeMap::from([("c1".to_string(), Time::frac(1, 3)), ("c2".to_string(), Time::sqrt2())]);
        assert_eq!(longest_path(&n, &w).unwrap(), Time::frac(1, 3) + Time::sqrt2());
        let partial = BTreeMap::from([("c1".to_string(), Time::zero())]);
        assert!(matches!(longest_path(&n, &partial), Err(AnalysisError::NotApplicable(m)) if m.contains("c2")));
    }

    #[test]
    fn cycles_are_not_applicable() {
        let n = Netlist::new("loop")
            .output("z")
            .module("c", ModuleKind::Channel(ChannelParams::pure(Time::from_int(1))))
            .module("g", ModuleKind::Gate { gate: GateKind::Not })
            .wire("c.out", "g.in")
            .wire("g.out", "c.in")
            .wire("g.out", "z");
        let w = BTreeMap::from([("c".to_string(), Time::from_int(1)), ("g".to_string(), Time::zero())]);
        assert!(matches!(longest_path(&n, &w), Err(AnalysisError::NotApplicable(m)) if m.contains("cycle")));
    }

    /// Random DAG on `k` OR gates: edge i -> j for i < j when the mask bit is set.
    fn random_dag(k: usize, mask: &[bool]) -> Netlist {
        let mut n = Netlist::new("dag").input("a");
        let mut bit = mask.iter().copied().cycle();
        let mut feeds: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (j, f) in feeds.iter_mut().enumerate() {
            for i in 0..j {
                if bit.next().unwrap() {
                    f.push(i);
                }
            }
        }
        for (j, from) in feeds.iter().enumerate() {
            let id = format!("g{j}");
            n = n.module(&id, ModuleKind::Gate { gate: GateKind::Or(from.len().max(1)) });
            if from.is_empty() {
                n = n.wire("a", &format!("{id}.in0"));
            }
            for (p, i) in from.iter().enumerate() {
                n = n.wire(&format!("g{i}.out"), &format!("{id}.in{p}"));
            }
        }
        n
    }

    fn all_paths(feeds: &[Vec<usize>], w: &[Time]) -> Time {
        fn walk(v: usize, feeds: &[Vec<usize>], w: &[Time], acc: Time, best: &mut Time) {
            let acc = acc + w[v].clone();
            if acc > *best {
                *best = acc.clone();
            }
            for (j, f) in feeds.iter().enumerate() {
                if f.contains(&v) {
                    walk(j, feeds, w, acc.clone(), best);
                }
            }
        }
        let mut best = Time::zero();
        for v in 0..w.len() {
            walk(v, feeds, w, Time::zero(), &mut best);
        }
        best
    }

    proptest! {
        #[test]
        fn agrees_with_path_enumeration(
            k in 1usize..=12,
            mask in proptest::collection::vec(any::<bool>(), 1..70),
            nums in proptest::collection::vec((0i64..40, 1i64..9), 12),
        ) {
            let n = random_dag(k, &mask);
            prop_assert!(n.violations().is_empty(), "{:?}", n.violations());
            let w: Vec<Time> = nums.iter().take(k).map(|&(a, b)| Time::frac(a, b)).collect();
            let weights = (0..k).map(|j| (format!("g{j}"), w[j].clone())).collect();
            let feeds: Vec<Vec<usize>> = (0..k)
                .map(|j| {
                    let id = format!("g{j}");
                    n.wires
                        .iter()
                        .filter(|wi| wi.to.starts_with(&format!("{id}.")))
                        .filter_map(|wi| wi.from.strip_prefix('g').and_then(|s| s.split('.').next()).and_then(|s| s.parse().ok()))
                        .collect()
                })
                .collect();
            prop_assert_eq!(longest_path(&n, &weights).unwrap(), all_paths(&feeds, &w));
        }
    }
}
