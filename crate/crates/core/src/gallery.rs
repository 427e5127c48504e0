//! The example circuits: enabled oscillator, self-stabilizing oscillator with
//! a watchdog cell, fault-tolerant adders, the eventual short-pulse filter
//! and the rise-once module, plus the scripted faults used with them.

use std::collections::BTreeMap;

use crate::interval::Interval;
use crate::modules::{ChannelParams, GateKind, MemParams, ModuleKind, SourceKind};
use crate::netlist::Netlist;
use crate::signal::Signal;
use crate::sim::Override;
use crate::time::Time;

fn gate(g: GateKind) -> ModuleKind {
    ModuleKind::Gate { gate: g }
}

fn chan(p: ChannelParams) -> ModuleKind {
    ModuleKind::Channel(p)
}

/// AND of the enable input and the inverted, delayed output.
/// The circuit output `y` is the AND output, i.e. the channel input.
pub fn oscillator(d: Time) -> Netlist {
    Netlist::new("oscillator")
        .input("en")
        .output("y")
        .module("and", gate(GateKind::And(2)))
        .module("chn", chan(ChannelParams::pure(d)))
        .module("inv", gate(GateKind::Not))
        .wire("en", "and.in0")
        .wire("inv.out", "and.in1")
        .wire("and.out", "chn.in")
        .wire("chn.out", "inv.in")
        .wire("and.out", "y")
}

/// Enable input low before 0 and high from 0 on.
pub fn enable_step(horizon: &Interval) -> BTreeMap<String, Signal> {
    let mut m = BTreeMap::new();
    m.insert("en".to_string(), Signal::from_toggles(horizon.clone(), false, [Time::zero()]));
    m
}

/// The channel of the plain oscillator glitches during [5, 6).
pub fn oscillator_fault() -> Override {
    let k = |n: i64| Time::from_int(5) + Time::frac(n, 7);
    Override {
        net: "chn.out".into(),
        signal: Signal::new(
            Interval::closed_open(Time::from_int(5), Time::from_int(6)),
            true,
            vec![k(1), k(2), k(4), k(5)],
        )
        .expect("increasing"),
    }
}

/// Watchdog cell, delay channel and inverter in a loop; output `y` is the cell output.
pub fn mem_oscillator(t: Time, d: Time) -> Netlist {
    Netlist::new("mem-oscillator")
        .output("y")
        .module("mem", ModuleKind::Mem(MemParams::new(t).expect("positive window")))
        .module("chn", chan(ChannelParams::pure(d)))
        .module("inv", gate(GateKind::Not))
        .wire("mem.y", "chn.in")
        .wire("chn.out", "inv.in")
        .wire("inv.out", "mem.x")
        .wire("mem.y", "y")
}

/// The channel of the watchdog oscillator forwards garbage during [5, 6).
pub fn mem_oscillator_fault() -> Override {
    Override {
        net: "chn.out".into(),
        signal: Signal::new(
            Interval::closed_open(Time::from_int(5), Time::from_int(6)),
            true,
            vec![Time::frac(53, 10), Time::frac(11, 2), Time::frac(28, 5), Time::frac(29, 5)],
        )
        .expect("increasing"),
    }
}

/// Three zero-time adders fed through bounded channels, outputs voted.
pub fn adder(d: Time) -> Netlist {
    let mut n = Netlist::new("ft-adder").input("a").input("b").output("sum").output("carry");
    for i in 1..=3 {
        n = n
            .module(&format!("ca{i}"), chan(ChannelParams::bounded(d.clone())))
            .module(&format!("cb{i}"), chan(ChannelParams::bounded(d.clone())))
            .module(&format!("add{i}"), gate(GateKind::Add1))
            .wire("a", &format!("ca{i}.in"))
            .wire("b", &format!("cb{i}.in"))
            .wire(&format!("ca{i}.out"), &format!("add{i}.a"))
            .wire(&format!("cb{i}.out"), &format!("add{i}.b"))
            .wire(&format!("add{i}.sum"), &format!("vote_sum.in{}", i - 1))
            .wire(&format!("add{i}.carry"), &format!("vote_carry.in{}", i - 1));
        let (a, b, c) = (format!("add{i}"), format!("ca{i}"), format!("cb{i}"));
        n = n.unit(&format!("adder{i}"), &[&a, &b, &c]);
    }
    n.module("vote_sum", gate(GateKind::Maj3))
        .module("vote_carry", gate(GateKind::Maj3))
        .wire("vote_sum.out", "sum")
        .wire("vote_carry.out", "carry")
        .unit("voter", &["vote_sum", "vote_carry"])
}

/// Triplicated inputs and outputs; each adder gets voted copies of the
/// replicated inputs through bounded channels.
pub fn tmr_adder(d: Time) -> Netlist {
    let mut n = Netlist::new("tmr-adder");
    for k in 1..=3 {
        n = n.input(&format!("a{k}"));
    }
    for k in 1..=3 {
        n = n.input(&format!("b{k}"));
    }
    for k in 1..=3 {
        n = n.output(&format!("sum{k}"));
    }
    for k in 1..=3 {
        n = n.output(&format!("carry{k}"));
    }
    for i in 1..=3 {
        let mut chans = Vec::new();
        for x in ["a", "b"] {
            let voter = format!("vote_{x}{i}");
            n = n.module(&voter, gate(GateKind::Maj3));
            for j in 1..=3 {
                let c = format!("c_{x}{j}_{i}");
                n = n
                    .module(&c, chan(ChannelParams::bounded(d.clone())))
                    .wire(&format!("{x}{j}"), &format!("{c}.in"))
                    .wire(&format!("{c}.out"), &format!("{voter}.in{}", j - 1));
                chans.push(c);
            }
        }
        let add = format!("add{i}");
        n = n
            .module(&add, gate(GateKind::Add1))
            .wire(&format!("vote_a{i}.out"), &format!("{add}.a"))
            .wire(&format!("vote_b{i}.out"), &format!("{add}.b"))
            .wire(&format!("{add}.sum"), &format!("sum{i}"))
            .wire(&format!("{add}.carry"), &format!("carry{i}"));
        let (va, vb) = (format!("vote_a{i}"), format!("vote_b{i}"));
        n = n.unit(&format!("voter{i}"), &[&va, &vb]).unit(&format!("adder{i}"), &[&add]);
        let refs: Vec<&str> = chans.iter().map(String::as_str).collect();
        n = n.unit(&format!("channels{i}"), &refs);
    }
    n
}

/// Inputs that hold the complement of `(a, b)` until time 2 and `(a, b)` after.
pub fn adder_inputs(a: bool, b: bool, horizon: &Interval, replicas: usize) -> BTreeMap<String, Signal> {
    let switch = Time::from_int(2);
    let mut m = BTreeMap::new();
    let names = |x: &str| -> Vec<String> {
        if replicas == 1 {
            vec![x.to_string()]
        } else {
            (1..=replicas).map(|k| format!("{x}{k}")).collect()
        }
    };
    for (x, v) in [("a", a), ("b", b)] {
        for name in names(x) {
            m.insert(name, Signal::from_toggles(horizon.clone(), !v, [switch.clone()]));
        }
    }
    m
}

/// OR of a single input pulse of width `delta` at 0 with its own output
/// delayed by 1 and by √2. Output `o`.
pub fn espf(delta: Time) -> Netlist {
    espf_core(Netlist::new("espf"), SourceKind::Pulse { at: Time::zero(), width: delta }).wire("or.out", "o").output("o")
}

fn espf_core(n: Netlist, source: SourceKind) -> Netlist {
    n.module("src", ModuleKind::Source { source })
        .module("or", gate(GateKind::Or(3)))
        .module("c1", chan(ChannelParams::pure(Time::from_int(1))))
        .module("c2", chan(ChannelParams::pure(Time::sqrt2())))
        .wire("src.out", "or.in0")
        .wire("c1.out", "or.in1")
        .wire("c2.out", "or.in2")
        .wire("or.out", "c1.in")
        .wire("or.out", "c2.in")
}

/// Random-width pulse into the short-pulse filter followed by an inertial
/// channel that swallows every remaining gap. Output `out`.
pub fn wm(min_width: Time, max_width: Time) -> Netlist {
    espf_core(Netlist::new("wm"), SourceKind::RandomPulse { min_width, max_width })
        .module("filt", chan(ChannelParams::inertial(Time::from_int(1), Time::from_int(1))))
        .wire("or.out", "filt.in")
        .wire("filt.out", "out")
        .output("out")
}

/// Every built-in netlist with default parameters, by name.
pub fn builtin(name: &str) -> Option<Netlist> {
    let t = Time::from_int;
    Some(match name {
        "oscillator" => oscillator(t(1)),
        "mem-oscillator" => mem_oscillator(Time::frac(3, 2), t(1)),
        "ft-adder" => adder(t(1)),
        "tmr-adder" => tmr_adder(t(1)),
        "espf" => espf(Time::frac(1, 2)),
        "wm" => wm(Time::frac(1, 10), t(1)),
        _ => return None,
    })
}

pub const BUILTINS: [&str; 6] = ["oscillator", "mem-oscillator", "ft-adder", "tmr-adder", "espf", "wm"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_well_formed() {
        for name in BUILTINS {
            let n = builtin(name).unwrap();
            assert_eq!(n.violations(), Vec::<String>::new(), "{name}");
            assert_eq!(Netlist::from_json(&n.to_json()).unwrap(), n);
        }
        assert!(builtin("nope").is_none());
    }

    #[test]
    fn tmr_shape() {
        let n = tmr_adder(Time::from_int(1));
        let channels = n.modules.iter().filter(|m| m.kind.is_channel()).count();
        assert_eq!(channels, 18);
        assert_eq!(n.units.len(), 9);
        assert!(n.graph_analysis().acyclic);
    }

    #[test]
    fn loops_are_delayed() {
        for name in ["oscillator", "mem-oscillator", "espf", "wm"] {
            let g = builtin(name).unwrap().graph_analysis();
            assert!(!g.acyclic && g.every_cycle_delayed, "{name}");
        }
        assert!(adder(Time::from_int(1)).graph_analysis().acyclic);
    }

    #[test]
    fn oscillator_and_watchdog_scenarios() {
        use crate::modules::reference::OscSpec;
        use crate::sim::{check_feasible, simulate, SimConfig, Window};
        let t = Time::from_int;
        let h = Interval::closed(t(0), t(4));
        let run = simulate(&oscillator(t(1)), &enable_step(&h), &h, &SimConfig::default()).unwrap();
        assert_eq!(run.execution.get("y").unwrap().transitions(), &[t(1), t(2), t(3), t(4)]);

        let n = mem_oscillator(Time::frac(3, 2), t(1));
        let h = Interval::closed(t(0), t(12));
        let cfg = SimConfig {
            overrides: vec![mem_oscillator_fault()],
            ..SimConfig::default()
        };
        let run = simulate(&n, &BTreeMap::new(), &h, &cfg).unwrap();
        let y = run.execution.get("y").unwrap();
        let tail = Interval::closed(Time::frac(63, 10), t(12));
        assert_eq!(OscSpec::new(Time::frac(3, 2), t(1)).fit(y, &tail).unwrap(), Time::frac(3, 10));
        let v = check_feasible(&n, &run.execution, &Interval::closed(t(5), t(6)), Window::Lookback).unwrap();
        for m in &v {
            assert_eq!(m.verdict.is_feasible(), m.id != "chn", "{m:?}");
        }
    }
}
