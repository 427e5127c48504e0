//! Event-driven construction of executions for compound modules, and
//! per-submodule feasibility checking of fully observed executions.

use std::collections::{BTreeMap, BTreeSet};

use num::{BigRational, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::NetlistError;
use crate::interval::{Bound, Interval};
use crate::modules::channel::{ChannelAction, ChannelState};
use crate::modules::mem::MemState;
use crate::modules::{ChannelInit, ChannelMode, ChannelParams, GateKind, MemInit, ModuleKind, Verdict};
use crate::netlist::Netlist;
use crate::signal::{Execution, Signal};
use crate::strategy::{Adversary, AdversaryStrategy, Decision};
use crate::time::Time;

/// Boundary conditions of the stateful instances, keyed by instance id.
/// Channels without an entry start quiescent and low; cells without an
/// entry start low.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimInit {
    #[serde(default)]
    pub channels: BTreeMap<String, ChannelInit>,
    #[serde(default)]
    pub mems: BTreeMap<String, MemInit>,
}

/// Forces a net to follow `signal` on the signal's domain, which must be
/// closed at the start and open at the end.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Override {
    pub net: String,
    pub signal: Signal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum FaultMode {
    /// Outputs hold their value at `at` from then on.
    Crash { at: Time },
    /// Outputs are arbitrary signals with at most `rate` transitions per unit time.
    Byzantine { rate: u32 },
}

pub const DEFAULT_BUDGET: usize = 1_000_000;
pub const DEFAULT_BYZANTINE_RATE: u32 = 10;

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub strategy: AdversaryStrategy,
    pub replay: Vec<Decision>,
    pub init: SimInit,
    pub overrides: Vec<Override>,
    pub faults: BTreeMap<String, FaultMode>,
    /// Maximum number of instants processed.
    pub budget: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            strategy: AdversaryStrategy::default(),
            replay: Vec::new(),
            init: SimInit::default(),
            overrides: Vec::new(),
            faults: BTreeMap::new(),
            budget: DEFAULT_BUDGET,
        }
    }
}

impl SimConfig {
    pub fn with_strategy(mut self, strategy: AdversaryStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_init(mut self, init: SimInit) -> Self {
        self.init = init;
        self
    }
}

#[derive(Clone, Debug)]
pub struct SimRun {
    /// Every net keyed by its driver name, plus exported outputs by name.
    pub execution: Execution,
    pub decisions: Vec<Decision>,
    /// Instants where a memory cell's window was renewed while high.
    pub retriggers: BTreeMap<String, Vec<Time>>,
    pub instants: usize,
}

#[allow(clippy::large_enum_variant)]
enum Rt {
    Gate(GateKind),
    Source(Signal),
    Mem(MemState),
    Chan {
        params: ChannelParams,
        init: ChannelInit,
        st: Option<ChannelState>,
        level: bool,
        sched: BTreeSet<Time>,
        last_in: bool,
        lagged: bool,
    },
}

enum FaultRt {
    Crash { at: Time, frozen: Option<Vec<bool>> },
    Byzantine(Vec<Signal>),
}

struct Node {
    id: String,
    ins: Vec<usize>,
    outs: Vec<usize>,
    rt: Rt,
    fault: Option<FaultRt>,
}

struct Nets<'a> {
    lo: Time,
    values: Vec<bool>,
    init: Vec<bool>,
    toggles: Vec<Vec<Time>>,
    overrides: Vec<Vec<&'a Signal>>,
}

impl Nets<'_> {
    fn write(&mut self, net: usize, v: bool, t: &Time) {
        let v = self.overrides[net]
            .iter()
            .find(|s| s.domain().contains(t))
            .map_or(v, |s| s.level_at(t));
        if *t == self.lo {
            self.values[net] = v;
            self.init[net] = v;
        } else if self.values[net] != v {
            self.values[net] = v;
            self.toggles[net].push(t.clone());
        }
    }
}

/// Random signal on `domain` with at most `ceil(rate * length)` transitions.
pub fn hostile_signal(domain: &Interval, rate: u32, rng: &mut impl Rng) -> Signal {
    let (Some(lo), Some(hi)) = (domain.lo_time(), domain.hi_time()) else {
        return Signal::constant(domain.clone(), rng.gen());
    };
    let len = hi - lo;
    let cap = {
        let x = len.scale_int(i64::from(rate));
        let f = x.floor();
        let c = if Time::from_rational(BigRational::from_integer(f.clone())) == x { f } else { f + 1 };
        c.to_usize().unwrap_or(usize::MAX).min(100_000)
    };
    let k = rng.gen_range(0..=cap);
    let steps = (cap.max(1) * 1000) as i64;
    let toggles: BTreeSet<Time> = (0..k)
        .map(|_| lo + &len.scale(&BigRational::new(rng.gen_range(1..=steps).into(), steps.into())))
        .collect();
    Signal::new(domain.clone(), rng.gen(), toggles.into_iter().collect()).expect("sorted and inside the domain")
}

/// Builds one execution of `n` on the closed horizon from the exported
/// inputs, resolving nondeterminism with the configured strategy.
pub fn simulate(
    n: &Netlist,
    inputs: &BTreeMap<String, Signal>,
    horizon: &Interval,
    cfg: &SimConfig,
) -> Result<SimRun, NetlistError> {
    n.validate()?;
    let order = n.zero_lag_order().map_err(|cycle| NetlistError::ZeroDelayCycle { cycle })?;
    let (Some(lo), Some(_)) = (horizon.lo_time(), horizon.hi_time()) else {
        return Err(NetlistError::BadInit {
            id: n.name.clone(),
            message: format!("simulation horizon {horizon} must be bounded"),
        });
    };
    let lo = lo.clone();
    if !horizon.lo().is_closed() {
        return Err(NetlistError::BadInit {
            id: n.name.clone(),
            message: "simulation horizon must be closed at its start".into(),
        });
    }
    for id in cfg.init.channels.keys().chain(cfg.init.mems.keys()).chain(cfg.faults.keys()) {
        if n.index_of(id).is_none() {
            return Err(NetlistError::BadInit {
                id: id.clone(),
                message: "no such instance".into(),
            });
        }
    }

    let nets = n.nets();
    let net_ix: BTreeMap<&str, usize> = nets.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut agenda: BTreeSet<Time> = BTreeSet::new();
    agenda.insert(lo.clone());

    let mut ext = Vec::new();
    for p in &n.inputs {
        let s = inputs.get(p).ok_or_else(|| NetlistError::MissingSignal(p.clone()))?;
        let s = s.restrict(horizon)?;
        agenda.extend(s.transitions().iter().cloned());
        ext.push((net_ix[p.as_str()], s));
    }

    let mut overrides: Vec<Vec<&Signal>> = vec![Vec::new(); nets.len()];
    for o in &cfg.overrides {
        let ix = *net_ix.get(o.net.as_str()).ok_or_else(|| NetlistError::BadInit {
            id: o.net.clone(),
            message: "override names an unknown net".into(),
        })?;
        let dom = o.signal.domain();
        if !matches!((dom.lo(), dom.hi()), (Bound::Closed(_), Bound::Open(_))) {
            return Err(NetlistError::BadInit {
                id: o.net.clone(),
                message: format!("override window {dom} must be closed-open"),
            });
        }
        agenda.extend(dom.lo_time().cloned());
        agenda.extend(dom.hi_time().cloned());
        agenda.extend(o.signal.transitions().iter().cloned());
        overrides[ix].push(&o.signal);
    }

    let mut adv = Adversary::new(cfg.strategy.clone()).with_replay(&cfg.replay);
    let mut nodes = Vec::with_capacity(n.modules.len());
    for (k, m) in n.modules.iter().enumerate() {
        let ins = m
            .kind
            .input_ports()
            .iter()
            .map(|p| net_ix[n.driver_of(&format!("{}.{p}", m.id)).expect("validated")])
            .collect();
        let outs = m
            .kind
            .output_ports()
            .iter()
            .map(|p| net_ix[format!("{}.{p}", m.id).as_str()])
            .collect();
        let bad = |message: String| NetlistError::BadInit {
            id: m.id.clone(),
            message,
        };
        let rt = match &m.kind {
            ModuleKind::Gate { gate } => Rt::Gate(*gate),
            ModuleKind::Source { source } => {
                let s = source.generate(horizon, &mut adv, k);
                agenda.extend(s.transitions().iter().cloned());
                Rt::Source(s)
            }
            ModuleKind::Mem(p) => {
                let init = cfg.init.mems.get(&m.id).cloned().unwrap_or_default();
                Rt::Mem(MemState::start(p, &init, &lo).map_err(bad)?)
            }
            ModuleKind::Channel(p) => {
                if let ChannelMode::Inertial { threshold } = &p.mode {
                    if &p.d < threshold {
                        return Err(NetlistError::BadParam {
                            id: m.id.clone(),
                            message: format!("simulated inertial channels need d >= threshold ({} < {threshold})", p.d),
                        });
                    }
                }
                let init = cfg.init.channels.get(&m.id).cloned().unwrap_or_default();
                init.validate(&lo, &p.d).map_err(bad)?;
                Rt::Chan {
                    params: p.clone(),
                    level: init.initial_output,
                    init,
                    st: None,
                    sched: BTreeSet::new(),
                    last_in: false,
                    lagged: Netlist::has_positive_lag(&m.kind),
                }
            }
        };
        let fault = match cfg.faults.get(&m.id) {
            None => None,
            Some(FaultMode::Crash { at }) => {
                if horizon.contains(at) {
                    agenda.insert(at.clone());
                }
                Some(FaultRt::Crash {
                    at: at.clone(),
                    frozen: None,
                })
            }
            Some(FaultMode::Byzantine { rate }) => {
                let rng = adv.rng(k);
                let sigs: Vec<Signal> = m.kind.output_ports().iter().map(|_| hostile_signal(horizon, *rate, rng)).collect();
                for s in &sigs {
                    agenda.extend(s.transitions().iter().cloned());
                }
                Some(FaultRt::Byzantine(sigs))
            }
        };
        nodes.push(Node {
            id: m.id.clone(),
            ins,
            outs,
            rt,
            fault,
        });
    }

    let mut st = Nets {
        lo: lo.clone(),
        values: vec![false; nets.len()],
        init: vec![false; nets.len()],
        toggles: vec![Vec::new(); nets.len()],
        overrides,
    };
    let mut decisions = Vec::new();
    let mut instants = 0usize;

    while let Some(t) = agenda.pop_first() {
        if !horizon.contains(&t) {
            break;
        }
        instants += 1;
        if instants > cfg.budget {
            let hot = (0..nets.len()).max_by_key(|&i| st.toggles[i].len()).unwrap_or(0);
            return Err(NetlistError::BudgetExceeded {
                budget: cfg.budget,
                hot_port: nets.get(hot).cloned().unwrap_or_default(),
            });
        }
        for (ix, s) in &ext {
            st.write(*ix, s.level_at(&t), &t);
        }
        // outputs of delaying channels depend only on the past
        for node in nodes.iter_mut() {
            if let Rt::Chan {
                lagged: true,
                level,
                sched,
                init,
                ..
            } = &mut node.rt
            {
                if t == lo {
                    *level = init.initial_output;
                } else if sched.remove(&t) {
                    *level = !*level;
                }
                let v = [*level];
                emit(node.fault.as_mut(), &node.outs, &v, &t, &mut st);
            }
        }
        for &k in &order {
            let node = &mut nodes[k];
            let inv: Vec<bool> = node.ins.iter().map(|&i| st.values[i]).collect();
            let out: Option<Vec<bool>> = match &mut node.rt {
                Rt::Gate(g) => Some(g.eval(&inv)),
                Rt::Source(s) => Some(vec![s.level_at(&t)]),
                Rt::Mem(m) => {
                    let y = m.step(&t, inv[0]);
                    if let Some(w) = m.wakeup() {
                        agenda.insert(w.clone());
                    }
                    Some(vec![y])
                }
                Rt::Chan {
                    params,
                    init,
                    st: cs,
                    level,
                    sched,
                    last_in,
                    lagged,
                } => {
                    let x = inv[0];
                    if !*lagged {
                        if t == lo {
                            *level = init.initial_output;
                        } else if sched.remove(&t) {
                            *level = !*level;
                        }
                    }
                    let mut schedule = |u: Time, level: &mut bool, sched: &mut BTreeSet<Time>| {
                        if u == t {
                            *level = !*level;
                        } else {
                            agenda.insert(u.clone());
                            sched.insert(u);
                        }
                    };
                    match cs {
                        None => {
                            let (state, _, pending) = ChannelState::start(params, k, init, &lo, x, &mut adv, &mut decisions)
                                .map_err(|message| NetlistError::BadInit {
                                    id: node.id.clone(),
                                    message,
                                })?;
                            for u in pending {
                                schedule(u, level, sched);
                            }
                            *cs = Some(state);
                        }
                        Some(state) if x != *last_in => match state.on_input(&t, &mut adv, &mut decisions) {
                            ChannelAction::Schedule(u) => schedule(u, level, sched),
                            ChannelAction::Cancel(u) => {
                                sched.remove(&u);
                            }
                        },
                        Some(_) => {}
                    }
                    *last_in = x;
                    (!*lagged).then(|| vec![*level])
                }
            };
            if let Some(v) = out {
                emit(node.fault.as_mut(), &node.outs, &v, &t, &mut st);
            }
        }
    }

    let mut execution = Execution::new(horizon.clone());
    for (i, name) in nets.iter().enumerate() {
        let toggles = std::mem::take(&mut st.toggles[i]);
        execution.insert(name.clone(), Signal::new(horizon.clone(), st.init[i], toggles)?);
    }
    for p in &n.outputs {
        let driver = n.driver_of(p).expect("validated");
        let s = execution.signals[driver].clone();
        execution.insert(p.clone(), s);
    }
    let retriggers = nodes
        .iter()
        .filter_map(|node| match &node.rt {
            Rt::Mem(m) => Some((node.id.clone(), m.retriggers.clone())),
            _ => None,
        })
        .collect();
    Ok(SimRun {
        execution,
        decisions,
        retriggers,
        instants,
    })
}

fn emit(fault: Option<&mut FaultRt>, outs: &[usize], natural: &[bool], t: &Time, st: &mut Nets<'_>) {
    let values: Vec<bool> = match fault {
        None => natural.to_vec(),
        Some(FaultRt::Byzantine(sigs)) => sigs.iter().map(|s| s.level_at(t)).collect(),
        Some(FaultRt::Crash { at, frozen }) => {
            if frozen.is_none() && t >= at {
                *frozen = Some(natural.to_vec());
            }
            frozen.clone().unwrap_or_else(|| natural.to_vec())
        }
    };
    for (net, v) in outs.iter().zip(values) {
        st.write(*net, v, t);
    }
}

/// How far before the judged interval each submodule may look.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    /// Every submodule is judged on the interval alone.
    Strict,
    /// Each submodule is judged on the interval extended backwards by its
    /// memory span, as far as the execution reaches.
    Lookback,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleVerdict {
    pub id: String,
    pub kind: String,
    pub interval: Interval,
    pub verdict: Verdict,
}

/// The signals of one instance keyed by its own port names.
pub fn module_execution(n: &Netlist, id: &str, exec: &Execution) -> Result<Execution, NetlistError> {
    let m = n.instance(id).ok_or_else(|| NetlistError::MissingSignal(id.to_string()))?;
    let mut e = Execution::new(exec.interval.clone());
    for p in m.kind.input_ports() {
        let sink = format!("{id}.{p}");
        let driver = n.driver_of(&sink).ok_or_else(|| NetlistError::MissingSignal(sink.clone()))?;
        let s = exec.signals.get(driver).ok_or_else(|| NetlistError::MissingSignal(driver.to_string()))?;
        e.insert(p, s.clone());
    }
    for p in m.kind.output_ports() {
        let net = format!("{id}.{p}");
        let s = exec.signals.get(&net).ok_or_else(|| NetlistError::MissingSignal(net.clone()))?;
        e.insert(p, s.clone());
    }
    Ok(e)
}

/// Runs every submodule's checker; the compound execution is feasible iff
/// all verdicts are. Internal nets must be present in `exec`.
pub fn check_feasible(n: &Netlist, exec: &Execution, i: &Interval, window: Window) -> Result<Vec<ModuleVerdict>, NetlistError> {
    if !i.is_subset_of(&exec.interval) {
        return Err(NetlistError::Signal(crate::error::SignalError::NotSubinterval {
            inner: i.to_string(),
            outer: exec.interval.to_string(),
        }));
    }
    n.modules
        .iter()
        .map(|m| {
            let e = module_execution(n, &m.id, exec)?;
            let j = match (window, i.lo_time()) {
                (Window::Lookback, Some(lo)) => {
                    let wide = Interval::new(Bound::Closed(lo - &m.kind.memory_span()), i.hi().clone())
                        .expect("widening keeps the interval non-empty");
                    wide.intersect(&exec.interval).expect("contains i")
                }
                _ => i.clone(),
            };
            Ok(ModuleVerdict {
                id: m.id.clone(),
                kind: m.kind.name(),
                verdict: m.kind.check(&e, &j),
                interval: j,
            })
        })
        .collect()
}

pub fn all_feasible(verdicts: &[ModuleVerdict]) -> bool {
    verdicts.iter().all(|v| v.verdict.is_feasible())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::Policy;

    fn t(n: i64) -> Time {
        Time::from_int(n)
    }

    fn osc(d: Time) -> Netlist {
        Netlist::new("osc")
            .input("en")
            .output("y")
            .module("and", ModuleKind::Gate { gate: GateKind::And(2) })
            .module("chn", ModuleKind::Channel(ChannelParams::pure(d)))
            .module("inv", ModuleKind::Gate { gate: GateKind::Not })
            .wire("en", "and.in0")
            .wire("inv.out", "and.in1")
            .wire("and.out", "chn.in")
            .wire("chn.out", "inv.in")
            .wire("chn.out", "y")
    }

    fn en_step(h: &Interval) -> BTreeMap<String, Signal> {
        let mut m = BTreeMap::new();
        m.insert("en".to_string(), Signal::from_toggles(h.clone(), false, [t(0)]));
        m
    }

    #[test]
    fn oscillator_toggles_every_unit() {
        let h = Interval::closed(t(-1), t(4));
        let run = simulate(&osc(t(1)), &en_step(&h), &h, &SimConfig::default()).unwrap();
        let y = run.execution.get("y").unwrap();
        assert_eq!(y.transitions(), &[t(1), t(2), t(3), t(4)]);
        let v = check_feasible(&osc(t(1)), &run.execution, &h, Window::Strict).unwrap();
        assert!(all_feasible(&v), "{v:?}");
    }

    #[test]
    fn passthrough_netlist_copies_input() {
        let n = Netlist::new("wire").input("a").output("b").wire("a", "b");
        let h = Interval::closed(t(0), t(5));
        let a = Signal::new(h.clone(), false, vec![t(1), t(3)]).unwrap();
        let mut ins = BTreeMap::new();
        ins.insert("a".to_string(), a.clone());
        let run = simulate(&n, &ins, &h, &SimConfig::default()).unwrap();
        assert_eq!(run.execution.get("b").unwrap(), &a);
    }

    #[test]
    fn zero_delay_loop_is_rejected() {
        let n = Netlist::new("loop")
            .output("y")
            .module("g", ModuleKind::Gate { gate: GateKind::Not })
            .wire("g.out", "g.in")
            .wire("g.out", "y");
        let h = Interval::closed(t(0), t(1));
        assert!(matches!(
            simulate(&n, &BTreeMap::new(), &h, &SimConfig::default()),
            Err(NetlistError::ZeroDelayCycle { .. })
        ));
    }

    #[test]
    fn budget_names_the_busiest_net() {
        let h = Interval::closed(t(0), t(100));
        let cfg = SimConfig {
            budget: 10,
            ..SimConfig::default()
        };
        match simulate(&osc(t(1)), &en_step(&h), &h, &cfg) {
            Err(NetlistError::BudgetExceeded { hot_port, .. }) => assert!(hot_port.starts_with("and") || hot_port.starts_with("chn") || hot_port.starts_with("inv")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_and_crashes() {
        let h = Interval::closed(t(0), t(8));
        let ov = Override {
            net: "chn.out".into(),
            signal: Signal::new(Interval::closed_open(t(5), t(6)), true, vec![Time::frac(11, 2)]).unwrap(),
        };
        let cfg = SimConfig {
            overrides: vec![ov],
            ..SimConfig::default()
        };
        let run = simulate(&osc(t(1)), &en_step(&h), &h, &cfg).unwrap();
        let y = run.execution.get("y").unwrap();
        assert!(y.level_at(&t(5)) && !y.level_at(&Time::frac(11, 2)));
        let v = check_feasible(&osc(t(1)), &run.execution, &Interval::closed(t(5), t(6)), Window::Lookback).unwrap();
        assert!(!v.iter().find(|m| m.id == "chn").unwrap().verdict.is_feasible());
        assert!(v.iter().filter(|m| m.id != "chn").all(|m| m.verdict.is_feasible()));

        let mut faults = BTreeMap::new();
        faults.insert("inv".to_string(), FaultMode::Crash { at: Time::frac(5, 2) });
        let cfg = SimConfig {
            faults,
            ..SimConfig::default()
        };
        let run = simulate(&osc(t(1)), &en_step(&h), &h, &cfg).unwrap();
        let inv = run.execution.get("inv.out").unwrap();
        assert!(inv.transitions().iter().all(|u| *u <= Time::frac(5, 2)));
    }

    #[test]
    fn determinism_and_replay() {
        let n = Netlist::new("bc")
            .input("a")
            .output("b")
            .module("c", ModuleKind::Channel(ChannelParams::bounded(t(1))))
            .wire("a", "c.in")
            .wire("c.out", "b");
        let h = Interval::closed(t(0), t(10));
        let a = Signal::new(h.clone(), false, (1..9).map(t).collect()).unwrap();
        let mut ins = BTreeMap::new();
        ins.insert("a".to_string(), a);
        let cfg = SimConfig::default().with_strategy(AdversaryStrategy::new(5, Policy::Uniform));
        let r1 = simulate(&n, &ins, &h, &cfg).unwrap();
        let r2 = simulate(&n, &ins, &h, &cfg).unwrap();
        assert_eq!(r1.execution, r2.execution);
        let replayed = SimConfig {
            replay: r1.decisions.clone(),
            ..SimConfig::default().with_strategy(AdversaryStrategy::new(99, Policy::Uniform))
        };
        let r3 = simulate(&n, &ins, &h, &replayed).unwrap();
        assert_eq!(r1.execution, r3.execution);
        assert!(all_feasible(&check_feasible(&n, &r1.execution, &h, Window::Strict).unwrap()));
    }

    #[test]
    fn hostile_signals_respect_the_cap() {
        use rand::SeedableRng;
        let h = Interval::closed(t(0), Time::frac(3, 2));
        for seed in 0..50 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s = hostile_signal(&h, 4, &mut rng);
            assert!(s.transitions().len() <= 6);
        }
    }
}
