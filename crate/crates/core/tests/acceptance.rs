//! End-to-end acceptance run: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tsim::delay_class::{espf_prime, espf_settling, espf_signal, espf_sweep, wm_demo};
use tsim::faults::{check_f_tolerant, single, ByzantineSpec, CrashedSpec, FaultType, InputFamily, TrialPlan};
use tsim::gallery;
use tsim::modules::reference::{AdderSpec, BasicSpec, OscEnSpec, OscSpec, Spec, TmrAdderSpec};
use tsim::modules::{ChannelParams, GateKind, MemParams, ModuleKind, SourceKind};
use tsim::netlist::Netlist;
use tsim::sim::{all_feasible, check_feasible, simulate, SimConfig, SimInit, Window};
use tsim::stabilization::{
    check_stabilizing, find_counterexample, forgetful_bound, test_forgetful, verify_mem_osc_lemma, ForgetPlan, ForgetVerdict,
    ForgetfulnessDecl, InitFamily, LemmaPlan, StabPlan,
};
use tsim::strategy::{AdversaryStrategy, Policy};
use tsim::{Bound, Execution, Interval, Signal, Time};

fn t(n: i64) -> Time {
    Time::from_int(n)
}

fn q(n: i64, d: i64) -> Time {
    Time::frac(n, d)
}

type Outcome = Result<String, String>;

fn ensure(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn oscillator_reproduction() -> Outcome {
    let h = Interval::closed(t(0), t(4));
    let run = simulate(&gallery::oscillator(t(1)), &gallery::enable_step(&h), &h, &SimConfig::default()).map_err(|e| e.to_string())?;
    let y = run.execution.get("y").map_err(|e| e.to_string())?;
    ensure(y.transitions() == [t(1), t(2), t(3), t(4)], format!("Y transitions {:?}", y.transitions()))?;
    for e in run.execution.event_times().iter().filter(|e| **e >= t(1)) {
        ensure(y.level_at(e) != y.level_at(&(e - &t(1))), format!("Y({e}) = Y({e} - 1)"))?;
    }
    Ok("Y toggles at 1, 2, 3, 4 and Y(t) = not Y(t-1) at every event".into())
}

fn fault_non_recovery() -> Outcome {
    let n = gallery::oscillator(t(1));
    let h = Interval::closed(t(0), t(40));
    let cfg = SimConfig {
        overrides: vec![gallery::oscillator_fault()],
        ..SimConfig::default()
    };
    let run = simulate(&n, &gallery::enable_step(&h), &h, &cfg).map_err(|e| e.to_string())?;
    let v = check_feasible(&n, &run.execution, &Interval::closed(t(5), t(6)), Window::Lookback).map_err(|e| e.to_string())?;
    let bad: Vec<&str> = v.iter().filter(|m| !m.verdict.is_feasible()).map(|m| m.id.as_str()).collect();
    ensure(bad == ["chn"], format!("infeasible on [5,6]: {bad:?}"))?;
    let plan = StabPlan {
        horizon: h.clone(),
        inputs: InputFamily::Fixed(vec![gallery::enable_step(&h)]),
        init: InitFamily::Fixed(SimInit::default()),
        overrides: vec![gallery::oscillator_fault()],
        trials: 1,
        seed: 0,
    };
    let spec = OscEnSpec { d: t(1) };
    for cut in 1..=20 {
        let r = check_stabilizing(&n, &spec, &t(cut), &plan).map_err(|e| e.to_string())?;
        ensure(!r.passed, format!("recovered at cut {cut}"))?;
    }
    Ok("only the channel is infeasible on [5,6]; no cut in 1..=20 recovers on [0,40]".into())
}

fn lemma_sweep() -> Outcome {
    let (tt, d) = (q(3, 2), t(1));
    let r = verify_mem_osc_lemma(&LemmaPlan {
        t: tt.clone(),
        d: d.clone(),
        horizon: t(50),
        trials: 1000,
        seed: 1,
        max_pulses: 3,
    })
    .map_err(|e| e.to_string())?;
    let broken = r.trials.iter().find(|x| !x.steps.iter().all(|&s| s));
    ensure(r.all_hold, format!("proof step failed: {broken:?}"))?;
    let max_t0 = r.max_t0.clone().ok_or("no t0")?;
    ensure(max_t0 <= q(7, 2), format!("max t0 = {max_t0}"))?;

    let n = gallery::mem_oscillator(tt.clone(), d.clone());
    let plan = StabPlan {
        horizon: Interval::closed(t(0), t(50)),
        inputs: InputFamily::Fixed(vec![BTreeMap::new()]),
        init: InitFamily::Adversarial { max_pulses: 3 },
        overrides: Vec::new(),
        trials: 1000,
        seed: 1,
    };
    let osc = OscSpec::new(tt, d);
    let s = check_stabilizing(&n, &osc, &q(7, 2), &plan).map_err(|e| e.to_string())?;
    ensure(s.passed, "a trial is infeasible after the cut")?;
    let worst = s.worst_onset.clone().ok_or("no onset")?;
    ensure(worst <= q(7, 2), format!("worst onset {worst}"))?;
    ensure(s.trials.iter().all(|x| x.components_ok == Some(true)), "a trace is not a correct execution")?;
    Ok(format!("1000 trials: all seven steps hold, max t0 = {max_t0}, worst onset = {worst}"))
}

fn fig6_replication() -> Outcome {
    let n = gallery::mem_oscillator(q(3, 2), t(1));
    let h = Interval::closed(t(0), t(50));
    let cfg = SimConfig {
        overrides: vec![gallery::mem_oscillator_fault()],
        ..SimConfig::default()
    };
    let run = simulate(&n, &BTreeMap::new(), &h, &cfg).map_err(|e| e.to_string())?;
    let y = run.execution.get("y").map_err(|e| e.to_string())?;
    let delta = OscSpec::new(q(3, 2), t(1))
        .fit(y, &Interval::closed(q(63, 10), t(50)))
        .map_err(|v| format!("{v:?}"))?;
    ensure(delta == q(3, 10), format!("delta = {delta}"))?;
    Ok("feasible from 63/10 with delta = 3/10".into())
}

fn long_delay_counterexample() -> Outcome {
    let r = find_counterexample(&t(1), &t(2), 5000, &t(50), 1).map_err(|e| e.to_string())?;
    let c = r.found.ok_or(format!("nothing found in {} candidates", r.candidates_tried))?;
    let n = gallery::mem_oscillator(t(1), t(2));
    let h = Interval::closed(t(0), t(50));
    let v = check_feasible(&n, &c.execution, &h, Window::Strict).map_err(|e| e.to_string())?;
    ensure(all_feasible(&v), "trace is not a correct execution of every component")?;
    let osc = OscSpec::new(t(1), t(2));
    ensure(osc.fit(c.execution.get("y").map_err(|e| e.to_string())?, &h).is_err(), "whole run fits an offset")?;
    Ok(format!("candidate {} of {}: no offset fits {}", c.candidate, r.candidates_tried, c.judged))
}

fn adder_plan(h: &Interval, replicas: usize, trials: usize) -> TrialPlan {
    let combos = [(false, false), (false, true), (true, false), (true, true)]
        .iter()
        .map(|&(a, b)| gallery::adder_inputs(a, b, h, replicas))
        .collect();
    TrialPlan {
        horizon: h.clone(),
        judged: h.clone(),
        inputs: InputFamily::Fixed(combos),
        trials,
        seed: 100,
        crash_at: t(3),
        byzantine_rate: 10,
    }
}

fn adder_fault_tolerance() -> Outcome {
    let h = Interval::closed(t(0), t(8));
    // 4 input combinations x 100 hostile seeds
    let plan = adder_plan(&h, 1, 400);
    let reports = check_f_tolerant(&gallery::adder(t(1)), &AdderSpec { d: t(1) }, 1, FaultType::Byzantine, &plan).map_err(|e| e.to_string())?;
    for r in &reports {
        let voter = r.units.iter().any(|u| u == "voter");
        ensure(r.verdict.passed() != voter, format!("fault set {:?}: passed = {}", r.units, r.verdict.passed()))?;
    }
    let sites = reports.iter().filter(|r| r.units.len() == 1 && r.units[0].starts_with("adder")).count();
    ensure(sites == 3, format!("{sites} adder sites"))?;
    let tmr = check_f_tolerant(&gallery::tmr_adder(t(1)), &TmrAdderSpec { d: t(1) }, 1, FaultType::Byzantine, &adder_plan(&h, 3, 100))
        .map_err(|e| e.to_string())?;
    ensure(tmr.iter().all(|r| r.verdict.passed()), "tmr fault set refuted")?;
    Ok(format!("3 adder sites x 400 runs pass, voter refuted; tmr passes all {} fault sets", tmr.len()))
}

fn random_dag(rng: &mut ChaCha8Rng) -> (Netlist, Vec<Vec<usize>>, Vec<Time>) {
    let k = rng.gen_range(1..=12);
    let mut feeds = vec![Vec::new(); k];
    for (j, f) in feeds.iter_mut().enumerate() {
        for i in 0..j {
            if rng.gen_bool(0.3) {
                f.push(i);
            }
        }
    }
    let mut n = Netlist::new("dag").input("a");
    for (j, f) in feeds.iter().enumerate() {
        let id = format!("g{j}");
        n = n.module(&id, ModuleKind::Gate { gate: GateKind::Or(f.len().max(1)) });
        if f.is_empty() {
            n = n.wire("a", &format!("{id}.in0"));
        }
        for (p, i) in f.iter().enumerate() {
            n = n.wire(&format!("g{i}.out"), &format!("{id}.in{p}"));
        }
    }
    let w = (0..k).map(|_| q(rng.gen_range(0..50), rng.gen_range(1..10))).collect();
    (n, feeds, w)
}

fn heaviest_path(feeds: &[Vec<usize>], w: &[Time]) -> Time {
    // every path, extended one successor at a time
    let mut best = Time::zero();
    let mut stack: Vec<(usize, Time)> = (0..w.len()).map(|v| (v, w[v].clone())).collect();
    while let Some((v, acc)) = stack.pop() {
        best = best.max(acc.clone());
        for (j, f) in feeds.iter().enumerate() {
            if f.contains(&v) {
                stack.push((j, &acc + &w[j]));
            }
        }
    }
    best
}

fn forgetfulness() -> Outcome {
    let d = t(1);
    let adder = gallery::adder(d.clone());
    let f = forgetful_bound(&adder, &ForgetfulnessDecl::derived(&adder)).map_err(|e| e.to_string())?;
    ensure(f == d, format!("adder bound {f}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let (n, feeds, w) = random_dag(&mut rng);
        let decl = ForgetfulnessDecl {
            bounds: w.iter().enumerate().map(|(j, x)| (format!("g{j}"), x.clone())).collect(),
        };
        let got = forgetful_bound(&n, &decl).map_err(|e| e.to_string())?;
        ensure(got == heaviest_path(&feeds, &w), "dag bound disagrees with path enumeration")?;
    }
    let plan = |trials| ForgetPlan {
        horizon: t(10),
        trials,
        seed: 5,
        max_transitions: 8,
        grid: 8,
    };
    let v = test_forgetful(&adder, &d, &plan(500)).map_err(|e| e.to_string())?;
    ensure(v.passed(), format!("adder at F = d: {v:?}"))?;
    let pure = single(ModuleKind::Channel(ChannelParams::pure(d.clone())));
    match test_forgetful(&pure, &d.half(), &plan(50)).map_err(|e| e.to_string())? {
        ForgetVerdict::Refuted { conclusive: true, .. } => {}
        v => return Err(format!("pure channel at F = d/2: {v:?}")),
    }
    Ok("adder F = d; 50 random dags agree; adder forgets at d over 500 trials; pure channel refuted at d/2".into())
}

/// Last pulse start not covered by an earlier pulse, by direct enumeration.
fn settle_oracle(delta: &Time, horizon: i64) -> Time {
    let mut starts = Vec::new();
    for m in 0..=horizon {
        for k in 0..=horizon {
            let s = t(k) + Time::sqrt2().scale_int(m);
            if s <= t(horizon) {
                starts.push(s);
            }
        }
    }
    starts.sort();
    let mut reach = Time::zero();
    let mut last = Time::zero();
    for s in starts {
        if s > reach {
            last = s.clone();
        }
        reach = reach.max(s + delta.clone());
    }
    last
}

fn espf_settling_criterion() -> Outcome {
    let r = espf_settling(&q(1, 2), &t(20)).map_err(|e| e.to_string())?;
    ensure(r.settle == Some(t(2)), format!("T(1/2) = {:?}", r.settle))?;
    ensure(settle_oracle(&q(1, 2), 20) == t(2), "oracle disagrees")?;
    let deltas: Vec<Time> = [2, 4, 8, 16].iter().map(|&k| q(1, k)).collect();
    let sweep = espf_sweep(&deltas, &t(200)).map_err(|e| e.to_string())?;
    let settles = sweep.iter().map(|x| x.settle.clone().ok_or("not settled")).collect::<Result<Vec<_>, _>>()?;
    ensure(settles.windows(2).all(|w| w[0] < w[1]), format!("{settles:?}"))?;
    for k in [2, 4] {
        let h = Interval::closed(t(0), t(30));
        let run = simulate(&gallery::espf(q(1, k)), &BTreeMap::new(), &h, &SimConfig::default()).map_err(|e| e.to_string())?;
        let engine = espf_signal(&q(1, k), &h).map_err(|e| e.to_string())?;
        ensure(run.execution.get("o").map_err(|e| e.to_string())? == &engine, format!("engines differ at 1/{k}"))?;
    }
    let shown: Vec<String> = settles.iter().map(|s| s.to_decimal(4)).collect();
    Ok(format!("T(1/2) = 2; sweep T = [{}]; engines agree", shown.join(", ")))
}

fn espf_prime_and_wm() -> Outcome {
    for delta in [t(2), q(1, 2), q(1, 16)] {
        let r = espf_prime(&delta, &t(300)).map_err(|e| e.to_string())?;
        ensure(r.conclusive && r.rises.len() == 1, format!("delta {delta}: rises {:?}", r.rises))?;
    }
    let w = wm_demo(3, 100).map_err(|e| e.to_string())?;
    ensure(w.prefixes_feasible == 100, format!("{} feasible prefixes", w.prefixes_feasible))?;
    ensure(!w.limit_feasible, "limit is feasible")?;
    ensure(w.run.feasible && w.run.rises.len() == 1, format!("generated run {:?}", w.run))?;
    Ok("one rise for delta 2, 1/2, 1/16; 100 feasible prefixes, infeasible limit".into())
}

fn random_signal(rng: &mut ChaCha8Rng, h: &Interval, max: usize, grid: i64) -> Signal {
    let lo = h.lo_time().unwrap().clone();
    let steps = (h.hi_time().unwrap() - &lo).scale_int(grid).floor();
    let steps: i64 = num::ToPrimitive::to_i64(&steps).unwrap();
    let k = rng.gen_range(0..=max);
    let toggles: Vec<Time> = (0..k).map(|_| &lo + &q(rng.gen_range(1..steps), grid)).collect();
    Signal::from_toggles(h.clone(), rng.gen(), toggles)
}

fn random_sub(rng: &mut ChaCha8Rng, lo: i64, hi: i64, grid: i64) -> Interval {
    let a = rng.gen_range(lo * grid..=hi * grid);
    let b = rng.gen_range(a..=hi * grid);
    let (a, b) = (q(a, grid), q(b, grid));
    let open = a < b;
    let lo = if open && rng.gen_bool(0.5) { Bound::Open(a) } else { Bound::Closed(a) };
    let hi = if open && rng.gen_bool(0.5) { Bound::Open(b) } else { Bound::Closed(b) };
    Interval::new(lo, hi).unwrap()
}

fn kinds() -> Vec<ModuleKind> {
    let gate = |g| ModuleKind::Gate { gate: g };
    vec![
        gate(GateKind::Not),
        gate(GateKind::And(2)),
        gate(GateKind::Or(3)),
        gate(GateKind::Maj3),
        gate(GateKind::Add1),
        ModuleKind::Channel(ChannelParams::pure(t(1))),
        ModuleKind::Channel(ChannelParams::bounded(q(3, 2))),
        ModuleKind::Channel(ChannelParams::inertial(t(1), q(1, 2))),
        ModuleKind::Mem(MemParams::new(q(3, 2)).unwrap()),
        ModuleKind::Source {
            source: SourceKind::Pulse { at: t(2), width: q(1, 3) },
        },
    ]
}

fn property_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = Interval::closed(t(0), t(12));
    let mut cases = 0usize;
    let kinds = kinds();
    for round in 0..400u64 {
        for kind in &kinds {
            let n = single(kind.clone());
            let inputs: BTreeMap<String, Signal> = n.inputs.iter().map(|p| (p.clone(), random_signal(&mut rng, &h, 10, 8))).collect();
            let policy = [Policy::Minimal, Policy::Maximal, Policy::Uniform][round as usize % 3];
            let cfg = SimConfig::default().with_strategy(AdversaryStrategy::new(round, policy));
            let run = simulate(&n, &inputs, &h, &cfg).map_err(|e| e.to_string())?;
            // coherence: generated behavior satisfies the module's own checker
            let exec: Execution = run.execution.clone();
            let spec = BasicSpec { kind: kind.clone() };
            ensure(spec.check(&exec, &h).is_feasible(), format!("{} rejects its own run {round}", kind.name()))?;
            cases += 1;
            // subset-closedness
            let sub = random_sub(&mut rng, 0, 12, 8);
            ensure(spec.check(&exec, &sub).is_feasible(), format!("{} infeasible on {sub}", kind.name()))?;
            cases += 1;
            // weakening
            let crashed = CrashedSpec { inner: spec.clone() };
            let byz = ByzantineSpec { inner: spec.clone() };
            ensure(crashed.check(&exec, &sub).is_feasible() && byz.check(&exec, &sub).is_feasible(), "fault transform is stronger")?;
            cases += 1;
            // restriction idempotence
            let inner = random_sub(&mut rng, 0, 12, 8);
            if let Some(j) = inner.intersect(&sub) {
                for s in exec.signals.values() {
                    let once = s.restrict(&j).map_err(|e| e.to_string())?;
                    let twice = s.restrict(&sub).and_then(|r| r.restrict(&j)).map_err(|e| e.to_string())?;
                    ensure(once == twice && once.restrict(&j).map_err(|e| e.to_string())? == once, "restriction is not idempotent")?;
                }
                cases += 1;
            }
            // byte-identical rerun
            if round % 4 == 0 {
                let again = simulate(&n, &inputs, &h, &cfg).map_err(|e| e.to_string())?;
                let a = serde_json::to_string(&run.execution).map_err(|e| e.to_string())?;
                let b = serde_json::to_string(&again.execution).map_err(|e| e.to_string())?;
                ensure(a == b, "rerun differs")?;
                cases += 1;
            }
        }
        // reference spec: a generated oscillation on random subintervals
        let osc = OscSpec::new(q(3, 2), t(1));
        let delta = q(rng.gen_range(0..20), 8);
        let wave = osc.wave(&delta, &h);
        let exec = Execution::new(h.clone()).with("y", wave);
        let sub = random_sub(&mut rng, 0, 12, 8);
        ensure(osc.check(&exec, &h).is_feasible() && osc.check(&exec, &sub).is_feasible(), format!("wave {delta} rejected on {sub}"))?;
        cases += 1;
    }
    ensure(cases >= 10_000, format!("only {cases} cases"))?;
    Ok(format!("{cases} cases, zero failures"))
}

/// Name, check, runtime budget in seconds.
type Criterion = (&'static str, fn() -> Outcome, u64);

fn main() {
    let criteria: [Criterion; 10] = [
        ("oscillator reproduction", oscillator_reproduction, 1),
        ("fault non-recovery", fault_non_recovery, 5),
        ("watchdog oscillator stabilization", lemma_sweep, 60),
        ("watchdog fault replication", fig6_replication, 5),
        ("long-delay counterexample", long_delay_counterexample, 120),
        ("adder fault tolerance", adder_fault_tolerance, 60),
        ("forgetfulness", forgetfulness, 60),
        ("short-pulse filter settling", espf_settling_criterion, 30),
        ("single-rise filter and limit closure", espf_prime_and_wm, 30),
        ("framework property suite", property_suite, 120),
    ];
    let mut failed = 0;
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let slow = took > Duration::from_secs(*budget);
        let (tag, detail) = match (&outcome, slow) {
            (Ok(msg), false) => ("PASS", msg.clone()),
            (Ok(msg), true) => ("FAIL", format!("{msg}; over the {budget} s budget")),
            (Err(msg), _) => ("FAIL", msg.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("criterion {:>2} {tag} [{:>7.2} s] {name}: {detail}", k + 1, took.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
