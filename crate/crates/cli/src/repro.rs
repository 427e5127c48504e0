//! Canned experiments with stored artifacts. Each run produces a JSON
//! artifact plus a verdict; the artifact must match the stored copy byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use tsim::delay_class::{espf_prime, espf_sweep, wm_demo};
use tsim::faults::{check_f_tolerant, FaultType, InputFamily, TrialPlan};
use tsim::gallery;
use tsim::modules::reference::{AdderSpec, OscEnSpec, OscSpec, TmrAdderSpec};
use tsim::sim::{check_feasible, simulate, SimConfig, SimInit, Window};
use tsim::stabilization::{check_stabilizing, find_counterexample, verify_mem_osc_lemma, InitFamily, LemmaPlan, StabPlan};
use tsim::{Interval, Time};

use crate::{report, Status};

pub const NAMES: [&str; 9] = [
    "oscillator",
    "fig2-fault",
    "adder-ft",
    "tmr",
    "mem-osc",
    "fig6-fault",
    "espf-sweep",
    "wm-demo",
    "dgtT-counterexample",
];

fn t(n: i64) -> Time {
    Time::from_int(n)
}

fn q(n: i64, d: i64) -> Time {
    Time::frac(n, d)
}

fn span(lo: i64, hi: i64) -> Interval {
    Interval::closed(t(lo), t(hi))
}

type Artifact = (Value, bool);

fn oscillator() -> Result<Artifact> {
    let h = span(0, 4);
    let run = simulate(&gallery::oscillator(t(1)), &gallery::enable_step(&h), &h, &SimConfig::default())?;
    let y = run.execution.get("y")?.transitions().to_vec();
    let ok = y == [t(1), t(2), t(3), t(4)];
    Ok((json!({ "y_transitions": y, "trace": run.execution.to_csv(&["en", "y"], 6)? }), ok))
}

fn fig2_fault() -> Result<Artifact> {
    let n = gallery::oscillator(t(1));
    let h = span(0, 40);
    let cfg = SimConfig {
        overrides: vec![gallery::oscillator_fault()],
        ..SimConfig::default()
    };
    let run = simulate(&n, &gallery::enable_step(&h), &h, &cfg)?;
    let v = check_feasible(&n, &run.execution, &span(5, 6), Window::Lookback)?;
    let infeasible: Vec<&str> = v.iter().filter(|m| !m.verdict.is_feasible()).map(|m| m.id.as_str()).collect();
    let plan = StabPlan {
        horizon: h.clone(),
        inputs: InputFamily::Fixed(vec![gallery::enable_step(&h)]),
        init: InitFamily::Fixed(SimInit::default()),
        overrides: vec![gallery::oscillator_fault()],
        trials: 1,
        seed: 0,
    };
    let spec = OscEnSpec { d: t(1) };
    let mut recovered = BTreeMap::new();
    for cut in 1..=20 {
        recovered.insert(cut, check_stabilizing(&n, &spec, &t(cut), &plan)?.passed);
    }
    let ok = infeasible == ["chn"] && recovered.values().all(|r| !r);
    let window = run.execution.restrict(&span(4, 8))?;
    Ok((
        json!({
            "infeasible_on_5_6": infeasible,
            "recovered_at_cut": recovered,
            "trace_4_8": window.to_csv(&["y", "chn.out"], 6)?,
        }),
        ok,
    ))
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

fn fault_table(reports: &[tsim::faults::FaultSetReport]) -> Vec<Value> {
    reports.iter().map(|r| json!({ "units": r.units, "passed": r.verdict.passed() })).collect()
}

fn adder_ft() -> Result<Artifact> {
    let h = span(0, 8);
    let spec = AdderSpec { d: t(1) };
    let n = gallery::adder(t(1));
    let byz = check_f_tolerant(&n, &spec, 1, FaultType::Byzantine, &adder_plan(&h, 1, 100))?;
    let crash = check_f_tolerant(&n, &spec, 1, FaultType::Crash, &adder_plan(&h, 1, 100))?;
    let ok = byz.iter().all(|r| r.verdict.passed() != r.units.iter().any(|u| u == "voter"));
    Ok((json!({ "byzantine": fault_table(&byz), "crash": fault_table(&crash) }), ok))
}

fn tmr() -> Result<Artifact> {
    let h = span(0, 8);
    let r = check_f_tolerant(&gallery::tmr_adder(t(1)), &TmrAdderSpec { d: t(1) }, 1, FaultType::Byzantine, &adder_plan(&h, 3, 40))?;
    let ok = r.iter().all(|x| x.verdict.passed());
    Ok((json!({ "byzantine": fault_table(&r) }), ok))
}

fn mem_osc() -> Result<Artifact> {
    let (tt, d) = (q(3, 2), t(1));
    let lemma = verify_mem_osc_lemma(&LemmaPlan {
        t: tt.clone(),
        d: d.clone(),
        horizon: t(30),
        trials: 200,
        seed: 1,
        max_pulses: 3,
    })?;
    let plan = StabPlan {
        horizon: span(0, 30),
        inputs: InputFamily::Fixed(vec![BTreeMap::new()]),
        init: InitFamily::Adversarial { max_pulses: 3 },
        overrides: Vec::new(),
        trials: 200,
        seed: 1,
    };
    let s = check_stabilizing(&gallery::mem_oscillator(tt.clone(), d.clone()), &OscSpec::new(tt, d), &q(7, 2), &plan)?;
    let ok = lemma.all_hold && s.passed && lemma.max_t0.as_ref().is_some_and(|x| *x <= q(7, 2));
    Ok((
        json!({
            "trials": 200,
            "all_steps_hold": lemma.all_hold,
            "max_t0": lemma.max_t0,
            "stabilized_at_cut_7_2": s.passed,
            "worst_onset": s.worst_onset,
        }),
        ok,
    ))
}

fn fig6_fault() -> Result<Artifact> {
    let n = gallery::mem_oscillator(q(3, 2), t(1));
    let h = span(0, 50);
    let cfg = SimConfig {
        overrides: vec![gallery::mem_oscillator_fault()],
        ..SimConfig::default()
    };
    let run = simulate(&n, &BTreeMap::new(), &h, &cfg)?;
    let y = run.execution.get("y")?;
    let delta = OscSpec::new(q(3, 2), t(1)).fit(y, &Interval::closed(q(63, 10), t(50))).ok();
    let v = check_feasible(&n, &run.execution, &span(5, 6), Window::Lookback)?;
    let infeasible: Vec<&str> = v.iter().filter(|m| !m.verdict.is_feasible()).map(|m| m.id.as_str()).collect();
    let ok = delta == Some(q(3, 10));
    let early: Vec<&Time> = y.transitions().iter().filter(|x| **x <= t(12)).collect();
    Ok((json!({ "delta_from_63_10": delta, "infeasible_on_5_6": infeasible, "y_transitions_to_12": early }), ok))
}

fn espf() -> Result<Artifact> {
    let deltas: Vec<Time> = [2, 4, 8, 16].iter().map(|&k| q(1, k)).collect();
    let rows = espf_sweep(&deltas, &t(200))?;
    let settles: Vec<Option<Time>> = rows.iter().map(|r| r.settle.clone()).collect();
    let ok = settles.iter().all(Option::is_some) && settles.windows(2).all(|w| w[0] < w[1]) && settles[0] == Some(t(2));
    let prime = espf_prime(&q(1, 2), &t(100))?;
    Ok((json!({ "settling": rows, "prime_rises_at_1_2": prime.rises }), ok && prime.rises.len() == 1))
}

fn wm() -> Result<Artifact> {
    let r = wm_demo(3, 100)?;
    let ok = r.prefixes_feasible == 100 && !r.limit_feasible && r.run.feasible;
    Ok((serde_json::to_value(r)?, ok))
}

fn counterexample() -> Result<Artifact> {
    let r = find_counterexample(&t(1), &t(2), 5000, &t(50), 1)?;
    let found = r.found.as_ref().map(|c| {
        json!({
            "candidate": c.candidate,
            "seed": c.seed,
            "init": c.init,
            "judged": c.judged,
            "violation": c.violation,
        })
    });
    Ok((json!({ "T": t(1), "d": t(2), "found": found }), r.found.is_some()))
}

pub fn run(name: &str, dir: &Path, bless: bool, out: Option<&Path>) -> Result<Status> {
    let (body, ok) = match name {
        "oscillator" => oscillator()?,
        "fig2-fault" => fig2_fault()?,
        "adder-ft" => adder_ft()?,
        "tmr" => tmr()?,
        "mem-osc" => mem_osc()?,
        "fig6-fault" => fig6_fault()?,
        "espf-sweep" => espf()?,
        "wm-demo" => wm()?,
        "dgtT-counterexample" => counterexample()?,
        _ => bail!("unknown experiment `{name}` (known: {})", NAMES.join(", ")),
    };
    let text = report("repro", json!({ "experiment": name, "ok": ok, "result": body }))?;
    if let Some(p) = out {
        fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
    }
    let path = dir.join(format!("{name}.json"));
    let stored = if bless {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
        "blessed"
    } else {
        match fs::read_to_string(&path) {
            Ok(g) if g == text => "matches stored artifact",
            Ok(_) => "DIFFERS from stored artifact",
            Err(_) => "no stored artifact",
        }
    };
    let matched = bless || stored == "matches stored artifact";
    println!("{name}: {}, {stored}", if ok { "ok" } else { "FAILED" });
    Ok(if ok && matched { Status::Passed } else { Status::Refuted })
}
