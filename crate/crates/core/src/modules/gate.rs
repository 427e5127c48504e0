//! Zero-time boolean gates.

use serde::{Deserialize, Serialize};

use super::Verdict;
use crate::error::SignalError;
use crate::interval::Interval;
use crate::signal::Signal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "gate", content = "arity", rename_all = "kebab-case")]
pub enum GateKind {
    And(usize),
    Or(usize),
    Not,
    Maj3,
    /// One-bit adder: inputs `a`, `b`; outputs `sum`, `carry`.
    Add1,
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::And(_) => "and",
            GateKind::Or(_) => "or",
            GateKind::Not => "not",
            GateKind::Maj3 => "maj3",
            GateKind::Add1 => "add1",
        }
    }

    pub fn input_ports(&self) -> Vec<String> {
        match self {
            GateKind::And(n) | GateKind::Or(n) => (0..*n).map(|i| format!("in{i}")).collect(),
            GateKind::Not => vec!["in".into()],
            GateKind::Maj3 => (0..3).map(|i| format!("in{i}")).collect(),
            GateKind::Add1 => vec!["a".into(), "b".into()],
        }
    }

    pub fn output_ports(&self) -> Vec<String> {
        match self {
            GateKind::Add1 => vec!["sum".into(), "carry".into()],
            _ => vec!["out".into()],
        }
    }

    /// Output values, in [`GateKind::output_ports`] order.
    pub fn eval(&self, inputs: &[bool]) -> Vec<bool> {
        match self {
            GateKind::And(_) => vec![inputs.iter().all(|&x| x)],
            GateKind::Or(_) => vec![inputs.iter().any(|&x| x)],
            GateKind::Not => vec![!inputs[0]],
            GateKind::Maj3 => vec![inputs.iter().filter(|&&x| x).count() >= 2],
            GateKind::Add1 => vec![inputs[0] ^ inputs[1], inputs[0] && inputs[1]],
        }
    }
}

/// Pointwise evaluation over signals sharing one domain.
pub fn eval_signals(kind: GateKind, inputs: &[&Signal]) -> Result<Vec<Signal>, SignalError> {
    if inputs.len() != kind.input_ports().len() {
        return Err(SignalError::Invalid(format!(
            "{} expects {} inputs, got {}",
            kind.name(),
            kind.input_ports().len(),
            inputs.len()
        )));
    }
    (0..kind.output_ports().len())
        .map(|k| Signal::combine(inputs, |v| kind.eval(v)[k]))
        .collect()
}

pub fn check(kind: GateKind, inputs: &[&Signal], outputs: &[&Signal], i: &Interval) -> Verdict {
    let restricted: Result<Vec<Signal>, _> = inputs.iter().map(|s| s.restrict(i)).collect();
    let restricted = match restricted {
        Ok(r) => r,
        Err(e) => return Verdict::infeasible("in", None, e.to_string()),
    };
    let refs: Vec<&Signal> = restricted.iter().collect();
    let expected = match eval_signals(kind, &refs) {
        Ok(e) => e,
        Err(e) => return Verdict::infeasible("in", None, e.to_string()),
    };
    for ((port, exp), got) in kind.output_ports().iter().zip(&expected).zip(outputs) {
        match exp.equal_on(got, i, true) {
            Ok(true) => {}
            Ok(false) => {
                let got = got.restrict(i).expect("checked by equal_on");
                let at = first_difference(exp, &got);
                return Verdict::infeasible(port.as_str(), at, format!("{} output differs from its inputs' value", kind.name()));
            }
            Err(e) => return Verdict::infeasible(port.as_str(), None, e.to_string()),
        }
    }
    Verdict::Feasible
}

fn first_difference(a: &Signal, b: &Signal) -> Option<crate::time::Time> {
    if a.init() != b.init() {
        return a.domain().lo_time().cloned();
    }
    a.transitions()
        .iter()
        .zip(b.transitions())
        .find(|(x, y)| x != y)
        .map(|(x, y)| x.clone().min(y.clone()))
        .or_else(|| {
            let n = a.transitions().len().min(b.transitions().len());
            a.transitions().get(n).or(b.transitions().get(n)).cloned()
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Time;

    fn t(n: i64) -> Time {
        Time::from_int(n)
    }

    #[test]
    fn gate_examples() {
        let dom = Interval::closed(t(0), t(10));
        let en = Signal::constant(dom.clone(), true);
        let x = Signal::new(dom.clone(), false, vec![t(1), t(4)]).unwrap();
        assert_eq!(eval_signals(GateKind::And(2), &[&en, &x]).unwrap()[0], x);
        let z = Signal::constant(dom.clone(), false);
        assert_eq!(eval_signals(GateKind::Not, &[&z]).unwrap()[0], en);
        assert_eq!(GateKind::Maj3.eval(&[true, true, false]), vec![true]);
        assert_eq!(GateKind::Add1.eval(&[true, true]), vec![false, true]);
        assert!(eval_signals(GateKind::Not, &[&z, &z]).is_err());
    }

    #[test]
    fn check_detects_wrong_output() {
        let dom = Interval::closed(t(0), t(10));
        let x = Signal::new(dom.clone(), false, vec![t(1), t(4)]).unwrap();
        let nx = x.invert();
        assert!(check(GateKind::Not, &[&x], &[&nx], &dom).is_feasible());
        let v = check(GateKind::Not, &[&x], &[&x], &dom);
        assert_eq!(v.violation().unwrap().at, Some(t(0)));
        let late = Signal::new(dom.clone(), true, vec![t(2), t(4)]).unwrap();
        assert_eq!(check(GateKind::Not, &[&x], &[&late], &dom).violation().unwrap().at, Some(t(1)));
    }
}
