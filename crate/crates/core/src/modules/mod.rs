//! Basic modules: channels, zero-time gates, the watchdog memory cell and
//! sources. Each kind knows its ports, checks interval executions, and has a
//! streaming state machine used by the simulator.

pub mod channel;
pub mod gate;
pub mod mem;
pub mod reference;
pub mod source;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::NetlistError;
use crate::interval::Interval;
use crate::signal::{Execution, Signal};
use crate::time::Time;

pub use channel::{ChannelInit, ChannelMode, ChannelParams};
pub use gate::GateKind;
pub use mem::{MemInit, MemParams};
pub use source::SourceKind;

/// Where and why a checker rejected an execution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub port: String,
    pub at: Option<Time>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Feasible,
    Infeasible(Violation),
}

impl Verdict {
    pub fn infeasible(port: impl Into<String>, at: Option<Time>, reason: impl Into<String>) -> Verdict {
        Verdict::Infeasible(Violation {
            port: port.into(),
            at,
            reason: reason.into(),
        })
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible)
    }

    pub fn violation(&self) -> Option<&Violation> {
        match self {
            Verdict::Feasible => None,
            Verdict::Infeasible(v) => Some(v),
        }
    }

    /// First infeasible verdict of a sequence, or feasible.
    pub fn all(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
        verdicts
            .into_iter()
            .find(|v| !v.is_feasible())
            .unwrap_or(Verdict::Feasible)
    }
}

/// A basic module type with its parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModuleKind {
    Channel(ChannelParams),
    Gate { gate: GateKind },
    Mem(MemParams),
    Source { source: SourceKind },
}

impl ModuleKind {
    pub fn name(&self) -> String {
        match self {
            ModuleKind::Channel(p) => format!("channel({})", p.mode.name()),
            ModuleKind::Gate { gate } => gate.name().to_string(),
            ModuleKind::Mem(_) => "mem".into(),
            ModuleKind::Source { source } => format!("source({})", source.name()),
        }
    }

    pub fn input_ports(&self) -> Vec<String> {
        match self {
            ModuleKind::Channel(_) => vec!["in".into()],
            ModuleKind::Gate { gate } => gate.input_ports(),
            ModuleKind::Mem(_) => vec!["x".into()],
            ModuleKind::Source { .. } => vec![],
        }
    }

    pub fn output_ports(&self) -> Vec<String> {
        match self {
            ModuleKind::Channel(_) => vec!["out".into()],
            ModuleKind::Gate { gate } => gate.output_ports(),
            ModuleKind::Mem(_) => vec!["y".into()],
            ModuleKind::Source { .. } => vec!["out".into()],
        }
    }

    /// How far back in time this module's behavior can depend on its inputs.
    pub fn memory_span(&self) -> Time {
        match self {
            ModuleKind::Channel(p) => p.d.clone(),
            ModuleKind::Mem(p) => p.t.clone(),
            _ => Time::zero(),
        }
    }

    pub fn is_channel(&self) -> bool {
        matches!(self, ModuleKind::Channel(_))
    }

    /// Checks an execution whose signals are keyed by this module's port names.
    pub fn check(&self, exec: &Execution, i: &Interval) -> Verdict {
        let get = |p: &str| -> Result<&Signal, Verdict> {
            exec.signals
                .get(p)
                .ok_or_else(|| Verdict::infeasible(p, None, "no signal for port"))
        };
        let run = || -> Result<Verdict, Verdict> {
            Ok(match self {
                ModuleKind::Channel(p) => channel::check(p, get("in")?, get("out")?, i),
                ModuleKind::Gate { gate } => {
                    let ins = gate.input_ports().iter().map(|p| get(p)).collect::<Result<Vec<_>, _>>()?;
                    let outs = gate.output_ports().iter().map(|p| get(p)).collect::<Result<Vec<_>, _>>()?;
                    gate::check(*gate, &ins, &outs, i)
                }
                ModuleKind::Mem(p) => mem::check(p, get("x")?, get("y")?, i),
                ModuleKind::Source { source } => source::check(source, get("out")?, i),
            })
        };
        run().unwrap_or_else(|v| v)
    }

    /// Builds a module from its netlist description.
    pub fn from_json(id: &str, kind: &str, params: &Map<String, Value>) -> Result<ModuleKind, NetlistError> {
        let p = Params { id, map: params };
        match kind {
            "channel" => {
                let d = p.time("d")?;
                let mode = match p.string("mode")?.as_deref().unwrap_or("pure") {
                    "pure" => ChannelMode::Pure,
                    "bounded" => ChannelMode::Bounded,
                    "inertial" => ChannelMode::Inertial {
                        threshold: p.time("threshold")?,
                    },
                    other => return Err(p.bad(format!("unknown channel mode `{other}`"))),
                };
                ChannelParams::new(mode, d).map(ModuleKind::Channel).map_err(|m| p.bad(m))
            }
            "and" | "or" => {
                let n = p.count("arity")?.unwrap_or(2);
                if n < 1 {
                    return Err(p.bad("arity must be at least 1"));
                }
                let gate = if kind == "and" { GateKind::And(n) } else { GateKind::Or(n) };
                Ok(ModuleKind::Gate { gate })
            }
            "not" => Ok(ModuleKind::Gate { gate: GateKind::Not }),
            "maj3" => Ok(ModuleKind::Gate { gate: GateKind::Maj3 }),
            "add1" => Ok(ModuleKind::Gate { gate: GateKind::Add1 }),
            "mem" => {
                let t = p.time("T")?;
                MemParams::new(t).map(ModuleKind::Mem).map_err(|m| p.bad(m))
            }
            "source" => {
                let shape = p.string("shape")?.unwrap_or_else(|| "constant".into());
                let source = match shape.as_str() {
                    "constant" => SourceKind::Constant {
                        value: p.bit("value")?.unwrap_or(false),
                    },
                    "step" => SourceKind::Step {
                        at: p.time("at")?,
                        value: p.bit("value")?.unwrap_or(true),
                    },
                    "pulse" => SourceKind::Pulse {
                        at: p.time("at")?,
                        width: p.time("width")?,
                    },
                    "random-pulse" => SourceKind::RandomPulse {
                        min_width: p.time("min_width")?,
                        max_width: p.time("max_width")?,
                    },
                    other => return Err(p.bad(format!("unknown source shape `{other}`"))),
                };
                source.validate().map_err(|m| p.bad(m))?;
                Ok(ModuleKind::Source { source })
            }
            other => Err(NetlistError::UnknownKind(other.to_string())),
        }
    }

    /// Inverse of [`ModuleKind::from_json`]: `(kind, params)`.
    pub fn to_json(&self) -> (String, Map<String, Value>) {
        let mut m = Map::new();
        let ts = |t: &Time| Value::String(t.to_string());
        let kind = match self {
            ModuleKind::Channel(p) => {
                m.insert("d".into(), ts(&p.d));
                m.insert("mode".into(), Value::String(p.mode.name().into()));
                if let ChannelMode::Inertial { threshold } = &p.mode {
                    m.insert("threshold".into(), ts(threshold));
                }
                "channel"
            }
            ModuleKind::Gate { gate } => match gate {
                GateKind::And(n) | GateKind::Or(n) => {
                    m.insert("arity".into(), Value::from(*n));
                    gate.name()
                }
                _ => gate.name(),
            },
            ModuleKind::Mem(p) => {
                m.insert("T".into(), ts(&p.t));
                "mem"
            }
            ModuleKind::Source { source } => {
                m.insert("shape".into(), Value::String(source.name().into()));
                match source {
                    SourceKind::Constant { value } => {
                        m.insert("value".into(), Value::from(u8::from(*value)));
                    }
                    SourceKind::Step { at, value } => {
                        m.insert("at".into(), ts(at));
                        m.insert("value".into(), Value::from(u8::from(*value)));
                    }
                    SourceKind::Pulse { at, width } => {
                        m.insert("at".into(), ts(at));
                        m.insert("width".into(), ts(width));
                    }
                    SourceKind::RandomPulse { min_width, max_width } => {
                        m.insert("min_width".into(), ts(min_width));
                        m.insert("max_width".into(), ts(max_width));
                    }
                }
                "source"
            }
        };
        (kind.to_string(), m)
    }
}

struct Params<'a> {
    id: &'a str,
    map: &'a Map<String, Value>,
}

impl Params<'_> {
    fn bad(&self, message: impl Into<String>) -> NetlistError {
        NetlistError::BadParam {
            id: self.id.to_string(),
            message: message.into(),
        }
    }

    fn time(&self, key: &str) -> Result<Time, NetlistError> {
        match self.map.get(key) {
            None => Err(self.bad(format!("missing parameter `{key}`"))),
            Some(Value::String(s)) => s.parse().map_err(|e: crate::error::ParseError| self.bad(format!("`{key}`: {}", e.message))),
            Some(Value::Number(n)) if n.is_i64() => Ok(Time::from_int(n.as_i64().unwrap_or_default())),
            Some(v) => Err(self.bad(format!("`{key}` must be an exact time string, got {v}"))),
        }
    }

    fn string(&self, key: &str) -> Result<Option<String>, NetlistError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(self.bad(format!("`{key}` must be a string, got {v}"))),
        }
    }

    fn count(&self, key: &str) -> Result<Option<usize>, NetlistError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(|n| Some(n as usize))
                .ok_or_else(|| self.bad(format!("`{key}` must be a non-negative integer"))),
        }
    }

    fn bit(&self, key: &str) -> Result<Option<bool>, NetlistError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::Bool(b)) => Ok(Some(*b)),
            Some(v) => match v.as_u64() {
                Some(0) => Ok(Some(false)),
                Some(1) => Ok(Some(true)),
                _ => Err(self.bad(format!("`{key}` must be 0 or 1"))),
            },
        }
    }
}
