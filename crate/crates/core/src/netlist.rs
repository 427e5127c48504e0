//! Compound modules: instances of basic modules wired together, exported
//! ports, structural validation and the circuit graph.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::{tarjan_scc, toposort};
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::NetlistError;
use crate::modules::{ChannelMode, ModuleKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub id: String,
    pub kind: ModuleKind,
}

/// A connection from a driver (exported input or `id.port` output) to a sink
/// (`id.port` input or exported output).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wire {
    pub from: String,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Netlist {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub modules: Vec<Instance>,
    pub wires: Vec<Wire>,
    /// Named groups of instances that fail together in fault sweeps.
    pub units: BTreeMap<String, Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct RawModule {
    id: String,
    kind: String,
    #[serde(default)]
    params: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct RawNetlist {
    name: String,
    #[serde(default)]
    inputs: Vec<String>,
    #[serde(default)]
    outputs: Vec<String>,
    #[serde(default)]
    modules: Vec<RawModule>,
    #[serde(default)]
    wires: Vec<Wire>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    units: BTreeMap<String, Vec<String>>,
}

/// Result of [`Netlist::graph_analysis`].
#[derive(Clone, Debug)]
pub struct CircuitGraph {
    pub graph: DiGraph<String, ()>,
    pub acyclic: bool,
    /// Elementary cycles as instance ids, each starting at its smallest node.
    pub cycles: Vec<Vec<String>>,
    pub every_cycle_delayed: bool,
    /// A cycle without positive lag, when one exists.
    pub undelayed_cycle: Option<Vec<String>>,
}

const MAX_CYCLES: usize = 10_000;

impl Netlist {
    pub fn new(name: impl Into<String>) -> Self {
        Netlist {
            name: name.into(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            modules: Vec::new(),
            wires: Vec::new(),
            units: BTreeMap::new(),
        }
    }

    pub fn input(mut self, name: &str) -> Self {
        self.inputs.push(name.into());
        self
    }

    pub fn output(mut self, name: &str) -> Self {
        self.outputs.push(name.into());
        self
    }

    pub fn module(mut self, id: &str, kind: ModuleKind) -> Self {
        self.modules.push(Instance { id: id.into(), kind });
        self
    }

    pub fn wire(mut self, from: &str, to: &str) -> Self {
        self.wires.push(Wire {
            from: from.into(),
            to: to.into(),
        });
        self
    }

    pub fn unit(mut self, name: &str, members: &[&str]) -> Self {
        self.units.insert(name.into(), members.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn from_json(text: &str) -> Result<Netlist, NetlistError> {
        let raw: RawNetlist =
            serde_json::from_str(text).map_err(|e| crate::error::ParseError::new(format!("netlist JSON: {e}")))?;
        let modules = raw
            .modules
            .iter()
            .map(|m| {
                Ok(Instance {
                    id: m.id.clone(),
                    kind: ModuleKind::from_json(&m.id, &m.kind, &m.params)?,
                })
            })
            .collect::<Result<Vec<_>, NetlistError>>()?;
        Ok(Netlist {
            name: raw.name,
            inputs: raw.inputs,
            outputs: raw.outputs,
            modules,
            wires: raw.wires,
            units: raw.units,
        })
    }

    pub fn to_json(&self) -> String {
        let raw = RawNetlist {
            name: self.name.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            modules: self
                .modules
                .iter()
                .map(|m| {
                    let (kind, params) = m.kind.to_json();
                    RawModule {
                        id: m.id.clone(),
                        kind,
                        params,
                    }
                })
                .collect(),
            wires: self.wires.clone(),
            units: self.units.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("netlist serializes")
    }

    pub fn instance(&self, id: &str) -> Option<&Instance> {
        self.modules.iter().find(|m| m.id == id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.modules.iter().position(|m| m.id == id)
    }

    /// All well-formedness violations; empty when the netlist is well formed.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut ids = BTreeSet::new();
        for m in &self.modules {
            if m.id.is_empty() || m.id.contains('.') {
                v.push(format!("instance id `{}` must be non-empty and contain no `.`", m.id));
            }
            if !ids.insert(m.id.as_str()) {
                v.push(format!("duplicate instance id `{}`", m.id));
            }
        }
        let mut exported = BTreeSet::new();
        for p in self.inputs.iter().chain(&self.outputs) {
            if p.is_empty() || p.contains('.') {
                v.push(format!("exported port `{p}` must be non-empty and contain no `.`"));
            }
            if !exported.insert(p.as_str()) {
                v.push(format!("exported port `{p}` declared twice"));
            }
        }
        let drivers = self.driver_names();
        let mut sinks: BTreeMap<String, usize> = self.sink_names().into_iter().map(|s| (s, 0)).collect();
        for w in &self.wires {
            if !drivers.contains(&w.from) {
                v.push(format!("wire source `{}` is neither an exported input nor a submodule output", w.from));
            }
            match sinks.get_mut(&w.to) {
                Some(n) => *n += 1,
                None => v.push(format!("wire target `{}` is neither a submodule input nor an exported output", w.to)),
            }
        }
        for (sink, n) in &sinks {
            let is_output = self.outputs.contains(sink);
            match n {
                0 if is_output => v.push(format!("exported output `{sink}` is not produced by any submodule")),
                0 => v.push(format!("input `{sink}` is neither exported nor driven by a submodule")),
                1 => {}
                _ => v.push(format!("port `{sink}` is driven {n} times")),
            }
        }
        for (unit, members) in &self.units {
            for m in members {
                if !ids.contains(m.as_str()) {
                    v.push(format!("unit `{unit}` names unknown instance `{m}`"));
                }
            }
        }
        v
    }

    pub fn validate(&self) -> Result<(), NetlistError> {
        let violations = self.violations();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(NetlistError::Malformed {
                name: self.name.clone(),
                violations,
            })
        }
    }

    fn driver_names(&self) -> BTreeSet<String> {
        let mut s: BTreeSet<String> = self.inputs.iter().cloned().collect();
        for m in &self.modules {
            for p in m.kind.output_ports() {
                s.insert(format!("{}.{p}", m.id));
            }
        }
        s
    }

    fn sink_names(&self) -> Vec<String> {
        let mut s: Vec<String> = self.outputs.clone();
        for m in &self.modules {
            for p in m.kind.input_ports() {
                s.push(format!("{}.{p}", m.id));
            }
        }
        s
    }

    /// The driver feeding a sink (`id.port` or exported output name).
    pub fn driver_of(&self, sink: &str) -> Option<&str> {
        self.wires.iter().find(|w| w.to == sink).map(|w| w.from.as_str())
    }

    /// Every net in the circuit, named by its driver.
    pub fn nets(&self) -> Vec<String> {
        self.driver_names().into_iter().collect()
    }

    /// Instance index of a driver name, `None` for exported inputs.
    pub fn driver_instance(&self, driver: &str) -> Option<usize> {
        let (id, _) = driver.split_once('.')?;
        self.index_of(id)
    }

    /// Whether an instance delays every response by a positive amount.
    pub fn has_positive_lag(kind: &ModuleKind) -> bool {
        match kind {
            ModuleKind::Channel(p) => !matches!(p.mode, ChannelMode::Bounded) && p.d.is_positive(),
            _ => false,
        }
    }

    pub fn graph(&self) -> DiGraph<String, ()> {
        let mut g = DiGraph::new();
        for m in &self.modules {
            g.add_node(m.id.clone());
        }
        for w in &self.wires {
            let (Some(a), Some((id, _))) = (self.driver_instance(&w.from), w.to.split_once('.')) else {
                continue;
            };
            if let Some(b) = self.index_of(id) {
                g.update_edge(NodeIndex::new(a), NodeIndex::new(b), ());
            }
        }
        g
    }

    pub fn graph_analysis(&self) -> CircuitGraph {
        let graph = self.graph();
        let acyclic = toposort(&graph, None).is_ok();
        let cycles = if acyclic { Vec::new() } else { elementary_cycles(&graph, MAX_CYCLES) };
        let undelayed_cycle = self.zero_lag_order().err();
        CircuitGraph {
            acyclic,
            every_cycle_delayed: undelayed_cycle.is_none(),
            undelayed_cycle,
            cycles: cycles
                .into_iter()
                .map(|c| c.into_iter().map(|n| graph[n].clone()).collect())
                .collect(),
            graph,
        }
    }

    /// Instance indices in an order where every zero-lag dependency comes
    /// first: edges leaving positive-lag instances are cut. Fails with a
    /// cycle that has no positive lag.
    pub fn zero_lag_order(&self) -> Result<Vec<usize>, Vec<String>> {
        let mut g = self.graph();
        g.retain_edges(|g, e| {
            let (a, _) = g.edge_endpoints(e).expect("edge exists");
            !Netlist::has_positive_lag(&self.modules[a.index()].kind)
        });
        match toposort(&g, None) {
            Ok(order) => Ok(order.into_iter().map(|n| n.index()).collect()),
            Err(_) => {
                let scc = tarjan_scc(&g)
                    .into_iter()
                    .find(|c| c.len() > 1 || g.contains_edge(c[0], c[0]))
                    .expect("a cyclic graph has a non-trivial component");
                let cycle = elementary_cycles(&g.filter_map(
                    |n, w| scc.contains(&n).then(|| w.clone()),
                    |_, _| Some(()),
                ), 1)
                .into_iter()
                .next()
                .unwrap_or_default();
                let sub: Vec<String> = g
                    .node_indices()
                    .filter(|n| scc.contains(n))
                    .map(|n| g[n].clone())
                    .collect();
                Err(cycle.into_iter().map(|n| sub[n.index()].clone()).collect())
            }
        }
    }

    /// Units for fault sweeps: the declared ones, or one per instance.
    pub fn fault_units(&self) -> BTreeMap<String, Vec<String>> {
        if self.units.is_empty() {
            self.modules.iter().map(|m| (m.id.clone(), vec![m.id.clone()])).collect()
        } else {
            self.units.clone()
        }
    }
}

/// Elementary cycles by depth-first search from each start node over nodes
/// with larger index; stops after `limit` cycles.
fn elementary_cycles<N, E>(g: &DiGraph<N, E>, limit: usize) -> Vec<Vec<NodeIndex>> {
    let mut out = Vec::new();
    for s in g.node_indices() {
        let mut path = vec![s];
        let mut on_path = vec![false; g.node_count()];
        on_path[s.index()] = true;
        let mut stack = vec![g.neighbors(s).collect::<Vec<_>>()];
        while let Some(frontier) = stack.last_mut() {
            if out.len() >= limit {
                return out;
            }
            match frontier.pop() {
                None => {
                    stack.pop();
                    if let Some(n) = path.pop() {
                        on_path[n.index()] = false;
                    }
                }
                Some(n) if n == s => out.push(path.clone()),
                Some(n) if n.index() > s.index() && !on_path[n.index()] => {
                    on_path[n.index()] = true;
                    path.push(n);
                    stack.push(g.neighbors(n).collect());
                }
                Some(_) => {}
            }
        }
    }
    out
}
