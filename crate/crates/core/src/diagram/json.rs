//! Diagram JSON, schema version 1.
//!
//! ```json
//! {"schema": 1, "inputs": 1, "outputs": 2,
//!  "nodes": [{"id": 0, "kind": "gen", "alg": "w", "op": "comult"}],
//!  "wires": [{"from": {"input": 0}, "to": {"node": 0, "port": 0}},
//!            {"from": {"node": 0, "port": 0}, "to": {"output": 0}},
//!            {"from": {"node": 0, "port": 1}, "to": {"output": 1}}]}
//! ```
//!
//! Node kinds are `gen`, `tick`, `state` and `effect`; variables carry
//! `name`, `arity` and an optional `vector` of `[re, im]` pairs.

use std::collections::HashMap;
use num_complex::Complex64 as C64;
use serde::{ Deserialize, Serialize };
use super::{ Diagram, DiagramError, DiagramResult, Dst, GenOp, NodeKind, Src, Wire };

#[derive(Serialize, Deserialize)]
struct DiagramJson {
    schema: u32,
    inputs: usize,
    outputs: usize,
    nodes: Vec<NodeJson>,
    wires: Vec<WireJson>,
}

#[derive(Serialize, Deserialize)]
struct NodeJson {
    id: serde_json::Value,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alg: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    op: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vector: Option<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EndJson {
    Port { node: serde_json::Value, port: usize },
    Input { input: usize },
    Output { output: usize },
}

#[derive(Serialize, Deserialize)]
struct WireJson {
    from: EndJson,
    to: EndJson,
}

fn schema(msg: impl Into<String>) -> DiagramError { DiagramError::Schema(msg.into()) }

pub fn to_json(d: &Diagram) -> String {
    let nodes = d.nodes().iter().enumerate().map(|(i, k)| {
        let mut n = NodeJson {
            id: i.into(), kind: String::new(), alg: None, op: None, name: None, arity: None, vector: None,
        };
        let vec_json = |v: &Option<Vec<C64>>| v.as_ref().map(|v| v.iter().map(|z| [z.re, z.im]).collect());
        match k {
            NodeKind::Gen { alg, op } => {
                n.kind = "gen".into();
                n.alg = Some(alg.clone());
                n.op = Some(op.name().into());
            }
            NodeKind::Tick => n.kind = "tick".into(),
            NodeKind::State { name, arity, vector } | NodeKind::Effect { name, arity, vector } => {
                n.kind = if matches!(k, NodeKind::State { .. }) { "state" } else { "effect" }.into();
                n.name = Some(name.clone());
                n.arity = Some(*arity);
                n.vector = vec_json(vector);
            }
        }
        n
    }).collect();
    let wires = d.wires().iter().map(|w| WireJson {
        from: match w.from {
            Src::Input(i) => EndJson::Input { input: i },
            Src::Node { node, port } => EndJson::Port { node: node.into(), port },
        },
        to: match w.to {
            Dst::Output(j) => EndJson::Output { output: j },
            Dst::Node { node, port } => EndJson::Port { node: node.into(), port },
        },
    }).collect();
    let j = DiagramJson { schema: 1, inputs: d.n_inputs(), outputs: d.n_outputs(), nodes, wires };
    serde_json::to_string(&j).expect("serializable")
}

pub fn from_json(text: &str) -> DiagramResult<Diagram> {
    let j: DiagramJson = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
    if j.schema != 1 { return Err(schema(format!("unsupported schema version {}", j.schema))); }
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut nodes = Vec::new();
    for (i, n) in j.nodes.iter().enumerate() {
        if ids.insert(n.id.to_string(), i).is_some() {
            return Err(schema(format!("duplicate node id {}", n.id)));
        }
        let field = |f: &Option<String>, what: &str| f.clone().ok_or_else(|| schema(format!("node {} lacks '{what}'", n.id)));
        let vector = n.vector.as_ref().map(|v| v.iter().map(|p| C64::new(p[0], p[1])).collect::<Vec<_>>());
        let arity = || -> DiagramResult<usize> {
            match (n.arity, &vector) {
                (Some(a), _) => Ok(a),
                (None, Some(v)) if v.len().is_power_of_two() && v.len() > 1 => Ok(v.len().trailing_zeros() as usize),
                (None, None) => Ok(1),
                _ => Err(schema(format!("node {} has no valid arity", n.id))),
            }
        };
        nodes.push(match n.kind.as_str() {
            "gen" => {
                let op = field(&n.op, "op")?;
                let op = GenOp::from_name(&op).ok_or_else(|| schema(format!("unknown op '{op}'")))?;
                NodeKind::Gen { alg: field(&n.alg, "alg")?, op }
            }
            "tick" => NodeKind::Tick,
            "state" => NodeKind::State { name: field(&n.name, "name")?, arity: arity()?, vector },
            "effect" => NodeKind::Effect { name: field(&n.name, "name")?, arity: arity()?, vector },
            other => return Err(schema(format!("unknown node kind '{other}'"))),
        });
    }
    let node_of = |v: &serde_json::Value| {
        ids.get(&v.to_string()).copied().ok_or_else(|| schema(format!("dangling wire endpoint: node {v}")))
    };
    let mut wires = Vec::new();
    for w in &j.wires {
        let from = match &w.from {
            EndJson::Input { input } => Src::Input(*input),
            EndJson::Port { node, port } => Src::Node { node: node_of(node)?, port: *port },
            EndJson::Output { .. } => return Err(schema("wire starts at an output slot")),
        };
        let to = match &w.to {
            EndJson::Output { output } => Dst::Output(*output),
            EndJson::Port { node, port } => Dst::Node { node: node_of(node)?, port: *port },
            EndJson::Input { .. } => return Err(schema("wire ends at an input slot")),
        };
        wires.push(Wire { from, to });
    }
    Diagram::new(nodes, wires, j.inputs, j.outputs).map_err(|e| match e {
        DiagramError::Malformed(m) => schema(m),
        other => other,
    })
}
