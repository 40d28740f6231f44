//! Open port graphs for string diagrams over one generating object.
//!
//! Nodes are generators of named algebras, ticks and variable states or
//! effects. Wires run from a source (a boundary input or a node output port)
//! to a target (a boundary output or a node input port); every port and slot
//! is used exactly once and the node graph is acyclic, so feedback is only
//! expressible through explicit cap and cup nodes. Identity and swap are pure
//! wiring.

mod dot;
mod eval;
mod iso;
mod json;
mod parse;

pub use dot::to_dot;
pub use eval::{ eval, EvalContext };
pub use iso::{ iso_check, structure_hash };
pub use json::{ from_json, to_json };
pub use parse::parse_dsl;

use std::collections::VecDeque;
use num_complex::Complex64 as C64;
use thiserror::Error;
use crate::tensor::TensorError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagramError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("arity mismatch: {0} outputs feed {1} inputs")]
    Arity(usize, usize),

    #[error("unknown algebra '{0}'")]
    UnknownAlgebra(String),

    #[error("malformed diagram: {0}")]
    Malformed(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("unbound variable '{0}'")]
    Unbound(String),

    #[error("tensor error: {0}")]
    Tensor(#[from] TensorError),
}
pub type DiagramResult<T> = Result<T, DiagramError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GenOp { Mult, Comult, Unit, Counit, Cap, Cup }

impl GenOp {
    pub const ALL: [GenOp; 6] =
        [GenOp::Mult, GenOp::Comult, GenOp::Unit, GenOp::Counit, GenOp::Cap, GenOp::Cup];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mult => "mult",
            Self::Comult => "comult",
            Self::Unit => "unit",
            Self::Counit => "counit",
            Self::Cap => "cap",
            Self::Cup => "cup",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> { Self::ALL.into_iter().find(|o| o.name() == s) }

    /// `(inputs, outputs)`.
    pub fn arity(self) -> (usize, usize) {
        match self {
            Self::Mult => (2, 1),
            Self::Comult => (1, 2),
            Self::Unit => (0, 1),
            Self::Counit => (1, 0),
            Self::Cap => (2, 0),
            Self::Cup => (0, 2),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Gen { alg: String, op: GenOp },
    Tick,
    State { name: String, arity: usize, vector: Option<Vec<C64>> },
    Effect { name: String, arity: usize, vector: Option<Vec<C64>> },
}

impl NodeKind {
    pub fn gen(alg: &str, op: GenOp) -> Self { Self::Gen { alg: alg.to_string(), op } }

    pub fn arity(&self) -> (usize, usize) {
        match self {
            Self::Gen { op, .. } => op.arity(),
            Self::Tick => (1, 1),
            Self::State { arity, .. } => (0, *arity),
            Self::Effect { arity, .. } => (*arity, 0),
        }
    }

    pub fn algebra(&self) -> Option<&str> {
        match self {
            Self::Gen { alg, .. } => Some(alg),
            _ => None,
        }
    }
}

/// Where a wire starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Src {
    Input(usize),
    Node { node: usize, port: usize },
}

/// Where a wire ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dst {
    Output(usize),
    Node { node: usize, port: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Wire {
    pub from: Src,
    pub to: Dst,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagram {
    nodes: Vec<NodeKind>,
    wires: Vec<Wire>,
    n_in: usize,
    n_out: usize,
}

/// A connected component with the boundary slots (in the parent's
/// numbering) it owns, in order.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub diagram: Diagram,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub nodes: Vec<usize>,
}

impl Diagram {
    /// Builds and validates a diagram.
    pub fn new(nodes: Vec<NodeKind>, wires: Vec<Wire>, n_in: usize, n_out: usize)
        -> DiagramResult<Self>
    {
        let d = Self { nodes, wires, n_in, n_out };
        d.validate()?;
        Ok(d)
    }

    pub fn identity(n: usize) -> Self {
        let wires = (0..n).map(|i| Wire { from: Src::Input(i), to: Dst::Output(i) }).collect();
        Self { nodes: vec![], wires, n_in: n, n_out: n }
    }

    pub fn empty() -> Self { Self::identity(0) }

    pub fn swap() -> Self {
        Self::permutation(&[1, 0])
    }

    /// Pure wiring sending input `i` to output `perm[i]`.
    pub fn permutation(perm: &[usize]) -> Self {
        let wires = perm.iter().enumerate()
            .map(|(i, &j)| Wire { from: Src::Input(i), to: Dst::Output(j) })
            .collect();
        Self { nodes: vec![], wires, n_in: perm.len(), n_out: perm.len() }
    }

    /// A single node with its ports on the boundary in order.
    pub fn node(kind: NodeKind) -> Self {
        let (a, b) = kind.arity();
        let mut wires: Vec<Wire> = (0..a)
            .map(|p| Wire { from: Src::Input(p), to: Dst::Node { node: 0, port: p } })
            .collect();
        wires.extend((0..b).map(|p| Wire { from: Src::Node { node: 0, port: p }, to: Dst::Output(p) }));
        Self { nodes: vec![kind], wires, n_in: a, n_out: b }
    }

    pub fn gen(alg: &str, op: GenOp) -> Self { Self::node(NodeKind::gen(alg, op)) }

    pub fn tick() -> Self { Self::node(NodeKind::Tick) }

    pub fn nodes(&self) -> &[NodeKind] { &self.nodes }
    pub fn wires(&self) -> &[Wire] { &self.wires }
    pub fn n_inputs(&self) -> usize { self.n_in }
    pub fn n_outputs(&self) -> usize { self.n_out }
    pub fn node_count(&self) -> usize { self.nodes.len() }

    /// Names of the algebras whose generators occur, sorted and deduplicated.
    pub fn algebras(&self) -> Vec<String> {
        let mut v: Vec<String> = self.nodes.iter().filter_map(|k| k.algebra().map(String::from)).collect();
        v.sort();
        v.dedup();
        v
    }

    fn validate(&self) -> DiagramResult<()> {
        let bad = |m: String| Err(DiagramError::Malformed(m));
        let mut src_used = std::collections::HashSet::new();
        let mut dst_used = std::collections::HashSet::new();
        for w in &self.wires {
            match w.from {
                Src::Input(i) if i >= self.n_in => return bad(format!("input slot {i} out of range")),
                Src::Node { node, port } => {
                    let Some(k) = self.nodes.get(node) else { return bad(format!("dangling node {node}")) };
                    if port >= k.arity().1 { return bad(format!("node {node} has no output port {port}")); }
                }
                _ => {}
            }
            match w.to {
                Dst::Output(j) if j >= self.n_out => return bad(format!("output slot {j} out of range")),
                Dst::Node { node, port } => {
                    let Some(k) = self.nodes.get(node) else { return bad(format!("dangling node {node}")) };
                    if port >= k.arity().0 { return bad(format!("node {node} has no input port {port}")); }
                }
                _ => {}
            }
            if !src_used.insert(w.from) { return bad(format!("{:?} used twice", w.from)); }
            if !dst_used.insert(w.to) { return bad(format!("{:?} used twice", w.to)); }
        }
        let expected_src = self.n_in + self.nodes.iter().map(|k| k.arity().1).sum::<usize>();
        let expected_dst = self.n_out + self.nodes.iter().map(|k| k.arity().0).sum::<usize>();
        if src_used.len() != expected_src || dst_used.len() != expected_dst {
            return bad("unconnected port".into());
        }
        if self.topo_order().is_none() { return bad("cycle among nodes".into()); }
        Ok(())
    }

    /// Node indices in dependency order, or `None` on a cycle.
    pub fn topo_order(&self) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        let mut succ = vec![Vec::new(); n];
        for w in &self.wires {
            if let (Src::Node { node: a, .. }, Dst::Node { node: b, .. }) = (w.from, w.to) {
                indeg[b] += 1;
                succ[a].push(b);
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut out = Vec::with_capacity(n);
        while let Some(i) = queue.pop_front() {
            out.push(i);
            for &j in &succ[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 { queue.push_back(j); }
            }
        }
        (out.len() == n).then_some(out)
    }

    /// The wire ending at `dst`.
    pub fn wire_into(&self, dst: Dst) -> Option<&Wire> { self.wires.iter().find(|w| w.to == dst) }

    /// The wire leaving `src`.
    pub fn wire_from(&self, src: Src) -> Option<&Wire> { self.wires.iter().find(|w| w.from == src) }

    /// `g ∘ f`: outputs of `self` plugged into the inputs of `g`.
    pub fn then(&self, g: &Diagram) -> DiagramResult<Diagram> {
        if self.n_out != g.n_in { return Err(DiagramError::Arity(self.n_out, g.n_in)); }
        let off = self.nodes.len();
        let shift_src = |s: Src| match s {
            Src::Node { node, port } => Src::Node { node: node + off, port },
            x => x,
        };
        let shift_dst = |d: Dst| match d {
            Dst::Node { node, port } => Dst::Node { node: node + off, port },
            x => x,
        };
        let mut nodes = self.nodes.clone();
        nodes.extend(g.nodes.iter().cloned());
        // where each of our outputs comes from
        let mut feed = vec![None; self.n_out];
        let mut wires = Vec::new();
        for w in &self.wires {
            match w.to {
                Dst::Output(j) => feed[j] = Some(w.from),
                _ => wires.push(*w),
            }
        }
        for w in &g.wires {
            let from = match w.from {
                Src::Input(i) => feed[i].expect("validated"),
                s => shift_src(s),
            };
            wires.push(Wire { from, to: shift_dst(w.to) });
        }
        Diagram::new(nodes, wires, self.n_in, g.n_out)
    }

    /// Juxtaposition `self ⊗ g`.
    pub fn par(&self, g: &Diagram) -> Diagram {
        let off = self.nodes.len();
        let mut nodes = self.nodes.clone();
        nodes.extend(g.nodes.iter().cloned());
        let mut wires = self.wires.clone();
        for w in &g.wires {
            let from = match w.from {
                Src::Input(i) => Src::Input(i + self.n_in),
                Src::Node { node, port } => Src::Node { node: node + off, port },
            };
            let to = match w.to {
                Dst::Output(j) => Dst::Output(j + self.n_out),
                Dst::Node { node, port } => Dst::Node { node: node + off, port },
            };
            wires.push(Wire { from, to });
        }
        Diagram { nodes, wires, n_in: self.n_in + g.n_in, n_out: self.n_out + g.n_out }
    }

    pub fn seq_all(ds: &[Diagram]) -> DiagramResult<Diagram> {
        let mut it = ds.iter();
        let first = it.next().cloned().unwrap_or_else(Diagram::empty);
        it.try_fold(first, |acc, d| acc.then(d))
    }

    pub fn par_all(ds: &[Diagram]) -> Diagram {
        ds.iter().fold(Diagram::empty(), |acc, d| acc.par(d))
    }

    /// Renumbers boundary slots: input `i` becomes `ins[i]`, output `j`
    /// becomes `outs[j]`.
    pub fn relabel_boundary(&self, ins: &[usize], outs: &[usize]) -> DiagramResult<Diagram> {
        let wires = self.wires.iter().map(|w| Wire {
            from: match w.from { Src::Input(i) => Src::Input(ins[i]), s => s },
            to: match w.to { Dst::Output(j) => Dst::Output(outs[j]), d => d },
        }).collect();
        Diagram::new(self.nodes.clone(), wires, self.n_in, self.n_out)
    }

    /// Same diagram with node `i` moved to position `perm[i]`.
    pub fn renumber_nodes(&self, perm: &[usize]) -> Diagram {
        let mut nodes = vec![NodeKind::Tick; self.nodes.len()];
        for (i, k) in self.nodes.iter().enumerate() { nodes[perm[i]] = k.clone(); }
        let wires = self.wires.iter().map(|w| Wire {
            from: match w.from { Src::Node { node, port } => Src::Node { node: perm[node], port }, s => s },
            to: match w.to { Dst::Node { node, port } => Dst::Node { node: perm[node], port }, d => d },
        }).collect();
        Diagram { nodes, wires, n_in: self.n_in, n_out: self.n_out }
    }

    /// Vertex ids of the underlying multigraph: nodes, then inputs, then
    /// outputs.
    fn vertex_of_src(&self, s: Src) -> usize {
        match s {
            Src::Node { node, .. } => node,
            Src::Input(i) => self.nodes.len() + i,
        }
    }

    fn vertex_of_dst(&self, d: Dst) -> usize {
        match d {
            Dst::Node { node, .. } => node,
            Dst::Output(j) => self.nodes.len() + self.n_in + j,
        }
    }

    fn vertex_count(&self) -> usize { self.nodes.len() + self.n_in + self.n_out }

    /// Component index of every vertex and the number of components.
    fn component_ids(&self) -> (Vec<usize>, usize) {
        let n = self.vertex_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r { r = p[r]; }
            let mut y = x;
            while p[y] != r { let nx = p[y]; p[y] = r; y = nx; }
            r
        }
        for w in &self.wires {
            let (a, b) = (self.vertex_of_src(w.from), self.vertex_of_dst(w.to));
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb { parent[ra] = rb; }
        }
        let mut label = vec![usize::MAX; n];
        let mut ids = vec![0; n];
        let mut count = 0;
        for v in 0..n {
            let r = find(&mut parent, v);
            if label[r] == usize::MAX { label[r] = count; count += 1; }
            ids[v] = label[r];
        }
        (ids, count)
    }

    pub fn is_connected(&self) -> bool { self.component_ids().1 <= 1 }

    /// Connected components, ordered by their smallest vertex (nodes first,
    /// then boundary slots).
    pub fn components(&self) -> Vec<Component> {
        let (ids, count) = self.component_ids();
        let nn = self.nodes.len();
        (0..count).map(|c| {
            let nodes: Vec<usize> = (0..nn).filter(|&v| ids[v] == c).collect();
            let inputs: Vec<usize> = (0..self.n_in).filter(|&i| ids[nn + i] == c).collect();
            let outputs: Vec<usize> = (0..self.n_out).filter(|&j| ids[nn + self.n_in + j] == c).collect();
            let pos = |xs: &[usize], x: usize| xs.iter().position(|&y| y == x).unwrap();
            let wires = self.wires.iter()
                .filter(|w| ids[self.vertex_of_src(w.from)] == c)
                .map(|w| Wire {
                    from: match w.from {
                        Src::Input(i) => Src::Input(pos(&inputs, i)),
                        Src::Node { node, port } => Src::Node { node: pos(&nodes, node), port },
                    },
                    to: match w.to {
                        Dst::Output(j) => Dst::Output(pos(&outputs, j)),
                        Dst::Node { node, port } => Dst::Node { node: pos(&nodes, node), port },
                    },
                })
                .collect();
            let diagram = Diagram {
                nodes: nodes.iter().map(|&v| self.nodes[v].clone()).collect(),
                wires,
                n_in: inputs.len(),
                n_out: outputs.len(),
            };
            Component { diagram, inputs, outputs, nodes }
        }).collect()
    }

    /// Cycle rank `E - V + 1` of each connected component, with boundary
    /// slots and ticks counted as vertices.
    pub fn loop_count(&self) -> Vec<usize> {
        let (ids, count) = self.component_ids();
        let mut e = vec![0usize; count];
        let mut v = vec![0usize; count];
        for x in ids.iter() { v[*x] += 1; }
        for w in &self.wires { e[ids[self.vertex_of_src(w.from)]] += 1; }
        (0..count).map(|c| e[c] + 1 - v[c]).collect()
    }
}

/// Incremental construction of a diagram from nodes and explicit wires.
#[derive(Clone, Debug, Default)]
pub struct Builder {
    nodes: Vec<NodeKind>,
    wires: Vec<Wire>,
    n_in: usize,
    n_out: usize,
}

impl Builder {
    pub fn new(n_in: usize, n_out: usize) -> Self {
        Self { nodes: vec![], wires: vec![], n_in, n_out }
    }

    pub fn add(&mut self, kind: NodeKind) -> usize {
        self.nodes.push(kind);
        self.nodes.len() - 1
    }

    pub fn wire(&mut self, from: Src, to: Dst) -> &mut Self {
        self.wires.push(Wire { from, to });
        self
    }

    pub fn finish(self) -> DiagramResult<Diagram> {
        Diagram::new(self.nodes, self.wires, self.n_in, self.n_out)
    }
}

/// Output port `port` of node `node`.
pub fn out(node: usize, port: usize) -> Src { Src::Node { node, port } }

/// Input port `port` of node `node`.
pub fn inp(node: usize, port: usize) -> Dst { Dst::Node { node, port } }
