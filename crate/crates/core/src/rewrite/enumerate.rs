//! Exhaustive enumeration of small connected single-algebra diagrams and a
//! brute-force comparison of `decide_equal` with tensor equality.

use std::collections::{ hash_map::DefaultHasher, BTreeMap, HashMap };
use std::hash::{ Hash, Hasher };
use serde::Serialize;
use crate::{
    diagram::{ eval, Diagram, Dst, EvalContext, GenOp, NodeKind, Src, Wire },
    tensor::Tensor,
};
use super::{ normal_key, AlgebraKind, NormalKey, RewriteResult };

/// Where a new node's port attaches.
#[derive(Clone, Copy)]
enum Attach { Fresh, Slot(usize) }

fn choices(ports: usize, slots: usize) -> Vec<Vec<Attach>> {
    let mut out = vec![vec![]];
    for _ in 0..ports {
        let mut next = Vec::new();
        for c in &out {
            let mut fresh = c.clone();
            fresh.push(Attach::Fresh);
            next.push(fresh);
            for s in 0..slots {
                if c.iter().any(|a| matches!(a, Attach::Slot(t) if *t == s)) { continue; }
                let mut v = c.clone();
                v.push(Attach::Slot(s));
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Every way of adding one node of `kind` that touches the existing
/// diagram. New boundary slots go at the end.
fn extensions(d: &Diagram, kind: &NodeKind) -> Vec<Diagram> {
    let (a, b) = kind.arity();
    let new = d.node_count();
    let mut out = Vec::new();
    for ins in choices(a, d.n_outputs()) {
        for outs in choices(b, d.n_inputs()) {
            let touches = ins.iter().chain(&outs).any(|x| matches!(x, Attach::Slot(_)));
            if !touches { continue; }
            let used_out: Vec<usize> = ins.iter().filter_map(|x| match x { Attach::Slot(s) => Some(*s), _ => None }).collect();
            let used_in: Vec<usize> = outs.iter().filter_map(|x| match x { Attach::Slot(s) => Some(*s), _ => None }).collect();
            let keep_out: Vec<usize> = (0..d.n_outputs()).filter(|j| !used_out.contains(j)).collect();
            let keep_in: Vec<usize> = (0..d.n_inputs()).filter(|i| !used_in.contains(i)).collect();
            let fresh_in = ins.iter().filter(|x| matches!(x, Attach::Fresh)).count();
            let fresh_out = outs.iter().filter(|x| matches!(x, Attach::Fresh)).count();
            let n_in = keep_in.len() + fresh_in;
            let n_out = keep_out.len() + fresh_out;
            let pos = |xs: &[usize], x: usize| xs.iter().position(|&y| y == x);

            let mut wires = Vec::new();
            for w in d.wires() {
                let from = match w.from {
                    Src::Input(i) => match pos(&keep_in, i) {
                        Some(k) => Src::Input(k),
                        // this input now comes from the new node
                        None => {
                            let p = outs.iter().position(|x| matches!(x, Attach::Slot(s) if *s == i)).unwrap();
                            Src::Node { node: new, port: p }
                        }
                    },
                    s => s,
                };
                let to = match w.to {
                    Dst::Output(j) => match pos(&keep_out, j) {
                        Some(k) => Dst::Output(k),
                        None => {
                            let p = ins.iter().position(|x| matches!(x, Attach::Slot(s) if *s == j)).unwrap();
                            Dst::Node { node: new, port: p }
                        }
                    },
                    t => t,
                };
                wires.push(Wire { from, to });
            }
            let mut fi = keep_in.len();
            for (p, x) in ins.iter().enumerate() {
                if matches!(x, Attach::Fresh) {
                    wires.push(Wire { from: Src::Input(fi), to: Dst::Node { node: new, port: p } });
                    fi += 1;
                }
            }
            let mut fo = keep_out.len();
            for (p, x) in outs.iter().enumerate() {
                if matches!(x, Attach::Fresh) {
                    wires.push(Wire { from: Src::Node { node: new, port: p }, to: Dst::Output(fo) });
                    fo += 1;
                }
            }
            let mut nodes = d.nodes().to_vec();
            nodes.push(kind.clone());
            if let Ok(nd) = Diagram::new(nodes, wires, n_in, n_out) { out.push(nd); }
        }
    }
    out
}

/// A diagram as a vertex-coloured directed multigraph with port numbers
/// and boundary numbering forgotten.
struct Shape {
    color: Vec<u64>,
    mult: Vec<Vec<u8>>,
}

fn hash_of<T: Hash>(x: &T) -> u64 {
    let mut h = DefaultHasher::new();
    x.hash(&mut h);
    h.finish()
}

impl Shape {
    fn new(d: &Diagram) -> Self {
        let nn = d.node_count();
        let n = nn + d.n_inputs() + d.n_outputs();
        let mut color = vec![0u64; n];
        for (i, k) in d.nodes().iter().enumerate() {
            color[i] = match k {
                NodeKind::Gen { op, .. } => 1 + *op as u64,
                _ => 100,
            };
        }
        color[nn..nn + d.n_inputs()].fill(200);
        color[nn + d.n_inputs()..n].fill(300);
        let mut mult = vec![vec![0u8; n]; n];
        for w in d.wires() {
            let a = match w.from { Src::Node { node, .. } => node, Src::Input(i) => nn + i };
            let b = match w.to { Dst::Node { node, .. } => node, Dst::Output(j) => nn + d.n_inputs() + j };
            mult[a][b] += 1;
        }
        let mut s = Self { color, mult };
        s.refine();
        s
    }

    /// Colour refinement by in- and out-neighbourhoods.
    fn refine(&mut self) {
        let n = self.color.len();
        for _ in 0..4 {
            let next: Vec<u64> = (0..n).map(|v| {
                let mut outs: Vec<(u64, u8)> = (0..n).filter(|&u| self.mult[v][u] > 0)
                    .map(|u| (self.color[u], self.mult[v][u])).collect();
                let mut ins: Vec<(u64, u8)> = (0..n).filter(|&u| self.mult[u][v] > 0)
                    .map(|u| (self.color[u], self.mult[u][v])).collect();
                outs.sort_unstable();
                ins.sort_unstable();
                hash_of(&(self.color[v], outs, ins))
            }).collect();
            self.color = next;
        }
    }

    fn invariant(&self) -> u64 {
        let mut c = self.color.clone();
        c.sort_unstable();
        hash_of(&c)
    }

    fn iso(&self, other: &Shape) -> bool {
        let n = self.color.len();
        if n != other.color.len() { return false; }
        let mut map = vec![usize::MAX; n];
        let mut used = vec![false; n];
        fn rec(k: usize, a: &Shape, b: &Shape, map: &mut [usize], used: &mut [bool]) -> bool {
            if k == map.len() { return true; }
            for y in 0..map.len() {
                if used[y] || a.color[k] != b.color[y] || a.mult[k][k] != b.mult[y][y] { continue; }
                let ok = (0..k).all(|u| a.mult[k][u] == b.mult[y][map[u]] && a.mult[u][k] == b.mult[map[u]][y]);
                if !ok { continue; }
                map[k] = y;
                used[y] = true;
                if rec(k + 1, a, b, map, used) { return true; }
                used[y] = false;
            }
            map[k] = usize::MAX;
            false
        }
        rec(0, self, other, &mut map, &mut used)
    }
}

/// Connected diagrams built from `ops` of `alg` with at most `max_nodes`
/// nodes and at most `max_width` boundary wires. One representative is kept
/// per isomorphism class of the underlying multigraph, ignoring the order
/// of ports on a node and of boundary slots.
pub fn enumerate_connected(alg: &str, ops: &[GenOp], max_nodes: usize, max_width: usize) -> Vec<Diagram> {
    let kinds: Vec<NodeKind> = ops.iter().map(|&op| NodeKind::gen(alg, op)).collect();
    let mut all = vec![Diagram::identity(1)];
    let mut shapes = vec![Shape::new(&all[0])];
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    buckets.entry(shapes[0].invariant()).or_default().push(0);
    let mut frontier = vec![0usize];
    for _ in 0..max_nodes {
        let mut next = Vec::new();
        for &f in &frontier {
            for k in &kinds {
                for e in extensions(&all[f], k) {
                    if e.n_inputs() + e.n_outputs() > max_width { continue; }
                    let s = Shape::new(&e);
                    let bucket = buckets.entry(s.invariant()).or_default();
                    if bucket.iter().any(|&i| shapes[i].iso(&s)) { continue; }
                    bucket.push(all.len());
                    next.push(all.len());
                    all.push(e);
                    shapes.push(s);
                }
            }
        }
        frontier = next;
    }
    all
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnumerationReport {
    pub diagrams: usize,
    pub pairs: u64,
    pub disagreements: u64,
    pub tensor_classes: usize,
    pub normal_classes: usize,
}

fn choose2(n: u64) -> u64 { n * n.saturating_sub(1) / 2 }

fn keys_equal(a: &NormalKey, b: &NormalKey) -> bool {
    match (a, b) {
        (NormalKey::Value { inputs: i1, outputs: o1, parts: p1, scalar: s1 },
         NormalKey::Value { inputs: i2, outputs: o2, parts: p2, scalar: s2 }) => {
            i1 == i2 && o1 == o2 && p1 == p2 && (s1 - s2).norm() <= 1e-12 * s1.norm().max(1.0)
        }
        _ => a == b,
    }
}

/// Compares normal-form equality with tensor equality on all pairs of
/// diagrams sharing a boundary. Pairs are counted through the contingency
/// table of the two partitions, so a disagreement is any pair on which
/// the two equalities differ.
pub fn oracle_agreement(ds: &[Diagram], kind: AlgebraKind, ctx: &EvalContext, tol: f64)
    -> RewriteResult<EnumerationReport>
{
    let mut groups: BTreeMap<(usize, usize), Vec<&Diagram>> = BTreeMap::new();
    for d in ds { groups.entry((d.n_inputs(), d.n_outputs())).or_default().push(d); }
    let mut rep = EnumerationReport { diagrams: ds.len(), pairs: 0, disagreements: 0, tensor_classes: 0, normal_classes: 0 };
    for group in groups.values() {
        let mut t_reps: Vec<Tensor> = Vec::new();
        let mut k_reps: Vec<NormalKey> = Vec::new();
        let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        let mut t_count: BTreeMap<usize, u64> = BTreeMap::new();
        let mut k_count: BTreeMap<usize, u64> = BTreeMap::new();
        for d in group {
            let t = eval(d, ctx)?;
            let ti = match t_reps.iter().position(|r| r.rel_diff(&t).is_ok_and(|x| x <= tol)) {
                Some(i) => i,
                None => { t_reps.push(t); t_reps.len() - 1 }
            };
            let k = normal_key(d, kind)?;
            let ki = match k_reps.iter().position(|r| keys_equal(r, &k)) {
                Some(i) => i,
                None => { k_reps.push(k); k_reps.len() - 1 }
            };
            *table.entry((ti, ki)).or_default() += 1;
            *t_count.entry(ti).or_default() += 1;
            *k_count.entry(ki).or_default() += 1;
        }
        let same_t: u64 = t_count.values().map(|&n| choose2(n)).sum();
        let same_k: u64 = k_count.values().map(|&n| choose2(n)).sum();
        let both: u64 = table.values().map(|&n| choose2(n)).sum();
        rep.pairs += choose2(group.len() as u64);
        rep.disagreements += same_t + same_k - 2 * both;
        rep.tensor_classes += t_reps.len();
        rep.normal_classes += k_reps.len();
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        // one node: each generator attached to a single wire in every way
        let ds = enumerate_connected("ghz", &GenOp::ALL, 1, 8);
        assert!(ds.iter().all(Diagram::is_connected));
        assert!(ds.len() > 6);
        let again = enumerate_connected("ghz", &GenOp::ALL, 1, 8);
        assert_eq!(ds.len(), again.len());
    }

    #[test]
    fn agreement_up_to_three_nodes() {
        let ctx = EvalContext::default();
        for (alg, kind) in [("ghz", AlgebraKind::Scfa), ("w", AlgebraKind::Acfa)] {
            let ds = enumerate_connected(alg, &GenOp::ALL, 3, 6);
            let rep = oracle_agreement(&ds, kind, &ctx, 1e-9).unwrap();
            assert_eq!(rep.disagreements, 0, "{alg}: {rep:?}");
            assert!(rep.pairs > 0);
        }
    }
}
