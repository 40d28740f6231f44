//! Boundary-preserving isomorphism of port graphs.

use std::collections::hash_map::DefaultHasher;
use std::hash::{ Hash, Hasher };
use super::{ Diagram, Dst, NodeKind, Src };

fn kind_key(k: &NodeKind) -> String {
    match k {
        NodeKind::Gen { alg, op } => format!("g:{alg}:{}", op.name()),
        NodeKind::Tick => "tick".into(),
        NodeKind::State { name, arity, vector } => format!("s:{name}:{arity}:{vector:?}"),
        NodeKind::Effect { name, arity, vector } => format!("e:{name}:{arity}:{vector:?}"),
    }
}

/// Per-port neighbor tables: for every node output port the target it
/// feeds, for every node input port the source feeding it.
struct Adjacency {
    out: Vec<Vec<Dst>>,
    inp: Vec<Vec<Src>>,
}

fn adjacency(d: &Diagram) -> Adjacency {
    let mut out: Vec<Vec<Dst>> = d.nodes().iter().map(|k| vec![Dst::Output(usize::MAX); k.arity().1]).collect();
    let mut inp: Vec<Vec<Src>> = d.nodes().iter().map(|k| vec![Src::Input(usize::MAX); k.arity().0]).collect();
    for w in d.wires() {
        if let Src::Node { node, port } = w.from { out[node][port] = w.to; }
        if let Dst::Node { node, port } = w.to { inp[node][port] = w.from; }
    }
    Adjacency { out, inp }
}

struct Search<'a> {
    a: &'a Diagram,
    b: &'a Diagram,
    aa: Adjacency,
    ab: Adjacency,
    fwd: Vec<Option<usize>>,
    back: Vec<Option<usize>>,
}

impl Search<'_> {
    /// Maps `x -> y` and propagates forced pairs along ports. Returns the
    /// newly mapped nodes, or `None` (with nothing left mapped) on conflict.
    fn assign(&mut self, x: usize, y: usize) -> Option<Vec<usize>> {
        let mut added = Vec::new();
        let mut stack = vec![(x, y)];
        while let Some((x, y)) = stack.pop() {
            match (self.fwd[x], self.back[y]) {
                (Some(y2), _) if y2 == y => continue,
                (None, None) => {}
                _ => { self.undo(&added); return None; }
            }
            if kind_key(&self.a.nodes()[x]) != kind_key(&self.b.nodes()[y]) {
                self.undo(&added);
                return None;
            }
            self.fwd[x] = Some(y);
            self.back[y] = Some(x);
            added.push(x);
            for (p, (&da, &db)) in self.aa.out[x].iter().zip(&self.ab.out[y]).enumerate() {
                let _ = p;
                match (da, db) {
                    (Dst::Output(i), Dst::Output(j)) if i == j => {}
                    (Dst::Node { node: u, port: pu }, Dst::Node { node: v, port: pv }) if pu == pv => {
                        stack.push((u, v));
                    }
                    _ => { self.undo(&added); return None; }
                }
            }
            for (&sa, &sb) in self.aa.inp[x].iter().zip(&self.ab.inp[y]) {
                match (sa, sb) {
                    (Src::Input(i), Src::Input(j)) if i == j => {}
                    (Src::Node { node: u, port: pu }, Src::Node { node: v, port: pv }) if pu == pv => {
                        stack.push((u, v));
                    }
                    _ => { self.undo(&added); return None; }
                }
            }
        }
        Some(added)
    }

    fn undo(&mut self, added: &[usize]) {
        for &x in added {
            if let Some(y) = self.fwd[x].take() { self.back[y] = None; }
        }
    }

    fn solve(&mut self) -> bool {
        let Some(x) = self.fwd.iter().position(Option::is_none) else { return true };
        for y in 0..self.b.nodes().len() {
            if self.back[y].is_some() { continue; }
            if let Some(added) = self.assign(x, y) {
                if self.solve() { return true; }
                self.undo(&added);
            }
        }
        false
    }
}

/// Whether a node bijection exists that preserves kinds, port numbers and
/// boundary slots.
pub fn iso_check(a: &Diagram, b: &Diagram) -> bool {
    if a.n_inputs() != b.n_inputs() || a.n_outputs() != b.n_outputs()
        || a.nodes().len() != b.nodes().len() || a.wires().len() != b.wires().len()
    {
        return false;
    }
    let mut ka: Vec<String> = a.nodes().iter().map(kind_key).collect();
    let mut kb: Vec<String> = b.nodes().iter().map(kind_key).collect();
    ka.sort();
    kb.sort();
    if ka != kb { return false; }
    // bare boundary-to-boundary wires must agree
    let bare = |d: &Diagram| {
        let mut v: Vec<(usize, usize)> = d.wires().iter().filter_map(|w| match (w.from, w.to) {
            (Src::Input(i), Dst::Output(j)) => Some((i, j)),
            _ => None,
        }).collect();
        v.sort();
        v
    };
    if bare(a) != bare(b) { return false; }
    let mut s = Search {
        a, b,
        aa: adjacency(a),
        ab: adjacency(b),
        fwd: vec![None; a.nodes().len()],
        back: vec![None; b.nodes().len()],
    };
    // boundary wires pin nodes directly
    for w in a.wires() {
        let pinned = match (w.from, w.to) {
            (Src::Input(i), Dst::Node { node, port }) => b.wire_from(Src::Input(i)).map(|wb| match wb.to {
                Dst::Node { node: v, port: pv } if pv == port => Some((node, v)),
                _ => None,
            }),
            (Src::Node { node, port }, Dst::Output(j)) => b.wire_into(Dst::Output(j)).map(|wb| match wb.from {
                Src::Node { node: v, port: pv } if pv == port => Some((node, v)),
                _ => None,
            }),
            _ => None,
        };
        match pinned {
            Some(Some((x, y))) => if s.assign(x, y).is_none() { return false; },
            Some(None) => return false,
            None => {}
        }
    }
    s.solve()
}

/// Hash invariant under node renumbering (colour refinement over ports,
/// seeded with kinds and boundary positions).
pub fn structure_hash(d: &Diagram) -> u64 {
    let h = |x: &dyn Fn(&mut DefaultHasher)| {
        let mut s = DefaultHasher::new();
        x(&mut s);
        s.finish()
    };
    let adj = adjacency(d);
    let mut col: Vec<u64> = d.nodes().iter().map(|k| h(&|s| kind_key(k).hash(s))).collect();
    for _ in 0..d.nodes().len().max(1) {
        let next: Vec<u64> = (0..col.len()).map(|x| {
            let outs: Vec<(u64, usize, usize)> = adj.out[x].iter().map(|t| match *t {
                Dst::Output(j) => (0, j, 0),
                Dst::Node { node, port } => (col[node], usize::MAX, port),
            }).collect();
            let ins: Vec<(u64, usize, usize)> = adj.inp[x].iter().map(|t| match *t {
                Src::Input(i) => (0, i, 0),
                Src::Node { node, port } => (col[node], usize::MAX, port),
            }).collect();
            h(&|s| { col[x].hash(s); outs.hash(s); ins.hash(s); })
        }).collect();
        col = next;
    }
    col.sort();
    let mut bare: Vec<(usize, usize)> = d.wires().iter().filter_map(|w| match (w.from, w.to) {
        (Src::Input(i), Dst::Output(j)) => Some((i, j)),
        _ => None,
    }).collect();
    bare.sort();
    h(&|s| { col.hash(s); bare.hash(s); d.n_inputs().hash(s); d.n_outputs().hash(s); })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::GenOp;

    #[test]
    fn renamed_ids_are_isomorphic() {
        let d = Diagram::seq_all(&[
            Diagram::gen("ghz", GenOp::Comult),
            Diagram::gen("w", GenOp::Mult),
            Diagram::tick(),
        ]).unwrap();
        let r = d.renumber_nodes(&[2, 0, 1]);
        assert!(iso_check(&d, &r));
        assert_eq!(structure_hash(&d), structure_hash(&r));
    }

    #[test]
    fn kinds_and_ports_matter() {
        assert!(!iso_check(&Diagram::gen("ghz", GenOp::Mult), &Diagram::gen("w", GenOp::Mult)));
        let d = Diagram::gen("ghz", GenOp::Comult);
        let s = d.then(&Diagram::swap()).unwrap();
        assert!(!iso_check(&d, &s));
        assert!(iso_check(&s, &s.clone()));
    }

    #[test]
    fn closed_components_search() {
        let circle = Diagram::gen("w", GenOp::Cup).then(&Diagram::gen("w", GenOp::Cap)).unwrap();
        let two = circle.par(&Diagram::gen("ghz", GenOp::Unit).then(&Diagram::gen("ghz", GenOp::Counit)).unwrap());
        let other = two.renumber_nodes(&[3, 1, 2, 0]);
        assert!(iso_check(&two, &other));
        let crossed = Diagram::gen("w", GenOp::Cup)
            .then(&Diagram::swap()).unwrap()
            .then(&Diagram::gen("w", GenOp::Cap)).unwrap();
        assert!(!iso_check(&circle, &crossed));
    }
}
