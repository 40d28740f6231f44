//! Graphviz export. Generators are filled by algebra (`ghz` white, `w`
//! black, others grey); chains of ticks are drawn as labels on the edge they
//! sit on.

use std::fmt::Write;
use super::{ Diagram, Dst, NodeKind, Src };

fn fill(alg: &str) -> (&'static str, &'static str) {
    match alg {
        "ghz" => ("white", "black"),
        "w" => ("black", "white"),
        _ => ("grey70", "black"),
    }
}

pub fn to_dot(d: &Diagram) -> String {
    let mut s = String::from("digraph diagram {\n  rankdir=BT;\n");
    for i in 0..d.n_inputs() {
        let _ = writeln!(s, "  in{i} [shape=point, xlabel=\"in{i}\"];");
    }
    for j in 0..d.n_outputs() {
        let _ = writeln!(s, "  out{j} [shape=point, xlabel=\"out{j}\"];");
    }
    for (n, k) in d.nodes().iter().enumerate() {
        match k {
            NodeKind::Gen { alg, op } => {
                let (bg, fg) = fill(alg);
                let _ = writeln!(
                    s,
                    "  n{n} [shape=circle, style=filled, fillcolor={bg}, fontcolor={fg}, label=\"{}\", tooltip=\"{alg}\"];",
                    op.name(),
                );
            }
            NodeKind::Tick => {}
            NodeKind::State { name, .. } => {
                let _ = writeln!(s, "  n{n} [shape=invtriangle, label=\"{name}\"];");
            }
            NodeKind::Effect { name, .. } => {
                let _ = writeln!(s, "  n{n} [shape=triangle, label=\"{name}\"];");
            }
        }
    }
    let is_tick = |src: Src| matches!(src, Src::Node { node, .. } if d.nodes()[node] == NodeKind::Tick);
    for w in d.wires() {
        // draw each tick chain once, from the wire that leaves it
        if matches!(w.to, Dst::Node { node, .. } if d.nodes()[node] == NodeKind::Tick) { continue; }
        let mut from = w.from;
        let mut ticks = 0;
        while is_tick(from) {
            ticks += 1;
            let Src::Node { node, .. } = from else { unreachable!() };
            from = d.wire_into(Dst::Node { node, port: 0 }).expect("validated").from;
        }
        let a = match from {
            Src::Input(i) => format!("in{i}"),
            Src::Node { node, .. } => format!("n{node}"),
        };
        let b = match w.to {
            Dst::Output(j) => format!("out{j}"),
            Dst::Node { node, .. } => format!("n{node}"),
        };
        let label = match ticks {
            0 => String::new(),
            1 => " [label=\"tick\"]".into(),
            k => format!(" [label=\"tick^{k}\"]"),
        };
        let _ = writeln!(s, "  {a} -> {b}{label};");
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::parse_dsl;

    #[test]
    fn spider_state_has_three_boundary_nodes() {
        let d = parse_dsl("(seq (unit ghz) (comult ghz) (par (comult ghz) id))", &["ghz"]).unwrap();
        let dot = to_dot(&d);
        assert_eq!(dot.matches("shape=point").count(), 3);
        assert!(dot.contains("fillcolor=white"));
    }

    #[test]
    fn ticks_become_labels() {
        let d = parse_dsl("(seq (unit w) tick tick (counit ghz))", &["ghz", "w"]).unwrap();
        let dot = to_dot(&d);
        assert!(dot.contains("tick^2"));
        assert_eq!(dot.matches("->").count(), 1);
        assert!(dot.contains("fillcolor=black"));
    }
}
