//! Finding a rule's left-hand side inside a host diagram and replacing it.
//!
//! Matching is exact on node kinds and port numbers. Wires inside the
//! pattern must appear in the host; wires at the pattern boundary may attach
//! to anything.

use std::collections::{ BTreeMap, BTreeSet };
use crate::diagram::{ Diagram, Dst, Src, Wire };
use super::{ RewriteError, RewriteResult, RewriteRule };

/// Pattern node `i` sits at host node `map[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Embedding {
    pub map: Vec<usize>,
}

/// Pattern nodes ordered so that each one (after the first of its
/// component) is adjacent to an earlier one.
fn search_order(p: &Diagram) -> Vec<usize> {
    let n = p.node_count();
    let mut adj = vec![BTreeSet::new(); n];
    for w in p.wires() {
        if let (Src::Node { node: a, .. }, Dst::Node { node: b, .. }) = (w.from, w.to) {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] { continue; }
        seen[s] = true;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &u in &adj[v] {
                if !seen[u] { seen[u] = true; queue.push_back(u); }
            }
        }
    }
    order
}

/// Internal pattern wires, as (from node, port, to node, port).
fn internal_wires(p: &Diagram) -> Vec<(usize, usize, usize, usize)> {
    p.wires().iter().filter_map(|w| match (w.from, w.to) {
        (Src::Node { node: a, port: pa }, Dst::Node { node: b, port: pb }) => Some((a, pa, b, pb)),
        _ => None,
    }).collect()
}

fn host_has(host: &Diagram, a: usize, pa: usize, b: usize, pb: usize) -> bool {
    host.wire_into(Dst::Node { node: b, port: pb })
        .is_some_and(|w| w.from == Src::Node { node: a, port: pa })
}

fn validate_pattern(rule: &RewriteRule) -> RewriteResult<()> {
    let bare = rule.lhs.wires().iter().any(|w| matches!((w.from, w.to), (Src::Input(_), Dst::Output(_))));
    if bare || rule.lhs.node_count() == 0 {
        return Err(RewriteError::BadPattern(rule.name.clone(), "bare wires cannot be matched".into()));
    }
    Ok(())
}

/// All embeddings of the rule's left-hand side into `host`.
pub fn find_matches(rule: &RewriteRule, host: &Diagram) -> RewriteResult<Vec<Embedding>> {
    validate_pattern(rule)?;
    let p = &rule.lhs;
    let order = search_order(p);
    let wires = internal_wires(p);
    let mut out = Vec::new();
    let mut map = vec![usize::MAX; p.node_count()];
    let mut used = vec![false; host.node_count()];

    fn rec(
        k: usize, order: &[usize], p: &Diagram, host: &Diagram,
        wires: &[(usize, usize, usize, usize)],
        map: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Embedding>,
    ) {
        if k == order.len() {
            out.push(Embedding { map: map.clone() });
            return;
        }
        let v = order[k];
        for h in 0..host.node_count() {
            if used[h] || host.nodes()[h] != p.nodes()[v] { continue; }
            map[v] = h;
            let ok = wires.iter().all(|&(a, pa, b, pb)| {
                if (a != v && b != v) || map[a] == usize::MAX || map[b] == usize::MAX { return true; }
                host_has(host, map[a], pa, map[b], pb)
            });
            if ok {
                used[h] = true;
                rec(k + 1, order, p, host, wires, map, used, out);
                used[h] = false;
            }
            map[v] = usize::MAX;
        }
    }

    rec(0, &order, p, host, &wires, &mut map, &mut used, &mut out);
    Ok(out)
}

fn still_valid(rule: &RewriteRule, host: &Diagram, emb: &Embedding) -> bool {
    let p = &rule.lhs;
    if emb.map.len() != p.node_count() { return false; }
    let distinct: BTreeSet<_> = emb.map.iter().collect();
    if distinct.len() != emb.map.len() { return false; }
    emb.map.iter().enumerate().all(|(i, &h)| h < host.node_count() && host.nodes()[h] == p.nodes()[i])
        && internal_wires(p).iter().all(|&(a, pa, b, pb)| host_has(host, emb.map[a], pa, emb.map[b], pb))
}

/// Replaces the matched copy of `rule.lhs` by `rule.rhs`. The host's value
/// is `rule.scalar` times the result's value.
pub fn apply(rule: &RewriteRule, host: &Diagram, emb: &Embedding) -> RewriteResult<Diagram> {
    validate_pattern(rule)?;
    if !still_valid(rule, host, emb) { return Err(RewriteError::StaleEmbedding); }
    let (p, rhs) = (&rule.lhs, &rule.rhs);
    let matched: BTreeSet<usize> = emb.map.iter().copied().collect();

    // Host endpoints seen from the pattern boundary.
    let mut feed = vec![Src::Input(usize::MAX); p.n_inputs()];
    let mut sink = vec![Dst::Output(usize::MAX); p.n_outputs()];
    // Matched host ports that are pattern boundary ports.
    let mut out_port_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for w in p.wires() {
        match (w.from, w.to) {
            (Src::Input(i), Dst::Node { node, port }) => {
                let h = emb.map[node];
                feed[i] = host.wire_into(Dst::Node { node: h, port }).expect("validated").from;
            }
            (Src::Node { node, port }, Dst::Output(j)) => {
                let h = emb.map[node];
                sink[j] = host.wire_from(Src::Node { node: h, port }).expect("validated").to;
                out_port_of.insert((h, port), j);
            }
            _ => {}
        }
    }

    // Surviving host nodes keep their order, then the rhs nodes follow.
    let mut new_idx = vec![usize::MAX; host.node_count()];
    let mut nodes = Vec::new();
    for (h, k) in host.nodes().iter().enumerate() {
        if !matched.contains(&h) {
            new_idx[h] = nodes.len();
            nodes.push(k.clone());
        }
    }
    let base = nodes.len();
    nodes.extend(rhs.nodes().iter().cloned());

    let host_src = |s: Src| match s {
        Src::Node { node, port } => Src::Node { node: new_idx[node], port },
        s => s,
    };
    let host_dst = |d: Dst| match d {
        Dst::Node { node, port } => Dst::Node { node: new_idx[node], port },
        d => d,
    };

    // Where the value entering rhs input `i` comes from. A feed that is
    // itself a pattern output loops back through the rhs.
    let resolve_src = |i: usize| -> RewriteResult<Src> {
        let mut i = i;
        let mut seen = BTreeSet::new();
        loop {
            if !seen.insert(i) { return Err(RewriteError::Cycle); }
            match feed[i] {
                Src::Node { node, port } if matched.contains(&node) => {
                    let j = out_port_of[&(node, port)];
                    match rhs.wire_into(Dst::Output(j)).expect("validated").from {
                        Src::Input(i2) => i = i2,
                        Src::Node { node, port } => return Ok(Src::Node { node: base + node, port }),
                    }
                }
                s => return Ok(host_src(s)),
            }
        }
    };

    let mut wires = Vec::new();
    for w in host.wires() {
        let touches = matches!(w.from, Src::Node { node, .. } if matched.contains(&node))
            || matches!(w.to, Dst::Node { node, .. } if matched.contains(&node));
        if !touches { wires.push(Wire { from: host_src(w.from), to: host_dst(w.to) }); }
    }
    for w in rhs.wires() {
        let to = match w.to {
            Dst::Node { node, port } => Dst::Node { node: base + node, port },
            Dst::Output(j) => match sink[j] {
                // reached from the other side of the loop
                Dst::Node { node, .. } if matched.contains(&node) => continue,
                d => host_dst(d),
            },
        };
        let from = match w.from {
            Src::Node { node, port } => Src::Node { node: base + node, port },
            Src::Input(i) => resolve_src(i)?,
        };
        wires.push(Wire { from, to });
    }
    Diagram::new(nodes, wires, host.n_inputs(), host.n_outputs()).map_err(|e| match e {
        crate::diagram::DiagramError::Malformed(m) if m.contains("cycle") => RewriteError::Cycle,
        other => other.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{
        diagram::{ eval, iso_check, parse_dsl, EvalContext, GenOp },
        rewrite::builtin_rules,
    };

    fn rule(name: &str) -> RewriteRule {
        builtin_rules().unwrap().into_iter().find(|r| r.name == name).unwrap()
    }

    fn d(s: &str) -> Diagram { parse_dsl(s, &["ghz", "w"]).unwrap() }

    #[test]
    fn matches_and_rewrites_in_context() {
        let host = d("(seq (unit w) (comult ghz) (mult w))");
        assert!(find_matches(&rule("special"), &host).unwrap().is_empty());
        let host = d("(seq (par (unit w) id) (par (comult ghz) id) (par (mult ghz) id) (mult w))");
        let ms = find_matches(&rule("special"), &host).unwrap();
        assert_eq!(ms.len(), 1);
        let after = apply(&rule("special"), &host, &ms[0]).unwrap();
        assert!(iso_check(&after, &d("(seq (par (unit w) id) (mult w))")));
        let ctx = EvalContext::default();
        assert!(eval(&host, &ctx).unwrap().approx_eq(&eval(&after, &ctx).unwrap(), Default::default()));
    }

    #[test]
    fn scalar_rules_remove_closed_pieces() {
        let host = d("(par (seq (unit w) (counit ghz)) (mult w))");
        let r = rule("scalar_one_c");
        let ms = find_matches(&r, &host).unwrap();
        let after = apply(&r, &host, &ms[0]).unwrap();
        assert!(iso_check(&after, &Diagram::gen("w", GenOp::Mult)));
    }

    #[test]
    fn frobenius_in_context() {
        let host = d("(seq (par id (comult ghz)) (par (mult ghz) id))");
        let r = rule("frobenius[ghz]");
        let ms = find_matches(&r, &host).unwrap();
        assert_eq!(ms.len(), 1);
        let after = apply(&r, &host, &ms[0]).unwrap();
        assert!(iso_check(&after, &d("(seq (mult ghz) (comult ghz))")));
    }

    #[test]
    fn non_convex_match_reports_cycle() {
        use crate::diagram::{ inp, out, Builder, NodeKind };
        // δ's second output loops back into μ through a tick
        let mut b = Builder::new(1, 1);
        let dn = b.add(NodeKind::gen("ghz", GenOp::Comult));
        let t = b.add(NodeKind::Tick);
        let m = b.add(NodeKind::gen("ghz", GenOp::Mult));
        b.wire(Src::Input(0), inp(dn, 0)).wire(out(dn, 1), inp(t, 0)).wire(out(t, 0), inp(m, 0))
            .wire(out(dn, 0), inp(m, 1)).wire(out(m, 0), Dst::Output(0));
        let host = b.finish().unwrap();
        let r = rule("frobenius[ghz]");
        let ms = find_matches(&r, &host).unwrap();
        assert_eq!(ms.len(), 1);
        assert_eq!(apply(&r, &host, &ms[0]), Err(RewriteError::Cycle));
    }

    #[test]
    fn stale_embedding_is_rejected() {
        let host = d("(seq tick tick)");
        let r = rule("tick_invol");
        let ms = find_matches(&r, &host).unwrap();
        let after = apply(&r, &host, &ms[0]).unwrap();
        assert_eq!(after, Diagram::identity(1));
        assert_eq!(apply(&r, &after, &ms[0]), Err(RewriteError::StaleEmbedding));
    }

    #[test]
    fn bare_lhs_is_not_a_pattern() {
        let r = rule("unit_l[ghz]").reversed();
        assert!(matches!(find_matches(&r, &Diagram::identity(1)), Err(RewriteError::BadPattern(..))));
    }
}
