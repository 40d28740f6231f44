//! Tensor semantics of diagrams by contraction in topological order.

use std::collections::BTreeMap;
use crate::{
    cfa::Cfa,
    tensor::{ apply_trailing, swap_legs, Tensor },
};
use super::{ Diagram, DiagramError, DiagramResult, Dst, GenOp, NodeKind, Src };

/// Interpretation of algebra names and the tick.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalContext {
    pub algebras: BTreeMap<String, Cfa>,
    pub tick: Tensor,
    pub dim: usize,
}

impl Default for EvalContext {
    /// The canonical pair: `ghz`, `w` and the NOT tick.
    fn default() -> Self {
        let mut algebras = BTreeMap::new();
        algebras.insert("ghz".to_string(), Cfa::ghz());
        algebras.insert("w".to_string(), Cfa::w());
        let not = Tensor::matrix2([[crate::tensor::ZERO, crate::tensor::ONE], [crate::tensor::ONE, crate::tensor::ZERO]]);
        Self { algebras, tick: not, dim: 2 }
    }
}

impl EvalContext {
    pub fn new(algebras: Vec<Cfa>, tick: Tensor) -> DiagramResult<Self> {
        let dim = tick.dim();
        if algebras.iter().any(|a| a.dim != dim) {
            return Err(DiagramError::Malformed("algebras and tick differ in dimension".into()));
        }
        let algebras = algebras.into_iter().map(|a| (a.name.clone(), a)).collect();
        Ok(Self { algebras, tick, dim })
    }

    /// Adds or replaces an algebra under its own name.
    pub fn with_algebra(mut self, a: Cfa) -> Self {
        self.algebras.insert(a.name.clone(), a);
        self
    }

    pub fn with_tick(mut self, tick: Tensor) -> Self {
        self.tick = tick;
        self
    }

    pub fn names(&self) -> Vec<&str> { self.algebras.keys().map(String::as_str).collect() }

    fn node_tensor(&self, k: &NodeKind) -> DiagramResult<Tensor> {
        Ok(match k {
            NodeKind::Gen { alg, op } => {
                let a = self.algebras.get(alg).ok_or_else(|| DiagramError::UnknownAlgebra(alg.clone()))?;
                match op {
                    GenOp::Mult => a.mult.clone(),
                    GenOp::Comult => a.comult.clone(),
                    GenOp::Unit => a.unit.clone(),
                    GenOp::Counit => a.counit.clone(),
                    GenOp::Cap => a.cap(),
                    GenOp::Cup => a.cup(),
                }
            }
            NodeKind::Tick => self.tick.clone(),
            NodeKind::State { name, arity, vector } => {
                let v = vector.clone().ok_or_else(|| DiagramError::Unbound(name.clone()))?;
                Tensor::new(0, *arity, self.dim, v)?
            }
            NodeKind::Effect { name, arity, vector } => {
                let v = vector.clone().ok_or_else(|| DiagramError::Unbound(name.clone()))?;
                Tensor::new(*arity, 0, self.dim, v)?
            }
        })
    }
}

/// Evaluates a diagram to a `d^inputs -> d^outputs` tensor.
///
/// The running tensor maps the boundary inputs to the currently open wires;
/// each node pulls its input wires to the end of the open list and replaces
/// them with its outputs.
pub fn eval(d: &Diagram, ctx: &EvalContext) -> DiagramResult<Tensor> {
    let dim = ctx.dim;
    let mut t = Tensor::identity(d.n_inputs(), dim);
    let mut open: Vec<Src> = (0..d.n_inputs()).map(Src::Input).collect();
    let order = d.topo_order().ok_or_else(|| DiagramError::Malformed("cycle".into()))?;
    for n in order {
        let kind = &d.nodes()[n];
        let f = ctx.node_tensor(kind)?;
        let (a, _) = kind.arity();
        let feeds: Vec<Src> = (0..a)
            .map(|p| d.wire_into(Dst::Node { node: n, port: p }).expect("validated").from)
            .collect();
        let keep: Vec<usize> = (0..open.len()).filter(|i| !feeds.contains(&open[*i])).collect();
        let mut perm = keep.clone();
        perm.extend(feeds.iter().map(|s| open.iter().position(|x| x == s).expect("open wire")));
        let moved = swap_legs(&t, &(0..t.in_arity()).collect::<Vec<_>>(), &perm)?;
        t = apply_trailing(&f, &moved)?;
        let mut next: Vec<Src> = keep.iter().map(|&i| open[i]).collect();
        next.extend((0..kind.arity().1).map(|p| Src::Node { node: n, port: p }));
        open = next;
    }
    let perm: Vec<usize> = (0..d.n_outputs())
        .map(|j| {
            let src = d.wire_into(Dst::Output(j)).expect("validated").from;
            open.iter().position(|x| *x == src).expect("open wire")
        })
        .collect();
    Ok(swap_legs(&t, &(0..t.in_arity()).collect::<Vec<_>>(), &perm)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{ cfa::spider, tensor::{ r, Tolerance, ONE } };

    fn ctx() -> EvalContext { EvalContext::default() }
    fn g(op: GenOp) -> Diagram { Diagram::gen("ghz", op) }
    fn w(op: GenOp) -> Diagram { Diagram::gen("w", op) }

    #[test]
    fn generators_and_wiring() {
        assert_eq!(eval(&g(GenOp::Mult), &ctx()).unwrap(), Cfa::ghz().mult);
        assert_eq!(eval(&Diagram::identity(2), &ctx()).unwrap(), Tensor::identity(2, 2));
        let sw = eval(&Diagram::swap(), &ctx()).unwrap();
        let want = swap_legs(&Tensor::identity(2, 2), &[0, 1], &[1, 0]).unwrap();
        assert_eq!(sw, want);
        let cup = w(GenOp::Unit).then(&w(GenOp::Comult)).unwrap();
        assert_eq!(eval(&cup, &ctx()).unwrap(), Cfa::w().cup());
    }

    #[test]
    fn closed_diagrams() {
        let circle = g(GenOp::Cup).then(&g(GenOp::Cap)).unwrap();
        assert_eq!(eval(&circle, &ctx()).unwrap().scalar_value(), Some(r(2.)));
        let wc = w(GenOp::Cup).then(&w(GenOp::Cap)).unwrap();
        assert_eq!(eval(&wc, &ctx()).unwrap().scalar_value(), Some(r(2.)));
        let ue = g(GenOp::Unit).then(&g(GenOp::Counit)).unwrap();
        assert_eq!(eval(&ue, &ctx()).unwrap().scalar_value(), Some(r(2.)));
    }

    #[test]
    fn spider_tree_matches_spider() {
        let tree = Diagram::seq_all(&[
            w(GenOp::Unit),
            w(GenOp::Comult),
            w(GenOp::Comult).par(&Diagram::identity(1)),
        ]).unwrap();
        let t = eval(&tree, &ctx()).unwrap();
        assert!(t.approx_eq(&spider(&Cfa::w(), 0, 3), Tolerance::default()));
    }

    #[test]
    fn variables() {
        let s = Diagram::node(NodeKind::State { name: "x".into(), arity: 1, vector: Some(vec![ONE, r(2.)]) });
        assert_eq!(eval(&s, &ctx()).unwrap().entries(), &[ONE, r(2.)]);
        let u = Diagram::node(NodeKind::State { name: "y".into(), arity: 1, vector: None });
        assert_eq!(eval(&u, &ctx()), Err(DiagramError::Unbound("y".into())));
        let bad = Diagram::gen("zx", GenOp::Mult);
        assert!(matches!(eval(&bad, &ctx()), Err(DiagramError::UnknownAlgebra(_))));
    }

    #[test]
    fn cap_through_swap_is_symmetric() {
        let d = Diagram::swap().then(&w(GenOp::Cap)).unwrap();
        assert_eq!(eval(&d, &ctx()).unwrap(), Cfa::w().cap());
    }
}
