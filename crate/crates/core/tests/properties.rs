//! Property tests: rewriting and normal forms against tensor evaluation,
//! serialization round trips and invariance of evaluation.

use ghzw::{
    diagram::{ eval, from_json, iso_check, to_json, Diagram, EvalContext, GenOp },
    random,
    rewrite::{ builtin_rules, decide_equal, normalize_single, soundness_harness, AlgebraKind, HarnessMode },
    tensor::{ compose, kron, Tensor },
};
use proptest::prelude::*;

const MAX_WIDTH: usize = 5;

/// Builds a diagram over one algebra from a list of (generator, offset)
/// steps, each placing the generator on the current outputs or in parallel.
fn build(alg: &str, start: usize, steps: &[(usize, usize)]) -> Diagram {
    let mut d = Diagram::identity(start);
    for &(op, pos) in steps {
        let g = Diagram::gen(alg, GenOp::ALL[op % 6]);
        let (a, b) = g.nodes()[0].arity();
        let w = d.n_outputs();
        let next = if a <= w && w - a + b <= MAX_WIDTH {
            let left = pos % (w - a + 1);
            d.then(&Diagram::identity(left).par(&g).par(&Diagram::identity(w - a - left))).ok()
        } else if d.n_inputs() + w + a + b <= MAX_WIDTH + 2 {
            Some(d.par(&g))
        } else {
            None
        };
        if let Some(n) = next { d = n; }
    }
    d
}

fn diagram_strategy() -> impl Strategy<Value = (bool, Diagram)> {
    (any::<bool>(), 0..3usize, prop::collection::vec((0..6usize, 0..6usize), 1..8))
        .prop_map(|(ghz, start, steps)| (ghz, build(if ghz { "ghz" } else { "w" }, start, &steps)))
}

fn kind(ghz: bool) -> AlgebraKind { if ghz { AlgebraKind::Scfa } else { AlgebraKind::Acfa } }

fn rotate(n: usize, by: usize) -> Vec<usize> { (0..n).map(|i| (i + by) % n.max(1)).collect() }

fn close(a: &Tensor, b: &Tensor) -> bool {
    a.max_abs_diff(b).map(|x| x <= 1e-9 * (1.0 + a.max_abs().max(b.max_abs()))).unwrap_or(false)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rewrites_preserve_semantics(seed in any::<u64>(), mode in 0..3usize) {
        let rules = builtin_rules().unwrap();
        let mode = [HarnessMode::Ghz, HarnessMode::W, HarnessMode::Mixed][mode];
        let rep = soundness_harness(&rules, mode, seed, 8).unwrap();
        prop_assert!(rep.max_residual < 1e-9, "{:?}", rep);
    }

    #[test]
    fn normal_form_is_sound((ghz, d) in diagram_strategy()) {
        let ctx = EvalContext::default();
        let n = normalize_single(&d, kind(ghz)).unwrap();
        let lhs = eval(&d, &ctx).unwrap();
        let rhs = eval(&n.diagram, &ctx).unwrap().scale(n.scalar);
        prop_assert!(close(&lhs, &rhs), "{:?}\n{:?}", d, n.forms);
    }

    #[test]
    fn decide_equal_matches_oracle_under_boundary_permutation(
        (ghz, d) in diagram_strategy(), by in 0..4usize,
    ) {
        let ctx = EvalContext::default();
        let outs = rotate(d.n_outputs(), by);
        let ins = rotate(d.n_inputs(), by + 1);
        let e = d.relabel_boundary(&ins, &outs).unwrap();
        let oracle = close(&eval(&d, &ctx).unwrap(), &eval(&e, &ctx).unwrap());
        prop_assert_eq!(decide_equal(&d, &e, kind(ghz)).unwrap(), oracle);
        prop_assert!(decide_equal(&d, &d, kind(ghz)).unwrap());
    }

    #[test]
    fn json_round_trip((_, d) in diagram_strategy()) {
        let back = from_json(&to_json(&d)).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn eval_is_invariant_under_renumbering((_, d) in diagram_strategy(), shift in 0..10usize) {
        let n = d.node_count();
        let perm = rotate(n, shift);
        let e = d.renumber_nodes(&perm);
        prop_assert!(iso_check(&d, &e));
        let ctx = EvalContext::default();
        prop_assert!(close(&eval(&d, &ctx).unwrap(), &eval(&e, &ctx).unwrap()));
    }

    #[test]
    fn interchange_law(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let (f1, f2) = (random::invertible(&mut rng, 0.1), random::invertible(&mut rng, 0.1));
        let (g1, g2) = (random::invertible(&mut rng, 0.1), random::invertible(&mut rng, 0.1));
        let lhs = compose(&kron(&g1, &g2).unwrap(), &kron(&f1, &f2).unwrap()).unwrap();
        let rhs = kron(&compose(&g1, &f1).unwrap(), &compose(&g2, &f2).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs));
    }
}
