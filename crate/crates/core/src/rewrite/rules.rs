//! The built-in rule catalog.

use num_complex::Complex64 as C64;
use serde_json::json;
use crate::{
    diagram::{ self, Diagram, EvalContext, GenOp },
    tensor::{ r, ONE },
};
use super::{ RewriteError, RewriteResult };

/// A rewrite `lhs => rhs` with `eval(lhs) = scalar · eval(rhs)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RewriteRule {
    pub name: String,
    pub lhs: Diagram,
    pub rhs: Diagram,
    pub scalar: C64,
    pub bidirectional: bool,
}

impl RewriteRule {
    pub fn new(name: &str, lhs: Diagram, rhs: Diagram, scalar: C64, bidirectional: bool) -> Self {
        Self { name: name.into(), lhs, rhs, scalar, bidirectional }
    }

    /// The rule read right to left.
    pub fn reversed(&self) -> Self {
        Self {
            name: format!("{}^-1", self.name),
            lhs: self.rhs.clone(),
            rhs: self.lhs.clone(),
            scalar: ONE / self.scalar,
            bidirectional: self.bidirectional,
        }
    }

    /// Whether applying the rule shrinks a diagram.
    pub fn is_reducing(&self) -> bool { self.rhs.node_count() < self.lhs.node_count() }

    /// Relative residual of `eval(lhs) = scalar · eval(rhs)`.
    pub fn semantic_residual(&self, ctx: &EvalContext) -> RewriteResult<f64> {
        let l = diagram::eval(&self.lhs, ctx)?;
        let rr = diagram::eval(&self.rhs, ctx)?.scale(self.scalar);
        Ok(l.rel_diff(&rr)?)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let parse = |d: &Diagram| serde_json::from_str::<serde_json::Value>(&diagram::to_json(d)).expect("valid json");
        json!({
            "name": self.name,
            "lhs": parse(&self.lhs),
            "rhs": parse(&self.rhs),
            "scalar": [self.scalar.re, self.scalar.im],
            "bidirectional": self.bidirectional,
        })
    }
}

fn g(alg: &str, op: GenOp) -> Diagram { Diagram::gen(alg, op) }
fn id(n: usize) -> Diagram { Diagram::identity(n) }
fn seq(ds: &[Diagram]) -> Diagram { Diagram::seq_all(ds).expect("catalog arities") }

/// `μ δ η`, the lolli as a diagram.
pub fn lolli_diagram(alg: &str) -> Diagram {
    seq(&[g(alg, GenOp::Unit), g(alg, GenOp::Comult), g(alg, GenOp::Mult)])
}

/// `ε μ δ`, the cololli as a diagram.
pub fn cololli_diagram(alg: &str) -> Diagram {
    seq(&[g(alg, GenOp::Comult), g(alg, GenOp::Mult), g(alg, GenOp::Counit)])
}

/// Frobenius-algebra rules for one algebra name.
pub fn algebra_rules(a: &str) -> Vec<RewriteRule> {
    use GenOp::*;
    let one = ONE;
    let nm = |s: &str| format!("{s}[{a}]");
    vec![
        RewriteRule::new(&nm("assoc"), seq(&[g(a, Mult).par(&id(1)), g(a, Mult)]),
            seq(&[id(1).par(&g(a, Mult)), g(a, Mult)]), one, true),
        RewriteRule::new(&nm("coassoc"), seq(&[g(a, Comult), g(a, Comult).par(&id(1))]),
            seq(&[g(a, Comult), id(1).par(&g(a, Comult))]), one, true),
        RewriteRule::new(&nm("unit_l"), seq(&[g(a, Unit).par(&id(1)), g(a, Mult)]), id(1), one, false),
        RewriteRule::new(&nm("unit_r"), seq(&[id(1).par(&g(a, Unit)), g(a, Mult)]), id(1), one, false),
        RewriteRule::new(&nm("counit_l"), seq(&[g(a, Comult), g(a, Counit).par(&id(1))]), id(1), one, false),
        RewriteRule::new(&nm("counit_r"), seq(&[g(a, Comult), id(1).par(&g(a, Counit))]), id(1), one, false),
        RewriteRule::new(&nm("frobenius"),
            seq(&[id(1).par(&g(a, Comult)), g(a, Mult).par(&id(1))]),
            seq(&[g(a, Mult), g(a, Comult)]), one, true),
        RewriteRule::new(&nm("frobenius_r"),
            seq(&[g(a, Comult).par(&id(1)), id(1).par(&g(a, Mult))]),
            seq(&[g(a, Mult), g(a, Comult)]), one, true),
        RewriteRule::new(&nm("comm"), seq(&[Diagram::swap(), g(a, Mult)]), g(a, Mult), one, true),
        RewriteRule::new(&nm("cocomm"), seq(&[g(a, Comult), Diagram::swap()]), g(a, Comult), one, true),
    ]
}

/// The catalog for the canonical pair (`ghz` special, `w` anti-special,
/// the tick), each rule checked against tensor semantics.
pub fn builtin_rules() -> RewriteResult<Vec<RewriteRule>> {
    use GenOp::*;
    let (s, a) = ("ghz", "w");
    let mut rules = algebra_rules(s);
    rules.extend(algebra_rules(a));
    let tick = Diagram::tick;
    let ticked_unit = || seq(&[g(a, Unit), tick()]);
    rules.extend([
        RewriteRule::new("special", seq(&[g(s, Comult), g(s, Mult)]), id(1), ONE, false),
        // μδ = lolli ∘ cololli / circle on the anti-special side
        RewriteRule::new("antispecial", seq(&[g(a, Comult), g(a, Mult)]),
            seq(&[cololli_diagram(a), lolli_diagram(a)]), r(0.5), false),
        RewriteRule::new("tick_invol", seq(&[tick(), tick()]), id(1), ONE, false),
        RewriteRule::new("tick_counit", seq(&[tick(), g(s, Counit)]), g(s, Counit), ONE, false),
        RewriteRule::new("copy_unit", seq(&[g(a, Unit), g(s, Comult)]),
            g(a, Unit).par(&g(a, Unit)), ONE, false),
        RewriteRule::new("copy_lolli", seq(&[lolli_diagram(a), g(s, Comult)]),
            lolli_diagram(a).par(&lolli_diagram(a)), r(0.5), false),
        RewriteRule::new("tick_unit_copy", seq(&[ticked_unit(), g(a, Comult)]),
            ticked_unit().par(&ticked_unit()), ONE, false),
        RewriteRule::new("scalar_one_a", seq(&[ticked_unit(), g(a, Counit)]), Diagram::empty(), ONE, false),
        RewriteRule::new("scalar_one_b", seq(&[ticked_unit(), g(s, Counit)]), Diagram::empty(), ONE, false),
        RewriteRule::new("scalar_one_c", seq(&[g(a, Unit), g(s, Counit)]), Diagram::empty(), ONE, false),
    ]);
    let ctx = EvalContext::default();
    for rule in &rules {
        let res = rule.semantic_residual(&ctx)?;
        if res > 1e-12 { return Err(RewriteError::UnsoundRule(rule.name.clone(), res)); }
    }
    Ok(rules)
}

/// The whole catalog as a JSON array.
pub fn catalog_json(rules: &[RewriteRule]) -> serde_json::Value {
    serde_json::Value::Array(rules.iter().map(RewriteRule::to_json).collect())
}
