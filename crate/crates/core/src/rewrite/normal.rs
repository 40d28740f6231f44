//! Normal forms of single-algebra diagrams, computed from each connected
//! component's boundary and loop count rather than by rewriting to a
//! fixpoint.
//!
//! Closed components become scalars using qubit values: the circle is 2 for
//! both canonical algebras and `ε η` vanishes for an anti-special algebra.

use num_complex::Complex64 as C64;
use serde::Serialize;
use crate::{
    diagram::{ Diagram, GenOp, NodeKind },
    tensor::{ r, ONE, ZERO },
};
use super::{ cololli_diagram, lolli_diagram, RewriteError, RewriteResult, RewriteRule, apply, find_matches };

/// Value of the closed circle on a qubit.
const CIRCLE: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgebraKind { Scfa, Acfa, Cfa }

impl AlgebraKind {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "scfa" => Some(Self::Scfa),
            "acfa" => Some(Self::Acfa),
            "cfa" => Some(Self::Cfa),
            _ => None,
        }
    }
}

/// Normal form of one connected component with `n` inputs and `m`
/// outputs.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum NormalForm {
    Spider { n: usize, m: usize },
    AcfaZero { n: usize, m: usize },
    /// `circle^-inverse_dim_power` times `lolli` on each output and
    /// `cololli` on each input.
    AcfaLoopProduct { k_lollis_out: usize, k_cololli_in: usize, inverse_dim_power: i32 },
    Scalar { value: C64 },
    /// `S^1_m (μδ)^loops S^n_1`.
    Descriptor { n: usize, m: usize, loops: usize },
}

/// Normal forms per component (with the boundary slots each owns), the
/// overall scalar and a canonical diagram with `eval(d) = scalar · eval(diagram)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalized {
    pub forms: Vec<(Vec<usize>, Vec<usize>, NormalForm)>,
    pub scalar: C64,
    pub diagram: Diagram,
}

fn single_algebra(d: &Diagram) -> RewriteResult<String> {
    let mut alg: Option<&str> = None;
    for k in d.nodes() {
        match k {
            NodeKind::Gen { alg: a, .. } => match alg {
                None => alg = Some(a),
                Some(b) if b == a => {}
                Some(b) => return Err(RewriteError::NotSingleAlgebra(format!("both '{b}' and '{a}'"))),
            },
            NodeKind::Tick => return Err(RewriteError::NotSingleAlgebra("contains a tick".into())),
            _ => return Err(RewriteError::NotSingleAlgebra("contains a variable".into())),
        }
    }
    Ok(alg.unwrap_or("ghz").to_string())
}

fn component_form(kind: AlgebraKind, n: usize, m: usize, loops: usize) -> NormalForm {
    let closed = n == 0 && m == 0;
    match kind {
        AlgebraKind::Scfa if closed => NormalForm::Scalar { value: r(CIRCLE) },
        AlgebraKind::Scfa => NormalForm::Spider { n, m },
        AlgebraKind::Cfa => NormalForm::Descriptor { n, m, loops },
        AlgebraKind::Acfa => match loops {
            0 if closed => NormalForm::Scalar { value: ZERO },
            0 => NormalForm::Spider { n, m },
            1 if closed => NormalForm::Scalar { value: r(CIRCLE) },
            1 => NormalForm::AcfaLoopProduct {
                k_lollis_out: m,
                k_cololli_in: n,
                inverse_dim_power: (n + m) as i32 - 1,
            },
            _ if closed => NormalForm::Scalar { value: ZERO },
            _ => NormalForm::AcfaZero { n, m },
        },
    }
}

fn g(alg: &str, op: GenOp) -> Diagram { Diagram::gen(alg, op) }

/// Left comb of multiplications merging `n` wires (a unit when `n = 0`).
fn merge(alg: &str, n: usize) -> Diagram {
    if n == 0 { return g(alg, GenOp::Unit); }
    let mut d = Diagram::identity(n);
    for k in (2..=n).rev() {
        let layer = g(alg, GenOp::Mult).par(&Diagram::identity(k - 2));
        d = d.then(&layer).expect("arity");
    }
    d
}

/// Left comb of comultiplications splitting one wire into `m`.
fn split(alg: &str, m: usize) -> Diagram {
    if m == 0 { return g(alg, GenOp::Counit); }
    let mut d = Diagram::identity(1);
    for k in 2..=m {
        let layer = g(alg, GenOp::Comult).par(&Diagram::identity(k - 2));
        d = d.then(&layer).expect("arity");
    }
    d
}

/// The spider `S^n_m` as a tree of generators.
pub(crate) fn spider_diagram(alg: &str, n: usize, m: usize) -> Diagram {
    merge(alg, n).then(&split(alg, m)).expect("arity")
}

fn form_diagram(alg: &str, f: &NormalForm) -> (Diagram, C64) {
    match *f {
        NormalForm::Spider { n, m } => (spider_diagram(alg, n, m), ONE),
        NormalForm::AcfaZero { n, m } => (spider_diagram(alg, n, m), ZERO),
        NormalForm::AcfaLoopProduct { k_lollis_out, k_cololli_in, inverse_dim_power } => {
            let co = Diagram::par_all(&vec![cololli_diagram(alg); k_cololli_in]);
            let lo = Diagram::par_all(&vec![lolli_diagram(alg); k_lollis_out]);
            (co.par(&lo), r(CIRCLE.powi(-inverse_dim_power)))
        }
        NormalForm::Scalar { value } => (Diagram::empty(), value),
        NormalForm::Descriptor { n, m, loops } => {
            let handle = g(alg, GenOp::Comult).then(&g(alg, GenOp::Mult)).expect("arity");
            let mut d = merge(alg, n);
            for _ in 0..loops { d = d.then(&handle).expect("arity"); }
            (d.then(&split(alg, m)).expect("arity"), ONE)
        }
    }
}

/// Normal form of a diagram whose generators all come from one algebra.
pub fn normalize_single(d: &Diagram, kind: AlgebraKind) -> RewriteResult<Normalized> {
    let alg = single_algebra(d)?;
    let loops = d.loop_count();
    let mut forms = Vec::new();
    let mut scalar = ONE;
    let mut parts = Vec::new();
    let (mut ins, mut outs) = (Vec::new(), Vec::new());
    for (c, l) in d.components().into_iter().zip(loops) {
        let f = component_form(kind, c.inputs.len(), c.outputs.len(), l);
        let (cd, s) = form_diagram(&alg, &f);
        scalar *= s;
        parts.push(cd);
        ins.extend(c.inputs.iter().copied());
        outs.extend(c.outputs.iter().copied());
        forms.push((c.inputs, c.outputs, f));
    }
    let diagram = Diagram::par_all(&parts).relabel_boundary(&ins, &outs)?;
    Ok(Normalized { forms, scalar, diagram })
}

/// Boundary-aware canonical key; equal keys mean equal tensors.
#[derive(Clone, Debug, PartialEq)]
pub enum NormalKey {
    Zero { inputs: usize, outputs: usize },
    Value { inputs: usize, outputs: usize, parts: Vec<Part>, scalar: C64 },
}

/// An open factor of a normal form, over parent boundary slots.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Part {
    Spider { ins: Vec<usize>, outs: Vec<usize> },
    Lolli(usize),
    Cololli(usize),
    Descriptor { ins: Vec<usize>, outs: Vec<usize>, loops: usize },
}

pub fn normal_key(d: &Diagram, kind: AlgebraKind) -> RewriteResult<NormalKey> {
    let nf = normalize_single(d, kind)?;
    let (inputs, outputs) = (d.n_inputs(), d.n_outputs());
    if nf.scalar == ZERO { return Ok(NormalKey::Zero { inputs, outputs }); }
    let mut parts = Vec::new();
    for (ins, outs, f) in nf.forms {
        match f {
            NormalForm::Spider { .. } => parts.push(Part::Spider { ins, outs }),
            NormalForm::AcfaLoopProduct { .. } => {
                parts.extend(ins.into_iter().map(Part::Cololli));
                parts.extend(outs.into_iter().map(Part::Lolli));
            }
            NormalForm::Descriptor { loops, .. } => parts.push(Part::Descriptor { ins, outs, loops }),
            NormalForm::Scalar { .. } | NormalForm::AcfaZero { .. } => {}
        }
    }
    parts.sort();
    Ok(NormalKey::Value { inputs, outputs, parts, scalar: nf.scalar })
}

/// Equality of two single-algebra diagrams by their normal forms.
pub fn decide_equal(d1: &Diagram, d2: &Diagram, kind: AlgebraKind) -> RewriteResult<bool> {
    let (a1, a2) = (single_algebra(d1)?, single_algebra(d2)?);
    if d1.node_count() > 0 && d2.node_count() > 0 && a1 != a2 {
        return Err(RewriteError::NotSingleAlgebra(format!("'{a1}' against '{a2}'")));
    }
    let (k1, k2) = (normal_key(d1, kind)?, normal_key(d2, kind)?);
    Ok(match (k1, k2) {
        (NormalKey::Value { inputs: i1, outputs: o1, parts: p1, scalar: s1 },
         NormalKey::Value { inputs: i2, outputs: o2, parts: p2, scalar: s2 }) => {
            i1 == i2 && o1 == o2 && p1 == p2 && (s1 - s2).norm() <= 1e-12 * s1.norm().max(1.0)
        }
        (k1, k2) => k1 == k2,
    })
}

/// Result of greedy normalization: `eval(input) = scalar · eval(diagram)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedResult {
    pub diagram: Diagram,
    pub scalar: C64,
    pub steps: Vec<String>,
    pub budget_exhausted: bool,
}

/// Applies size-decreasing rules, largest reduction first, until none
/// applies or `budget` steps have been taken.
pub fn normalize_mixed(d: &Diagram, rules: &[RewriteRule], budget: usize) -> RewriteResult<MixedResult> {
    let mut reducing: Vec<&RewriteRule> = rules.iter().filter(|r| r.is_reducing()).collect();
    reducing.sort_by_key(|r| std::cmp::Reverse(r.lhs.node_count() - r.rhs.node_count()));
    let mut cur = d.clone();
    let mut scalar = ONE;
    let mut steps = Vec::new();
    'outer: while steps.len() < budget {
        for rule in &reducing {
            for m in find_matches(rule, &cur)? {
                match apply(rule, &cur, &m) {
                    Ok(next) => {
                        cur = next;
                        scalar *= rule.scalar;
                        steps.push(rule.name.clone());
                        continue 'outer;
                    }
                    Err(RewriteError::Cycle) => continue,
                    Err(e) => return Err(e),
                }
            }
        }
        return Ok(MixedResult { diagram: cur, scalar, steps, budget_exhausted: false });
    }
    Ok(MixedResult { diagram: cur, scalar, steps, budget_exhausted: true })
}
