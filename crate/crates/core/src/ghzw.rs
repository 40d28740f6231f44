//! Interacting GHZ/W pairs: the tick, pair checks, partner construction, the
//! dot-transpose, the quantum multiplexor and PLDU factorization of qubit
//! maps.

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;
use crate::{
    cfa::{ self, Cfa, CfaError },
    diagram::{ self, inp, out, Builder, Diagram, DiagramError, Dst, EvalContext, GenOp, NodeKind, Src },
    linalg,
    slocc::{ self, SloccError },
    tensor::{ compose, compose_all, kron, kron_all, proportionality_residual, Tensor, TensorError, Tolerance, ONE, ZERO },
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GhzwError {
    #[error("tensor error: {0}")]
    Tensor(#[from] TensorError),

    #[error("algebra error: {0}")]
    Cfa(#[from] CfaError),

    #[error("diagram error: {0}")]
    Diagram(#[from] DiagramError),

    #[error("classification error: {0}")]
    Slocc(#[from] SloccError),

    #[error("algebras act on dimensions {0} and {1}")]
    DimMismatch(usize, usize),

    #[error("the unit and lolli of the anti-special algebra are dependent")]
    Dependent,

    #[error("<1...1|{0}> vanishes; re-represent the state within its SLOCC class first")]
    Overlap(&'static str),

    #[error("a multiplexor needs at least one wire per branch")]
    TooFewWires,

    #[error("states must be qubit states on the same number of wires")]
    Shape,
}
pub type GhzwResult<T> = Result<T, GhzwError>;

/// A special algebra `○`, an anti-special algebra `●` and the tick relating
/// them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GhzwPair {
    pub scfa: Cfa,
    pub acfa: Cfa,
    pub tick: Tensor,
}

impl GhzwPair {
    /// Pair with the tick built from the two algebras.
    pub fn new(scfa: Cfa, acfa: Cfa) -> GhzwResult<Self> {
        let tick = make_tick(&scfa, &acfa)?;
        Ok(Self { scfa, acfa, tick })
    }

    /// `(𝒢, 𝒲)` with the NOT tick.
    pub fn canonical() -> Self { Self::new(Cfa::ghz(), Cfa::w()).expect("canonical pair") }

    /// Simultaneous change of basis.
    pub fn transport(&self, l: &Tensor) -> GhzwResult<Self> {
        let li = l.inverse()?;
        Ok(Self {
            scfa: self.scfa.transport(l)?,
            acfa: self.acfa.transport(l)?,
            tick: compose_all(&[l, &self.tick, &li])?,
        })
    }

    /// Evaluation context binding `ghz` to `○`, `w` to `●` and the tick.
    pub fn context(&self) -> EvalContext {
        EvalContext::default()
            .with_algebra(self.scfa.clone().renamed("ghz"))
            .with_algebra(self.acfa.clone().renamed("w"))
            .with_tick(self.tick.clone())
    }
}

/// `tick = (cap_● ⊗ 1)(1 ⊗ cup_○)`.
pub fn make_tick(scfa: &Cfa, acfa: &Cfa) -> GhzwResult<Tensor> {
    if scfa.dim != acfa.dim { return Err(GhzwError::DimMismatch(scfa.dim, acfa.dim)); }
    let d = scfa.dim;
    let one = Tensor::identity(1, d);
    Ok(compose(&kron(&acfa.cap(), &one)?, &kron(&one, &scfa.cup())?)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairCheck {
    pub name: String,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairReport {
    pub checks: Vec<PairCheck>,
    pub pass: bool,
}

impl PairReport {
    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }

    pub fn max_residual(&self) -> f64 { self.checks.iter().map(|c| c.residual).fold(0.0, f64::max) }
}

/// Text-level consequences of the pair conditions:
///
/// - (a) the tick is an involution
/// - (b) `ε_○ ∘ tick = ε_○`
/// - (c) `δ_○` copies `η_●`
/// - (d) `circle · δ_○(lolli_●) = lolli_● ⊗ lolli_●`
/// - (e) `δ_●` copies `tick η_●`
/// - (f) `ε_● tick η_●`, `ε_○ tick η_●` and `ε_○ η_●` all equal one
/// - (g) `η_●` and `lolli_●` are independent
pub fn pair_check(p: &GhzwPair, tol: Tolerance) -> GhzwResult<PairReport> {
    let (s, a, t) = (&p.scfa, &p.acfa, &p.tick);
    if s.dim != a.dim || t.dim() != s.dim { return Err(GhzwError::DimMismatch(s.dim, a.dim)); }
    let d = s.dim;
    let mut checks = Vec::new();
    let mut push = |name: &str, residual: f64| {
        checks.push(PairCheck { name: name.into(), residual, pass: residual <= tol.bound(1.0) });
    };
    let rel = |x: &Tensor, y: &Tensor| x.rel_diff(y).unwrap_or(f64::INFINITY);

    push("a:tick_involution", rel(&compose(t, t)?, &Tensor::identity(1, d)));
    push("b:tick_counit", rel(&compose(&s.counit, t)?, &s.counit));
    push("c:copy_unit", rel(&compose(&s.comult, &a.unit)?, &kron(&a.unit, &a.unit)?));
    let lolli = a.lolli();
    let lhs = compose(&s.comult, &lolli)?.scale(a.circle());
    push("d:copy_lolli", rel(&lhs, &kron(&lolli, &lolli)?));
    let te = compose(t, &a.unit)?;
    push("e:tick_unit_copy", rel(&compose(&a.comult, &te)?, &kron(&te, &te)?));
    let one = Tensor::scalar(ONE);
    let scalars = [
        compose(&a.counit, &te)?,
        compose(&s.counit, &te)?,
        compose(&s.counit, &a.unit)?,
    ];
    let worst = scalars.iter().map(|x| rel(x, &one)).fold(0.0, f64::max);
    push("f:scalars", worst);
    let indep = if d == 2 {
        let m = linalg::from_cols(
            [a.unit.entries()[0], a.unit.entries()[1]],
            [lolli.entries()[0], lolli.entries()[1]],
        );
        let scale = a.unit.norm() * lolli.norm();
        // residual is the normalized |det|, inverted so small means pass
        let det = linalg::det2(&m).norm() / scale.max(f64::MIN_POSITIVE);
        if det > tol.bound(1.0) { 0.0 } else { 1.0 - det }
    } else {
        1.0
    };
    push("g:unit_lolli_independent", indep);
    let pass = checks.iter().all(|c| c.pass);
    Ok(PairReport { checks, pass })
}

/// The anti-special partner of a special algebra, and its alternative with
/// the copiable points swapped (the two differ by conjugation with the tick).
pub fn partner_from_scfa(scfa: &Cfa, tol: Tolerance) -> GhzwResult<(Cfa, Cfa)> {
    let [e0, e1] = cfa::copiable_basis(scfa, tol)?;
    let l = Tensor::matrix2(linalg::from_cols(vec2(&e0), vec2(&e1)));
    let lx = Tensor::matrix2(linalg::from_cols(vec2(&e1), vec2(&e0)));
    let name = format!("{}_partner", scfa.name);
    Ok((
        Cfa::w().transport(&l)?.renamed(&name),
        Cfa::w().transport(&lx)?.renamed(&format!("{name}_alt")),
    ))
}

/// The special partner of an anti-special algebra: `δ_○` copies `η_●` and
/// `lolli_● / circle`.
pub fn partner_from_acfa(acfa: &Cfa, tol: Tolerance) -> GhzwResult<Cfa> {
    if acfa.dim != 2 { return Err(CfaError::NeedQubit(acfa.dim).into()); }
    let dim = acfa.circle();
    let p = acfa.lolli().scale(ONE / dim);
    let m = linalg::from_cols(vec2(&p), vec2(&acfa.unit));
    let scale = p.norm() * acfa.unit.norm();
    if linalg::det2(&m).norm() <= tol.bound(scale) { return Err(GhzwError::Dependent); }
    Ok(Cfa::ghz().transport(&Tensor::matrix2(m))?.renamed(&format!("{}_partner", acfa.name)))
}

fn vec2(t: &Tensor) -> [C64; 2] { [t.entries()[0], t.entries()[1]] }

/// Transpose of `f: n -> m` with respect to the cap and cup of `c`:
/// `cup^{⊗n}`-bent inputs and `cap^{⊗m}`-bent outputs.
pub fn dot_transpose(c: &Cfa, f: &Tensor) -> GhzwResult<Tensor> {
    let d = c.dim;
    if f.dim() != d { return Err(GhzwError::DimMismatch(f.dim(), d)); }
    let u = c.cup().reinterpret(1, 1)?;
    let k = c.cap().reinterpret(1, 1)?;
    let (n, m) = (f.in_arity(), f.out_arity());
    let un = kron_all(std::iter::repeat_n(&u, n), d)?;
    let km = kron_all(std::iter::repeat_n(&k, m), d)?;
    Ok(compose_all(&[&un, &f.transpose(), &km])?)
}

/// The multiplexor on `k` wires per branch, inputs ordered `Ψ` then `Φ`.
///
/// Every input wire is split by `δ_●`. The first legs (ticked on the `Ψ`
/// side) meet in one `μ_○` chain that becomes the control output after a
/// tick; wire `j`'s second legs meet, ticked, in `μ_●` and leave through a
/// tick as data output `j`.
pub fn qmux_diagram(k: usize) -> GhzwResult<Diagram> {
    if k == 0 { return Err(GhzwError::TooFewWires); }
    let mut b = Builder::new(2 * k, k + 1);
    let w = |op| NodeKind::gen("w", op);
    let mut control_legs: Vec<Src> = Vec::new();
    let mut flags_phi: Vec<Src> = Vec::new();
    for j in 0..k {
        let sp = b.add(w(GenOp::Comult));
        let sf = b.add(w(GenOp::Comult));
        b.wire(Src::Input(j), inp(sp, 0));
        b.wire(Src::Input(k + j), inp(sf, 0));
        let ta = b.add(NodeKind::Tick);
        b.wire(out(sp, 0), inp(ta, 0));
        control_legs.push(out(ta, 0));
        flags_phi.push(out(sf, 0));
        let tb = b.add(NodeKind::Tick);
        let te = b.add(NodeKind::Tick);
        b.wire(out(sp, 1), inp(tb, 0));
        b.wire(out(sf, 1), inp(te, 0));
        let m = b.add(w(GenOp::Mult));
        b.wire(out(tb, 0), inp(m, 0));
        b.wire(out(te, 0), inp(m, 1));
        let to = b.add(NodeKind::Tick);
        b.wire(out(m, 0), inp(to, 0));
        b.wire(out(to, 0), Dst::Output(1 + j));
    }
    control_legs.extend(flags_phi);
    let mut acc = control_legs[0];
    for leg in &control_legs[1..] {
        let m = b.add(NodeKind::gen("ghz", GenOp::Mult));
        b.wire(acc, inp(m, 0));
        b.wire(*leg, inp(m, 1));
        acc = out(m, 0);
    }
    let tc = b.add(NodeKind::Tick);
    b.wire(acc, inp(tc, 0));
    b.wire(out(tc, 0), Dst::Output(0));
    Ok(b.finish()?)
}

/// `⟨1…1|Φ⟩ |0⟩Ψ + ⟨1…1|Ψ⟩ |1⟩Φ`.
pub fn qmux_target(psi: &Tensor, phi: &Tensor) -> GhzwResult<Tensor> {
    let n = qmux_shape(psi, phi)?;
    let last = (1 << n) - 1;
    let (op, of) = (psi.entries()[last], phi.entries()[last]);
    Ok(kron(&Tensor::ket(&[0]), psi)?.scale(of).add(&kron(&Tensor::ket(&[1]), phi)?.scale(op))?)
}

fn qmux_shape(psi: &Tensor, phi: &Tensor) -> GhzwResult<usize> {
    let ok = |t: &Tensor| t.in_arity() == 0 && t.dim() == 2 && t.out_arity() > 0;
    if !ok(psi) || !ok(phi) || psi.out_arity() != phi.out_arity() { return Err(GhzwError::Shape); }
    Ok(psi.out_arity())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QmuxCertificate {
    pub output: Tensor,
    pub target: Tensor,
    /// Local maps `L_k` with `(⊗ L_k) target ∝ output`.
    pub local_maps: Vec<Tensor>,
    pub residual: f64,
    pub pass: bool,
}

/// Evaluates the multiplexor on `Ψ ⊗ Φ` over the canonical pair and certifies
/// SLOCC equivalence with the target superposition.
pub fn qmux_check(psi: &Tensor, phi: &Tensor, seed: u64, tol: Tolerance) -> GhzwResult<QmuxCertificate> {
    let k = qmux_shape(psi, phi)?;
    let last = (1 << k) - 1;
    let scale = |t: &Tensor| t.norm().max(f64::MIN_POSITIVE);
    if psi.entries()[last].norm() <= tol.bound(scale(psi)) { return Err(GhzwError::Overlap("Psi")); }
    if phi.entries()[last].norm() <= tol.bound(scale(phi)) { return Err(GhzwError::Overlap("Phi")); }
    let var = |name: &str, t: &Tensor| Diagram::node(NodeKind::State {
        name: name.into(), arity: k, vector: Some(t.entries().to_vec()),
    });
    let d = var("psi", psi).par(&var("phi", phi)).then(&qmux_diagram(k)?)?;
    let output = diagram::eval(&d, &EvalContext::default())?;
    let target = qmux_target(psi, phi)?;
    let found = slocc::local_equivalence(&output, &target, seed, tol)?;
    let (local_maps, residual) = match found {
        Some(maps) => {
            let ms: Vec<linalg::M2> = maps.iter().map(|m| m.as_matrix2().unwrap()).collect();
            let moved = slocc::apply_local(&ms, &target)?;
            (maps, proportionality_residual(&moved, &output))
        }
        None => (Vec::new(), f64::INFINITY),
    };
    let pass = !local_maps.is_empty();
    Ok(QmuxCertificate { output, target, local_maps, residual, pass })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Perm { Identity, Not }

impl Perm {
    pub fn matrix(self) -> linalg::M2 {
        match self {
            Self::Identity => [[ONE, ZERO], [ZERO, ONE]],
            Self::Not => [[ZERO, ONE], [ONE, ZERO]],
        }
    }
}

/// `A = P L D U Q` with unit-triangular `L`, `U` and diagonal `D`. `Q` is the
/// identity unless the first column of `A` vanishes while both entries of the
/// second do not.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pldu {
    pub p: Perm,
    pub l: Tensor,
    pub d: Tensor,
    pub u: Tensor,
    pub q: Perm,
    /// `L = tick ∘ μ_●(ξ ⊗ tick -)` with `ξ = (l21, 1)`.
    pub xi: [C64; 2],
    /// `D = μ_○(φ ⊗ -)` with `φ = (d11, d22)`.
    pub phi: [C64; 2],
    /// `U = μ_●(ψ ⊗ -)` with `ψ = (u12, 1)`.
    pub psi: [C64; 2],
}

impl Pldu {
    pub fn reconstruct(&self) -> Tensor {
        let m = [self.p.matrix(), self.l.as_matrix2().unwrap(), self.d.as_matrix2().unwrap(),
                 self.u.as_matrix2().unwrap(), self.q.matrix()];
        Tensor::matrix2(m.iter().skip(1).fold(m[0], |acc, x| linalg::mul2(&acc, x)))
    }
}

/// Gaussian elimination with the row pivot chosen by exact zero tests.
pub fn pldu_decompose(a: &linalg::M2) -> Pldu {
    let [[a11, a12], [a21, a22]] = *a;
    let (p, q, m) = if a11 != ZERO {
        (Perm::Identity, Perm::Identity, *a)
    } else if a21 != ZERO {
        (Perm::Not, Perm::Identity, [[a21, a22], [a11, a12]])
    } else if a12 == ZERO || a22 == ZERO {
        // first column zero: D carries the lone nonzero entry
        let (p, v) = if a12 == ZERO { (Perm::Identity, a22) } else { (Perm::Not, a12) };
        (p, Perm::Identity, [[ZERO, ZERO], [ZERO, v]])
    } else {
        (Perm::Identity, Perm::Not, [[a12, a11], [a22, a21]])
    };
    let (l21, d1, u12, d2) = if m[0][0] != ZERO {
        let l21 = m[1][0] / m[0][0];
        let u12 = m[0][1] / m[0][0];
        (l21, m[0][0], u12, m[1][1] - l21 * m[0][1])
    } else {
        (ZERO, ZERO, ZERO, m[1][1])
    };
    Pldu {
        p, q,
        l: Tensor::matrix2([[ONE, ZERO], [l21, ONE]]),
        d: Tensor::matrix2([[d1, ZERO], [ZERO, d2]]),
        u: Tensor::matrix2([[ONE, u12], [ZERO, ONE]]),
        xi: [l21, ONE],
        phi: [d1, d2],
        psi: [u12, ONE],
    }
}

/// Diagram realizing a factorization from the pair's generators, single-qubit
/// states and ticks.
pub fn pldu_diagram(f: &Pldu) -> GhzwResult<Diagram> {
    let state = |name: &str, v: [C64; 2]| Diagram::node(NodeKind::State { name: name.into(), arity: 1, vector: Some(v.to_vec()) });
    let perm = |p: Perm| if p == Perm::Not { Diagram::tick() } else { Diagram::identity(1) };
    let id = Diagram::identity(1);
    let u = state("psi", f.psi).par(&id).then(&Diagram::gen("w", GenOp::Mult))?;
    let d = state("phi", f.phi).par(&id).then(&Diagram::gen("ghz", GenOp::Mult))?;
    let l = Diagram::seq_all(&[
        Diagram::tick(),
        state("xi", f.xi).par(&id),
        Diagram::gen("w", GenOp::Mult),
        Diagram::tick(),
    ])?;
    Ok(Diagram::seq_all(&[perm(f.q), u, d, l, perm(f.p)])?)
}

/// Evaluates a diagram whose variables are all bound.
pub fn synthesize(d: &Diagram, ctx: &EvalContext) -> GhzwResult<Tensor> {
    Ok(diagram::eval(d, ctx)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{ cfa::spider, random, tensor::{ proportional, r } };

    fn tol() -> Tolerance { Tolerance::default() }
    fn not() -> Tensor { Tensor::matrix2(Perm::Not.matrix()) }
    fn hadamard() -> Tensor {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Tensor::matrix2([[r(s), r(s)], [r(s), r(-s)]])
    }

    #[test]
    fn canonical_tick_is_not() {
        let p = GhzwPair::canonical();
        assert_eq!(p.tick, not());
        let l = random::invertible(&mut random::rng(1), 0.2);
        let moved = p.transport(&l).unwrap();
        let direct = make_tick(&moved.scfa, &moved.acfa).unwrap();
        assert!(direct.approx_eq(&moved.tick, tol()));
        assert!(compose(&direct, &direct).unwrap().approx_eq(&Tensor::identity(1, 2), tol()));
    }

    #[test]
    fn pair_checks() {
        let rep = pair_check(&GhzwPair::canonical(), tol()).unwrap();
        assert!(rep.pass, "{:?}", rep.failures());
        assert!(rep.max_residual() < 1e-12);
        let bad = GhzwPair { tick: Tensor::identity(1, 2), ..GhzwPair::canonical() };
        let rep = pair_check(&bad, tol()).unwrap();
        assert_eq!(rep.failures(), vec!["e:tick_unit_copy", "f:scalars"]);
        let mut rng = random::rng(2);
        for _ in 0..20 {
            let l = random::invertible(&mut rng, 0.2);
            let p = GhzwPair::canonical().transport(&l).unwrap();
            assert!(pair_check(&p, Tolerance::uniform(1e-9).unwrap()).unwrap().pass);
        }
    }

    #[test]
    fn partners() {
        let (a, alt) = partner_from_scfa(&Cfa::ghz(), tol()).unwrap();
        assert!(a.mult.approx_eq(&Cfa::w().mult, tol()) && a.comult.approx_eq(&Cfa::w().comult, tol()));
        assert!(a.unit.approx_eq(&Cfa::w().unit, tol()) && a.counit.approx_eq(&Cfa::w().counit, tol()));
        let flipped = Cfa::w().transport(&not()).unwrap();
        assert!(alt.comult.approx_eq(&flipped.comult, tol()));
        let s = partner_from_acfa(&Cfa::w(), tol()).unwrap();
        assert!(s.comult.approx_eq(&Cfa::ghz().comult, tol()));
        assert!(s.mult.approx_eq(&Cfa::ghz().mult, tol()));
        let back = partner_from_acfa(&alt, tol()).unwrap();
        assert!(back.comult.approx_eq(&Cfa::ghz().comult, tol()));
        let hg = Cfa::ghz().transport(&hadamard()).unwrap();
        let (ha, _) = partner_from_scfa(&hg, tol()).unwrap();
        let hw = Cfa::w().transport(&hadamard()).unwrap();
        assert!(ha.comult.approx_eq(&hw.comult, tol()) || ha.comult.approx_eq(&hw.transport(&not()).unwrap().comult, tol()));
        let pair = GhzwPair::new(hg, ha).unwrap();
        assert!(pair_check(&pair, tol()).unwrap().pass);
        assert!(matches!(partner_from_acfa(&Cfa::ghz(), tol()), Err(GhzwError::Dependent)));
    }

    #[test]
    fn transpose_laws() {
        let w = Cfa::w();
        let g = Cfa::ghz();
        assert!(dot_transpose(&w, &w.mult).unwrap().approx_eq(&w.comult, tol()));
        assert!(dot_transpose(&w, &g.unit).unwrap().approx_eq(&g.counit, tol()));
        assert!(dot_transpose(&w, &not()).unwrap().approx_eq(&not(), tol()));
        let mut rng = random::rng(3);
        let f = Tensor::new(1, 2, 2, random::gaussian_vec(&mut rng, 8)).unwrap();
        let h = Tensor::new(2, 1, 2, random::gaussian_vec(&mut rng, 8)).unwrap();
        let t = |x: &Tensor| dot_transpose(&w, x).unwrap();
        assert!(t(&t(&f)).approx_eq(&f, tol()));
        assert!(t(&compose(&h, &f).unwrap()).approx_eq(&compose(&t(&f), &t(&h)).unwrap(), tol()));
        assert!(t(&kron(&f, &h).unwrap()).approx_eq(&kron(&t(&f), &t(&h)).unwrap(), tol()));
    }

    #[test]
    fn qmux_cases() {
        let d = qmux_diagram(1).unwrap();
        assert!(d.is_connected());
        assert_eq!((d.n_inputs(), d.n_outputs()), (2, 2));
        let one = Tensor::ket(&[1]);
        let c = qmux_check(&one, &one, 1, tol()).unwrap();
        assert!(c.pass);
        assert!(c.output.approx_eq(&Tensor::ket(&[0, 1]).add(&Tensor::ket(&[1, 1])).unwrap(), tol()));
        let w3 = spider(&Cfa::w(), 0, 3);
        assert_eq!(qmux_check(&w3, &Tensor::ket(&[1, 1, 1]), 1, tol()), Err(GhzwError::Overlap("Psi")));
        let g3 = spider(&Cfa::ghz(), 0, 3);
        let c = qmux_check(&g3, &Tensor::ket(&[1, 1, 1]), 1, tol()).unwrap();
        assert!(c.pass && c.residual < 1e-12);
        let mut rng = random::rng(4);
        for k in 1..4 {
            let (a, b) = (random::state(&mut rng, k), random::state(&mut rng, k));
            let out = qmux_check(&a, &b, 5, tol()).unwrap();
            assert!(out.output.approx_eq(&out.target, tol()));
        }
        assert!(qmux_diagram(0).is_err());
    }

    #[test]
    fn pldu_cases() {
        let f = pldu_decompose(&[[r(1.), r(2.)], [r(3.), r(4.)]]);
        assert_eq!(f.p, Perm::Identity);
        assert_eq!(f.l, Tensor::matrix2([[ONE, ZERO], [r(3.), ONE]]));
        assert_eq!(f.d, Tensor::matrix2([[ONE, ZERO], [ZERO, r(-2.)]]));
        assert_eq!(f.u, Tensor::matrix2([[ONE, r(2.)], [ZERO, ONE]]));
        let f = pldu_decompose(&Perm::Not.matrix());
        assert_eq!(f.p, Perm::Not);
        assert_eq!(f.l, Tensor::identity(1, 2));
        assert_eq!(f.d, Tensor::identity(1, 2));
        assert_eq!(f.u, Tensor::identity(1, 2));
        for a in [
            [[ZERO, r(2.)], [ZERO, r(5.)]],
            [[ZERO, ZERO], [ZERO, r(5.)]],
            [[ZERO, r(5.)], [ZERO, ZERO]],
            [[ZERO; 2]; 2],
            [[r(1.), r(2.)], [r(2.), r(4.)]],
        ] {
            let f = pldu_decompose(&a);
            assert!(f.reconstruct().approx_eq(&Tensor::matrix2(a), tol()), "{a:?}");
            let ev = synthesize(&pldu_diagram(&f).unwrap(), &EvalContext::default()).unwrap();
            assert!(ev.approx_eq(&Tensor::matrix2(a), tol()), "{a:?}");
        }
        let h = pldu_decompose(&hadamard().as_matrix2().unwrap());
        let d = Diagram::node(NodeKind::State { name: "z".into(), arity: 1, vector: Some(vec![ONE, ZERO]) })
            .then(&pldu_diagram(&h).unwrap()).unwrap();
        let plus = synthesize(&d, &EvalContext::default()).unwrap();
        assert!(proportional(&plus, &Tensor::state(vec![ONE, ONE]).unwrap(), tol()).is_some());
    }

    #[test]
    fn synthesis() {
        let ctx = EvalContext::default();
        let tree = |alg: &str| Diagram::seq_all(&[
            Diagram::gen(alg, GenOp::Unit),
            Diagram::gen(alg, GenOp::Comult),
            Diagram::gen(alg, GenOp::Comult).par(&Diagram::identity(1)),
            Diagram::gen(alg, GenOp::Comult).par(&Diagram::identity(2)),
        ]).unwrap();
        let g4 = synthesize(&tree("ghz"), &ctx).unwrap();
        assert_eq!(g4, Tensor::ket(&[0, 0, 0, 0]).add(&Tensor::ket(&[1, 1, 1, 1])).unwrap());
        let w4 = synthesize(&tree("w"), &ctx).unwrap();
        assert!(w4.approx_eq(&spider(&Cfa::w(), 0, 4), tol()));
        let unbound = Diagram::node(NodeKind::State { name: "v".into(), arity: 1, vector: None });
        assert!(synthesize(&unbound, &ctx).is_err());
    }
}
