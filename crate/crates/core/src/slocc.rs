//! SLOCC equivalence of qubit states: maximality witnesses, strong symmetry,
//! Frobenius states, tripartite classification, uniform local maps and
//! recursive superclass labels.

use std::fmt;
use nalgebra::{ DMatrix, DVector };
use num_complex::Complex64 as C64;
use serde::{ Serialize, Serializer };
use thiserror::Error;
use crate::{
    cfa::{ self, CfaError },
    linalg::{ self, M2 },
    random,
    tensor::{
        self, compose, kron, kron_all, proportional, swap_legs, Tensor, TensorError,
        Tolerance, ONE, ZERO,
    },
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SloccError {
    #[error("tensor error: {0}")]
    Tensor(#[from] TensorError),

    #[error("algebra error: {0}")]
    Cfa(Box<CfaError>),

    #[error("expected a {0}")]
    Shape(String),

    #[error("state is not symmetric")]
    NotSymmetric,

    #[error("zero state")]
    Zero,
}
pub type SloccResult<T> = Result<T, SloccError>;

impl From<CfaError> for SloccError {
    fn from(e: CfaError) -> Self { Self::Cfa(Box::new(e)) }
}

impl From<SloccError> for CfaError {
    fn from(e: SloccError) -> Self {
        match e {
            SloccError::Tensor(t) => CfaError::Tensor(t),
            SloccError::Cfa(c) => *c,
            SloccError::NotSymmetric => CfaError::NotSymmetric,
            other => CfaError::Malformed(other.to_string()),
        }
    }
}

/// Recursive SLOCC label. Leaves classify states on at most three qubits; a
/// pair (or singleton) collects the labels of the spanning vectors of the
/// right singular subspace. Variant order runs from least to most entangled.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SloccLabel {
    Zero,
    Qubit,
    Product,
    Bell,
    /// The given qubit (1-based) factors off a Bell pair.
    Bisep(usize),
    W,
    Ghz,
    Single(Box<SloccLabel>),
    Pair(Box<SloccLabel>, Box<SloccLabel>),
}

impl SloccLabel {
    /// Unordered pair; the two labels are stored sorted.
    pub fn pair(a: SloccLabel, b: SloccLabel) -> Self {
        if a <= b { Self::Pair(Box::new(a), Box::new(b)) } else { Self::Pair(Box::new(b), Box::new(a)) }
    }

    pub fn single(a: SloccLabel) -> Self { Self::Single(Box::new(a)) }

    /// Labels one level down, if any.
    pub fn children(&self) -> Vec<&SloccLabel> {
        match self {
            Self::Single(a) => vec![a],
            Self::Pair(a, b) => vec![a, b],
            _ => vec![],
        }
    }
}

impl fmt::Display for SloccLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("zero"),
            Self::Qubit => f.write_str("qubit"),
            Self::Product => f.write_str("product"),
            Self::Bell => f.write_str("bell"),
            Self::Bisep(k) => write!(f, "bisep({k})"),
            Self::W => f.write_str("w"),
            Self::Ghz => f.write_str("ghz"),
            Self::Single(a) => write!(f, "{{{a}}}"),
            Self::Pair(a, b) => write!(f, "{{{a}, {b}}}"),
        }
    }
}

impl Serialize for SloccLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Effects certifying strong maximality on one leg.
#[derive(Clone, Debug, PartialEq)]
pub struct MaximalityWitness {
    pub xi: Tensor,
    pub phi: Tensor,
}

fn qubits(psi: &Tensor) -> SloccResult<usize> {
    if psi.in_arity() != 0 || psi.dim() != 2 || psi.out_arity() == 0 {
        return Err(SloccError::Shape("qubit state".into()));
    }
    Ok(psi.out_arity())
}

fn require_legs(psi: &Tensor, n: usize) -> SloccResult<()> {
    if qubits(psi)? != n { return Err(SloccError::Shape(format!("{n}-qubit state"))); }
    Ok(())
}

/// Applies a single-qubit map to leg `leg` of an `n`-qubit amplitude vector.
pub fn apply_on_leg(amps: &[C64], n: usize, leg: usize, m: &M2) -> Vec<C64> {
    let stride = 1 << (n - 1 - leg);
    let mut out = vec![ZERO; amps.len()];
    for i in 0..amps.len() {
        if i & stride != 0 { continue; }
        let (a0, a1) = (amps[i], amps[i | stride]);
        out[i] = m[0][0] * a0 + m[0][1] * a1;
        out[i | stride] = m[1][0] * a0 + m[1][1] * a1;
    }
    out
}

/// `(L_1 ⊗ ... ⊗ L_n)` applied to a state.
pub fn apply_local(ops: &[M2], psi: &Tensor) -> SloccResult<Tensor> {
    let n = qubits(psi)?;
    if ops.len() != n { return Err(SloccError::Shape(format!("{n} local maps"))); }
    let mut v = psi.entries().to_vec();
    for (k, m) in ops.iter().enumerate() { v = apply_on_leg(&v, n, k, m); }
    Ok(Tensor::state(v)?)
}

/// Slice of a three-qubit state with leg `leg` fixed to `k`, as a 2x2 matrix
/// over the remaining legs in order.
pub fn slice3(psi: &Tensor, leg: usize, k: usize) -> M2 {
    let mut m = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut rest = [i, j].into_iter();
            let full: Vec<usize> = (0..3)
                .map(|l| if l == leg { k } else { rest.next().unwrap() })
                .collect();
            m[i][j] = psi.entries()[tensor::undigits(&full, 2)];
        }
    }
    m
}

/// Coefficients `(a, b, c)` of the quadratic form
/// `f ↦ det((f on leg) Ψ) = a f0^2 + b f0 f1 + c f1^2`.
pub fn leg_form(psi: &Tensor, leg: usize) -> (C64, C64, C64) {
    let m0 = slice3(psi, leg, 0);
    let m1 = slice3(psi, leg, 1);
    let a = linalg::det2(&m0);
    let c = linalg::det2(&m1);
    let sum = [[m0[0][0] + m1[0][0], m0[0][1] + m1[0][1]], [m0[1][0] + m1[1][0], m0[1][1] + m1[1][1]]];
    (a, linalg::det2(&sum) - a - c, c)
}

/// Cayley's hyperdeterminant of the 2x2x2 amplitude tensor.
pub fn hyperdet(psi: &Tensor) -> C64 {
    let a = |i: usize, j: usize, k: usize| psi.entries()[4 * i + 2 * j + k];
    let (a000, a001, a010, a011) = (a(0, 0, 0), a(0, 0, 1), a(0, 1, 0), a(0, 1, 1));
    let (a100, a101, a110, a111) = (a(1, 0, 0), a(1, 0, 1), a(1, 1, 0), a(1, 1, 1));
    let sq = a000 * a000 * a111 * a111 + a001 * a001 * a110 * a110
        + a010 * a010 * a101 * a101 + a100 * a100 * a011 * a011;
    let mixed = a000 * a111 * a011 * a100 + a000 * a111 * a101 * a010
        + a000 * a111 * a110 * a001 + a011 * a100 * a101 * a010
        + a011 * a100 * a110 * a001 + a101 * a010 * a110 * a001;
    let quad = a000 * a110 * a101 * a011 + a111 * a001 * a010 * a100;
    sq - 2.0 * mixed + 4.0 * quad
}

/// Ranks of the three single-qubit flattenings.
pub fn reduced_ranks(psi: &Tensor, tol: Tolerance) -> [usize; 3] {
    let mut out = [0; 3];
    for (leg, slot) in out.iter_mut().enumerate() {
        let m0 = slice3(psi, leg, 0);
        let m1 = slice3(psi, leg, 1);
        let rows = DMatrix::from_row_slice(2, 4, &[
            m0[0][0], m0[0][1], m0[1][0], m0[1][1],
            m1[0][0], m1[0][1], m1[1][0], m1[1][1],
        ]);
        *slot = linalg::rank(&rows, tol);
    }
    out
}

/// Leaf label of a three-qubit state from its hyperdeterminant and reduced
/// ranks (evaluated on the unit-normalized state).
pub fn tripartite_classify(psi: &Tensor, tol: Tolerance) -> SloccResult<SloccLabel> {
    require_legs(psi, 3)?;
    let n = psi.norm();
    if n <= tol.abs_eps { return Ok(SloccLabel::Zero); }
    let unit = psi.scale_re(1.0 / n);
    if hyperdet(&unit).norm() > tol.bound(1.0) { return Ok(SloccLabel::Ghz); }
    let ranks = reduced_ranks(&unit, tol);
    let ones: Vec<usize> = (0..3).filter(|k| ranks[*k] <= 1).collect();
    Ok(match ones.len() {
        0 => SloccLabel::W,
        1 => SloccLabel::Bisep(ones[0] + 1),
        _ => SloccLabel::Product,
    })
}

pub fn two_qubit_label(psi: &Tensor, tol: Tolerance) -> SloccLabel {
    let m = DMatrix::from_row_slice(2, 2, psi.entries());
    match linalg::rank(&m, tol) {
        0 => SloccLabel::Zero,
        1 => SloccLabel::Product,
        _ => SloccLabel::Bell,
    }
}

/// Effect `Φ` forming a compact structure with the bipartite state, when its
/// 2x2 reshape is invertible.
pub fn bipartite_maximal(psi: &Tensor, tol: Tolerance) -> Option<Tensor> {
    if require_legs(psi, 2).is_err() { return None; }
    let m = psi.reinterpret(1, 1).ok()?.as_matrix2()?;
    let scale = m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>();
    if linalg::det2(&m).norm() <= tol.bound(scale) { return None; }
    cfa::compact_partner(psi).ok()
}

/// Contracts leg `leg` of a three-qubit state with the effect `xi`.
pub fn contract_leg(psi: &Tensor, leg: usize, xi: &Tensor) -> Tensor {
    let x = xi.entries();
    let m0 = slice3(psi, leg, 0);
    let m1 = slice3(psi, leg, 1);
    let v: Vec<C64> = (0..4).map(|k| x[0] * m0[k / 2][k % 2] + x[1] * m1[k / 2][k % 2]).collect();
    Tensor::state(v).unwrap()
}

/// Whether `xi` on leg `leg` leaves a maximal bipartite state.
pub fn is_witness(psi: &Tensor, leg: usize, xi: &Tensor, tol: Tolerance) -> bool {
    require_legs(psi, 3).is_ok()
        && xi.in_arity() == 1 && xi.out_arity() == 0 && xi.dim() == 2
        && bipartite_maximal(&contract_leg(psi, leg, xi), tol).is_some()
}

fn candidate_effects() -> Vec<Tensor> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [[s, 0.0, s, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0],
     [s, 0.0, -s, 0.0], [s, 0.0, 0.0, s]]
        .iter()
        .map(|v| Tensor::effect(vec![C64::new(v[0], v[1]), C64::new(v[2], v[3])]).unwrap())
        .collect()
}

/// Witnesses that every leg can be contracted to a maximal bipartite state.
///
/// The determinant of the contracted reshape is a quadratic form in the
/// effect; it has at most two projective roots unless it vanishes, so among
/// the fixed unit candidates `<+|, <0|, <1|, <-|, <+i|` the one maximizing the
/// determinant is a witness.
pub fn strong_maximal(psi: &Tensor, tol: Tolerance)
    -> SloccResult<Option<[MaximalityWitness; 3]>>
{
    require_legs(psi, 3)?;
    let scale = psi.norm() * psi.norm();
    let mut out = Vec::new();
    for leg in 0..3 {
        let (a, b, c) = leg_form(psi, leg);
        if a.norm().max(b.norm()).max(c.norm()) <= tol.bound(scale) { return Ok(None); }
        let best = candidate_effects().into_iter()
            .map(|xi| {
                let d = linalg::det2(&contract_leg(psi, leg, &xi).reinterpret(1, 1)
                    .unwrap().as_matrix2().unwrap()).norm();
                (d, xi)
            })
            .fold(None::<(f64, Tensor)>, |acc, x| match acc {
                Some(a) if a.0 >= x.0 => Some(a),
                _ => Some(x),
            })
            .unwrap();
        let phi = match bipartite_maximal(&contract_leg(psi, leg, &best.1), tol) {
            Some(p) => p,
            None => return Ok(None),
        };
        out.push(MaximalityWitness { xi: best.1, phi });
    }
    Ok(Some(out.try_into().unwrap()))
}

/// Whether a qubit state is invariant under all leg permutations.
pub fn is_symmetric(psi: &Tensor, tol: Tolerance) -> bool {
    let Ok(n) = qubits(psi) else { return false };
    (0..n.saturating_sub(1)).all(|k| {
        let mut p: Vec<usize> = (0..n).collect();
        p.swap(k, k + 1);
        swap_legs(psi, &[], &p).map(|s| s.approx_eq(psi, tol)).unwrap_or(false)
    })
}

/// `(1 ⊗ ... ⊗ Φ ⊗ ... ⊗ 1)(Ψ ⊗ Ψ')`: the effect `Φ` joins the last leg of
/// `left` with the first leg of `right`.
pub fn glue_with(left: &Tensor, phi: &Tensor, right: &Tensor) -> SloccResult<Tensor> {
    let (n, m) = (qubits(left)?, qubits(right)?);
    let mid = kron_all([
        &Tensor::identity(n - 1, 2), phi, &Tensor::identity(m - 1, 2),
    ], 2)?;
    Ok(compose(&mid, &kron(left, right)?)?)
}

/// Self-glue `(1 ⊗ ... ⊗ Φ ⊗ ... ⊗ 1)(Ψ ⊗ Ψ)`.
pub fn glue(psi: &Tensor, phi: &Tensor) -> SloccResult<Tensor> { glue_with(psi, phi, psi) }

/// An effect `Φ` whose self-glue of `Ψ` is symmetric and nonzero.
///
/// Symmetry of the glue is linear in the four entries of `Φ`, so all solutions
/// form the nullspace of the stacked `(P_s - I)` constraints over adjacent
/// transpositions `s`. Among basis vectors and pairwise sums of a nullspace
/// basis, the candidate with the largest `|det Φ|` (then the largest glue) is
/// returned.
pub fn strong_symmetric(psi: &Tensor, tol: Tolerance) -> SloccResult<Option<Tensor>> {
    let n = qubits(psi)?;
    if n < 2 { return Err(SloccError::Shape("state on at least two qubits".into())); }
    if !is_symmetric(psi, tol) { return Err(SloccError::NotSymmetric); }
    let basis: Vec<Tensor> = (0..4)
        .map(|k| glue(psi, &Tensor::bra(&[k / 2, k % 2])).unwrap())
        .collect();
    let legs = 2 * n - 2;
    let size = 1usize << legs;
    let mut rows: Vec<[C64; 4]> = Vec::new();
    for s in 0..legs - 1 {
        let mut p: Vec<usize> = (0..legs).collect();
        p.swap(s, s + 1);
        let moved: Vec<Tensor> = basis.iter().map(|g| swap_legs(g, &[], &p).unwrap()).collect();
        for i in 0..size {
            let mut row = [ZERO; 4];
            for k in 0..4 { row[k] = moved[k].entries()[i] - basis[k].entries()[i]; }
            rows.push(row);
        }
    }
    let m = DMatrix::from_fn(rows.len(), 4, |i, j| rows[i][j]);
    let ns = linalg::nullspace(&m, tol);
    let mut cands: Vec<DVector<C64>> = ns.clone();
    for i in 0..ns.len() {
        for j in i + 1..ns.len() { cands.push(&ns[i] + &ns[j]); }
    }
    let mut best: Option<(f64, f64, Tensor)> = None;
    for v in cands {
        let v = &v / C64::new(v.norm(), 0.0);
        let phi = Tensor::effect(v.iter().copied().collect())?;
        let g = glue(psi, &phi)?.norm();
        if g <= tol.bound(psi.norm() * psi.norm()) { continue; }
        let det = linalg::det2(&[[v[0], v[1]], [v[2], v[3]]]).norm();
        let key = ((det * 1e9).round(), g);
        if best.as_ref().is_none_or(|b| key > (b.0, b.1)) {
            best = Some((key.0, key.1, phi));
        }
    }
    Ok(best.map(|b| b.2))
}

/// Effects `(Φ, ξ)` exhibiting a symmetric tripartite state as a Frobenius
/// state, found by trying class-derived effects and then seeded random ones.
/// For each `ξ` the induced algebra must pass the axioms, and the glue with
/// `Φ` (the cap of that algebra) must be symmetric.
pub fn is_frobenius_state(psi: &Tensor, seed: u64, tol: Tolerance)
    -> SloccResult<Option<(Tensor, Tensor)>>
{
    require_legs(psi, 3)?;
    if !is_symmetric(psi, tol) { return Ok(None); }
    let mut xis = Vec::new();
    match tripartite_classify(psi, tol)? {
        SloccLabel::Ghz => {
            if let Ok((l, lam)) = cfa::ghz_normalize(psi, tol) {
                let l = l.scale(lam.cbrt());
                if let Ok(li) = l.inverse() {
                    xis.push(compose(&Tensor::effect(vec![ONE, ONE])?, &li)?);
                }
            }
        }
        SloccLabel::W => {
            if let Ok(l) = cfa::w_uniform(psi, tol) {
                xis.push(compose(&Tensor::bra(&[0]), &l.inverse()?)?);
            }
        }
        _ => {}
    }
    let mut rng = random::rng(seed);
    for _ in 0..32 { xis.push(random::effect(&mut rng)); }
    for xi in xis {
        let Ok(alg) = cfa::cfa_from_state(psi, &xi) else { continue };
        if !cfa::check_cfa(&alg, tol).map(|r| r.pass).unwrap_or(false) { continue; }
        let phi = alg.cap();
        let g = glue(psi, &phi)?;
        if g.norm() > tol.abs_eps && is_symmetric(&g, tol) {
            return Ok(Some((phi, xi)));
        }
    }
    Ok(None)
}

/// Damped Gauss–Newton fit of local maps with `(⊗_k L_k) φ ≈ ψ`. With
/// `shared` all legs use one map. Returns the maps and the final residual.
fn fit_local(psi: &[C64], phi: &[C64], n: usize, shared: bool, start: Vec<M2>)
    -> (Vec<M2>, f64)
{
    let nmaps = if shared { 1 } else { n };
    let expand = |ls: &[M2]| -> Vec<M2> {
        if shared { vec![ls[0]; n] } else { ls.to_vec() }
    };
    let eval = |ls: &[M2]| -> Vec<C64> {
        let mut v = phi.to_vec();
        for (k, m) in expand(ls).iter().enumerate() { v = apply_on_leg(&v, n, k, m); }
        v
    };
    let resid = |ls: &[M2]| -> (Vec<C64>, f64) {
        let v = eval(ls);
        let r: Vec<C64> = v.iter().zip(psi).map(|(a, b)| a - b).collect();
        let c = r.iter().map(|z| z.norm_sqr()).sum::<f64>();
        (r, c)
    };
    let mut ls = start;
    let (mut r, mut cost) = resid(&ls);
    let mut damp = 1e-3;
    for _ in 0..300 {
        if cost < 1e-28 { break; }
        // Jacobian columns: derivative with respect to entry (a, b) of map j
        let full = expand(&ls);
        let np = 4 * nmaps;
        let mut jac = DMatrix::<C64>::zeros(psi.len(), np);
        for j in 0..nmaps {
            for e in 0..4 {
                let mut unitm = [[ZERO; 2]; 2];
                unitm[e / 2][e % 2] = ONE;
                let legs: Vec<usize> = if shared { (0..n).collect() } else { vec![j] };
                let mut col = vec![ZERO; psi.len()];
                for &leg in &legs {
                    let mut v = phi.to_vec();
                    for (k, m) in full.iter().enumerate() {
                        v = apply_on_leg(&v, n, k, if k == leg { &unitm } else { m });
                    }
                    col.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
                }
                for (i, z) in col.into_iter().enumerate() { jac[(i, 4 * j + e)] = z; }
            }
        }
        let jh = jac.adjoint();
        let g = &jh * DVector::from_vec(r.clone());
        let h = &jh * &jac;
        let mut improved = false;
        for _ in 0..12 {
            let mut a = h.clone();
            for i in 0..np { a[(i, i)] += C64::new(damp * (1.0 + h[(i, i)].re), 0.0); }
            let Some(step) = a.lu().solve(&(-&g)) else { damp *= 10.0; continue };
            let trial: Vec<M2> = (0..nmaps).map(|j| {
                let mut m = ls[j];
                for e in 0..4 { m[e / 2][e % 2] += step[4 * j + e]; }
                m
            }).collect();
            let (rt, ct) = resid(&trial);
            if ct < cost {
                ls = trial;
                r = rt;
                cost = ct;
                damp = (damp / 3.0).max(1e-12);
                improved = true;
                break;
            }
            damp *= 10.0;
        }
        if !improved { break; }
    }
    (expand(&ls), cost.sqrt())
}

fn random_m2(rng: &mut random::SeededRng) -> M2 {
    let v = random::gaussian_vec(rng, 4);
    [[v[0], v[1]], [v[2], v[3]]]
}

fn certify(psi: &Tensor, phi: &Tensor, ops: &[M2], tol: Tolerance) -> bool {
    ops.iter().all(|m| linalg::inv2(m).is_some())
        && apply_local(ops, phi).ok()
            .and_then(|t| proportional(&t, psi, tol))
            .is_some()
}

/// Invertible `L` with `L^{⊗N} Φ ∝ Ψ` for symmetric states. Three-qubit GHZ
/// and W references use closed forms; everything else runs a seeded
/// multi-start least-squares search. A returned map always passes the
/// proportionality certificate; `None` only means nothing was found.
pub fn uniform_l_solve(psi: &Tensor, phi: &Tensor, seed: u64, tol: Tolerance)
    -> SloccResult<Option<Tensor>>
{
    let n = qubits(psi)?;
    if qubits(phi)? != n { return Err(SloccError::Shape(format!("{n}-qubit reference"))); }
    if !is_symmetric(psi, tol) || !is_symmetric(phi, tol) { return Err(SloccError::NotSymmetric); }
    if psi.norm() <= tol.abs_eps || phi.norm() <= tol.abs_eps { return Err(SloccError::Zero); }
    let accept = |l: &Tensor| -> bool {
        let m = l.as_matrix2().unwrap();
        certify(psi, phi, &vec![m; n], tol)
    };
    if n == 3 {
        let ghz = Tensor::ket(&[0, 0, 0]).add(&Tensor::ket(&[1, 1, 1]))?;
        let w = cfa::spider(&cfa::Cfa::w(), 0, 3);
        let closed = if proportional(phi, &ghz, tol).is_some() {
            cfa::ghz_normalize(psi, tol).ok().map(|(l, _)| l)
        } else if proportional(phi, &w, tol).is_some() {
            cfa::w_uniform(psi, tol).ok()
        } else {
            None
        };
        if let Some(l) = closed {
            if accept(&l) { return Ok(Some(l)); }
        }
    }
    let target: Vec<C64> = psi.entries().iter().map(|z| z / psi.norm()).collect();
    let source: Vec<C64> = phi.entries().iter().map(|z| z / phi.norm()).collect();
    let mut rng = random::rng(seed);
    let mut starts = vec![[[ONE, ZERO], [ZERO, ONE]]];
    for _ in 0..24 { starts.push(random_m2(&mut rng)); }
    for s in starts {
        let (ls, _) = fit_local(&target, &source, n, true, vec![s]);
        let l = Tensor::matrix2(ls[0]);
        if accept(&l) { return Ok(Some(l)); }
    }
    Ok(None)
}

/// Invertible local maps `L_k` with `(⊗ L_k) Φ ∝ Ψ`, trying the identity
/// first. Same certificate guarantee as [`uniform_l_solve`].
pub fn local_equivalence(psi: &Tensor, phi: &Tensor, seed: u64, tol: Tolerance)
    -> SloccResult<Option<Vec<Tensor>>>
{
    let n = qubits(psi)?;
    if qubits(phi)? != n { return Err(SloccError::Shape(format!("{n}-qubit reference"))); }
    let ident = vec![[[ONE, ZERO], [ZERO, ONE]]; n];
    let to_t = |ops: &[M2]| ops.iter().map(|m| Tensor::matrix2(*m)).collect::<Vec<_>>();
    if certify(psi, phi, &ident, tol) { return Ok(Some(to_t(&ident))); }
    if psi.norm() <= tol.abs_eps || phi.norm() <= tol.abs_eps { return Ok(None); }
    let target: Vec<C64> = psi.entries().iter().map(|z| z / psi.norm()).collect();
    let source: Vec<C64> = phi.entries().iter().map(|z| z / phi.norm()).collect();
    let mut rng = random::rng(seed);
    let mut starts = vec![ident.clone()];
    for _ in 0..16 { starts.push((0..n).map(|_| random_m2(&mut rng)).collect()); }
    for s in starts {
        let (ls, _) = fit_local(&target, &source, n, false, s);
        if certify(psi, phi, &ls, tol) { return Ok(Some(to_t(&ls))); }
    }
    Ok(None)
}

/// Recursive superclass label.
///
/// Two and three qubits get leaf labels. For more qubits the `2 x 2^(N-1)`
/// reshape (first qubit as rows) is reduced to its right singular subspace.
/// A one-dimensional subspace gives a singleton. For a two-dimensional
/// subspace of three-qubit vectors the spanning pair is taken as the two
/// least-entangled points of the projective line (points where the
/// hyperdeterminant or a flattening rank drops), padded with the generic
/// class; this choice is covariant under local maps on the remaining qubits.
/// Larger subspaces use the orthonormal singular vectors directly.
pub fn superclass_label(psi: &Tensor, tol: Tolerance) -> SloccResult<SloccLabel> {
    let n = qubits(psi)?;
    if psi.norm() <= tol.abs_eps { return Err(SloccError::Zero); }
    match n {
        1 => Ok(SloccLabel::Qubit),
        2 => Ok(two_qubit_label(psi, tol)),
        3 => tripartite_classify(psi, tol),
        _ => {
            let rows = tensor::right_singular_space(psi, tol)?;
            let sub: Vec<Tensor> = rows.into_iter().map(|v| Tensor::state(v).unwrap()).collect();
            if sub.len() == 1 {
                return Ok(SloccLabel::single(superclass_label(&sub[0], tol)?));
            }
            if n == 4 {
                let (a, b) = line_pair_labels(&sub[0], &sub[1], tol)?;
                return Ok(SloccLabel::pair(a, b));
            }
            Ok(SloccLabel::pair(superclass_label(&sub[0], tol)?, superclass_label(&sub[1], tol)?))
        }
    }
}

fn combo(v1: &Tensor, v2: &Tensor, a: C64, b: C64) -> Tensor {
    v1.scale(a).add(&v2.scale(b)).unwrap()
}

/// Roots of a polynomial (coefficients low to high) by Durand–Kerner.
fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
    let scale = coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].norm() <= 1e-12 * scale { deg -= 1; }
    if deg == 0 { return vec![]; }
    let lead = coeffs[deg];
    let monic: Vec<C64> = coeffs[..=deg].iter().map(|z| z / lead).collect();
    let eval = |x: C64| poly_eval(&monic, x);
    let seed = C64::new(0.4, 0.9);
    let mut roots: Vec<C64> = (0..deg).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..deg {
            let denom: C64 = (0..deg).filter(|j| *j != i).map(|j| roots[i] - roots[j]).product();
            if denom.norm() == 0.0 { roots[i] += C64::new(1e-8, 1e-8); continue; }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 { break; }
    }
    roots
}

fn poly_eval(coeffs: &[C64], x: C64) -> C64 {
    coeffs.iter().rev().fold(ZERO, |acc, c| acc * x + c)
}

fn poly_deriv(coeffs: &[C64]) -> Vec<C64> {
    coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect()
}

/// Newton refinement of a root of multiplicity `k`, run on the `(k-1)`-th
/// derivative where the root is simple.
fn polish_root(coeffs: &[C64], t: C64, k: usize) -> C64 {
    let mut p = coeffs.to_vec();
    for _ in 1..k { p = poly_deriv(&p); }
    let dp = poly_deriv(&p);
    let mut x = t;
    for _ in 0..20 {
        let d = poly_eval(&dp, x);
        if d.norm() == 0.0 { break; }
        let step = poly_eval(&p, x) / d;
        if !step.is_finite() { break; }
        x -= step;
        if step.norm() <= 1e-16 * (1.0 + x.norm()) { break; }
    }
    x
}

/// Least-entangled pair of leaf labels on the line spanned by two
/// three-qubit vectors.
fn line_pair_labels(v1: &Tensor, v2: &Tensor, tol: Tolerance)
    -> SloccResult<(SloccLabel, SloccLabel)>
{
    // generic unitary mix so that special points are unlikely at infinity
    let (ca, sa) = (C64::new(0.8, 0.0), C64::new(0.36, 0.48));
    let w1 = combo(v1, v2, ca, sa);
    let w2 = combo(v1, v2, -sa.conj(), ca);
    let generic = tripartite_classify(&combo(&w1, &w2, ONE, C64::new(0.613, -0.271)), tol)?;
    let point = |t: C64| combo(&w1, &w2, ONE, t);

    let mut cands: Vec<[C64; 2]> = vec![[ZERO, ONE]];
    // rank drops of each flattening: common roots of its 2x2 minors
    for leg in 0..3 {
        let flat = |x: &Tensor| {
            let m0 = slice3(x, leg, 0);
            let m1 = slice3(x, leg, 1);
            [m0[0][0], m0[0][1], m0[1][0], m0[1][1], m1[0][0], m1[0][1], m1[1][0], m1[1][1]]
        };
        let (f1, f2) = (flat(&w1), flat(&w2));
        // the minor with the largest coefficients fixes the candidates; a
        // candidate is kept only if the whole flattening drops rank there
        let mut best: Option<(f64, (C64, C64, C64))> = None;
        for i in 0..4 {
            for j in i + 1..4 {
                let m = |x: &[C64; 8], y: &[C64; 8]| x[i] * y[4 + j] - x[j] * y[4 + i];
                let form = (m(&f1, &f1), m(&f1, &f2) + m(&f2, &f1), m(&f2, &f2));
                let size = form.0.norm().max(form.1.norm()).max(form.2.norm());
                if best.is_none_or(|b| size > b.0) { best = Some((size, form)); }
            }
        }
        let Some((_, (a, b, c))) = best else { continue };
        let Some(rs) = linalg::projective_roots(a, b, c, tol) else { continue };
        for x in rs {
            let p = flat(&combo(&w1, &w2, x[0], x[1]));
            let rows = DMatrix::from_row_slice(2, 4, &p);
            if linalg::rank(&rows, Tolerance::uniform(1e-6).unwrap()) <= 1 { cands.push(x); }
        }
    }
    // hyperdeterminant along the line is a quartic in t
    let nodes: Vec<C64> = (0..5).map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 5.0)).collect();
    let vals: Vec<C64> = nodes.iter().map(|t| hyperdet(&point(*t))).collect();
    let coeffs: Vec<C64> = (0..5).map(|j| {
        nodes.iter().zip(&vals).map(|(t, v)| v * t.powu(j as u32).conj()).sum::<C64>() / 5.0
    }).collect();
    // a k-fold root comes back as a cluster of radius ~eps^(1/k); its mean is
    // accurate to ~eps
    let mut clusters: Vec<Vec<C64>> = Vec::new();
    for t in poly_roots(&coeffs) {
        match clusters.iter_mut().find(|cl| (cl[0] - t).norm() <= 1e-2 * (1.0 + t.norm())) {
            Some(cl) => cl.push(t),
            None => clusters.push(vec![t]),
        }
    }
    for cl in clusters {
        let t = cl.iter().sum::<C64>() / cl.len() as f64;
        cands.push([ONE, polish_root(&coeffs, t, cl.len())]);
    }
    let loose = Tolerance::uniform(1e-6).unwrap();
    let mut seen: Vec<[C64; 2]> = Vec::new();
    let mut special: Vec<SloccLabel> = Vec::new();
    for x in cands {
        if seen.iter().any(|y| linalg::parallel2(*y, x, 1e-5)) { continue; }
        seen.push(x);
        let lab = tripartite_classify(&combo(&w1, &w2, x[0], x[1]), loose)?;
        if lab < generic { special.push(lab); }
    }
    special.sort();
    special.push(generic.clone());
    special.push(generic);
    Ok((special[0].clone(), special[1].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{ cfa::{ spider, Cfa }, tensor::{ c, r } };

    fn tol() -> Tolerance { Tolerance::default() }
    fn ghz(n: usize) -> Tensor { spider(&Cfa::ghz(), 0, n) }
    fn w(n: usize) -> Tensor { spider(&Cfa::w(), 0, n) }
    fn ket(bits: &[usize]) -> Tensor { Tensor::ket(bits) }

    fn bisep1() -> Tensor {
        kron(&ket(&[0]), &ket(&[0, 0]).add(&ket(&[1, 1])).unwrap()).unwrap()
    }

    #[test]
    fn hyperdet_values() {
        assert_eq!(hyperdet(&ghz(3)), ONE);
        assert_eq!(hyperdet(&w(3)), ZERO);
        assert_eq!(hyperdet(&bisep1()), ZERO);
    }

    #[test]
    fn hyperdet_is_discriminant_of_leg_form() {
        let mut rng = random::rng(1);
        for _ in 0..20 {
            let s = random::state(&mut rng, 3);
            let (a, b, cc) = leg_form(&s, 0);
            let disc = b * b - 4.0 * a * cc;
            assert!((disc - hyperdet(&s)).norm() < 1e-10);
        }
    }

    #[test]
    fn hyperdet_transformation_law() {
        let mut rng = random::rng(2);
        for _ in 0..200 {
            let us: Vec<M2> = (0..3).map(|_| random::unitary(&mut rng).as_matrix2().unwrap()).collect();
            for base in [ghz(3), w(3)] {
                let moved = apply_local(&us, &base).unwrap();
                let factor: C64 = us.iter().map(|u| linalg::det2(u).powu(2)).product();
                let want = hyperdet(&base) * factor;
                assert!((hyperdet(&moved) - want).norm() < 1e-12);
                assert_eq!(hyperdet(&moved).norm() > 1e-9, base == ghz(3));
            }
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(tripartite_classify(&ghz(3), tol()).unwrap(), SloccLabel::Ghz);
        assert_eq!(tripartite_classify(&w(3), tol()).unwrap(), SloccLabel::W);
        assert_eq!(tripartite_classify(&bisep1(), tol()).unwrap(), SloccLabel::Bisep(1));
        assert_eq!(tripartite_classify(&ket(&[0, 1, 1]), tol()).unwrap(), SloccLabel::Product);
        assert_eq!(tripartite_classify(&Tensor::zeros(0, 3, 2), tol()).unwrap(), SloccLabel::Zero);
        let b3 = swap_legs(&bisep1(), &[], &[1, 2, 0]).unwrap();
        assert_eq!(tripartite_classify(&b3, tol()).unwrap(), SloccLabel::Bisep(3));
        assert!(tripartite_classify(&ghz(4), tol()).is_err());
    }

    #[test]
    fn classifier_invariance() {
        let mut rng = random::rng(3);
        for _ in 0..100 {
            let ls: Vec<M2> = (0..3).map(|_| random::invertible(&mut rng, 0.1).as_matrix2().unwrap()).collect();
            assert_eq!(tripartite_classify(&apply_local(&ls, &ghz(3)).unwrap(), tol()).unwrap(), SloccLabel::Ghz);
            assert_eq!(tripartite_classify(&apply_local(&ls, &w(3)).unwrap(), tol()).unwrap(), SloccLabel::W);
        }
    }

    #[test]
    fn bipartite_examples() {
        let bell = ket(&[0, 0]).add(&ket(&[1, 1])).unwrap();
        assert_eq!(bipartite_maximal(&bell, tol()).unwrap(), Tensor::bra(&[0, 0]).add(&Tensor::bra(&[1, 1])).unwrap());
        assert!(bipartite_maximal(&ket(&[0, 0]), tol()).is_none());
        let epr = ket(&[0, 1]).add(&ket(&[1, 0])).unwrap();
        assert_eq!(bipartite_maximal(&epr, tol()).unwrap(), Tensor::bra(&[0, 1]).add(&Tensor::bra(&[1, 0])).unwrap());
    }

    #[test]
    fn strong_maximal_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = Tensor::effect(vec![r(s), r(s)]).unwrap();
        let wit = strong_maximal(&ghz(3), tol()).unwrap().unwrap();
        assert!(wit.iter().all(|x| x.xi == plus));
        for leg in 0..3 { assert!(is_witness(&ghz(3), leg, &plus, tol())); }
        let wit = strong_maximal(&w(3), tol()).unwrap().unwrap();
        assert!(wit.iter().all(|x| x.xi == Tensor::bra(&[0])));
        for leg in 0..3 { assert!(is_witness(&w(3), leg, &Tensor::bra(&[0]), tol())); }
        assert!(strong_maximal(&bisep1(), tol()).unwrap().is_none());
        assert!(strong_maximal(&ket(&[0, 0, 0]), tol()).unwrap().is_none());
    }

    #[test]
    fn strong_maximality_implies_full_ranks() {
        let mut rng = random::rng(4);
        for _ in 0..50 {
            let s = random::state(&mut rng, 3);
            if strong_maximal(&s, tol()).unwrap().is_some() {
                assert_eq!(reduced_ranks(&s, tol()), [2, 2, 2]);
            }
        }
        // a W-class state with full ranks that is still strongly maximal
        assert!(strong_maximal(&w(3), tol()).unwrap().is_some());
    }

    #[test]
    fn strong_symmetry() {
        let bell_e = Tensor::bra(&[0, 0]).add(&Tensor::bra(&[1, 1])).unwrap();
        let epr_e = Tensor::bra(&[0, 1]).add(&Tensor::bra(&[1, 0])).unwrap();
        for n in 3..=5 {
            assert!(strong_symmetric(&ghz(n), tol()).unwrap().is_some());
            assert!(strong_symmetric(&w(n), tol()).unwrap().is_some());
            let g = glue_with(&ghz(n), &bell_e, &ghz(3)).unwrap();
            assert!(proportional(&g, &ghz(n + 1), tol()).is_some());
            let g = glue_with(&w(n), &epr_e, &w(3)).unwrap();
            assert!(proportional(&g, &w(n + 1), tol()).is_some());
            let g = glue(&ghz(n), &bell_e).unwrap();
            assert!(proportional(&g, &ghz(2 * n - 2), tol()).is_some());
        }
        let g = glue(&ghz(3), &bell_e).unwrap();
        assert!(proportional(&g, &ghz(4), tol()).is_some());
        let g = glue(&w(3), &epr_e).unwrap();
        assert!(proportional(&g, &w(4), tol()).is_some());
        let phi = strong_symmetric(&ket(&[0, 0, 0]), tol()).unwrap().unwrap();
        assert!(is_symmetric(&glue(&ket(&[0, 0, 0]), &phi).unwrap(), tol()));
        assert_eq!(strong_symmetric(&ket(&[0, 1, 1]), tol()), Err(SloccError::NotSymmetric));
    }

    #[test]
    fn frobenius_state_examples() {
        let (phi, xi) = is_frobenius_state(&ghz(3), 1, tol()).unwrap().unwrap();
        assert!(phi.approx_eq(&Tensor::bra(&[0, 0]).add(&Tensor::bra(&[1, 1])).unwrap(), tol()));
        assert!(xi.approx_eq(&Tensor::effect(vec![ONE, ONE]).unwrap(), tol()));
        let (phi, xi) = is_frobenius_state(&w(3), 1, tol()).unwrap().unwrap();
        assert!(phi.approx_eq(&Tensor::bra(&[0, 1]).add(&Tensor::bra(&[1, 0])).unwrap(), tol()));
        assert!(xi.approx_eq(&Tensor::bra(&[0]), tol()));
        assert!(is_frobenius_state(&ket(&[0, 0, 0]), 1, tol()).unwrap().is_none());
        assert!(is_frobenius_state(&bisep1(), 1, tol()).unwrap().is_none());
    }

    #[test]
    fn uniform_solve_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = [[r(s), r(s)], [r(s), r(-s)]];
        let pm = apply_local(&[h; 3], &ghz(3)).unwrap();
        let l = uniform_l_solve(&pm, &ghz(3), 1, tol()).unwrap().unwrap();
        assert!(proportional(&l, &Tensor::matrix2(h), tol()).is_some());
        let l = uniform_l_solve(&ghz(3), &ghz(3), 1, tol()).unwrap().unwrap();
        assert!(proportional(&l, &Tensor::identity(1, 2), tol()).is_some());
        let dg = [[ONE, ZERO], [ZERO, r(2.)]];
        let target = apply_local(&[dg; 4], &w(4)).unwrap();
        let l = uniform_l_solve(&target, &w(4), 7, tol()).unwrap().unwrap();
        let m = l.as_matrix2().unwrap();
        assert!(m[0][1].norm() < 1e-6 && m[1][0].norm() < 1e-6);
        let back = apply_local(&[m; 4], &w(4)).unwrap();
        assert!(proportional(&back, &target, tol()).is_some());
        // W and GHZ are not related by any L
        assert!(uniform_l_solve(&w(3), &ghz(3), 1, tol()).unwrap().is_none());
    }

    #[test]
    fn local_equivalence_search() {
        let mut rng = random::rng(8);
        let ls: Vec<M2> = (0..3).map(|_| random::invertible(&mut rng, 0.3).as_matrix2().unwrap()).collect();
        let target = apply_local(&ls, &w(3)).unwrap();
        let found = local_equivalence(&target, &w(3), 3, tol()).unwrap().unwrap();
        let ops: Vec<M2> = found.iter().map(|t| t.as_matrix2().unwrap()).collect();
        assert!(proportional(&apply_local(&ops, &w(3)).unwrap(), &target, tol()).is_some());
    }

    fn lbl(s: &str) -> String { s.to_string() }

    #[test]
    fn superclass_examples() {
        // |0>(|000> + |110> + |101>) + |1>|0>(|01> + |10>)
        let k = |b: &[usize]| ket(b);
        let s1 = [k(&[0, 0, 0, 0]), k(&[0, 1, 1, 0]), k(&[0, 1, 0, 1]), k(&[1, 0, 0, 1]), k(&[1, 0, 1, 0])]
            .iter().fold(Tensor::zeros(0, 4, 2), |a, b| a.add(b).unwrap());
        assert_eq!(superclass_label(&s1, tol()).unwrap().to_string(), lbl("{bisep(1), w}"));
        let s2 = [k(&[0, 0, 0, 0]), k(&[1, 1, 0, 1]), k(&[1, 1, 1, 0])]
            .iter().fold(Tensor::zeros(0, 4, 2), |a, b| a.add(b).unwrap());
        assert_eq!(superclass_label(&s2, tol()).unwrap().to_string(), lbl("{product, bisep(1)}"));
        let s3 = [k(&[0, 0, 0, 0]), k(&[0, 1, 1, 1]), k(&[1, 0, 1, 0])]
            .iter().fold(Tensor::zeros(0, 4, 2), |a, b| a.add(b).unwrap());
        assert_eq!(superclass_label(&s3, tol()).unwrap().to_string(), lbl("{product, ghz}"));
        assert_eq!(superclass_label(&ghz(4), tol()).unwrap().to_string(), lbl("{product, product}"));
        assert_eq!(superclass_label(&w(4), tol()).unwrap().to_string(), lbl("{product, w}"));
        assert_eq!(superclass_label(&k(&[0, 0, 0, 0]), tol()).unwrap().to_string(), lbl("{product}"));
        assert_eq!(superclass_label(&ghz(2), tol()).unwrap(), SloccLabel::Bell);
        assert!(superclass_label(&Tensor::zeros(0, 4, 2), tol()).is_err());
    }

    #[test]
    fn superclass_stable_under_local_maps() {
        let mut rng = random::rng(10);
        let g = superclass_label(&ghz(4), tol()).unwrap();
        let wl = superclass_label(&w(4), tol()).unwrap();
        for _ in 0..20 {
            let mut ls = vec![[[ONE, ZERO], [ZERO, ONE]]];
            for _ in 0..3 { ls.push(random::invertible(&mut rng, 0.2).as_matrix2().unwrap()); }
            assert_eq!(superclass_label(&apply_local(&ls, &ghz(4)).unwrap(), tol()).unwrap(), g);
            assert_eq!(superclass_label(&apply_local(&ls, &w(4)).unwrap(), tol()).unwrap(), wl);
        }
    }

    #[test]
    fn label_pairs_are_unordered() {
        let a = SloccLabel::pair(SloccLabel::W, SloccLabel::Product);
        let b = SloccLabel::pair(SloccLabel::Product, SloccLabel::W);
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "{product, w}");
        let _ = c(0., 0.);
    }
}
