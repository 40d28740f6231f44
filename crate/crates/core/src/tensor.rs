//! Dense complex tensors with ordered input and output legs.
//!
//! A tensor with `n` inputs and `m` outputs on legs of dimension `d` is stored
//! as a `d^m x d^n` matrix in row-major order: the entry for output index `r`
//! and input index `c` sits at `r * d^n + c`. Multi-leg indices are big-endian,
//! so leg 0 is the most significant digit. States are tensors with no inputs,
//! effects have no outputs, and a tensor with neither is a scalar.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{ Deserialize, Serialize };
use thiserror::Error;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("entries length {got} does not match dim^(in + out) = {expected}")]
    BadLength { got: usize, expected: usize },

    #[error("leg dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("arity mismatch: {0} outputs plugged into {1} inputs")]
    ArityMismatch(usize, usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid permutation {0:?}")]
    BadPermutation(Vec<usize>),

    #[error("leg index out of range: {0}")]
    BadLeg(usize),

    #[error("tensor is zero")]
    Zero,

    #[error("matrix is singular")]
    Singular,

    #[error("dimension must be at least 1")]
    ZeroDim,

    #[error("invalid tolerance")]
    BadTolerance,
}
pub type TensorResult<T> = Result<T, TensorError>;

/// Absolute and relative comparison thresholds.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs_eps: f64,
    pub rel_eps: f64,
}

impl Default for Tolerance {
    fn default() -> Self { Self { abs_eps: 1e-9, rel_eps: 1e-9 } }
}

impl Tolerance {
    pub fn new(abs_eps: f64, rel_eps: f64) -> TensorResult<Self> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if ok(abs_eps) && ok(rel_eps) {
            Ok(Self { abs_eps, rel_eps })
        } else {
            Err(TensorError::BadTolerance)
        }
    }

    /// Same value for both thresholds.
    pub fn uniform(eps: f64) -> TensorResult<Self> { Self::new(eps, eps) }

    /// Admissible error for quantities of magnitude `scale`.
    pub fn bound(&self, scale: f64) -> f64 { self.abs_eps + self.rel_eps * scale }

    pub fn is_zero(&self, x: f64, scale: f64) -> bool { x.abs() <= self.bound(scale) }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorJson", into = "TensorJson")]
pub struct Tensor {
    in_arity: usize,
    out_arity: usize,
    dim: usize,
    entries: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct TensorJson {
    #[serde(rename = "in")]
    in_arity: usize,
    #[serde(rename = "out")]
    out_arity: usize,
    dim: usize,
    entries: Vec<[f64; 2]>,
}

impl TryFrom<TensorJson> for Tensor {
    type Error = TensorError;

    fn try_from(j: TensorJson) -> TensorResult<Self> {
        let entries = j.entries.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        Tensor::new(j.in_arity, j.out_arity, j.dim, entries)
    }
}

impl From<Tensor> for TensorJson {
    fn from(t: Tensor) -> Self {
        Self {
            in_arity: t.in_arity,
            out_arity: t.out_arity,
            dim: t.dim,
            entries: t.entries.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

/// Big-endian digits of `idx` in base `d`, `n` digits long.
pub fn digits(mut idx: usize, n: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for k in (0..n).rev() {
        out[k] = idx % d;
        idx /= d;
    }
    out
}

/// Inverse of [`digits`].
pub fn undigits(ds: &[usize], d: usize) -> usize {
    ds.iter().fold(0, |acc, x| acc * d + x)
}

impl Tensor {
    pub fn new(in_arity: usize, out_arity: usize, dim: usize, entries: Vec<C64>)
        -> TensorResult<Self>
    {
        if dim == 0 { return Err(TensorError::ZeroDim); }
        let expected = dim.pow((in_arity + out_arity) as u32);
        if entries.len() != expected {
            return Err(TensorError::BadLength { got: entries.len(), expected });
        }
        Ok(Self { in_arity, out_arity, dim, entries })
    }

    pub fn zeros(in_arity: usize, out_arity: usize, dim: usize) -> Self {
        let n = dim.pow((in_arity + out_arity) as u32);
        Self { in_arity, out_arity, dim, entries: vec![ZERO; n] }
    }

    /// Identity on `legs` wires.
    pub fn identity(legs: usize, dim: usize) -> Self {
        let n = dim.pow(legs as u32);
        let mut t = Self::zeros(legs, legs, dim);
        for k in 0..n { t.entries[k * n + k] = ONE; }
        t
    }

    pub fn scalar(c: C64) -> Self {
        Self { in_arity: 0, out_arity: 0, dim: 2, entries: vec![c] }
    }

    /// Scalar with an explicit leg dimension, so it composes with other tensors
    /// of that dimension.
    pub fn scalar_dim(c: C64, dim: usize) -> Self {
        Self { in_arity: 0, out_arity: 0, dim, entries: vec![c] }
    }

    /// Computational basis ket on qubits, e.g. `ket(&[0, 1])` is |01>.
    pub fn ket(bits: &[usize]) -> Self { Self::basis_ket(bits, 2) }

    pub fn bra(bits: &[usize]) -> Self { Self::ket(bits).transpose() }

    pub fn basis_ket(digits_: &[usize], dim: usize) -> Self {
        let mut t = Self::zeros(0, digits_.len(), dim);
        t.entries[undigits(digits_, dim)] = ONE;
        t
    }

    /// Qubit state from its `2^N` amplitudes.
    pub fn state(amplitudes: Vec<C64>) -> TensorResult<Self> {
        let n = amplitudes.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(TensorError::ShapeMismatch(format!("{n} amplitudes")));
        }
        Self::new(0, n.trailing_zeros() as usize, 2, amplitudes)
    }

    /// Qubit effect from its `2^N` coefficients.
    pub fn effect(coeffs: Vec<C64>) -> TensorResult<Self> {
        Ok(Self::state(coeffs)?.transpose())
    }

    /// Single-qubit map from its matrix rows `[[a, b], [c, d]]`.
    pub fn matrix2(m: [[C64; 2]; 2]) -> Self {
        Self { in_arity: 1, out_arity: 1, dim: 2, entries: vec![m[0][0], m[0][1], m[1][0], m[1][1]] }
    }

    pub fn in_arity(&self) -> usize { self.in_arity }
    pub fn out_arity(&self) -> usize { self.out_arity }
    pub fn dim(&self) -> usize { self.dim }
    pub fn entries(&self) -> &[C64] { &self.entries }
    pub fn into_entries(self) -> Vec<C64> { self.entries }
    pub fn rows(&self) -> usize { self.dim.pow(self.out_arity as u32) }
    pub fn cols(&self) -> usize { self.dim.pow(self.in_arity as u32) }
    pub fn legs(&self) -> usize { self.in_arity + self.out_arity }
    pub fn is_scalar(&self) -> bool { self.legs() == 0 }

    pub fn get(&self, row: usize, col: usize) -> C64 { self.entries[row * self.cols() + col] }

    /// Value of a scalar, or the single entry of any one-entry tensor.
    pub fn scalar_value(&self) -> Option<C64> {
        (self.entries.len() == 1).then(|| self.entries[0])
    }

    /// 2x2 matrix of a single-qubit map.
    pub fn as_matrix2(&self) -> Option<[[C64; 2]; 2]> {
        (self.in_arity == 1 && self.out_arity == 1 && self.dim == 2).then(|| {
            [[self.entries[0], self.entries[1]], [self.entries[2], self.entries[3]]]
        })
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.in_arity == other.in_arity
            && self.out_arity == other.out_arity
            && self.dim == other.dim
    }

    fn check_shape(&self, other: &Self) -> TensorResult<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(TensorError::ShapeMismatch(format!(
                "{}->{} (d={}) vs {}->{} (d={})",
                self.in_arity, self.out_arity, self.dim,
                other.in_arity, other.out_arity, other.dim,
            )))
        }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 { self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() }

    pub fn max_abs(&self) -> f64 { self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max) }

    pub fn scale(&self, c: C64) -> Self {
        let mut t = self.clone();
        t.entries.iter_mut().for_each(|z| *z *= c);
        t
    }

    pub fn scale_re(&self, c: f64) -> Self { self.scale(C64::new(c, 0.0)) }

    pub fn add(&self, other: &Self) -> TensorResult<Self> {
        self.check_shape(other)?;
        let mut t = self.clone();
        t.entries.iter_mut().zip(&other.entries).for_each(|(a, b)| *a += b);
        Ok(t)
    }

    pub fn sub(&self, other: &Self) -> TensorResult<Self> {
        self.add(&other.scale_re(-1.0))
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> TensorResult<f64> {
        self.check_shape(other)?;
        Ok(self.entries.iter().zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Entrywise difference scaled by the larger magnitude (floored at 1).
    pub fn rel_diff(&self, other: &Self) -> TensorResult<f64> {
        let d = self.max_abs_diff(other)?;
        Ok(d / self.max_abs().max(other.max_abs()).max(1.0))
    }

    pub fn approx_eq(&self, other: &Self, tol: Tolerance) -> bool {
        match self.max_abs_diff(other) {
            Ok(d) => d <= tol.bound(self.max_abs().max(other.max_abs())),
            Err(_) => false,
        }
    }

    /// Hermitian inner product `<self|other>` over all entries.
    pub fn inner(&self, other: &Self) -> TensorResult<C64> {
        self.check_shape(other)?;
        Ok(self.entries.iter().zip(&other.entries).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn conj(&self) -> Self {
        let mut t = self.clone();
        t.entries.iter_mut().for_each(|z| *z = z.conj());
        t
    }

    /// Matrix transpose: inputs become outputs and vice versa (no conjugation).
    pub fn transpose(&self) -> Self {
        let (r, c) = (self.rows(), self.cols());
        let mut entries = vec![ZERO; r * c];
        for i in 0..r {
            for j in 0..c { entries[j * r + i] = self.entries[i * c + j]; }
        }
        Self { in_arity: self.out_arity, out_arity: self.in_arity, dim: self.dim, entries }
    }

    pub fn adjoint(&self) -> Self { self.transpose().conj() }

    /// Same entries viewed with a different in/out split. Since the layout is
    /// output-major, `reinterpret(0, n + m)` turns an `n -> m` map into the
    /// state whose legs are the outputs followed by the inputs.
    pub fn reinterpret(&self, in_arity: usize, out_arity: usize) -> TensorResult<Self> {
        if in_arity + out_arity != self.legs() {
            return Err(TensorError::ArityMismatch(in_arity + out_arity, self.legs()));
        }
        Ok(Self { in_arity, out_arity, dim: self.dim, entries: self.entries.clone() })
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows(), self.cols(), &self.entries)
    }

    pub fn from_dmatrix(in_arity: usize, out_arity: usize, dim: usize, m: &DMatrix<C64>)
        -> TensorResult<Self>
    {
        let (r, c) = (dim.pow(out_arity as u32), dim.pow(in_arity as u32));
        if m.nrows() != r || m.ncols() != c {
            return Err(TensorError::ShapeMismatch(format!(
                "{}x{} matrix for a {in_arity}->{out_arity} tensor", m.nrows(), m.ncols())));
        }
        let mut entries = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c { entries.push(m[(i, j)]); }
        }
        Self::new(in_arity, out_arity, dim, entries)
    }

    /// Inverse of a square map.
    pub fn inverse(&self) -> TensorResult<Self> {
        if self.in_arity != self.out_arity {
            return Err(TensorError::ArityMismatch(self.out_arity, self.in_arity));
        }
        let m = self.to_dmatrix().try_inverse().ok_or(TensorError::Singular)?;
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(TensorError::Singular);
        }
        Self::from_dmatrix(self.in_arity, self.out_arity, self.dim, &m)
    }

    /// `n`-fold tensor power; the empty power is the scalar 1.
    pub fn power(&self, n: usize) -> Self {
        let mut acc = Self::scalar_dim(ONE, self.dim);
        for _ in 0..n { acc = kron(&acc, self).expect("same dim"); }
        acc
    }
}

/// Horizontal composition `a ⊗ b`.
pub fn kron(a: &Tensor, b: &Tensor) -> TensorResult<Tensor> {
    if a.dim != b.dim { return Err(TensorError::DimMismatch(a.dim, b.dim)); }
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let (rows, cols) = (ar * br, ac * bc);
    let mut entries = vec![ZERO; rows * cols];
    for i in 0..ar {
        for j in 0..ac {
            let x = a.entries[i * ac + j];
            if x == ZERO { continue; }
            for k in 0..br {
                for l in 0..bc {
                    entries[(i * br + k) * cols + j * bc + l] = x * b.entries[k * bc + l];
                }
            }
        }
    }
    Tensor::new(a.in_arity + b.in_arity, a.out_arity + b.out_arity, a.dim, entries)
}

/// Tensor product of a list, left to right.
pub fn kron_all<'a, I>(ts: I, dim: usize) -> TensorResult<Tensor>
where I: IntoIterator<Item = &'a Tensor>
{
    ts.into_iter().try_fold(Tensor::scalar_dim(ONE, dim), |acc, t| kron(&acc, t))
}

/// Vertical composition `g ∘ f`.
pub fn compose(g: &Tensor, f: &Tensor) -> TensorResult<Tensor> {
    if g.dim != f.dim { return Err(TensorError::DimMismatch(g.dim, f.dim)); }
    if f.out_arity != g.in_arity {
        return Err(TensorError::ArityMismatch(f.out_arity, g.in_arity));
    }
    let (n, k, m) = (g.rows(), g.cols(), f.cols());
    let mut entries = vec![ZERO; n * m];
    for i in 0..n {
        for l in 0..k {
            let x = g.entries[i * k + l];
            if x == ZERO { continue; }
            let frow = &f.entries[l * m..(l + 1) * m];
            let out = &mut entries[i * m..(i + 1) * m];
            out.iter_mut().zip(frow).for_each(|(o, y)| *o += x * y);
        }
    }
    Tensor::new(f.in_arity, g.out_arity, g.dim, entries)
}

/// `(1 ⊗ f) ∘ t`: applies `f` to the last `f.in_arity()` output legs of `t`
/// without forming the identity factor.
pub fn apply_trailing(f: &Tensor, t: &Tensor) -> TensorResult<Tensor> {
    if f.dim != t.dim { return Err(TensorError::DimMismatch(f.dim, t.dim)); }
    if f.in_arity > t.out_arity { return Err(TensorError::ArityMismatch(f.in_arity, t.out_arity)); }
    let d = t.dim;
    let keep = d.pow((t.out_arity - f.in_arity) as u32);
    let (fi, fo, cols) = (f.cols(), f.rows(), t.cols());
    let mut out = Tensor::zeros(t.in_arity, t.out_arity - f.in_arity + f.out_arity, d);
    for k in 0..keep {
        for a in 0..fi {
            let src = &t.entries[(k * fi + a) * cols..(k * fi + a + 1) * cols];
            if src.iter().all(|z| *z == ZERO) { continue; }
            for b in 0..fo {
                let w = f.entries[b * fi + a];
                if w == ZERO { continue; }
                let dst = &mut out.entries[(k * fo + b) * cols..(k * fo + b + 1) * cols];
                for (x, y) in dst.iter_mut().zip(src) { *x += w * y; }
            }
        }
    }
    Ok(out)
}

/// Composes a chain applied right to left: `compose_all(&[h, g, f]) = h ∘ g ∘ f`.
pub fn compose_all(ts: &[&Tensor]) -> TensorResult<Tensor> {
    let (last, rest) = ts.split_last().ok_or(TensorError::Zero)?;
    rest.iter().rev().try_fold((*last).clone(), |acc, t| compose(t, &acc))
}

fn check_perm(p: &[usize], n: usize) -> TensorResult<()> {
    let mut seen = vec![false; n];
    if p.len() != n { return Err(TensorError::BadPermutation(p.to_vec())); }
    for &k in p {
        if k >= n || seen[k] { return Err(TensorError::BadPermutation(p.to_vec())); }
        seen[k] = true;
    }
    Ok(())
}

/// Reorders legs: new output leg `k` is old output leg `perm_out[k]`, and
/// likewise for inputs.
pub fn swap_legs(t: &Tensor, perm_in: &[usize], perm_out: &[usize]) -> TensorResult<Tensor> {
    check_perm(perm_in, t.in_arity)?;
    check_perm(perm_out, t.out_arity)?;
    let (d, m, n) = (t.dim, t.out_arity, t.in_arity);
    let mut out = Tensor::zeros(n, m, d);
    let cols = t.cols();
    for r in 0..t.rows() {
        let rd = digits(r, m, d);
        let new_r: Vec<usize> = perm_out.iter().map(|&k| rd[k]).collect();
        let nr = undigits(&new_r, d);
        for c in 0..cols {
            let cd = digits(c, n, d);
            let new_c: Vec<usize> = perm_in.iter().map(|&k| cd[k]).collect();
            out.entries[nr * cols + undigits(&new_c, d)] = t.entries[r * cols + c];
        }
    }
    Ok(out)
}

/// Inverse of a permutation.
pub fn invert_perm(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (k, &x) in p.iter().enumerate() { inv[x] = k; }
    inv
}

/// Returns `λ` with `a = λ b` when the two are parallel.
///
/// The Cauchy–Schwarz gap `<a,a><b,b> - |<b,a>|^2` equals
/// `<b,b> · ||a - λ b||^2`, so the test is done on the residual norm.
/// Two zero tensors give `λ = 1`.
pub fn proportional(a: &Tensor, b: &Tensor, tol: Tolerance) -> Option<C64> {
    if !a.same_shape(b) { return None; }
    let (na, nb) = (a.norm(), b.norm());
    let a_zero = na <= tol.abs_eps;
    let b_zero = nb <= tol.abs_eps;
    match (a_zero, b_zero) {
        (true, true) => return Some(ONE),
        (true, false) | (false, true) => return None,
        _ => {}
    }
    let lambda = b.inner(a).ok()? / (nb * nb);
    if lambda == ZERO { return None; }
    let resid = a.sub(&b.scale(lambda)).ok()?.norm();
    (resid <= tol.bound(na)).then_some(lambda)
}

/// Residual `||a - λ b|| / ||a||` of the best projective fit, for reporting.
pub fn proportionality_residual(a: &Tensor, b: &Tensor) -> f64 {
    if !a.same_shape(b) { return f64::INFINITY; }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 && nb == 0.0 { return 0.0; }
    if na == 0.0 || nb == 0.0 { return f64::INFINITY; }
    let lambda = b.inner(a).unwrap() / (nb * nb);
    a.sub(&b.scale(lambda)).unwrap().norm() / na
}

/// Orthonormal spanning rows of the `2 x 2^(N-1)` reshape of a qubit state
/// (first leg as the row index), keeping singular values above tolerance.
pub fn right_singular_space(t: &Tensor, tol: Tolerance) -> TensorResult<Vec<Vec<C64>>> {
    if t.dim != 2 || t.legs() == 0 {
        return Err(TensorError::ShapeMismatch("need a qubit tensor with legs".into()));
    }
    if t.norm() <= tol.abs_eps { return Err(TensorError::Zero); }
    let cols = t.entries.len() / 2;
    let m = DMatrix::from_row_slice(2, cols, &t.entries);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    let mut out = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > tol.bound(smax) {
            out.push(vt.row(k).iter().copied().collect());
        }
    }
    Ok(out)
}

/// Contracts output leg `out_leg` with input leg `in_leg` over a basis.
pub fn standard_partial_trace(m: &Tensor, out_leg: usize, in_leg: usize) -> TensorResult<Tensor> {
    if out_leg >= m.out_arity { return Err(TensorError::BadLeg(out_leg)); }
    if in_leg >= m.in_arity { return Err(TensorError::BadLeg(in_leg)); }
    let d = m.dim;
    let (no, ni) = (m.out_arity - 1, m.in_arity - 1);
    let mut out = Tensor::zeros(ni, no, d);
    let cols = out.cols();
    for r in 0..out.rows() {
        let rd = digits(r, no, d);
        for c in 0..cols {
            let cd = digits(c, ni, d);
            let mut acc = ZERO;
            for k in 0..d {
                let mut fr = rd.clone();
                fr.insert(out_leg, k);
                let mut fc = cd.clone();
                fc.insert(in_leg, k);
                acc += m.get(undigits(&fr, d), undigits(&fc, d));
            }
            out.entries[r * cols + c] = acc;
        }
    }
    Ok(out)
}

/// Trace pairing the last output leg with the last input leg.
pub fn trace_right(m: &Tensor) -> TensorResult<Tensor> {
    if m.out_arity == 0 { return Err(TensorError::BadLeg(0)); }
    if m.in_arity == 0 { return Err(TensorError::BadLeg(0)); }
    standard_partial_trace(m, m.out_arity - 1, m.in_arity - 1)
}

/// Full trace of a square map.
pub fn trace(m: &Tensor) -> TensorResult<C64> {
    if m.in_arity != m.out_arity {
        return Err(TensorError::ArityMismatch(m.out_arity, m.in_arity));
    }
    Ok((0..m.rows()).map(|k| m.get(k, k)).sum())
}

/// Builds a complex number; short alias used throughout the crate.
pub fn c(re: f64, im: f64) -> C64 { C64::new(re, im) }

/// Real complex number.
pub fn r(re: f64) -> C64 { C64::new(re, 0.0) }
