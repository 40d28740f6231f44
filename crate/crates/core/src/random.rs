//! Seeded sampling of complex numbers, states and local maps.

use num_complex::Complex64 as C64;
use rand::{ Rng, SeedableRng };
use rand_chacha::ChaCha8Rng;
use crate::{ linalg::det2, tensor::Tensor };

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng { ChaCha8Rng::seed_from_u64(seed) }

/// Standard complex Gaussian via Box–Muller.
pub fn gaussian(rng: &mut impl Rng) -> C64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    let rad = (-2.0 * u1.ln()).sqrt();
    let th = std::f64::consts::TAU * u2;
    C64::new(rad * th.cos(), rad * th.sin()) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_vec(rng: &mut impl Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| gaussian(rng)).collect()
}

/// Random qubit state on `n` legs.
pub fn state(rng: &mut impl Rng, n: usize) -> Tensor {
    Tensor::state(gaussian_vec(rng, 1 << n)).expect("power of two")
}

/// Random single-qubit effect.
pub fn effect(rng: &mut impl Rng) -> Tensor {
    Tensor::effect(gaussian_vec(rng, 2)).expect("two entries")
}

/// Random 2x2 map with Frobenius norm ~2 and `|det| >= min_det`.
pub fn invertible(rng: &mut impl Rng, min_det: f64) -> Tensor {
    loop {
        let v = gaussian_vec(rng, 4);
        let m = [[v[0], v[1]], [v[2], v[3]]];
        if det2(&m).norm() >= min_det { return Tensor::matrix2(m); }
    }
}

/// Random 2x2 unitary (QR of a Gaussian matrix).
pub fn unitary(rng: &mut impl Rng) -> Tensor {
    let v = gaussian_vec(rng, 4);
    let m = nalgebra::DMatrix::from_row_slice(2, 2, &v);
    let q = m.qr().q();
    Tensor::from_dmatrix(1, 1, 2, &q).expect("2x2")
}
