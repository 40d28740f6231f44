//! Small dense helpers: 2x2 algebra, quadratic forms, nullspaces, least squares.

use nalgebra::{ DMatrix, DVector };
use num_complex::Complex64 as C64;
use crate::tensor::{ Tolerance, ONE, ZERO };

pub type M2 = [[C64; 2]; 2];

pub fn det2(m: &M2) -> C64 { m[0][0] * m[1][1] - m[0][1] * m[1][0] }

pub fn inv2(m: &M2) -> Option<M2> {
    let d = det2(m);
    let scale = m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    if d.norm() <= 1e-300 || d.norm() <= 1e-14 * scale * scale { return None; }
    Some([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

pub fn mul2(a: &M2, b: &M2) -> M2 {
    let mut o = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 { o[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j]; }
    }
    o
}

pub fn apply2(m: &M2, v: [C64; 2]) -> [C64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Matrix with the given columns.
pub fn from_cols(u: [C64; 2], v: [C64; 2]) -> M2 { [[u[0], v[0]], [u[1], v[1]]] }

pub fn norm2(v: [C64; 2]) -> f64 { (v[0].norm_sqr() + v[1].norm_sqr()).sqrt() }

/// Orthogonal complement `(-conj v1, conj v0)` of a 2-vector.
pub fn perp(v: [C64; 2]) -> [C64; 2] { [-v[1].conj(), v[0].conj()] }

/// Unit vector with its largest component made real and positive.
pub fn phase_normalize(v: [C64; 2]) -> [C64; 2] {
    let n = norm2(v);
    let k = if v[0].norm() >= v[1].norm() - 1e-12 { 0 } else { 1 };
    let ph = v[k] / v[k].norm();
    [v[0] / (ph * n), v[1] / (ph * n)]
}

/// Projective roots `(x0, x1)` of `a x0^2 + b x0 x1 + c x1^2`, with
/// multiplicity. `None` when the form vanishes identically.
pub fn projective_roots(a: C64, b: C64, c: C64, tol: Tolerance) -> Option<Vec<[C64; 2]>> {
    let scale = a.norm().max(b.norm()).max(c.norm());
    if scale <= tol.abs_eps { return None; }
    if a.norm() <= 1e-14 * scale {
        // x1 divides the form
        return Some(vec![[ONE, ZERO], unit2([-c, b])]);
    }
    let disc = (b * b - 4.0 * a * c).sqrt();
    // choose the sign that avoids cancellation
    let q = if (b.conj() * disc).re >= 0.0 { -(b + disc) / 2.0 } else { -(b - disc) / 2.0 };
    if q.norm() <= 1e-300 {
        return Some(vec![[ZERO, ONE], [ZERO, ONE]]);
    }
    // roots t = q / a and t = c / q of a t^2 + b t + c, written projectively
    Some(vec![unit2([q, a]), unit2([c, q])])
}

fn unit2(v: [C64; 2]) -> [C64; 2] {
    let n = norm2(v);
    [v[0] / n, v[1] / n]
}

/// Eigenvectors of a 2x2 matrix. A multiple of the identity yields the
/// standard basis; a Jordan block yields its single eigenvector.
pub fn eigvecs2(m: &M2) -> Vec<[C64; 2]> {
    let scale = m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let tr = m[0][0] + m[1][1];
    let det = det2(m);
    let disc = (tr * tr - 4.0 * det).sqrt();
    let lams = [(tr + disc) / 2.0, (tr - disc) / 2.0];
    let mut out: Vec<[C64; 2]> = Vec::new();
    for lam in lams {
        // rows of (M - lam I); a kernel vector is orthogonal to the larger row
        let r0 = [m[0][0] - lam, m[0][1]];
        let r1 = [m[1][0], m[1][1] - lam];
        let row = if norm2(r0) >= norm2(r1) { r0 } else { r1 };
        if norm2(row) <= 1e-12 * scale {
            return vec![[ONE, ZERO], [ZERO, ONE]];
        }
        let v = phase_normalize([-row[1], row[0]]);
        if !out.iter().any(|w| parallel2(*w, v, 1e-8)) { out.push(v); }
    }
    out
}

/// Whether two 2-vectors are projectively equal.
pub fn parallel2(a: [C64; 2], b: [C64; 2], eps: f64) -> bool {
    let cross = a[0] * b[1] - a[1] * b[0];
    cross.norm() <= eps * norm2(a) * norm2(b)
}

/// Orthonormal basis of the nullspace of `m`, using singular values below
/// `tol` relative to the largest.
pub fn nullspace(m: &DMatrix<C64>, tol: Tolerance) -> Vec<DVector<C64>> {
    let (r, c) = m.shape();
    let padded = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    let mut out = Vec::new();
    for k in 0..c {
        let s = svd.singular_values.get(k).copied().unwrap_or(0.0);
        if s <= tol.bound(smax) {
            out.push(vt.row(k).adjoint());
        }
    }
    out
}

/// Numerical rank with a relative threshold.
pub fn rank(m: &DMatrix<C64>, tol: Tolerance) -> usize {
    if m.is_empty() { return 0; }
    let s = m.clone().svd(false, false).singular_values;
    let smax = s.max();
    if smax <= tol.abs_eps { return 0; }
    s.iter().filter(|x| **x > tol.bound(smax)).count()
}

/// Least-squares solution of `a x = b` and its residual norm.
pub fn lstsq(a: &DMatrix<C64>, b: &DVector<C64>) -> Option<(DVector<C64>, f64)> {
    let svd = a.clone().svd(true, true);
    let x = svd.solve(b, 1e-13).ok()?;
    let res = (a * &x - b).norm();
    Some((x, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{ c, r };

    #[test]
    fn roots_of_forms() {
        let tol = Tolerance::default();
        // x0^2 - x1^2 -> (1, 1), (-1, 1)
        let rs = projective_roots(r(1.), ZERO, r(-1.), tol).unwrap();
        for x in &rs {
            let v = x[0] * x[0] - x[1] * x[1];
            assert!(v.norm() < 1e-12);
        }
        // x0 x1 -> (1, 0) and (0, 1)
        let rs = projective_roots(ZERO, r(1.), ZERO, tol).unwrap();
        assert!(rs.iter().any(|x| parallel2(*x, [ONE, ZERO], 1e-12)));
        assert!(rs.iter().any(|x| parallel2(*x, [ZERO, ONE], 1e-12)));
        assert!(projective_roots(ZERO, ZERO, ZERO, tol).is_none());
        // complex coefficients
        let (a, b, cc) = (c(1., 2.), c(-0.5, 0.3), c(2., -1.));
        for x in projective_roots(a, b, cc, tol).unwrap() {
            let v = a * x[0] * x[0] + b * x[0] * x[1] + cc * x[1] * x[1];
            assert!(v.norm() < 1e-12);
        }
    }

    #[test]
    fn eigen_cases() {
        let jordan = [[r(2.), r(1.)], [ZERO, r(2.)]];
        let v = eigvecs2(&jordan);
        assert_eq!(v.len(), 1);
        assert!(parallel2(v[0], [ONE, ZERO], 1e-12));
        let x = [[ZERO, ONE], [ONE, ZERO]];
        let v = eigvecs2(&x);
        assert_eq!(v.len(), 2);
        for e in v {
            let mv = apply2(&x, e);
            assert!(parallel2(mv, e, 1e-12));
        }
        assert_eq!(eigvecs2(&[[ONE, ZERO], [ZERO, ONE]]).len(), 2);
    }

    #[test]
    fn nullspace_and_rank() {
        let m = DMatrix::from_row_slice(1, 3, &[r(1.), r(1.), ZERO]);
        let ns = nullspace(&m, Tolerance::default());
        assert_eq!(ns.len(), 2);
        for v in ns { assert!((&m * v).norm() < 1e-12); }
        assert_eq!(rank(&m, Tolerance::default()), 1);
    }

    #[test]
    fn inverse2() {
        let m = [[r(1.), r(2.)], [r(3.), r(4.)]];
        let i = inv2(&m).unwrap();
        let p = mul2(&m, &i);
        assert!((p[0][0] - ONE).norm() < 1e-12 && p[0][1].norm() < 1e-12);
        assert!(inv2(&[[ONE, ONE], [ONE, ONE]]).is_none());
    }
}
