//! Jacobi-preconditioned conjugate gradients for symmetric positive definite
//! operators given as a matrix-vector product.

use crate::scalar::Real;

pub(crate) struct CgOutcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub residual: T,
    pub converged: bool,
}

pub(crate) fn pcg<T: Real>(
    apply: impl Fn(&[T], &mut [T]),
    diag: &[T],
    b: &[T],
    tol: T,
    max_iters: usize,
) -> CgOutcome<T> {
    let n = b.len();
    let dot = |u: &[T], v: &[T]| u.iter().zip(v).fold(T::zero(), |acc, (&a, &c)| acc + a * c);
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![T::zero(); n];
    if bnorm == T::zero() {
        return CgOutcome { x, iterations: 0, residual: T::zero(), converged: true };
    }
    let mut r = b.to_vec();
    let mut z: Vec<T> = r.iter().zip(diag).map(|(&ri, &d)| ri / d).collect();
    let mut p = z.clone();
    let mut ap = vec![T::zero(); n];
    let mut rz = dot(&r, &z);
    let mut rel = T::one();
    for it in 0..max_iters {
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        if rel <= tol {
            return CgOutcome { x, iterations: it + 1, residual: rel, converged: true };
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgOutcome { x, iterations: max_iters, residual: rel, converged: false }
}
