//! Symmetric eigenvalue solvers built on Sturm-sequence bisection.
//!
//! The workhorse is [`tridiagonal_eigenvalues`]: for a symmetric
//! tridiagonal matrix the number of eigenvalues below a shift `x` equals
//! the number of negative pivots in the LDLᵀ factorization of `T - xI`,
//! which the Sturm recurrence computes in O(n) per probe.  Bisecting that
//! count isolates every eigenvalue to a requested tolerance without ever
//! forming vectors, is backward stable, and never misses multiplicities.
//!
//! [`symmetric_eigenvalues_dense`] handles small dense symmetric matrices
//! (used for band matrices and covariance-matrix checks) by Householder
//! reduction to tridiagonal form followed by the same bisection.

use crate::error::{Error, Result};

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`,
/// via the pivot signs of the shifted LDLᵀ factorization.
///
/// `diag` has length `n`, `offdiag` length `n - 1`.  Vanishing pivots are
/// nudged by a tiny relative amount, the standard guard that keeps the
/// count correct to working precision.
#[must_use]
pub fn sturm_count_below(diag: &[f64], offdiag: &[f64], x: f64) -> usize {
    debug_assert_eq!(offdiag.len() + 1, diag.len());
    let mut count = 0usize;
    let mut q = 1.0f64;
    for (i, &d) in diag.iter().enumerate() {
        let b2 = if i == 0 { 0.0 } else { offdiag[i - 1] * offdiag[i - 1] };
        q = (d - x) - b2 / q;
        if q == 0.0 {
            // Pivot breakdown: treat as a tiny negative-free perturbation.
            q = f64::MIN_POSITIVE;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin interval enclosing the whole spectrum.
fn gershgorin_bounds(diag: &[f64], offdiag: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { offdiag[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { offdiag[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    (lo, hi)
}

/// All eigenvalues of a symmetric tridiagonal matrix, ascending.
///
/// Each eigenvalue is isolated by bisection on the Sturm count until the
/// bracket is narrower than `tol`; pass `None` to use the default
/// `1e-12 * max(1, Gershgorin radius)`.
pub fn tridiagonal_eigenvalues(
    diag: &[f64],
    offdiag: &[f64],
    tol: Option<f64>,
) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    if offdiag.len() + 1 != n {
        return Err(Error::LengthMismatch(format!(
            "diag has length {n} but offdiag has length {}",
            offdiag.len()
        )));
    }
    if diag.iter().chain(offdiag).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite matrix entry".into()));
    }
    let (lo, hi) = gershgorin_bounds(diag, offdiag);
    let radius = (hi - lo).max(lo.abs()).max(hi.abs()).max(1.0);
    let tol = match tol {
        Some(t) if t > 0.0 => t,
        Some(_) => return Err(Error::InvalidParameter("tol must be > 0".into())),
        None => 1e-12 * radius,
    };
    // Widen the initial bracket so strict counts are exact at the ends.
    let pad = 1e-9 * radius + tol;
    let mut eigs = Vec::with_capacity(n);
    for j in 0..n {
        // Invariant: count_below(a) <= j < count_below(b).
        let (mut a, mut b) = (lo - pad, hi + pad);
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break; // bracket at floating-point resolution
            }
            if sturm_count_below(diag, offdiag, mid) > j {
                b = mid;
            } else {
                a = mid;
            }
        }
        eigs.push(0.5 * (a + b));
    }
    Ok(eigs)
}

/// Householder reduction of a dense symmetric matrix (row-major, `n * n`)
/// to tridiagonal form; returns `(diag, offdiag)`.
fn householder_tridiagonalize(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let idx = |i: usize, j: usize| i * n + j;
    let mut offdiag = vec![0.0f64; n.saturating_sub(1)];
    for k in 0..n.saturating_sub(2) {
        // Annihilate column k below the first subdiagonal.
        let mut norm2 = 0.0;
        for i in (k + 1)..n {
            norm2 += m[idx(i, k)] * m[idx(i, k)];
        }
        let alpha_abs = norm2.sqrt();
        if alpha_abs == 0.0 {
            offdiag[k] = 0.0;
            continue;
        }
        let pivot = m[idx(k + 1, k)];
        let alpha = if pivot >= 0.0 { -alpha_abs } else { alpha_abs };
        // Householder vector v = x - alpha * e1 over rows k+1..n.
        let mut v = vec![0.0f64; n];
        v[k + 1] = pivot - alpha;
        for i in (k + 2)..n {
            v[i] = m[idx(i, k)];
        }
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            offdiag[k] = alpha;
            continue;
        }
        // p = A v * (2 / v'v); A <- A - v p' - p v' + (v'p)(2/v'v) v v'
        let beta = 2.0 / vtv;
        let mut p = vec![0.0f64; n];
        for i in k..n {
            let mut s = 0.0;
            for j in (k + 1)..n {
                s += m[idx(i, j)] * v[j];
            }
            p[i] = s * beta;
        }
        let vtp: f64 = v.iter().zip(&p).map(|(x, y)| x * y).sum();
        let half = 0.5 * beta * vtp;
        for i in k..n {
            p[i] -= half * v[i];
        }
        for i in k..n {
            for j in k..n {
                m[idx(i, j)] -= v[i] * p[j] + p[i] * v[j];
            }
        }
        offdiag[k] = alpha;
        m[idx(k + 1, k)] = alpha;
        m[idx(k, k + 1)] = alpha;
    }
    if n >= 2 {
        offdiag[n - 2] = m[idx(n - 1, n - 2)];
    }
    let diag = (0..n).map(|i| m[idx(i, i)]).collect();
    (diag, offdiag)
}

/// All eigenvalues of a dense symmetric matrix (row-major, length `n*n`),
/// ascending, via Householder tridiagonalization plus Sturm bisection.
pub fn symmetric_eigenvalues_dense(a: &[f64], n: usize, tol: Option<f64>) -> Result<Vec<f64>> {
    if a.len() != n * n {
        return Err(Error::LengthMismatch(format!(
            "expected {} entries for an {n}x{n} matrix, got {}",
            n * n,
            a.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    let max_asym = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (a[i * n + j] - a[j * n + i]).abs())
        .fold(0.0f64, f64::max);
    let scale = a.iter().fold(0.0f64, |s, &v| s.max(v.abs())).max(1.0);
    if max_asym > 1e-12 * scale {
        return Err(Error::InvalidParameter(format!(
            "matrix is not symmetric: max |a_ij - a_ji| = {max_asym:e}"
        )));
    }
    let (diag, offdiag) = householder_tridiagonalize(a, n);
    tridiagonal_eigenvalues(&diag, &offdiag, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < tol, "{x} vs {y}");
        }
    }

    #[test]
    fn diagonal_matrix_returns_sorted_diagonal() {
        let eig = tridiagonal_eigenvalues(&[3.0, -1.0, 2.0], &[0.0, 0.0], None).unwrap();
        assert_close(&eig, &[-1.0, 2.0, 3.0], 1e-10);
    }

    #[test]
    fn two_by_two_exchange_matrix() {
        let eig = tridiagonal_eigenvalues(&[0.0, 0.0], &[1.0], None).unwrap();
        assert_close(&eig, &[-1.0, 1.0], 1e-10);
    }

    #[test]
    fn free_laplacian_has_cosine_spectrum() {
        // 0/1 tridiagonal of size n: eigenvalues 2 cos(u pi / (n+1)).
        let n = 11;
        let diag = vec![0.0; n];
        let off = vec![1.0; n - 1];
        let eig = tridiagonal_eigenvalues(&diag, &off, Some(1e-13)).unwrap();
        let expect: Vec<f64> = (1..=n)
            .rev()
            .map(|u| 2.0 * (u as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
            .collect();
        assert_close(&eig, &expect, 1e-12);
    }

    #[test]
    fn repeated_eigenvalues_counted_with_multiplicity() {
        // Two decoupled identical 2x2 blocks.
        let diag = vec![1.0, 1.0, 1.0, 1.0];
        let off = vec![2.0, 0.0, 2.0];
        let eig = tridiagonal_eigenvalues(&diag, &off, None).unwrap();
        assert_close(&eig, &[-1.0, -1.0, 3.0, 3.0], 1e-10);
    }

    #[test]
    fn trace_identities_on_random_matrix() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 60;
        let diag: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let off: Vec<f64> = (0..n - 1).map(|_| rng.gen::<f64>() - 0.5).collect();
        let eig = tridiagonal_eigenvalues(&diag, &off, Some(1e-14)).unwrap();
        let tr: f64 = diag.iter().sum();
        let fro2: f64 = diag.iter().map(|d| d * d).sum::<f64>()
            + 2.0 * off.iter().map(|b| b * b).sum::<f64>();
        let s1: f64 = eig.iter().sum();
        let s2: f64 = eig.iter().map(|l| l * l).sum();
        let scale: f64 = eig.iter().map(|l| l.abs()).sum::<f64>() + 1.0;
        assert!((s1 - tr).abs() / scale < 1e-9);
        assert!((s2 - fro2).abs() / scale < 1e-9);
    }

    #[test]
    fn dense_route_agrees_with_tridiagonal_route() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 24;
        let diag: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let off: Vec<f64> = (0..n - 1).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            dense[i * n + i] = diag[i];
            if i + 1 < n {
                dense[i * n + i + 1] = off[i];
                dense[(i + 1) * n + i] = off[i];
            }
        }
        let a = tridiagonal_eigenvalues(&diag, &off, Some(1e-13)).unwrap();
        let b = symmetric_eigenvalues_dense(&dense, n, Some(1e-13)).unwrap();
        assert_close(&a, &b, 1e-10);
    }

    #[test]
    fn dense_rejects_asymmetric_input() {
        let a = vec![1.0, 2.0, 0.0, 1.0];
        assert!(symmetric_eigenvalues_dense(&a, 2, None).is_err());
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(tridiagonal_eigenvalues(&[], &[], None).is_err());
        assert!(tridiagonal_eigenvalues(&[1.0, 2.0], &[], None).is_err());
        assert!(tridiagonal_eigenvalues(&[1.0, f64::NAN], &[0.0], None).is_err());
        assert!(tridiagonal_eigenvalues(&[1.0, 1.0], &[1.0], Some(-1.0)).is_err());
    }
}
