//! Minimum eigenpairs against an independent inertia-bisection oracle.

use alas_core::step::{min_eigenpair, EIG_TOL};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Number of eigenvalues of `h` below `t`: negative pivots of an unpivoted
// elimination of `h − tI` (Sylvester's law of inertia).
fn count_below(h: &DMatrix<f64>, t: f64) -> usize {
    let n = h.nrows();
    let mut a = h.clone() - DMatrix::identity(n, n) * t;
    let mut neg = 0;
    for k in 0..n {
        let mut piv = a[(k, k)];
        if piv == 0.0 {
            piv = -1e-300;
        }
        if piv < 0.0 {
            neg += 1;
        }
        for i in k + 1..n {
            let f = a[(i, k)] / piv;
            for j in k + 1..n {
                a[(i, j)] -= f * a[(k, j)];
            }
        }
    }
    neg
}

fn oracle_min_eigenvalue(h: &DMatrix<f64>) -> f64 {
    let r = h.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
    let (mut lo, mut hi) = (-r, r);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(h, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn gauss_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[(i, k)].abs().total_cmp(&m[(j, k)].abs())).unwrap();
        m.swap_rows(k, p);
        x.swap_rows(k, p);
        for i in k + 1..n {
            let f = m[(i, k)] / m[(k, k)];
            for j in k..n {
                m[(i, j)] -= f * m[(k, j)];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[(k, j)] * x[j]).sum();
        x[k] = (x[k] - s) / m[(k, k)];
    }
    x
}

fn oracle_eigenvector(h: &DMatrix<f64>, lambda: f64) -> DVector<f64> {
    let n = h.nrows();
    let shifted = h - DMatrix::identity(n, n) * (lambda - 1e-9);
    let mut v = DVector::from_element(n, 1.0);
    for _ in 0..5 {
        v = gauss_solve(&shifted, &v);
        v /= v.norm();
    }
    if let Some(first) = v.iter().copied().find(|c| c.abs() > 1e-12) {
        if first < 0.0 {
            v.neg_mut();
        }
    }
    v
}

#[test]
fn random_six_by_six_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let a = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-2.0..2.0));
        let h = (&a + a.transpose()) * 0.5;
        let (l, v) = min_eigenpair(&h, EIG_TOL).unwrap();
        let lo = oracle_min_eigenvalue(&h);
        assert!((l - lo).abs() <= 1e-8, "λ {l} vs oracle {lo}");
        let vo = oracle_eigenvector(&h, lo);
        assert!((&v - &vo).amax() <= 1e-8, "eigenvector mismatch\n{v}\n{vo}");
        assert!((v.norm() - 1.0).abs() <= 1e-12);
        assert!((&h * &v - &v * l).norm() <= EIG_TOL * h.norm().max(1.0));
    }
}

#[test]
fn sign_convention_on_repeated_runs() {
    let h = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
    let (_, v1) = min_eigenpair(&h, EIG_TOL).unwrap();
    let (_, v2) = min_eigenpair(&(h.clone() * 1.0), EIG_TOL).unwrap();
    assert_eq!(v1, v2);
    assert!(v1[0] > 0.0);
}
