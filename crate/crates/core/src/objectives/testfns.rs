//! Test families with known smoothness constants.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::problem::{ComponentEval, FiniteSumProblem};

/// Separable quadratic-plus-cubic components
/// `f_i(x) = Σ_j a_ij x_j + ½ b_ij x_j² + c_ij x_j³` with `|c_ij| ≤ 1`.
///
/// Component Hessians are `diag(b_ij + 6 c_ij x_j)`, so every component and the
/// average have Hessian Lipschitz constant at most [`CubicFamily::L_H`].
#[derive(Debug, Clone)]
pub struct CubicFamily {
    a: Vec<DVector<f64>>,
    b: Vec<DVector<f64>>,
    c: Vec<DVector<f64>>,
}

impl CubicFamily {
    pub const L_H: f64 = 6.0;

    /// Coefficients `a, b` uniform on `[−1, 1]` and `c` uniform on `[−1, 1]`.
    pub fn random(seed: u64, components: usize, n: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng| DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
        let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..components {
            a.push(draw(&mut rng));
            b.push(draw(&mut rng));
            c.push(draw(&mut rng));
        }
        Self { a, b, c }
    }
}

impl FiniteSumProblem for CubicFamily {
    fn dim(&self) -> usize {
        self.a[0].len()
    }

    fn num_components(&self) -> usize {
        self.a.len()
    }

    fn evaluate(&self, i: usize, x: &DVector<f64>) -> ComponentEval {
        let (a, b, c) = (&self.a[i], &self.b[i], &self.c[i]);
        let n = x.len();
        let mut value = 0.0;
        let mut gradient = DVector::zeros(n);
        let mut hdiag = DVector::zeros(n);
        for j in 0..n {
            let t = x[j];
            value += a[j] * t + 0.5 * b[j] * t * t + c[j] * t * t * t;
            gradient[j] = a[j] + b[j] * t + 3.0 * c[j] * t * t;
            hdiag[j] = b[j] + 6.0 * c[j] * t;
        }
        ComponentEval {
            value,
            gradient,
            hessian: DMatrix::from_diagonal(&hdiag),
        }
    }
}
