//! Synthetic regression data labelled by a random tanh "teacher" network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{AlasError, Result};
use crate::objectives::dataset::Dataset;
use crate::objectives::mlp::MlpSpec;

/// How to read the spread parameter of the teacher's weight distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScale {
    StdDev,
    Variance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherSpec {
    /// Widths from input to output, output width 1.
    pub layers: Vec<usize>,
    pub n: usize,
    pub seed: u64,
    /// Spread of the zero-mean normal used for weights and biases.
    pub spread: f64,
    pub scale: WeightScale,
    /// Fixed teacher parameters instead of random ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl TeacherSpec {
    pub fn new(layers: Vec<usize>, n: usize, seed: u64) -> Self {
        Self {
            layers,
            n,
            seed,
            spread: 3.0,
            scale: WeightScale::StdDev,
            weights: None,
        }
    }

    /// Two inputs, hidden layers of four and two units.
    pub fn nn1(n: usize, seed: u64) -> Self {
        Self::new(vec![2, 4, 2, 1], n, seed)
    }

    /// Four inputs and three hidden layers; widths default to (4, 4, 4).
    pub fn nn2(n: usize, seed: u64, hidden: Option<[usize; 3]>) -> Self {
        let [a, b, c] = hidden.unwrap_or([4, 4, 4]);
        Self::new(vec![4, a, b, c, 1], n, seed)
    }

    pub fn std_dev(&self) -> f64 {
        match self.scale {
            WeightScale::StdDev => self.spread,
            WeightScale::Variance => self.spread.sqrt(),
        }
    }

    pub fn label(&self) -> String {
        let arch: Vec<String> = self.layers.iter().map(|w| w.to_string()).collect();
        format!(
            "teacher:{}:n={}:seed={}:{}={}",
            arch.join("-"),
            self.n,
            self.seed,
            match self.scale {
                WeightScale::StdDev => "std",
                WeightScale::Variance => "var",
            },
            self.spread
        )
    }
}

/// Inputs uniform on `(0,1)^d`, labels from the teacher network.
///
/// Weights and inputs come from separate streams of the seeded generator, so
/// growing `n` appends points without changing the existing ones.
pub fn teacher_generate(spec: &TeacherSpec) -> Result<Dataset> {
    let arch = MlpSpec::unchecked(spec.layers.clone())?;
    if spec.n == 0 {
        return Err(AlasError::invalid("teacher dataset needs at least one point"));
    }
    if !(spec.spread >= 0.0 && spec.spread.is_finite()) {
        return Err(AlasError::invalid("teacher weight spread must be nonnegative"));
    }
    let weights = match &spec.weights {
        Some(w) if w.len() != arch.num_params() => {
            return Err(AlasError::DimensionMismatch {
                expected: arch.num_params(),
                got: w.len(),
            })
        }
        Some(w) => w.clone(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(1);
            let normal = Normal::new(0.0, spec.std_dev()).map_err(|e| AlasError::invalid(e.to_string()))?;
            (0..arch.num_params()).map(|_| normal.sample(&mut rng)).collect()
        }
    };
    let d = arch.input_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(2);
    let mut features = Vec::with_capacity(spec.n * d);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let x: Vec<f64> = (0..d).map(|_| rng.sample(Open01)).collect();
        labels.push(arch.output(&weights, &x));
        features.extend_from_slice(&x);
    }
    Dataset::new(features, labels, d, spec.label())
}
