//! Fully connected tanh networks with a per-sample squared-error loss.
//!
//! Parameters are packed layer by layer: the weight matrix of a layer
//! (row-major, `out × in`) followed by its bias vector. Every layer, including
//! the scalar output, applies `tanh`.
//!
//! Gradients come from reverse accumulation. Hessians are assembled one column
//! at a time with the R-operator (forward-over-reverse), then symmetrized.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{AlasError, Result};
use crate::objectives::dataset::Dataset;
use crate::problem::{ComponentEval, FiniteSumProblem};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    layers: Vec<usize>,
    offsets: Vec<usize>,
}

impl MlpSpec {
    /// Dense Hessians are only formed up to this many parameters.
    pub const MAX_PARAMS: usize = 2000;

    /// `layers` lists the widths from input to output; the output width must be 1.
    pub fn new(layers: Vec<usize>) -> Result<Self> {
        Self::unchecked(layers).and_then(|s| {
            if s.num_params() > Self::MAX_PARAMS {
                Err(AlasError::invalid(format!(
                    "network has {} parameters, more than the supported {}",
                    s.num_params(),
                    Self::MAX_PARAMS
                )))
            } else {
                Ok(s)
            }
        })
    }

    // Teacher networks are never differentiated, so they skip the size cap.
    pub(crate) fn unchecked(layers: Vec<usize>) -> Result<Self> {
        if layers.len() < 2 {
            return Err(AlasError::invalid("network needs an input and an output layer"));
        }
        if layers.contains(&0) {
            return Err(AlasError::invalid("layer widths must be positive"));
        }
        if *layers.last().unwrap() != 1 {
            return Err(AlasError::invalid("output layer must have width 1"));
        }
        let mut offsets = vec![0];
        for w in layers.windows(2) {
            offsets.push(offsets.last().unwrap() + (w[0] + 1) * w[1]);
        }
        Ok(Self { layers, offsets })
    }

    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0]
    }

    pub fn num_params(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    // (weights, biases) of layer k, mapping activations k to k + 1.
    fn layer<'a>(&self, w: &'a [f64], k: usize) -> (&'a [f64], &'a [f64]) {
        let (nin, nout) = (self.layers[k], self.layers[k + 1]);
        let off = self.offsets[k];
        (&w[off..off + nin * nout], &w[off + nin * nout..off + nin * nout + nout])
    }

    fn forward(&self, w: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len());
        acts.push(x.to_vec());
        for k in 0..self.depth() {
            let (wm, b) = self.layer(w, k);
            let prev = &acts[k];
            let nin = prev.len();
            let a = (0..self.layers[k + 1])
                .map(|o| {
                    let row = &wm[o * nin..(o + 1) * nin];
                    let mut z = b[o];
                    for (wi, ai) in row.iter().zip(prev) {
                        z += wi * ai;
                    }
                    z.tanh()
                })
                .collect();
            acts.push(a);
        }
        acts
    }

    /// Default starting point: entries drawn from a seeded standard normal and
    /// scaled by `1/√fan-in` of their layer (biases included).
    pub fn initial_parameters(&self, seed: u64) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(3);
        let mut w = Vec::with_capacity(self.num_params());
        for k in 0..self.depth() {
            let scale = 1.0 / (self.layers[k] as f64).sqrt();
            for _ in 0..(self.layers[k] + 1) * self.layers[k + 1] {
                let z: f64 = StandardNormal.sample(&mut rng);
                w.push(z * scale);
            }
        }
        DVector::from_vec(w)
    }

    /// Network output for parameters `w` and input `x`.
    pub fn output(&self, w: &[f64], x: &[f64]) -> f64 {
        self.forward(w, x).last().unwrap()[0]
    }
}

impl fmt::Display for MlpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.layers.iter().map(|w| w.to_string()).collect();
        f.write_str(&parts.join("-"))
    }
}

impl FromStr for MlpSpec {
    type Err = AlasError;

    /// Parses `"22-4-1"` style architecture labels.
    fn from_str(s: &str) -> Result<Self> {
        let layers = s
            .split('-')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| AlasError::invalid(format!("invalid architecture `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }
}

/// Finite-sum objective `f_i(w) = (y_i − ŷ(w; x_i))²` over a dataset.
#[derive(Debug, Clone)]
pub struct MlpProblem {
    spec: MlpSpec,
    data: Arc<Dataset>,
}

struct Backward {
    grad: Vec<f64>,
    /// `∂f/∂a_k` for every layer output.
    gs: Vec<Vec<f64>>,
    /// `∂f/∂z_k`.
    deltas: Vec<Vec<f64>>,
}

impl MlpProblem {
    pub fn new(spec: MlpSpec, data: Arc<Dataset>) -> Result<Self> {
        if data.dim() != spec.input_dim() {
            return Err(AlasError::DimensionMismatch {
                expected: spec.input_dim(),
                got: data.dim(),
            });
        }
        Ok(Self { spec, data })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    fn backward(&self, w: &[f64], acts: &[Vec<f64>], y: f64) -> Backward {
        let depth = self.spec.depth();
        let mut grad = vec![0.0; self.spec.num_params()];
        let mut gs = vec![Vec::new(); depth + 1];
        let mut deltas = vec![Vec::new(); depth + 1];
        gs[depth] = vec![2.0 * (acts[depth][0] - y)];
        for k in (0..depth).rev() {
            let a = &acts[k + 1];
            let delta: Vec<f64> = gs[k + 1].iter().zip(a).map(|(g, a)| g * (1.0 - a * a)).collect();
            let (wm, _) = self.spec.layer(w, k);
            let prev = &acts[k];
            let nin = prev.len();
            let off = self.spec.offsets[k];
            for (o, d) in delta.iter().enumerate() {
                for (i, p) in prev.iter().enumerate() {
                    grad[off + o * nin + i] = d * p;
                }
                grad[off + wm.len() + o] = *d;
            }
            if k > 0 {
                let mut g = vec![0.0; nin];
                for (o, d) in delta.iter().enumerate() {
                    for (i, gi) in g.iter_mut().enumerate() {
                        *gi += wm[o * nin + i] * d;
                    }
                }
                gs[k] = g;
            }
            deltas[k + 1] = delta;
        }
        Backward { grad, gs, deltas }
    }

    // Hessian-vector product `∇²f_i(w) v` by the R-operator.
    fn hess_vec(&self, w: &[f64], v: &[f64], acts: &[Vec<f64>], bw: &Backward, out: &mut [f64]) {
        let depth = self.spec.depth();
        let mut ra: Vec<Vec<f64>> = Vec::with_capacity(depth + 1);
        ra.push(vec![0.0; acts[0].len()]);
        for k in 0..depth {
            let (wm, _) = self.spec.layer(w, k);
            let (vw, vb) = self.spec.layer(v, k);
            let (prev, rprev) = (&acts[k], &ra[k]);
            let nin = prev.len();
            let r = (0..self.spec.layers[k + 1])
                .map(|o| {
                    let mut rz = vb[o];
                    for i in 0..nin {
                        rz += vw[o * nin + i] * prev[i] + wm[o * nin + i] * rprev[i];
                    }
                    let a = acts[k + 1][o];
                    (1.0 - a * a) * rz
                })
                .collect();
            ra.push(r);
        }
        let mut rg = vec![2.0 * ra[depth][0]];
        for k in (0..depth).rev() {
            let a = &acts[k + 1];
            let g = &bw.gs[k + 1];
            let delta = &bw.deltas[k + 1];
            let rdelta: Vec<f64> = (0..a.len())
                .map(|o| rg[o] * (1.0 - a[o] * a[o]) - 2.0 * g[o] * a[o] * ra[k + 1][o])
                .collect();
            let (wm, _) = self.spec.layer(w, k);
            let (vw, _) = self.spec.layer(v, k);
            let prev = &acts[k];
            let nin = prev.len();
            let off = self.spec.offsets[k];
            for o in 0..a.len() {
                for i in 0..nin {
                    out[off + o * nin + i] = rdelta[o] * prev[i] + delta[o] * ra[k][i];
                }
                out[off + wm.len() + o] = rdelta[o];
            }
            if k > 0 {
                let mut next = vec![0.0; nin];
                for o in 0..a.len() {
                    for (i, ni) in next.iter_mut().enumerate() {
                        *ni += vw[o * nin + i] * delta[o] + wm[o * nin + i] * rdelta[o];
                    }
                }
                rg = next;
            }
        }
    }

    fn raw_hessian(&self, w: &[f64], acts: &[Vec<f64>], bw: &Backward) -> DMatrix<f64> {
        let p = self.spec.num_params();
        let mut h = DMatrix::zeros(p, p);
        let mut v = vec![0.0; p];
        let mut col = vec![0.0; p];
        for j in 0..p {
            v[j] = 1.0;
            self.hess_vec(w, &v, acts, bw, &mut col);
            h.column_mut(j).copy_from_slice(&col);
            v[j] = 0.0;
        }
        h
    }
}

impl FiniteSumProblem for MlpProblem {
    fn dim(&self) -> usize {
        self.spec.num_params()
    }

    fn num_components(&self) -> usize {
        self.data.len()
    }

    fn evaluate(&self, i: usize, x: &DVector<f64>) -> ComponentEval {
        let w = x.as_slice();
        let acts = self.spec.forward(w, self.data.row(i));
        let y = self.data.label(i);
        let r = y - acts.last().unwrap()[0];
        let bw = self.backward(w, &acts, y);
        let h = self.raw_hessian(w, &acts, &bw);
        ComponentEval {
            value: r * r,
            gradient: DVector::from_vec(bw.grad),
            hessian: (&h + h.transpose()) * 0.5,
        }
    }

    fn value_gradient(&self, i: usize, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let w = x.as_slice();
        let acts = self.spec.forward(w, self.data.row(i));
        let y = self.data.label(i);
        let r = y - acts.last().unwrap()[0];
        let bw = self.backward(w, &acts, y);
        (r * r, DVector::from_vec(bw.grad))
    }

    fn value(&self, i: usize, x: &DVector<f64>) -> f64 {
        let r = self.data.label(i) - self.spec.output(x.as_slice(), self.data.row(i));
        r * r
    }
}
