use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{normalize, EmbeddingModel, UnitVector};
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

/// Below this raw-output norm the encoder emits the fallback basis vector
/// and passes no gradient.
const MIN_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Architecture of a fresh encoder; the input width comes from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    #[serde(default)]
    pub activation: Activation,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            hidden: vec![32],
            output_dim: 8,
            activation: Activation::Tanh,
        }
    }
}

/// Multilayer perceptron followed by projection onto the unit sphere.
///
/// Parameters are one flat vector: for each layer, the weight matrix
/// (row-major, `out × in`) and then the bias. Hidden layers use the
/// activation; the output layer is linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    dims: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Layer inputs; `inputs[0]` is the point itself.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of each layer.
    pre: Vec<Vec<f64>>,
    norm: f64,
    output: UnitVector,
}

impl ForwardCache {
    pub fn output(&self) -> &UnitVector {
        &self.output
    }
}

pub fn parameter_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "encoder needs at least an input and an output width, all positive; got {dims:?}"
        )));
    }
    if dims[dims.len() - 1] < 2 {
        return Err(Error::InvalidArgument("embedding dimension must be at least 2".into()));
    }
    Ok(())
}

impl Encoder {
    /// Uniform `±1/√fan_in` initialization from the seed's init stream.
    pub fn init(input_dim: usize, cfg: &EncoderConfig, seed: u64) -> Result<Self> {
        let mut dims = vec![input_dim];
        dims.extend(&cfg.hidden);
        dims.push(cfg.output_dim);
        check_dims(&dims)?;
        let mut rng = stream_rng(seed, Stream::Init, 0);
        let mut params = Vec::with_capacity(parameter_count(&dims));
        for w in dims.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..w[1] * w[0] + w[1] {
                params.push(rng.random_range(-bound..=bound));
            }
        }
        Ok(Encoder {
            dims,
            activation: cfg.activation,
            params,
        })
    }

    pub fn from_parameters(dims: Vec<usize>, activation: Activation, params: Vec<f64>) -> Result<Self> {
        check_dims(&dims)?;
        let want = parameter_count(&dims);
        if params.len() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                found: params.len(),
            });
        }
        Ok(Encoder {
            dims,
            activation,
            params,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        // (offset, fan_in, fan_out)
        self.dims.windows(2).scan(0, |off, w| {
            let here = *off;
            *off += w[1] * w[0] + w[1];
            Some((here, w[0], w[1]))
        })
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache> {
        if x.len() != self.dims[0] {
            return Err(Error::DimensionMismatch {
                expected: self.dims[0],
                found: x.len(),
            });
        }
        let last = self.dims.len() - 2;
        let mut inputs = vec![x.to_vec()];
        let mut pre = Vec::with_capacity(last + 1);
        for (l, (off, fan_in, fan_out)) in self.layers().enumerate() {
            let a = &inputs[l];
            let w = &self.params[off..off + fan_out * fan_in];
            let b = &self.params[off + fan_out * fan_in..off + fan_out * fan_in + fan_out];
            let z: Vec<f64> = (0..fan_out)
                .map(|r| b[r] + w[r * fan_in..(r + 1) * fan_in].iter().zip(a).map(|(p, q)| p * q).sum::<f64>())
                .collect();
            let next = if l < last {
                z.iter().map(|&v| self.activation.apply(v)).collect()
            } else {
                z.clone()
            };
            pre.push(z);
            inputs.push(next);
        }
        let h = inputs.pop().expect("at least one layer");
        let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        let output = normalize(&h)?;
        Ok(ForwardCache {
            inputs,
            pre,
            norm,
            output,
        })
    }

    pub fn forward(&self, x: &[f64]) -> Result<UnitVector> {
        self.forward_cached(x).map(|c| c.output)
    }

    pub fn forward_batch(&self, points: &[Vec<f64>]) -> Result<Vec<UnitVector>> {
        points.iter().map(|p| self.forward(p)).collect()
    }

    /// Adds `∂(gᵀ z)/∂θ` to `grad`, where `z` is the unit output of `cache`
    /// and `g = dz`. Includes the projection Jacobian `(I − zzᵀ)/‖h‖`.
    pub fn backward(&self, cache: &ForwardCache, dz: &[f64], grad: &mut [f64]) {
        if !(cache.norm >= MIN_NORM) {
            return;
        }
        let z = cache.output.as_slice();
        let radial: f64 = z.iter().zip(dz).map(|(a, b)| a * b).sum();
        let mut delta: Vec<f64> = z
            .iter()
            .zip(dz)
            .map(|(zi, gi)| (gi - radial * zi) / cache.norm)
            .collect();
        let layers: Vec<_> = self.layers().collect();
        for (l, &(off, fan_in, fan_out)) in layers.iter().enumerate().rev() {
            let a = &cache.inputs[l];
            let w_off = off;
            let b_off = off + fan_out * fan_in;
            for r in 0..fan_out {
                let d = delta[r];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[w_off + r * fan_in..w_off + (r + 1) * fan_in];
                for (g, ai) in row.iter_mut().zip(a) {
                    *g += d * ai;
                }
                grad[b_off + r] += d;
            }
            if l == 0 {
                break;
            }
            let w = &self.params[w_off..b_off];
            let below = &cache.pre[l - 1];
            delta = (0..fan_in)
                .map(|c| {
                    let back: f64 = (0..fan_out).map(|r| w[r * fan_in + c] * delta[r]).sum();
                    back * self.activation.derivative(below[c], a[c])
                })
                .collect();
        }
    }
}

impl EmbeddingModel for Encoder {
    fn input_dim(&self) -> usize {
        self.dims[0]
    }

    fn output_dim(&self) -> usize {
        self.dims[self.dims.len() - 1]
    }

    /// # Panics
    ///
    /// If `x` does not have [`input_dim`](EmbeddingModel::input_dim)
    /// coordinates. Population losses check this before embedding.
    fn embed(&self, x: &[f64]) -> UnitVector {
        match self.forward(x) {
            Ok(z) => z,
            Err(e) => panic!("encoder input: {e}"),
        }
    }

    fn parameters(&self) -> Vec<f64> {
        self.params.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_count() {
        let e = Encoder::init(2, &EncoderConfig::default(), 1).unwrap();
        assert_eq!(e.dims(), &[2, 32, 8]);
        assert_eq!(e.params().len(), 2 * 32 + 32 + 32 * 8 + 8);
        assert!(e.params().iter().all(|p| p.abs() <= 1.0 / 2f64.sqrt()));
    }

    #[test]
    fn zero_network_is_constant() {
        let mut e = Encoder::from_parameters(vec![2, 3, 2], Activation::Tanh, vec![0.0; 17]).unwrap();
        assert_eq!(e.forward(&[0.3, -4.0]).unwrap(), UnitVector::basis(2));
        let n = e.params().len();
        e.params_mut()[n - 2..].copy_from_slice(&[0.0, -2.0]);
        assert_eq!(e.forward(&[0.3, -4.0]).unwrap().as_slice(), &[0.0, -1.0]);
        assert_eq!(e.forward(&[9.0, 1.0]).unwrap().as_slice(), &[0.0, -1.0]);
    }

    #[test]
    fn single_linear_layer() {
        // W = [[2, 1], [0, 1]], b = 0: (1, 0) ↦ (2, 0) ↦ (1, 0); (0, 1) ↦ (1, 1)/√2.
        let e = Encoder::from_parameters(vec![2, 2], Activation::Tanh, vec![2.0, 1.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(e.forward(&[1.0, 0.0]).unwrap().as_slice(), &[1.0, 0.0]);
        let z = e.forward(&[0.0, 1.0]).unwrap();
        let s = 0.5f64.sqrt();
        assert!((z.as_slice()[0] - s).abs() < 1e-15 && (z.as_slice()[1] - s).abs() < 1e-15);
    }

    #[test]
    fn batch_forward_matches_pointwise() {
        let e = Encoder::init(3, &EncoderConfig::default(), 9).unwrap();
        let pts = vec![vec![0.1, 0.2, 0.3], vec![-1.0, 0.0, 2.0]];
        let b = e.forward_batch(&pts).unwrap();
        for (p, z) in pts.iter().zip(&b) {
            assert_eq!(&e.forward(p).unwrap(), z);
            assert!((z.dot(z) - 1.0).abs() < 1e-12);
        }
        assert!(e.forward(&[1.0]).is_err());
    }

    #[test]
    fn backward_matches_finite_differences() {
        for act in [Activation::Tanh, Activation::Relu] {
            let cfg = EncoderConfig {
                hidden: vec![5, 4],
                output_dim: 3,
                activation: act,
            };
            let e = Encoder::init(2, &cfg, 4).unwrap();
            let x = [0.7, -0.3];
            let g = [0.3, -1.0, 0.5];
            let f = |enc: &Encoder| {
                let z = enc.forward(&x).unwrap();
                z.as_slice().iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()
            };
            let mut grad = vec![0.0; e.params().len()];
            e.backward(&e.forward_cached(&x).unwrap(), &g, &mut grad);
            let h = 1e-6;
            for i in 0..grad.len() {
                let mut p = e.clone();
                p.params_mut()[i] += h;
                let mut m = e.clone();
                m.params_mut()[i] -= h;
                let fd = (f(&p) - f(&m)) / (2.0 * h);
                assert!((fd - grad[i]).abs() < 1e-7, "{act:?} param {i}: {fd} vs {}", grad[i]);
            }
        }
    }
}
