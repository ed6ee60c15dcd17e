//! A small fully connected network: ReLU hidden layers, a linear output
//! layer, inverted dropout on hidden activations, hand-written
//! backpropagation for a single-output squared error, and SGD / Adam.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    /// Input width, hidden widths, then the output width.
    pub sizes: Vec<usize>,
    pub dropout_p: f64,
}

impl LayerSpec {
    pub fn new(sizes: Vec<usize>, dropout_p: f64) -> Result<Self> {
        let spec = Self { sizes, dropout_p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.len() < 2 {
            return Err(Error::Config(
                "a network needs at least input and output sizes".into(),
            ));
        }
        if self.sizes.contains(&0) {
            return Err(Error::Config(format!(
                "layer sizes must be positive: {:?}",
                self.sizes
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Config(format!(
                "dropout probability must be in [0, 1), got {}",
                self.dropout_p
            )));
        }
        Ok(())
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().unwrap()
    }
}

/// Weights (`outputs × inputs`, row-major) and biases of one dense layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub outputs: usize,
    pub inputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(outputs: usize, inputs: usize) -> Self {
        Self {
            outputs,
            inputs,
            weights: vec![0.0; outputs * inputs],
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.bias)
                .map(|(row, b)| row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b),
        );
    }
}

/// Parameters of every layer. Gradients share this shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub layers: Vec<Dense>,
}

impl Params {
    pub fn zeros_like(other: &Params) -> Self {
        Self {
            layers: other
                .layers
                .iter()
                .map(|l| Dense::zeros(l.outputs, l.inputs))
                .collect(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    fn same_shape(&self, other: &Params) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.outputs == b.outputs && a.inputs == b.inputs)
    }

    pub fn add_assign(&mut self, other: &Params) {
        self.iter_mut().zip(other.iter()).for_each(|(a, b)| *a += b);
    }

    pub fn scale(&mut self, factor: f64) {
        self.iter_mut().for_each(|a| *a *= factor);
    }
}

/// Intermediate values of one forward pass, consumed by
/// [`Network::backward_scalar_target`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub input: Vec<f64>,
    /// Pre-activation of every layer (the last one is the output).
    pub pre: Vec<Vec<f64>>,
    /// Hidden activations after ReLU and dropout scaling.
    pub hidden: Vec<Vec<f64>>,
    /// Inverted-dropout multipliers per hidden layer (`None` when inactive).
    pub masks: Vec<Option<Vec<f64>>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.pre.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub spec: LayerSpec,
    pub params: Params,
}

const CHECKPOINT_FORMAT: &str = "tinynn-params";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    network: Network,
}

impl Network {
    /// He-normal weights `N(0, 2/fan_in)`, zero biases.
    pub fn init<R: Rng + ?Sized>(spec: LayerSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .sizes
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let scale = (2.0 / inputs as f64).sqrt();
                let weights = (0..inputs * outputs)
                    .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
                    .collect();
                Dense {
                    outputs,
                    inputs,
                    weights,
                    bias: vec![0.0; outputs],
                }
            })
            .collect();
        Ok(Self {
            spec,
            params: Params { layers },
        })
    }

    pub fn from_params(spec: LayerSpec, params: Params) -> Result<Self> {
        spec.validate()?;
        let ok = params.layers.len() == spec.sizes.len() - 1
            && params
                .layers
                .iter()
                .zip(spec.sizes.windows(2))
                .all(|(l, w)| {
                    l.inputs == w[0]
                        && l.outputs == w[1]
                        && l.weights.len() == w[0] * w[1]
                        && l.bias.len() == w[1]
                });
        if !ok {
            return Err(Error::Shape(
                "parameters do not chain with the layer spec".into(),
            ));
        }
        Ok(Self { spec, params })
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.spec.input_size() {
            return Err(Error::Shape(format!(
                "network expects {} inputs, got {}",
                self.spec.input_size(),
                input.len()
            )));
        }
        Ok(())
    }

    /// Deterministic evaluation-mode forward pass.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let last = self.params.layers.len() - 1;
        let mut x = input.to_vec();
        let mut y = Vec::new();
        for (l, layer) in self.params.layers.iter().enumerate() {
            layer.apply(&x, &mut y);
            if l < last {
                y.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut x, &mut y);
        }
        Ok(x)
    }

    /// Forward pass that records a trace. Dropout is applied to hidden
    /// activations only when `train_mode` is set and `dropout_p > 0`; the
    /// random source is untouched otherwise.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        input: &[f64],
        train_mode: bool,
        rng: &mut R,
    ) -> Result<(Vec<f64>, ForwardTrace)> {
        self.check_input(input)?;
        let p = self.spec.dropout_p;
        let dropout = train_mode && p > 0.0;
        let keep_scale = 1.0 / (1.0 - p);
        let last = self.params.layers.len() - 1;

        let mut trace = ForwardTrace {
            input: input.to_vec(),
            pre: Vec::with_capacity(last + 1),
            hidden: Vec::with_capacity(last),
            masks: Vec::with_capacity(last),
        };
        for (l, layer) in self.params.layers.iter().enumerate() {
            let x = if l == 0 {
                &trace.input
            } else {
                &trace.hidden[l - 1]
            };
            let mut z = Vec::new();
            layer.apply(x, &mut z);
            if l < last {
                let mut h: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
                let mask = dropout.then(|| {
                    (0..h.len())
                        .map(|_| {
                            if rng.random::<f64>() < p {
                                0.0
                            } else {
                                keep_scale
                            }
                        })
                        .collect::<Vec<_>>()
                });
                if let Some(mask) = &mask {
                    h.iter_mut().zip(mask).for_each(|(v, m)| *v *= m);
                }
                trace.hidden.push(h);
                trace.masks.push(mask);
            }
            trace.pre.push(z);
        }
        Ok((trace.output().to_vec(), trace))
    }

    /// Gradient of `(target − output[action_idx])²` with respect to every
    /// parameter, using the activations recorded in `trace`.
    pub fn backward_scalar_target(
        &self,
        trace: &ForwardTrace,
        action_idx: usize,
        target: f64,
    ) -> Result<Params> {
        let out = trace.output();
        if action_idx >= out.len() {
            return Err(Error::IndexOutOfRange {
                index: action_idx,
                len: out.len(),
            });
        }
        let mut grads = Params::zeros_like(&self.params);
        let mut delta = vec![0.0; out.len()];
        delta[action_idx] = 2.0 * (out[action_idx] - target);

        for l in (0..self.params.layers.len()).rev() {
            let layer = &self.params.layers[l];
            let x = if l == 0 {
                &trace.input
            } else {
                &trace.hidden[l - 1]
            };
            let g = &mut grads.layers[l];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.bias[o] = d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                row.iter_mut().zip(x).for_each(|(w, xi)| *w = d * xi);
            }
            if l == 0 {
                break;
            }
            let mut prev = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                prev.iter_mut().zip(row).for_each(|(p, w)| *p += w * d);
            }
            let z = &trace.pre[l - 1];
            let mask = trace.masks[l - 1].as_deref();
            for (i, p) in prev.iter_mut().enumerate() {
                let gate = if z[i] > 0.0 { 1.0 } else { 0.0 };
                *p *= gate * mask.map_or(1.0, |m| m[i]);
            }
            delta = prev;
        }
        Ok(grads)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let doc = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            network: self.clone(),
        };
        let text = serde_json::to_string(&doc).expect("network serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: Checkpoint = serde_json::from_str(&text).map_err(|source| Error::Parse {
            context: path.display().to_string(),
            source,
        })?;
        if doc.format != CHECKPOINT_FORMAT || doc.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint {} v{}",
                doc.format, doc.version
            )));
        }
        Network::from_params(doc.network.spec, doc.network.params)
    }
}

/// Elementwise clamp into `[-delta, delta]`.
pub fn clip_gradients(grads: &mut Params, delta: f64) {
    debug_assert!(delta > 0.0);
    grads.iter_mut().for_each(|g| *g = g.clamp(-delta, delta));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
struct AdamMoments {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    adam: Option<AdamMoments>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        Ok(Self {
            kind,
            learning_rate,
            adam: None,
        })
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn step(&mut self, params: &mut Params, grads: &Params) -> Result<()> {
        if !params.same_shape(grads) {
            return Err(Error::Shape(
                "gradient shape does not match parameters".into(),
            ));
        }
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Sgd => {
                params
                    .iter_mut()
                    .zip(grads.iter())
                    .for_each(|(p, g)| *p -= lr * g);
            }
            OptimizerKind::Adam => {
                let n = params.num_params();
                let st = self.adam.get_or_insert_with(|| AdamMoments {
                    m: vec![0.0; n],
                    v: vec![0.0; n],
                    t: 0,
                });
                st.t += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(st.t);
                let c2 = 1.0 - ADAM_BETA2.powi(st.t);
                for ((p, g), (m, v)) in params
                    .iter_mut()
                    .zip(grads.iter())
                    .zip(st.m.iter_mut().zip(st.v.iter_mut()))
                {
                    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use rand::SeedableRng;

    fn rng(seed: u64) -> SimRng {
        SimRng::seed_from_u64(seed)
    }

    fn zero_net(sizes: Vec<usize>) -> Network {
        let spec = LayerSpec::new(sizes, 0.0).unwrap();
        let mut net = Network::init(spec, &mut rng(0)).unwrap();
        net.params.iter_mut().for_each(|p| *p = 0.0);
        net
    }

    #[test]
    fn init_shapes_and_determinism() {
        let spec = LayerSpec::new(vec![8, 4, 2], 0.0).unwrap();
        let a = Network::init(spec.clone(), &mut rng(1)).unwrap();
        assert_eq!(
            (a.params.layers[0].outputs, a.params.layers[0].inputs),
            (4, 8)
        );
        assert_eq!(a.params.layers[0].weights.len(), 32);
        assert_eq!(a.params.layers[1].weights.len(), 8);
        assert_eq!(a.params.layers[0].bias, vec![0.0; 4]);
        assert_eq!(a.params.layers[1].bias, vec![0.0; 2]);
        let b = Network::init(spec, &mut rng(1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn init_variance_matches_he_scale() {
        let fan_in = 100;
        let spec = LayerSpec::new(vec![fan_in, 100, 1], 0.0).unwrap();
        let net = Network::init(spec, &mut rng(2)).unwrap();
        let w = &net.params.layers[0].weights;
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let expected = 2.0 / fan_in as f64;
        assert!((var - expected).abs() <= 0.1 * expected, "{var}");
    }

    #[test]
    fn spec_validation() {
        assert!(LayerSpec::new(vec![4], 0.0).is_err());
        assert!(LayerSpec::new(vec![4, 0, 2], 0.0).is_err());
        assert!(LayerSpec::new(vec![4, 2], 1.0).is_err());
        assert!(LayerSpec::new(vec![4, 2], -0.1).is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = zero_net(vec![3, 5, 2]);
        let out = net.predict(&[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn single_linear_layer() {
        let mut net = zero_net(vec![2, 1]);
        net.params.layers[0].weights = vec![1.0, -1.0];
        assert_eq!(net.predict(&[3.0, 1.0]).unwrap(), vec![2.0]);
        // Output layer is linear: negative values pass through.
        assert_eq!(net.predict(&[1.0, 3.0]).unwrap(), vec![-2.0]);
        assert!(matches!(net.predict(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn no_dropout_train_equals_eval() {
        let spec = LayerSpec::new(vec![4, 6, 3], 0.0).unwrap();
        let net = Network::init(spec, &mut rng(3)).unwrap();
        let x = [0.3, -0.2, 0.9, 1.1];
        let (train, _) = net.forward(&x, true, &mut rng(4)).unwrap();
        assert_eq!(train, net.predict(&x).unwrap());
        let (eval, _) = net.forward(&x, false, &mut rng(5)).unwrap();
        assert_eq!(eval, train);
    }

    #[test]
    fn dropout_is_unbiased() {
        let spec = LayerSpec::new(vec![3, 8], 0.0).unwrap();
        let base = Network::init(spec, &mut rng(6)).unwrap();
        // Two-layer net so the hidden layer is subject to dropout; the
        // output layer is the identity on the hidden units.
        let mut params = base.params.clone();
        params.layers.push(Dense {
            outputs: 8,
            inputs: 8,
            weights: (0..64)
                .map(|i| if i % 9 == 0 { 1.0 } else { 0.0 })
                .collect(),
            bias: vec![0.0; 8],
        });
        let net =
            Network::from_params(LayerSpec::new(vec![3, 8, 8], 0.2).unwrap(), params).unwrap();
        let x = [1.0, 0.5, -0.7];
        let eval = net.predict(&x).unwrap();
        let mut r = rng(7);
        let n = 10_000;
        let mut acc = [0.0; 8];
        for _ in 0..n {
            let (out, _) = net.forward(&x, true, &mut r).unwrap();
            acc.iter_mut().zip(&out).for_each(|(a, o)| *a += o);
        }
        for (a, e) in acc.iter().zip(&eval) {
            let mean = a / n as f64;
            if *e > 1e-9 {
                assert!((mean - e).abs() <= 0.02 * e, "{mean} vs {e}");
            } else {
                assert_eq!(mean, 0.0);
            }
        }
    }

    #[test]
    fn zero_error_zero_gradient() {
        let spec = LayerSpec::new(vec![3, 4, 2], 0.0).unwrap();
        let net = Network::init(spec, &mut rng(8)).unwrap();
        let (out, trace) = net.forward(&[0.1, 0.2, 0.3], false, &mut rng(0)).unwrap();
        let g = net.backward_scalar_target(&trace, 1, out[1]).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
        assert!(net.backward_scalar_target(&trace, 2, 0.0).is_err());
    }

    #[test]
    fn linear_gradient_closed_form() {
        let mut net = zero_net(vec![3, 1]);
        net.params.layers[0].weights = vec![0.5, -1.0, 2.0];
        let x = [1.0, 2.0, 3.0];
        let t = 1.5;
        let (out, trace) = net.forward(&x, false, &mut rng(0)).unwrap();
        let g = net.backward_scalar_target(&trace, 0, t).unwrap();
        let err = 2.0 * (out[0] - t);
        for (gw, xi) in g.layers[0].weights.iter().zip(&x) {
            assert!((gw - err * xi).abs() < 1e-15);
        }
        assert_eq!(g.layers[0].bias[0], err);
    }

    #[test]
    fn output_gradient_is_masked() {
        let spec = LayerSpec::new(vec![3, 4, 3], 0.0).unwrap();
        let net = Network::init(spec, &mut rng(9)).unwrap();
        let (_, trace) = net.forward(&[1.0, -1.0, 0.5], false, &mut rng(0)).unwrap();
        let g = net.backward_scalar_target(&trace, 2, 10.0).unwrap();
        let out = &g.layers[1];
        for o in 0..3 {
            let row_zero = out.weights[o * 4..(o + 1) * 4].iter().all(|&w| w == 0.0);
            assert_eq!(o != 2, row_zero && out.bias[o] == 0.0);
        }
    }

    #[test]
    fn clipping() {
        let mut net = zero_net(vec![3, 1]);
        net.params.layers[0].weights = vec![5.0, -0.5, -7.0];
        let mut g = net.params.clone();
        clip_gradients(&mut g, 1.0);
        assert_eq!(g.layers[0].weights, vec![1.0, -0.5, -1.0]);
        let once = g.clone();
        clip_gradients(&mut g, 1.0);
        assert_eq!(g, once);
        let mut z = Params::zeros_like(&g);
        clip_gradients(&mut z, 1.0);
        assert!(z.iter().all(|&v| v == 0.0));
    }

    fn scalar_params(value: f64) -> Params {
        Params {
            layers: vec![Dense {
                outputs: 1,
                inputs: 1,
                weights: vec![value],
                bias: vec![0.0],
            }],
        }
    }

    #[test]
    fn sgd_step() {
        let mut p = scalar_params(1.0);
        let g = scalar_params(0.5);
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.001).unwrap();
        opt.step(&mut p, &g).unwrap();
        assert_eq!(p.layers[0].weights[0], 1.0 - 0.001 * 0.5);
        assert!((p.layers[0].weights[0] - 0.9995).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step() {
        let mut p = scalar_params(0.0);
        let g = scalar_params(1.0);
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.001).unwrap();
        opt.step(&mut p, &g).unwrap();
        let expected = -0.001 / (1.0 + 1e-8);
        assert!((p.layers[0].weights[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::Adam] {
            let mut p = scalar_params(0.7);
            let mut opt = Optimizer::new(kind, 0.01).unwrap();
            for _ in 0..3 {
                let z = Params::zeros_like(&p);
                opt.step(&mut p, &z).unwrap();
            }
            assert_eq!(p, scalar_params(0.7));
        }
        assert!(Optimizer::new(OptimizerKind::Sgd, 0.0).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let spec = LayerSpec::new(vec![5, 3, 2], 0.2).unwrap();
        let net = Network::init(spec, &mut rng(10)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        net.save(&path).unwrap();
        let back = Network::load(&path).unwrap();
        assert_eq!(back, net);
    }
}
