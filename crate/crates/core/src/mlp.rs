//! Feed-forward posterior estimator `f : R^T → (0, 1)`.
//!
//! Hidden layers use the rectifier, the output layer the logistic sigmoid.
//! Inputs are mapped to roughly `[−1, 1]` by a fixed per-coordinate affine
//! normalization before the first layer. Training minimizes mean binary
//! cross-entropy with Adam.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{Label, SamplePoint};
use crate::scalar::Scalar;
use crate::seed;

pub const DEFAULT_HIDDEN_WIDTH: usize = 64;
pub const DEFAULT_HIDDEN_LAYERS: usize = 4;

/// `(x − center) / half_width`, per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization<S> {
    pub center: Vec<S>,
    pub half_width: Vec<S>,
}

impl<S: Scalar> Normalization<S> {
    pub fn identity(dim: usize) -> Self {
        Self { center: vec![S::zero(); dim], half_width: vec![S::one(); dim] }
    }

    /// Maps the box `[lo, hi]` onto `[−1, 1]`.
    pub fn from_bounds(lo: &[S], hi: &[S]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch("normalization bounds differ in length".into()));
        }
        let two = S::lit(2.0);
        let norm = Self {
            center: lo.iter().zip(hi).map(|(l, h)| (*l + *h) / two).collect(),
            half_width: lo.iter().zip(hi).map(|(l, h)| (*h - *l) / two).collect(),
        };
        norm.validate()?;
        Ok(norm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.center.len() != self.half_width.len() {
            return Err(Error::InvalidArchitecture("normalization center and half-width differ in length".into()));
        }
        if self.half_width.iter().any(|h| !(*h > S::zero()) || !h.is_finite()) {
            return Err(Error::InvalidArchitecture("normalization half-widths must be positive".into()));
        }
        Ok(())
    }

    fn apply(&self, x: ArrayView2<'_, S>) -> Array2<S> {
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (c, h) = (self.center[j], self.half_width[j]);
            col.mapv_inplace(|v| (v - c) / h);
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub epochs: usize,
    pub source_window: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams<S> {
    /// `[T, h1, ..., 1]`.
    pub layer_sizes: Vec<usize>,
    /// Layer `l` maps `layer_sizes[l]` to `layer_sizes[l + 1]`; stored `fan_in × fan_out`.
    pub weights: Vec<Array2<S>>,
    pub biases: Vec<Array1<S>>,
    pub norm: Normalization<S>,
    /// One flag per layer.
    pub frozen: Vec<bool>,
    pub meta: TrainMeta,
}

/// Gradients with the same shapes as the parameters.
#[derive(Debug, Clone)]
pub struct Gradients<S> {
    pub weights: Vec<Array2<S>>,
    pub biases: Vec<Array1<S>>,
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::InvalidArchitecture("need at least an input and an output layer".into()));
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidArchitecture("layer sizes must be positive".into()));
    }
    if *sizes.last().unwrap() != 1 {
        return Err(Error::InvalidArchitecture("output layer must have size 1".into()));
    }
    Ok(())
}

/// `[t, width × hidden, 1]`.
pub fn default_layer_sizes(t: usize, width: usize, hidden: usize) -> Vec<usize> {
    let mut sizes = vec![t];
    sizes.extend(std::iter::repeat_n(width, hidden));
    sizes.push(1);
    sizes
}

fn sigmoid<S: Scalar>(z: S) -> S {
    if z >= S::zero() {
        S::one() / (S::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (S::one() + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus<S: Scalar>(z: S) -> S {
    z.max(S::zero()) + (-z.abs()).exp().ln_1p()
}

impl<S: Scalar> MlpParams<S> {
    /// Uniform `±1/√fan_in` weights, zero biases, identity normalization.
    pub fn init(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        check_sizes(layer_sizes)?;
        let mut rng = seed::stream(seed, "mlp-init");
        let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
        let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let scale = 1.0 / (fan_in as f64).sqrt();
            weights.push(Array2::from_shape_fn((fan_in, fan_out), |_| S::lit(rng.random_range(-scale..scale))));
            biases.push(Array1::zeros(fan_out));
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            norm: Normalization::identity(layer_sizes[0]),
            frozen: vec![false; layer_sizes.len() - 1],
            meta: TrainMeta { seed, ..TrainMeta::default() },
        })
    }

    /// All parameters zero; every input maps to posterior 0.5.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        let mut p = Self::init(layer_sizes, 0)?;
        p.weights.iter_mut().for_each(|w| w.fill(S::zero()));
        Ok(p)
    }

    pub fn with_norm(mut self, norm: Normalization<S>) -> Result<Self> {
        norm.validate()?;
        if norm.center.len() != self.input_dim() {
            return Err(Error::DimensionMismatch("normalization dimension differs from input layer".into()));
        }
        self.norm = norm;
        Ok(self)
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Checks the dimension chain and normalization.
    pub fn validate(&self) -> Result<()> {
        check_sizes(&self.layer_sizes)?;
        let layers = self.layer_sizes.len() - 1;
        if self.weights.len() != layers || self.biases.len() != layers || self.frozen.len() != layers {
            return Err(Error::InvalidArchitecture("per-layer arrays disagree with layer_sizes".into()));
        }
        for (l, pair) in self.layer_sizes.windows(2).enumerate() {
            if self.weights[l].dim() != (pair[0], pair[1]) || self.biases[l].len() != pair[1] {
                return Err(Error::InvalidArchitecture(format!("layer {l} has inconsistent shape")));
            }
        }
        self.norm.validate()?;
        if self.norm.center.len() != self.input_dim() {
            return Err(Error::InvalidArchitecture("normalization dimension differs from input layer".into()));
        }
        Ok(())
    }

    fn check_batch(&self, x: &ArrayView2<'_, S>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "batch has {} columns, network expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Pre-activations of every layer (the last entry holds the logits).
    fn forward(&self, x: ArrayView2<'_, S>) -> (Vec<Array2<S>>, Vec<Array2<S>>) {
        let mut acts = vec![self.norm.apply(x)];
        let mut pre = Vec::with_capacity(self.num_layers());
        for l in 0..self.num_layers() {
            let z = acts[l].dot(&self.weights[l]) + &self.biases[l];
            if l + 1 < self.num_layers() {
                acts.push(z.mapv(|v| v.max(S::zero())));
            }
            pre.push(z);
        }
        (acts, pre)
    }

    pub fn logits(&self, x: ArrayView2<'_, S>) -> Result<Array1<S>> {
        self.check_batch(&x)?;
        let (_, mut pre) = self.forward(x);
        Ok(pre.pop().unwrap().column(0).to_owned())
    }

    /// `P(1 | p0)` for each row, strictly inside `(0, 1)`.
    pub fn posterior(&self, x: ArrayView2<'_, S>) -> Result<Array1<S>> {
        let lo = S::min_positive_value();
        let hi = S::one() - S::epsilon();
        Ok(self.logits(x)?.mapv(|z| sigmoid(z).max(lo).min(hi)))
    }

    pub fn posterior_rows(&self, rows: &[Vec<S>]) -> Result<Array1<S>> {
        self.posterior(rows_to_matrix(rows, self.input_dim())?.view())
    }

    /// `1` iff the posterior exceeds 0.5.
    pub fn classify(&self, x: ArrayView2<'_, S>) -> Result<Vec<bool>> {
        Ok(self.posterior(x)?.iter().map(|p| *p > S::lit(0.5)).collect())
    }

    pub fn classify_rows(&self, rows: &[Vec<S>]) -> Result<Vec<bool>> {
        self.classify(rows_to_matrix(rows, self.input_dim())?.view())
    }

    /// Mean binary cross-entropy (plus `½·wd·‖W‖²`) and its gradient.
    pub fn loss_and_grad(&self, x: ArrayView2<'_, S>, y: &Array1<S>, weight_decay: S) -> Result<(S, Gradients<S>)> {
        self.check_batch(&x)?;
        let n = x.nrows();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch("label count differs from batch size".into()));
        }
        let (acts, pre) = self.forward(x);
        let logits = pre.last().unwrap().column(0);
        let inv_n = S::one() / S::lit(n as f64);
        let mut loss = logits.iter().zip(y).fold(S::zero(), |acc, (z, t)| acc + softplus(*z) - *t * *z) * inv_n;
        let mut delta = Array2::from_shape_fn((n, 1), |(i, _)| (sigmoid(logits[i]) - y[i]) * inv_n);

        let layers = self.num_layers();
        let mut gw = vec![Array2::zeros((0, 0)); layers];
        let mut gb = vec![Array1::zeros(0); layers];
        for l in (0..layers).rev() {
            gw[l] = acts[l].t().dot(&delta);
            gb[l] = delta.sum_axis(Axis(0));
            if weight_decay > S::zero() {
                gw[l].scaled_add(weight_decay, &self.weights[l]);
            }
            if l > 0 {
                let mut back = delta.dot(&self.weights[l].t());
                back.zip_mut_with(&pre[l - 1], |d, z| {
                    if *z <= S::zero() {
                        *d = S::zero();
                    }
                });
                delta = back;
            }
        }
        if weight_decay > S::zero() {
            let sq = self.weights.iter().map(|w| w.iter().fold(S::zero(), |a, v| a + *v * *v)).sum::<S>();
            loss += S::lit(0.5) * weight_decay * sq;
        }
        Ok((loss, Gradients { weights: gw, biases: gb }))
    }
}

/// Stacks equally long rows into an `n × dim` matrix.
pub fn rows_to_matrix<S: Scalar>(rows: &[Vec<S>], dim: usize) -> Result<Array2<S>> {
    let mut m = Array2::zeros((rows.len(), dim));
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::DimensionMismatch(format!("row {i} has {} coordinates, expected {dim}", r.len())));
        }
        m.row_mut(i).assign(&ndarray::ArrayView1::from(r.as_slice()));
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub steps_per_epoch: usize,
    /// Mini-batch size; `None` trains full-batch.
    pub batch: Option<usize>,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            steps_per_epoch: 300,
            batch: None,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must lie in (0, 1)")));
            }
        }
        if !(self.adam_eps > 0.0) || self.weight_decay < 0.0 {
            return Err(Error::InvalidConfig("adam_eps must be positive and weight_decay nonnegative".into()));
        }
        if self.batch == Some(0) {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Converts labeled samples into `(inputs, targets)`.
pub fn dataset_arrays<S: Scalar>(data: &[SamplePoint<S>], dim: usize) -> Result<(Array2<S>, Array1<S>)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut x = Array2::zeros((data.len(), dim));
    let mut y = Array1::zeros(data.len());
    for (i, s) in data.iter().enumerate() {
        if s.p0.len() != dim {
            return Err(Error::DimensionMismatch(format!("sample {i} has {} coordinates, expected {dim}", s.p0.len())));
        }
        x.row_mut(i).assign(&ndarray::ArrayView1::from(s.p0.as_slice()));
        y[i] = match s.label {
            Label::Feasible => S::one(),
            Label::Infeasible => S::zero(),
            Label::Unlabeled => return Err(Error::OutOfRange(format!("sample {i} is unlabeled"))),
        };
    }
    Ok((x, y))
}

/// Runs `cfg.steps_per_epoch` Adam steps on the labeled set. Optimizer
/// moments start from zero on every call. Returns the loss before each step.
pub fn train_epoch<S: Scalar>(params: &mut MlpParams<S>, data: &[SamplePoint<S>], cfg: &TrainConfig) -> Result<Vec<S>> {
    let (x, y) = dataset_arrays(data, params.input_dim())?;
    train_arrays(params, x.view(), &y, cfg)
}

pub fn train_arrays<S: Scalar>(
    params: &mut MlpParams<S>,
    x: ArrayView2<'_, S>,
    y: &Array1<S>,
    cfg: &TrainConfig,
) -> Result<Vec<S>> {
    cfg.validate()?;
    params.validate()?;
    if x.nrows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let (lr, b1, b2, eps) =
        (S::lit(cfg.learning_rate), S::lit(cfg.adam_beta1), S::lit(cfg.adam_beta2), S::lit(cfg.adam_eps));
    let wd = S::lit(cfg.weight_decay);
    let layers = params.num_layers();
    let mut mw: Vec<Array2<S>> = params.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect();
    let mut vw = mw.clone();
    let mut mb: Vec<Array1<S>> = params.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect();
    let mut vb = mb.clone();
    let mut rng = seed::stream(cfg.seed, "minibatch");
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let mut cursor = order.len();
    let mut trace = Vec::with_capacity(cfg.steps_per_epoch);
    let (mut p1, mut p2) = (S::one(), S::one());

    for step in 0..cfg.steps_per_epoch {
        let (loss, g) = match cfg.batch {
            Some(bs) if bs < x.nrows() => {
                if cursor + bs > order.len() {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                let idx = &order[cursor..cursor + bs];
                cursor += bs;
                let xb = x.select(Axis(0), idx);
                let yb = y.select(Axis(0), idx);
                params.loss_and_grad(xb.view(), &yb, wd)?
            }
            _ => params.loss_and_grad(x, y, wd)?,
        };
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        trace.push(loss);
        p1 *= b1;
        p2 *= b2;
        let (c1, c2) = (S::one() - p1, S::one() - p2);
        for l in 0..layers {
            if params.frozen[l] {
                continue;
            }
            adam_update(&mut params.weights[l], &g.weights[l], &mut mw[l], &mut vw[l], (lr, b1, b2, eps, c1, c2));
            adam_update(&mut params.biases[l], &g.biases[l], &mut mb[l], &mut vb[l], (lr, b1, b2, eps, c1, c2));
        }
        if params.weights.iter().any(|w| w.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFiniteLoss { step });
        }
    }
    Ok(trace)
}

fn adam_update<S: Scalar, D: ndarray::Dimension>(
    w: &mut ndarray::Array<S, D>,
    g: &ndarray::Array<S, D>,
    m: &mut ndarray::Array<S, D>,
    v: &mut ndarray::Array<S, D>,
    (lr, b1, b2, eps, c1, c2): (S, S, S, S, S, S),
) {
    ndarray::Zip::from(w).and(g).and(m).and(v).for_each(|w, &g, m, v| {
        *m = b1 * *m + (S::one() - b1) * g;
        *v = b2 * *v + (S::one() - b2) * g * g;
        let mh = *m / c1;
        let vh = *v / c2;
        *w -= lr * mh / (vh.sqrt() + eps);
    });
}

/// Copies a checkpoint for warm-starting on a window with `input_dim`
/// coordinates, freezing the first `freeze_prefix` hidden layers.
pub fn transfer_load<S: Scalar>(
    checkpoint: &MlpParams<S>,
    freeze_prefix: usize,
    input_dim: usize,
) -> Result<MlpParams<S>> {
    checkpoint.validate()?;
    if checkpoint.input_dim() != input_dim {
        return Err(Error::ArchitectureMismatch(format!(
            "checkpoint expects {} inputs, target window has {input_dim}",
            checkpoint.input_dim()
        )));
    }
    let hidden = checkpoint.num_layers() - 1;
    if freeze_prefix > hidden {
        return Err(Error::InvalidConfig(format!("cannot freeze {freeze_prefix} of {hidden} hidden layers")));
    }
    let mut p = checkpoint.clone();
    for (l, f) in p.frozen.iter_mut().enumerate() {
        *f = l < freeze_prefix;
    }
    Ok(p)
}

/// `M = 2·min(P, 1 − P)`; 1 at `P = 0.5`, 0 at the extremes.
pub fn uncertainty<S: Scalar>(posteriors: &[S]) -> Result<Vec<S>> {
    posteriors
        .iter()
        .map(|&p| {
            if !(p >= S::zero() && p <= S::one()) {
                return Err(Error::OutOfRange(format!("posterior {p} outside [0, 1]")));
            }
            Ok(S::lit(2.0) * p.min(S::one() - p))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn parameter_count() {
        let p = MlpParams::<f64>::init(&[2, 8, 8, 8, 8, 1], 3).unwrap();
        assert_eq!(p.num_params(), 249);
        assert_eq!(p.frozen, vec![false; 5]);
        assert_eq!(p, MlpParams::init(&[2, 8, 8, 8, 8, 1], 3).unwrap());
        assert_ne!(p, MlpParams::init(&[2, 8, 8, 8, 8, 1], 4).unwrap());
        let bound = 1.0 / 2f64.sqrt();
        assert!(p.weights[0].iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn bad_architectures() {
        assert!(matches!(MlpParams::<f64>::init(&[2, 8, 2], 0), Err(Error::InvalidArchitecture(_))));
        assert!(matches!(MlpParams::<f64>::init(&[2], 0), Err(Error::InvalidArchitecture(_))));
        assert!(matches!(MlpParams::<f64>::init(&[2, 0, 1], 0), Err(Error::InvalidArchitecture(_))));
    }

    #[test]
    fn zero_network_is_undecided() {
        let p = MlpParams::<f64>::zeros(&[2, 8, 1]).unwrap();
        let x = arr2(&[[0.3, -4.0], [10.0, 2.0], [0.3, -4.0]]);
        let post = p.posterior(x.view()).unwrap();
        assert!(post.iter().all(|v| *v == 0.5));
        assert_eq!(p.classify(x.view()).unwrap(), vec![false; 3]);
    }

    #[test]
    fn threshold_is_strict() {
        // single affine unit: logit = w·(x − c) with w = 1
        let mut p = MlpParams::<f64>::zeros(&[1, 1]).unwrap();
        p.weights[0][(0, 0)] = 1.0;
        p = p.with_norm(Normalization { center: vec![2.0], half_width: vec![1.0] }).unwrap();
        let logit = |prob: f64| (prob / (1.0 - prob)).ln() + 2.0;
        let x = arr2(&[[logit(0.51)], [2.0], [logit(0.49)]]);
        let post = p.posterior(x.view()).unwrap();
        assert_eq!(post[1], 0.5);
        assert_eq!(p.classify(x.view()).unwrap(), vec![true, false, false]);
    }

    #[test]
    fn dimension_mismatch() {
        let p = MlpParams::<f64>::init(&[2, 4, 1], 0).unwrap();
        assert!(matches!(p.posterior(arr2(&[[1.0, 2.0, 3.0]]).view()), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn posterior_stays_open() {
        let mut p = MlpParams::<f64>::zeros(&[1, 1]).unwrap();
        p.weights[0][(0, 0)] = 1.0;
        let post = p.posterior(arr2(&[[1e4], [-1e4]]).view()).unwrap();
        assert!(post[0] < 1.0 && post[1] > 0.0);
    }

    #[test]
    fn first_adam_step_moves_by_lr() {
        let mut p = MlpParams::<f64>::init(&[2, 3, 1], 1).unwrap();
        let before = p.clone();
        let data = vec![SamplePoint::oracle(vec![0.2, -0.4], Label::Feasible)];
        let cfg = TrainConfig { steps_per_epoch: 1, ..TrainConfig::default() };
        let (_, g) = before.loss_and_grad(arr2(&[[0.2, -0.4]]).view(), &ndarray::arr1(&[1.0]), 0.0).unwrap();
        train_epoch(&mut p, &data, &cfg).unwrap();
        for l in 0..2 {
            for (idx, w) in p.weights[l].indexed_iter() {
                let gv = g.weights[l][idx];
                let dw = (w - before.weights[l][idx]).abs();
                if gv.abs() > 1e-6 {
                    assert!((dw - 1e-3).abs() < 1e-7, "layer {l} {idx:?}: {dw}");
                }
            }
        }
        let db = (p.biases[1][0] - before.biases[1][0]).abs();
        assert!((db - 1e-3).abs() < 1e-7);
    }

    #[test]
    fn single_point_converges() {
        let mut p = MlpParams::<f64>::init(&[2, 16, 16, 1], 5).unwrap();
        let data = vec![SamplePoint::oracle(vec![0.3, 0.7], Label::Feasible)];
        let trace = train_epoch(&mut p, &data, &TrainConfig::default()).unwrap();
        assert_eq!(trace.len(), 300);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(p.posterior_rows(&[vec![0.3, 0.7]]).unwrap()[0] > 0.9);
    }

    #[test]
    fn frozen_layers_are_untouched() {
        let base = MlpParams::<f64>::init(&[2, 8, 8, 1], 2).unwrap();
        let data = vec![
            SamplePoint::oracle(vec![0.1, 0.2], Label::Feasible),
            SamplePoint::oracle(vec![-0.5, 0.9], Label::Infeasible),
        ];
        let mut all = base.clone();
        all.frozen = vec![true; 3];
        train_epoch(&mut all, &data, &TrainConfig::default()).unwrap();
        assert_eq!(all.weights, base.weights);
        assert_eq!(all.biases, base.biases);

        let mut first = transfer_load(&base, 1, 2).unwrap();
        assert_eq!(first.frozen, vec![true, false, false]);
        train_epoch(&mut first, &data, &TrainConfig::default()).unwrap();
        assert_eq!(first.weights[0], base.weights[0]);
        assert_ne!(first.weights[2], base.weights[2]);
    }

    #[test]
    fn transfer_rules() {
        let base = MlpParams::<f64>::init(&[2, 8, 8, 8, 8, 1], 0).unwrap();
        let t = transfer_load(&base, 1, 2).unwrap();
        assert_eq!(t.frozen, vec![true, false, false, false, false]);
        assert_eq!(transfer_load(&base, 0, 2).unwrap().frozen, vec![false; 5]);
        assert!(matches!(transfer_load(&base, 0, 3), Err(Error::ArchitectureMismatch(_))));
    }

    #[test]
    fn empty_and_divergent_training() {
        let mut p = MlpParams::<f64>::init(&[1, 4, 1], 0).unwrap();
        assert!(matches!(train_epoch(&mut p, &[], &TrainConfig::default()), Err(Error::EmptyDataset)));
        let data =
            vec![SamplePoint::oracle(vec![1.0], Label::Feasible), SamplePoint::oracle(vec![-1.0], Label::Infeasible)];
        let cfg = TrainConfig { learning_rate: 1e300, ..TrainConfig::default() };
        assert!(matches!(train_epoch(&mut p, &data, &cfg), Err(Error::NonFiniteLoss { .. })));
    }

    #[test]
    fn uncertainty_values() {
        let m = uncertainty(&[0.5f64, 0.9, 0.1, 1.0, 0.0]).unwrap();
        assert_eq!(m[0], 1.0);
        assert!((m[1] - 0.2).abs() < 1e-15 && (m[2] - 0.2).abs() < 1e-15);
        assert_eq!(m[3], 0.0);
        assert_eq!(m[4], 0.0);
        assert!(matches!(uncertainty(&[1.5]), Err(Error::OutOfRange(_))));
        assert!(matches!(uncertainty(&[f64::NAN]), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn f32_network_trains() {
        let mut p = MlpParams::<f32>::init(&[2, 16, 16, 1], 5).unwrap();
        let data = vec![SamplePoint::oracle(vec![0.3f32, 0.7], Label::Infeasible)];
        train_epoch(&mut p, &data, &TrainConfig::default()).unwrap();
        assert!(p.posterior_rows(&[vec![0.3, 0.7]]).unwrap()[0] < 0.1);
    }
}
