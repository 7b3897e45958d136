//! Pool-based active learning of the flexibility-set classifier.
//!
//! A static pool is drawn once from the inflated bounding box. Each epoch the
//! most uncertain pool points (or a uniform draw, for the baseline) are
//! labeled, geometrically when they fall inside the certified inner set and
//! by the oracle otherwise, and the classifier is retrained on everything
//! labeled so far.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{self, EvalReport};
use crate::inner::InnerSet;
use crate::lp::SolverTolerances;
use crate::mlp::{self, MlpParams, Normalization, TrainConfig};
use crate::network::CompactModel;
use crate::oracle::{self, BoundingBox, Label, Oracle, SamplePoint};
use crate::robust_box::{self, InnerBox};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Uncertainty,
    Random,
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uncertainty" => Ok(Self::Uncertainty),
            "random" => Ok(Self::Random),
            other => Err(Error::InvalidConfig(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActiveConfig {
    pub pool_size: usize,
    pub init_labeled: usize,
    pub per_epoch: usize,
    pub epochs: usize,
    /// Cap on charged labels: every initial label plus every oracle label
    /// made during epochs (epoch hull labels are free). Selected points that
    /// would need the oracle once the cap is reached stay in the pool, and
    /// the run stops after that epoch.
    pub label_budget: Option<usize>,
    pub seed: u64,
    pub use_inner_box: bool,
    pub use_hull_labeling: bool,
    pub strategy: Strategy,
    /// Sampling-box inflation relative to the projection bounds.
    pub inflation: f64,
    pub hidden_width: usize,
    pub hidden_layers: usize,
    /// Hidden layers frozen when warm-starting.
    pub freeze_prefix: usize,
    /// Re-initialize the network before every epoch instead of continuing.
    pub reinit_each_epoch: bool,
    /// Size of the held-out set scored after every epoch.
    pub eval_count: usize,
}

impl Default for ActiveConfig {
    fn default() -> Self {
        Self {
            pool_size: 20_000,
            init_labeled: 100,
            per_epoch: 10,
            epochs: 50,
            label_budget: None,
            seed: 0,
            use_inner_box: true,
            use_hull_labeling: true,
            strategy: Strategy::Uncertainty,
            inflation: oracle::DEFAULT_INFLATION,
            hidden_width: mlp::DEFAULT_HIDDEN_WIDTH,
            hidden_layers: mlp::DEFAULT_HIDDEN_LAYERS,
            freeze_prefix: 1,
            reinit_each_epoch: false,
            eval_count: 1000,
        }
    }
}

impl ActiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.init_labeled > self.pool_size {
            return Err(Error::InvalidConfig("init_labeled exceeds pool_size".into()));
        }
        if self.per_epoch == 0 {
            return Err(Error::InvalidConfig("per_epoch must be at least 1".into()));
        }
        if self.hidden_width == 0 || self.hidden_layers == 0 {
            return Err(Error::InvalidConfig("network needs at least one nonempty hidden layer".into()));
        }
        if !(self.inflation >= 0.0) {
            return Err(Error::InvalidConfig("inflation must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub oracle_calls: usize,
    pub hull_labels: usize,
    pub mean_loss: f64,
}

impl EpochRecord {
    fn new(epoch: usize, report: &EvalReport, oracle_calls: usize, hull_labels: usize, mean_loss: f64) -> Self {
        Self {
            epoch,
            f1: report.f1,
            precision: report.precision,
            recall: report.recall,
            oracle_calls,
            hull_labels,
            mean_loss,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoopState<S> {
    /// Unlabeled pool, in draw order.
    pub pool: Vec<Vec<S>>,
    pub labeled: Vec<SamplePoint<S>>,
    pub inner: InnerSet<S>,
    pub inner_box: Option<InnerBox<S>>,
    pub params: MlpParams<S>,
    pub bbox: BoundingBox<S>,
    pub epoch: usize,
    pub oracle_calls: usize,
    pub hull_labels: usize,
    /// Labels counted against `label_budget`.
    pub charged: usize,
    /// Set when the inner box solved to zero width.
    pub degenerate_box: bool,
    /// Set once a selected point was left unlabeled for lack of budget.
    pub budget_exhausted: bool,
    rng: seed::Rng,
}

/// The model plus configuration of one active-learning run.
pub struct Learner<'m, S: Scalar> {
    pub model: &'m CompactModel<S>,
    pub cfg: ActiveConfig,
    pub train: TrainConfig,
    pub tols: SolverTolerances<S>,
    oracle: Oracle<'m, S>,
}

impl<'m, S: Scalar> Learner<'m, S> {
    pub fn new(model: &'m CompactModel<S>, cfg: ActiveConfig, train: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        train.validate()?;
        model.check_dims()?;
        Ok(Self { model, cfg, train, tols: SolverTolerances::default(), oracle: Oracle::new(model) })
    }

    fn layer_sizes(&self) -> Vec<usize> {
        mlp::default_layer_sizes(self.model.t, self.cfg.hidden_width, self.cfg.hidden_layers)
    }

    fn fresh_params(&self, norm: &Normalization<S>, index: u64) -> Result<MlpParams<S>> {
        MlpParams::init(&self.layer_sizes(), seed::derive(self.cfg.seed, "mlp", index))?.with_norm(norm.clone())
    }

    /// Draws the pool, solves the inner box, labels the initial set.
    pub fn initialize(&self, warm: Option<&MlpParams<S>>) -> Result<LoopState<S>> {
        let cfg = &self.cfg;
        let bbox = oracle::bounding_box(self.model, S::lit(cfg.inflation), &self.tols)?;
        let mut pool = bbox.sample(&mut seed::stream(cfg.seed, "pool"), cfg.pool_size);

        let (inner, inner_box, degenerate_box) = if cfg.use_inner_box {
            let ib = robust_box::solve_inner_box(self.model, &self.tols)?;
            let degenerate = ib.degenerate;
            let set = if degenerate {
                InnerSet::empty(self.model.t)
            } else {
                InnerSet::with_box(ib.p0_minus.clone(), ib.p0_plus.clone())
            };
            (set, Some(ib), degenerate)
        } else {
            (InnerSet::empty(self.model.t), None, false)
        };

        let (lo, hi) = bbox.inflated();
        let norm = Normalization::from_bounds(&lo, &hi)?;
        let params = match warm {
            Some(ckpt) => mlp::transfer_load(ckpt, cfg.freeze_prefix, self.model.t)?,
            None => self.fresh_params(&norm, 0)?,
        };

        let mut state = LoopState {
            pool: Vec::new(),
            labeled: Vec::new(),
            inner,
            inner_box,
            params,
            bbox,
            epoch: 0,
            oracle_calls: 0,
            hull_labels: 0,
            charged: 0,
            degenerate_box,
            budget_exhausted: false,
            rng: seed::stream(cfg.seed, "select"),
        };

        let mut picks = index::sample(&mut seed::stream(cfg.seed, "init"), pool.len(), cfg.init_labeled).into_vec();
        picks.sort_unstable();
        let chosen: Vec<Vec<S>> = picks.iter().map(|&i| pool[i].clone()).collect();
        remove_indices(&mut pool, &picks);
        state.pool = pool;
        for q in chosen {
            if self.budget_left(&state) {
                let sample = self.label_point(&mut state, &q)?.expect("budget checked");
                if sample.provenance == oracle::Provenance::GeometricMember {
                    state.charged += 1;
                }
                state.labeled.push(sample);
            } else {
                state.budget_exhausted = true;
                state.pool.push(q);
            }
        }
        Ok(state)
    }

    fn budget_left(&self, state: &LoopState<S>) -> bool {
        self.cfg.label_budget.is_none_or(|b| state.charged < b)
    }

    /// Labels one point; `None` when the oracle is needed but the budget is spent.
    pub fn label_point(&self, state: &mut LoopState<S>, q: &[S]) -> Result<Option<SamplePoint<S>>> {
        if self.cfg.use_hull_labeling && state.inner.is_member_with(q, &self.tols)? {
            state.hull_labels += 1;
            return Ok(Some(SamplePoint::hull(q.to_vec())));
        }
        if !self.budget_left(state) {
            state.budget_exhausted = true;
            return Ok(None);
        }
        let verdict = self.oracle.check(q)?;
        state.oracle_calls += 1;
        state.charged += 1;
        if verdict.label == Label::Feasible {
            state.inner.grow_with(&[q.to_vec()], &self.tols)?;
        }
        Ok(Some(SamplePoint::oracle(q.to_vec(), verdict.label)))
    }

    /// Pool indices to label next, in labeling order.
    pub fn select(&self, state: &mut LoopState<S>) -> Result<Vec<usize>> {
        if state.pool.is_empty() {
            return Err(Error::EmptyPool);
        }
        let k = self.cfg.per_epoch.min(state.pool.len());
        match self.cfg.strategy {
            Strategy::Random => {
                let mut picks = index::sample(&mut state.rng, state.pool.len(), k).into_vec();
                picks.sort_unstable();
                Ok(picks)
            }
            Strategy::Uncertainty => {
                let post = state.params.posterior_rows(&state.pool)?;
                let m = mlp::uncertainty(post.as_slice().expect("contiguous posterior"))?;
                Ok(top_k(&m, k))
            }
        }
    }

    /// One select/label/train round.
    pub fn run_epoch(&self, state: &mut LoopState<S>) -> Result<Vec<S>> {
        let picks = self.select(state)?;
        let chosen: Vec<Vec<S>> = picks.iter().map(|&i| state.pool[i].clone()).collect();
        let mut sorted = picks;
        sorted.sort_unstable();
        remove_indices(&mut state.pool, &sorted);
        let mut skipped = Vec::new();
        for q in chosen {
            match self.label_point(state, &q)? {
                Some(sample) => state.labeled.push(sample),
                None => skipped.push(q),
            }
        }
        state.pool.extend(skipped);

        state.epoch += 1;
        if self.cfg.reinit_each_epoch {
            let norm = state.params.norm.clone();
            let frozen = state.params.frozen.clone();
            state.params = self.fresh_params(&norm, state.epoch as u64)?;
            state.params.frozen = frozen;
        }
        let train =
            TrainConfig { seed: seed::derive(self.cfg.seed, "train", state.epoch as u64), ..self.train.clone() };
        let trace = if state.labeled.is_empty() {
            Vec::new()
        } else {
            mlp::train_epoch(&mut state.params, &state.labeled, &train)?
        };
        state.params.meta.epochs += 1;
        state.inner.redundancy_prune_with(&self.tols)?;
        Ok(trace)
    }

    /// Initializes and runs up to `epochs` rounds, scoring against `eval_set`
    /// after each. `on_epoch` sees the state after every round.
    pub fn run_with(
        &self,
        warm: Option<&MlpParams<S>>,
        eval_set: &[SamplePoint<S>],
        mut on_epoch: impl FnMut(&LoopState<S>, &EpochRecord) -> Result<()>,
    ) -> Result<RunResult<S>> {
        let mut state = self.initialize(warm)?;
        let initial = eval::score(&state.params, eval_set)?;
        let initial = EpochRecord::new(0, &initial, state.oracle_calls, state.hull_labels, f64::NAN);
        let mut history = Vec::new();
        for _ in 0..self.cfg.epochs {
            if state.pool.is_empty() || state.budget_exhausted {
                break;
            }
            let trace = self.run_epoch(&mut state)?;
            let mean_loss = if trace.is_empty() {
                f64::NAN
            } else {
                trace.iter().map(|v| v.as_f64()).sum::<f64>() / trace.len() as f64
            };
            let report = eval::score(&state.params, eval_set)?;
            let rec = EpochRecord::new(state.epoch, &report, state.oracle_calls, state.hull_labels, mean_loss);
            on_epoch(&state, &rec)?;
            history.push(rec);
        }
        Ok(RunResult { params: state.params.clone(), state, initial, history })
    }

    /// [`run_with`](Self::run_with) against a held-out set drawn with the
    /// run seed.
    pub fn run(&self, warm: Option<&MlpParams<S>>) -> Result<RunResult<S>> {
        let eval_set = eval::make_test_set(self.model, self.cfg.eval_count, S::lit(self.cfg.inflation), self.cfg.seed)?;
        self.run_with(warm, &eval_set, |_, _| Ok(()))
    }
}

#[derive(Debug, Clone)]
pub struct RunResult<S> {
    pub params: MlpParams<S>,
    pub state: LoopState<S>,
    /// Score of the initial parameters, before any epoch.
    pub initial: EpochRecord,
    pub history: Vec<EpochRecord>,
}

/// Removes the given ascending indices while preserving order.
fn remove_indices<T>(v: &mut Vec<T>, sorted: &[usize]) {
    let mut it = sorted.iter().peekable();
    let mut i = 0;
    v.retain(|_| {
        let drop = it.peek().is_some_and(|&&j| j == i);
        if drop {
            it.next();
        }
        i += 1;
        !drop
    });
}

/// Indices of the `k` largest values; ties go to the lower index.
pub fn top_k<S: Scalar>(values: &[S], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}
