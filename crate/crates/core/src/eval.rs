//! Held-out scoring and the benchmark experiments: uncertainty heatmap,
//! rolling-horizon transfer, injection-uncertainty sweep and timing.

use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::active::{ActiveConfig, EpochRecord, Learner};
use crate::error::{Error, Result};
use crate::lp::SolverTolerances;
use crate::mlp::{self, MlpParams, TrainConfig};
use crate::network::{self, CompactModel, DerKind, DerSpec, FeederSpec};
use crate::oracle::{self, BoundingBox, Label, Oracle, SamplePoint};
use crate::scalar::Scalar;
use crate::seed;

/// Confusion counts with "feasible" as the positive class.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub classify_per_sample_s: f64,
    pub oracle_per_sample_s: Option<f64>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        Self {
            tp,
            fp,
            fn_,
            tn,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            f1: ratio(2 * tp, 2 * tp + fp + fn_),
            accuracy: ratio(tp + tn, tp + fp + fn_ + tn),
            ..Self::default()
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// `FP / (FP + TN)`: share of truly infeasible points predicted feasible.
    pub fn false_feasible_rate(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }
}

/// Uniform test points from the inflated box, drawn from the `test` stream.
pub fn test_points<S: Scalar>(bbox: &BoundingBox<S>, count: usize, seed: u64) -> Result<Vec<Vec<S>>> {
    if count == 0 {
        return Err(Error::InvalidCount(0));
    }
    Ok(bbox.sample(&mut seed::stream(seed, "test"), count))
}

/// Oracle-labeled test set plus the mean labeling time per point.
pub fn make_test_set_timed<S: Scalar>(
    model: &CompactModel<S>,
    count: usize,
    inflation: S,
    seed: u64,
) -> Result<(Vec<SamplePoint<S>>, f64)> {
    if count == 0 {
        return Err(Error::InvalidCount(0));
    }
    let bbox = oracle::bounding_box(model, inflation, &SolverTolerances::default())?;
    let pts = test_points(&bbox, count, seed)?;
    let timed = oracle::label_batch(model, &pts)?;
    let mean = timed.iter().map(|t| t.seconds).sum::<f64>() / timed.len() as f64;
    Ok((timed.into_iter().map(|t| t.sample).collect(), mean))
}

pub fn make_test_set<S: Scalar>(
    model: &CompactModel<S>,
    count: usize,
    inflation: S,
    seed: u64,
) -> Result<Vec<SamplePoint<S>>> {
    Ok(make_test_set_timed(model, count, inflation, seed)?.0)
}

/// Confusion counts of `params` on a labeled set.
pub fn score<S: Scalar>(params: &MlpParams<S>, test: &[SamplePoint<S>]) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let rows: Vec<Vec<S>> = test.iter().map(|s| s.p0.clone()).collect();
    let start = Instant::now();
    let pred = params.classify_rows(&rows)?;
    let elapsed = start.elapsed().as_secs_f64();
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (s, p) in test.iter().zip(pred) {
        let truth = match s.label {
            Label::Feasible => true,
            Label::Infeasible => false,
            Label::Unlabeled => return Err(Error::OutOfRange("unlabeled point in test set".into())),
        };
        match (p, truth) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let mut r = EvalReport::from_counts(tp, fp, fn_, tn);
    r.classify_per_sample_s = elapsed / test.len() as f64;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub x: f64,
    pub y: f64,
    pub posterior: f64,
    pub uncertainty: f64,
    pub oracle: i8,
}

/// Cell centers of a `resolution × resolution` grid over the inflated box in
/// coordinates `window`, other coordinates held at the box center. Row-major
/// with `x` varying fastest.
pub fn grid_points<S: Scalar>(bbox: &BoundingBox<S>, window: (usize, usize), resolution: usize) -> Result<Vec<Vec<S>>> {
    let t = bbox.dim();
    if window.0 >= t || window.1 >= t || window.0 == window.1 {
        return Err(Error::InvalidConfig(format!("grid window {window:?} invalid for {t} coordinates")));
    }
    if resolution == 0 {
        return Err(Error::InvalidCount(0));
    }
    let (lo, hi) = bbox.inflated();
    let center: Vec<S> = lo.iter().zip(&hi).map(|(l, h)| (*l + *h) / S::lit(2.0)).collect();
    let at = |k: usize, i: usize| lo[k] + (hi[k] - lo[k]) * S::lit((i as f64 + 0.5) / resolution as f64);
    let mut pts = Vec::with_capacity(resolution * resolution);
    for iy in 0..resolution {
        for ix in 0..resolution {
            let mut p = center.clone();
            p[window.0] = at(window.0, ix);
            p[window.1] = at(window.1, iy);
            pts.push(p);
        }
    }
    Ok(pts)
}

/// Posterior, uncertainty and oracle label over a 2-D grid.
pub fn heatmap_grid<S: Scalar>(
    params: &MlpParams<S>,
    model: &CompactModel<S>,
    window: (usize, usize),
    resolution: usize,
    inflation: S,
) -> Result<Vec<GridRow>> {
    let bbox = oracle::bounding_box(model, inflation, &SolverTolerances::default())?;
    let pts = grid_points(&bbox, window, resolution)?;
    let post = params.posterior_rows(&pts)?;
    let unc = mlp::uncertainty(post.as_slice().expect("contiguous posterior"))?;
    let labels = oracle::label_batch(model, &pts)?;
    Ok(pts
        .iter()
        .zip(post.iter().zip(&unc))
        .zip(&labels)
        .map(|((p, (pp, m)), l)| GridRow {
            x: p[window.0].as_f64(),
            y: p[window.1].as_f64(),
            posterior: pp.as_f64(),
            uncertainty: m.as_f64(),
            oracle: l.sample.label.code(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowHistory {
    pub window: usize,
    /// Epoch 0 is the score before any training round.
    pub warm: Vec<EpochRecord>,
    pub cold: Vec<EpochRecord>,
}

/// Runs every window cold, and from the second window on also warm-started
/// from the previous window's warm checkpoint. `windows` are opaque ids
/// handed to `model_factory`; windows share the run seed.
pub fn rolling_horizon<S: Scalar>(
    mut model_factory: impl FnMut(usize) -> Result<CompactModel<S>>,
    windows: &[usize],
    cfg: &ActiveConfig,
    train: &TrainConfig,
) -> Result<Vec<WindowHistory>> {
    if windows.is_empty() {
        return Err(Error::InvalidConfig("rolling horizon needs at least one window".into()));
    }
    let mut out = Vec::with_capacity(windows.len());
    let mut prev: Option<(usize, MlpParams<S>)> = None;
    for &w in windows {
        let model = model_factory(w)?;
        let learner = Learner::new(&model, cfg.clone(), train.clone())?;
        let eval_set = make_test_set(&model, cfg.eval_count, S::lit(cfg.inflation), cfg.seed)?;
        let full = |r: crate::active::RunResult<S>| {
            let mut h = vec![r.initial.clone()];
            h.extend(r.history.iter().cloned());
            (h, r.params)
        };
        let (cold, cold_params) = full(learner.run_with(None, &eval_set, |_, _| Ok(()))?);
        let (warm, params) = match &prev {
            Some((pw, ckpt)) => {
                let (h, mut p) = full(learner.run_with(Some(ckpt), &eval_set, |_, _| Ok(()))?);
                p.meta.source_window = Some(pw.to_string());
                (h, p)
            }
            None => (cold.clone(), cold_params),
        };
        out.push(WindowHistory { window: w, warm, cold });
        prev = Some((w, params));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub level: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub scenarios_retried: usize,
}

/// Multiplies every bus-step load and every interval-DER bound by
/// independent factors from `U[1 − level, 1 + level]`.
pub fn perturb<S: Scalar>(
    feeder: &FeederSpec<S>,
    ders: &[DerSpec<S>],
    level: f64,
    rng: &mut seed::Rng,
) -> (FeederSpec<S>, Vec<DerSpec<S>>) {
    let mut factor = || S::lit(rng.random_range(1.0 - level..=1.0 + level));
    let mut f = feeder.clone();
    for bus in f.loads.iter_mut() {
        for v in bus.iter_mut() {
            *v *= factor();
        }
    }
    let mut d = ders.to_vec();
    for der in d.iter_mut().filter(|d| matches!(d.kind, DerKind::Interval)) {
        for t in 0..der.p_max.len() {
            let k = factor();
            der.p_min[t] *= k;
            der.p_max[t] *= k;
        }
    }
    (f, d)
}

/// Scores nominal `params` against test points relabeled under perturbed
/// models. Test points come from the nominal sampling box with the test-set
/// seed, so level 0 reproduces the nominal score.
#[allow(clippy::too_many_arguments)]
pub fn robustness_sweep<S: Scalar>(
    nominal_feeder: &FeederSpec<S>,
    ders: &[DerSpec<S>],
    levels: &[f64],
    per_level_count: usize,
    params: &MlpParams<S>,
    inflation: S,
    seed: u64,
) -> Result<Vec<RobustnessRow>> {
    const RETRIES: usize = 10;
    let tols = SolverTolerances::default();
    let nominal = network::assemble_compact(nominal_feeder, ders, &tols)?;
    let bbox = oracle::bounding_box(&nominal, inflation, &tols)?;
    let pts = test_points(&bbox, per_level_count, seed)?;
    let mut rows = Vec::with_capacity(levels.len());
    for (li, &level) in levels.iter().enumerate() {
        if !(0.0..=1.0).contains(&level) {
            return Err(Error::InvalidConfig(format!("perturbation level {level} outside [0, 1]")));
        }
        let mut attempt = 0;
        let model = loop {
            let mut rng = seed::stream_at(seed, "perturb", (li * (RETRIES + 1) + attempt) as u64);
            let (f, d) = perturb(nominal_feeder, ders, level, &mut rng);
            match network::assemble_compact(&f, &d, &tols) {
                Ok(m) => break m,
                Err(Error::EmptyInterior { .. } | Error::InfeasibleModel) if attempt < RETRIES => attempt += 1,
                Err(e) => return Err(e),
            }
        };
        let labeled: Vec<SamplePoint<S>> = oracle::label_batch(&model, &pts)?.into_iter().map(|t| t.sample).collect();
        let r = score(params, &labeled)?;
        rows.push(RobustnessRow {
            level,
            f1: r.f1,
            precision: r.precision,
            recall: r.recall,
            scenarios_retried: attempt,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub classify_per_sample_s: f64,
    pub oracle_per_sample_s: f64,
    /// Oracle time over classification time.
    pub ratio: f64,
}

/// Per-sample wall time of batch classification against per-sample oracle LPs.
pub fn timing_benchmark<S: Scalar>(
    params: &MlpParams<S>,
    model: &CompactModel<S>,
    batch_size: usize,
    inflation: S,
    seed: u64,
) -> Result<Timing> {
    if batch_size < 100 {
        return Err(Error::InvalidCount(batch_size));
    }
    let bbox = oracle::bounding_box(model, inflation, &SolverTolerances::default())?;
    let pts = bbox.sample(&mut seed::stream(seed, "timing"), batch_size);
    let x = mlp::rows_to_matrix(&pts, model.t)?;
    // warm caches once, then time
    params.classify(x.view())?;
    let start = Instant::now();
    params.classify(x.view())?;
    let classify = start.elapsed().as_secs_f64() / batch_size as f64;

    let oracle = Oracle::new(model);
    let start = Instant::now();
    for p in &pts {
        oracle.check(p)?;
    }
    let oracle_t = start.elapsed().as_secs_f64() / batch_size as f64;
    Ok(Timing {
        classify_per_sample_s: classify,
        oracle_per_sample_s: oracle_t,
        ratio: oracle_t / classify.max(f64::MIN_POSITIVE),
    })
}
