//! Ground-truth membership test for substation profiles and the projection
//! bounding box used as the sampling region.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpStatus, SolverTolerances};
use crate::network::CompactModel;
use crate::scalar::Scalar;

/// Slack objective at or below which a profile counts as feasible.
pub const LABEL_TOL: f64 = 1e-6;

/// Default symmetric inflation of the sampling box (fraction of each width per side).
pub const DEFAULT_INFLATION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Feasible,
    Infeasible,
    Unlabeled,
}

impl Label {
    /// `1`, `0` or `−1` as written to CSV files.
    pub fn code(self) -> i8 {
        match self {
            Label::Feasible => 1,
            Label::Infeasible => 0,
            Label::Unlabeled => -1,
        }
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            1 => Some(Label::Feasible),
            0 => Some(Label::Infeasible),
            -1 => Some(Label::Unlabeled),
            _ => None,
        }
    }

    pub fn is_feasible(self) -> bool {
        self == Label::Feasible
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    OracleLp,
    GeometricMember,
    None,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::OracleLp => "oracle",
            Provenance::GeometricMember => "hull",
            Provenance::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "oracle" => Some(Provenance::OracleLp),
            "hull" => Some(Provenance::GeometricMember),
            "none" => Some(Provenance::None),
            _ => None,
        }
    }
}

/// A substation profile with its label and where the label came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint<S> {
    pub p0: Vec<S>,
    pub label: Label,
    pub provenance: Provenance,
}

impl<S: Scalar> SamplePoint<S> {
    pub fn unlabeled(p0: Vec<S>) -> Self {
        Self { p0, label: Label::Unlabeled, provenance: Provenance::None }
    }

    pub fn oracle(p0: Vec<S>, label: Label) -> Self {
        Self { p0, label, provenance: Provenance::OracleLp }
    }

    pub fn hull(p0: Vec<S>) -> Self {
        Self { p0, label: Label::Feasible, provenance: Provenance::GeometricMember }
    }

    /// Label/provenance pairing rules.
    pub fn is_consistent(&self) -> bool {
        match self.provenance {
            Provenance::GeometricMember => self.label == Label::Feasible,
            Provenance::OracleLp => self.label != Label::Unlabeled,
            Provenance::None => self.label == Label::Unlabeled,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict<S> {
    pub label: Label,
    /// DER schedule reproducing the profile, when feasible.
    pub witness: Option<Vec<S>>,
    /// Optimal total slack.
    pub slack: S,
}

/// Slack-minimization feasibility oracle for one model.
///
/// For a profile `p0` it solves
/// `min 1ᵀu + 1ᵀ(s⁺ + s⁻)` s.t. `W p − u ≤ z`, `D p + s⁺ − s⁻ = p0 − b`,
/// `u, s⁺, s⁻ ≥ 0`, and declares `p0` feasible iff the optimum is at most
/// `label_tol`. The equality is kept exact; only the objective measures slack.
#[derive(Debug, Clone)]
pub struct Oracle<'m, S: Scalar> {
    model: &'m CompactModel<S>,
    template: LpProblem<S>,
    pub tols: SolverTolerances<S>,
    pub label_tol: S,
}

impl<'m, S: Scalar> Oracle<'m, S> {
    pub fn new(model: &'m CompactModel<S>) -> Self {
        Self::with_tolerances(model, SolverTolerances::default(), S::lit(LABEL_TOL))
    }

    pub fn with_tolerances(model: &'m CompactModel<S>, tols: SolverTolerances<S>, label_tol: S) -> Self {
        let nv = model.num_vars();
        let k = model.num_rows();
        let t = model.t;
        let total = nv + k + 2 * t;
        let mut lp = LpProblem::new(total);
        for j in nv..total {
            lp.set_nonneg(j);
            lp.objective[j] = S::one();
        }
        let mut a_ub = ndarray::Array2::zeros((k, total));
        a_ub.slice_mut(ndarray::s![.., ..nv]).assign(&model.w);
        for i in 0..k {
            a_ub[(i, nv + i)] = -S::one();
        }
        let mut a_eq = ndarray::Array2::zeros((t, total));
        a_eq.slice_mut(ndarray::s![.., ..nv]).assign(&model.d);
        for r in 0..t {
            a_eq[(r, nv + k + r)] = S::one();
            a_eq[(r, nv + k + t + r)] = -S::one();
        }
        lp.a_ub = a_ub;
        lp.b_ub = model.z.to_vec();
        lp.a_eq = a_eq;
        lp.b_eq = vec![S::zero(); t];
        Self { model, template: lp, tols, label_tol }
    }

    pub fn model(&self) -> &CompactModel<S> {
        self.model
    }

    /// The slack LP for a given profile (for debugging dumps).
    pub fn problem_for(&self, p0: &[S]) -> Result<LpProblem<S>> {
        if p0.len() != self.model.t {
            return Err(Error::DimensionMismatch(format!(
                "profile has {} steps, model has {}",
                p0.len(),
                self.model.t
            )));
        }
        let mut lp = self.template.clone();
        for (r, v) in lp.b_eq.iter_mut().enumerate() {
            *v = p0[r] - self.model.b[r];
        }
        Ok(lp)
    }

    pub fn check(&self, p0: &[S]) -> Result<Verdict<S>> {
        let lp = self.problem_for(p0)?;
        let sol = lp::solve_with_retry(&lp, &self.tols)?;
        match sol.status {
            LpStatus::Optimal => {
                let feasible = sol.objective_value <= self.label_tol;
                let nv = self.model.num_vars();
                Ok(Verdict {
                    label: if feasible { Label::Feasible } else { Label::Infeasible },
                    witness: feasible.then(|| sol.x[..nv].to_vec()),
                    slack: sol.objective_value,
                })
            }
            // The slack LP is always feasible and bounded below by zero.
            status => Err(Error::Solver(lp::LpError::NumericalFailure(format!("slack LP reported {status}")))),
        }
    }

    pub fn is_feasible(&self, p0: &[S]) -> Result<bool> {
        Ok(self.check(p0)?.label == Label::Feasible)
    }
}

/// One-shot [`Oracle::check`] with default tolerances.
pub fn check_feasible<S: Scalar>(model: &CompactModel<S>, p0: &[S]) -> Result<Verdict<S>> {
    Oracle::new(model).check(p0)
}

/// A labeled point plus the wall time its label took.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedSample<S> {
    pub sample: SamplePoint<S>,
    pub seconds: f64,
}

/// Labels every point with the oracle. Points are processed in parallel;
/// output order follows input order.
pub fn label_batch<S: Scalar>(model: &CompactModel<S>, points: &[Vec<S>]) -> Result<Vec<TimedSample<S>>> {
    label_batch_with(&Oracle::new(model), points)
}

pub fn label_batch_with<S: Scalar>(oracle: &Oracle<'_, S>, points: &[Vec<S>]) -> Result<Vec<TimedSample<S>>> {
    points
        .par_iter()
        .enumerate()
        .map(|(index, p0)| {
            let start = Instant::now();
            let verdict = oracle.check(p0).map_err(|e| match e {
                Error::Solver(source) => Error::SolverAt { index, source },
                other => other,
            })?;
            Ok(TimedSample {
                sample: SamplePoint::oracle(p0.clone(), verdict.label),
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// Per-coordinate projection bounds of the flexibility set plus an inflation
/// factor defining the sampling region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox<S> {
    pub lo: Vec<S>,
    pub hi: Vec<S>,
    pub inflation: S,
}

impl<S: Scalar> BoundingBox<S> {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Bounds widened by `inflation × width` on each side.
    pub fn inflated(&self) -> (Vec<S>, Vec<S>) {
        let lo = self.lo.iter().zip(&self.hi).map(|(l, h)| *l - self.inflation * (*h - *l)).collect();
        let hi = self.lo.iter().zip(&self.hi).map(|(l, h)| *h + self.inflation * (*h - *l)).collect();
        (lo, hi)
    }

    pub fn contains(&self, p0: &[S], tol: S) -> bool {
        p0.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| *v >= *l - tol && *v <= *h + tol)
    }

    /// Uniform draws from the inflated box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<Vec<S>> {
        let (lo, hi) = self.inflated();
        (0..count)
            .map(|_| lo.iter().zip(&hi).map(|(l, h)| if l < h { rng.random_range(*l..*h) } else { *l }).collect())
            .collect()
    }
}

/// Solves the `2T` projection LPs `min/max (D p + b)_t` over `W p ≤ z`.
pub fn bounding_box<S: Scalar>(
    model: &CompactModel<S>,
    inflation: S,
    tols: &SolverTolerances<S>,
) -> Result<BoundingBox<S>> {
    if !(inflation >= S::zero()) {
        return Err(Error::InvalidConfig(format!("inflation {inflation} must be ≥ 0")));
    }
    let base = model.der_polytope();
    let mut lo = Vec::with_capacity(model.t);
    let mut hi = Vec::with_capacity(model.t);
    for t in 0..model.t {
        let row = model.d.row(t);
        let mut bounds = [S::zero(); 2];
        for (slot, sign) in [S::one(), -S::one()].into_iter().enumerate() {
            let mut lp = base.clone();
            for (c, v) in lp.objective.iter_mut().zip(row.iter()) {
                *c = sign * *v;
            }
            let sol = lp::solve_with_retry(&lp, tols)?;
            match sol.status {
                LpStatus::Optimal => bounds[slot] = sign * sol.objective_value + model.b[t],
                LpStatus::Unbounded => return Err(Error::UnboundedModel),
                LpStatus::Infeasible => return Err(Error::InfeasibleModel),
            }
        }
        lo.push(bounds[0]);
        hi.push(bounds[1]);
    }
    Ok(BoundingBox { lo, hi, inflation })
}
