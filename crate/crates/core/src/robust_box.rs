//! Largest hyperbox of substation profiles that can be tracked by an affine
//! DER policy — a certified inner approximation of the flexibility set.
//!
//! With the box written as `p0 = c + diag(r)·ξ`, `ξ ∈ [−1, 1]^T`, and the
//! policy `p(ξ) = Ê ξ + f̂`, robust satisfaction of `W p ≤ z` over the box is
//! exactly `|W Ê|·1 + W f̂ ≤ z`. Introducing `Λ ≥ |W Ê|` elementwise gives one
//! LP:
//!
//! ```text
//! max 1ᵀr  s.t.  D Ê = diag(r),  D f̂ = c − b,
//!                Λ ≥ W Ê,  Λ ≥ −W Ê,  Λ·1 + W f̂ ≤ z,  r ≥ 0
//! ```

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpStatus, SolverTolerances};
use crate::network::CompactModel;
use crate::scalar::Scalar;

/// Total radius at or below which the box is reported degenerate.
pub const BOX_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePolicy<S> {
    /// `mT × T` response of the DER schedule to the normalized profile `ξ`.
    pub e_hat: Array2<S>,
    /// Schedule at the box center.
    pub f_hat: Array1<S>,
    pub center: Vec<S>,
    pub radius: Vec<S>,
}

impl<S: Scalar> AffinePolicy<S> {
    /// DER schedule for normalized coordinates `ξ ∈ [−1, 1]^T`.
    pub fn schedule(&self, xi: &[S]) -> Vec<S> {
        (self.e_hat.dot(&ndarray::ArrayView1::from(xi)) + &self.f_hat).to_vec()
    }

    /// Profile `c + diag(r)·ξ`.
    pub fn profile(&self, xi: &[S]) -> Vec<S> {
        self.center.iter().zip(&self.radius).zip(xi).map(|((c, r), x)| *c + *r * *x).collect()
    }

    /// `max_k (|W Ê|·1 + W f̂ − z)_k`; nonpositive iff the policy is robustly feasible.
    pub fn certificate_margin(&self, model: &CompactModel<S>) -> S {
        let we = model.w.dot(&self.e_hat);
        let wf = model.w.dot(&self.f_hat);
        (0..model.num_rows())
            .map(|k| we.row(k).iter().fold(S::zero(), |a, v| a + v.abs()) + wf[k] - model.z[k])
            .fold(S::neg_infinity(), S::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerBox<S> {
    pub p0_minus: Vec<S>,
    pub p0_plus: Vec<S>,
    /// Total width `1ᵀ(p0⁺ − p0⁻)`.
    pub objective: S,
    pub degenerate: bool,
    pub policy: AffinePolicy<S>,
}

impl<S: Scalar> InnerBox<S> {
    pub fn contains(&self, p0: &[S], tol: S) -> bool {
        p0.iter().zip(self.p0_minus.iter().zip(&self.p0_plus)).all(|(v, (lo, hi))| *v >= *lo - tol && *v <= *hi + tol)
    }

    pub fn volume(&self) -> S {
        self.p0_minus.iter().zip(&self.p0_plus).fold(S::one(), |acc, (lo, hi)| acc * (*hi - *lo))
    }
}

struct Layout {
    t: usize,
    nv: usize,
    k: usize,
}

impl Layout {
    fn c(&self, t: usize) -> usize {
        t
    }
    fn r(&self, t: usize) -> usize {
        self.t + t
    }
    fn e(&self, col: usize, tp: usize) -> usize {
        2 * self.t + col * self.t + tp
    }
    fn f(&self, col: usize) -> usize {
        2 * self.t + self.nv * self.t + col
    }
    fn lambda(&self, row: usize, tp: usize) -> usize {
        2 * self.t + self.nv * self.t + self.nv + row * self.t + tp
    }
    fn total(&self) -> usize {
        2 * self.t + self.nv * self.t + self.nv + self.k * self.t
    }
}

/// Builds the affine-policy LP (minimization of `−1ᵀr`).
pub fn inner_box_problem<S: Scalar>(model: &CompactModel<S>) -> LpProblem<S> {
    let lay = Layout { t: model.t, nv: model.num_vars(), k: model.num_rows() };
    let total = lay.total();
    let mut lp = LpProblem::new(total);
    for t in 0..lay.t {
        lp.set_nonneg(lay.r(t));
        lp.objective[lay.r(t)] = -S::one();
    }
    for row in 0..lay.k {
        for tp in 0..lay.t {
            lp.set_nonneg(lay.lambda(row, tp));
        }
    }

    // D Ê = diag(r)
    for t in 0..lay.t {
        for tp in 0..lay.t {
            let mut a = vec![S::zero(); total];
            for col in 0..lay.nv {
                a[lay.e(col, tp)] = model.d[(t, col)];
            }
            if t == tp {
                a[lay.r(t)] = -S::one();
            }
            lp.add_eq(&a, S::zero());
        }
    }
    // D f̂ − c = −b
    for t in 0..lay.t {
        let mut a = vec![S::zero(); total];
        for col in 0..lay.nv {
            a[lay.f(col)] = model.d[(t, col)];
        }
        a[lay.c(t)] = -S::one();
        lp.add_eq(&a, -model.b[t]);
    }
    // ±(W Ê)[k, t'] − Λ[k, t'] ≤ 0
    for row in 0..lay.k {
        for tp in 0..lay.t {
            for sign in [S::one(), -S::one()] {
                let mut a = vec![S::zero(); total];
                for col in 0..lay.nv {
                    a[lay.e(col, tp)] = sign * model.w[(row, col)];
                }
                a[lay.lambda(row, tp)] = -S::one();
                lp.add_le(&a, S::zero());
            }
        }
    }
    // Λ·1 + W f̂ ≤ z
    for row in 0..lay.k {
        let mut a = vec![S::zero(); total];
        for col in 0..lay.nv {
            a[lay.f(col)] = model.w[(row, col)];
        }
        for tp in 0..lay.t {
            a[lay.lambda(row, tp)] = S::one();
        }
        lp.add_le(&a, model.z[row]);
    }
    lp
}

/// Solves for the widest certified hyperbox.
pub fn solve_inner_box<S: Scalar>(model: &CompactModel<S>, tols: &SolverTolerances<S>) -> Result<InnerBox<S>> {
    model.check_dims()?;
    let lp = inner_box_problem(model);
    let sol = lp::solve_with_retry(&lp, tols)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::InfeasibleModel),
        LpStatus::Unbounded => return Err(Error::UnboundedModel),
    }
    let lay = Layout { t: model.t, nv: model.num_vars(), k: model.num_rows() };
    let x = &sol.x;
    let center: Vec<S> = (0..lay.t).map(|t| x[lay.c(t)]).collect();
    let radius: Vec<S> = (0..lay.t).map(|t| x[lay.r(t)].max(S::zero())).collect();
    let mut e_hat = Array2::zeros((lay.nv, lay.t));
    for col in 0..lay.nv {
        for tp in 0..lay.t {
            e_hat[(col, tp)] = x[lay.e(col, tp)];
        }
    }
    let f_hat = Array1::from_iter((0..lay.nv).map(|col| x[lay.f(col)]));
    let total_radius = radius.iter().fold(S::zero(), |a, r| a + *r);
    let p0_minus = center.iter().zip(&radius).map(|(c, r)| *c - *r).collect();
    let p0_plus = center.iter().zip(&radius).map(|(c, r)| *c + *r).collect();
    Ok(InnerBox {
        p0_minus,
        p0_plus,
        objective: S::lit(2.0) * total_radius,
        degenerate: total_radius <= S::lit(BOX_EPS),
        policy: AffinePolicy { e_hat, f_hat, center, radius },
    })
}
