//! Certified convex inner subset of the flexibility set: the robust hyperbox
//! together with oracle-verified feasible profiles, kept as a V-representation.
//!
//! Membership of `q` is the LP
//! `μ + Σλ_j = 1, μ·lo ≤ w ≤ μ·hi, q = w + Σ λ_j v_j, μ, λ ≥ 0`
//! (the box terms are dropped when there is no box). Because the flexibility
//! set is convex, every member of this hull is feasible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, SolverTolerances};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerSet<S> {
    pub dim: usize,
    /// `(lo, hi)` of the seeding hyperbox.
    pub bounds: Option<(Vec<S>, Vec<S>)>,
    pub vertices: Vec<Vec<S>>,
    /// Incremented whenever a vertex is added.
    pub generation: u64,
}

impl<S: Scalar> InnerSet<S> {
    pub fn empty(dim: usize) -> Self {
        Self { dim, bounds: None, vertices: Vec::new(), generation: 0 }
    }

    pub fn with_box(lo: Vec<S>, hi: Vec<S>) -> Self {
        Self { dim: lo.len(), bounds: Some((lo, hi)), vertices: Vec::new(), generation: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_none() && self.vertices.is_empty()
    }

    fn check_dim(&self, q: &[S]) -> Result<()> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch(format!("query has {} coordinates, set has {}", q.len(), self.dim)));
        }
        Ok(())
    }

    fn in_box(&self, q: &[S], tol: S) -> bool {
        match &self.bounds {
            Some((lo, hi)) => q.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| *v >= *l - tol && *v <= *h + tol),
            None => false,
        }
    }

    /// Membership with default solver tolerances.
    pub fn is_member(&self, q: &[S]) -> Result<bool> {
        self.is_member_with(q, &SolverTolerances::default())
    }

    /// Membership in `conv(box ∪ vertices)`; points within `feas_tol` of the
    /// hull count as members.
    pub fn is_member_with(&self, q: &[S], tols: &SolverTolerances<S>) -> Result<bool> {
        self.check_dim(q)?;
        self.member_excluding(q, None, tols)
    }

    fn member_excluding(&self, q: &[S], skip: Option<usize>, tols: &SolverTolerances<S>) -> Result<bool> {
        if self.in_box(q, tols.feas_tol) {
            return Ok(true);
        }
        let verts: Vec<&Vec<S>> =
            self.vertices.iter().enumerate().filter(|(i, _)| Some(*i) != skip).map(|(_, v)| v).collect();
        if verts.is_empty() && self.bounds.is_none() {
            return Ok(false);
        }
        let lp = self.membership_problem(q, &verts);
        Ok(lp::solve_feasibility(&lp, tols)?.feasible)
    }

    /// Variables: `λ_1..λ_V`, then (with a box) `μ`, `w_1..w_T`.
    fn membership_problem(&self, q: &[S], verts: &[&Vec<S>]) -> LpProblem<S> {
        let nv = verts.len();
        let t = self.dim;
        let has_box = self.bounds.is_some();
        let total = nv + if has_box { 1 + t } else { 0 };
        let mut lp = LpProblem::new(total);
        for j in 0..nv {
            lp.set_nonneg(j);
        }
        let mut sum = vec![S::zero(); total];
        for s in sum.iter_mut().take(nv) {
            *s = S::one();
        }
        if let Some((lo, hi)) = &self.bounds {
            let mu = nv;
            lp.set_nonneg(mu);
            sum[mu] = S::one();
            for k in 0..t {
                let w = nv + 1 + k;
                // w_k − μ·hi_k ≤ 0 and μ·lo_k − w_k ≤ 0
                let mut up = vec![S::zero(); total];
                up[w] = S::one();
                up[mu] = -hi[k];
                lp.add_le(&up, S::zero());
                let mut dn = vec![S::zero(); total];
                dn[w] = -S::one();
                dn[mu] = lo[k];
                lp.add_le(&dn, S::zero());
            }
        }
        lp.add_eq(&sum, S::one());
        for k in 0..t {
            let mut row = vec![S::zero(); total];
            for (j, v) in verts.iter().enumerate() {
                row[j] = v[k];
            }
            if has_box {
                row[nv + 1 + k] = S::one();
            }
            lp.add_eq(&row, q[k]);
        }
        lp
    }

    /// Adds oracle-verified feasible profiles that are not already members.
    /// Returns how many were added.
    pub fn grow(&mut self, new_feasible: &[Vec<S>]) -> Result<usize> {
        self.grow_with(new_feasible, &SolverTolerances::default())
    }

    pub fn grow_with(&mut self, new_feasible: &[Vec<S>], tols: &SolverTolerances<S>) -> Result<usize> {
        let mut added = 0;
        for v in new_feasible {
            self.check_dim(v)?;
            if !self.member_excluding(v, None, tols)? {
                self.vertices.push(v.clone());
                added += 1;
            }
        }
        if added > 0 {
            self.generation += 1;
        }
        Ok(added)
    }

    /// Drops vertices that lie in the hull of the box and the remaining vertices.
    pub fn redundancy_prune(&mut self) -> Result<usize> {
        self.redundancy_prune_with(&SolverTolerances::default())
    }

    pub fn redundancy_prune_with(&mut self, tols: &SolverTolerances<S>) -> Result<usize> {
        let mut removed = 0;
        let mut i = 0;
        while i < self.vertices.len() {
            let v = self.vertices[i].clone();
            // Strict interior test for redundancy, so the hull cannot shrink
            // by more than rounding.
            let strict = SolverTolerances { feas_tol: tols.feas_tol * S::lit(1e-2), ..*tols };
            if self.member_excluding(&v, Some(i), &strict)? {
                self.vertices.remove(i);
                removed += 1;
            } else {
                i += 1;
            }
        }
        Ok(removed)
    }
}
