//! Radial feeders with DERs and the compact operating model
//! `W p ≤ z, p0 = D p + b`.
//!
//! DER schedules are stacked DER-major: column `j·T + t` is DER `j` at step `t`.
//! `p0` is the net import at the substation (total load minus DER output), so
//! every row of `D` is `−1` on the columns of its step and `b` is the total load.
//!
//! Voltages follow the lossless LinDistFlow model on squared magnitudes with
//! real power only: `v_i = v_nom − Σ_k R[i][k]·(d_k − Σ_{j at k} p_j)`.

use std::collections::VecDeque;
use std::fmt;

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpStatus, SolverTolerances};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line<S> {
    pub from: usize,
    pub to: usize,
    /// Resistance [p.u.]
    pub r: S,
    /// Reactance [p.u.]; carried for completeness, unused by the real-power model.
    pub x: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeederSpec<S> {
    /// Bus count including the substation (bus 0).
    pub n: usize,
    pub lines: Vec<Line<S>>,
    /// `loads[k][t]`: real-power demand at bus `k`, step `t` [p.u.]. Bus 0 carries none.
    pub loads: Vec<Vec<S>>,
    /// Nominal squared voltage [p.u.]
    pub v_nom: S,
    /// Squared-voltage limits `(v_min, v_max)` [p.u.]
    pub v_limits: (S, S),
    pub horizon: usize,
    pub step_hours: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DerKind<S> {
    /// Per-step bounds only (PV, curtailable generation).
    Interval,
    /// Storage. Cumulative energy `e_init + Δ·Σ_{τ≤t} p_τ` must stay in `[e_min, e_max]`.
    Battery { e_min: S, e_max: S, e_init: S },
    /// Total energy `Δ·Σ_t p_t` over the horizon bounded to `[e_total_min, e_total_max]`.
    EnergyCapped { e_total_min: S, e_total_max: S },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerSpec<S> {
    pub kind: DerKind<S>,
    pub bus: usize,
    /// Per-step output lower bounds (length `T`) [p.u.]
    pub p_min: Vec<S>,
    /// Per-step output upper bounds (length `T`) [p.u.]
    pub p_max: Vec<S>,
}

impl<S: Scalar> DerSpec<S> {
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            DerKind::Interval => "interval",
            DerKind::Battery { .. } => "battery",
            DerKind::EnergyCapped { .. } => "energy_capped",
        }
    }

    /// Rows this DER contributes to `W`.
    pub fn row_count(&self, horizon: usize) -> usize {
        match self.kind {
            DerKind::Interval => 2 * horizon,
            DerKind::Battery { .. } => 4 * horizon,
            DerKind::EnergyCapped { .. } => 2 * horizon + 2,
        }
    }
}

/// Constraint family of a row of `W`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowClass {
    DerBounds,
    BatteryEnergy,
    EnergyCap,
    Voltage,
}

impl fmt::Display for RowClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowClass::DerBounds => "der_bounds",
            RowClass::BatteryEnergy => "battery_energy",
            RowClass::EnergyCap => "energy_cap",
            RowClass::Voltage => "voltage",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactModel<S> {
    /// Bus count of the source feeder (0 for hand-built models).
    pub n: usize,
    pub m: usize,
    pub t: usize,
    pub w: Array2<S>,
    pub z: Array1<S>,
    pub d: Array2<S>,
    pub b: Array1<S>,
    pub meta: String,
}

impl<S: Scalar> CompactModel<S> {
    /// Builds a model from raw matrices, checking dimensions only.
    pub fn from_parts(
        m: usize,
        t: usize,
        w: Array2<S>,
        z: Array1<S>,
        d: Array2<S>,
        b: Array1<S>,
        meta: impl Into<String>,
    ) -> Result<Self> {
        let model = Self { n: 0, m, t, w, z, d, b, meta: meta.into() };
        model.check_dims()?;
        Ok(model)
    }

    pub fn check_dims(&self) -> Result<()> {
        let cols = self.m * self.t;
        if self.w.ncols() != cols
            || self.d.ncols() != cols
            || self.w.nrows() != self.z.len()
            || self.d.nrows() != self.t
            || self.b.len() != self.t
        {
            return Err(Error::DimensionMismatch(format!(
                "W {:?}, z {}, D {:?}, b {} for m={} T={}",
                self.w.dim(),
                self.z.len(),
                self.d.dim(),
                self.b.len(),
                self.m,
                self.t
            )));
        }
        if self.b.iter().chain(self.z.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite entries in z or b".into()));
        }
        Ok(())
    }

    pub fn num_rows(&self) -> usize {
        self.w.nrows()
    }

    pub fn num_vars(&self) -> usize {
        self.m * self.t
    }

    /// `D p + b`
    pub fn substation_output(&self, p: &[S]) -> Vec<S> {
        (self.d.dot(&ndarray::ArrayView1::from(p)) + &self.b).to_vec()
    }

    /// `{p : W p ≤ z}` as an LP with free variables and zero objective.
    pub fn der_polytope(&self) -> LpProblem<S> {
        let mut lp = LpProblem::new(self.num_vars());
        lp.a_ub = self.w.clone();
        lp.b_ub = self.z.to_vec();
        lp
    }

    /// Minimizes/maximizes every DER coordinate over `W p ≤ z`; errors if the
    /// polytope is empty or unbounded.
    pub fn check_bounded(&self, tols: &SolverTolerances<S>) -> Result<()> {
        let base = self.der_polytope();
        for k in 0..self.num_vars() {
            for sign in [S::one(), -S::one()] {
                let mut lp = base.clone();
                lp.objective[k] = sign;
                match lp::solve_with_retry(&lp, tols)?.status {
                    LpStatus::Optimal => {}
                    LpStatus::Unbounded => return Err(Error::UnboundedModel),
                    LpStatus::Infeasible => return Err(Error::InfeasibleModel),
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadProfileParams {
    /// Clock hour of step 0.
    pub start_hour: f64,
    pub step_hours: f64,
    /// Per-bus peak demand drawn uniformly from this range [p.u.]
    pub peak_load: (f64, f64),
    /// Night demand as a fraction of the peak.
    pub night_factor: f64,
    /// Hour at which the morning ramp starts, peaks, and the evening ramp ends.
    pub ramp_start: f64,
    pub peak_hour: f64,
    pub ramp_end: f64,
}

impl Default for LoadProfileParams {
    fn default() -> Self {
        Self {
            start_hour: 8.0,
            step_hours: 1.0,
            peak_load: (0.02, 0.06),
            night_factor: 0.5,
            ramp_start: 6.0,
            peak_hour: 13.0,
            ramp_end: 21.0,
        }
    }
}

impl LoadProfileParams {
    /// Diurnal load shape in `[night_factor, 1]`: flat at night, a linear
    /// ramp up to the midday peak and a linear ramp back down.
    pub fn load_shape(&self, hour: f64) -> f64 {
        let h = hour.rem_euclid(24.0);
        let low = self.night_factor;
        if h <= self.ramp_start || h >= self.ramp_end {
            low
        } else if h <= self.peak_hour {
            low + (1.0 - low) * (h - self.ramp_start) / (self.peak_hour - self.ramp_start)
        } else {
            low + (1.0 - low) * (self.ramp_end - h) / (self.ramp_end - self.peak_hour)
        }
    }

    /// Clear-sky PV availability in `[0, 1]` (sunrise 6h, sunset 18h).
    pub fn solar_shape(&self, hour: f64) -> f64 {
        let h = hour.rem_euclid(24.0);
        if h <= 6.0 || h >= 18.0 {
            0.0
        } else {
            (std::f64::consts::PI * (h - 6.0) / 12.0).sin()
        }
    }

    pub fn hour_of_step(&self, t: usize) -> f64 {
        self.start_hour + t as f64 * self.step_hours
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub profile: LoadProfileParams,
    pub resistance: (f64, f64),
    /// Reactance as a multiple of resistance.
    pub x_over_r: f64,
    pub v_nom: f64,
    pub v_limits: (f64, f64),
    /// Relative weights of (Interval, Battery, EnergyCapped).
    pub der_mix: (f64, f64, f64),
    pub pv_capacity: (f64, f64),
    pub battery_power: (f64, f64),
    /// Battery energy capacity in hours of rated power.
    pub battery_hours: f64,
    pub flex_power: (f64, f64),
    /// Energy cap of energy-capped DERs as a fraction of `p_max·T·Δ`; the window is `[0, cap]`
    /// so the idle schedule stays admissible.
    pub flex_energy: (f64, f64),
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            profile: LoadProfileParams::default(),
            resistance: (0.05, 0.12),
            x_over_r: 2.0,
            v_nom: 1.0,
            v_limits: (0.9025, 1.1025),
            der_mix: (0.4, 0.3, 0.3),
            pv_capacity: (0.03, 0.08),
            battery_power: (0.02, 0.05),
            battery_hours: 2.0,
            flex_power: (0.02, 0.05),
            flex_energy: (0.2, 0.6),
        }
    }
}

/// Draws a random radial feeder and DER fleet.
///
/// Topology and DER draws do not depend on `profile.start_hour`, so the same
/// seed with a shifted start hour yields the same network in a later window.
pub fn generate_feeder<S: Scalar>(
    seed: u64,
    n: usize,
    m: usize,
    horizon: usize,
    cfg: &GeneratorConfig,
) -> Result<(FeederSpec<S>, Vec<DerSpec<S>>)> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("bus count {n} < 2")));
    }
    if m < 1 {
        return Err(Error::InvalidConfig("at least one DER required".into()));
    }
    if horizon < 1 {
        return Err(Error::InvalidConfig("horizon must be at least one step".into()));
    }
    let (w_int, w_bat, w_cap) = cfg.der_mix;
    let mix_total = w_int + w_bat + w_cap;
    if !(w_int >= 0.0 && w_bat >= 0.0 && w_cap >= 0.0) || mix_total <= 0.0 {
        return Err(Error::InvalidConfig("empty DER mix".into()));
    }
    let ranges =
        [cfg.resistance, cfg.profile.peak_load, cfg.pv_capacity, cfg.battery_power, cfg.flex_power, cfg.flex_energy];
    if ranges.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
        return Err(Error::InvalidConfig("malformed range".into()));
    }
    if cfg.resistance.0 <= 0.0 {
        return Err(Error::InvalidConfig("resistances must be positive".into()));
    }

    let mut rng = seed::stream(seed, "feeder");
    let draw = |rng: &mut seed::Rng, (lo, hi): (f64, f64)| -> f64 {
        if lo == hi {
            lo
        } else {
            rng.random_range(lo..hi)
        }
    };

    let mut lines = Vec::with_capacity(n - 1);
    for k in 1..n {
        let parent = rng.random_range(0..k);
        let r = draw(&mut rng, cfg.resistance);
        lines.push(Line { from: parent, to: k, r: S::lit(r), x: S::lit(r * cfg.x_over_r) });
    }
    let peaks: Vec<f64> = (0..n).map(|k| if k == 0 { 0.0 } else { draw(&mut rng, cfg.profile.peak_load) }).collect();

    let profile = &cfg.profile;
    let dt = profile.step_hours;
    let mut ders = Vec::with_capacity(m);
    for _ in 0..m {
        let bus = rng.random_range(1..n);
        let u: f64 = rng.random::<f64>() * mix_total;
        let der = if u < w_int {
            let cap = draw(&mut rng, cfg.pv_capacity);
            let p_max = (0..horizon).map(|t| S::lit(cap * profile.solar_shape(profile.hour_of_step(t)))).collect();
            DerSpec { kind: DerKind::Interval, bus, p_min: vec![S::zero(); horizon], p_max }
        } else if u < w_int + w_bat {
            let pmax = draw(&mut rng, cfg.battery_power);
            let e_max = pmax * cfg.battery_hours;
            let e_init = draw(&mut rng, (0.3, 0.7)) * e_max;
            DerSpec {
                kind: DerKind::Battery { e_min: S::lit(0.1 * e_max), e_max: S::lit(e_max), e_init: S::lit(e_init) },
                bus,
                p_min: vec![S::lit(-pmax); horizon],
                p_max: vec![S::lit(pmax); horizon],
            }
        } else {
            let pmax = draw(&mut rng, cfg.flex_power);
            let full = pmax * horizon as f64 * dt;
            let cap = draw(&mut rng, cfg.flex_energy);
            DerSpec {
                kind: DerKind::EnergyCapped { e_total_min: S::zero(), e_total_max: S::lit(cap * full) },
                bus,
                p_min: vec![S::zero(); horizon],
                p_max: vec![S::lit(pmax); horizon],
            }
        };
        ders.push(der);
    }

    let loads = peaks
        .iter()
        .map(|&pk| (0..horizon).map(|t| S::lit(pk * profile.load_shape(profile.hour_of_step(t)))).collect())
        .collect();
    let feeder = FeederSpec {
        n,
        lines,
        loads,
        v_nom: S::lit(cfg.v_nom),
        v_limits: (S::lit(cfg.v_limits.0), S::lit(cfg.v_limits.1)),
        horizon,
        step_hours: S::lit(dt),
    };
    Ok((feeder, ders))
}

/// Parent bus and line index of every bus; errors unless the lines form a
/// spanning tree rooted at bus 0.
fn tree_parents<S: Scalar>(feeder: &FeederSpec<S>) -> Result<Vec<Option<(usize, usize)>>> {
    let n = feeder.n;
    if feeder.lines.len() + 1 != n {
        return Err(Error::DisconnectedFeeder(format!("{} lines for {} buses", feeder.lines.len(), n)));
    }
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (li, line) in feeder.lines.iter().enumerate() {
        if line.from >= n || line.to >= n || line.from == line.to {
            return Err(Error::DisconnectedFeeder(format!("line {li} has invalid endpoints")));
        }
        adj[line.from].push((line.to, li));
        adj[line.to].push((line.from, li));
    }
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &(v, li) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some((u, li));
                queue.push_back(v);
            }
        }
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(Error::DisconnectedFeeder(format!("bus {k} unreachable from substation")));
    }
    Ok(parent)
}

/// LinDistFlow sensitivity `R[i][k] = 2·(resistance of the path shared by the
/// substation→i and substation→k paths)`.
pub fn voltage_sensitivity<S: Scalar>(feeder: &FeederSpec<S>) -> Result<Array2<S>> {
    let n = feeder.n;
    let parent = tree_parents(feeder)?;
    // Ancestor chain (including self) and cumulative resistance from the root.
    let mut depth = vec![0usize; n];
    let mut cum_r = vec![S::zero(); n];
    // Parents are discovered in BFS order, but compute lazily for safety.
    fn resolve<S: Scalar>(
        k: usize,
        parent: &[Option<(usize, usize)>],
        lines: &[Line<S>],
        depth: &mut [usize],
        cum_r: &mut [S],
        done: &mut [bool],
    ) {
        if done[k] {
            return;
        }
        if let Some((p, li)) = parent[k] {
            resolve(p, parent, lines, depth, cum_r, done);
            depth[k] = depth[p] + 1;
            cum_r[k] = cum_r[p] + lines[li].r;
        }
        done[k] = true;
    }
    let mut done = vec![false; n];
    for k in 0..n {
        resolve(k, &parent, &feeder.lines, &mut depth, &mut cum_r, &mut done);
    }
    let lca = |mut a: usize, mut b: usize| {
        while depth[a] > depth[b] {
            a = parent[a].map(|(p, _)| p).unwrap_or(0);
        }
        while depth[b] > depth[a] {
            b = parent[b].map(|(p, _)| p).unwrap_or(0);
        }
        while a != b {
            a = parent[a].map(|(p, _)| p).unwrap_or(0);
            b = parent[b].map(|(p, _)| p).unwrap_or(0);
        }
        a
    };
    let two = S::lit(2.0);
    let mut r = Array2::zeros((n, n));
    for i in 0..n {
        for k in i..n {
            let v = two * cum_r[lca(i, k)];
            r[(i, k)] = v;
            r[(k, i)] = v;
        }
    }
    Ok(r)
}

fn validate_specs<S: Scalar>(feeder: &FeederSpec<S>, ders: &[DerSpec<S>]) -> Result<()> {
    let t = feeder.horizon;
    if t < 1 {
        return Err(Error::InvalidConfig("horizon must be at least one step".into()));
    }
    if ders.is_empty() {
        return Err(Error::InvalidConfig("at least one DER required".into()));
    }
    if feeder.lines.iter().any(|l| !(l.r > S::zero())) {
        return Err(Error::InvalidConfig("line resistances must be positive".into()));
    }
    let (v_min, v_max) = feeder.v_limits;
    if !(v_min < feeder.v_nom && feeder.v_nom < v_max) {
        return Err(Error::InvalidConfig("voltage limits must bracket v_nom".into()));
    }
    if feeder.loads.len() != feeder.n || feeder.loads.iter().any(|row| row.len() != t) {
        return Err(Error::DimensionMismatch(format!("loads must be {}×{}", feeder.n, t)));
    }
    for (j, der) in ders.iter().enumerate() {
        if der.bus >= feeder.n {
            return Err(Error::InvalidConfig(format!("DER {j} attached to missing bus {}", der.bus)));
        }
        if der.p_min.len() != t || der.p_max.len() != t {
            return Err(Error::DimensionMismatch(format!("DER {j} bounds must have {t} steps")));
        }
        if der.p_min.iter().zip(&der.p_max).any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::InvalidConfig(format!("DER {j} has p_min > p_max")));
        }
        match der.kind {
            DerKind::Interval => {}
            DerKind::Battery { e_min, e_max, e_init } => {
                if !(e_min <= e_init && e_init <= e_max) {
                    return Err(Error::InvalidConfig(format!("DER {j}: need e_min ≤ e_init ≤ e_max")));
                }
            }
            DerKind::EnergyCapped { e_total_min, e_total_max } => {
                if !(e_total_min <= e_total_max) {
                    return Err(Error::InvalidConfig(format!("DER {j}: energy window inverted")));
                }
            }
        }
    }
    Ok(())
}

/// Row classes in assembly order for the given fleet.
pub fn row_classes<S: Scalar>(feeder: &FeederSpec<S>, ders: &[DerSpec<S>]) -> Vec<RowClass> {
    let t = feeder.horizon;
    let mut out = Vec::new();
    for der in ders {
        out.extend(std::iter::repeat(RowClass::DerBounds).take(2 * t));
        match der.kind {
            DerKind::Interval => {}
            DerKind::Battery { .. } => out.extend(std::iter::repeat(RowClass::BatteryEnergy).take(2 * t)),
            DerKind::EnergyCapped { .. } => out.extend(std::iter::repeat(RowClass::EnergyCap).take(2)),
        }
    }
    out.extend(std::iter::repeat(RowClass::Voltage).take(2 * feeder.n * t));
    out
}

/// Assembles the compact operating model.
///
/// Row order: for each DER its per-step bound rows (`p ≤ p_max`, `−p ≤ −p_min`
/// per step), then battery cumulative-energy rows or the energy-cap pair; then
/// voltage rows, for each step and bus the `v ≤ v_max` row followed by `v ≥ v_min`.
pub fn assemble_compact<S: Scalar>(
    feeder: &FeederSpec<S>,
    ders: &[DerSpec<S>],
    tols: &SolverTolerances<S>,
) -> Result<CompactModel<S>> {
    validate_specs(feeder, ders)?;
    let rsens = voltage_sensitivity(feeder)?;
    let t_len = feeder.horizon;
    let m = ders.len();
    let cols = m * t_len;
    let dt = feeder.step_hours;
    let col = |j: usize, t: usize| j * t_len + t;

    let mut rows: Vec<Vec<S>> = Vec::new();
    let mut rhs: Vec<S> = Vec::new();
    let mut push = |row: Vec<S>, b: S| {
        rows.push(row);
        rhs.push(b);
    };

    for (j, der) in ders.iter().enumerate() {
        for t in 0..t_len {
            let mut up = vec![S::zero(); cols];
            up[col(j, t)] = S::one();
            push(up, der.p_max[t]);
            let mut dn = vec![S::zero(); cols];
            dn[col(j, t)] = -S::one();
            push(dn, -der.p_min[t]);
        }
        match der.kind {
            DerKind::Interval => {}
            DerKind::Battery { e_min, e_max, e_init } => {
                for t in 0..t_len {
                    let mut up = vec![S::zero(); cols];
                    for tau in 0..=t {
                        up[col(j, tau)] = dt;
                    }
                    let dn: Vec<S> = up.iter().map(|v| -*v).collect();
                    push(up, e_max - e_init);
                    push(dn, e_init - e_min);
                }
            }
            DerKind::EnergyCapped { e_total_min, e_total_max } => {
                let mut up = vec![S::zero(); cols];
                for t in 0..t_len {
                    up[col(j, t)] = dt;
                }
                let dn: Vec<S> = up.iter().map(|v| -*v).collect();
                push(up, e_total_max);
                push(dn, -e_total_min);
            }
        }
    }
    let der_rows: usize = ders.iter().map(|d| d.row_count(t_len)).sum();

    let (v_min, v_max) = feeder.v_limits;
    for t in 0..t_len {
        for i in 0..feeder.n {
            // Σ_k R[i][k] d_k,t
            let load_drop = (0..feeder.n).fold(S::zero(), |acc, k| acc + rsens[(i, k)] * feeder.loads[k][t]);
            let mut coeff = vec![S::zero(); cols];
            for (j, der) in ders.iter().enumerate() {
                coeff[col(j, t)] = rsens[(i, der.bus)];
            }
            // v_i = v_nom − load_drop + coeff·p
            let neg: Vec<S> = coeff.iter().map(|v| -*v).collect();
            push(coeff, v_max - feeder.v_nom + load_drop);
            push(neg, feeder.v_nom - v_min - load_drop);
        }
    }

    let k = rows.len();
    let mut w = Array2::zeros((k, cols));
    for (r, row) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            w[(r, c)] = *v;
        }
    }
    let mut d = Array2::zeros((t_len, cols));
    for j in 0..m {
        for t in 0..t_len {
            d[(t, col(j, t))] = -S::one();
        }
    }
    let b = Array1::from_iter((0..t_len).map(|t| (0..feeder.n).fold(S::zero(), |acc, k| acc + feeder.loads[k][t])));
    let kinds = ders.iter().fold([0usize; 3], |mut acc, d| {
        match d.kind {
            DerKind::Interval => acc[0] += 1,
            DerKind::Battery { .. } => acc[1] += 1,
            DerKind::EnergyCapped { .. } => acc[2] += 1,
        }
        acc
    });
    let meta = format!(
        "lindistflow feeder: {} buses, {} DERs ({} interval, {} battery, {} energy-capped), T={}, dt={}h",
        feeder.n, m, kinds[0], kinds[1], kinds[2], t_len, dt
    );
    let model = CompactModel { n: feeder.n, m, t: t_len, w, z: Array1::from(rhs), d, b, meta };

    // Nonempty interior check, reporting which family empties the polytope.
    let full = lp::solve_feasibility(&model.der_polytope(), tols)?;
    if !full.feasible {
        let mut der_only = LpProblem::new(cols);
        der_only.a_ub = model.w.slice(ndarray::s![..der_rows, ..]).to_owned();
        der_only.b_ub = model.z.as_slice().unwrap()[..der_rows].to_vec();
        let class = if lp::solve_feasibility(&der_only, tols)?.feasible {
            RowClass::Voltage
        } else {
            let classes = row_classes(feeder, ders);
            first_infeasible_der_class(&der_only, &classes[..der_rows], tols)?
        };
        return Err(Error::EmptyInterior { class });
    }
    model.check_bounded(tols)?;
    Ok(model)
}

/// Smallest prefix of DER rows that is already infeasible; its last row's class.
fn first_infeasible_der_class<S: Scalar>(
    der_only: &LpProblem<S>,
    classes: &[RowClass],
    tols: &SolverTolerances<S>,
) -> Result<RowClass> {
    for end in 1..=classes.len() {
        let mut lp = LpProblem::new(der_only.num_vars());
        lp.a_ub = der_only.a_ub.slice(ndarray::s![..end, ..]).to_owned();
        lp.b_ub = der_only.b_ub[..end].to_vec();
        if !lp::solve_feasibility(&lp, tols)?.feasible {
            return Ok(classes[end - 1]);
        }
    }
    Ok(RowClass::DerBounds)
}

/// Small hand-built models with closed-form flexibility sets.
pub mod toy {
    use super::*;

    /// One interval DER `p ∈ [−1, 1]`, one step, load 2: `p0 = 2 − p`, set `[1, 3]`.
    pub fn toy_a<S: Scalar>() -> CompactModel<S> {
        let w = ndarray::arr2(&[[S::one()], [-S::one()]]);
        let z = ndarray::arr1(&[S::one(), S::one()]);
        let d = ndarray::arr2(&[[-S::one()]]);
        let b = ndarray::arr1(&[S::lit(2.0)]);
        CompactModel::from_parts(1, 1, w, z, d, b, "toy A").expect("consistent toy model")
    }

    /// Two steps, `p_t ∈ [−1, 1]`, `p_1 + p_2 ∈ [−1, 1]`, `p0 = −p`:
    /// set `{|x_t| ≤ 1, |x_1 + x_2| ≤ 1}`.
    pub fn toy_b<S: Scalar>() -> CompactModel<S> {
        let (o, z0) = (S::one(), S::zero());
        let w = ndarray::arr2(&[[o, z0], [-o, z0], [z0, o], [z0, -o], [o, o], [-o, -o]]);
        let z = Array1::from_elem(6, o);
        let d = ndarray::arr2(&[[-o, z0], [z0, -o]]);
        let b = Array1::zeros(2);
        CompactModel::from_parts(1, 2, w, z, d, b, "toy B").expect("consistent toy model")
    }

    /// Closed-form membership of toy B's flexibility set.
    pub fn toy_b_contains(x: &[f64], tol: f64) -> bool {
        x[0].abs() <= 1.0 + tol && x[1].abs() <= 1.0 + tol && (x[0] + x[1]).abs() <= 1.0 + tol
    }

    /// Two-bus feeder, one interval DER `p ∈ [−1, 1]` at bus 1, load 2 at bus 1,
    /// loose voltage limits: equivalent to toy A.
    pub fn toy_a_feeder<S: Scalar>() -> (FeederSpec<S>, Vec<DerSpec<S>>) {
        let feeder = FeederSpec {
            n: 2,
            lines: vec![Line { from: 0, to: 1, r: S::lit(0.01), x: S::lit(0.02) }],
            loads: vec![vec![S::zero()], vec![S::lit(2.0)]],
            v_nom: S::one(),
            v_limits: (S::lit(0.5), S::lit(1.5)),
            horizon: 1,
            step_hours: S::one(),
        };
        let der = DerSpec { kind: DerKind::Interval, bus: 1, p_min: vec![-S::one()], p_max: vec![S::one()] };
        (feeder, vec![der])
    }

    /// Path feeder `0 – 1 – … – (n−1)` with uniform resistance and zero load.
    pub fn path_feeder<S: Scalar>(n: usize, r: f64, horizon: usize) -> FeederSpec<S> {
        FeederSpec {
            n,
            lines: (1..n).map(|k| Line { from: k - 1, to: k, r: S::lit(r), x: S::lit(r) }).collect(),
            loads: vec![vec![S::zero(); horizon]; n],
            v_nom: S::one(),
            v_limits: (S::lit(0.9), S::lit(1.1)),
            horizon,
            step_hours: S::one(),
        }
    }
}
