//! Landmark selection: relaxed inclusion weights, rounding with constraint
//! repair, predicted error bound and availability.
//!
//! The objective is the p-Zonotopic cost of the scaled union divided by the
//! total attention weight. The relaxed problem is solved by Dinkelbach
//! iterations on the ratio with projected subgradient steps inside. For small
//! instances an exhaustive oracle gives the exact binary optimum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pzono::{gaussian_multiplier, PZonotope, WeightVector};
use crate::reach::{member_scale, pzono_cost, scaled_union, EpochAnalysis, Q_FLOOR};

/// Largest instance accepted by [`brute_force_oracle`].
pub const ORACLE_LIMIT: usize = 20;

const FD_STEP: f64 = 1e-3;
const MAX_OUTER: usize = 50;
const INNER_ITERS: usize = 200;
const LAMBDA_TOL: f64 = 1e-4;

/// Inclusion weights for every GPS and vision landmark of an epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionSet {
    pub gps: Vec<f64>,
    pub vision: Vec<f64>,
    pub relaxed: bool,
}

impl AttentionSet {
    pub fn ones(n_gps: usize, n_vision: usize) -> Self {
        Self {
            gps: vec![1.0; n_gps],
            vision: vec![1.0; n_vision],
            relaxed: false,
        }
    }

    pub fn from_mask(mask: u32, n_gps: usize, n_vision: usize) -> Self {
        let bit = |k: usize| f64::from((mask >> k) & 1);
        Self {
            gps: (0..n_gps).map(bit).collect(),
            vision: (n_gps..n_gps + n_vision).map(bit).collect(),
            relaxed: false,
        }
    }

    pub fn total(&self) -> f64 {
        self.gps.iter().chain(&self.vision).sum()
    }

    pub fn n_gps_selected(&self) -> usize {
        self.gps.iter().filter(|q| **q >= 0.5).count()
    }

    pub fn n_vision_selected(&self) -> usize {
        self.vision.iter().filter(|q| **q >= 0.5).count()
    }

    fn concat(&self) -> Vec<f64> {
        self.gps.iter().chain(&self.vision).copied().collect()
    }

    fn split(q: &[f64], n_gps: usize, relaxed: bool) -> Self {
        Self {
            gps: q[..n_gps].to_vec(),
            vision: q[n_gps..].to_vec(),
            relaxed,
        }
    }

    fn check_shape(&self, analysis: &EpochAnalysis) -> Result<()> {
        if self.gps.len() != analysis.n_gps() || self.vision.len() != analysis.n_vision() {
            return Err(Error::invalid(format!(
                "attention set has {}+{} entries but the epoch has {}+{} landmarks",
                self.gps.len(),
                self.vision.len(),
                analysis.n_gps(),
                analysis.n_vision()
            )));
        }
        Ok(())
    }
}

/// Selection parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionConfig {
    pub n_min: usize,
    pub l_min: usize,
    pub beta: f64,
    pub gamma: f64,
    pub alert_limit: f64,
    /// Axis weights of the optimized cost.
    pub weights: WeightVector,
    /// Reads the count constraints as strict (`> n_min`) instead of `≥ n_min`.
    pub strict_counts: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            n_min: 5,
            l_min: 6,
            beta: 0.75,
            gamma: 0.999,
            alert_limit: 7.5,
            weights: WeightVector::position_only(),
            strict_counts: false,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min < 1 {
            return Err(Error::config("n_min", "must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::config("beta", "must lie in (0, 1)"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config("gamma", "must lie in (0, 1)"));
        }
        if !(self.alert_limit > 0.0 && self.alert_limit.is_finite()) {
            return Err(Error::config("alert_limit", "must be positive"));
        }
        if self.weights.len() != crate::models::STATE_DIM {
            return Err(Error::config("weights", "must have one entry per state axis"));
        }
        Ok(())
    }

    pub fn min_gps(&self) -> usize {
        self.n_min + usize::from(self.strict_counts)
    }

    pub fn min_vision(&self) -> usize {
        if self.l_min == 0 {
            0
        } else {
            self.l_min + usize::from(self.strict_counts)
        }
    }

    /// Minimum counts, capped by what the epoch offers when `clip` is set.
    fn minimums(&self, n_gps: usize, n_vision: usize) -> Result<(usize, usize)> {
        let (ng, nv) = (self.min_gps(), self.min_vision());
        if n_gps < ng {
            return Err(Error::Infeasible(format!("{n_gps} satellites available, at least {ng} required")));
        }
        if n_vision < nv {
            return Err(Error::Infeasible(format!(
                "{n_vision} vision landmarks available, at least {nv} required"
            )));
        }
        Ok((ng, nv))
    }
}

/// Outcome of selection for one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub rounded: AttentionSet,
    pub relaxed: AttentionSet,
    pub predicted_bound: f64,
    pub available: bool,
    pub objective: f64,
}

/// One line of the selection log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub epoch: usize,
    pub q_gps: Vec<f64>,
    pub q_vis: Vec<f64>,
    pub predicted_bound_m: f64,
    pub available: bool,
    pub objective: f64,
}

impl SelectionResult {
    pub fn record(&self, epoch: usize) -> SelectionRecord {
        SelectionRecord {
            epoch,
            q_gps: self.rounded.gps.clone(),
            q_vis: self.rounded.vision.clone(),
            predicted_bound_m: self.predicted_bound,
            available: self.available,
            objective: self.objective,
        }
    }
}

/// Per-axis extent of one union member before scaling.
#[derive(Debug, Clone)]
struct MemberAxes {
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Gershgorin row sums of the covariance.
    gersh: Vec<f64>,
    alpha: f64,
}

impl MemberAxes {
    fn new(p: &PZonotope, axes: &[usize], alpha: f64) -> Self {
        let (lo, hi) = p.mean_set().interval_hull();
        let g = p.gershgorin_rows();
        Self {
            lo: axes.iter().map(|&a| lo[a]).collect(),
            hi: axes.iter().map(|&a| hi[a]).collect(),
            gersh: axes.iter().map(|&a| g[a]).collect(),
            alpha,
        }
    }
}

/// Closed-form p-Zonotopic cost of the scaled union.
///
/// The enclosure is axis-aligned with diagonal covariance, so its cut has the
/// per-axis generators `h_n` and `m √d_n` and the cost is
/// `Σ w_n (h_n² + m² d_n)`, with `h_n` the hull half-width and `d_n` the
/// largest scaled Gershgorin sum on axis `n`.
#[derive(Debug, Clone)]
pub struct CostModel {
    weights: Vec<f64>,
    m2: f64,
    motion: MemberAxes,
    members: Vec<MemberAxes>,
    n_gps: usize,
}

/// Running extremes of one axis: the two best values and who holds the best.
#[derive(Clone, Copy)]
struct Top2 {
    best: f64,
    second: f64,
    holder: usize,
}

impl Top2 {
    fn new() -> Self {
        Self {
            best: f64::NEG_INFINITY,
            second: f64::NEG_INFINITY,
            holder: usize::MAX,
        }
    }

    fn push(&mut self, v: f64, who: usize) {
        if v > self.best {
            self.second = self.best;
            self.best = v;
            self.holder = who;
        } else if v > self.second {
            self.second = v;
        }
    }

    fn without(&self, who: usize) -> f64 {
        if self.holder == who {
            self.second
        } else {
            self.best
        }
    }
}

impl CostModel {
    pub fn new(analysis: &EpochAnalysis, gamma: f64, weights: &WeightVector) -> Result<Self> {
        let axes: Vec<usize> = (0..weights.len()).filter(|&n| weights.as_slice()[n] > 0.0).collect();
        let m = gaussian_multiplier(gamma)?;
        let members = analysis
            .gps
            .iter()
            .chain(&analysis.vision)
            .map(|a| MemberAxes::new(&a.expected_state, &axes, a.joint_status))
            .collect();
        Ok(Self {
            weights: axes.iter().map(|&a| weights.as_slice()[a]).collect(),
            m2: m * m,
            motion: MemberAxes::new(&analysis.motion_set, &axes, 0.0),
            members,
            n_gps: analysis.n_gps(),
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn axis_terms(&self, hi: f64, neg_lo: f64, d: f64) -> f64 {
        let h = 0.5 * (hi + neg_lo);
        h * h + self.m2 * d
    }

    /// Cost of the scaled union for weights `q` (GPS first, then vision).
    pub fn cost(&self, q: &[f64]) -> f64 {
        let mut total = 0.0;
        for (n, w) in self.weights.iter().enumerate() {
            let (mut hi, mut neg_lo, mut d) = (self.motion.hi[n], -self.motion.lo[n], self.motion.gersh[n]);
            for (m, &qi) in self.members.iter().zip(q) {
                if qi > Q_FLOOR {
                    let s = member_scale(qi, m.alpha);
                    hi = hi.max(s * m.hi[n]);
                    neg_lo = neg_lo.max(-s * m.lo[n]);
                    d = d.max(s * s * m.gersh[n]);
                }
            }
            total += w * self.axis_terms(hi, neg_lo, d);
        }
        total
    }

    /// Cost together with its forward-difference gradient in `q`; near the
    /// upper bound the difference is taken backwards.
    fn cost_and_gradient(&self, q: &[f64]) -> (f64, Vec<f64>) {
        let n_axes = self.weights.len();
        let mut tops: Vec<[Top2; 3]> = vec![[Top2::new(); 3]; n_axes];
        for (n, t) in tops.iter_mut().enumerate() {
            t[0].push(self.motion.hi[n], usize::MAX - 1);
            t[1].push(-self.motion.lo[n], usize::MAX - 1);
            t[2].push(self.motion.gersh[n], usize::MAX - 1);
            for (i, (m, &qi)) in self.members.iter().zip(q).enumerate() {
                if qi > Q_FLOOR {
                    let s = member_scale(qi, m.alpha);
                    t[0].push(s * m.hi[n], i);
                    t[1].push(-s * m.lo[n], i);
                    t[2].push(s * s * m.gersh[n], i);
                }
            }
        }
        let base: f64 = (0..n_axes)
            .map(|n| self.weights[n] * self.axis_terms(tops[n][0].best, tops[n][1].best, tops[n][2].best))
            .sum();
        let grad = self
            .members
            .iter()
            .zip(q)
            .enumerate()
            .map(|(i, (m, &qi))| {
                let h = if qi + FD_STEP <= 1.0 { FD_STEP } else { -FD_STEP };
                let qn = qi + h;
                let mut c = 0.0;
                for n in 0..n_axes {
                    let (mut hi, mut neg_lo, mut d) =
                        (tops[n][0].without(i), tops[n][1].without(i), tops[n][2].without(i));
                    if qn > Q_FLOOR {
                        let s = member_scale(qn, m.alpha);
                        hi = hi.max(s * m.hi[n]);
                        neg_lo = neg_lo.max(-s * m.lo[n]);
                        d = d.max(s * s * m.gersh[n]);
                    }
                    c += self.weights[n] * self.axis_terms(hi, neg_lo, d);
                }
                (c - base) / h
            })
            .collect();
        (base, grad)
    }

    pub fn objective(&self, q: &[f64]) -> Result<f64> {
        let total: f64 = q.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("objective is undefined for an empty selection"));
        }
        Ok(self.cost(q) / total)
    }
}

/// Cost of `q` divided by its total weight.
pub fn objective(q: &AttentionSet, analysis: &EpochAnalysis, cfg: &SelectionConfig) -> Result<f64> {
    q.check_shape(analysis)?;
    CostModel::new(analysis, cfg.gamma, &cfg.weights)?.objective(&q.concat())
}

/// Euclidean projection onto `{v ∈ [0, 1]^n : Σ v ≥ min_sum}`.
fn project_group(v: &mut [f64], min_sum: f64) {
    let clipped_sum = |tau: f64, v: &[f64]| v.iter().map(|x| (x + tau).clamp(0.0, 1.0)).sum::<f64>();
    if clipped_sum(0.0, v) >= min_sum {
        v.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
        return;
    }
    let lowest = v.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (0.0, (1.0 - lowest).max(0.0));
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if clipped_sum(mid, v) < min_sum {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x + hi).clamp(0.0, 1.0));
}

fn project(q: &mut [f64], n_gps: usize, min_gps: usize, min_vis: usize) {
    let (g, v) = q.split_at_mut(n_gps);
    project_group(g, min_gps as f64);
    project_group(v, min_vis as f64);
}

/// Minimizes `cost(q) - λ Σ q` by projected subgradient from `start`.
fn inner_minimize(model: &CostModel, lambda: f64, start: &[f64], mins: (usize, usize)) -> Vec<f64> {
    let mut q = start.to_vec();
    let value = |c: f64, q: &[f64]| c - lambda * q.iter().sum::<f64>();
    let (c0, mut grad) = model.cost_and_gradient(&q);
    let mut best = q.clone();
    let mut best_val = value(c0, &q);
    for t in 0..INNER_ITERS {
        grad.iter_mut().for_each(|g| *g -= lambda);
        let gmax = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if gmax < 1e-12 {
            break;
        }
        let step = 0.5 / ((t + 1) as f64).sqrt() / gmax;
        for (qi, gi) in q.iter_mut().zip(&grad) {
            *qi -= step * gi;
        }
        project(&mut q, model.n_gps, mins.0, mins.1);
        let (c, g) = model.cost_and_gradient(&q);
        grad = g;
        let val = value(c, &q);
        if val < best_val {
            best_val = val;
            best.clone_from(&q);
        }
    }
    best
}

/// Relaxed attention weights from Dinkelbach iterations started at all ones.
pub fn solve_relaxed(analysis: &EpochAnalysis, cfg: &SelectionConfig) -> Result<AttentionSet> {
    cfg.validate()?;
    let mins = cfg.minimums(analysis.n_gps(), analysis.n_vision())?;
    let model = CostModel::new(analysis, cfg.gamma, &cfg.weights)?;
    if model.is_empty() {
        return Err(Error::Infeasible("epoch has no landmarks to select".into()));
    }
    let mut q = vec![1.0; model.len()];
    let mut lambda = model.objective(&q)?;
    let mut best = (lambda, q.clone());
    for _ in 0..MAX_OUTER {
        q = inner_minimize(&model, lambda, &q, mins);
        let next = model.objective(&q)?;
        if next < best.0 {
            best = (next, q.clone());
        }
        let converged = (next - lambda).abs() < LAMBDA_TOL;
        lambda = next;
        if converged {
            break;
        }
    }
    Ok(AttentionSet::split(&best.1, model.n_gps, true))
}

fn round_group(weights: &[f64], beta: f64, min: usize, label: &str) -> Result<Vec<f64>> {
    if weights.len() < min {
        return Err(Error::Infeasible(format!(
            "{} {label} landmarks available, at least {min} required",
            weights.len()
        )));
    }
    let mut out: Vec<f64> = weights.iter().map(|&q| if q >= beta { 1.0 } else { 0.0 }).collect();
    let mut count = out.iter().filter(|v| **v == 1.0).count();
    if count < min {
        let mut excluded: Vec<usize> = (0..weights.len()).filter(|&i| out[i] == 0.0).collect();
        excluded.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
        for i in excluded {
            if count >= min {
                break;
            }
            out[i] = 1.0;
            count += 1;
        }
    }
    Ok(out)
}

/// Thresholds relaxed weights at `β`, then tops up each sensor with its
/// highest-weight excluded landmarks until the count constraints hold.
pub fn round_attention(relaxed: &AttentionSet, cfg: &SelectionConfig) -> Result<AttentionSet> {
    if relaxed.gps.iter().chain(&relaxed.vision).any(|q| !(0.0..=1.0).contains(q)) {
        return Err(Error::invalid("relaxed weights must lie in [0, 1]"));
    }
    Ok(AttentionSet {
        gps: round_group(&relaxed.gps, cfg.beta, cfg.min_gps(), "GPS")?,
        vision: round_group(&relaxed.vision, cfg.beta, cfg.min_vision(), "vision")?,
        relaxed: false,
    })
}

/// Predicted position error bound of a rounded selection and its
/// availability against the alert limit.
pub fn predict_availability(
    rounded: &AttentionSet,
    relaxed: &AttentionSet,
    analysis: &EpochAnalysis,
    cfg: &SelectionConfig,
) -> Result<SelectionResult> {
    rounded.check_shape(analysis)?;
    let union = scaled_union(analysis, &rounded.gps, &rounded.vision)?;
    let bound = pzono_cost(&union, cfg.gamma, &WeightVector::position_only())?.sqrt();
    let objective = if rounded.total() > 0.0 {
        objective(rounded, analysis, cfg)?
    } else {
        f64::INFINITY
    };
    Ok(SelectionResult {
        rounded: rounded.clone(),
        relaxed: relaxed.clone(),
        predicted_bound: bound,
        available: bound <= cfg.alert_limit,
        objective,
    })
}

/// Relaxation, rounding and availability in one call.
pub fn select(analysis: &EpochAnalysis, cfg: &SelectionConfig) -> Result<SelectionResult> {
    let relaxed = solve_relaxed(analysis, cfg)?;
    let rounded = round_attention(&relaxed, cfg)?;
    predict_availability(&rounded, &relaxed, analysis, cfg)
}

/// Exact binary optimum by enumeration. Ties go to the larger selection, then
/// to the lexicographically larger weight vector (earlier landmarks first).
pub fn brute_force_oracle(analysis: &EpochAnalysis, cfg: &SelectionConfig) -> Result<AttentionSet> {
    cfg.validate()?;
    let (ng, nv) = (analysis.n_gps(), analysis.n_vision());
    let n = ng + nv;
    if n > ORACLE_LIMIT {
        return Err(Error::TooLarge(n));
    }
    let (min_g, min_v) = cfg.minimums(ng, nv)?;
    let model = CostModel::new(analysis, cfg.gamma, &cfg.weights)?;
    let gps_mask = (1u32 << ng) - 1;
    // bit k of the mask is landmark k; the lexicographic key reverses the bit order
    let lex_key = |mask: u32| (0..n).fold(0u32, |acc, k| (acc << 1) | ((mask >> k) & 1));
    let best = (1u32..(1u32 << n))
        .into_par_iter()
        .filter(|&mask| {
            (mask & gps_mask).count_ones() as usize >= min_g && (mask >> ng).count_ones() as usize >= min_v
        })
        .map(|mask| {
            let q: Vec<f64> = (0..n).map(|k| f64::from((mask >> k) & 1)).collect();
            (model.objective(&q).unwrap_or(f64::INFINITY), mask)
        })
        .reduce_with(|a, b| {
            let tol = 1e-12 * a.0.abs().max(b.0.abs()).max(1.0);
            if (a.0 - b.0).abs() <= tol {
                let key = |m: u32| (m.count_ones(), lex_key(m));
                if key(a.1) >= key(b.1) {
                    a
                } else {
                    b
                }
            } else if a.0 < b.0 {
                a
            } else {
                b
            }
        })
        .ok_or_else(|| Error::Infeasible("no feasible selection".into()))?;
    Ok(AttentionSet::from_mask(best.1, ng, nv))
}
