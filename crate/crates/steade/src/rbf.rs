//! Stochastic RBF surrogate: a cubic-kernel interpolant with linear tail,
//! DYCORS candidate generation around the incumbent, and the weighted
//! value/distance merit rule that picks evaluation batches.
//!
//! Training values are standardized with median/MAD before the linear
//! system is solved, which keeps the augmented system well scaled; the
//! prediction path undoes the standardization.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Default initial DYCORS perturbation radius in cube units.
pub const SIGMA_INIT: f64 = 0.2;
/// Radius floor: six halvings of the initial radius.
pub const SIGMA_MIN: f64 = SIGMA_INIT * 0.015625; // 0.2 * 0.5^6
/// Merit weights cycled over the slots of a batch.
pub const WEIGHT_CYCLE: [f64; 4] = [0.3, 0.5, 0.8, 0.95];

/// Number of DYCORS candidates for a space of dimension `d`.
pub fn candidate_count(d: usize) -> usize {
    (100 * d).min(5000)
}

/// Cubic RBF interpolant with linear polynomial tail.
#[derive(Debug, Clone)]
pub struct RbfModel {
    centers: Vec<Vec<f64>>,
    weights: Vec<f64>,
    tail: Vec<f64>, // D slopes then constant
    value_median: f64,
    value_mad: f64,
    value_stats: (f64, f64),
    dim: usize,
}

impl RbfModel {
    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tail(&self) -> &[f64] {
        &self.tail
    }

    /// Min/max of the raw training values.
    pub fn value_stats(&self) -> (f64, f64) {
        self.value_stats
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Fit the interpolant by solving the augmented system
/// `[Phi P; P^T 0] [w; c] = [f; 0]` with `Phi_ij = ||x_i - x_j||^3` and
/// `P = [X 1]`. A diagonal jitter of 1e-8 on `Phi` is tried once if the
/// first factorization fails.
pub fn fit_rbf(points: &[Vec<f64>], values: &[f64]) -> Result<RbfModel> {
    let m = points.len();
    if m != values.len() {
        return Err(Error::DimensionMismatch { expected: m, got: values.len() });
    }
    if m == 0 {
        return Err(Error::NotEnoughPoints { needed: 1, got: 0 });
    }
    let d = points[0].len();
    if m < d + 1 {
        return Err(Error::NotEnoughPoints { needed: d + 1, got: m });
    }
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() });
        }
        if p.iter().any(|&x| !(-1e-9..=1.0 + 1e-9).contains(&x)) {
            return Err(Error::DegenerateGeometry("training point outside unit cube".into()));
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            if euclid(&points[i], &points[j]) <= 1e-10 {
                return Err(Error::DegenerateGeometry(format!(
                    "training points {i} and {j} coincide"
                )));
            }
        }
    }

    let (median, mad) = median_mad(values);
    let std_values: Vec<f64> = values.iter().map(|&v| (v - median) / mad).collect();

    let n = m + d + 1;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..m {
        for j in 0..m {
            let r = euclid(&points[i], &points[j]);
            a[(i, j)] = r * r * r;
        }
        for k in 0..d {
            a[(i, m + k)] = points[i][k];
            a[(m + k, i)] = points[i][k];
        }
        a[(i, m + d)] = 1.0;
        a[(m + d, i)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    for i in 0..m {
        rhs[i] = std_values[i];
    }

    let solution = solve_with_jitter(a, &rhs, m)?;
    let weights = solution.as_slice()[..m].to_vec();
    let tail = solution.as_slice()[m..].to_vec();

    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));

    Ok(RbfModel {
        centers: points.to_vec(),
        weights,
        tail,
        value_median: median,
        value_mad: mad,
        value_stats: (lo, hi),
        dim: d,
    })
}

fn solve_with_jitter(a: DMatrix<f64>, rhs: &DVector<f64>, m: usize) -> Result<DVector<f64>> {
    let attempt = |mat: DMatrix<f64>| -> Option<DVector<f64>> {
        let lu = mat.lu();
        let sol = lu.solve(rhs)?;
        sol.iter().all(|v| v.is_finite()).then_some(sol)
    };
    if let Some(sol) = attempt(a.clone()) {
        return Ok(sol);
    }
    let mut jittered = a;
    for i in 0..m {
        jittered[(i, i)] += 1e-8;
    }
    attempt(jittered).ok_or_else(|| {
        Error::FactorizationFailed("RBF system singular even after jitter".into())
    })
}

fn median_mad(values: &[f64]) -> (f64, f64) {
    let median = median_of(values);
    let deviations: Vec<f64> = values.iter().map(|&v| (v - median).abs()).collect();
    let mut mad = median_of(&deviations);
    if mad < 1e-12 {
        mad = 1.0;
    }
    (median, mad)
}

fn median_of(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Evaluate the interpolant at a cube point.
pub fn rbf_predict(model: &RbfModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.dim {
        return Err(Error::DimensionMismatch { expected: model.dim, got: x.len() });
    }
    let mut acc = 0.0;
    for (center, &w) in model.centers.iter().zip(&model.weights) {
        let r = euclid(center, x);
        acc += w * r * r * r;
    }
    for (k, &xk) in x.iter().enumerate() {
        acc += model.tail[k] * xk;
    }
    acc += model.tail[model.dim];
    Ok(model.value_median + model.value_mad * acc)
}

/// Perturbation radius and success/failure bookkeeping for DYCORS.
#[derive(Debug, Clone)]
pub struct DycorsState {
    sigma: f64,
    sigma_init: f64,
    sigma_min: f64,
    consecutive_failures: usize,
    consecutive_successes: usize,
    failure_threshold: usize,
    success_threshold: usize,
    n0: usize,
    max_evals: usize,
}

impl DycorsState {
    /// `n0` is the evaluation count when the RBF phase starts and
    /// `max_evals` the total budget.
    pub fn new(dim: usize, n0: usize, max_evals: usize) -> Self {
        Self {
            sigma: SIGMA_INIT,
            sigma_init: SIGMA_INIT,
            sigma_min: SIGMA_MIN,
            consecutive_failures: 0,
            consecutive_successes: 0,
            failure_threshold: 5.max(dim),
            success_threshold: 3,
            n0,
            max_evals,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn counters(&self) -> (usize, usize) {
        (self.consecutive_failures, self.consecutive_successes)
    }

    /// A batch improved the incumbent best.
    pub fn record_success(&mut self) {
        self.consecutive_successes += 1;
        self.consecutive_failures = 0;
        if self.consecutive_successes >= self.success_threshold {
            self.sigma = (self.sigma * 2.0).min(self.sigma_init);
            self.consecutive_successes = 0;
        }
    }

    /// A batch failed to improve the incumbent best.
    pub fn record_failure(&mut self) {
        self.consecutive_failures += 1;
        self.consecutive_successes = 0;
        if self.consecutive_failures >= self.failure_threshold {
            self.sigma = (self.sigma * 0.5).max(self.sigma_min);
            self.consecutive_failures = 0;
        }
    }

    /// Probability of perturbing each coordinate at evaluation count `n_evals`.
    pub fn perturb_probability(&self, dim: usize, n_evals: usize) -> f64 {
        let d = dim as f64;
        let p_min = (1.0 / d).min(1.0);
        let done = n_evals.saturating_sub(self.n0) as f64;
        let horizon = self.max_evals.saturating_sub(self.n0) as f64;
        let decay = if horizon > 1.0 { 1.0 - (done + 1.0).ln() / horizon.ln() } else { 0.0 };
        let p = (20.0 / d).min(1.0) * decay;
        p.clamp(p_min, 1.0)
    }
}

/// Generate DYCORS trial candidates around `best`: each coordinate is
/// perturbed independently with the schedule probability (at least one
/// coordinate always moves) by Gaussian noise of the current radius,
/// clipped to the cube.
pub fn dycors_candidates<R: Rng + ?Sized>(
    best: &[f64],
    state: &DycorsState,
    n_evals: usize,
    n_cand: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let d = best.len();
    let p = state.perturb_probability(d, n_evals);
    let mut out = Vec::with_capacity(n_cand);
    for _ in 0..n_cand {
        let mut candidate = best.to_vec();
        let mut any = false;
        let mut mask = vec![false; d];
        for flag in mask.iter_mut() {
            if rng.random::<f64>() < p {
                *flag = true;
                any = true;
            }
        }
        if !any {
            mask[rng.random_range(0..d)] = true;
        }
        for (k, &selected) in mask.iter().enumerate() {
            if selected {
                let step: f64 = rng.sample(StandardNormal);
                candidate[k] = (candidate[k] + state.sigma() * step).clamp(0.0, 1.0);
            }
        }
        out.push(candidate);
    }
    out
}

/// Select `q` candidates with a single merit weight. See
/// [`srbf_select_weighted`] for the per-slot cycling variant.
pub fn srbf_select(
    candidates: &[Vec<f64>],
    model: &RbfModel,
    evaluated: &[Vec<f64>],
    weight: f64,
    q: usize,
) -> Result<Vec<Vec<f64>>> {
    srbf_select_weighted(candidates, model, evaluated, &[weight], q)
}

/// Greedy weighted-merit selection of `q` candidates. Slot `j` uses weight
/// `weights[j % weights.len()]`; the score of a candidate is
/// `w * v_rbf + (1 - w) * (1 - nd)` where `v_rbf` normalizes the predicted
/// value by the training min/max and `nd` normalizes the distance to the
/// nearest evaluated-or-selected point over the unselected candidates.
/// Lower scores win; every selection joins the distance set before the
/// next round.
pub fn srbf_select_weighted(
    candidates: &[Vec<f64>],
    model: &RbfModel,
    evaluated: &[Vec<f64>],
    weights: &[f64],
    q: usize,
) -> Result<Vec<Vec<f64>>> {
    if candidates.len() < q {
        return Err(Error::InsufficientCandidates { requested: q, available: candidates.len() });
    }
    if weights.is_empty() || weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(Error::InvalidConfig("merit weights must lie in [0, 1]".into()));
    }

    let predictions: Vec<f64> =
        candidates.iter().map(|c| rbf_predict(model, c)).collect::<Result<_>>()?;
    let (f_lo, f_hi) = model.value_stats();
    let f_range = f_hi - f_lo;
    let v_rbf: Vec<f64> = predictions
        .iter()
        .map(|&p| if f_range > 0.0 { (p - f_lo) / f_range } else { 0.5 })
        .collect();

    let mut dist_set: Vec<&[f64]> = evaluated.iter().map(Vec::as_slice).collect();
    let mut remaining: Vec<usize> = (0..candidates.len()).collect();
    let mut selected = Vec::with_capacity(q);

    for round in 0..q {
        let w = weights[round % weights.len()];
        let dmin: Vec<f64> = remaining
            .iter()
            .map(|&c| {
                dist_set
                    .iter()
                    .map(|e| euclid(&candidates[c], e))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let (d_lo, d_hi) = dmin
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let d_range = d_hi - d_lo;

        let mut best_slot = 0;
        let mut best_score = f64::INFINITY;
        for (slot, &c) in remaining.iter().enumerate() {
            let nd = if d_range > 0.0 && dmin[slot].is_finite() {
                (dmin[slot] - d_lo) / d_range
            } else {
                0.0
            };
            let score = w * v_rbf[c] + (1.0 - w) * (1.0 - nd);
            if score < best_score {
                best_score = score;
                best_slot = slot;
            }
        }
        let chosen = remaining.remove(best_slot);
        selected.push(candidates[chosen].clone());
        dist_set.push(candidates[chosen].as_slice());
    }
    Ok(selected)
}
