//! Gaussian-process surrogate with a Matérn-5/2 ARD kernel, exact
//! log-marginal-likelihood hyperparameter fitting, and batch posterior
//! prediction; plus the RQMC sampler and the batch expected-improvement
//! acquisition built on top of it.

pub mod acquisition;
pub mod qmc;

pub use acquisition::{optimize_qei, qei, qei_with_samples};
pub use qmc::{sobol_normal, QmcSampler};

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

use crate::error::{Error, Result};

const SQRT5: f64 = 2.236_067_977_499_79;

/// Lengthscale bounds in cube units.
pub const LENGTHSCALE_BOUNDS: (f64, f64) = (0.005, 4.0);
/// Signal-variance bounds on standardized targets.
pub const SIGNAL_VARIANCE_BOUNDS: (f64, f64) = (1e-3, 1e3);
/// Noise-variance bounds on standardized targets.
pub const NOISE_VARIANCE_BOUNDS: (f64, f64) = (1e-8, 1.0);
/// Most recent training points kept by [`fit_gp`].
pub const MAX_TRAIN_POINTS: usize = 512;

const MLE_RESTARTS: usize = 8;
const MLE_MAX_STEPS: usize = 50;
const MLE_LL_TOL: f64 = 1e-5;

/// Kernel hyperparameters in log space: ARD lengthscales, signal variance,
/// noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct GpHyperparameters {
    pub log_lengthscales: Vec<f64>,
    pub log_signal_variance: f64,
    pub log_noise_variance: f64,
}

impl GpHyperparameters {
    pub fn lengthscales(&self) -> Vec<f64> {
        self.log_lengthscales.iter().map(|l| l.exp()).collect()
    }

    pub fn signal_variance(&self) -> f64 {
        self.log_signal_variance.exp()
    }

    pub fn noise_variance(&self) -> f64 {
        self.log_noise_variance.exp()
    }

    fn clamp_to_bounds(&mut self) {
        let (l_lo, l_hi) = (LENGTHSCALE_BOUNDS.0.ln(), LENGTHSCALE_BOUNDS.1.ln());
        for l in &mut self.log_lengthscales {
            *l = l.clamp(l_lo, l_hi);
        }
        self.log_signal_variance = self
            .log_signal_variance
            .clamp(SIGNAL_VARIANCE_BOUNDS.0.ln(), SIGNAL_VARIANCE_BOUNDS.1.ln());
        self.log_noise_variance = self
            .log_noise_variance
            .clamp(NOISE_VARIANCE_BOUNDS.0.ln(), NOISE_VARIANCE_BOUNDS.1.ln());
    }

    fn as_vec(&self) -> Vec<f64> {
        let mut v = self.log_lengthscales.clone();
        v.push(self.log_signal_variance);
        v.push(self.log_noise_variance);
        v
    }

    fn from_vec(v: &[f64], dim: usize) -> Self {
        Self {
            log_lengthscales: v[..dim].to_vec(),
            log_signal_variance: v[dim],
            log_noise_variance: v[dim + 1],
        }
    }
}

/// Fitted Gaussian-process posterior state.
#[derive(Debug, Clone)]
pub struct GpModel {
    train_x: Vec<Vec<f64>>,
    train_y_std: DVector<f64>,
    y_mean: f64,
    y_scale: f64,
    hypers: GpHyperparameters,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    log_likelihood: f64,
    best_train_value: f64,
}

impl GpModel {
    /// Build a model at fixed hyperparameters (values are standardized
    /// internally; the Cholesky uses the escalating jitter ladder).
    pub fn with_hyperparameters(
        points: &[Vec<f64>],
        values: &[f64],
        hypers: GpHyperparameters,
    ) -> Result<Self> {
        let dim = check_training_data(points, values)?;
        if hypers.log_lengthscales.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: hypers.log_lengthscales.len(),
            });
        }
        let (y_mean, y_scale) = mean_scale(values);
        let y_std: Vec<f64> = values.iter().map(|&v| (v - y_mean) / y_scale).collect();
        let (chol, _jitter) = cholesky_with_jitter(&kernel_matrix(points, &hypers), true)?;
        let y_vec = DVector::from_vec(y_std.clone());
        let alpha = solve_with_cholesky(&chol, &y_vec);
        let ll = ll_from_pieces(&chol, &y_vec, &alpha);
        let best = values.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(Self {
            train_x: points.to_vec(),
            train_y_std: y_vec,
            y_mean,
            y_scale,
            hypers,
            chol,
            alpha,
            log_likelihood: ll,
            best_train_value: best,
        })
    }

    pub fn hyperparameters(&self) -> &GpHyperparameters {
        &self.hypers
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    pub fn train_len(&self) -> usize {
        self.train_x.len()
    }

    pub fn dimension(&self) -> usize {
        self.train_x[0].len()
    }

    /// Lowest raw training value (the incumbent for improvement measures).
    pub fn best_train_value(&self) -> f64 {
        self.best_train_value
    }

    /// Training point with the lowest value.
    pub fn best_train_point(&self) -> &[f64] {
        let idx = (0..self.train_x.len())
            .min_by(|&a, &b| {
                let ya = self.y_mean + self.y_scale * self.train_y_std[a];
                let yb = self.y_mean + self.y_scale * self.train_y_std[b];
                ya.total_cmp(&yb)
            })
            .expect("nonempty training set");
        &self.train_x[idx]
    }

    /// Reconstruction residual of the stored factor,
    /// `||L L^T - (K + sigma_n^2 I)||_F / ||K + sigma_n^2 I||_F`.
    pub fn cholesky_residual(&self) -> f64 {
        let k = kernel_matrix(&self.train_x, &self.hypers);
        let rebuilt = &self.chol * self.chol.transpose();
        ((&rebuilt - &k).norm()) / k.norm()
    }

    /// Posterior mean and covariance at `queries`, de-standardized.
    /// Diagonal entries are clamped to be non-negative.
    pub fn posterior(&self, queries: &[Vec<f64>]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let dim = self.dimension();
        for q in queries {
            if q.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: q.len() });
            }
        }
        let n = queries.len();
        let m = self.train_x.len();
        let ell = self.hypers.lengthscales();
        let s2 = self.hypers.signal_variance();

        let mut cross = DMatrix::<f64>::zeros(m, n);
        for (j, q) in queries.iter().enumerate() {
            for (i, x) in self.train_x.iter().enumerate() {
                cross[(i, j)] = matern52(x, q, &ell, s2);
            }
        }
        let mut prior = DMatrix::<f64>::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let k = matern52(&queries[a], &queries[b], &ell, s2);
                prior[(a, b)] = k;
                prior[(b, a)] = k;
            }
        }

        let mean: Vec<f64> = (0..n)
            .map(|j| {
                let dot: f64 = (0..m).map(|i| cross[(i, j)] * self.alpha[i]).sum();
                self.y_mean + self.y_scale * dot
            })
            .collect();

        // V = L^{-1} K_x, cov = K_** - V^T V
        let v = solve_lower(&self.chol, &cross);
        let mut cov = prior - v.transpose() * v;
        let scale2 = self.y_scale * self.y_scale;
        for a in 0..n {
            for b in (a + 1)..n {
                let sym = 0.5 * (cov[(a, b)] + cov[(b, a)]) * scale2;
                cov[(a, b)] = sym;
                cov[(b, a)] = sym;
            }
            cov[(a, a)] = (cov[(a, a)] * scale2).max(0.0);
        }
        Ok((mean, cov))
    }
}

/// Fit a GP by maximizing the exact log marginal likelihood with
/// multi-start projected gradient ascent (8 restarts, 50 steps each,
/// 1e-5 tolerance on the log-likelihood). Training data beyond
/// [`MAX_TRAIN_POINTS`] is truncated to the most recent points.
pub fn fit_gp(points: &[Vec<f64>], values: &[f64]) -> Result<GpModel> {
    fit_gp_with_init(points, values, None)
}

/// [`fit_gp`] with an optional warm start that replaces the default
/// first restart.
pub fn fit_gp_with_init(
    points: &[Vec<f64>],
    values: &[f64],
    warm: Option<&GpHyperparameters>,
) -> Result<GpModel> {
    let dim = check_training_data(points, values)?;
    let (points, values) = if points.len() > MAX_TRAIN_POINTS {
        let start = points.len() - MAX_TRAIN_POINTS;
        (&points[start..], &values[start..])
    } else {
        (points, values)
    };
    let (y_mean, y_scale) = mean_scale(values);
    let y_std: Vec<f64> = values.iter().map(|&v| (v - y_mean) / y_scale).collect();

    let mut starts = Vec::with_capacity(MLE_RESTARTS);
    let default_start = GpHyperparameters {
        log_lengthscales: vec![0.5f64.ln(); dim],
        log_signal_variance: 0.0,
        log_noise_variance: 1e-4f64.ln(),
    };
    match warm {
        Some(h) if h.log_lengthscales.len() == dim => {
            let mut h = h.clone();
            h.clamp_to_bounds();
            starts.push(h);
        }
        _ => starts.push(default_start),
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x57ea_de00);
    while starts.len() < MLE_RESTARTS {
        let log_uniform = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
            lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())
        };
        starts.push(GpHyperparameters {
            log_lengthscales: (0..dim).map(|_| log_uniform(&mut rng, 0.05, 2.0)).collect(),
            log_signal_variance: log_uniform(&mut rng, 0.25, 4.0),
            log_noise_variance: log_uniform(&mut rng, 1e-6, 1e-2),
        });
    }

    let mut best: Option<(f64, GpHyperparameters)> = None;
    for start in starts {
        if let Some((ll, hypers)) = ascend_likelihood(points, &y_std, start) {
            if best.as_ref().is_none_or(|(b, _)| ll > *b) {
                best = Some((ll, hypers));
            }
        }
    }
    let (_, hypers) =
        best.ok_or_else(|| Error::FactorizationFailed("no likelihood ascent succeeded".into()))?;
    GpModel::with_hyperparameters(points, values, hypers)
}

/// One projected gradient-ascent run; returns the best (ll, hypers) seen.
fn ascend_likelihood(
    points: &[Vec<f64>],
    y_std: &[f64],
    mut hypers: GpHyperparameters,
) -> Option<(f64, GpHyperparameters)> {
    hypers.clamp_to_bounds();
    let dim = hypers.log_lengthscales.len();
    let (mut ll, mut grad) = log_marginal_with_grad(points, y_std, &hypers).ok()?;
    let mut step = 0.5;
    for _ in 0..MLE_MAX_STEPS {
        let scale = step / grad.iter().fold(1.0f64, |m, g| m.max(g.abs()));
        let mut improved = false;
        let mut trial_step = scale;
        for _ in 0..10 {
            let theta = hypers.as_vec();
            let proposal: Vec<f64> =
                theta.iter().zip(&grad).map(|(t, g)| t + trial_step * g).collect();
            let mut candidate = GpHyperparameters::from_vec(&proposal, dim);
            candidate.clamp_to_bounds();
            if let Ok((ll_new, grad_new)) = log_marginal_with_grad(points, y_std, &candidate) {
                if ll_new > ll {
                    let gain = ll_new - ll;
                    hypers = candidate;
                    ll = ll_new;
                    grad = grad_new;
                    step = (step * 1.3).min(1.0);
                    improved = true;
                    if gain < MLE_LL_TOL {
                        return Some((ll, hypers));
                    }
                    break;
                }
            }
            trial_step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Some((ll, hypers))
}

/// Exact log marginal likelihood of `values` (used as given) under the
/// Matérn-5/2 ARD kernel.
pub fn log_marginal(points: &[Vec<f64>], values: &[f64], hypers: &GpHyperparameters) -> Result<f64> {
    let (chol, _) = cholesky_with_jitter(&kernel_matrix(points, hypers), false)?;
    let y = DVector::from_column_slice(values);
    let alpha = solve_with_cholesky(&chol, &y);
    Ok(ll_from_pieces(&chol, &y, &alpha))
}

/// Log marginal likelihood and its gradient with respect to every
/// log-hyperparameter (lengthscales, then signal variance, then noise
/// variance).
pub fn log_marginal_with_grad(
    points: &[Vec<f64>],
    values: &[f64],
    hypers: &GpHyperparameters,
) -> Result<(f64, Vec<f64>)> {
    let m = points.len();
    let dim = points[0].len();
    let ell = hypers.lengthscales();
    let s2 = hypers.signal_variance();
    let noise = hypers.noise_variance();

    let k = kernel_matrix(points, hypers);
    let (chol, _) = cholesky_with_jitter(&k, false)?;
    let y = DVector::from_column_slice(values);
    let alpha = solve_with_cholesky(&chol, &y);
    let ll = ll_from_pieces(&chol, &y, &alpha);

    let k_inv = invert_from_cholesky(&chol);

    // W = alpha alpha^T - K^{-1}; dLL/dtheta = 0.5 tr(W dK/dtheta)
    let mut grad = vec![0.0; dim + 2];
    let mut tr_w = 0.0;
    for i in 0..m {
        tr_w += alpha[i] * alpha[i] - k_inv[(i, i)];
        // diagonal: dK/dlog s2 contributes s2, lengthscales contribute 0
        grad[dim] += 0.5 * (alpha[i] * alpha[i] - k_inv[(i, i)]) * s2;
    }
    grad[dim + 1] = 0.5 * noise * tr_w;

    for i in 0..m {
        for j in (i + 1)..m {
            let w = alpha[i] * alpha[j] - k_inv[(i, j)];
            let mut r2 = 0.0;
            for d in 0..dim {
                let delta = (points[i][d] - points[j][d]) / ell[d];
                r2 += delta * delta;
            }
            let r = r2.sqrt();
            let e = (-SQRT5 * r).exp();
            let k_ij = s2 * (1.0 + SQRT5 * r + 5.0 * r2 / 3.0) * e;
            // d k / d log ell_d = s2 * (5/3) (1 + sqrt5 r) e * delta_d^2 / ell_d^2
            let common = s2 * (5.0 / 3.0) * (1.0 + SQRT5 * r) * e;
            for d in 0..dim {
                let delta2 = (points[i][d] - points[j][d]).powi(2) / (ell[d] * ell[d]);
                grad[d] += w * common * delta2; // symmetric pair counted once -> x2 / 2 = x1
            }
            grad[dim] += w * k_ij;
        }
    }
    Ok((ll, grad))
}

fn check_training_data(points: &[Vec<f64>], values: &[f64]) -> Result<usize> {
    if points.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), got: values.len() });
    }
    if points.len() < 2 {
        return Err(Error::NotEnoughPoints { needed: 2, got: points.len() });
    }
    let dim = points[0].len();
    if dim == 0 {
        return Err(Error::InvalidConfig("zero-dimensional training points".into()));
    }
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("non-finite training value".into()));
    }
    Ok(dim)
}

fn mean_scale(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
    (mean, var.sqrt().max(1e-12))
}

fn matern52(a: &[f64], b: &[f64], ell: &[f64], s2: f64) -> f64 {
    let mut r2 = 0.0;
    for d in 0..a.len() {
        let delta = (a[d] - b[d]) / ell[d];
        r2 += delta * delta;
    }
    let r = r2.sqrt();
    s2 * (1.0 + SQRT5 * r + 5.0 * r2 / 3.0) * (-SQRT5 * r).exp()
}

/// Kernel matrix including the noise diagonal.
fn kernel_matrix(points: &[Vec<f64>], hypers: &GpHyperparameters) -> DMatrix<f64> {
    let m = points.len();
    let ell = hypers.lengthscales();
    let s2 = hypers.signal_variance();
    let noise = hypers.noise_variance();
    let mut k = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        k[(i, i)] = s2 + noise;
        for j in (i + 1)..m {
            let v = matern52(&points[i], &points[j], &ell, s2);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Cholesky with an escalating diagonal jitter ladder (1e-8 .. 1e-4,
/// scaled by the mean diagonal). With `allow_jitter` false only the exact
/// factorization is attempted once before jitter kicks in.
fn cholesky_with_jitter(k: &DMatrix<f64>, allow_jitter: bool) -> Result<(DMatrix<f64>, f64)> {
    if let Some(c) = Cholesky::new(k.clone()) {
        return Ok((c.unpack(), 0.0));
    }
    if !allow_jitter {
        // callers evaluating candidate hyperparameters treat failure as
        // an invalid point rather than masking it with jitter
        return Err(Error::FactorizationFailed("kernel matrix not positive definite".into()));
    }
    let m = k.nrows();
    let mean_diag = (0..m).map(|i| k[(i, i)]).sum::<f64>() / m as f64;
    let mut jitter = 1e-8;
    while jitter <= 1e-4 {
        let mut kj = k.clone();
        for i in 0..m {
            kj[(i, i)] += jitter * mean_diag;
        }
        if let Some(c) = Cholesky::new(kj) {
            return Ok((c.unpack(), jitter * mean_diag));
        }
        jitter *= 10.0;
    }
    Err(Error::FactorizationFailed(
        "kernel matrix not positive definite after jitter escalation".into(),
    ))
}

fn solve_with_cholesky(l: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let mut x = rhs.clone();
    l.solve_lower_triangular_mut(&mut x);
    l.transpose().solve_upper_triangular_mut(&mut x);
    x
}

fn solve_lower(l: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    let mut x = rhs.clone();
    l.solve_lower_triangular_mut(&mut x);
    x
}

fn invert_from_cholesky(l: &DMatrix<f64>) -> DMatrix<f64> {
    let m = l.nrows();
    let mut inv = DMatrix::<f64>::identity(m, m);
    l.solve_lower_triangular_mut(&mut inv);
    l.transpose().solve_upper_triangular_mut(&mut inv);
    inv
}

fn ll_from_pieces(l: &DMatrix<f64>, y: &DVector<f64>, alpha: &DVector<f64>) -> f64 {
    let m = y.len() as f64;
    let log_det: f64 = (0..y.len()).map(|i| l[(i, i)].ln()).sum();
    -0.5 * y.dot(alpha) - log_det - 0.5 * m * (2.0 * std::f64::consts::PI).ln()
}
