//! Differential-evolution primitives: distinct index sampling, the
//! surrogate-seeded donor construction, binomial crossover, and greedy
//! selection.
//!
//! Donors are built from a BO-proposed base vector plus an F-scaled
//! difference of RBF-proposed points and a 1/G-decaying random blend of
//! population differences, so the mutation drifts from global to local
//! search as the iteration counter grows.

use rand::Rng;

use crate::error::{Error, Result};

/// Population size, scale factor, and crossover rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeConfig {
    /// Number of target vectors (Np). At least 4 so distinct-index
    /// sampling has support.
    pub population_size: usize,
    /// Difference scale factor (F), nominally in [0.4, 1].
    pub scale_factor: f64,
    /// Per-gene recombination probability (Cr) in [0, 1].
    pub crossover_rate: f64,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self { population_size: 16, scale_factor: 0.7, crossover_rate: 0.7 }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 {
            return Err(Error::InvalidConfig(format!(
                "population size {} < 4",
                self.population_size
            )));
        }
        if !self.scale_factor.is_finite() || self.scale_factor < 0.0 {
            return Err(Error::InvalidConfig("scale factor must be finite and >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::InvalidConfig("crossover rate must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Target vectors with their fitness values at generation `generation`.
#[derive(Debug, Clone)]
pub struct Population {
    pub members: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    pub generation: usize,
}

impl Population {
    pub fn best_index(&self) -> Option<usize> {
        (0..self.members.len()).min_by(|&a, &b| self.fitness[a].total_cmp(&self.fitness[b]))
    }
}

/// The BO- and RBF-proposed pools consumed by the donor construction,
/// tiled to exactly `population_size` rows.
#[derive(Debug, Clone)]
pub struct CandidatePools {
    pub bo: Vec<Vec<f64>>,
    pub rbf: Vec<Vec<f64>>,
}

impl CandidatePools {
    /// Cycle smaller generated batches until both pools have `np` rows.
    pub fn from_batches(bo_batch: &[Vec<f64>], rbf_batch: &[Vec<f64>], np: usize) -> Result<Self> {
        if bo_batch.is_empty() || rbf_batch.is_empty() {
            return Err(Error::InvalidConfig("candidate pools need nonempty batches".into()));
        }
        let tile = |batch: &[Vec<f64>]| (0..np).map(|i| batch[i % batch.len()].clone()).collect();
        Ok(Self { bo: tile(bo_batch), rbf: tile(rbf_batch) })
    }
}

/// Draw `(r1, r2, r3)` uniformly over index triples with
/// `r1 != r2 != r3 != i`, all in `0..np`.
pub fn sample_distinct_indices<R: Rng + ?Sized>(
    np: usize,
    i: usize,
    rng: &mut R,
) -> Result<(usize, usize, usize)> {
    if np < 4 {
        return Err(Error::InvalidConfig(format!("need population >= 4, got {np}")));
    }
    if i >= np {
        return Err(Error::InvalidConfig(format!("target index {i} out of range 0..{np}")));
    }
    let mut draw = |exclude: &[usize]| loop {
        let r = rng.random_range(0..np);
        if !exclude.contains(&r) {
            return r;
        }
    };
    let r1 = draw(&[i]);
    let r2 = draw(&[i, r1]);
    let r3 = draw(&[i, r1, r2]);
    Ok((r1, r2, r3))
}

/// Donor construction from explicit operands:
/// `v = b + f * (r2 - r3) + (1/g) * rand ⊙ (x2 - x3)`, then reflected into
/// the unit cube.
pub fn bayesian_donor(
    base: &[f64],
    rbf_a: &[f64],
    rbf_b: &[f64],
    pop_a: &[f64],
    pop_b: &[f64],
    scale_factor: f64,
    generation: usize,
    rand_vec: &[f64],
) -> Vec<f64> {
    let g = generation.max(1) as f64;
    let mut v: Vec<f64> = (0..base.len())
        .map(|j| {
            base[j]
                + scale_factor * (rbf_a[j] - rbf_b[j])
                + (1.0 / g) * rand_vec[j] * (pop_a[j] - pop_b[j])
        })
        .collect();
    reflect_into_cube(&mut v);
    v
}

/// Sample indices and the fresh uniform vector, then build the donor for
/// target slot `i` at generation `g`.
pub fn bayesian_mutation<R: Rng + ?Sized>(
    population: &Population,
    pools: &CandidatePools,
    i: usize,
    generation: usize,
    scale_factor: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let np = population.members.len();
    let (r1, r2, r3) = sample_distinct_indices(np, i, rng)?;
    let d = population.members[i].len();
    let rand_vec: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    Ok(bayesian_donor(
        &pools.bo[r1],
        &pools.rbf[r2],
        &pools.rbf[r3],
        &population.members[r2],
        &population.members[r3],
        scale_factor,
        generation,
        &rand_vec,
    ))
}

/// Classic rand/1 donor used by the plain-DE baseline:
/// `v = x_{r1} + f * (x_{r2} - x_{r3})`, reflected into the cube.
pub fn rand1_mutation<R: Rng + ?Sized>(
    population: &Population,
    i: usize,
    scale_factor: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let np = population.members.len();
    let (r1, r2, r3) = sample_distinct_indices(np, i, rng)?;
    let a = &population.members[r1];
    let b = &population.members[r2];
    let c = &population.members[r3];
    let mut v: Vec<f64> =
        (0..a.len()).map(|j| a[j] + scale_factor * (b[j] - c[j])).collect();
    reflect_into_cube(&mut v);
    Ok(v)
}

/// Reflect each coordinate at the violated bound until it lands in
/// [0, 1], clipping after 8 reflections.
pub fn reflect_into_cube(v: &mut [f64]) {
    for x in v.iter_mut() {
        let mut tries = 0;
        while (*x < 0.0 || *x > 1.0) && tries < 8 {
            if *x < 0.0 {
                *x = -*x;
            }
            if *x > 1.0 {
                *x = 2.0 - *x;
            }
            tries += 1;
        }
        *x = x.clamp(0.0, 1.0);
    }
}

/// Binomial crossover: gene `j` comes from the donor when
/// `rand <= cr` or `j == j_rand`, otherwise from the target.
pub fn binomial_crossover<R: Rng + ?Sized>(
    target: &[f64],
    donor: &[f64],
    cr: f64,
    rng: &mut R,
) -> Vec<f64> {
    debug_assert_eq!(target.len(), donor.len());
    let d = target.len();
    let j_rand = rng.random_range(0..d);
    (0..d)
        .map(|j| if rng.random::<f64>() <= cr || j == j_rand { donor[j] } else { target[j] })
        .collect()
}

/// Greedy selection: the trial wins on `fu <= fx`; NaN fitness always
/// loses (a NaN-vs-NaN tie keeps the incumbent).
pub fn select<'a>(
    target: &'a [f64],
    trial: &'a [f64],
    fx: f64,
    fu: f64,
) -> (&'a [f64], f64) {
    if fu.is_nan() {
        return (target, fx);
    }
    if fx.is_nan() || fu <= fx {
        (trial, fu)
    } else {
        (target, fx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn distinct_indices_forced_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let (r1, r2, r3) = sample_distinct_indices(4, 0, &mut rng).unwrap();
            let mut got = vec![r1, r2, r3];
            got.sort_unstable();
            assert_eq!(got, vec![1, 2, 3]);
        }
    }

    #[test]
    fn distinct_indices_never_return_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100_000 {
            let (r1, r2, r3) = sample_distinct_indices(7, 3, &mut rng).unwrap();
            assert!(r1 != 3 && r2 != 3 && r3 != 3);
            assert!(r1 != r2 && r2 != r3 && r1 != r3);
        }
    }

    #[test]
    fn distinct_indices_uniform_over_triples() {
        let np = 6;
        let i = 2;
        let mut counts = std::collections::HashMap::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 100_000usize;
        for _ in 0..draws {
            let t = sample_distinct_indices(np, i, &mut rng).unwrap();
            *counts.entry(t).or_insert(0usize) += 1;
        }
        // enumerate valid ordered triples as the oracle support
        let mut support = Vec::new();
        for a in 0..np {
            for b in 0..np {
                for c in 0..np {
                    if a != i && b != i && c != i && a != b && b != c && a != c {
                        support.push((a, b, c));
                    }
                }
            }
        }
        assert_eq!(support.len(), 60);
        let expected = draws as f64 / support.len() as f64;
        let chi2: f64 = support
            .iter()
            .map(|t| {
                let o = *counts.get(t).unwrap_or(&0) as f64;
                (o - expected).powi(2) / expected
            })
            .sum();
        let dist = ChiSquared::new((support.len() - 1) as f64).unwrap();
        let p = 1.0 - dist.cdf(chi2);
        assert!(p > 0.01, "chi-square p = {p}, chi2 = {chi2}");
    }

    #[test]
    fn distinct_indices_reject_small_population() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(sample_distinct_indices(3, 0, &mut rng).is_err());
    }

    #[test]
    fn donor_zero_differences_returns_base() {
        let b = vec![0.5, 0.5];
        let r = vec![0.6, 0.4];
        let x = vec![0.3, 0.3];
        let v = bayesian_donor(&b, &r, &r, &x, &x, 0.7, 3, &[0.9, 0.1]);
        assert_eq!(v, b);
        // F = 0 with equal population rows also collapses to the base
        let r2 = vec![0.2, 0.8];
        let v = bayesian_donor(&b, &r, &r2, &x, &x, 0.0, 3, &[0.9, 0.1]);
        assert_eq!(v, b);
    }

    #[test]
    fn donor_matches_hand_computed_example() {
        let v = bayesian_donor(
            &[0.5, 0.5],
            &[0.6, 0.4],
            &[0.2, 0.8],
            &[0.3, 0.3],
            &[0.1, 0.9],
            0.7,
            5,
            &[0.2, 0.9],
        );
        assert_abs_diff_eq!(v[0], 0.788, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], 0.112, epsilon = 1e-12);
    }

    #[test]
    fn reflection_keeps_cube_and_preserves_interior() {
        let mut v = vec![-0.25, 1.4, 0.3, -3.7, 25.0];
        reflect_into_cube(&mut v);
        assert!(v.iter().all(|&x| (0.0..=1.0).contains(&x)));
        assert_abs_diff_eq!(v[0], 0.25);
        assert_abs_diff_eq!(v[1], 0.6);
        assert_abs_diff_eq!(v[2], 0.3);
    }

    #[test]
    fn crossover_extremes() {
        let x = vec![0.0; 10];
        let v = vec![1.0; 10];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            assert_eq!(binomial_crossover(&x, &v, 1.0, &mut rng), v);
            let u = binomial_crossover(&x, &v, 0.0, &mut rng);
            assert_eq!(u.iter().filter(|&&g| g == 1.0).count(), 1);
        }
    }

    #[test]
    fn crossover_inherited_gene_count_law() {
        // inherited count K = 1 + Binomial(D-1, Cr); checked by chi-square
        // against the exact enumerated law
        let d = 10;
        let cr = 0.7;
        let trials = 100_000usize;
        let x = vec![0.0; d];
        let v = vec![1.0; d];
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut observed = vec![0usize; d + 1];
        for _ in 0..trials {
            let u = binomial_crossover(&x, &v, cr, &mut rng);
            observed[u.iter().filter(|&&g| g == 1.0).count()] += 1;
        }
        let mut expected = vec![0.0; d + 1];
        for (k, e) in expected.iter_mut().enumerate() {
            if k >= 1 {
                *e = trials as f64 * binom_pmf(d - 1, k - 1, cr);
            }
        }
        // merge the low-expectation tail so every chi-square bin has E >= 5
        let mut bins: Vec<(f64, f64)> = Vec::new();
        let (mut acc_o, mut acc_e) = (0.0, 0.0);
        for k in 0..=d {
            acc_o += observed[k] as f64;
            acc_e += expected[k];
            if acc_e >= 5.0 {
                bins.push((acc_o, acc_e));
                acc_o = 0.0;
                acc_e = 0.0;
            }
        }
        if acc_e > 0.0 {
            let last = bins.len() - 1;
            bins[last].0 += acc_o;
            bins[last].1 += acc_e;
        }
        let chi2: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
        let dist = ChiSquared::new((bins.len() - 1) as f64).unwrap();
        let p = 1.0 - dist.cdf(chi2);
        assert!(p > 0.01, "chi-square p = {p}");
    }

    fn binom_pmf(n: usize, k: usize, p: f64) -> f64 {
        let mut c = 1.0;
        for j in 0..k {
            c *= (n - j) as f64 / (j + 1) as f64;
        }
        c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
    }

    #[test]
    fn selection_rules() {
        let x = vec![0.1];
        let u = vec![0.9];
        assert_eq!(select(&x, &u, 2.0, 2.0).0, &u[..]); // tie favors trial
        assert_eq!(select(&x, &u, 2.0, 3.0).0, &x[..]);
        assert_eq!(select(&x, &u, 2.0, f64::NAN).0, &x[..]);
        assert_eq!(select(&x, &u, f64::NAN, 2.0).0, &u[..]);
        assert_eq!(select(&x, &u, f64::NAN, f64::NAN).0, &x[..]);
    }

    #[test]
    fn trial_shares_component_with_donor() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let x: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            let v: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            let u = binomial_crossover(&x, &v, 0.3, &mut rng);
            assert!(u.iter().zip(&v).any(|(a, b)| a == b));
        }
    }

    #[test]
    fn pools_tile_cyclically() {
        let b = vec![vec![0.1], vec![0.2]];
        let r = vec![vec![0.5], vec![0.6], vec![0.7]];
        let pools = CandidatePools::from_batches(&b, &r, 5).unwrap();
        assert_eq!(pools.bo, vec![vec![0.1], vec![0.2], vec![0.1], vec![0.2], vec![0.1]]);
        assert_eq!(pools.rbf, vec![vec![0.5], vec![0.6], vec![0.7], vec![0.5], vec![0.6]]);
    }

    #[test]
    fn pipeline_is_reproducible() {
        let pop = Population {
            members: (0..8).map(|i| vec![i as f64 / 8.0, 1.0 - i as f64 / 8.0]).collect(),
            fitness: (0..8).map(|i| i as f64).collect(),
            generation: 4,
        };
        let pools = CandidatePools::from_batches(
            &[vec![0.4, 0.4], vec![0.6, 0.6]],
            &[vec![0.3, 0.7], vec![0.7, 0.3]],
            8,
        )
        .unwrap();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            let donor = bayesian_mutation(&pop, &pools, 2, 4, 0.7, &mut rng).unwrap();
            binomial_crossover(&pop.members[2], &donor, 0.7, &mut rng)
        };
        assert_eq!(run(), run());
    }
}
