//! Symmetric Latin hypercube designs for seeding surrogates and the DE
//! population.
//!
//! Levels map to cell midpoints, so no design point touches the cube
//! boundary, and the construction keeps row `i` and row `n-1-i` mirrored
//! around the cube center in every column.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// An n x D design with entries in (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    points: Vec<Vec<f64>>,
}

impl DesignMatrix {
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vec<f64>> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Generate a symmetric Latin hypercube design of `n` points in dimension `d`.
///
/// Each column, discretized back to `n` levels, is a permutation of
/// `{1, ..., n}`, and level `k` maps to coordinate `(k - 0.5) / n`. The
/// construction pairs mirrored levels `(k, n+1-k)` per column with random
/// pairing and orientation, lays the pairs out so that rows `i` and `n-1-i`
/// stay partners, and shuffles the pair order.
pub fn slhd<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<DesignMatrix> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidConfig(format!(
            "design needs n >= 1 and d >= 1, got n={n}, d={d}"
        )));
    }
    let half = n / 2;
    // Random order in which mirrored row pairs appear.
    let mut pair_order: Vec<usize> = (0..half).collect();
    pair_order.shuffle(rng);

    let mut points = vec![vec![0.0; d]; n];
    for col in 0..d {
        // Random assignment of level pairs (k, n+1-k) to row pairs.
        let mut level_pairs: Vec<usize> = (1..=half).collect();
        level_pairs.shuffle(rng);
        for (slot, &pair_idx) in pair_order.iter().enumerate() {
            let k = level_pairs[pair_idx];
            let (a, b) = if rng.random::<bool>() { (k, n + 1 - k) } else { (n + 1 - k, k) };
            points[slot][col] = level_to_coord(a, n);
            points[n - 1 - slot][col] = level_to_coord(b, n);
        }
        if n % 2 == 1 {
            points[half][col] = level_to_coord((n + 1) / 2, n);
        }
    }
    Ok(DesignMatrix { points })
}

fn level_to_coord(level: usize, n: usize) -> f64 {
    (level as f64 - 0.5) / n as f64
}
