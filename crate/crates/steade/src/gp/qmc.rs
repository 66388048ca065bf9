//! Randomized quasi-Monte Carlo sampling: Owen-scrambled Sobol points
//! pushed through the inverse standard-normal CDF.
//!
//! Direction numbers are generated from primitive polynomials over GF(2)
//! (enumerated by degree, constant term 1) with unit initial values, and
//! each dimension is scrambled with a hash-based Owen scramble keyed by
//! `(seed, dimension)`. Scrambling a dimension never depends on how many
//! other dimensions are requested, so the first columns of a wider matrix
//! reproduce a narrower one drawn with the same seed.

use std::sync::OnceLock;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest supported dimension (primitive polynomials up to degree 8).
pub const MAX_DIMENSION: usize = 53;

const BITS: usize = 32;

/// Scrambled-Sobol sampler configuration: `samples` must be a power of two
/// so the point set stays balanced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QmcSampler {
    samples: usize,
    dimension: usize,
    seed: u64,
}

impl QmcSampler {
    pub fn new(samples: usize, dimension: usize, seed: u64) -> Result<Self> {
        if samples == 0 || !samples.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(samples));
        }
        if dimension == 0 || dimension > MAX_DIMENSION {
            return Err(Error::InvalidConfig(format!(
                "sampler dimension {dimension} outside 1..={MAX_DIMENSION}"
            )));
        }
        Ok(Self { samples, dimension, seed })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// N x q matrix of scrambled Sobol points in (0, 1).
    pub fn uniform_matrix(&self) -> Vec<Vec<f64>> {
        let vectors = direction_vectors();
        let mut out = vec![vec![0.0; self.dimension]; self.samples];
        for dim in 0..self.dimension {
            let key = dim_key(self.seed, dim);
            let v = &vectors[dim];
            let mut state: u32 = 0;
            for (i, row) in out.iter_mut().enumerate() {
                if i > 0 {
                    state ^= v[(i as u32).trailing_zeros() as usize];
                }
                let scrambled = owen_scramble(state, key);
                row[dim] = (scrambled as f64 + 0.5) / 4294967296.0;
            }
        }
        out
    }

    /// N x q matrix of standard normals (inverse-CDF transform of
    /// [`Self::uniform_matrix`]).
    pub fn normal_matrix(&self) -> Vec<Vec<f64>> {
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let mut m = self.uniform_matrix();
        for row in &mut m {
            for x in row {
                *x = normal.inverse_cdf(*x);
            }
        }
        m
    }
}

/// Convenience wrapper: `n` x `d` standard-normal matrix for a seed.
pub fn sobol_normal(n: usize, d: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    Ok(QmcSampler::new(n, d, seed)?.normal_matrix())
}

fn dim_key(seed: u64, dim: usize) -> u32 {
    let lo = seed as u32;
    let hi = (seed >> 32) as u32;
    mix32(lo ^ mix32(hi ^ (dim as u32).wrapping_mul(0x9e37_79b9)))
}

/// 32-bit finalizer (hash-prospector constants).
fn mix32(n: u32) -> u32 {
    let mut h = n ^ 0x79c6_8e4a;
    h ^= h >> 16;
    h = h.wrapping_mul(0x7feb_352d);
    h ^= h >> 15;
    h = h.wrapping_mul(0x846c_a68b);
    h ^= h >> 16;
    h
}

/// Hash-based Owen scramble: the carry-propagating hash acts on reversed
/// bits, which makes every output bit a function of the more significant
/// input bits, as nested uniform scrambling requires.
fn owen_scramble(value: u32, key: u32) -> u32 {
    let mut n = value.reverse_bits();
    n ^= n.wrapping_mul(0x3d20_adea);
    n = n.wrapping_add(key);
    n = n.wrapping_mul((key >> 16) | 1);
    n ^= n.wrapping_mul(0x0552_6c56);
    n ^= n.wrapping_mul(0x53a2_2864);
    n.reverse_bits()
}

/// Direction vectors for [`MAX_DIMENSION`] dimensions, built once.
fn direction_vectors() -> &'static Vec<[u32; BITS]> {
    static VECTORS: OnceLock<Vec<[u32; BITS]>> = OnceLock::new();
    VECTORS.get_or_init(|| {
        let mut vectors = Vec::with_capacity(MAX_DIMENSION);
        // first dimension: van der Corput radical inverse
        let mut v0 = [0u32; BITS];
        for (k, v) in v0.iter_mut().enumerate() {
            *v = 1u32 << (BITS - 1 - k);
        }
        vectors.push(v0);
        for poly in primitive_polynomials() {
            if vectors.len() == MAX_DIMENSION {
                break;
            }
            vectors.push(vectors_from_polynomial(poly));
        }
        assert_eq!(vectors.len(), MAX_DIMENSION);
        vectors
    })
}

/// Direction numbers from a primitive polynomial with all-ones initial
/// values: `m_k = XOR_{t=1..s-1} 2^t a_t m_{k-t} XOR 2^s m_{k-s} XOR m_{k-s}`.
fn vectors_from_polynomial(poly: u16) -> [u32; BITS] {
    let s = (15 - poly.leading_zeros()) as usize; // degree
    let mut m = [0u64; BITS];
    for k in 0..BITS {
        if k < s {
            m[k] = 1;
        } else {
            let mut val = (m[k - s] << s) ^ m[k - s];
            for t in 1..s {
                let a_t = (poly >> (s - t)) & 1;
                if a_t == 1 {
                    val ^= m[k - t] << t;
                }
            }
            m[k] = val;
        }
    }
    let mut v = [0u32; BITS];
    for k in 0..BITS {
        v[k] = (m[k] as u32) << (BITS - 1 - k);
    }
    v
}

/// All primitive polynomials over GF(2) of degree 1..=8 in (degree, value)
/// order. A degree-s candidate with constant term 1 is primitive when the
/// multiplicative order of x modulo the polynomial is exactly 2^s - 1.
fn primitive_polynomials() -> Vec<u16> {
    let mut polys = Vec::new();
    for degree in 1..=8u32 {
        let lo = 1u16 << degree;
        let hi = 1u16 << (degree + 1);
        for candidate in lo..hi {
            if candidate & 1 == 1 && is_primitive(candidate, degree) {
                polys.push(candidate);
            }
        }
    }
    polys
}

fn is_primitive(poly: u16, degree: u32) -> bool {
    let group_order = (1u32 << degree) - 1;
    // multiply by x modulo poly, starting from x^1
    let mut value: u16 = 0b10;
    if value & (1 << degree) != 0 {
        value ^= poly;
    }
    let mut order = 1u32;
    while value != 1 {
        value <<= 1;
        if value & (1 << degree) != 0 {
            value ^= poly;
        }
        order += 1;
        if order > group_order {
            return false;
        }
    }
    order == group_order
}
