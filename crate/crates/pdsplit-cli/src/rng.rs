//! SplitMix64: the named 64-bit generator all instance randomness derives
//! from, so a (spec, seed) pair reproduces bit-identically across
//! implementations. Constants are the standard Steele-Lea-Flood ones.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform().max(1e-300);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn vector_normal(&mut self, dim: usize) -> DVector<f64> {
        DVector::from_fn(dim, |_, _| self.normal())
    }

    pub fn vector_uniform(&mut self, dim: usize, lo: f64, hi: f64) -> DVector<f64> {
        DVector::from_fn(dim, |_, _| self.range(lo, hi))
    }

    pub fn matrix_normal(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        // row-major fill order, part of the reproducibility contract
        let mut m = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = self.normal();
            }
        }
        m
    }
}
