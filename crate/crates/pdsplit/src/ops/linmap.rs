use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SplitError};

/// Largest singular value of a dense map, via power iteration on `M^T M` with
/// eigengap monitoring and a dense SVD fallback when the iteration stalls.
pub fn operator_norm(m: &DMatrix<f64>, iters: usize) -> f64 {
    assert!(iters >= 1);
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let gram = m.transpose() * m;
    let n = gram.nrows();
    // deterministic start vector with nonzero projection on every eigenspace
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 + 1.0).sqrt());
    let nrm = v.norm();
    v /= nrm;
    let mut prev = 0.0_f64;
    for _ in 0..iters {
        let w = &gram * &v;
        let lam = w.norm();
        if lam == 0.0 {
            return 0.0;
        }
        v = w / lam;
        let rel = (lam - prev).abs() / lam.max(1e-300);
        if rel <= 1e-14 {
            return lam.max(0.0).sqrt();
        }
        prev = lam;
    }
    // not converged to relative 1e-8: fall back to a dense SVD
    if prev > 0.0 && ((&gram * &v).norm() - prev).abs() / prev <= 1e-8 {
        return prev.max(0.0).sqrt();
    }
    m.clone().svd(false, false).singular_values.max()
}

/// A bounded linear map B : H_0 -> H_1 x ... x H_n given by dense blocks
/// B_i : H_0 -> H_i, with adjoint access and a certified operator norm.
#[derive(Debug, Clone)]
pub struct BlockLinearMap {
    blocks: Vec<DMatrix<f64>>,
    opnorm: f64,
}

impl BlockLinearMap {
    pub fn new(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(SplitError::Layout("B needs at least one block".into()));
        }
        let ncols = blocks[0].ncols();
        if blocks.iter().any(|b| b.ncols() != ncols) {
            return Err(SplitError::Layout(
                "all B_i must share the primal dimension".into(),
            ));
        }
        let stacked = Self::stack(&blocks);
        let opnorm = operator_norm(&stacked, 200);
        Ok(BlockLinearMap { blocks, opnorm })
    }

    fn stack(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
        let ncols = blocks[0].ncols();
        let nrows: usize = blocks.iter().map(|b| b.nrows()).sum();
        let mut out = DMatrix::zeros(nrows, ncols);
        let mut off = 0;
        for b in blocks {
            out.rows_mut(off, b.nrows()).copy_from(b);
            off += b.nrows();
        }
        out
    }

    pub fn n_duals(&self) -> usize {
        self.blocks.len()
    }

    pub fn primal_dim(&self) -> usize {
        self.blocks[0].ncols()
    }

    pub fn dual_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn block(&self, i: usize) -> &DMatrix<f64> {
        &self.blocks[i]
    }

    /// `||B||`, the largest singular value of the stacked map.
    pub fn opnorm(&self) -> f64 {
        self.opnorm
    }

    /// Bx = (B_1 x, ..., B_n x).
    pub fn apply(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        self.blocks.iter().map(|b| b * x).collect()
    }

    pub fn apply_block(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        &self.blocks[i] * x
    }

    /// B^* y = sum_i B_i^T y_i.
    pub fn adjoint_apply(&self, ys: &[&DVector<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.primal_dim());
        for (b, y) in self.blocks.iter().zip(ys) {
            out += b.transpose() * *y;
        }
        out
    }

    pub fn stacked(&self) -> DMatrix<f64> {
        Self::stack(&self.blocks)
    }

    /// An all-zero map (no primal-dual coupling).
    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|&v| v == 0.0))
    }
}
