use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SplitError};

/// Block dimensions of a product space H = H_0 x H_1 x ... x H_n.
///
/// Block 0 holds the primal variable, blocks 1..=n hold dual variables, and a
/// level-2 splitting appends n auxiliary blocks after those.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    dims: Vec<usize>,
}

impl Layout {
    pub fn new(dims: Vec<usize>) -> Self {
        assert!(!dims.is_empty(), "layout needs at least one block");
        Layout { dims }
    }

    pub fn n_blocks(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, block: usize) -> usize {
        self.dims[block]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Offset of `block` in the flattened vector.
    pub fn offset(&self, block: usize) -> usize {
        self.dims[..block].iter().sum()
    }

    pub fn check_point(&self, p: &ProductPoint) -> Result<()> {
        if p.blocks.len() != self.dims.len()
            || p.blocks.iter().zip(&self.dims).any(|(b, &d)| b.len() != d)
        {
            return Err(SplitError::Layout(format!(
                "expected blocks {:?}, got {:?}",
                self.dims,
                p.blocks.iter().map(|b| b.len()).collect::<Vec<_>>()
            )));
        }
        Ok(())
    }
}

/// A point in the product space: one real vector per block.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPoint {
    pub blocks: Vec<DVector<f64>>,
}

impl ProductPoint {
    pub fn new(blocks: Vec<DVector<f64>>) -> Self {
        ProductPoint { blocks }
    }

    pub fn zeros(layout: &Layout) -> Self {
        ProductPoint {
            blocks: layout.dims().iter().map(|&d| DVector::zeros(d)).collect(),
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, i: usize) -> &DVector<f64> {
        &self.blocks[i]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut DVector<f64> {
        &mut self.blocks[i]
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Concatenate the blocks into one flat vector.
    pub fn flatten(&self) -> DVector<f64> {
        let total: usize = self.blocks.iter().map(|b| b.len()).sum();
        let mut out = DVector::zeros(total);
        let mut off = 0;
        for b in &self.blocks {
            out.rows_mut(off, b.len()).copy_from(b);
            off += b.len();
        }
        out
    }

    /// Split a flat vector back into blocks according to `layout`.
    pub fn unflatten(layout: &Layout, flat: &DVector<f64>) -> Self {
        assert_eq!(flat.len(), layout.total_dim(), "flat length mismatch");
        let mut blocks = Vec::with_capacity(layout.n_blocks());
        let mut off = 0;
        for &d in layout.dims() {
            blocks.push(flat.rows(off, d).into_owned());
            off += d;
        }
        ProductPoint { blocks }
    }

    pub fn dot(&self, other: &ProductPoint) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.dot(b))
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: f64) -> ProductPoint {
        ProductPoint {
            blocks: self.blocks.iter().map(|b| b * s).collect(),
        }
    }

    pub fn add(&self, other: &ProductPoint) -> ProductPoint {
        ProductPoint {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &ProductPoint) -> ProductPoint {
        ProductPoint {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// self + s * other
    pub fn axpy(&self, s: f64, other: &ProductPoint) -> ProductPoint {
        ProductPoint {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a + b * s)
                .collect(),
        }
    }

    /// In-place self += s * other, reusing allocations along hot loops.
    pub fn axpy_mut(&mut self, s: f64, other: &ProductPoint) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.axpy(s, b, 1.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn flatten_roundtrip() {
        let layout = Layout::new(vec![2, 3, 1]);
        let p = ProductPoint::new(vec![
            dvector![1.0, 2.0],
            dvector![3.0, 4.0, 5.0],
            dvector![6.0],
        ]);
        layout.check_point(&p).unwrap();
        let q = ProductPoint::unflatten(&layout, &p.flatten());
        assert_eq!(p, q);
    }

    #[test]
    fn layout_rejects_mismatch() {
        let layout = Layout::new(vec![2, 2]);
        let p = ProductPoint::new(vec![dvector![1.0, 2.0], dvector![3.0]]);
        assert!(layout.check_point(&p).is_err());
    }

    #[test]
    fn arithmetic() {
        let a = ProductPoint::new(vec![dvector![1.0, 0.0], dvector![2.0]]);
        let b = ProductPoint::new(vec![dvector![0.0, 1.0], dvector![1.0]]);
        assert_eq!(a.dot(&b), 2.0);
        let c = a.axpy(2.0, &b);
        assert_eq!(c.block(0), &dvector![1.0, 2.0]);
        assert_eq!(c.block(1), &dvector![4.0]);
    }
}
