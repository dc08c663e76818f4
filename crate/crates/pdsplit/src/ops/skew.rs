use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SplitError};
use crate::ops::linmap::{operator_norm, BlockLinearMap};
use crate::space::point::{Layout, ProductPoint};

/// Structural form of the skew coupling built from B.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkewForm {
    /// (x, y) -> (B^* y, -B x)
    Level1,
    /// (x, y, v) -> (B^* y, -B x + v, -y)
    Level2,
}

/// A skew-symmetric linear map S (S^* = -S) coupling primal and dual blocks.
#[derive(Debug, Clone)]
pub struct SkewOperator {
    form: SkewForm,
    b: Arc<BlockLinearMap>,
    layout: Layout,
    opnorm: f64,
}

impl SkewOperator {
    pub fn level1(b: Arc<BlockLinearMap>) -> Self {
        let mut dims = vec![b.primal_dim()];
        dims.extend(b.dual_dims());
        let layout = Layout::new(dims);
        let opnorm = b.opnorm();
        SkewOperator {
            form: SkewForm::Level1,
            b,
            layout,
            opnorm,
        }
    }

    pub fn level2(b: Arc<BlockLinearMap>) -> Self {
        let mut dims = vec![b.primal_dim()];
        dims.extend(b.dual_dims());
        dims.extend(b.dual_dims());
        let layout = Layout::new(dims);
        let mut s = SkewOperator {
            form: SkewForm::Level2,
            b,
            layout,
            opnorm: 0.0,
        };
        s.opnorm = operator_norm(&s.assemble(), 500);
        s
    }

    pub fn form(&self) -> SkewForm {
        self.form
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn b(&self) -> &Arc<BlockLinearMap> {
        &self.b
    }

    pub fn n_duals(&self) -> usize {
        self.b.n_duals()
    }

    /// Certified ||S||.
    pub fn opnorm(&self) -> f64 {
        self.opnorm
    }

    pub fn is_zero(&self) -> bool {
        self.b.is_zero()
    }

    pub fn apply(&self, p: &ProductPoint) -> ProductPoint {
        let n = self.b.n_duals();
        let x = p.block(0);
        let ys: Vec<&DVector<f64>> = (0..n).map(|i| p.block(1 + i)).collect();
        match self.form {
            SkewForm::Level1 => {
                let mut out = Vec::with_capacity(1 + n);
                out.push(self.b.adjoint_apply(&ys));
                for i in 0..n {
                    out.push(-self.b.apply_block(i, x));
                }
                ProductPoint::new(out)
            }
            SkewForm::Level2 => {
                let vs: Vec<&DVector<f64>> = (0..n).map(|i| p.block(1 + n + i)).collect();
                let mut out = Vec::with_capacity(1 + 2 * n);
                out.push(self.b.adjoint_apply(&ys));
                for i in 0..n {
                    out.push(vs[i] - self.b.apply_block(i, x));
                }
                for i in 0..n {
                    out.push(-ys[i]);
                }
                ProductPoint::new(out)
            }
        }
    }

    pub fn assemble(&self) -> DMatrix<f64> {
        let total = self.layout.total_dim();
        let mut s = DMatrix::zeros(total, total);
        let d0 = self.layout.dim(0);
        let n = self.b.n_duals();
        for i in 0..n {
            let off = self.layout.offset(1 + i);
            let di = self.layout.dim(1 + i);
            s.view_mut((0, off), (d0, di))
                .copy_from(&self.b.block(i).transpose());
            s.view_mut((off, 0), (di, d0))
                .copy_from(&(self.b.block(i) * -1.0));
        }
        if self.form == SkewForm::Level2 {
            for i in 0..n {
                let offy = self.layout.offset(1 + i);
                let offv = self.layout.offset(1 + n + i);
                let di = self.layout.dim(1 + i);
                let eye = DMatrix::identity(di, di);
                s.view_mut((offy, offv), (di, di)).copy_from(&eye);
                s.view_mut((offv, offy), (di, di)).copy_from(&(eye * -1.0));
            }
        }
        s
    }
}

/// A skew operator that contributes nothing (B = 0); used by problems with no
/// primal-dual coupling.
pub fn zero_skew(layout: &Layout) -> Result<SkewOperator> {
    if layout.n_blocks() < 2 {
        return Err(SplitError::Layout(
            "a level-1 skew needs a primal and at least one dual block".into(),
        ));
    }
    let d0 = layout.dim(0);
    let blocks = (1..layout.n_blocks())
        .map(|i| DMatrix::zeros(layout.dim(i), d0))
        .collect();
    Ok(SkewOperator::level1(Arc::new(BlockLinearMap::new(blocks)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn sample_skew() -> SkewOperator {
        let b = Arc::new(
            BlockLinearMap::new(vec![dmatrix![1.0, 2.0; 0.0, 1.0], dmatrix![0.5, -0.5]]).unwrap(),
        );
        SkewOperator::level1(b)
    }

    #[test]
    fn skew_symmetry_pointwise() {
        let s = sample_skew();
        for seed in 0..8 {
            let x = DVector::from_fn(2, |i, _| ((seed * 7 + i * 3) as f64).sin());
            let y1 = DVector::from_fn(2, |i, _| ((seed * 5 + i) as f64).cos());
            let y2 = DVector::from_fn(1, |_, _| (seed as f64) * 0.3 - 1.0);
            let p = ProductPoint::new(vec![x, y1, y2]);
            let sp = s.apply(&p);
            let q = sp.dot(&p);
            assert!(q.abs() <= 1e-10 * p.norm_sq().max(1.0), "⟨Sx,x⟩ = {q}");
        }
    }

    #[test]
    fn adjoint_is_negative() {
        let s = sample_skew();
        let p = ProductPoint::new(vec![
            DVector::from_vec(vec![1.0, -1.0]),
            DVector::from_vec(vec![2.0, 0.5]),
            DVector::from_vec(vec![-0.25]),
        ]);
        let q = ProductPoint::new(vec![
            DVector::from_vec(vec![0.3, 0.7]),
            DVector::from_vec(vec![-1.5, 1.0]),
            DVector::from_vec(vec![2.0]),
        ]);
        let lhs = s.apply(&p).dot(&q);
        let rhs = -p.dot(&s.apply(&q));
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn apply_matches_assembly_level1() {
        let s = sample_skew();
        let p = ProductPoint::new(vec![
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![-0.5, 0.25]),
            DVector::from_vec(vec![3.0]),
        ]);
        let via_struct = s.apply(&p).flatten();
        let via_dense = s.assemble() * p.flatten();
        assert!((via_struct - via_dense).norm() < 1e-12);
    }

    #[test]
    fn apply_matches_assembly_level2() {
        let b = Arc::new(BlockLinearMap::new(vec![dmatrix![0.4, -0.2; 0.3, 0.1]]).unwrap());
        let s = SkewOperator::level2(b);
        let p = ProductPoint::new(vec![
            DVector::from_vec(vec![1.0, -1.0]),
            DVector::from_vec(vec![0.5, 2.0]),
            DVector::from_vec(vec![-0.75, 0.1]),
        ]);
        let via_struct = s.apply(&p).flatten();
        let via_dense = s.assemble() * p.flatten();
        assert!((via_struct - via_dense).norm() < 1e-12);
        let q = s.apply(&p).dot(&p);
        assert!(q.abs() < 1e-12 * p.norm_sq());
    }

    #[test]
    fn level1_opnorm_is_b_norm() {
        let s = sample_skew();
        let dense_norm = operator_norm(&s.assemble(), 500);
        assert!((s.opnorm() - dense_norm).abs() < 1e-8);
    }
}
