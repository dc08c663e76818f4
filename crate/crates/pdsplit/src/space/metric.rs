use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Result, SplitError};
use crate::ops::linmap::BlockLinearMap;
use crate::space::point::{Layout, ProductPoint};

/// One self-adjoint strongly monotone piece acting on a single block H_i.
#[derive(Debug, Clone)]
pub enum BlockMetric {
    ScaledIdentity(f64),
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl BlockMetric {
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            BlockMetric::ScaledIdentity(c) => x * *c,
            BlockMetric::Diagonal(d) => x.component_mul(d),
            BlockMetric::Dense(m) => m * x,
        }
    }

    pub fn apply_inv(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            BlockMetric::ScaledIdentity(c) => x / *c,
            BlockMetric::Diagonal(d) => x.component_div(d),
            BlockMetric::Dense(m) => Cholesky::new(m.clone())
                .expect("dense block metric must be SPD")
                .solve(x),
        }
    }

    pub fn dense(&self, dim: usize) -> DMatrix<f64> {
        match self {
            BlockMetric::ScaledIdentity(c) => DMatrix::from_diagonal_element(dim, dim, *c),
            BlockMetric::Diagonal(d) => {
                assert_eq!(d.len(), dim);
                DMatrix::from_diagonal(d)
            }
            BlockMetric::Dense(m) => {
                assert_eq!(m.nrows(), dim);
                m.clone()
            }
        }
    }

    pub fn dense_inv(&self, dim: usize) -> DMatrix<f64> {
        match self {
            BlockMetric::ScaledIdentity(c) => DMatrix::from_diagonal_element(dim, dim, 1.0 / *c),
            BlockMetric::Diagonal(d) => DMatrix::from_diagonal(&d.map(|v| 1.0 / v)),
            BlockMetric::Dense(m) => {
                let chol = Cholesky::new(m.clone()).expect("dense block metric must be SPD");
                chol.solve(&DMatrix::identity(dim, dim))
            }
        }
    }

    /// V^{-1/2} as a dense matrix.
    pub fn dense_inv_sqrt(&self, dim: usize) -> DMatrix<f64> {
        match self {
            BlockMetric::ScaledIdentity(c) => {
                DMatrix::from_diagonal_element(dim, dim, 1.0 / c.sqrt())
            }
            BlockMetric::Diagonal(d) => DMatrix::from_diagonal(&d.map(|v| 1.0 / v.sqrt())),
            BlockMetric::Dense(m) => {
                let eig = symmetrize(m).symmetric_eigen();
                let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
                &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose()
            }
        }
    }

    pub fn min_eig(&self, dim: usize) -> f64 {
        match self {
            BlockMetric::ScaledIdentity(c) => *c,
            BlockMetric::Diagonal(d) => d.min(),
            BlockMetric::Dense(m) => {
                assert_eq!(m.nrows(), dim);
                symmetrize(m).symmetric_eigen().eigenvalues.min()
            }
        }
    }

    pub fn max_eig(&self, dim: usize) -> f64 {
        match self {
            BlockMetric::ScaledIdentity(c) => *c,
            BlockMetric::Diagonal(d) => d.max(),
            BlockMetric::Dense(m) => {
                assert_eq!(m.nrows(), dim);
                symmetrize(m).symmetric_eigen().eigenvalues.max()
            }
        }
    }

    pub fn scaled(&self, c: f64) -> BlockMetric {
        match self {
            BlockMetric::ScaledIdentity(s) => BlockMetric::ScaledIdentity(c * s),
            BlockMetric::Diagonal(d) => BlockMetric::Diagonal(d * c),
            BlockMetric::Dense(m) => BlockMetric::Dense(m * c),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        !matches!(self, BlockMetric::Dense(_))
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            BlockMetric::ScaledIdentity(c) => Some(*c),
            _ => None,
        }
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Structural form of a metric operator on the whole product space.
#[derive(Debug, Clone)]
pub enum MetricRepr {
    /// c * I on every block.
    ScaledIdentity(f64),
    /// Independent SPD pieces per block.
    BlockDiagonal(Vec<BlockMetric>),
    /// Level-1 first-class metric: U_w(x, y) = (V_0 x - w B^* y, -w B x + V y).
    Class1Level1 {
        v0: BlockMetric,
        vs: Vec<BlockMetric>,
        w: f64,
        b: Arc<BlockLinearMap>,
    },
    /// Level-2 first-class metric on (x, y, v):
    /// U'_w(x, y, v) = (V_0 x - w B^* y, V y - w B x + w v, W v + w y).
    Class1Level2 {
        v0: BlockMetric,
        vs: Vec<BlockMetric>,
        ws: Vec<BlockMetric>,
        w: f64,
        b: Arc<BlockLinearMap>,
    },
    /// Level-1 second-class metric: U_w(x, y) = (V_0 x, (V - w^2 B V_0^{-1} B^*) y).
    Class2Level1 {
        v0: BlockMetric,
        vs: Vec<BlockMetric>,
        w: f64,
        b: Arc<BlockLinearMap>,
    },
}

impl MetricRepr {
    pub fn apply(&self, p: &ProductPoint) -> ProductPoint {
        match self {
            MetricRepr::ScaledIdentity(c) => p.scale(*c),
            MetricRepr::BlockDiagonal(blocks) => ProductPoint::new(
                blocks
                    .iter()
                    .zip(&p.blocks)
                    .map(|(m, x)| m.apply(x))
                    .collect(),
            ),
            MetricRepr::Class1Level1 { v0, vs, w, b } => {
                let n = b.n_duals();
                let x = p.block(0);
                let ys: Vec<&DVector<f64>> = (0..n).map(|i| p.block(1 + i)).collect();
                let mut out = Vec::with_capacity(1 + n);
                out.push(v0.apply(x) - b.adjoint_apply(&ys) * *w);
                for i in 0..n {
                    out.push(vs[i].apply(ys[i]) - b.apply_block(i, x) * *w);
                }
                ProductPoint::new(out)
            }
            MetricRepr::Class1Level2 { v0, vs, ws, w, b } => {
                let n = b.n_duals();
                let x = p.block(0);
                let ys: Vec<&DVector<f64>> = (0..n).map(|i| p.block(1 + i)).collect();
                let vvs: Vec<&DVector<f64>> = (0..n).map(|i| p.block(1 + n + i)).collect();
                let mut out = Vec::with_capacity(1 + 2 * n);
                out.push(v0.apply(x) - b.adjoint_apply(&ys) * *w);
                for i in 0..n {
                    out.push(vs[i].apply(ys[i]) - b.apply_block(i, x) * *w + vvs[i] * *w);
                }
                for i in 0..n {
                    out.push(ws[i].apply(vvs[i]) + ys[i] * *w);
                }
                ProductPoint::new(out)
            }
            MetricRepr::Class2Level1 { v0, vs, w, b } => {
                let n = b.n_duals();
                let x = p.block(0);
                let ys: Vec<&DVector<f64>> = (0..n).map(|i| p.block(1 + i)).collect();
                let bty = b.adjoint_apply(&ys);
                let v0inv_bty = v0.apply_inv(&bty);
                let mut out = Vec::with_capacity(1 + n);
                out.push(v0.apply(x));
                for i in 0..n {
                    out.push(vs[i].apply(ys[i]) - b.apply_block(i, &v0inv_bty) * (w * w));
                }
                ProductPoint::new(out)
            }
        }
    }

    fn assemble(&self, layout: &Layout) -> DMatrix<f64> {
        let total = layout.total_dim();
        match self {
            MetricRepr::ScaledIdentity(c) => DMatrix::from_diagonal_element(total, total, *c),
            MetricRepr::BlockDiagonal(blocks) => {
                let mut out = DMatrix::zeros(total, total);
                for (i, m) in blocks.iter().enumerate() {
                    let off = layout.offset(i);
                    let d = layout.dim(i);
                    out.view_mut((off, off), (d, d)).copy_from(&m.dense(d));
                }
                out
            }
            MetricRepr::Class1Level1 { v0, vs, w, b } => {
                let mut out = DMatrix::zeros(total, total);
                let d0 = layout.dim(0);
                out.view_mut((0, 0), (d0, d0)).copy_from(&v0.dense(d0));
                for i in 0..b.n_duals() {
                    let off = layout.offset(1 + i);
                    let di = layout.dim(1 + i);
                    out.view_mut((off, off), (di, di)).copy_from(&vs[i].dense(di));
                    let coupling = b.block(i) * -*w;
                    out.view_mut((off, 0), (di, d0)).copy_from(&coupling);
                    out.view_mut((0, off), (d0, di))
                        .copy_from(&coupling.transpose());
                }
                out
            }
            MetricRepr::Class1Level2 { v0, vs, ws, w, b } => {
                let mut out = DMatrix::zeros(total, total);
                let n = b.n_duals();
                let d0 = layout.dim(0);
                out.view_mut((0, 0), (d0, d0)).copy_from(&v0.dense(d0));
                for i in 0..n {
                    let offy = layout.offset(1 + i);
                    let offv = layout.offset(1 + n + i);
                    let di = layout.dim(1 + i);
                    out.view_mut((offy, offy), (di, di))
                        .copy_from(&vs[i].dense(di));
                    out.view_mut((offv, offv), (di, di))
                        .copy_from(&ws[i].dense(di));
                    let coupling = b.block(i) * -*w;
                    out.view_mut((offy, 0), (di, d0)).copy_from(&coupling);
                    out.view_mut((0, offy), (d0, di))
                        .copy_from(&coupling.transpose());
                    let eye = DMatrix::from_diagonal_element(di, di, *w);
                    out.view_mut((offy, offv), (di, di)).copy_from(&eye);
                    out.view_mut((offv, offy), (di, di)).copy_from(&eye);
                }
                out
            }
            MetricRepr::Class2Level1 { v0, vs, w, b } => {
                let mut out = DMatrix::zeros(total, total);
                let d0 = layout.dim(0);
                out.view_mut((0, 0), (d0, d0)).copy_from(&v0.dense(d0));
                let v0_inv = v0.dense_inv(d0);
                for i in 0..b.n_duals() {
                    let offi = layout.offset(1 + i);
                    let di = layout.dim(1 + i);
                    for j in 0..b.n_duals() {
                        let offj = layout.offset(1 + j);
                        let dj = layout.dim(1 + j);
                        let mut blk = b.block(i) * &v0_inv * b.block(j).transpose() * -(w * w);
                        if i == j {
                            blk += vs[i].dense(di);
                        }
                        out.view_mut((offi, offj), (di, dj)).copy_from(&blk);
                    }
                }
                out
            }
        }
    }

    /// Block-diagonal metrics admit separable per-block operations.
    pub fn block_diagonal_parts(&self, layout: &Layout) -> Option<Vec<BlockMetric>> {
        match self {
            MetricRepr::ScaledIdentity(c) => Some(
                (0..layout.n_blocks())
                    .map(|_| BlockMetric::ScaledIdentity(*c))
                    .collect(),
            ),
            MetricRepr::BlockDiagonal(blocks) => Some(blocks.clone()),
            MetricRepr::Class1Level1 { v0, vs, w, b }
            | MetricRepr::Class1Level2 { v0, vs, w, b, .. }
            | MetricRepr::Class2Level1 { v0, vs, w, b } => {
                // couplings vanish when w = 0 or B = 0
                if *w == 0.0 || b.is_zero() {
                    let mut parts = vec![v0.clone()];
                    parts.extend(vs.iter().cloned());
                    if let MetricRepr::Class1Level2 { ws, .. } = self {
                        parts.extend(ws.iter().cloned());
                    }
                    Some(parts)
                } else {
                    None
                }
            }
        }
    }
}

/// A self-adjoint strongly monotone linear map U inducing the inner product
/// `<x, y>_U = <Ux, y>`, with cached dense assembly and factorization.
#[derive(Debug)]
pub struct MetricOperator {
    repr: MetricRepr,
    layout: Layout,
    /// Certified lower bound on the eigenvalues of U.
    rho: f64,
    /// Certified upper bound on ||U||.
    opnorm: f64,
    dense: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl MetricOperator {
    /// Build with a full eigendecomposition certificate: `rho` is set to the
    /// smallest eigenvalue, `opnorm` to the largest.
    pub fn certified(repr: MetricRepr, layout: Layout) -> Result<Self> {
        let dense = repr.assemble(&layout);
        let sym_err = (&dense - dense.transpose()).abs().max();
        if sym_err > 1e-10 * dense.abs().max().max(1.0) {
            return Err(SplitError::MetricIntegrity(format!(
                "assembly not self-adjoint (max asymmetry {sym_err:.3e})"
            )));
        }
        let eig = symmetrize(&dense).symmetric_eigen();
        let rho = eig.eigenvalues.min();
        let opnorm = eig.eigenvalues.max();
        if rho <= 0.0 {
            return Err(SplitError::MetricIntegrity(format!(
                "not strongly monotone: min eigenvalue {rho:.3e}"
            )));
        }
        Self::with_certificates(repr, layout, rho, opnorm)
    }

    /// Build with externally derived certificates (e.g. a metric-class lower
    /// bound). The Cholesky factorization still guards positive definiteness.
    pub fn with_certificates(
        repr: MetricRepr,
        layout: Layout,
        rho: f64,
        opnorm: f64,
    ) -> Result<Self> {
        if rho <= 0.0 {
            return Err(SplitError::MetricIntegrity(format!(
                "certificate rho = {rho:.3e} must be positive"
            )));
        }
        let dense = repr.assemble(&layout);
        let chol = Cholesky::new(symmetrize(&dense)).ok_or_else(|| {
            SplitError::MetricIntegrity("dense assembly is not positive definite".into())
        })?;
        Ok(MetricOperator {
            repr,
            layout,
            rho,
            opnorm,
            dense,
            chol,
        })
    }

    pub fn identity(layout: Layout) -> Self {
        Self::scaled_identity(1.0, layout)
    }

    pub fn scaled_identity(c: f64, layout: Layout) -> Self {
        MetricOperator::certified(MetricRepr::ScaledIdentity(c), layout)
            .expect("scaled identity with c > 0 is SPD")
    }

    pub fn repr(&self) -> &MetricRepr {
        &self.repr
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn opnorm(&self) -> f64 {
        self.opnorm
    }

    pub fn dense(&self) -> &DMatrix<f64> {
        &self.dense
    }

    pub fn apply(&self, p: &ProductPoint) -> ProductPoint {
        self.repr.apply(p)
    }

    pub fn apply_inverse(&self, p: &ProductPoint) -> ProductPoint {
        let flat = p.flatten();
        let solved = self.chol.solve(&flat);
        ProductPoint::unflatten(&self.layout, &solved)
    }

    pub fn block_diagonal_parts(&self) -> Option<Vec<BlockMetric>> {
        self.repr.block_diagonal_parts(&self.layout)
    }
}

/// `<a, b>_U = <Ua, b>`.
pub fn inner_u(u: &MetricOperator, a: &ProductPoint, b: &ProductPoint) -> Result<f64> {
    u.layout().check_point(a)?;
    u.layout().check_point(b)?;
    Ok(u.apply(a).dot(b))
}

/// `||a||_U = sqrt(<Ua, a>)`.
pub fn norm_u(u: &MetricOperator, a: &ProductPoint) -> Result<f64> {
    let q = inner_u(u, a, a)?;
    if q < -1e-12 * a.norm_sq().max(1.0) {
        return Err(SplitError::MetricIntegrity(format!(
            "negative quadratic form {q:.3e}; SPD certificate is broken"
        )));
    }
    Ok(q.max(0.0).sqrt())
}

/// True iff `A - B` has min eigenvalue >= -slack on the dense assembly.
pub fn loewner_dominates(a: &MetricOperator, b: &MetricOperator, slack: f64) -> bool {
    assert_eq!(
        a.layout(),
        b.layout(),
        "Loewner comparison needs matching layouts"
    );
    let diff = symmetrize(&(a.dense() - b.dense()));
    diff.symmetric_eigen().eigenvalues.min() >= -slack
}

/// Smallest eigenvalue of the dense difference `A - B`.
pub fn min_eig_difference(a: &MetricOperator, b: &MetricOperator) -> f64 {
    let diff = symmetrize(&(a.dense() - b.dense()));
    diff.symmetric_eigen().eigenvalues.min()
}

/// Tightest eta >= 0 such that (1 + eta) A >= B, via the generalized
/// eigenproblem (B - A) v = eta A v.
pub fn tightest_eta(a: &MetricOperator, b: &MetricOperator) -> f64 {
    let l = a.chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .expect("Cholesky factor is invertible");
    let diff = symmetrize(&(b.dense() - a.dense()));
    let reduced = symmetrize(&(&linv * diff * linv.transpose()));
    reduced.symmetric_eigen().eigenvalues.max().max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn pt(blocks: Vec<DVector<f64>>) -> ProductPoint {
        ProductPoint::new(blocks)
    }

    #[test]
    fn inner_identity_orthogonal() {
        let layout = Layout::new(vec![2]);
        let u = MetricOperator::identity(layout);
        let a = pt(vec![dvector![1.0, 0.0]]);
        let b = pt(vec![dvector![0.0, 1.0]]);
        assert_eq!(inner_u(&u, &a, &b).unwrap(), 0.0);
    }

    #[test]
    fn inner_diagonal() {
        let layout = Layout::new(vec![2]);
        let u = MetricOperator::certified(
            MetricRepr::BlockDiagonal(vec![BlockMetric::Diagonal(dvector![2.0, 3.0])]),
            layout,
        )
        .unwrap();
        let a = pt(vec![dvector![1.0, 1.0]]);
        assert_eq!(inner_u(&u, &a, &a).unwrap(), 5.0);
    }

    #[test]
    fn inner_block_diagonal() {
        // U = blkdiag(2 I_2, 3 I_1), a = (1,1 | 2), b = (1,0 | 1) -> 2 + 0 + 6 = 8,
        // cross-checked against the dense assembly.
        let layout = Layout::new(vec![2, 1]);
        let u = MetricOperator::certified(
            MetricRepr::BlockDiagonal(vec![
                BlockMetric::ScaledIdentity(2.0),
                BlockMetric::ScaledIdentity(3.0),
            ]),
            layout,
        )
        .unwrap();
        let a = pt(vec![dvector![1.0, 1.0], dvector![2.0]]);
        let b = pt(vec![dvector![1.0, 0.0], dvector![1.0]]);
        let v = inner_u(&u, &a, &b).unwrap();
        assert!((v - 8.0).abs() < 1e-14);
        let dense_val = (u.dense() * a.flatten()).dot(&b.flatten());
        assert!((v - dense_val).abs() < 1e-12);
    }

    #[test]
    fn norm_examples() {
        let layout = Layout::new(vec![2]);
        let u = MetricOperator::identity(layout.clone());
        let a = pt(vec![dvector![3.0, 4.0]]);
        assert!((norm_u(&u, &a).unwrap() - 5.0).abs() < 1e-14);
        assert_eq!(norm_u(&u, &ProductPoint::zeros(&layout)).unwrap(), 0.0);

        let l1 = Layout::new(vec![1]);
        let u4 = MetricOperator::certified(
            MetricRepr::BlockDiagonal(vec![BlockMetric::ScaledIdentity(4.0)]),
            l1,
        )
        .unwrap();
        let s = pt(vec![dvector![2.0]]);
        assert!((norm_u(&u4, &s).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn norm_lower_bound_by_rho() {
        let layout = Layout::new(vec![3]);
        let m = dmatrix![4.0, 1.0, 0.0; 1.0, 3.0, 0.5; 0.0, 0.5, 2.0];
        let u = MetricOperator::certified(
            MetricRepr::BlockDiagonal(vec![BlockMetric::Dense(m)]),
            layout,
        )
        .unwrap();
        let a = pt(vec![dvector![1.0, -2.0, 0.5]]);
        assert!(norm_u(&u, &a).unwrap() >= u.rho().sqrt() * a.norm() - 1e-12);
    }

    #[test]
    fn loewner_ordering() {
        let layout = Layout::new(vec![2]);
        let two_i = MetricOperator::scaled_identity(2.0, layout.clone());
        let one_i = MetricOperator::scaled_identity(1.0, layout.clone());
        assert!(loewner_dominates(&two_i, &one_i, 0.0));
        assert!(!loewner_dominates(&one_i, &two_i, 0.0));

        let a = MetricOperator::certified(
            MetricRepr::BlockDiagonal(vec![BlockMetric::Diagonal(dvector![1.0, 3.0])]),
            layout.clone(),
        )
        .unwrap();
        let b = MetricOperator::certified(
            MetricRepr::BlockDiagonal(vec![BlockMetric::Diagonal(dvector![2.0, 1.0])]),
            layout,
        )
        .unwrap();
        assert!(!loewner_dominates(&a, &b, 0.0));
        assert!((min_eig_difference(&a, &b) - (-1.0)).abs() < 1e-12);
    }

    #[test]
    fn inverse_roundtrip() {
        let layout = Layout::new(vec![2, 1]);
        let b = Arc::new(
            BlockLinearMap::new(vec![dmatrix![0.4, 0.1; -0.2, 0.3]]).unwrap(),
        );
        // 2x2-within-3x3 class-1 coupling keeps this SPD
        let u = MetricOperator::certified(
            MetricRepr::Class1Level1 {
                v0: BlockMetric::ScaledIdentity(1.5),
                vs: vec![BlockMetric::ScaledIdentity(2.0)],
                w: 1.0,
                b,
            },
            Layout::new(vec![2, 2]),
        )
        .unwrap();
        let _ = layout;
        let p = pt(vec![dvector![1.0, -1.0], dvector![0.5, 2.0]]);
        let back = u.apply_inverse(&u.apply(&p));
        let rel = back.sub(&p).norm() / p.norm();
        assert!(rel < 1e-8, "relative roundtrip error {rel:.3e}");
    }

    #[test]
    fn class1_apply_matches_dense() {
        let b = Arc::new(
            BlockLinearMap::new(vec![dmatrix![0.3, -0.1; 0.2, 0.05], dmatrix![0.1, 0.4]]).unwrap(),
        );
        let layout = Layout::new(vec![2, 2, 1]);
        let u = MetricOperator::certified(
            MetricRepr::Class1Level1 {
                v0: BlockMetric::ScaledIdentity(2.0),
                vs: vec![
                    BlockMetric::Diagonal(dvector![1.5, 2.5]),
                    BlockMetric::ScaledIdentity(1.0),
                ],
                w: 0.8,
                b,
            },
            layout.clone(),
        )
        .unwrap();
        let p = pt(vec![dvector![1.0, 2.0], dvector![-0.5, 0.25], dvector![3.0]]);
        let via_struct = u.apply(&p).flatten();
        let via_dense = u.dense() * p.flatten();
        assert!((via_struct - via_dense).norm() < 1e-12);
    }

    #[test]
    fn class2_apply_matches_dense() {
        let b = Arc::new(BlockLinearMap::new(vec![dmatrix![0.5, 0.2; -0.1, 0.3]]).unwrap());
        let layout = Layout::new(vec![2, 2]);
        let u = MetricOperator::certified(
            MetricRepr::Class2Level1 {
                v0: BlockMetric::ScaledIdentity(1.0),
                vs: vec![BlockMetric::ScaledIdentity(1.0)],
                w: 1.0,
                b,
            },
            layout.clone(),
        )
        .unwrap();
        let p = pt(vec![dvector![0.7, -1.2], dvector![2.0, 0.5]]);
        let via_struct = u.apply(&p).flatten();
        let via_dense = u.dense() * p.flatten();
        assert!((via_struct - via_dense).norm() < 1e-12);
    }

    #[test]
    fn class1_level2_apply_matches_dense() {
        let b = Arc::new(BlockLinearMap::new(vec![dmatrix![0.3, 0.1]]).unwrap());
        let layout = Layout::new(vec![2, 1, 1]);
        let u = MetricOperator::certified(
            MetricRepr::Class1Level2 {
                v0: BlockMetric::ScaledIdentity(2.0),
                vs: vec![BlockMetric::ScaledIdentity(1.5)],
                ws: vec![BlockMetric::ScaledIdentity(1.8)],
                w: 0.7,
                b,
            },
            layout.clone(),
        )
        .unwrap();
        let p = pt(vec![dvector![1.0, -0.5], dvector![0.8], dvector![-0.3]]);
        let via_struct = u.apply(&p).flatten();
        let via_dense = u.dense() * p.flatten();
        assert!((via_struct - via_dense).norm() < 1e-12);
    }

    #[test]
    fn metric_properties_inverse_ordering() {
        // alpha I >= U >= beta I implies (1/beta) I >= U^{-1} >= (1/alpha) I
        let layout = Layout::new(vec![3]);
        let m = dmatrix![3.0, 0.4, 0.0; 0.4, 2.0, -0.3; 0.0, -0.3, 1.5];
        let u = MetricOperator::certified(
            MetricRepr::BlockDiagonal(vec![BlockMetric::Dense(m.clone())]),
            layout,
        )
        .unwrap();
        let alpha = u.opnorm();
        let beta = u.rho();
        let inv = Cholesky::new(m).unwrap().solve(&DMatrix::identity(3, 3));
        let eig = symmetrize(&inv).symmetric_eigen();
        let inv_min = eig.eigenvalues.min();
        let inv_max = eig.eigenvalues.max();
        assert!(inv_max <= 1.0 / beta + 1e-8);
        assert!(inv_min >= 1.0 / alpha - 1e-8);
    }
}
