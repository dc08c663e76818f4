use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Result, SplitError};
use crate::ops::prox::SeparableFunction;
use crate::ops::skew::{SkewForm, SkewOperator};
use crate::space::metric::{BlockMetric, MetricOperator, MetricRepr};
use crate::space::point::ProductPoint;

/// Evaluation route for z+ = J_{gamma U^{-1}(dPhi + s S)}(u).
#[derive(Debug)]
enum Route {
    /// No skew contribution and a block-diagonal metric: blockwise prox.
    SeparableProx { parts: Vec<BlockMetric> },
    /// First-class level-1 metric whose coupling w B matches the skew scaling:
    /// primal prox under V_0, then dual proxes at the extrapolated point.
    /// Requires gamma = 1 (the stepsize is folded into the metric scales).
    Class1TwoStep {
        v0: BlockMetric,
        vs: Vec<BlockMetric>,
        w: f64,
    },
    /// Level-2 variant with the auxiliary v-blocks.
    Class1ThreeStep {
        v0: BlockMetric,
        vs: Vec<BlockMetric>,
        ws: Vec<BlockMetric>,
        w: f64,
    },
    /// Second-class level-1 metric with matching skew scaling and phi vanishing
    /// on the primal block: dual proxes first, then an explicit primal update.
    Class2TwoStep {
        v0: BlockMetric,
        vs: Vec<BlockMetric>,
        w: f64,
    },
    /// dPhi affine (zero/quadratic blocks): one dense linear solve.
    AffineSolve {
        lu: LU<f64, Dyn, Dyn>,
        gamma_q_shift: DVector<f64>,
    },
}

/// A resolvent handle J_{gamma U^{-1}(dPhi + s S)} with the evaluation route
/// fixed at build time. Building fails with a capability error when no exact
/// route exists for the (function, metric, skew) pairing.
#[derive(Debug)]
pub struct ResolventOp {
    phi: SeparableFunction,
    skew: Arc<SkewOperator>,
    skew_scale: f64,
    gamma: f64,
    metric: Arc<MetricOperator>,
    route: Route,
}

impl ResolventOp {
    pub fn plan(
        phi: &SeparableFunction,
        skew: &Arc<SkewOperator>,
        skew_scale: f64,
        gamma: f64,
        metric: &Arc<MetricOperator>,
    ) -> Result<Self> {
        if gamma <= 0.0 {
            return Err(SplitError::Config(format!(
                "resolvent stepsize gamma = {gamma} must be positive"
            )));
        }
        let effective_scale = if skew.is_zero() { 0.0 } else { skew_scale };
        let route = Self::pick_route(phi, skew, effective_scale, gamma, metric)?;
        Ok(ResolventOp {
            phi: phi.clone(),
            skew: skew.clone(),
            skew_scale: effective_scale,
            gamma,
            metric: metric.clone(),
            route,
        })
    }

    fn pick_route(
        phi: &SeparableFunction,
        skew: &Arc<SkewOperator>,
        scale: f64,
        gamma: f64,
        metric: &Arc<MetricOperator>,
    ) -> Result<Route> {
        if scale == 0.0 {
            if let Some(parts) = metric.block_diagonal_parts() {
                if phi.supports_prox(&parts).is_ok() {
                    return Ok(Route::SeparableProx { parts });
                }
            }
        } else {
            match metric.repr() {
                MetricRepr::Class1Level1 { v0, vs, w, b }
                    if *w == scale
                        && gamma == 1.0
                        && skew.form() == SkewForm::Level1
                        && Arc::ptr_eq(b, skew.b()) =>
                {
                    let parts = class1_parts(v0, vs, None);
                    if phi.supports_prox(&parts).is_ok() {
                        return Ok(Route::Class1TwoStep {
                            v0: v0.clone(),
                            vs: vs.clone(),
                            w: *w,
                        });
                    }
                }
                MetricRepr::Class1Level2 { v0, vs, ws, w, b }
                    if *w == scale
                        && gamma == 1.0
                        && skew.form() == SkewForm::Level2
                        && Arc::ptr_eq(b, skew.b()) =>
                {
                    let parts = class1_parts(v0, vs, Some(ws));
                    if phi.supports_prox(&parts).is_ok() {
                        return Ok(Route::Class1ThreeStep {
                            v0: v0.clone(),
                            vs: vs.clone(),
                            ws: ws.clone(),
                            w: *w,
                        });
                    }
                }
                MetricRepr::Class2Level1 { v0, vs, w, b }
                    if *w == scale
                        && gamma == 1.0
                        && skew.form() == SkewForm::Level1
                        && Arc::ptr_eq(b, skew.b())
                        && phi.blocks[0].is_zero() =>
                {
                    let parts = class1_parts(v0, vs, None);
                    if phi.supports_prox(&parts).is_ok() {
                        return Ok(Route::Class2TwoStep {
                            v0: v0.clone(),
                            vs: vs.clone(),
                            w: *w,
                        });
                    }
                }
                _ => {}
            }
        }
        // fall back to a dense solve when the subdifferential is affine
        if let Some((q, qv)) = affine_subgradient(phi, metric.layout().dims()) {
            let total = metric.layout().total_dim();
            let mut m = metric.dense().clone() + q * gamma;
            if scale != 0.0 {
                m += skew.assemble() * (gamma * scale);
            }
            let lu = LU::new(m.clone());
            if lu.determinant().abs() <= 1e-300 {
                return Err(SplitError::MetricIntegrity(
                    "affine resolvent system is singular".into(),
                ));
            }
            let _ = total;
            return Ok(Route::AffineSolve {
                lu,
                gamma_q_shift: qv * gamma,
            });
        }
        Err(SplitError::Capability(format!(
            "no resolvent route for (phi = [{}], skew scale = {scale}, gamma = {gamma}, metric = {})",
            phi.blocks
                .iter()
                .map(|f| f.kind_name())
                .collect::<Vec<_>>()
                .join(", "),
            metric_kind_name(metric.repr()),
        )))
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn metric(&self) -> &Arc<MetricOperator> {
        &self.metric
    }

    pub fn skew_scale(&self) -> f64 {
        self.skew_scale
    }

    /// Evaluate z+ = J_{gamma U^{-1}(dPhi + s S)}(u).
    pub fn eval(&self, u: &ProductPoint) -> Result<ProductPoint> {
        let out = match &self.route {
            Route::SeparableProx { parts } => self.phi.prox(self.gamma, parts, u)?,
            Route::Class1TwoStep { v0, vs, w } => {
                let b = self.skew.b();
                let n = b.n_duals();
                let x = u.block(0);
                let ys: Vec<&DVector<f64>> = (0..n).map(|i| u.block(1 + i)).collect();
                let xp = self.phi.blocks[0].prox(
                    1.0,
                    v0,
                    &(x - v0.apply_inv(&(b.adjoint_apply(&ys) * *w))),
                )?;
                let extr = &xp * 2.0 - x;
                let mut blocks = Vec::with_capacity(1 + n);
                blocks.push(xp);
                for i in 0..n {
                    let shift = vs[i].apply_inv(&(b.apply_block(i, &extr) * *w));
                    blocks.push(self.phi.blocks[1 + i].prox(1.0, &vs[i], &(ys[i] + shift))?);
                }
                ProductPoint::new(blocks)
            }
            Route::Class1ThreeStep { v0, vs, ws, w } => {
                let b = self.skew.b();
                let n = b.n_duals();
                let x = u.block(0);
                let ys: Vec<&DVector<f64>> = (0..n).map(|i| u.block(1 + i)).collect();
                let vvs: Vec<&DVector<f64>> = (0..n).map(|i| u.block(1 + n + i)).collect();
                let xp = self.phi.blocks[0].prox(
                    1.0,
                    v0,
                    &(x - v0.apply_inv(&(b.adjoint_apply(&ys) * *w))),
                )?;
                let extr = &xp * 2.0 - x;
                let mut vps = Vec::with_capacity(n);
                for i in 0..n {
                    let shift = ws[i].apply_inv(&(ys[i] * *w));
                    vps.push(self.phi.blocks[1 + n + i].prox(1.0, &ws[i], &(vvs[i] + shift))?);
                }
                let mut yps = Vec::with_capacity(n);
                for i in 0..n {
                    let vext = &vps[i] * 2.0 - vvs[i];
                    let shift = vs[i].apply_inv(&((b.apply_block(i, &extr) - vext) * *w));
                    yps.push(self.phi.blocks[1 + i].prox(1.0, &vs[i], &(ys[i] + shift))?);
                }
                let mut blocks = Vec::with_capacity(1 + 2 * n);
                blocks.push(xp);
                blocks.extend(yps);
                blocks.extend(vps);
                ProductPoint::new(blocks)
            }
            Route::Class2TwoStep { v0, vs, w } => {
                let b = self.skew.b();
                let n = b.n_duals();
                let x = u.block(0);
                let ys: Vec<&DVector<f64>> = (0..n).map(|i| u.block(1 + i)).collect();
                let forward = x - v0.apply_inv(&(b.adjoint_apply(&ys) * *w));
                let mut yps = Vec::with_capacity(n);
                for i in 0..n {
                    let shift = vs[i].apply_inv(&(b.apply_block(i, &forward) * *w));
                    yps.push(self.phi.blocks[1 + i].prox(1.0, &vs[i], &(ys[i] + shift))?);
                }
                let yrefs: Vec<&DVector<f64>> = yps.iter().collect();
                let xp = x - v0.apply_inv(&(b.adjoint_apply(&yrefs) * *w));
                let mut blocks = Vec::with_capacity(1 + n);
                blocks.push(xp);
                blocks.extend(yps);
                ProductPoint::new(blocks)
            }
            Route::AffineSolve { lu, gamma_q_shift } => {
                let rhs = self.metric.apply(u).flatten() - gamma_q_shift;
                let solved = lu.solve(&rhs).ok_or_else(|| {
                    SplitError::MetricIntegrity("affine resolvent solve failed".into())
                })?;
                ProductPoint::unflatten(self.metric.layout(), &solved)
            }
        };
        if !out.is_finite() {
            return Err(SplitError::NonFinite("resolvent output".into()));
        }
        Ok(out)
    }

    /// Reflection 2 J(u) - u of this resolvent.
    pub fn reflect(&self, u: &ProductPoint) -> Result<ProductPoint> {
        Ok(self.eval(u)?.scale(2.0).sub(u))
    }

    /// Residual of the implicit optimality relation
    /// U(u - z+) - gamma*s*S z+ in gamma * dPhi(z+), reported as the distance
    /// between the reconstructed subgradient and what the value oracle admits
    /// via the subgradient inequality at `competitors`.
    pub fn subgradient_inequality_margin(
        &self,
        u: &ProductPoint,
        zp: &ProductPoint,
        competitors: &[ProductPoint],
    ) -> f64 {
        let mut resid = self.metric.apply(&u.sub(zp));
        if self.skew_scale != 0.0 {
            resid = resid.axpy(-self.gamma * self.skew_scale, &self.skew.apply(zp));
        }
        let sub = resid.scale(1.0 / self.gamma);
        let fz = self.phi.value(zp);
        let mut worst = f64::INFINITY;
        for y in competitors {
            let fy = self.phi.value(y);
            if fy == f64::INFINITY {
                continue;
            }
            let margin = fy - fz - y.sub(zp).dot(&sub);
            worst = worst.min(margin);
        }
        worst
    }
}

fn class1_parts(v0: &BlockMetric, vs: &[BlockMetric], ws: Option<&Vec<BlockMetric>>) -> Vec<BlockMetric> {
    let mut parts = vec![v0.clone()];
    parts.extend(vs.iter().cloned());
    if let Some(ws) = ws {
        parts.extend(ws.iter().cloned());
    }
    parts
}

fn metric_kind_name(repr: &MetricRepr) -> &'static str {
    match repr {
        MetricRepr::ScaledIdentity(_) => "scaled-identity",
        MetricRepr::BlockDiagonal(_) => "block-diagonal",
        MetricRepr::Class1Level1 { .. } => "class1-level1",
        MetricRepr::Class1Level2 { .. } => "class1-level2",
        MetricRepr::Class2Level1 { .. } => "class2-level1",
    }
}

/// dPhi(z) = Q z + q for affine-subgradient catalogs (zero and quadratic
/// kinds); returns the assembled (Q, q) or None.
fn affine_subgradient(
    phi: &SeparableFunction,
    dims: &[usize],
) -> Option<(DMatrix<f64>, DVector<f64>)> {
    use crate::ops::prox::ProxFn;
    let total: usize = dims.iter().sum();
    let mut q = DMatrix::zeros(total, total);
    let mut qv = DVector::zeros(total);
    let mut off = 0;
    for (f, &d) in phi.blocks.iter().zip(dims) {
        match f {
            ProxFn::Zero => {}
            ProxFn::Quadratic { weight, center, .. } => {
                for i in 0..d {
                    q[(off + i, off + i)] = *weight;
                }
                qv.rows_mut(off, d).copy_from(&(center * -*weight));
            }
            ProxFn::LeastSquares { a, b } => {
                let gram = a.transpose() * a;
                q.view_mut((off, off), (d, d)).copy_from(&gram);
                qv.rows_mut(off, d).copy_from(&(a.transpose() * b * -1.0));
            }
            _ => return None,
        }
        off += d;
    }
    Some((q, qv))
}

/// Resolvent of a pure level-1 skew operator under the block-diagonal metric
/// U = diag(V_0^{-1}, V^{-1}), by the two displayed inversion formulas
/// x+ = (I + g^2 V_0 B^* V B)^{-1} (x - g V_0 B^* y),
/// y+ = (I + g^2 V B V_0 B^*)^{-1} (y + g V B x).
pub fn skew_resolvent(
    skew: &SkewOperator,
    gamma: f64,
    v0: &BlockMetric,
    vs: &[BlockMetric],
    z: &ProductPoint,
) -> Result<ProductPoint> {
    if skew.form() != SkewForm::Level1 {
        return Err(SplitError::Capability(
            "skew_resolvent applies to the level-1 form only".into(),
        ));
    }
    if gamma < 0.0 {
        return Err(SplitError::Config("gamma must be nonnegative".into()));
    }
    let b = skew.b();
    let d0 = b.primal_dim();
    let dual_total: usize = b.dual_dims().iter().sum();
    let bs = b.stacked();
    let v0d = v0.dense(d0);
    let mut vd = DMatrix::zeros(dual_total, dual_total);
    let mut off = 0;
    for (m, d) in vs.iter().zip(b.dual_dims()) {
        vd.view_mut((off, off), (d, d)).copy_from(&m.dense(d));
        off += d;
    }
    let x = z.block(0);
    let mut ystack = DVector::zeros(dual_total);
    off = 0;
    for i in 0..b.n_duals() {
        ystack.rows_mut(off, b.dual_dims()[i]).copy_from(z.block(1 + i));
        off += b.dual_dims()[i];
    }
    let g2 = gamma * gamma;
    let mx = DMatrix::identity(d0, d0) + &v0d * bs.transpose() * &vd * &bs * g2;
    let my = DMatrix::identity(dual_total, dual_total) + &vd * &bs * &v0d * bs.transpose() * g2;
    let xp = LU::new(mx)
        .solve(&(x - &v0d * bs.transpose() * &ystack * gamma))
        .ok_or_else(|| SplitError::MetricIntegrity("skew resolvent x-system singular".into()))?;
    let yp = LU::new(my)
        .solve(&(&ystack + &vd * &bs * x * gamma))
        .ok_or_else(|| SplitError::MetricIntegrity("skew resolvent y-system singular".into()))?;
    let mut blocks = vec![xp];
    off = 0;
    for &d in &b.dual_dims() {
        blocks.push(yp.rows(off, d).into_owned());
        off += d;
    }
    Ok(ProductPoint::new(blocks))
}
