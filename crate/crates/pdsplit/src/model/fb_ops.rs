use nalgebra::DVector;

use crate::error::{Result, SplitError};
use crate::model::metric_class::{assemble_dense, MetricClass, MetricClassConfig};
use crate::model::problem::{Level, SplitProblem};
use crate::space::point::ProductPoint;

/// One fused forward-backward evaluation under the first metric class:
/// z+ = J_{U_w^{-1}(d bold_f + w S)}(z - U_w^{-1} grad bold_g(z)), computed by
/// the prox listing (primal prox under V_0, then the dual proxes at the
/// extrapolated primal point; level 2 inserts the auxiliary prox updates).
pub fn fb_class1(cfg: &MetricClassConfig, split: &SplitProblem, z: &ProductPoint) -> Result<ProductPoint> {
    if cfg.class != MetricClass::One {
        return Err(SplitError::Config("fb_class1 needs a class-1 configuration".into()));
    }
    let expected_level = match split.level {
        Level::One => 1,
        Level::Two => 2,
    };
    if cfg.level() != expected_level {
        return Err(SplitError::Config(format!(
            "metric level {} does not match split level {}",
            cfg.level(),
            expected_level
        )));
    }
    let b = split.skew.b();
    let n = b.n_duals();
    let w = cfg.w;
    let x = z.block(0);
    let ys: Vec<&DVector<f64>> = (0..n).map(|i| z.block(1 + i)).collect();

    let grad_g_x = split.bold_g.blocks[0]
        .grad(x)
        .ok_or_else(|| SplitError::Config("fb_class1 needs differentiable g".into()))?;
    let xp = split.bold_f.blocks[0].prox(
        1.0,
        &cfg.v0,
        &(x - cfg.v0.apply_inv(&(b.adjoint_apply(&ys) * w + grad_g_x))),
    )?;
    let extr = &xp * 2.0 - x;

    match split.level {
        Level::One => {
            let mut blocks = Vec::with_capacity(1 + n);
            blocks.push(xp.clone());
            for i in 0..n {
                let grad_l = split.bold_g.blocks[1 + i].grad(ys[i]).ok_or_else(|| {
                    SplitError::Config(format!("fb_class1 level 1 needs differentiable l_{}^*", i + 1))
                })?;
                let shift = cfg.vs[i].apply_inv(&(b.apply_block(i, &extr) * w - grad_l));
                blocks.push(split.bold_f.blocks[1 + i].prox(1.0, &cfg.vs[i], &(ys[i] + shift))?);
            }
            Ok(ProductPoint::new(blocks))
        }
        Level::Two => {
            let ws = cfg
                .ws
                .as_ref()
                .ok_or_else(|| SplitError::Config("level-2 listing needs W blocks".into()))?;
            let vvs: Vec<&DVector<f64>> = (0..n).map(|i| z.block(1 + n + i)).collect();
            let mut vps = Vec::with_capacity(n);
            for i in 0..n {
                let shift = ws[i].apply_inv(&(ys[i] * w));
                vps.push(split.bold_f.blocks[1 + n + i].prox(1.0, &ws[i], &(vvs[i] + shift))?);
            }
            let mut yps = Vec::with_capacity(n);
            for i in 0..n {
                let vext = &vps[i] * 2.0 - vvs[i];
                let shift = cfg.vs[i].apply_inv(&((b.apply_block(i, &extr) - vext) * w));
                yps.push(split.bold_f.blocks[1 + i].prox(1.0, &cfg.vs[i], &(ys[i] + shift))?);
            }
            let mut blocks = Vec::with_capacity(1 + 2 * n);
            blocks.push(xp);
            blocks.extend(yps);
            blocks.extend(vps);
            Ok(ProductPoint::new(blocks))
        }
    }
}

/// One fused forward-backward evaluation under the second metric class
/// (requires f to vanish): dual proxes at the forward-stepped primal point,
/// then the explicit primal update.
pub fn fb_class2(cfg: &MetricClassConfig, split: &SplitProblem, z: &ProductPoint) -> Result<ProductPoint> {
    if cfg.class != MetricClass::Two {
        return Err(SplitError::Config("fb_class2 needs a class-2 configuration".into()));
    }
    if split.level != Level::One {
        return Err(SplitError::Config("the class-2 listing is level-1 only".into()));
    }
    if !split.bold_f.blocks[0].is_zero() {
        return Err(SplitError::Capability(
            "the class-2 listing requires f to vanish on the primal block".into(),
        ));
    }
    let b = split.skew.b();
    let n = b.n_duals();
    let w = cfg.w;
    let x = z.block(0);
    let ys: Vec<&DVector<f64>> = (0..n).map(|i| z.block(1 + i)).collect();
    let grad_g_x = split.bold_g.blocks[0]
        .grad(x)
        .ok_or_else(|| SplitError::Config("fb_class2 needs differentiable g".into()))?;
    let forward = x - cfg.v0.apply_inv(&(grad_g_x.clone() + b.adjoint_apply(&ys) * w));
    let mut yps = Vec::with_capacity(n);
    for i in 0..n {
        let grad_l = split.bold_g.blocks[1 + i].grad(ys[i]).ok_or_else(|| {
            SplitError::Config(format!("fb_class2 needs differentiable l_{}^*", i + 1))
        })?;
        let shift = cfg.vs[i].apply_inv(&(b.apply_block(i, &forward) * w - grad_l));
        yps.push(split.bold_f.blocks[1 + i].prox(1.0, &cfg.vs[i], &(ys[i] + shift))?);
    }
    let yrefs: Vec<&DVector<f64>> = yps.iter().collect();
    let xp = x - cfg.v0.apply_inv(&(grad_g_x + b.adjoint_apply(&yrefs) * w));
    let mut blocks = Vec::with_capacity(1 + n);
    blocks.push(xp);
    blocks.extend(yps);
    Ok(ProductPoint::new(blocks))
}

/// Worst subgradient-inequality margin of the implicit relation
/// U_w(z - z+) - grad bold_g(z) - w S z+ in d bold_f(z+) over `competitors`.
/// Works from the dense assembly, so it also applies to boundary
/// configurations where U_w is only positive semidefinite.
pub fn fb_implicit_margin(
    cfg: &MetricClassConfig,
    split: &SplitProblem,
    z: &ProductPoint,
    zp: &ProductPoint,
    competitors: &[ProductPoint],
) -> f64 {
    let u = assemble_dense(cfg, split.skew.b(), &split.layout);
    let diff = z.sub(zp).flatten();
    let mut sub_flat = &u * diff;
    let grad_g = split
        .bold_g
        .grad(z)
        .expect("implicit relation needs differentiable bold g");
    sub_flat -= grad_g.flatten();
    sub_flat -= split.skew.apply(zp).flatten() * cfg.w;
    let sub = ProductPoint::unflatten(&split.layout, &sub_flat);
    let fz = split.bold_f.value(zp);
    let mut worst = f64::INFINITY;
    for y in competitors {
        let fy = split.bold_f.value(y);
        if fy == f64::INFINITY {
            continue;
        }
        worst = worst.min(fy - fz - y.sub(zp).dot(&sub));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::problem::{DualPair, ModelProblem};
    use crate::ops::linmap::BlockLinearMap;
    use crate::ops::prox::ProxFn;
    use crate::space::metric::BlockMetric;
    use nalgebra::{dmatrix, dvector, DMatrix, LU};
    use std::sync::Arc;

    fn scalar_split() -> SplitProblem {
        // n = 1 scalar: f = 0, g = 0, h_1^* = (1/2)(.)^2, l_1^* = 0
        // realized by h_1 = (1/2)(.)^2 (self-conjugate) and l_1 = iota_{0}
        let mp = ModelProblem {
            f: ProxFn::Zero,
            g: ProxFn::Zero,
            pairs: vec![DualPair::plain(ProxFn::quadratic(1.0, dvector![0.0]), 1)],
            b: Arc::new(BlockLinearMap::new(vec![dmatrix![1.0]]).unwrap()),
        };
        mp.build_split(Level::One).unwrap()
    }

    #[test]
    fn fb_class1_zero_functions_w0_is_identity() {
        let mp = ModelProblem {
            f: ProxFn::Zero,
            g: ProxFn::Zero,
            pairs: vec![DualPair {
                h: ProxFn::indicator_zero(1), // h* = 0
                l: ProxFn::indicator_zero(1),
            }],
            b: Arc::new(BlockLinearMap::new(vec![dmatrix![1.0]]).unwrap()),
        };
        let split = mp.build_split(Level::One).unwrap();
        let cfg = MetricClassConfig::class1_uniform(0.0, 1.0, 1.0, 1);
        let z = ProductPoint::new(vec![dvector![1.3], dvector![-0.4]]);
        let zp = fb_class1(&cfg, &split, &z).unwrap();
        assert!(zp.sub(&z).norm() < 1e-14);
    }

    #[test]
    fn fb_class1_scalar_hand_trace_and_implicit_solve() {
        // n = 1, f = g = 0, h* = (1/2)(.)^2, l* = 0, V_0 = V_1 = I, w = 1:
        // x+ = x - y; y+ = (x - y)/2. The boundary metric (singular U_1) still
        // satisfies the implicit relation, verified by direct linear solve.
        let split = scalar_split();
        let cfg = MetricClassConfig::class1_uniform(1.0, 1.0, 1.0, 1);
        for (x, y) in [(1.0, 0.0), (0.3, -0.7), (-2.0, 1.5)] {
            let z = ProductPoint::new(vec![dvector![x], dvector![y]]);
            let zp = fb_class1(&cfg, &split, &z).unwrap();
            assert!((zp.block(0)[0] - (x - y)).abs() < 1e-14);
            assert!((zp.block(1)[0] - (x - y) / 2.0).abs() < 1e-14);
            // oracle: solve U_w(z - z+) = dPhi(z+) + w S z+ as a linear system
            // here dPhi(x,y) = (0, y), so (U_w + Q + S) z+ = U_w z
            let u = assemble_dense(&cfg, split.skew.b(), &split.layout);
            let q = DMatrix::from_diagonal(&dvector![0.0, 1.0]);
            let m = &u + q + split.skew.assemble();
            let rhs = &u * z.flatten();
            let direct = LU::new(m).solve(&rhs).unwrap();
            assert!((zp.flatten() - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn fb_class1_fixed_point() {
        // the inclusion 0 in dPhi(z) + wSz for the scalar split: x* = y* = 0
        let split = scalar_split();
        let cfg = MetricClassConfig::class1_uniform(1.0, 1.0, 1.0, 1);
        let z = ProductPoint::new(vec![dvector![0.0], dvector![0.0]]);
        let zp = fb_class1(&cfg, &split, &z).unwrap();
        assert!(zp.norm() < 1e-14);
    }

    #[test]
    fn fb_class1_implicit_margin_on_nonsmooth_instance() {
        let mp = ModelProblem {
            f: ProxFn::L1 { weight: 0.5 },
            g: ProxFn::Zero,
            pairs: vec![DualPair::plain(ProxFn::quadratic(1.0, dvector![1.0, -1.0]), 2)],
            b: Arc::new(BlockLinearMap::new(vec![dmatrix![0.7, 0.2; -0.1, 0.5]]).unwrap()),
        };
        let split = mp.build_split(Level::One).unwrap();
        let cfg = MetricClassConfig::class1_uniform(1.0, 0.8, 0.8, 1);
        for s in 0..6 {
            let z = ProductPoint::new(vec![
                DVector::from_fn(2, |i, _| ((s * 3 + i) as f64 * 0.53).sin() * 2.0),
                DVector::from_fn(2, |i, _| ((s * 5 + i) as f64 * 0.37).cos()),
            ]);
            let zp = fb_class1(&cfg, &split, &z).unwrap();
            let competitors: Vec<ProductPoint> = (0..64)
                .map(|c| {
                    split.bold_f.project_domain(&ProductPoint::new(vec![
                        DVector::from_fn(2, |i, _| ((c * 7 + i + s) as f64 * 0.31).sin() * 2.0),
                        DVector::from_fn(2, |i, _| ((c + i * 2 + s) as f64 * 0.43).cos() * 1.5),
                    ]))
                })
                .collect();
            let margin = fb_implicit_margin(&cfg, &split, &z, &zp, &competitors);
            assert!(margin >= -1e-8, "implicit margin {margin:.3e}");
        }
    }

    #[test]
    fn fb_class2_reduces_to_gradient_step_when_w_zero() {
        let mp = ModelProblem {
            f: ProxFn::Zero,
            g: ProxFn::quadratic(1.0, dvector![2.0, -1.0]),
            pairs: vec![DualPair::plain(ProxFn::quadratic(1.0, dvector![0.0]), 1)],
            b: Arc::new(BlockLinearMap::new(vec![dmatrix![0.4, 0.3]]).unwrap()),
        };
        let split = mp.build_split(Level::One).unwrap();
        let cfg = MetricClassConfig {
            class: MetricClass::Two,
            w: 0.0,
            v0: BlockMetric::ScaledIdentity(2.0),
            vs: vec![BlockMetric::ScaledIdentity(1.0)],
            ws: None,
        };
        let z = ProductPoint::new(vec![dvector![0.0, 0.0], dvector![0.0]]);
        let zp = fb_class2(&cfg, &split, &z).unwrap();
        // x+ = x - V_0^{-1} grad g(x) = 0 - 0.5 * (0 - (2,-1)) = (1, -0.5)
        assert!((zp.block(0)[0] - 1.0).abs() < 1e-14);
        assert!((zp.block(0)[1] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn fb_class2_matches_implicit_solve() {
        // g quadratic, h* quadratic: everything affine, so the implicit
        // relation U_w(z - z+) - grad g(z) = dPhi(z+) + w S z+ has a direct
        // linear-solve oracle.
        let b = Arc::new(BlockLinearMap::new(vec![dmatrix![0.6, -0.2; 0.3, 0.4]]).unwrap());
        let mp = ModelProblem {
            f: ProxFn::Zero,
            g: ProxFn::LeastSquares {
                a: dmatrix![1.0, 0.2; 0.0, 0.8],
                b: dvector![1.0, 0.5],
            },
            pairs: vec![DualPair::plain(ProxFn::quadratic(1.0, dvector![0.3, -0.3]), 2)],
            b: b.clone(),
        };
        let split = mp.build_split(Level::One).unwrap();
        let tau = 0.7;
        let sigma = 0.8;
        let cfg = MetricClassConfig {
            class: MetricClass::Two,
            w: 1.0,
            v0: BlockMetric::ScaledIdentity(1.0 / tau),
            vs: vec![BlockMetric::ScaledIdentity(1.0 / sigma)],
            ws: None,
        };
        let z = ProductPoint::new(vec![dvector![0.5, -1.0], dvector![0.2, 0.9]]);
        let zp = fb_class2(&cfg, &split, &z).unwrap();
        // oracle: (U + Q + wS) z+ = U z - grad g(z) - q, where the dual block
        // of bold f is h*(y) = (1/2)||y||^2 + c.y with c = (0.3, -0.3), so
        // dPhi(x, y) = (0, y + c) and q = (0, c)
        let u = assemble_dense(&cfg, split.skew.b(), &split.layout);
        let q = DMatrix::from_partial_diagonal(4, 4, &[0.0, 0.0, 1.0, 1.0]);
        let qshift = dvector![0.0, 0.0, 0.3, -0.3];
        let m = &u + q + split.skew.assemble() * cfg.w;
        let rhs = &u * z.flatten() - split.bold_g.grad(&z).unwrap().flatten() - qshift;
        let direct = LU::new(m).solve(&rhs).unwrap();
        assert!(
            (zp.flatten() - &direct).norm() < 1e-12,
            "listing vs direct solve: {:?} vs {:?}",
            zp.flatten(),
            direct
        );
    }

    #[test]
    fn fb_class2_requires_vanishing_f() {
        let mp = ModelProblem {
            f: ProxFn::L1 { weight: 1.0 },
            g: ProxFn::quadratic(1.0, dvector![0.0]),
            pairs: vec![DualPair::plain(ProxFn::quadratic(1.0, dvector![0.0]), 1)],
            b: Arc::new(BlockLinearMap::new(vec![dmatrix![1.0]]).unwrap()),
        };
        let split = mp.build_split(Level::One).unwrap();
        let cfg = MetricClassConfig {
            class: MetricClass::Two,
            w: 1.0,
            v0: BlockMetric::ScaledIdentity(2.0),
            vs: vec![BlockMetric::ScaledIdentity(2.0)],
            ws: None,
        };
        let z = ProductPoint::new(vec![dvector![1.0], dvector![0.0]]);
        assert!(fb_class2(&cfg, &split, &z).is_err());
    }
}
