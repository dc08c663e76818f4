//! End-to-end invariant checks: operator contraction properties and the full
//! diagnostic battery on small coupled instances.

use std::sync::Arc;

use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use pdsplit::diag::{
    check_ergodic_bounds, check_fpr_rate, check_fpr_summability, check_fundamental_inequality,
    check_gap_nonnegative, check_key_terms, check_nonergodic_bounds, check_prs_ergodic_distance,
    check_quasi_fejer, fit_rate_slope, BoundContext,
};
use pdsplit::engine::{run, Algorithm, AlgorithmConfig, ValidatedConfig};
use pdsplit::model::{DualPair, Level, MetricClassConfig, ModelProblem, SplitProblem};
use pdsplit::ops::{BlockLinearMap, ProxFn, ResolventOp, SeparableFunction};
use pdsplit::space::{
    inner_u, norm_u, BlockMetric, Layout, MetricOperator, MetricRepr, MetricSequence,
    ProductPoint,
};

fn seeded_vec(dim: usize, seed: u64) -> DVector<f64> {
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    DVector::from_fn(dim, |_, _| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    })
}

fn seeded_point(layout: &Layout, seed: u64) -> ProductPoint {
    ProductPoint::new(
        layout
            .dims()
            .iter()
            .enumerate()
            .map(|(i, &d)| seeded_vec(d, seed.wrapping_add(i as u64 * 7919)))
            .collect(),
    )
}

/// Small data-fitting instance in the form PPA consumes: f carries the
/// regularizer, one dual pair carries the quadratic data term through B = A.
fn cp_form_instance() -> (ModelProblem, SplitProblem) {
    let a = dmatrix![
        0.7, 0.2, -0.1;
        -0.2, 0.8, 0.3;
        0.1, -0.3, 0.9;
        0.4, 0.1, 0.2
    ];
    let b = dvector![1.0, -0.5, 0.25, 0.75];
    let mp = ModelProblem {
        f: ProxFn::L1 { weight: 0.15 },
        g: ProxFn::Zero,
        pairs: vec![DualPair::plain(ProxFn::quadratic(1.0, b), 4)],
        b: Arc::new(BlockLinearMap::new(vec![a]).unwrap()),
    };
    let split = mp.build_split(Level::One).unwrap();
    (mp, split)
}

fn class1_metric(split: &SplitProblem, w: f64, tau: f64, sigma: f64) -> MetricSequence {
    let cfg = MetricClassConfig::class1_uniform(w, tau, sigma, split.n_duals());
    let u = pdsplit::model::build_metric(&cfg, split.skew.b(), &split.layout).unwrap();
    MetricSequence::constant(Arc::new(u))
}

fn reference_z_star(
    split: &SplitProblem,
    make_cfg: impl Fn() -> AlgorithmConfig,
    z0: &ProductPoint,
    budget: usize,
) -> ProductPoint {
    let cfg = ValidatedConfig::validate(split, make_cfg(), budget).unwrap();
    let trace = run(split, &cfg, z0, budget, 1e-14).unwrap();
    trace.z_final
}

fn probes(split: &SplitProblem, z_star: &ProductPoint, count: usize) -> Vec<ProductPoint> {
    let mut out = vec![z_star.clone()];
    for s in 0..count.saturating_sub(1) {
        let raw = z_star.axpy(0.8, &seeded_point(&split.layout, 1000 + s as u64));
        let projected = split
            .bold_g
            .project_domain(&split.bold_f.project_domain(&raw));
        out.push(projected);
    }
    out
}

#[test]
fn ppa_class1_full_battery() {
    let (_, split) = cp_form_instance();
    let make = || {
        AlgorithmConfig::new(
            Algorithm::Ppa,
            1.0,
            1.4,
            class1_metric(&split, 1.0, 0.8, 0.8),
        )
    };
    let z0 = seeded_point(&split.layout, 42);
    let z_star = reference_z_star(&split, make, &z0, 4000);
    let cfg = ValidatedConfig::validate(&split, make(), 400).unwrap();
    let trace = run(&split, &cfg, &z0, 400, 1e-12).unwrap();
    assert!(trace.len() > 30, "expected a nontrivial trace");

    let ctx = BoundContext::new(&split, &cfg, &z0, &z_star).unwrap();
    let probe_set = probes(&split, &z_star, 20);

    let qf = check_quasi_fejer(&cfg, &trace, &z_star).unwrap();
    assert!(qf.ok(), "{}", qf.line());
    let (fr, series) = check_fpr_rate(&cfg, &trace, &z_star).unwrap();
    assert!(fr.ok(), "{}", fr.line());
    let fs = check_fpr_summability(&cfg, &trace, &z_star).unwrap();
    assert!(fs.ok(), "{}", fs.line());
    let fi = check_fundamental_inequality(&split, &cfg, &trace, &probe_set).unwrap();
    assert!(fi.ok(), "{}", fi.line());
    let kt = check_key_terms(&split, &cfg, &trace).unwrap();
    assert!(kt.ok(), "{}", kt.line());
    let erg = check_ergodic_bounds(&split, &cfg, &trace, &ctx, &probe_set).unwrap();
    assert!(erg.report.ok(), "{}", erg.report.line());
    let non = check_nonergodic_bounds(&split, &cfg, &trace, &ctx, &probe_set).unwrap();
    assert!(non.report.ok(), "{}", non.report.line());
    let gn = check_gap_nonnegative(&split, &cfg, &trace, &ctx).unwrap();
    assert!(gn.ok(), "{}", gn.line());

    // strongly convex data term drives linear convergence: slopes are steep
    let r = fit_rate_slope(&series, 0.5).unwrap();
    if let Some(slope) = r.slope {
        assert!(slope <= -0.95, "FPR^2 slope {slope}");
    } else {
        assert!(r.converged_exactly);
    }
}

#[test]
fn fbs_class1_full_battery() {
    // smooth-form: g quadratic, dual block carries the l1 regularizer
    let a = dmatrix![
        0.9, 0.1, 0.0;
        0.1, 0.8, 0.2;
        0.0, 0.2, 0.7
    ];
    let mp = ModelProblem {
        f: ProxFn::Zero,
        g: ProxFn::LeastSquares {
            a: a.clone(),
            b: dvector![0.5, -1.0, 0.75],
        },
        pairs: vec![DualPair::plain(ProxFn::L1 { weight: 0.2 }, 3)],
        b: Arc::new(BlockLinearMap::new(vec![DMatrix::identity(3, 3)]).unwrap()),
    };
    let split = mp.build_split(Level::One).unwrap();
    let metrics = || class1_metric(&split, 1.0, 0.5, 0.5);
    let make = || AlgorithmConfig::new(Algorithm::Fbs, 1.0, 1.0, metrics());
    let z0 = seeded_point(&split.layout, 7);
    let z_star = reference_z_star(&split, make, &z0, 6000);
    let cfg = ValidatedConfig::validate(&split, make(), 500).unwrap();
    let trace = run(&split, &cfg, &z0, 500, 1e-12).unwrap();
    let ctx = BoundContext::new(&split, &cfg, &z0, &z_star).unwrap();
    let probe_set = probes(&split, &z_star, 20);

    for report in [
        check_quasi_fejer(&cfg, &trace, &z_star).unwrap(),
        check_fpr_summability(&cfg, &trace, &z_star).unwrap(),
        check_fundamental_inequality(&split, &cfg, &trace, &probe_set).unwrap(),
        check_key_terms(&split, &cfg, &trace).unwrap(),
        check_ergodic_bounds(&split, &cfg, &trace, &ctx, &probe_set)
            .unwrap()
            .report,
        check_nonergodic_bounds(&split, &cfg, &trace, &ctx, &probe_set)
            .unwrap()
            .report,
        check_fpr_rate(&cfg, &trace, &z_star).unwrap().0,
    ] {
        assert!(report.ok(), "{}", report.line());
    }
}

#[test]
fn prs_half_split_full_battery() {
    // elastic-style instance: f strongly convex data-distance, g the l2-norm
    // regularizer (globally Lipschitz), one l1 dual block
    let mp = ModelProblem {
        f: ProxFn::quadratic(1.0, dvector![1.0, -0.5, 0.25]),
        g: ProxFn::L2 { weight: 0.3 },
        pairs: vec![DualPair::plain(ProxFn::L1 { weight: 0.2 }, 2)],
        b: Arc::new(BlockLinearMap::new(vec![dmatrix![0.5, 0.2, -0.1; 0.1, 0.6, 0.3]]).unwrap()),
    };
    let split = mp.build_split(Level::One).unwrap();
    let metrics = || class1_metric(&split, 0.5, 0.9, 0.9);
    let make = || AlgorithmConfig::new(Algorithm::Prs, 1.0, 1.5, metrics()).with_w(0.5);
    let z0 = seeded_point(&split.layout, 11);
    let z_star = reference_z_star(&split, make, &z0, 6000);
    let cfg = ValidatedConfig::validate(&split, make(), 500).unwrap();
    let trace = run(&split, &cfg, &z0, 500, 1e-12).unwrap();
    let ctx = BoundContext::new(&split, &cfg, &z0, &z_star).unwrap();
    let probe_set = probes(&split, &z_star, 20);

    for report in [
        check_quasi_fejer(&cfg, &trace, &z_star).unwrap(),
        check_fundamental_inequality(&split, &cfg, &trace, &probe_set).unwrap(),
        check_key_terms(&split, &cfg, &trace).unwrap(),
        check_ergodic_bounds(&split, &cfg, &trace, &ctx, &probe_set)
            .unwrap()
            .report,
        check_nonergodic_bounds(&split, &cfg, &trace, &ctx, &probe_set)
            .unwrap()
            .report,
        check_prs_ergodic_distance(&split, &cfg, &trace, &ctx).unwrap(),
        check_fpr_rate(&cfg, &trace, &z_star).unwrap().0,
    ] {
        assert!(report.ok(), "{}", report.line());
    }
}

#[test]
fn fbf_block_diag_battery() {
    let a = dmatrix![0.8, 0.1; 0.2, 0.9];
    let mp = ModelProblem {
        f: ProxFn::Zero,
        g: ProxFn::LeastSquares {
            a,
            b: dvector![1.0, -1.0],
        },
        pairs: vec![DualPair::plain(ProxFn::L1 { weight: 0.25 }, 2)],
        b: Arc::new(BlockLinearMap::new(vec![DMatrix::identity(2, 2)]).unwrap()),
    };
    let split = mp.build_split(Level::One).unwrap();
    let u = Arc::new(
        MetricOperator::certified(
            MetricRepr::BlockDiagonal(vec![
                BlockMetric::ScaledIdentity(1.0),
                BlockMetric::ScaledIdentity(1.0),
            ]),
            split.layout.clone(),
        )
        .unwrap(),
    );
    let metrics = || MetricSequence::constant(u.clone());
    // gamma < rho/(1/beta + ||S||): beta = 1/||A||^2, ||S|| = 1
    let make = || AlgorithmConfig::new(Algorithm::Fbf, 0.3, 1.0, metrics());
    let z0 = seeded_point(&split.layout, 23);
    let z_star = reference_z_star(&split, make, &z0, 8000);
    let cfg = ValidatedConfig::validate(&split, make(), 600).unwrap();
    let trace = run(&split, &cfg, &z0, 600, 1e-12).unwrap();
    let ctx = BoundContext::new(&split, &cfg, &z0, &z_star).unwrap();
    let probe_set = probes(&split, &z_star, 20);

    for report in [
        check_quasi_fejer(&cfg, &trace, &z_star).unwrap(),
        check_fundamental_inequality(&split, &cfg, &trace, &probe_set).unwrap(),
        check_key_terms(&split, &cfg, &trace).unwrap(),
        check_ergodic_bounds(&split, &cfg, &trace, &ctx, &probe_set)
            .unwrap()
            .report,
    ] {
        assert!(report.ok(), "{}", report.line());
    }
}

#[test]
fn resolvent_firm_nonexpansiveness_in_metric() {
    // ||Jx - Jy||^2_U <= ||x - y||^2_U - ||(I-J)x - (I-J)y||^2_U
    let (_, split) = cp_form_instance();
    let cfg = MetricClassConfig::class1_uniform(1.0, 0.8, 0.8, 1);
    let u = Arc::new(pdsplit::model::build_metric(&cfg, split.skew.b(), &split.layout).unwrap());
    let plan = ResolventOp::plan(&split.bold_f, &split.skew, 1.0, 1.0, &u).unwrap();
    for s in 0..24 {
        let x = seeded_point(&split.layout, 500 + s);
        let y = seeded_point(&split.layout, 900 + s);
        let jx = plan.eval(&x).unwrap();
        let jy = plan.eval(&y).unwrap();
        let lhs = inner_u(&u, &jx.sub(&jy), &jx.sub(&jy)).unwrap();
        let diff = x.sub(&y);
        let resid = x.sub(&jx).sub(&y.sub(&jy));
        let rhs = inner_u(&u, &diff, &diff).unwrap() - inner_u(&u, &resid, &resid).unwrap();
        assert!(lhs <= rhs + 1e-10, "firm nonexpansiveness: {lhs} vs {rhs}");
    }
}

#[test]
fn averaged_step_contraction() {
    // the one-step map T_lambda satisfies the averaged contraction inequality
    // with coefficient alpha lambda on randomized pairs
    let (_, split) = cp_form_instance();
    let metrics = class1_metric(&split, 1.0, 0.8, 0.8);
    let lambda = 1.4;
    let cfg = ValidatedConfig::validate(
        &split,
        AlgorithmConfig::new(Algorithm::Ppa, 1.0, lambda, metrics),
        10,
    )
    .unwrap();
    let u = cfg.metric_at(0);
    let alpha_lambda = cfg.alpha_at(0).unwrap() * lambda;
    let coeff = (1.0 - alpha_lambda) / alpha_lambda;
    for s in 0..16 {
        let x = seeded_point(&split.layout, 100 + s);
        let y = seeded_point(&split.layout, 300 + s);
        let tx = run(&split, &cfg, &x, 1, 0.0).unwrap().z_final;
        let ty = run(&split, &cfg, &y, 1, 0.0).unwrap().z_final;
        let lhs = inner_u(&u, &tx.sub(&ty), &tx.sub(&ty)).unwrap();
        let resid = x.sub(&tx).sub(&y.sub(&ty));
        let rhs = inner_u(&u, &x.sub(&y), &x.sub(&y)).unwrap()
            - coeff * inner_u(&u, &resid, &resid).unwrap();
        assert!(lhs <= rhs + 1e-10, "averaged contraction: {lhs} vs {rhs}");
    }
}

#[test]
fn cocoercivity_transfer_in_metric() {
    // U^{-1} grad g is (beta rho)-cocoercive in <.,.>_U
    let a = dmatrix![1.0, 0.3; 0.0, 0.8];
    let g = SeparableFunction::new(vec![
        ProxFn::LeastSquares {
            a: a.clone(),
            b: dvector![0.5, -0.5],
        },
        ProxFn::Zero,
    ]);
    let layout = Layout::new(vec![2, 1]);
    let u = MetricOperator::certified(
        MetricRepr::BlockDiagonal(vec![
            BlockMetric::Diagonal(dvector![1.5, 2.0]),
            BlockMetric::ScaledIdentity(1.2),
        ]),
        layout.clone(),
    )
    .unwrap();
    let smooth = g.smooth_view().unwrap();
    let beta_rho = smooth.beta() * u.rho();
    for s in 0..16 {
        let x = seeded_point(&layout, 40 + s);
        let y = seeded_point(&layout, 80 + s);
        let dg = smooth.grad(&x).sub(&smooth.grad(&y));
        let mapped = u.apply_inverse(&dg);
        // <x - y, U^{-1}(gx - gy)>_U = <x - y, gx - gy>
        let lhs = x.sub(&y).dot(&dg);
        let rhs = beta_rho * inner_u(&u, &mapped, &mapped).unwrap();
        assert!(lhs >= rhs - 1e-10, "cocoercivity transfer: {lhs} vs {rhs}");
    }
}

#[test]
fn metric_norm_is_a_norm() {
    // triangle inequality and absolute homogeneity on randomized triples
    let layout = Layout::new(vec![2, 2]);
    let b = Arc::new(BlockLinearMap::new(vec![dmatrix![0.4, 0.2; -0.1, 0.3]]).unwrap());
    let u = MetricOperator::certified(
        MetricRepr::Class1Level1 {
            v0: BlockMetric::ScaledIdentity(1.3),
            vs: vec![BlockMetric::Diagonal(dvector![1.0, 2.0])],
            w: 0.9,
            b,
        },
        layout.clone(),
    )
    .unwrap();
    for s in 0..32 {
        let x = seeded_point(&layout, 3 * s + 1);
        let y = seeded_point(&layout, 5 * s + 2);
        let nx = norm_u(&u, &x).unwrap();
        let ny = norm_u(&u, &y).unwrap();
        let nxy = norm_u(&u, &x.add(&y)).unwrap();
        assert!(nxy <= nx + ny + 1e-10);
        let t = -1.7;
        assert!((norm_u(&u, &x.scale(t)).unwrap() - t.abs() * nx).abs() < 1e-10);
        // symmetry of the inner product
        let ab = inner_u(&u, &x, &y).unwrap();
        let ba = inner_u(&u, &y, &x).unwrap();
        assert!((ab - ba).abs() <= 1e-12 * ab.abs().max(1.0));
    }
}
