use crate::error::{Result, SplitError};
use crate::model::problem::SplitProblem;
use crate::ops::resolvent::ResolventOp;
use crate::space::metric::MetricOperator;
use crate::space::point::ProductPoint;

/// Full record of one iteration of the unifying scheme: the iterate pair, the
/// evaluation points, and the reconstructed subgradients that make the update
/// z+ = z - gamma lambda U^{-1}(grad_f + grad_g + S x_s) hold exactly.
#[derive(Debug, Clone)]
pub struct SchemeState {
    pub k: usize,
    pub z: ProductPoint,
    pub z_next: ProductPoint,
    pub x_f: ProductPoint,
    pub x_g: ProductPoint,
    pub x_s: ProductPoint,
    pub grad_f_tilde: ProductPoint,
    pub grad_g_tilde: ProductPoint,
    pub gamma: f64,
    pub lambda: f64,
    /// ||z^{k+1} - z^k||^2 in the iteration metric U_k.
    pub fpr_sq: f64,
}

impl SchemeState {
    /// Relative residual of the unified-form identity under `u`.
    pub fn unified_form_residual(&self, u: &MetricOperator, problem: &SplitProblem) -> f64 {
        let mut drive = self.grad_f_tilde.add(&self.grad_g_tilde);
        drive.axpy_mut(1.0, &problem.skew.apply(&self.x_s));
        let step = u.apply_inverse(&drive).scale(self.gamma * self.lambda);
        let predicted = self.z.sub(&step);
        let err = predicted.sub(&self.z_next).norm();
        err / self.z.norm().max(self.z_next.norm()).max(1.0)
    }
}

fn weighted_norm_sq(u: &MetricOperator, d: &ProductPoint) -> Result<f64> {
    crate::space::metric::inner_u(u, d, d)
}

/// One relaxed proximal-point step: x_f = J_{gamma U^{-1}(df + S)}(z).
pub fn ppa_step(
    problem: &SplitProblem,
    rf: &ResolventOp,
    u: &MetricOperator,
    k: usize,
    gamma: f64,
    lambda: f64,
    z: &ProductPoint,
) -> Result<SchemeState> {
    let x_f = rf.eval(z)?;
    let z_next = z.scale(1.0 - lambda).axpy(lambda, &x_f);
    let grad_f_tilde = u
        .apply(&z.sub(&x_f))
        .scale(1.0 / gamma)
        .sub(&problem.skew.apply(&x_f));
    let diff = z_next.sub(z);
    let fpr_sq = weighted_norm_sq(u, &diff)?;
    Ok(SchemeState {
        k,
        z: z.clone(),
        z_next,
        x_g: z.clone(),
        x_s: x_f.clone(),
        x_f,
        grad_f_tilde,
        grad_g_tilde: ProductPoint::zeros(&problem.layout),
        gamma,
        lambda,
        fpr_sq,
    })
}

/// One relaxed forward-backward step:
/// x_f = J_{gamma U^{-1}(df + S)}(z - gamma U^{-1} grad_g(z)).
pub fn fbs_step(
    problem: &SplitProblem,
    rf: &ResolventOp,
    u: &MetricOperator,
    k: usize,
    gamma: f64,
    lambda: f64,
    z: &ProductPoint,
) -> Result<SchemeState> {
    let gz = problem
        .bold_g
        .grad(z)
        .ok_or_else(|| SplitError::Config("FBS needs a differentiable bold g".into()))?;
    let input = z.sub(&u.apply_inverse(&gz).scale(gamma));
    let x_f = rf.eval(&input)?;
    let z_next = z.scale(1.0 - lambda).axpy(lambda, &x_f);
    // grad_f = (1/gamma) U(z - x_f) - grad_g(z) - S x_f
    let grad_f_tilde = u
        .apply(&z.sub(&x_f))
        .scale(1.0 / gamma)
        .sub(&gz)
        .sub(&problem.skew.apply(&x_f));
    let diff = z_next.sub(z);
    let fpr_sq = weighted_norm_sq(u, &diff)?;
    Ok(SchemeState {
        k,
        z: z.clone(),
        z_next,
        x_g: z.clone(),
        x_s: x_f.clone(),
        x_f,
        grad_f_tilde,
        grad_g_tilde: gz,
        gamma,
        lambda,
        fpr_sq,
    })
}

/// One relaxed Peaceman-Rachford step through the two resolvents
/// x_g = J_{gamma U^{-1}(dg + (1-w)S)}(z), x_f = J_{gamma U^{-1}(df + wS)}(2x_g - z).
pub fn prs_step(
    problem: &SplitProblem,
    rf: &ResolventOp,
    rg: &ResolventOp,
    u: &MetricOperator,
    k: usize,
    gamma: f64,
    lambda: f64,
    w: f64,
    z: &ProductPoint,
) -> Result<SchemeState> {
    let x_g = rg.eval(z)?;
    let reflected = x_g.scale(2.0).sub(z);
    let x_f = rf.eval(&reflected)?;
    let z_next = z.axpy(lambda, &x_f.sub(&x_g));
    let x_s = x_f.scale(w).axpy(1.0 - w, &x_g);
    let grad_g_tilde = u
        .apply(&z.sub(&x_g))
        .scale(1.0 / gamma)
        .sub(&problem.skew.apply(&x_g).scale(1.0 - w));
    let grad_f_tilde = u
        .apply(&reflected.sub(&x_f))
        .scale(1.0 / gamma)
        .sub(&problem.skew.apply(&x_f).scale(w));
    let diff = z_next.sub(z);
    let fpr_sq = weighted_norm_sq(u, &diff)?;
    Ok(SchemeState {
        k,
        z: z.clone(),
        z_next,
        x_f,
        x_g,
        x_s,
        grad_f_tilde,
        grad_g_tilde,
        gamma,
        lambda,
        fpr_sq,
    })
}

/// One forward-backward-forward step (lambda = 1).
pub fn fbf_step(
    problem: &SplitProblem,
    rf: &ResolventOp,
    u: &MetricOperator,
    k: usize,
    gamma: f64,
    z: &ProductPoint,
) -> Result<SchemeState> {
    let forward = |p: &ProductPoint| -> Result<ProductPoint> {
        let gp = problem
            .bold_g
            .grad(p)
            .ok_or_else(|| SplitError::Config("FBF needs a differentiable bold g".into()))?;
        Ok(gp.add(&problem.skew.apply(p)))
    };
    let v = forward(z)?;
    let y = z.sub(&u.apply_inverse(&v).scale(gamma));
    let x_f = rf.eval(&y)?;
    let v2 = forward(&x_f)?;
    let w_pt = x_f.sub(&u.apply_inverse(&v2).scale(gamma));
    let z_next = z.sub(&y).add(&w_pt);
    let grad_f_tilde = u.apply(&y.sub(&x_f)).scale(1.0 / gamma);
    let grad_g_tilde = problem
        .bold_g
        .grad(&x_f)
        .ok_or_else(|| SplitError::Config("FBF needs a differentiable bold g".into()))?;
    let diff = z_next.sub(z);
    let fpr_sq = weighted_norm_sq(u, &diff)?;
    Ok(SchemeState {
        k,
        z: z.clone(),
        z_next,
        x_g: x_f.clone(),
        x_s: x_f.clone(),
        x_f,
        grad_f_tilde,
        grad_g_tilde,
        gamma,
        lambda: 1.0,
        fpr_sq,
    })
}
