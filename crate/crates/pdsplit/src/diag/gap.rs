use nalgebra::DVector;

use crate::error::{Result, SplitError};
use crate::model::problem::{Level, SplitProblem};
use crate::ops::prox::SeparableFunction;
use crate::ops::skew::SkewOperator;
use crate::space::point::ProductPoint;

/// Pre-primal-dual gap
/// G(x_f, x_g, x_s; x) = f(x_f) + g(x_g) + <S x_s, -x> - f(x) - g(x),
/// with +/- infinity as sentinels when a value leaves the domain.
pub fn pre_gap(
    bold_f: &SeparableFunction,
    bold_g: &SeparableFunction,
    skew: &SkewOperator,
    x_f: &ProductPoint,
    x_g: &ProductPoint,
    x_s: &ProductPoint,
    probe: &ProductPoint,
) -> f64 {
    let lhs = bold_f.value(x_f) + bold_g.value(x_g);
    if lhs == f64::INFINITY {
        return f64::INFINITY;
    }
    let rhs = bold_f.value(probe) + bold_g.value(probe);
    if rhs == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    lhs + skew.apply(x_s).dot(&probe.scale(-1.0)) - rhs
}

/// Gap at a single evaluation point: G(x, x, x; probe).
pub fn pre_gap_at(split: &SplitProblem, x: &ProductPoint, probe: &ProductPoint) -> f64 {
    pre_gap(&split.bold_f, &split.bold_g, &split.skew, x, x, x, probe)
}

/// Strong-convexity / Lipschitz-gradient metadata of one function.
#[derive(Debug, Clone, Copy)]
pub struct SDescriptor {
    pub mu: f64,
    pub lipschitz_grad: f64,
}

/// The lower-bound summand
/// S_F(x, y) = max{ (mu/2)||x-y||^2, (1/(2L))||grad F(x) - grad F(y)||^2 }
/// when L < infinity, and (mu/2)||x-y||^2 otherwise.
pub fn s_lower_bound(
    descr: SDescriptor,
    x: &DVector<f64>,
    y: &DVector<f64>,
    grad_x: Option<&DVector<f64>>,
    grad_y: Option<&DVector<f64>>,
) -> Result<f64> {
    let strong = 0.5 * descr.mu * (x - y).norm_squared();
    if !descr.lipschitz_grad.is_finite() {
        return Ok(strong);
    }
    if descr.lipschitz_grad == 0.0 {
        // affine gradient difference vanishes
        return Ok(strong.max(0.0));
    }
    let (gx, gy) = match (grad_x, grad_y) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(SplitError::Domain(
                "Lipschitz branch needs gradients at both points".into(),
            ))
        }
    };
    let smooth = (gx - gy).norm_squared() / (2.0 * descr.lipschitz_grad);
    Ok(strong.max(smooth))
}

/// Sum of the S_F terms of the level-1 splitting at (x, x*):
/// S_f + S_g on the primal block plus S_{h_i*} + S_{l_i*} on each dual block.
pub fn s_chain_lower_bound(
    split: &SplitProblem,
    x: &ProductPoint,
    x_star: &ProductPoint,
) -> Result<f64> {
    if split.level != Level::One {
        return Err(SplitError::Capability(
            "the S_F chain is stated for the level-1 splitting".into(),
        ));
    }
    let mut total = 0.0;
    for (block, (ff, gg)) in split
        .bold_f
        .blocks
        .iter()
        .zip(&split.bold_g.blocks)
        .enumerate()
    {
        let xb = x.block(block);
        let sb = x_star.block(block);
        for f in [ff, gg] {
            let descr = SDescriptor {
                mu: f.strong_convexity(),
                lipschitz_grad: f.lipschitz_grad(),
            };
            let term = if descr.lipschitz_grad.is_finite() {
                s_lower_bound(
                    descr,
                    xb,
                    sb,
                    f.grad(xb).as_ref(),
                    f.grad(sb).as_ref(),
                )?
            } else {
                s_lower_bound(descr, xb, sb, None, None)?
            };
            total += term;
        }
    }
    Ok(total)
}
