use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Result, SplitError};
use crate::ops::linmap::BlockLinearMap;
use crate::ops::prox::{ProxFn, SeparableFunction};
use crate::ops::skew::SkewOperator;
use crate::space::point::{Layout, ProductPoint};

/// Splitting level: how many extra dual variables the product space carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    One,
    Two,
}

/// The composite minimization problem
/// min_x f(x) + g(x) + sum_i (h_i [][] l_i)(B_i x),
/// where [][] is infimal convolution and l_i = indicator of {0} recovers the
/// plain sum of compositions.
#[derive(Debug, Clone)]
pub struct ModelProblem {
    pub f: ProxFn,
    pub g: ProxFn,
    pub pairs: Vec<DualPair>,
    pub b: Arc<BlockLinearMap>,
}

#[derive(Debug, Clone)]
pub struct DualPair {
    pub h: ProxFn,
    pub l: ProxFn,
}

impl DualPair {
    pub fn plain(h: ProxFn, dim: usize) -> Self {
        DualPair {
            h,
            l: ProxFn::indicator_zero(dim),
        }
    }
}

/// The product-space inclusion 0 in dF(x) + dG(x) + Sx equivalent to the
/// model problem at the chosen level.
#[derive(Debug, Clone)]
pub struct SplitProblem {
    pub level: Level,
    pub layout: Layout,
    pub bold_f: SeparableFunction,
    pub bold_g: SeparableFunction,
    pub skew: Arc<SkewOperator>,
}

impl SplitProblem {
    /// Extract the primal block of a product point.
    pub fn primal_of<'a>(&self, z: &'a ProductPoint) -> &'a DVector<f64> {
        z.block(0)
    }

    pub fn n_duals(&self) -> usize {
        self.skew.n_duals()
    }
}

impl ModelProblem {
    pub fn n_duals(&self) -> usize {
        self.pairs.len()
    }

    pub fn primal_dim(&self) -> usize {
        self.b.primal_dim()
    }

    pub fn layout(&self, level: Level) -> Layout {
        let mut dims = vec![self.primal_dim()];
        dims.extend(self.b.dual_dims());
        if level == Level::Two {
            dims.extend(self.b.dual_dims());
        }
        Layout::new(dims)
    }

    /// Whether every l_i pins its argument to zero (no infimal convolution).
    pub fn plain_composition(&self) -> bool {
        self.pairs.iter().all(|p| match &p.l {
            ProxFn::IndicatorPoint { p } => p.amax() == 0.0,
            _ => false,
        })
    }

    /// Pick the level the way the splitting guidance suggests: level 2 when
    /// some l_i* lacks a gradient, level 1 otherwise.
    pub fn suggest_level(&self) -> (Level, String) {
        let dims = self.b.dual_dims();
        for (i, pair) in self.pairs.iter().enumerate() {
            let conj = pair.l.conjugate(dims[i]);
            if !conj.lipschitz_grad().is_finite() {
                return (
                    Level::Two,
                    format!(
                        "level 2: l_{}^* ({}) is not differentiable",
                        i + 1,
                        conj.kind_name()
                    ),
                );
            }
        }
        (Level::One, "level 1: every l_i^* is differentiable".into())
    }

    /// Assemble the product-space splitting at the requested level.
    pub fn build_split(&self, level: Level) -> Result<SplitProblem> {
        if self.pairs.len() != self.b.n_duals() {
            return Err(SplitError::Layout(format!(
                "{} dual pairs but {} B blocks",
                self.pairs.len(),
                self.b.n_duals()
            )));
        }
        let dims = self.b.dual_dims();
        let layout = self.layout(level);
        let mut f_blocks = vec![self.f.clone()];
        for (pair, &d) in self.pairs.iter().zip(&dims) {
            f_blocks.push(pair.h.conjugate(d));
        }
        match level {
            Level::One => {
                let mut g_blocks = vec![self.g.clone()];
                for (pair, &d) in self.pairs.iter().zip(&dims) {
                    g_blocks.push(pair.l.conjugate(d));
                }
                Ok(SplitProblem {
                    level,
                    layout,
                    bold_f: SeparableFunction::new(f_blocks),
                    bold_g: SeparableFunction::new(g_blocks),
                    skew: Arc::new(SkewOperator::level1(self.b.clone())),
                })
            }
            Level::Two => {
                for pair in &self.pairs {
                    f_blocks.push(pair.l.clone());
                }
                let mut g_blocks = vec![self.g.clone()];
                for _ in 0..2 * self.pairs.len() {
                    g_blocks.push(ProxFn::Zero);
                }
                Ok(SplitProblem {
                    level,
                    layout,
                    bold_f: SeparableFunction::new(f_blocks),
                    bold_g: SeparableFunction::new(g_blocks),
                    skew: Arc::new(SkewOperator::level2(self.b.clone())),
                })
            }
        }
    }

    /// (h [][] l)(u), exposed for the closed-form cases: l pinning to zero
    /// (the value is h(u)) and scaled-squared-norm smoothing on either side
    /// (a Moreau envelope, evaluated through the partner's prox).
    pub fn infconv_value(h: &ProxFn, l: &ProxFn, u: &DVector<f64>) -> Result<f64> {
        use crate::space::metric::BlockMetric;
        let ident = BlockMetric::ScaledIdentity(1.0);
        if let ProxFn::IndicatorPoint { p } = l {
            if p.amax() == 0.0 {
                return Ok(h.value(u));
            }
        }
        if let ProxFn::Quadratic { weight, center, constant } = l {
            if center.amax() == 0.0 && *constant == 0.0 {
                // envelope of h with parameter 1/weight
                let p = h.prox(1.0 / weight, &ident, u)?;
                return Ok(h.value(&p) + 0.5 * weight * (u - p).norm_squared());
            }
        }
        if let ProxFn::Quadratic { weight, center, constant } = h {
            if center.amax() == 0.0 && *constant == 0.0 {
                let p = l.prox(1.0 / weight, &ident, u)?;
                return Ok(l.value(&p) + 0.5 * weight * (u - p).norm_squared());
            }
        }
        Err(SplitError::Capability(format!(
            "no closed form for ({} [][] {})",
            h.kind_name(),
            l.kind_name()
        )))
    }

    /// f(x) + g(x) + sum_i (h_i [][] l_i)(B_i x).
    pub fn primal_objective(&self, x: &DVector<f64>) -> Result<f64> {
        let mut total = self.f.value(x) + self.g.value(x);
        for (i, pair) in self.pairs.iter().enumerate() {
            let bx = self.b.apply_block(i, x);
            total += Self::infconv_value(&pair.h, &pair.l, &bx)?;
        }
        Ok(total)
    }

    /// (f* [][] g*)(-B^* y) + sum_i (h_i*(y_i) + l_i*(y_i)); supported when
    /// f is identically zero (the convolution collapses to g*) or f pins x to
    /// a point p (the convolution is <p, .> - g(p)).
    pub fn dual_objective(&self, ys: &[DVector<f64>]) -> Result<f64> {
        let yrefs: Vec<&DVector<f64>> = ys.iter().collect();
        let neg_bty = self.b.adjoint_apply(&yrefs) * -1.0;
        let head = match &self.f {
            ProxFn::Zero => self.g.conjugate(self.primal_dim()).value(&neg_bty),
            ProxFn::IndicatorPoint { p } => p.dot(&neg_bty) - self.g.value(p),
            _ => {
                return Err(SplitError::Capability(format!(
                    "(f* [][] g*) has no supported form for f = {}",
                    self.f.kind_name()
                )))
            }
        };
        let dims = self.b.dual_dims();
        let mut total = head;
        for (i, pair) in self.pairs.iter().enumerate() {
            let hv = pair.h.conjugate(dims[i]).value(&ys[i]);
            let lv = pair.l.conjugate(dims[i]).value(&ys[i]);
            if hv == f64::INFINITY || lv == f64::INFINITY {
                return Ok(f64::INFINITY);
            }
            total += hv + lv;
        }
        Ok(total)
    }
}
