use std::sync::Arc;

use crate::engine::config::{Algorithm, ValidatedConfig};
use crate::error::{Result, SplitError};
use crate::model::problem::SplitProblem;
use crate::space::metric::{inner_u, norm_u, MetricOperator};
use crate::space::point::ProductPoint;

/// Which evaluation point the gap theorems attach to a PRS run, decided by
/// which side of the splitting is Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrsSide {
    /// bold f is L-Lipschitz: evaluate at x_g, with w_hat = w.
    FLipschitz { l: f64 },
    /// bold g is L-Lipschitz: evaluate at x_f, with w_hat = 1 - w.
    GLipschitz { l: f64 },
}

/// Probe-dependent constants of the bound formulas.
#[derive(Debug, Clone, Copy)]
pub struct ProbeConstants {
    /// ||z0 - x||^2_{U_0}.
    pub dx0_sq: f64,
    /// ||z* - x||^2 in the plain norm.
    pub dstar_sq: f64,
    /// ||z* - x||_{U_0}.
    pub dstar_u: f64,
    pub probe_norm: f64,
}

/// Run-level constants shared by every bound evaluation: the initial point,
/// the oracle solution, and the entry metric.
#[derive(Debug)]
pub struct BoundContext {
    pub algorithm: Algorithm,
    pub u0: Arc<MetricOperator>,
    pub z0: ProductPoint,
    pub z_star: ProductPoint,
    /// ||z0 - z*||_{U_0}.
    pub d0_u: f64,
    pub eta_p: f64,
    pub eta_s: f64,
    pub mu: f64,
    pub rho: f64,
    pub gamma0: f64,
    pub snorm: f64,
    pub w: f64,
    pub prs_side: Option<PrsSide>,
    /// max{rho - eps/(beta sup lambda), 0} / (rho inf (1-al)/(al)) for FBS.
    pub fbs_extra: f64,
    pub tau_lower: Option<f64>,
}

impl BoundContext {
    pub fn new(
        problem: &SplitProblem,
        cfg: &ValidatedConfig,
        z0: &ProductPoint,
        z_star: &ProductPoint,
    ) -> Result<Self> {
        let u0 = cfg.metric_at(0);
        let d0_u = norm_u(&u0, &z0.sub(z_star))?;
        let prs_side = if cfg.algorithm == Algorithm::Prs {
            let dims = problem.layout.dims();
            let lf = problem.bold_f.lipschitz_value(dims);
            let lg = problem.bold_g.lipschitz_value(dims);
            if lf.is_finite() {
                Some(PrsSide::FLipschitz { l: lf })
            } else if lg.is_finite() {
                Some(PrsSide::GLipschitz { l: lg })
            } else {
                None
            }
        } else {
            None
        };
        let fbs_extra = if cfg.algorithm == Algorithm::Fbs {
            let lam_sup = cfg.lambda_sup();
            let ratio = cfg.km_ratio_inf().ok_or_else(|| {
                SplitError::Config("FBS bound needs the KM ratio".into())
            })?;
            if ratio <= 0.0 {
                return Err(SplitError::Config(format!(
                    "FBS bound needs inf (1 - alpha lambda)/(alpha lambda) > 0, got {ratio}"
                )));
            }
            let eps_term = if cfg.beta.is_finite() {
                cfg.epsilon / (cfg.beta * lam_sup)
            } else {
                0.0
            };
            (cfg.rho - eps_term).max(0.0) / (cfg.rho * ratio)
        } else {
            0.0
        };
        Ok(BoundContext {
            algorithm: cfg.algorithm,
            u0,
            z0: z0.clone(),
            z_star: z_star.clone(),
            d0_u,
            eta_p: cfg.metrics.eta_p(),
            eta_s: cfg.metrics.eta_s(),
            mu: cfg.metrics.mu(),
            rho: cfg.rho,
            gamma0: cfg.gamma.at(0),
            snorm: cfg.snorm,
            w: cfg.w,
            prs_side,
            fbs_extra,
            tau_lower: cfg.tau_lower(),
        })
    }

    fn prs_slope_term(&self, probe_norm: f64) -> Result<f64> {
        match self.prs_side {
            Some(PrsSide::FLipschitz { l }) => Ok(l + self.w.abs() * self.snorm * probe_norm),
            Some(PrsSide::GLipschitz { l }) => {
                Ok(l + (1.0 - self.w).abs() * self.snorm * probe_norm)
            }
            None => Err(SplitError::Config(
                "PRS bounds need a globally Lipschitz side of the splitting (missing constant L)"
                    .into(),
            )),
        }
    }

    /// Probe-dependent quantities shared by every bound evaluation at that
    /// probe; hoisting them makes long trace sweeps cheap.
    pub fn probe_constants(&self, probe: &ProductPoint) -> Result<ProbeConstants> {
        let d = self.z0.sub(probe);
        let dx0_sq = inner_u(&self.u0, &d, &d)?;
        let dstar = self.z_star.sub(probe);
        Ok(ProbeConstants {
            dx0_sq,
            dstar_sq: dstar.norm_sq(),
            dstar_u: norm_u(&self.u0, &dstar)?,
            probe_norm: probe.norm(),
        })
    }

    /// RHS of the ergodic gap theorem at partial sum Sigma_k.
    pub fn ergodic_rhs_from(&self, c: &ProbeConstants, sigma_k: f64) -> Result<f64> {
        let d0_sq = self.d0_u * self.d0_u;
        let value = match self.algorithm {
            Algorithm::Ppa | Algorithm::Fbf => {
                (c.dx0_sq + 2.0 * self.eta_p * self.eta_s * d0_sq
                    + 2.0 * self.mu * self.eta_s * c.dstar_sq)
                    / (2.0 * sigma_k)
            }
            Algorithm::Fbs => {
                (c.dx0_sq
                    + (2.0 * self.eta_p * self.eta_s
                        + (1.0 + self.eta_p * self.eta_s) * self.fbs_extra)
                        * d0_sq
                    + 2.0 * self.mu * self.eta_s * c.dstar_sq)
                    / (2.0 * sigma_k)
            }
            Algorithm::Prs => {
                let slope = self.prs_slope_term(c.probe_norm)?;
                (c.dx0_sq + 4.0 * (self.gamma0 / self.rho.sqrt()) * slope * self.d0_u)
                    / (2.0 * sigma_k)
            }
        };
        Ok(value)
    }

    pub fn ergodic_rhs(&self, sigma_k: f64, probe: &ProductPoint) -> Result<f64> {
        self.ergodic_rhs_from(&self.probe_constants(probe)?, sigma_k)
    }

    /// RHS of the nonergodic gap theorem at iteration k. Fixed metrics and
    /// stepsizes are assumed (checked by the caller).
    pub fn nonergodic_rhs_from(&self, c: &ProbeConstants, k: usize) -> Result<f64> {
        let tau = self.tau_lower_checked()?;
        let denom = self.gamma0 * (tau * (k as f64 + 1.0)).sqrt();
        let mut head = self.d0_u + c.dstar_u;
        if self.algorithm == Algorithm::Prs {
            head += (self.gamma0 / self.rho.sqrt()) * self.prs_slope_term(c.probe_norm)?;
        }
        Ok(head * self.d0_u / denom)
    }

    pub fn nonergodic_rhs(&self, k: usize, probe: &ProductPoint) -> Result<f64> {
        self.nonergodic_rhs_from(&self.probe_constants(probe)?, k)
    }

    /// The nonnegative majorant of the gap built from the measured driving
    /// FPR ||T z^k - z^k||_{U}; it dominates the gap pointwise and decays at
    /// the o(1/sqrt(k+1)) rate.
    pub fn nonergodic_majorant(&self, fpr_t_u: f64, probe: &ProductPoint) -> Result<f64> {
        let c = self.probe_constants(probe)?;
        let mut value = (self.d0_u + c.dstar_u) * fpr_t_u / self.gamma0;
        if self.algorithm == Algorithm::Prs {
            value += self.prs_slope_term(c.probe_norm)? * fpr_t_u / self.rho.sqrt();
        }
        Ok(value)
    }

    fn tau_lower_checked(&self) -> Result<f64> {
        match self.tau_lower {
            Some(t) if t > 0.0 => Ok(t),
            Some(t) => Err(SplitError::Config(format!(
                "nonergodic bounds need tau_lower > 0, got {t}"
            ))),
            None => Err(SplitError::Config(
                "nonergodic bounds are stated for PPA/FBS/PRS only".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::config::AlgorithmConfig;
    use crate::model::problem::Level;
    use crate::ops::prox::{ProxFn, SeparableFunction};
    use crate::ops::skew::zero_skew;
    use crate::space::point::Layout;
    use crate::space::sequence::MetricSequence;
    use nalgebra::dvector;

    fn tiny_problem() -> SplitProblem {
        let layout = Layout::new(vec![1, 1]);
        SplitProblem {
            level: Level::One,
            layout: layout.clone(),
            bold_f: SeparableFunction::new(vec![
                ProxFn::quadratic(1.0, dvector![0.0]),
                ProxFn::Zero,
            ]),
            bold_g: SeparableFunction::zero(2),
            skew: Arc::new(zero_skew(&layout).unwrap()),
        }
    }

    #[test]
    fn ppa_fixed_metric_reduces_to_simple_quotient() {
        // ||z0 - x||^2_{U0} = 4, Sigma_k = 2 -> RHS = 1 (eta_p = 1, eta_s = 0)
        let p = tiny_problem();
        let metrics = MetricSequence::constant(Arc::new(
            crate::space::metric::MetricOperator::identity(p.layout.clone()),
        ));
        let cfg = ValidatedConfig::validate(
            &p,
            AlgorithmConfig::new(Algorithm::Ppa, 1.0, 1.0, metrics),
            10,
        )
        .unwrap();
        let z0 = ProductPoint::new(vec![dvector![2.0], dvector![0.0]]);
        let z_star = ProductPoint::zeros(&p.layout);
        let ctx = BoundContext::new(&p, &cfg, &z0, &z_star).unwrap();
        let probe = ProductPoint::zeros(&p.layout);
        let rhs = ctx.ergodic_rhs(2.0, &probe).unwrap();
        assert!((rhs - 1.0).abs() < 1e-14);
        // monotone in Sigma_k
        assert!(ctx.ergodic_rhs(4.0, &probe).unwrap() < rhs);
    }

    #[test]
    fn nonergodic_scalings() {
        let p = tiny_problem();
        let metrics = MetricSequence::constant(Arc::new(
            crate::space::metric::MetricOperator::identity(p.layout.clone()),
        ));
        let cfg = ValidatedConfig::validate(
            &p,
            AlgorithmConfig::new(Algorithm::Ppa, 1.0, 1.0, metrics),
            10,
        )
        .unwrap();
        let z0 = ProductPoint::new(vec![dvector![1.0], dvector![0.0]]);
        let z_star = ProductPoint::zeros(&p.layout);
        let ctx = BoundContext::new(&p, &cfg, &z0, &z_star).unwrap();
        let probe = ProductPoint::new(vec![dvector![0.5], dvector![0.0]]);
        let r1 = ctx.nonergodic_rhs(0, &probe).unwrap();
        let r2 = ctx.nonergodic_rhs(1, &probe).unwrap();
        assert!((r1 / r2 - 2.0_f64.sqrt()).abs() < 1e-12, "doubling k+1 divides by sqrt 2");
        // z0 = z*: the bound collapses to zero
        let ctx0 = BoundContext::new(&p, &cfg, &z_star, &z_star).unwrap();
        assert_eq!(ctx0.nonergodic_rhs(5, &probe).unwrap(), 0.0);
    }

    #[test]
    fn prs_without_lipschitz_side_is_a_config_error() {
        // both bold f and bold g fail to be globally Lipschitz
        let layout = Layout::new(vec![1, 1]);
        let p = SplitProblem {
            level: Level::One,
            layout: layout.clone(),
            bold_f: SeparableFunction::new(vec![
                ProxFn::quadratic(1.0, dvector![0.0]),
                ProxFn::Zero,
            ]),
            bold_g: SeparableFunction::new(vec![
                ProxFn::quadratic(1.0, dvector![0.0]),
                ProxFn::Zero,
            ]),
            skew: Arc::new(zero_skew(&layout).unwrap()),
        };
        let metrics = MetricSequence::constant(Arc::new(
            crate::space::metric::MetricOperator::identity(layout),
        ));
        let cfg = ValidatedConfig::validate(
            &p,
            AlgorithmConfig::new(Algorithm::Prs, 1.0, 1.0, metrics).with_w(0.5),
            10,
        )
        .unwrap();
        let z0 = ProductPoint::zeros(&p.layout);
        let ctx = BoundContext::new(&p, &cfg, &z0, &z0).unwrap();
        let err = ctx.ergodic_rhs(1.0, &z0).unwrap_err();
        assert!(format!("{err}").contains("Lipschitz"), "{err}");
    }

    #[test]
    fn prs_zero_lipschitz_term_collapses() {
        // bold f Lipschitz with L = 0 (f constant) and w = 0:
        // RHS = ||z0 - x||^2_U / (2 Sigma_k)
        let layout = Layout::new(vec![1, 1]);
        let p = SplitProblem {
            level: Level::One,
            layout: layout.clone(),
            bold_f: SeparableFunction::zero(2),
            bold_g: SeparableFunction::new(vec![
                ProxFn::quadratic(1.0, dvector![0.0]),
                ProxFn::Zero,
            ]),
            skew: Arc::new(zero_skew(&layout).unwrap()),
        };
        let metrics = MetricSequence::constant(Arc::new(
            crate::space::metric::MetricOperator::identity(layout),
        ));
        let cfg = ValidatedConfig::validate(
            &p,
            AlgorithmConfig::new(Algorithm::Prs, 1.0, 1.0, metrics).with_w(0.0),
            10,
        )
        .unwrap();
        let z0 = ProductPoint::new(vec![dvector![2.0], dvector![0.0]]);
        let z_star = ProductPoint::zeros(&p.layout);
        let ctx = BoundContext::new(&p, &cfg, &z0, &z_star).unwrap();
        assert_eq!(ctx.prs_side, Some(PrsSide::FLipschitz { l: 0.0 }));
        let probe = ProductPoint::zeros(&p.layout);
        let rhs = ctx.ergodic_rhs(2.0, &probe).unwrap();
        assert!((rhs - 1.0).abs() < 1e-14);
    }
}
