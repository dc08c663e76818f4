use std::sync::Arc;

use crate::error::{Result, SplitError};
use crate::model::problem::SplitProblem;
use crate::ops::resolvent::ResolventOp;
use crate::space::metric::MetricOperator;
use crate::space::sequence::MetricSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Ppa,
    Fbs,
    Prs,
    Fbf,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Ppa => "ppa",
            Algorithm::Fbs => "fbs",
            Algorithm::Prs => "prs",
            Algorithm::Fbf => "fbf",
        }
    }
}

/// A per-iteration scalar sequence; past the end of an explicit list the last
/// value repeats.
#[derive(Debug, Clone)]
pub enum StepRule {
    Constant(f64),
    Explicit(Vec<f64>),
}

impl StepRule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            StepRule::Constant(v) => *v,
            StepRule::Explicit(vs) => vs[k.min(vs.len() - 1)],
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            StepRule::Constant(_) => true,
            StepRule::Explicit(vs) => vs.windows(2).all(|w| w[0] == w[1]),
        }
    }

    fn check_points(&self, horizon: usize) -> Vec<usize> {
        match self {
            StepRule::Constant(_) => vec![0],
            StepRule::Explicit(vs) => (0..vs.len().min(horizon)).collect(),
        }
    }

    pub fn inf(&self, horizon: usize) -> f64 {
        self.check_points(horizon)
            .iter()
            .map(|&k| self.at(k))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sup(&self, horizon: usize) -> f64 {
        self.check_points(horizon)
            .iter()
            .map(|&k| self.at(k))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// User-facing algorithm parameters before validation.
#[derive(Debug)]
pub struct AlgorithmConfig {
    pub algorithm: Algorithm,
    pub gamma: StepRule,
    pub lambda: StepRule,
    pub metrics: MetricSequence,
    /// PRS splitting weight.
    pub w: f64,
    /// FBS stepsize margin epsilon in (0, 2 beta rho); defaulted when absent.
    pub epsilon: Option<f64>,
    /// FBS relaxation margin delta in (0, inf_j 1/alpha_j); defaulted when absent.
    pub delta: Option<f64>,
}

impl AlgorithmConfig {
    pub fn new(algorithm: Algorithm, gamma: f64, lambda: f64, metrics: MetricSequence) -> Self {
        AlgorithmConfig {
            algorithm,
            gamma: StepRule::Constant(gamma),
            lambda: StepRule::Constant(lambda),
            metrics,
            w: 0.5,
            epsilon: None,
            delta: None,
        }
    }

    pub fn with_w(mut self, w: f64) -> Self {
        self.w = w;
        self
    }
}

/// Parameters checked against the input list of the selected algorithm, with
/// the derived constants the rate diagnostics need.
#[derive(Debug)]
pub struct ValidatedConfig {
    pub algorithm: Algorithm,
    pub gamma: StepRule,
    pub lambda: StepRule,
    pub metrics: MetricSequence,
    pub w: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Cocoercivity constant of bold g (infinite when bold g vanishes).
    pub beta: f64,
    /// Uniform strong-monotonicity constant of the metric sequence.
    pub rho: f64,
    /// Certified ||S|| of the problem skew.
    pub snorm: f64,
    /// Validation horizon used for the sequence-range checks.
    pub horizon: usize,
}

impl ValidatedConfig {
    /// Check `cfg` against `problem` up to `horizon` iterations; rejected
    /// configurations name the violated constraint.
    pub fn validate(
        problem: &SplitProblem,
        cfg: AlgorithmConfig,
        horizon: usize,
    ) -> Result<ValidatedConfig> {
        let rho = cfg.metrics.rho();
        let snorm = problem.skew.opnorm();
        for k in cfg.gamma.check_points(horizon) {
            if cfg.gamma.at(k) <= 0.0 {
                return Err(SplitError::Config(format!(
                    "gamma_{k} = {} violates gamma_j > 0",
                    cfg.gamma.at(k)
                )));
            }
        }
        let (beta, epsilon, delta) = match cfg.algorithm {
            Algorithm::Ppa => {
                if !problem.bold_g.is_zero() {
                    return Err(SplitError::Config(
                        "PPA applies only when bold g vanishes identically".into(),
                    ));
                }
                for k in cfg.lambda.check_points(horizon) {
                    let l = cfg.lambda.at(k);
                    if !(l > 0.0 && l <= 2.0) {
                        return Err(SplitError::Config(format!(
                            "lambda_{k} = {l} violates the PPA range (0, 2]"
                        )));
                    }
                }
                (f64::INFINITY, 0.0, 0.0)
            }
            Algorithm::Fbs => {
                let smooth = problem.bold_g.smooth_view().map_err(|e| {
                    SplitError::Config(format!("FBS requires differentiable bold g: {e}"))
                })?;
                let beta = smooth.beta();
                let two_br = 2.0 * beta * rho;
                let epsilon = match cfg.epsilon {
                    Some(e) => {
                        if !(e > 0.0 && e < two_br) {
                            return Err(SplitError::Config(format!(
                                "epsilon = {e} violates (0, 2 beta rho) = (0, {two_br})"
                            )));
                        }
                        e
                    }
                    None => {
                        if two_br.is_finite() {
                            0.05 * two_br
                        } else {
                            0.0
                        }
                    }
                };
                let mut inv_alpha_inf = f64::INFINITY;
                for k in cfg.gamma.check_points(horizon) {
                    let g = cfg.gamma.at(k);
                    if two_br.is_finite() && g > two_br - epsilon {
                        return Err(SplitError::Config(format!(
                            "gamma_{k} = {g} violates the FBS stepsize rule gamma_j <= 2 beta rho - epsilon = {}",
                            two_br - epsilon
                        )));
                    }
                    inv_alpha_inf = inv_alpha_inf.min(1.0 / fbs_alpha(beta, rho, g));
                }
                let delta = match cfg.delta {
                    Some(d) => {
                        if !(d > 0.0 && d < inv_alpha_inf) {
                            return Err(SplitError::Config(format!(
                                "delta = {d} violates (0, inf 1/alpha_j) = (0, {inv_alpha_inf})"
                            )));
                        }
                        d
                    }
                    None => 0.01 * inv_alpha_inf,
                };
                for k in 0..horizon.max(1) {
                    let l = cfg.lambda.at(k);
                    let cap = 1.0 / fbs_alpha(beta, rho, cfg.gamma.at(k)) - delta;
                    if !(l > 0.0 && l <= cap + 1e-12) {
                        return Err(SplitError::Config(format!(
                            "lambda_{k} = {l} violates the FBS range (0, 1/alpha_k - delta] = (0, {cap}]"
                        )));
                    }
                    if cfg.lambda.is_constant() && cfg.gamma.is_constant() {
                        break;
                    }
                }
                (beta, epsilon, delta)
            }
            Algorithm::Prs => {
                if !cfg.metrics.is_constant() {
                    return Err(SplitError::Config(
                        "PRS requires a fixed metric (its fixed points move with U)".into(),
                    ));
                }
                if !cfg.gamma.is_constant() {
                    return Err(SplitError::Config(
                        "PRS requires a constant implicit stepsize gamma".into(),
                    ));
                }
                for k in cfg.lambda.check_points(horizon) {
                    let l = cfg.lambda.at(k);
                    if !(l > 0.0 && l <= 2.0) {
                        return Err(SplitError::Config(format!(
                            "lambda_{k} = {l} violates the PRS range (0, 2]"
                        )));
                    }
                }
                (f64::INFINITY, 0.0, 0.0)
            }
            Algorithm::Fbf => {
                for k in cfg.lambda.check_points(horizon) {
                    if cfg.lambda.at(k) != 1.0 {
                        return Err(SplitError::Config(
                            "FBF requires lambda_j = 1".into(),
                        ));
                    }
                }
                let smooth = problem.bold_g.smooth_view().map_err(|e| {
                    SplitError::Config(format!("FBF requires differentiable bold g: {e}"))
                })?;
                let beta = smooth.beta();
                let lip = if beta.is_finite() { 1.0 / beta } else { 0.0 };
                let cap = if lip + snorm > 0.0 {
                    rho / (lip + snorm)
                } else {
                    f64::INFINITY
                };
                for k in cfg.gamma.check_points(horizon) {
                    let g = cfg.gamma.at(k);
                    if g >= cap {
                        return Err(SplitError::Config(format!(
                            "gamma_{k} = {g} violates the FBF stepsize rule gamma_j < rho/(1/beta + ||S||) = {cap}"
                        )));
                    }
                }
                (beta, 0.0, 0.0)
            }
        };
        Ok(ValidatedConfig {
            algorithm: cfg.algorithm,
            gamma: cfg.gamma,
            lambda: cfg.lambda,
            metrics: cfg.metrics,
            w: cfg.w,
            epsilon,
            delta,
            beta,
            rho,
            snorm,
            horizon,
        })
    }

    pub fn metric_at(&self, k: usize) -> Arc<MetricOperator> {
        self.metrics.metric_at(k)
    }

    /// Averagedness coefficient of the driving operator at iteration k
    /// (1/2 for the resolvent and the DRS operator, the FBS formula otherwise;
    /// FBF is not driven by an averaged map).
    pub fn alpha_at(&self, k: usize) -> Option<f64> {
        match self.algorithm {
            Algorithm::Ppa | Algorithm::Prs => Some(0.5),
            Algorithm::Fbs => Some(fbs_alpha(self.beta, self.rho, self.gamma.at(k))),
            Algorithm::Fbf => None,
        }
    }

    /// tau_k = (1 - alpha_k lambda_k) lambda_k / alpha_k.
    pub fn tau_at(&self, k: usize) -> Option<f64> {
        let alpha = self.alpha_at(k)?;
        let lambda = self.lambda.at(k);
        Some((1.0 - alpha * lambda) * lambda / alpha)
    }

    /// inf_k tau_k over the horizon.
    pub fn tau_lower(&self) -> Option<f64> {
        let mut lo = f64::INFINITY;
        for k in 0..self.horizon.max(1) {
            lo = lo.min(self.tau_at(k)?);
            if self.lambda.is_constant() && self.gamma.is_constant() {
                break;
            }
        }
        Some(lo)
    }

    /// inf_k (1 - alpha_k lambda_k)/(alpha_k lambda_k), the FPR summability
    /// weight of the KM iteration.
    pub fn km_ratio_inf(&self) -> Option<f64> {
        let mut lo = f64::INFINITY;
        for k in 0..self.horizon.max(1) {
            let alpha = self.alpha_at(k)?;
            let al = alpha * self.lambda.at(k);
            lo = lo.min((1.0 - al) / al);
            if self.lambda.is_constant() && self.gamma.is_constant() {
                break;
            }
        }
        Some(lo)
    }

    pub fn lambda_sup(&self) -> f64 {
        self.lambda.sup(self.horizon)
    }

    /// Resolvent of gamma_k U_k^{-1}(d bold_f + s S) for the f-side of step k.
    pub fn f_resolvent(&self, problem: &SplitProblem, k: usize) -> Result<ResolventOp> {
        let metric = self.metric_at(k);
        let (scale, gamma) = match self.algorithm {
            Algorithm::Ppa | Algorithm::Fbs => (1.0, self.gamma.at(k)),
            Algorithm::Prs => (self.w, self.gamma.at(k)),
            Algorithm::Fbf => (0.0, self.gamma.at(k)),
        };
        ResolventOp::plan(&problem.bold_f, &problem.skew, scale, gamma, &metric)
    }

    /// Resolvent of gamma U^{-1}(d bold_g + (1-w) S); PRS only.
    pub fn g_resolvent(&self, problem: &SplitProblem, k: usize) -> Result<ResolventOp> {
        let metric = self.metric_at(k);
        ResolventOp::plan(
            &problem.bold_g,
            &problem.skew,
            1.0 - self.w,
            self.gamma.at(k),
            &metric,
        )
    }
}

/// alpha_{rho,gamma} = 2 beta rho / (4 beta rho - gamma); the beta -> inf
/// limit is 1/2 (an identically-zero smooth part).
pub fn fbs_alpha(beta: f64, rho: f64, gamma: f64) -> f64 {
    if beta.is_finite() {
        2.0 * beta * rho / (4.0 * beta * rho - gamma)
    } else {
        0.5
    }
}
