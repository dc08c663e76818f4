use crate::diag::bounds::{BoundContext, PrsSide};
use crate::diag::ergodic::ErgodicAccumulator;
use crate::diag::gap::{pre_gap_at, s_chain_lower_bound};
use crate::engine::config::{Algorithm, ValidatedConfig};
use crate::engine::run::Trace;
use crate::engine::steppers::SchemeState;
use crate::error::{Result, SplitError};
use crate::model::problem::SplitProblem;
use crate::space::metric::norm_u;
use crate::space::point::ProductPoint;

/// Outcome of one inequality swept over a trace: the worst slack seen and the
/// first iteration (if any) where the inequality failed.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub checked: usize,
    pub first_violation: Option<usize>,
    /// min over all checks of (allowed - actual); nonnegative iff all hold.
    pub worst_margin: f64,
    pub note: String,
}

impl CheckReport {
    fn new(name: &'static str) -> Self {
        CheckReport {
            name,
            checked: 0,
            first_violation: None,
            worst_margin: f64::INFINITY,
            note: String::new(),
        }
    }

    fn observe(&mut self, k: usize, margin: f64) {
        self.checked += 1;
        if margin < self.worst_margin {
            self.worst_margin = margin;
        }
        if margin < 0.0 && self.first_violation.is_none() {
            self.first_violation = Some(k);
        }
    }

    pub fn ok(&self) -> bool {
        self.first_violation.is_none()
    }

    pub fn line(&self) -> String {
        format!(
            "{:<28} {} checked {:>7}, worst margin {:+.3e}{}",
            self.name,
            if self.ok() { "PASS" } else { "FAIL" },
            self.checked,
            self.worst_margin,
            match self.first_violation {
                Some(k) => format!(", first violation at k = {k}"),
                None => String::new(),
            }
        )
    }
}

/// Quasi-Fejer monotonicity: ||z^{k+1} - z*||^2_{U_{k+1}} stays within
/// (1 + eta_k) ||z^k - z*||^2_{U_k} + 1e-10 at every iteration.
pub fn check_quasi_fejer(
    cfg: &ValidatedConfig,
    trace: &Trace,
    z_star: &ProductPoint,
) -> Result<CheckReport> {
    const TOL: f64 = 1e-10;
    let mut report = CheckReport::new("quasi-fejer");
    for state in &trace.states {
        let uk = cfg.metric_at(state.k);
        let un = cfg.metric_at(state.k + 1);
        let dk = state.z.sub(z_star);
        let dn = state.z_next.sub(z_star);
        let lhs = crate::space::metric::inner_u(&un, &dn, &dn)?;
        let rhs = (1.0 + cfg.metrics.eta_at(state.k))
            * crate::space::metric::inner_u(&uk, &dk, &dk)?;
        report.observe(state.k, rhs + TOL - lhs);
    }
    Ok(report)
}

/// FPR summability: sum_k ((1 - a_k l_k)/(a_k l_k)) ||z^{k+1} - z^k||^2 stays
/// below (1/rho)(1 + eta_p eta_s) ||z^0 - z*||^2_{U_0} + 1e-8.
pub fn check_fpr_summability(
    cfg: &ValidatedConfig,
    trace: &Trace,
    z_star: &ProductPoint,
) -> Result<CheckReport> {
    const TOL: f64 = 1e-8;
    let mut report = CheckReport::new("fpr-summability");
    let u0 = cfg.metric_at(0);
    let d0 = trace.states[0].z.sub(z_star);
    let budget =
        (1.0 / cfg.rho) * (1.0 + cfg.metrics.eta_p() * cfg.metrics.eta_s())
            * crate::space::metric::inner_u(&u0, &d0, &d0)?;
    let mut partial = 0.0;
    for state in &trace.states {
        let alpha = cfg.alpha_at(state.k).ok_or_else(|| {
            SplitError::Config("FPR summability applies to the averaged algorithms".into())
        })?;
        let al = alpha * state.lambda;
        partial += (1.0 - al) / al * state.z_next.sub(&state.z).norm_sq();
        report.observe(state.k, budget + TOL - partial);
    }
    Ok(report)
}

/// Driving-operator FPR rate under fixed metrics:
/// ||T z^k - z^k||^2_U <= ||z^0 - z*||^2_U / (tau_lower (k+1)) + 1e-10.
/// Returns the per-iteration series ||T z^k - z^k||^2_U for slope fitting.
pub fn check_fpr_rate(
    cfg: &ValidatedConfig,
    trace: &Trace,
    z_star: &ProductPoint,
) -> Result<(CheckReport, Vec<(usize, f64)>)> {
    const TOL: f64 = 1e-10;
    let tau = cfg
        .tau_lower()
        .ok_or_else(|| SplitError::Config("FPR rate applies to PPA/FBS/PRS".into()))?;
    if tau <= 0.0 {
        return Err(SplitError::Config(format!(
            "FPR rate needs tau_lower > 0, got {tau}"
        )));
    }
    if !cfg.metrics.is_constant() || !cfg.gamma.is_constant() {
        return Err(SplitError::Config(
            "the FPR rate theorem assumes fixed metrics and stepsizes".into(),
        ));
    }
    let u0 = cfg.metric_at(0);
    let d0 = trace.states[0].z.sub(z_star);
    let d0_sq = crate::space::metric::inner_u(&u0, &d0, &d0)?;
    let mut report = CheckReport::new("fpr-rate");
    let mut series = Vec::with_capacity(trace.states.len());
    for state in &trace.states {
        let fpr_t_sq = state.fpr_sq / (state.lambda * state.lambda);
        series.push((state.k, fpr_t_sq));
        let bound = d0_sq / (tau * (state.k as f64 + 1.0));
        report.observe(state.k, bound + TOL - fpr_t_sq);
    }
    Ok((report, series))
}

/// The upper key term kappa_u^k reassembled from the recorded subgradients.
pub fn kappa_u(problem: &SplitProblem, state: &SchemeState) -> f64 {
    let gl = state.gamma * state.lambda;
    let s_xs = problem.skew.apply(&state.x_s);
    -state.fpr_sq
        + 2.0 * gl * state.x_f.sub(&state.z_next).dot(&state.grad_f_tilde)
        + 2.0 * gl * state.x_g.sub(&state.z_next).dot(&state.grad_g_tilde)
        + 2.0 * gl * state.z_next.scale(-1.0).dot(&s_xs)
}

/// Fundamental inequality replay over randomized probes:
/// 2 gamma lambda G(x_f, x_g, x_s; x) <= ||z^k - x||^2_{U_k} - ||z^{k+1} - x||^2_{U_k}
/// + kappa_u^k + 1e-8, with kappa_u reassembled from the recorded subgradients.
pub fn check_fundamental_inequality(
    problem: &SplitProblem,
    cfg: &ValidatedConfig,
    trace: &Trace,
    probes: &[ProductPoint],
) -> Result<CheckReport> {
    const TOL: f64 = 1e-8;
    let mut report = CheckReport::new("fundamental-inequality");
    let constant_metric = cfg.metrics.is_constant();
    // per-probe value and metric caches; metric pieces refresh per k when the
    // metric varies
    let probe_values: Vec<f64> = probes
        .iter()
        .map(|x| problem.bold_f.value(x) + problem.bold_g.value(x))
        .collect();
    let mut probe_ux: Vec<ProductPoint> = Vec::new();
    let mut probe_qx: Vec<f64> = Vec::new();
    for state in &trace.states {
        let u = cfg.metric_at(state.k);
        if probe_ux.is_empty() || !constant_metric {
            probe_ux = probes.iter().map(|x| u.apply(x)).collect();
            probe_qx = probes.iter().zip(&probe_ux).map(|(x, ux)| x.dot(ux)).collect();
        }
        let uz = u.apply(&state.z);
        let uzn = u.apply(&state.z_next);
        let qz = state.z.dot(&uz);
        let qzn = state.z_next.dot(&uzn);
        let kappa = kappa_u(problem, state);
        let f_at_xf = problem.bold_f.value(&state.x_f);
        let g_at_xg = problem.bold_g.value(&state.x_g);
        let s_xs = problem.skew.apply(&state.x_s);
        let gl2 = 2.0 * state.gamma * state.lambda;
        for (i, x) in probes.iter().enumerate() {
            if probe_values[i] == f64::INFINITY {
                // the gap is -infinity there; the inequality holds trivially
                report.observe(state.k, f64::INFINITY);
                continue;
            }
            let gap = f_at_xf + g_at_xg - s_xs.dot(x) - probe_values[i];
            let dist_k = qz - 2.0 * uz.dot(x) + probe_qx[i];
            let dist_n = qzn - 2.0 * uzn.dot(x) + probe_qx[i];
            let rhs = dist_k - dist_n + kappa;
            report.observe(state.k, rhs + TOL - gl2 * gap);
        }
    }
    Ok(report)
}

/// Key-term identities and sign conditions per algorithm.
pub fn check_key_terms(
    problem: &SplitProblem,
    cfg: &ValidatedConfig,
    trace: &Trace,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("key-terms");
    for state in &trace.states {
        let kappa = kappa_u(problem, state);
        let margin = match cfg.algorithm {
            Algorithm::Ppa | Algorithm::Prs => {
                let expected = (1.0 - 2.0 / state.lambda) * state.fpr_sq;
                1e-8 - (kappa - expected).abs()
            }
            Algorithm::Fbf => 1e-10 - kappa,
            Algorithm::Fbs => {
                let eps_term = if cfg.beta.is_finite() {
                    cfg.epsilon / (cfg.beta * state.lambda)
                } else {
                    0.0
                };
                let plain_sq = state.z_next.sub(&state.z).norm_sq();
                let g_gap = problem.bold_g.value(&state.x_g) - problem.bold_g.value(&state.x_f);
                let rhs = (cfg.rho - eps_term) * plain_sq
                    + 2.0 * state.gamma * state.lambda * g_gap;
                rhs + 1e-8 - kappa
            }
        };
        report.observe(state.k, margin);
    }
    Ok(report)
}

/// The evaluation point the theorems attach to each algorithm's iterates.
fn ergodic_point(
    algorithm: Algorithm,
    side: Option<PrsSide>,
    acc: &ErgodicAccumulator,
) -> Result<ProductPoint> {
    Ok(match algorithm {
        Algorithm::Ppa | Algorithm::Fbs | Algorithm::Fbf => acc.mean_f(),
        Algorithm::Prs => match side {
            Some(PrsSide::FLipschitz { .. }) => acc.mean_g(),
            Some(PrsSide::GLipschitz { .. }) => acc.mean_f(),
            None => {
                return Err(SplitError::Config(
                    "PRS gap evaluation needs a Lipschitz side".into(),
                ))
            }
        },
    })
}

fn nonergodic_point(
    algorithm: Algorithm,
    side: Option<PrsSide>,
    state: &SchemeState,
) -> Result<ProductPoint> {
    Ok(match algorithm {
        Algorithm::Ppa | Algorithm::Fbs | Algorithm::Fbf => state.x_f.clone(),
        Algorithm::Prs => match side {
            Some(PrsSide::FLipschitz { .. }) => state.x_g.clone(),
            Some(PrsSide::GLipschitz { .. }) => state.x_f.clone(),
            None => {
                return Err(SplitError::Config(
                    "PRS gap evaluation needs a Lipschitz side".into(),
                ))
            }
        },
    })
}

#[derive(Debug)]
pub struct GapCheck {
    pub report: CheckReport,
    /// Gap at the oracle probe per iteration (clamped at 0 from below for
    /// rate fitting of the nonnegative part).
    pub gap_series: Vec<(usize, f64)>,
    /// The theorem RHS (ergodic) or measured-FPR majorant (nonergodic) at the
    /// oracle probe.
    pub majorant_series: Vec<(usize, f64)>,
}

/// Ergodic gap bounds: measured pre-gap at the ergodic iterate stays below
/// the theorem RHS at every k for every probe.
pub fn check_ergodic_bounds(
    problem: &SplitProblem,
    cfg: &ValidatedConfig,
    trace: &Trace,
    ctx: &BoundContext,
    probes: &[ProductPoint],
) -> Result<GapCheck> {
    const TOL: f64 = 1e-8;
    let mut report = CheckReport::new("ergodic-gap-bound");
    let mut gap_series = Vec::with_capacity(trace.states.len());
    let mut majorant_series = Vec::with_capacity(trace.states.len());
    let mut acc = ErgodicAccumulator::new(&problem.layout);
    // probe-dependent pieces do not change along the trace
    let probe_values: Vec<f64> = probes
        .iter()
        .map(|x| problem.bold_f.value(x) + problem.bold_g.value(x))
        .collect();
    let probe_consts: Vec<_> = probes
        .iter()
        .map(|x| ctx.probe_constants(x))
        .collect::<Result<_>>()?;
    let oracle_consts = ctx.probe_constants(&ctx.z_star)?;
    for state in &trace.states {
        acc.push(state)?;
        let xbar = ergodic_point(cfg.algorithm, ctx.prs_side, &acc)?;
        let lhs_values = problem.bold_f.value(&xbar) + problem.bold_g.value(&xbar);
        let s_xbar = problem.skew.apply(&xbar);
        for (i, x) in probes.iter().enumerate() {
            if probe_values[i] == f64::INFINITY {
                report.observe(state.k, f64::INFINITY);
                continue;
            }
            let gap = lhs_values - s_xbar.dot(x) - probe_values[i];
            let rhs = ctx.ergodic_rhs_from(&probe_consts[i], acc.sigma())?;
            report.observe(state.k, rhs + TOL - gap);
        }
        let oracle_gap = pre_gap_at(problem, &xbar, &ctx.z_star);
        gap_series.push((state.k, oracle_gap.max(0.0)));
        majorant_series.push((
            state.k,
            ctx.ergodic_rhs_from(&oracle_consts, acc.sigma())?,
        ));
    }
    Ok(GapCheck {
        report,
        gap_series,
        majorant_series,
    })
}

/// Nonergodic gap bounds under fixed metrics: the gap at the last iterate
/// stays below the theorem RHS, and the measured-FPR majorant dominates it.
pub fn check_nonergodic_bounds(
    problem: &SplitProblem,
    cfg: &ValidatedConfig,
    trace: &Trace,
    ctx: &BoundContext,
    probes: &[ProductPoint],
) -> Result<GapCheck> {
    const TOL: f64 = 1e-8;
    if cfg.algorithm == Algorithm::Fbf {
        return Err(SplitError::Config(
            "nonergodic bounds are stated for PPA/FBS/PRS".into(),
        ));
    }
    let mut report = CheckReport::new("nonergodic-gap-bound");
    let mut gap_series = Vec::with_capacity(trace.states.len());
    let mut majorant_series = Vec::with_capacity(trace.states.len());
    let probe_values: Vec<f64> = probes
        .iter()
        .map(|x| problem.bold_f.value(x) + problem.bold_g.value(x))
        .collect();
    let probe_consts: Vec<_> = probes
        .iter()
        .map(|x| ctx.probe_constants(x))
        .collect::<Result<_>>()?;
    for state in &trace.states {
        let xk = nonergodic_point(cfg.algorithm, ctx.prs_side, state)?;
        let lhs_values = problem.bold_f.value(&xk) + problem.bold_g.value(&xk);
        let s_xk = problem.skew.apply(&xk);
        for (i, x) in probes.iter().enumerate() {
            if probe_values[i] == f64::INFINITY {
                report.observe(state.k, f64::INFINITY);
                continue;
            }
            let gap = lhs_values - s_xk.dot(x) - probe_values[i];
            let rhs = ctx.nonergodic_rhs_from(&probe_consts[i], state.k)?;
            report.observe(state.k, rhs + TOL - gap);
        }
        let oracle_gap = pre_gap_at(problem, &xk, &ctx.z_star);
        let fpr_t_u = state.fpr_sq.sqrt() / state.lambda;
        let majorant = ctx.nonergodic_majorant(fpr_t_u, &ctx.z_star)?;
        // the majorant dominates the gap pointwise
        report.observe(state.k, majorant + TOL - oracle_gap);
        gap_series.push((state.k, oracle_gap.max(0.0)));
        majorant_series.push((state.k, majorant));
    }
    Ok(GapCheck {
        report,
        gap_series,
        majorant_series,
    })
}

/// Gap nonnegativity at the oracle: G(x, x, x; z*) >= -1e-10 along the trace.
pub fn check_gap_nonnegative(
    problem: &SplitProblem,
    cfg: &ValidatedConfig,
    trace: &Trace,
    ctx: &BoundContext,
) -> Result<CheckReport> {
    const TOL: f64 = 1e-10;
    let mut report = CheckReport::new("gap-nonnegative-at-oracle");
    for state in &trace.states {
        let xk = nonergodic_point(cfg.algorithm, ctx.prs_side, state)
            .unwrap_or_else(|_| state.x_f.clone());
        let gap = pre_gap_at(problem, &xk, &ctx.z_star);
        report.observe(state.k, gap + TOL);
    }
    Ok(report)
}

/// S_F lower-bound chain on strongly convex instances:
/// G(x, x, x; z*) >= sum of S_F terms - 1e-8 at every trace point.
pub fn check_s_chain(
    problem: &SplitProblem,
    cfg: &ValidatedConfig,
    trace: &Trace,
    ctx: &BoundContext,
) -> Result<CheckReport> {
    const TOL: f64 = 1e-8;
    let mut report = CheckReport::new("s-chain");
    for state in &trace.states {
        let xk = nonergodic_point(cfg.algorithm, ctx.prs_side, state)
            .unwrap_or_else(|_| state.x_f.clone());
        let gap = pre_gap_at(problem, &xk, &ctx.z_star);
        let chain = s_chain_lower_bound(problem, &xk, &ctx.z_star)?;
        report.observe(state.k, gap + TOL - chain);
    }
    Ok(report)
}

/// PRS ergodic splitting distance: ||xbar_f - xbar_g||_U stays below
/// 2 gamma ||z^0 - z*||_U / Sigma_k, and equals the telescoped
/// gamma ||z^{k+1} - z^0||_U / Sigma_k identity.
pub fn check_prs_ergodic_distance(
    problem: &SplitProblem,
    cfg: &ValidatedConfig,
    trace: &Trace,
    ctx: &BoundContext,
) -> Result<CheckReport> {
    const TOL: f64 = 1e-10;
    if cfg.algorithm != Algorithm::Prs {
        return Err(SplitError::Config(
            "the ergodic splitting distance is a PRS diagnostic".into(),
        ));
    }
    let u = cfg.metric_at(0);
    let mut report = CheckReport::new("prs-ergodic-distance");
    let mut acc = ErgodicAccumulator::new(&problem.layout);
    let z0 = &trace.states[0].z;
    for state in &trace.states {
        acc.push(state)?;
        let dist = norm_u(&u, &acc.mean_f().sub(&acc.mean_g()))?;
        let bound = 2.0 * ctx.gamma0 * ctx.d0_u / acc.sigma();
        report.observe(state.k, bound + TOL - dist);
        // telescoping identity from the proof line
        let tele = ctx.gamma0 * norm_u(&u, &state.z_next.sub(z0))? / acc.sigma();
        let scale = dist.abs().max(1.0);
        report.observe(state.k, 1e-10 * scale - (dist - tele).abs());
    }
    Ok(report)
}
