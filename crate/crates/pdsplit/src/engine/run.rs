use crate::engine::config::{Algorithm, ValidatedConfig};
use crate::engine::steppers::{fbf_step, fbs_step, ppa_step, prs_step, SchemeState};
use crate::error::Result;
use crate::model::problem::SplitProblem;
use crate::ops::resolvent::ResolventOp;
use crate::space::point::ProductPoint;

/// The collected iteration record of one run.
#[derive(Debug)]
pub struct Trace {
    pub states: Vec<SchemeState>,
    pub z_final: ProductPoint,
    /// True when the FPR threshold fired before the budget ran out.
    pub stopped_early: bool,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Iterate from `z0` until `budget` steps or until ||z^{k+1} - z^k||_{U_k}
/// falls to `stop_fpr`. Every state is recorded; the run is deterministic in
/// its inputs.
pub fn run(
    problem: &SplitProblem,
    cfg: &ValidatedConfig,
    z0: &ProductPoint,
    budget: usize,
    stop_fpr: f64,
) -> Result<Trace> {
    assert!(budget >= 1, "budget must be at least 1");
    problem.layout.check_point(z0)?;

    // constant-parameter runs reuse one resolvent plan
    let reuse_plans = cfg.metrics.is_constant() && cfg.gamma.is_constant();
    let mut rf: Option<ResolventOp> = None;
    let mut rg: Option<ResolventOp> = None;

    let mut states: Vec<SchemeState> = Vec::new();
    let mut z = z0.clone();
    let mut stopped_early = false;
    for k in 0..budget {
        let u = cfg.metric_at(k);
        if rf.is_none() || !reuse_plans {
            rf = Some(cfg.f_resolvent(problem, k)?);
            if cfg.algorithm == Algorithm::Prs {
                rg = Some(cfg.g_resolvent(problem, k)?);
            }
        }
        let gamma = cfg.gamma.at(k);
        let lambda = cfg.lambda.at(k);
        let state = match cfg.algorithm {
            Algorithm::Ppa => ppa_step(problem, rf.as_ref().unwrap(), &u, k, gamma, lambda, &z)?,
            Algorithm::Fbs => fbs_step(problem, rf.as_ref().unwrap(), &u, k, gamma, lambda, &z)?,
            Algorithm::Prs => prs_step(
                problem,
                rf.as_ref().unwrap(),
                rg.as_ref().unwrap(),
                &u,
                k,
                gamma,
                lambda,
                cfg.w,
                &z,
            )?,
            Algorithm::Fbf => fbf_step(problem, rf.as_ref().unwrap(), &u, k, gamma, &z)?,
        };
        z = state.z_next.clone();
        let fpr = state.fpr_sq.sqrt();
        states.push(state);
        if fpr <= stop_fpr {
            stopped_early = true;
            break;
        }
    }
    Ok(Trace {
        states,
        z_final: z,
        stopped_early,
    })
}
