//! Run orchestration: build the split and metric from a spec, resolve the
//! oracle, execute the engine, and sweep the bound-check battery.

use std::sync::Arc;

use serde_json::json;

use pdsplit::diag::{
    build_trace_records, check_ergodic_bounds, check_fpr_rate, check_fpr_summability,
    check_fundamental_inequality, check_gap_nonnegative, check_key_terms,
    check_nonergodic_bounds, check_prs_ergodic_distance, check_quasi_fejer, fit_rate_slope,
    BoundContext, CheckReport, RateReport, TraceRecord,
};
use pdsplit::engine::{run, Algorithm, AlgorithmConfig, Trace, ValidatedConfig};
use pdsplit::error::{Result, SplitError};
use pdsplit::model::{build_metric, Level, MetricClass, MetricClassConfig, ModelProblem, SplitProblem};
use pdsplit::space::{
    BlockMetric, FamilyTemplate, MetricSequence, ProductPoint, ScaleRule,
};

use crate::generators::{generate, integrity_check, InstanceSpec, OracleBundle, OracleKind};
use crate::rng::SplitMix64;

pub fn verbose() -> bool {
    std::env::var("PDSPLIT_LOG")
        .map(|v| !v.is_empty() && v != "0")
        .unwrap_or(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricChoice {
    Identity,
    Class1,
    Class2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricVariation {
    Constant,
    /// Scales start at 1 + amp and decay geometrically to 1 (eta == 0).
    Decreasing { amp: f64, ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OraclePolicy {
    Auto,
    ClosedForm,
    Reference,
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub instance: InstanceSpec,
    pub algorithm: Algorithm,
    pub level: Level,
    pub metric: MetricChoice,
    pub metric_w: f64,
    pub tau: f64,
    pub sigma: f64,
    pub variation: MetricVariation,
    pub gamma: f64,
    pub lambda: f64,
    pub prs_w: f64,
    pub budget: usize,
    pub stop_fpr: f64,
    pub probes: usize,
    pub check_bounds: bool,
    pub oracle: OraclePolicy,
}

impl RunSpec {
    pub fn new(instance: InstanceSpec, algorithm: Algorithm) -> Self {
        RunSpec {
            instance,
            algorithm,
            level: Level::One,
            metric: MetricChoice::Class1,
            metric_w: 1.0,
            tau: 0.5,
            sigma: 0.5,
            variation: MetricVariation::Constant,
            gamma: 1.0,
            lambda: 1.0,
            prs_w: 0.5,
            budget: 1000,
            stop_fpr: 1e-11,
            probes: 8,
            check_bounds: true,
            oracle: OraclePolicy::Auto,
        }
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub records: Vec<TraceRecord>,
    pub checks: Vec<CheckReport>,
    pub skipped: Vec<String>,
    pub rates: Vec<(String, RateReport)>,
    pub oracle_kind: OracleKind,
    pub objective_gap: Option<f64>,
    pub iterations: usize,
    pub stopped_early: bool,
}

impl RunOutput {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.ok())
    }

    pub fn failing(&self) -> Vec<&CheckReport> {
        self.checks.iter().filter(|c| !c.ok()).collect()
    }

    pub fn report_json(&self, spec: &RunSpec) -> serde_json::Value {
        json!({
            "run": {
                "generator": spec.instance.generator.name(),
                "form": format!("{:?}", spec.instance.form),
                "seed": spec.instance.seed,
                "algorithm": spec.algorithm.name(),
                "level": match spec.level { Level::One => 1, Level::Two => 2 },
                "metric": format!("{:?}", spec.metric),
                "metric_w": spec.metric_w,
                "tau": spec.tau,
                "sigma": spec.sigma,
                "gamma": spec.gamma,
                "lambda": spec.lambda,
                "budget": spec.budget,
                "stop_fpr": spec.stop_fpr,
            },
            "oracle": match self.oracle_kind {
                OracleKind::ClosedForm => "closed-form",
                OracleKind::ReferenceRun => "reference-run",
            },
            "iterations": self.iterations,
            "stopped_early": self.stopped_early,
            "objective_gap": self.objective_gap,
            "all_pass": self.all_pass(),
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name,
                "pass": c.ok(),
                "checked": c.checked,
                "worst_margin": c.worst_margin,
                "first_violation": c.first_violation,
            })).collect::<Vec<_>>(),
            "skipped": self.skipped,
            "rates": self.rates.iter().map(|(name, r)| json!({
                "series": name,
                "slope": r.slope,
                "n_tail": r.n_tail,
                "n_trimmed": r.n_trimmed,
                "converged_exactly": r.converged_exactly,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Build the metric sequence a spec asks for.
pub fn build_metrics(spec: &RunSpec, split: &SplitProblem) -> Result<MetricSequence> {
    let n = split.n_duals();
    match (spec.metric, spec.variation) {
        (MetricChoice::Identity, MetricVariation::Constant) => {
            Ok(MetricSequence::constant(Arc::new(
                pdsplit::space::MetricOperator::identity(split.layout.clone()),
            )))
        }
        (MetricChoice::Identity, MetricVariation::Decreasing { amp, ratio }) => {
            MetricSequence::family(
                FamilyTemplate::ScaledBlocks {
                    blocks: vec![BlockMetric::ScaledIdentity(1.0); split.layout.n_blocks()],
                },
                ScaleRule::decreasing(amp, ratio),
                split.layout.clone(),
            )
        }
        (MetricChoice::Class1, variation) => {
            let mut cfg = MetricClassConfig::class1_uniform(spec.metric_w, spec.tau, spec.sigma, n);
            if spec.level == Level::Two {
                cfg.ws = Some(vec![BlockMetric::ScaledIdentity(1.0 / spec.sigma); n]);
            }
            match variation {
                MetricVariation::Constant => {
                    let u = build_metric(&cfg, split.skew.b(), &split.layout)?;
                    Ok(MetricSequence::constant(Arc::new(u)))
                }
                MetricVariation::Decreasing { amp, ratio } => {
                    // certify the base configuration first
                    build_metric(&cfg, split.skew.b(), &split.layout)?;
                    MetricSequence::family(
                        FamilyTemplate::Class1 {
                            v0: cfg.v0.clone(),
                            vs: cfg.vs.clone(),
                            w: cfg.w,
                            b: split.skew.b().clone(),
                        },
                        ScaleRule::decreasing(amp, ratio),
                        split.layout.clone(),
                    )
                }
            }
        }
        (MetricChoice::Class2, MetricVariation::Constant) => {
            let cfg = MetricClassConfig {
                class: MetricClass::Two,
                w: spec.metric_w,
                v0: BlockMetric::ScaledIdentity(1.0 / spec.tau),
                vs: vec![BlockMetric::ScaledIdentity(1.0 / spec.sigma); n],
                ws: None,
            };
            let u = build_metric(&cfg, split.skew.b(), &split.layout)?;
            Ok(MetricSequence::constant(Arc::new(u)))
        }
        (MetricChoice::Class2, _) => Err(SplitError::Config(
            "decreasing class-2 sequences are not wired up".into(),
        )),
    }
}

/// Deterministic starting point derived from the instance seed.
pub fn starting_point(split: &SplitProblem, seed: u64) -> ProductPoint {
    let mut rng = SplitMix64::new(seed ^ 0x5EED_CAFE_F00D_BEEF);
    ProductPoint::new(
        split
            .layout
            .dims()
            .iter()
            .map(|&d| rng.vector_normal(d))
            .collect(),
    )
}

fn make_config(spec: &RunSpec, split: &SplitProblem) -> Result<ValidatedConfig> {
    let metrics = build_metrics(spec, split)?;
    let cfg = AlgorithmConfig::new(spec.algorithm, spec.gamma, spec.lambda, metrics)
        .with_w(spec.prs_w);
    ValidatedConfig::validate(split, cfg, spec.budget)
}

/// Resolve the solution oracle: a packaged closed form where the generator
/// has one (and the algorithm's fixed points coincide with inclusion zeros),
/// otherwise a 10x-budget reference run at FPR 1e-13. Also returns the primal
/// solution estimate (for PRS the fixed point's primal block is not the
/// solution; the solution is read off the reference run's x_g).
pub fn resolve_z_star(
    spec: &RunSpec,
    split: &SplitProblem,
    oracle: &OracleBundle,
    z0: &ProductPoint,
) -> Result<(ProductPoint, OracleKind, Option<nalgebra::DVector<f64>>)> {
    let closed_available = oracle.z_star_level1.is_some() && spec.level == Level::One;
    let use_closed = match spec.oracle {
        OraclePolicy::ClosedForm => {
            if !closed_available {
                return Err(SplitError::Config(
                    "no closed-form oracle exists for this instance".into(),
                ));
            }
            if spec.algorithm == Algorithm::Prs {
                return Err(SplitError::Config(
                    "PRS fixed points depend on (gamma, U); use the reference oracle".into(),
                ));
            }
            true
        }
        OraclePolicy::Reference => false,
        OraclePolicy::Auto => closed_available && spec.algorithm != Algorithm::Prs,
    };
    if use_closed {
        return Ok((
            oracle.z_star_level1.clone().unwrap(),
            OracleKind::ClosedForm,
            oracle.x_star.clone(),
        ));
    }
    let cfg = make_config(spec, split)?;
    let trace = run(split, &cfg, z0, spec.budget.saturating_mul(10), 1e-13)?;
    let x_ref = trace.states.last().map(|s| match spec.algorithm {
        Algorithm::Prs => s.x_g.block(0).clone(),
        _ => s.x_f.block(0).clone(),
    });
    Ok((trace.z_final, OracleKind::ReferenceRun, x_ref))
}

/// Probe set for the gap sweeps: the oracle point plus projected random
/// perturbations around it.
pub fn build_probes(
    split: &SplitProblem,
    z_star: &ProductPoint,
    count: usize,
    seed: u64,
) -> Vec<ProductPoint> {
    let mut rng = SplitMix64::new(seed ^ 0x9A0B_E5E7);
    let mut out = vec![z_star.clone()];
    while out.len() < count.max(1) {
        let noise = ProductPoint::new(
            split
                .layout
                .dims()
                .iter()
                .map(|&d| rng.vector_normal(d) * 0.7)
                .collect(),
        );
        let raw = z_star.add(&noise);
        out.push(
            split
                .bold_g
                .project_domain(&split.bold_f.project_domain(&raw)),
        );
    }
    out
}

pub fn execute(spec: &RunSpec) -> Result<(RunOutput, ModelProblem)> {
    let (mp, oracle) = generate(&spec.instance)?;
    integrity_check(&mp)?;
    let split = mp.build_split(spec.level)?;
    let z0 = starting_point(&split, spec.instance.seed);
    let (z_star, oracle_kind, x_ref) = resolve_z_star(spec, &split, &oracle, &z0)?;
    let cfg = make_config(spec, &split)?;
    let trace = run(&split, &cfg, &z0, spec.budget, spec.stop_fpr)?;
    if verbose() {
        eprintln!(
            "[pdsplit] {} on {}: {} iterations (stopped_early = {})",
            spec.algorithm.name(),
            spec.instance.generator.name(),
            trace.len(),
            trace.stopped_early
        );
    }
    let ctx = BoundContext::new(&split, &cfg, &z0, &z_star)?;
    let records = build_trace_records(&split, &cfg, &trace, &ctx, Some(&mp))?;

    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    let mut rates: Vec<(String, RateReport)> = Vec::new();
    if spec.check_bounds {
        let probes = build_probes(&split, &z_star, spec.probes, spec.instance.seed);
        run_battery(
            &split, &cfg, &trace, &ctx, &probes, &mut checks, &mut skipped, &mut rates,
        )?;
    }

    let solution_primal = match spec.algorithm {
        Algorithm::Prs => trace.states.last().map(|s| s.x_g.block(0).clone()),
        _ => trace.states.last().map(|s| s.x_f.block(0).clone()),
    };
    let objective_gap = objective_gap(&mp, &oracle, oracle_kind, solution_primal, x_ref);

    Ok((
        RunOutput {
            records,
            checks,
            skipped,
            rates,
            oracle_kind,
            objective_gap,
            iterations: trace.len(),
            stopped_early: trace.stopped_early,
        },
        mp,
    ))
}

#[allow(clippy::too_many_arguments)]
fn run_battery(
    split: &SplitProblem,
    cfg: &ValidatedConfig,
    trace: &Trace,
    ctx: &BoundContext,
    probes: &[ProductPoint],
    checks: &mut Vec<CheckReport>,
    skipped: &mut Vec<String>,
    rates: &mut Vec<(String, RateReport)>,
) -> Result<()> {
    let z_star = &ctx.z_star;
    checks.push(check_quasi_fejer(cfg, trace, z_star)?);
    checks.push(check_fundamental_inequality(split, cfg, trace, probes)?);
    checks.push(check_key_terms(split, cfg, trace)?);
    checks.push(check_gap_nonnegative(split, cfg, trace, ctx)?);

    let averaged = cfg.algorithm != Algorithm::Fbf;
    let fixed = cfg.metrics.is_constant() && cfg.gamma.is_constant();
    if averaged {
        checks.push(check_fpr_summability(cfg, trace, z_star)?);
    } else {
        skipped.push("fpr-summability (FBF is not a KM iteration)".into());
    }
    if averaged && fixed {
        let (report, series) = check_fpr_rate(cfg, trace, z_star)?;
        checks.push(report);
        match fit_rate_slope(&series, 0.5) {
            Ok(r) => rates.push(("fpr_t_sq".into(), r)),
            Err(e) => skipped.push(format!("fpr_t_sq slope: {e}")),
        }
    } else {
        skipped.push("fpr-rate (needs an averaged driver and fixed metrics)".into());
    }

    match check_ergodic_bounds(split, cfg, trace, ctx, probes) {
        Ok(erg) => {
            checks.push(erg.report);
            match fit_rate_slope(&erg.gap_series, 0.5) {
                Ok(r) => rates.push(("ergodic_gap_at_oracle".into(), r)),
                Err(e) => skipped.push(format!("ergodic gap slope: {e}")),
            }
        }
        Err(e) => skipped.push(format!("ergodic-gap-bound: {e}")),
    }

    if averaged && fixed {
        match check_nonergodic_bounds(split, cfg, trace, ctx, probes) {
            Ok(non) => {
                checks.push(non.report);
                match fit_rate_slope(&non.majorant_series, 0.5) {
                    Ok(r) => rates.push(("nonergodic_majorant".into(), r)),
                    Err(e) => skipped.push(format!("nonergodic majorant slope: {e}")),
                }
            }
            Err(e) => skipped.push(format!("nonergodic-gap-bound: {e}")),
        }
    } else {
        skipped.push("nonergodic-gap-bound (needs an averaged driver and fixed metrics)".into());
    }

    if split.level == Level::One {
        match pdsplit::diag::replay::check_s_chain(split, cfg, trace, ctx) {
            Ok(report) => checks.push(report),
            Err(e) => skipped.push(format!("s-chain: {e}")),
        }
    }

    if cfg.algorithm == Algorithm::Prs {
        checks.push(check_prs_ergodic_distance(split, cfg, trace, ctx)?);
    }
    Ok(())
}

fn objective_gap(
    mp: &ModelProblem,
    oracle: &OracleBundle,
    oracle_kind: OracleKind,
    solution_primal: Option<nalgebra::DVector<f64>>,
    x_ref: Option<nalgebra::DVector<f64>>,
) -> Option<f64> {
    let x = solution_primal?;
    let achieved = mp.primal_objective(&x).ok()?;
    let reference = match (oracle_kind, oracle.objective) {
        (OracleKind::ClosedForm, Some(obj)) => obj,
        _ => mp.primal_objective(&x_ref?).ok()?,
    };
    if achieved.is_finite() && reference.is_finite() {
        Some(achieved - reference)
    } else {
        None
    }
}
