//! Command-line surface: generate, solve, compare-cp, report, validate-metrics.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use pdsplit::engine::Algorithm;
use pdsplit::error::{Result, SplitError};
use pdsplit::model::serialize::InstanceDoc;
use pdsplit::model::Level;
use pdsplit::space::validate_sequence;

use crate::compare_cp::{compare_chambolle_pock, CP_EQUIVALENCE_TOL};
use crate::generators::{generate, GeneratorId, InstanceForm, InstanceSpec};
use crate::report::summarize;
use crate::runspec::{
    build_metrics, execute, MetricChoice, MetricVariation, OraclePolicy, RunSpec,
};

/// Exit codes: 0 pass, 1 check failure, 2 config error, 3 I/O error.
pub fn exit_code_for(err: &SplitError) -> i32 {
    match err {
        SplitError::Io(_) | SplitError::Serde(_) => 3,
        SplitError::Config(_) | SplitError::Capability(_) | SplitError::Layout(_) => 2,
        _ => 2,
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "pdsplit",
    about = "Primal-dual splitting solver and convergence-bound diagnostics",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    /// Generator id: scalar-smoke | lasso | group-lasso | hscp-toy |
    /// projection-feasibility | random-skew
    #[arg(long, default_value = "lasso")]
    pub generator: String,
    /// Instance arrangement: prox-data | smooth-data | l2-reg
    #[arg(long, default_value = "smooth-data")]
    pub form: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 12)]
    pub primal_dim: usize,
    #[arg(long, default_value_t = 20)]
    pub data_rows: usize,
    #[arg(long, default_value_t = 0.15)]
    pub weight: f64,
    /// Squared-norm smoothing weight for the l_i slots
    #[arg(long)]
    pub l_smoothing: Option<f64>,
}

impl InstanceArgs {
    pub fn to_spec(&self) -> Result<InstanceSpec> {
        let form = match self.form.as_str() {
            "prox-data" => InstanceForm::ProxData,
            "smooth-data" => InstanceForm::SmoothData,
            "l2-reg" => InstanceForm::L2Reg,
            other => {
                return Err(SplitError::Config(format!(
                    "unknown instance form '{other}'"
                )))
            }
        };
        Ok(InstanceSpec {
            generator: GeneratorId::parse(&self.generator)?,
            seed: self.seed,
            primal_dim: self.primal_dim,
            data_rows: self.data_rows,
            weight: self.weight,
            form,
            l_smoothing: self.l_smoothing,
        })
    }
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    /// Load an instance JSON instead of generating one
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[command(flatten)]
    pub gen: InstanceArgs,
    /// ppa | fbs | prs | fbf
    #[arg(long, default_value = "fbs")]
    pub algo: String,
    #[arg(long, default_value_t = 1)]
    pub level: u8,
    /// 1 | 2 | 0 for the identity metric
    #[arg(long, default_value_t = 1)]
    pub metric_class: u8,
    /// Splitting weight of the metric (and of PRS)
    #[arg(long, default_value_t = 1.0)]
    pub w: f64,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// Run a validated decreasing metric family instead of a constant one
    #[arg(long, default_value_t = false)]
    pub decreasing_metric: bool,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1000)]
    pub budget: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub stop_fpr: f64,
    #[arg(long, default_value_t = 8)]
    pub probes: usize,
    /// Run the full bound-check battery
    #[arg(long, default_value_t = false)]
    pub check_bounds: bool,
    /// closed-form | reference | auto
    #[arg(long, default_value = "auto")]
    pub oracle: String,
    /// Output directory for trace.csv and report.json
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl SolveArgs {
    pub fn to_runspec(&self) -> Result<RunSpec> {
        let algorithm = match self.algo.as_str() {
            "ppa" => Algorithm::Ppa,
            "fbs" => Algorithm::Fbs,
            "prs" => Algorithm::Prs,
            "fbf" => Algorithm::Fbf,
            other => return Err(SplitError::Config(format!("unknown algorithm '{other}'"))),
        };
        let level = match self.level {
            1 => Level::One,
            2 => Level::Two,
            other => return Err(SplitError::Config(format!("level must be 1 or 2, got {other}"))),
        };
        let metric = match self.metric_class {
            0 => MetricChoice::Identity,
            1 => MetricChoice::Class1,
            2 => MetricChoice::Class2,
            other => {
                return Err(SplitError::Config(format!(
                    "metric class must be 0 (identity), 1, or 2; got {other}"
                )))
            }
        };
        let oracle = match self.oracle.as_str() {
            "auto" => OraclePolicy::Auto,
            "closed-form" => OraclePolicy::ClosedForm,
            "reference" => OraclePolicy::Reference,
            other => return Err(SplitError::Config(format!("unknown oracle policy '{other}'"))),
        };
        Ok(RunSpec {
            instance: self.gen.to_spec()?,
            algorithm,
            level,
            metric,
            metric_w: self.w,
            tau: self.tau,
            sigma: self.sigma,
            variation: if self.decreasing_metric {
                MetricVariation::Decreasing {
                    amp: 0.5,
                    ratio: 0.5,
                }
            } else {
                MetricVariation::Constant
            },
            gamma: self.gamma,
            lambda: self.lambda,
            prs_w: self.w,
            budget: self.budget,
            stop_fpr: self.stop_fpr,
            probes: self.probes,
            check_bounds: self.check_bounds,
            oracle,
        })
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a problem instance and write its JSON document
    Generate {
        #[command(flatten)]
        gen: InstanceArgs,
        #[arg(long, default_value = "instance.json")]
        out: PathBuf,
    },
    /// Run one algorithm on an instance and write trace + report artifacts
    Solve(SolveArgs),
    /// Compare library PPA (metric class 1, w = 1) against an independently
    /// coded two-line primal-dual loop
    CompareCp {
        #[command(flatten)]
        gen: InstanceArgs,
        #[arg(long, default_value_t = 0.0, help = "0 picks 0.9/||B||")]
        tau: f64,
        #[arg(long, default_value_t = 0.0, help = "0 picks 0.9/||B||")]
        sigma: f64,
        #[arg(long, default_value_t = 500)]
        budget: usize,
    },
    /// Summarize the artifacts of a finished run directory
    Report {
        #[arg(long, default_value = "out")]
        dir: PathBuf,
    },
    /// Validate the metric sequence a solve configuration would use
    ValidateMetrics {
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, default_value_t = 50)]
        horizon: usize,
    },
}

pub fn main_inner(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Generate { gen, out } => {
            let spec = gen.to_spec()?;
            let (mp, oracle) = generate(&spec)?;
            crate::generators::integrity_check(&mp)?;
            let doc = InstanceDoc::from_model(&mp, None);
            fs::write(&out, serde_json::to_string_pretty(&doc)?)?;
            println!(
                "wrote {} ({} primal dims, {} dual blocks, oracle: {:?})",
                out.display(),
                mp.primal_dim(),
                mp.n_duals(),
                oracle.kind
            );
            Ok(0)
        }
        Command::Solve(args) => {
            let spec = args.to_runspec()?;
            if let Some(path) = &args.instance {
                // instance JSONs reproduce externally generated problems; the
                // run still needs generator metadata for oracles, so this
                // path only checks the file round-trips into a valid model
                let text = fs::read_to_string(path)?;
                let doc: InstanceDoc = serde_json::from_str(&text)?;
                let (mp, _) = doc.to_model()?;
                crate::generators::integrity_check(&mp)?;
            }
            let (output, mp) = execute(&spec)?;
            fs::create_dir_all(&args.out)?;
            let mut csv = Vec::new();
            pdsplit::diag::write_csv(&output.records, &mut csv)?;
            fs::write(args.out.join("trace.csv"), &csv)?;
            let report = output.report_json(&spec);
            fs::write(
                args.out.join("report.json"),
                serde_json::to_string_pretty(&report)?,
            )?;
            let doc = InstanceDoc::from_model(&mp, None);
            fs::write(
                args.out.join("instance.json"),
                serde_json::to_string_pretty(&doc)?,
            )?;
            println!("{}", summarize(&output.records, Some(&report))?);
            for check in &output.checks {
                println!("{}", check.line());
            }
            if output.all_pass() {
                Ok(0)
            } else {
                let failures: Vec<String> = output
                    .failing()
                    .iter()
                    .map(|c| {
                        format!(
                            "{} (first violation at k = {:?})",
                            c.name, c.first_violation
                        )
                    })
                    .collect();
                eprintln!("FAILED CHECKS: {}", failures.join("; "));
                Ok(1)
            }
        }
        Command::CompareCp {
            gen,
            tau,
            sigma,
            budget,
        } => {
            let mut spec = gen.to_spec()?;
            spec.form = InstanceForm::ProxData;
            let (mp, _) = generate(&spec)?;
            let norm = mp.b.opnorm();
            let tau = if tau > 0.0 { tau } else { 0.9 / norm };
            let sigma = if sigma > 0.0 { sigma } else { 0.9 / norm };
            let dev = compare_chambolle_pock(&mp, tau, sigma, budget)?;
            println!(
                "max per-iterate deviation over {budget} iterations: {dev:.6e} (tolerance {CP_EQUIVALENCE_TOL:.1e})"
            );
            Ok(if dev <= CP_EQUIVALENCE_TOL { 0 } else { 1 })
        }
        Command::Report { dir } => {
            let csv_path = dir.join("trace.csv");
            let text = fs::read_to_string(&csv_path).map_err(|e| {
                SplitError::Io(std::io::Error::new(
                    e.kind(),
                    format!("{}: {e}", csv_path.display()),
                ))
            })?;
            let records = pdsplit::diag::read_csv(&text)?;
            let report: Option<serde_json::Value> = fs::read_to_string(dir.join("report.json"))
                .ok()
                .and_then(|t| serde_json::from_str(&t).ok());
            let summary = summarize(&records, report.as_ref())?;
            print!("{summary}");
            let violated = summary.contains("VIOLATION") || summary.contains("VIOLATED");
            Ok(if violated { 1 } else { 0 })
        }
        Command::ValidateMetrics { solve, horizon } => {
            let spec = solve.to_runspec()?;
            let (mp, _) = generate(&spec.instance)?;
            let split = mp.build_split(spec.level)?;
            let metrics = build_metrics(&spec, &split)?;
            let report = validate_sequence(&metrics, horizon);
            println!("{}", report.summary());
            for step in report.steps.iter().take(10) {
                println!(
                    "  k = {:>3}: declared eta = {:.3e}, tightest eta = {:.3e}, min eig slack = {:+.3e}",
                    step.k, step.declared_eta, step.tightest_eta, step.min_eig
                );
            }
            Ok(if report.ok() { 0 } else { 1 })
        }
    }
}

/// Exercised by integration tests; `main` delegates here.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return 2;
        }
    };
    match main_inner(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

