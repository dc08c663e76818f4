use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::diag::bounds::BoundContext;
use crate::diag::ergodic::ErgodicAccumulator;
use crate::diag::gap::pre_gap_at;
use crate::diag::replay::kappa_u;
use crate::engine::config::{Algorithm, ValidatedConfig};
use crate::engine::run::Trace;
use crate::error::{Result, SplitError};
use crate::model::problem::{ModelProblem, SplitProblem};

/// Per-iteration diagnostic row; the CSV column order is fixed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub fpr_sq: f64,
    pub gap_at_oracle: f64,
    pub gap_ergodic_at_oracle: f64,
    pub primal_obj: Option<f64>,
    pub dual_obj: Option<f64>,
    pub ergodic_bound_rhs: f64,
    pub nonergodic_bound_rhs: Option<f64>,
    pub kappa_u: f64,
    pub sigma_k: f64,
}

pub const CSV_HEADER: &str = "k,fpr_sq,gap_at_oracle,gap_ergodic_at_oracle,primal_obj,dual_obj,ergodic_bound_rhs,nonergodic_bound_rhs,kappa_u,sigma_k";

/// Assemble the per-iteration diagnostics of a finished run.
pub fn build_trace_records(
    problem: &SplitProblem,
    cfg: &ValidatedConfig,
    trace: &Trace,
    ctx: &BoundContext,
    model: Option<&ModelProblem>,
) -> Result<Vec<TraceRecord>> {
    let nonergodic_available = cfg.algorithm != Algorithm::Fbf
        && cfg.metrics.is_constant()
        && cfg.gamma.is_constant()
        && cfg.tau_lower().map(|t| t > 0.0).unwrap_or(false);
    let mut acc = ErgodicAccumulator::new(&problem.layout);
    let mut records = Vec::with_capacity(trace.states.len());
    for state in &trace.states {
        acc.push(state)?;
        let gap_at_oracle = pre_gap_at(problem, &state.x_f, &ctx.z_star);
        let xbar = acc.mean_f();
        let gap_ergodic = pre_gap_at(problem, &xbar, &ctx.z_star);
        let (primal_obj, dual_obj) = match model {
            Some(mp) => {
                let x = state.x_f.block(0);
                let ys: Vec<nalgebra::DVector<f64>> = (1..=mp.n_duals())
                    .map(|i| state.x_f.block(i).clone())
                    .collect();
                let p = mp.primal_objective(x).ok().filter(|v| v.is_finite());
                let d = mp.dual_objective(&ys).ok().filter(|v| v.is_finite());
                (p, d)
            }
            None => (None, None),
        };
        let record = TraceRecord {
            k: state.k,
            fpr_sq: state.fpr_sq,
            gap_at_oracle,
            gap_ergodic_at_oracle: gap_ergodic,
            primal_obj,
            dual_obj,
            ergodic_bound_rhs: ctx.ergodic_rhs(acc.sigma(), &ctx.z_star)?,
            nonergodic_bound_rhs: if nonergodic_available {
                Some(ctx.nonergodic_rhs(state.k, &ctx.z_star)?)
            } else {
                None
            },
            kappa_u: kappa_u(problem, state),
            sigma_k: acc.sigma(),
        };
        if !(record.fpr_sq >= 0.0)
            || !record.fpr_sq.is_finite()
            || !record.gap_at_oracle.is_finite()
            || !record.sigma_k.is_finite()
            || !record.kappa_u.is_finite()
        {
            return Err(SplitError::NonFinite(format!(
                "trace record at k = {} carries a non-finite value",
                state.k
            )));
        }
        records.push(record);
    }
    Ok(records)
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.17e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => fmt_f64(x),
        None => String::new(),
    }
}

/// Write the fixed-column CSV trace.
pub fn write_csv<W: Write>(records: &[TraceRecord], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.k,
            fmt_f64(r.fpr_sq),
            fmt_f64(r.gap_at_oracle),
            fmt_f64(r.gap_ergodic_at_oracle),
            fmt_opt(r.primal_obj),
            fmt_opt(r.dual_obj),
            fmt_f64(r.ergodic_bound_rhs),
            fmt_opt(r.nonergodic_bound_rhs),
            fmt_f64(r.kappa_u),
            fmt_f64(r.sigma_k),
        )?;
    }
    Ok(())
}

/// Parse a CSV trace written by `write_csv`.
pub fn read_csv(text: &str) -> Result<Vec<TraceRecord>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| SplitError::Config("empty trace file".into()))?;
    if header.trim() != CSV_HEADER {
        return Err(SplitError::Config(format!(
            "unexpected trace header: {header}"
        )));
    }
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 10 {
            return Err(SplitError::Config(format!(
                "trace line {} has {} columns",
                lineno + 2,
                cols.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| SplitError::Config(format!("bad number '{s}': {e}")))
        };
        let parse_opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse(s).map(Some)
            }
        };
        out.push(TraceRecord {
            k: cols[0]
                .parse()
                .map_err(|e| SplitError::Config(format!("bad k: {e}")))?,
            fpr_sq: parse(cols[1])?,
            gap_at_oracle: parse(cols[2])?,
            gap_ergodic_at_oracle: parse(cols[3])?,
            primal_obj: parse_opt(cols[4])?,
            dual_obj: parse_opt(cols[5])?,
            ergodic_bound_rhs: parse(cols[6])?,
            nonergodic_bound_rhs: parse_opt(cols[7])?,
            kappa_u: parse(cols[8])?,
            sigma_k: parse(cols[9])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_and_determinism() {
        let records = vec![
            TraceRecord {
                k: 0,
                fpr_sq: 0.125,
                gap_at_oracle: 1.0 / 3.0,
                gap_ergodic_at_oracle: 0.25,
                primal_obj: Some(1.5),
                dual_obj: None,
                ergodic_bound_rhs: 2.0,
                nonergodic_bound_rhs: Some(3.0),
                kappa_u: -0.5,
                sigma_k: 1.0,
            },
            TraceRecord {
                k: 1,
                fpr_sq: 0.0625,
                gap_at_oracle: 0.1,
                gap_ergodic_at_oracle: 0.05,
                primal_obj: None,
                dual_obj: None,
                ergodic_bound_rhs: 1.0,
                nonergodic_bound_rhs: None,
                kappa_u: -0.25,
                sigma_k: 2.0,
            },
        ];
        let mut buf_a = Vec::new();
        write_csv(&records, &mut buf_a).unwrap();
        let mut buf_b = Vec::new();
        write_csv(&records, &mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b, "byte-identical output");
        let text = String::from_utf8(buf_a).unwrap();
        let parsed = read_csv(&text).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].fpr_sq, records[0].fpr_sq);
        assert_eq!(parsed[0].gap_at_oracle, records[0].gap_at_oracle);
        assert_eq!(parsed[1].nonergodic_bound_rhs, None);
        assert_eq!(parsed[0].primal_obj, Some(1.5));
    }
}
