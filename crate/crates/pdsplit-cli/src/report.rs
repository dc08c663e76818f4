//! Human-readable summaries of run artifacts: bound satisfaction per
//! k-decile, fitted slopes, oracle gaps.

use pdsplit::diag::{fit_rate_slope, TraceRecord};
use pdsplit::error::Result;

fn decile_table(records: &[TraceRecord]) -> String {
    let n = records.len();
    let mut out = String::new();
    out.push_str("decile       k-range      ergodic gap <= rhs    nonergodic gap <= rhs\n");
    for dec in 0..10 {
        let lo = dec * n / 10;
        let hi = ((dec + 1) * n / 10).max(lo + 1).min(n);
        if lo >= n {
            break;
        }
        let slice = &records[lo..hi];
        let erg_ok = slice
            .iter()
            .all(|r| r.gap_ergodic_at_oracle <= r.ergodic_bound_rhs + 1e-8);
        let non_status = if slice.iter().all(|r| r.nonergodic_bound_rhs.is_none()) {
            "n/a".to_string()
        } else {
            let ok = slice.iter().all(|r| match r.nonergodic_bound_rhs {
                Some(rhs) => r.gap_at_oracle <= rhs + 1e-8,
                None => true,
            });
            if ok { "yes".into() } else { "VIOLATED".into() }
        };
        out.push_str(&format!(
            "{:>6}  {:>6}..{:<6}  {:>18}  {:>22}\n",
            dec + 1,
            slice.first().map(|r| r.k).unwrap_or(0),
            slice.last().map(|r| r.k).unwrap_or(0),
            if erg_ok { "yes" } else { "VIOLATED" },
            non_status,
        ));
    }
    out
}

fn first_failure(records: &[TraceRecord]) -> Option<(&'static str, usize)> {
    for r in records {
        if r.gap_ergodic_at_oracle > r.ergodic_bound_rhs + 1e-8 {
            return Some(("ergodic-gap-bound", r.k));
        }
        if let Some(rhs) = r.nonergodic_bound_rhs {
            if r.gap_at_oracle > rhs + 1e-8 {
                return Some(("nonergodic-gap-bound", r.k));
            }
        }
        if r.gap_at_oracle < -1e-10 {
            return Some(("gap-nonnegative-at-oracle", r.k));
        }
    }
    None
}

/// Render the deterministic text summary of a trace plus its report JSON.
pub fn summarize(records: &[TraceRecord], report: Option<&serde_json::Value>) -> Result<String> {
    if records.is_empty() {
        return Ok("no iterations recorded\n".to_string());
    }
    let mut out = String::new();
    let failure = first_failure(records);
    let json_pass = report
        .and_then(|r| r.get("all_pass"))
        .and_then(|v| v.as_bool());
    match (failure, json_pass) {
        (None, Some(true) | None) => out.push_str("=== ALL BOUNDS SATISFIED ===\n"),
        (None, Some(false)) => {
            out.push_str("=== CHECK FAILURES RECORDED IN REPORT ===\n");
            if let Some(checks) = report.and_then(|r| r.get("checks")).and_then(|c| c.as_array()) {
                for c in checks {
                    if c.get("pass").and_then(|v| v.as_bool()) == Some(false) {
                        out.push_str(&format!(
                            "failing check: {} (first violation at k = {})\n",
                            c.get("name").and_then(|v| v.as_str()).unwrap_or("?"),
                            c.get("first_violation")
                                .map(|v| v.to_string())
                                .unwrap_or_else(|| "?".into()),
                        ));
                    }
                }
            }
        }
        (Some((name, k)), _) => {
            out.push_str(&format!(
                "=== BOUND VIOLATION: {name} first fails at k = {k} ===\n"
            ));
        }
    }
    out.push_str(&format!("iterations: {}\n", records.len()));
    out.push('\n');
    out.push_str(&decile_table(records));
    out.push('\n');

    // fitted slopes from the stored columns
    let fpr_series: Vec<(usize, f64)> = records.iter().map(|r| (r.k, r.fpr_sq)).collect();
    match fit_rate_slope(&fpr_series, 0.5) {
        Ok(r) => match r.slope {
            Some(s) => {
                out.push_str(&format!("fpr_sq tail slope: {s:+.4}"));
                if s < -1.5 {
                    out.push_str("  (linear convergence detected)");
                }
                out.push('\n');
            }
            None => out.push_str("fpr_sq tail slope: converged exactly\n"),
        },
        Err(e) => out.push_str(&format!("fpr_sq tail slope: unavailable ({e})\n")),
    }
    let gap_series: Vec<(usize, f64)> = records
        .iter()
        .map(|r| (r.k, r.gap_ergodic_at_oracle.max(0.0)))
        .collect();
    match fit_rate_slope(&gap_series, 0.5) {
        Ok(r) => match r.slope {
            Some(s) => out.push_str(&format!("ergodic gap tail slope: {s:+.4}\n")),
            None => out.push_str("ergodic gap tail slope: converged exactly\n"),
        },
        Err(e) => out.push_str(&format!("ergodic gap tail slope: unavailable ({e})\n")),
    }

    if let Some(report) = report {
        if let Some(gap) = report.get("objective_gap").and_then(|v| v.as_f64()) {
            out.push_str(&format!("objective gap vs oracle: {gap:+.3e}\n"));
        }
        if let Some(oracle) = report.get("oracle").and_then(|v| v.as_str()) {
            out.push_str(&format!("oracle: {oracle}\n"));
        }
    }
    let last = records.last().unwrap();
    out.push_str(&format!(
        "final: fpr_sq = {:.3e}, gap_at_oracle = {:+.3e}, sigma_k = {:.6}\n",
        last.fpr_sq, last.gap_at_oracle, last.sigma_k
    ));
    Ok(out)
}
