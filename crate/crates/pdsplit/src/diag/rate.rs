use crate::error::{Result, SplitError};

/// Least-squares log-log slope of a positive series over a tail window.
#[derive(Debug, Clone)]
pub struct RateReport {
    /// Fitted slope of log(value) against log(k+1); None when the tail
    /// converged exactly to zero.
    pub slope: Option<f64>,
    pub intercept: f64,
    pub n_tail: usize,
    /// Nonpositive entries trimmed from the tail before fitting.
    pub n_trimmed: usize,
    pub converged_exactly: bool,
}

/// Deterministic least squares of log(value) vs log(k+1) over the last
/// `tail_fraction` of the series. Nonpositive values are trimmed and noted;
/// an all-zero tail yields the converged-exactly flag with no slope.
pub fn fit_rate_slope(series: &[(usize, f64)], tail_fraction: f64) -> Result<RateReport> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(SplitError::Config(format!(
            "tail fraction {tail_fraction} must lie in (0, 1]"
        )));
    }
    let n_tail = ((series.len() as f64) * tail_fraction).ceil() as usize;
    let tail = &series[series.len().saturating_sub(n_tail)..];
    let kept: Vec<(f64, f64)> = tail
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|&(k, v)| (((k + 1) as f64).ln(), v.ln()))
        .collect();
    let n_trimmed = tail.len() - kept.len();
    if kept.is_empty() {
        return Ok(RateReport {
            slope: None,
            intercept: 0.0,
            n_tail: tail.len(),
            n_trimmed,
            converged_exactly: true,
        });
    }
    if kept.len() < 10 {
        return Err(SplitError::Config(format!(
            "rate fit needs at least 10 positive tail points, got {}",
            kept.len()
        )));
    }
    let n = kept.len() as f64;
    let sx: f64 = kept.iter().map(|(x, _)| x).sum();
    let sy: f64 = kept.iter().map(|(_, y)| y).sum();
    let sxx: f64 = kept.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = kept.iter().map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(SplitError::Config(
            "rate fit is degenerate: all abscissae coincide".into(),
        ));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    Ok(RateReport {
        slope: Some(slope),
        intercept,
        n_tail: tail.len(),
        n_trimmed,
        converged_exactly: false,
    })
}
