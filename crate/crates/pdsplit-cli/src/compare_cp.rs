//! Per-iterate comparison of the library's proximal-point stepper under the
//! first metric class (w = 1) against an independently coded two-line
//! primal-dual loop.


use pdsplit::engine::{run, Algorithm, AlgorithmConfig, ValidatedConfig};
use pdsplit::error::{Result, SplitError};
use pdsplit::model::{build_metric, Level, MetricClassConfig, ModelProblem};
use pdsplit::ops::ProxFn;
use pdsplit::space::{MetricSequence, ProductPoint};

use std::sync::Arc;

/// Hand-rolled prox of the supported primal functions; explicit loops on
/// purpose, so this path shares no code with the catalog.
fn ind_prox_f(f: &ProxFn, step: f64, v: &[f64]) -> Result<Vec<f64>> {
    match f {
        ProxFn::Zero => Ok(v.to_vec()),
        ProxFn::L1 { weight } => {
            let t = step * weight;
            Ok(v.iter()
                .map(|&u| {
                    if u > t {
                        u - t
                    } else if u < -t {
                        u + t
                    } else {
                        0.0
                    }
                })
                .collect())
        }
        ProxFn::IndicatorBox { lo, hi } => Ok(v
            .iter()
            .enumerate()
            .map(|(i, &u)| u.max(lo[i]).min(hi[i]))
            .collect()),
        ProxFn::IndicatorOrthant => Ok(v.iter().map(|&u| u.max(0.0)).collect()),
        ProxFn::Quadratic { weight, center, .. } => Ok(v
            .iter()
            .enumerate()
            .map(|(i, &u)| (step * weight * center[i] + u) / (step * weight + 1.0))
            .collect()),
        other => Err(SplitError::Capability(format!(
            "independent loop has no prox for {}",
            other.kind_name()
        ))),
    }
}

/// prox of sigma h* via the Moreau identity prox_{s h*}(u) = u - s prox_{h/s}(u/s).
fn ind_prox_hstar(h: &ProxFn, sigma: f64, v: &[f64]) -> Result<Vec<f64>> {
    let scaled: Vec<f64> = v.iter().map(|&u| u / sigma).collect();
    let inner = ind_prox_f(h, 1.0 / sigma, &scaled)?;
    Ok(v.iter()
        .zip(&inner)
        .map(|(&u, &p)| u - sigma * p)
        .collect())
}

/// The independently coded loop:
/// x+ = prox_{tau f}(x - tau A^T y); y+ = prox_{sigma h*}(y + sigma A (2x+ - x)).
fn independent_loop(
    mp: &ModelProblem,
    tau: f64,
    sigma: f64,
    budget: usize,
    x0: &[f64],
    y0: &[f64],
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let a = mp.b.block(0);
    let m = a.ncols();
    let d = a.nrows();
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut iterates = Vec::with_capacity(budget);
    for _ in 0..budget {
        // u = x - tau * A^T y, explicit loops
        let mut u = vec![0.0; m];
        for j in 0..m {
            let mut acc = 0.0;
            for i in 0..d {
                acc += a[(i, j)] * y[i];
            }
            u[j] = x[j] - tau * acc;
        }
        let x_next = ind_prox_f(&mp.f, tau, &u)?;
        // v = y + sigma * A (2 x+ - x)
        let mut v = vec![0.0; d];
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..m {
                acc += a[(i, j)] * (2.0 * x_next[j] - x[j]);
            }
            v[i] = y[i] + sigma * acc;
        }
        let y_next = ind_prox_hstar(&mp.pairs[0].h, sigma, &v)?;
        x = x_next;
        y = y_next;
        iterates.push((x.clone(), y.clone()));
    }
    Ok(iterates)
}

/// Run the library PPA under the first metric class (V_0 = I/tau, V = I/sigma,
/// w = 1) and the independent loop from the same start, returning the largest
/// per-iterate Euclidean deviation.
pub fn compare_chambolle_pock(
    mp: &ModelProblem,
    tau: f64,
    sigma: f64,
    budget: usize,
) -> Result<f64> {
    if mp.n_duals() != 1 {
        return Err(SplitError::Config(
            "the comparison needs a single dual block".into(),
        ));
    }
    let split = mp.build_split(Level::One)?;
    let cfg_metric = MetricClassConfig::class1_uniform(1.0, tau, sigma, 1);
    let u = build_metric(&cfg_metric, split.skew.b(), &split.layout)?;
    let metrics = MetricSequence::constant(Arc::new(u));
    let cfg = ValidatedConfig::validate(
        &split,
        AlgorithmConfig::new(Algorithm::Ppa, 1.0, 1.0, metrics),
        budget,
    )?;
    let z0 = ProductPoint::zeros(&split.layout);
    let trace = run(&split, &cfg, &z0, budget, 0.0)?;

    let m = mp.primal_dim();
    let d = mp.b.dual_dims()[0];
    let iterates = independent_loop(mp, tau, sigma, budget, &vec![0.0; m], &vec![0.0; d])?;

    let mut worst = 0.0_f64;
    for (state, (xi, yi)) in trace.states.iter().zip(&iterates) {
        let lib = &state.z_next;
        let x_dev: f64 = lib
            .block(0)
            .iter()
            .zip(xi)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let y_dev: f64 = lib
            .block(1)
            .iter()
            .zip(yi)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        worst = worst.max((x_dev + y_dev).sqrt());
    }
    Ok(worst)
}

/// Deviation expected of a genuinely equivalent pairing.
pub const CP_EQUIVALENCE_TOL: f64 = 1e-12;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, GeneratorId, InstanceForm, InstanceSpec};
    use nalgebra::dvector;

    #[test]
    fn lasso_equivalence() {
        let spec = InstanceSpec::new(GeneratorId::Lasso, 11).with_form(InstanceForm::ProxData);
        let (mp, _) = generate(&spec).unwrap();
        let norm = mp.b.opnorm();
        let tau = 0.9 / norm;
        let sigma = 0.9 / norm;
        let dev = compare_chambolle_pock(&mp, tau, sigma, 200).unwrap();
        assert!(dev <= CP_EQUIVALENCE_TOL, "deviation {dev:.3e}");
    }

    #[test]
    fn rejects_expansive_stepsizes() {
        let spec = InstanceSpec::new(GeneratorId::Lasso, 11).with_form(InstanceForm::ProxData);
        let (mp, _) = generate(&spec).unwrap();
        let norm = mp.b.opnorm();
        let bad = 1.2 / norm;
        assert!(compare_chambolle_pock(&mp, bad, bad, 10).is_err());
    }

    #[test]
    fn zero_data_instance_stays_at_origin() {
        use pdsplit::model::DualPair;
        use pdsplit::ops::BlockLinearMap;
        use nalgebra::dmatrix;
        let mp = ModelProblem {
            f: ProxFn::L1 { weight: 0.5 },
            g: ProxFn::Zero,
            pairs: vec![DualPair::plain(
                ProxFn::quadratic(1.0, dvector![0.0, 0.0]),
                2,
            )],
            b: Arc::new(BlockLinearMap::new(vec![dmatrix![0.6, 0.1; -0.2, 0.5]]).unwrap()),
        };
        let dev = compare_chambolle_pock(&mp, 0.8, 0.8, 50).unwrap();
        assert_eq!(dev, 0.0, "both loops stay at z0 = 0");
    }
}
