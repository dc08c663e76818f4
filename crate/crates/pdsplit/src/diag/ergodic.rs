use crate::engine::steppers::SchemeState;
use crate::error::{Result, SplitError};
use crate::space::point::{Layout, ProductPoint};

/// Streaming weighted averages x_bar^k = (1/Sigma_k) sum_i gamma_i lambda_i x^i
/// for the three evaluation-point families of a run.
#[derive(Debug, Clone)]
pub struct ErgodicAccumulator {
    sigma: f64,
    sum_f: ProductPoint,
    sum_g: ProductPoint,
    sum_s: ProductPoint,
    count: usize,
}

impl ErgodicAccumulator {
    pub fn new(layout: &Layout) -> Self {
        ErgodicAccumulator {
            sigma: 0.0,
            sum_f: ProductPoint::zeros(layout),
            sum_g: ProductPoint::zeros(layout),
            sum_s: ProductPoint::zeros(layout),
            count: 0,
        }
    }

    pub fn push(&mut self, state: &SchemeState) -> Result<()> {
        let weight = state.gamma * state.lambda;
        if weight <= 0.0 {
            return Err(SplitError::Config(format!(
                "nonpositive ergodic weight gamma*lambda = {weight} at k = {}",
                state.k
            )));
        }
        self.sigma += weight;
        self.sum_f.axpy_mut(weight, &state.x_f);
        self.sum_g.axpy_mut(weight, &state.x_g);
        self.sum_s.axpy_mut(weight, &state.x_s);
        self.count += 1;
        Ok(())
    }

    /// Sigma_k, strictly increasing in k.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean_f(&self) -> ProductPoint {
        self.sum_f.scale(1.0 / self.sigma)
    }

    pub fn mean_g(&self) -> ProductPoint {
        self.sum_g.scale(1.0 / self.sigma)
    }

    pub fn mean_s(&self) -> ProductPoint {
        self.sum_s.scale(1.0 / self.sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn state(k: usize, x: f64, gamma: f64, lambda: f64) -> SchemeState {
        let p = ProductPoint::new(vec![dvector![x]]);
        SchemeState {
            k,
            z: p.clone(),
            z_next: p.clone(),
            x_f: p.clone(),
            x_g: p.scale(2.0),
            x_s: p.scale(-1.0),
            grad_f_tilde: p.clone(),
            grad_g_tilde: p.clone(),
            gamma,
            lambda,
            fpr_sq: 0.0,
        }
    }

    #[test]
    fn matches_offline_recomputation() {
        let layout = Layout::new(vec![1]);
        let mut acc = ErgodicAccumulator::new(&layout);
        let states: Vec<SchemeState> = (0..50)
            .map(|k| state(k, (k as f64 * 0.37).sin(), 0.5 + 0.01 * k as f64, 1.3))
            .collect();
        let mut last_sigma = 0.0;
        for s in &states {
            acc.push(s).unwrap();
            assert!(acc.sigma() > last_sigma, "Sigma_k must strictly increase");
            last_sigma = acc.sigma();
        }
        let sigma: f64 = states.iter().map(|s| s.gamma * s.lambda).sum();
        let offline: f64 = states
            .iter()
            .map(|s| s.gamma * s.lambda * s.x_f.block(0)[0])
            .sum::<f64>()
            / sigma;
        assert!((acc.mean_f().block(0)[0] - offline).abs() < 1e-12);
        let offline_g: f64 = states
            .iter()
            .map(|s| s.gamma * s.lambda * s.x_g.block(0)[0])
            .sum::<f64>()
            / sigma;
        assert!((acc.mean_g().block(0)[0] - offline_g).abs() < 1e-12);
    }
}
