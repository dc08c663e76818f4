use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Result, SplitError};
use crate::space::metric::BlockMetric;
use crate::space::point::ProductPoint;

/// Feasibility slack for indicator values: prox outputs are feasible up to
/// floating-point rounding, and ergodic averages of feasible points can drift
/// by a few ulps.
const FEAS_TOL: f64 = 1e-9;

/// Closed proper convex functions on a single block with exact proximal maps.
#[derive(Debug, Clone)]
pub enum ProxFn {
    Zero,
    /// Indicator of the box [lo, hi] (entries may be infinite).
    IndicatorBox { lo: DVector<f64>, hi: DVector<f64> },
    /// Indicator of the nonnegative orthant.
    IndicatorOrthant,
    /// Indicator of the affine set { x : E x = d }.
    IndicatorAffine { e: DMatrix<f64>, d: DVector<f64> },
    /// Indicator of the single point {p}.
    IndicatorPoint { p: DVector<f64> },
    /// Indicator of the Euclidean ball of the given radius.
    IndicatorL2Ball { radius: f64 },
    /// (weight/2) ||x - center||^2 + constant.
    Quadratic {
        weight: f64,
        center: DVector<f64>,
        constant: f64,
    },
    /// (1/2) ||A x - b||^2.
    LeastSquares { a: DMatrix<f64>, b: DVector<f64> },
    /// weight * ||x||_1.
    L1 { weight: f64 },
    /// weight * ||x||_2.
    L2 { weight: f64 },
    /// sum over disjoint groups of weight_g * ||x_g||_2.
    GroupL2 { groups: Vec<(Vec<usize>, f64)> },
    /// Fenchel conjugate of a catalog entry with no simpler closed form.
    Conjugate(Box<ProxFn>),
}

impl ProxFn {
    pub fn quadratic(weight: f64, center: DVector<f64>) -> Self {
        ProxFn::Quadratic {
            weight,
            center,
            constant: 0.0,
        }
    }

    pub fn indicator_zero(dim: usize) -> Self {
        ProxFn::IndicatorPoint {
            p: DVector::zeros(dim),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ProxFn::Zero)
    }

    /// The conjugate as a catalog entry, in closed form where one exists and
    /// as a `Conjugate` wrapper (Moreau-decomposition prox) otherwise. `dim`
    /// is the block dimension the function acts on.
    pub fn conjugate(&self, dim: usize) -> ProxFn {
        match self {
            ProxFn::Zero => ProxFn::indicator_zero(dim),
            ProxFn::IndicatorPoint { p } if p.amax() == 0.0 => ProxFn::Zero,
            ProxFn::L1 { weight } => ProxFn::IndicatorBox {
                lo: DVector::from_element(dim, -*weight),
                hi: DVector::from_element(dim, *weight),
            },
            ProxFn::L2 { weight } => ProxFn::IndicatorL2Ball { radius: *weight },
            ProxFn::IndicatorL2Ball { radius } => ProxFn::L2 { weight: *radius },
            ProxFn::Quadratic {
                weight,
                center,
                constant,
            } => ProxFn::Quadratic {
                weight: 1.0 / weight,
                center: center * -*weight,
                constant: -constant - 0.5 * weight * center.norm_squared(),
            },
            ProxFn::IndicatorOrthant => ProxFn::IndicatorBox {
                lo: DVector::from_element(dim, f64::NEG_INFINITY),
                hi: DVector::zeros(dim),
            },
            ProxFn::IndicatorBox { lo, hi } => {
                let t = hi[0];
                let symmetric =
                    (0..dim).all(|i| hi[i] == t && lo[i] == -t) && t.is_finite() && t >= 0.0;
                let nonpos = (0..dim).all(|i| hi[i] == 0.0 && lo[i] == f64::NEG_INFINITY);
                if symmetric {
                    ProxFn::L1 { weight: t }
                } else if nonpos {
                    ProxFn::IndicatorOrthant
                } else {
                    ProxFn::Conjugate(Box::new(self.clone()))
                }
            }
            ProxFn::Conjugate(inner) => inner.as_ref().clone(),
            _ => ProxFn::Conjugate(Box::new(self.clone())),
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            ProxFn::Zero => 0.0,
            ProxFn::IndicatorBox { lo, hi } => {
                let tol = FEAS_TOL * (1.0 + x.amax());
                for i in 0..x.len() {
                    if x[i] < lo[i] - tol || x[i] > hi[i] + tol {
                        return f64::INFINITY;
                    }
                }
                0.0
            }
            ProxFn::IndicatorOrthant => {
                let tol = FEAS_TOL * (1.0 + x.amax());
                if x.iter().all(|&v| v >= -tol) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxFn::IndicatorAffine { e, d } => {
                let tol = FEAS_TOL * (1.0 + x.amax());
                if (e * x - d).amax() <= tol {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxFn::IndicatorPoint { p } => {
                let tol = FEAS_TOL * (1.0 + x.amax());
                if (x - p).amax() <= tol {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxFn::IndicatorL2Ball { radius } => {
                if x.norm() <= radius + FEAS_TOL * (1.0 + radius) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxFn::Quadratic {
                weight,
                center,
                constant,
            } => 0.5 * weight * (x - center).norm_squared() + constant,
            ProxFn::LeastSquares { a, b } => 0.5 * (a * x - b).norm_squared(),
            ProxFn::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
            ProxFn::L2 { weight } => weight * x.norm(),
            ProxFn::GroupL2 { groups } => groups
                .iter()
                .map(|(idx, w)| {
                    w * idx.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt()
                })
                .sum(),
            ProxFn::Conjugate(inner) => inner.conjugate_value(x),
        }
    }

    /// f*(y) in closed form, used by the Conjugate wrapper's value oracle.
    fn conjugate_value(&self, y: &DVector<f64>) -> f64 {
        match self {
            ProxFn::Zero => {
                // conj of 0 is the indicator of {0}
                let tol = FEAS_TOL * (1.0 + y.amax());
                if y.amax() <= tol {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxFn::IndicatorBox { lo, hi } => {
                // support function of the box
                let mut total = 0.0;
                for i in 0..y.len() {
                    let v = y[i];
                    if v == 0.0 {
                        continue;
                    }
                    let c = if v > 0.0 { hi[i] * v } else { lo[i] * v };
                    if !c.is_finite() {
                        return f64::INFINITY;
                    }
                    total += c;
                }
                total
            }
            ProxFn::IndicatorOrthant => {
                let tol = FEAS_TOL * (1.0 + y.amax());
                if y.iter().all(|&v| v <= tol) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxFn::IndicatorPoint { p } => p.dot(y),
            ProxFn::IndicatorL2Ball { radius } => radius * y.norm(),
            ProxFn::IndicatorAffine { e, d } => {
                // finite only on range(E^T), where the value is u.d for y = E^T u
                let et = e.transpose();
                let svd = et.clone().svd(true, true);
                let u = svd
                    .solve(y, 1e-12)
                    .map_err(|_| ())
                    .unwrap_or_else(|_| DVector::zeros(e.nrows()));
                let residual = (&et * &u - y).amax();
                if residual > FEAS_TOL * (1.0 + y.amax()) {
                    f64::INFINITY
                } else {
                    u.dot(d)
                }
            }
            ProxFn::Quadratic {
                weight,
                center,
                constant,
            } => (0.5 / weight) * y.norm_squared() + center.dot(y) - constant,
            ProxFn::LeastSquares { a, b } => {
                let gram = a.transpose() * a;
                match Cholesky::new(gram) {
                    Some(chol) => {
                        let rhs = y + a.transpose() * b;
                        let x = chol.solve(&rhs);
                        x.dot(y) - 0.5 * (a * &x - b).norm_squared()
                    }
                    None => f64::INFINITY, // rank-deficient designs are out of scope here
                }
            }
            ProxFn::L1 { weight } => {
                if y.amax() <= weight + FEAS_TOL * (1.0 + weight) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxFn::L2 { weight } => {
                if y.norm() <= weight + FEAS_TOL * (1.0 + weight) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxFn::GroupL2 { groups } => {
                let mut covered = vec![false; y.len()];
                for (idx, w) in groups {
                    let nrm = idx.iter().map(|&i| y[i] * y[i]).sum::<f64>().sqrt();
                    if nrm > w + FEAS_TOL * (1.0 + w) {
                        return f64::INFINITY;
                    }
                    for &i in idx {
                        covered[i] = true;
                    }
                }
                let tol = FEAS_TOL * (1.0 + y.amax());
                for i in 0..y.len() {
                    if !covered[i] && y[i].abs() > tol {
                        return f64::INFINITY;
                    }
                }
                0.0
            }
            ProxFn::Conjugate(inner) => inner.value(y), // Fenchel-Moreau
        }
    }

    /// prox_{gamma f}^M (x) = argmin_y f(y) + (1/(2 gamma)) ||y - x||^2_M.
    pub fn prox(&self, gamma: f64, metric: &BlockMetric, x: &DVector<f64>) -> Result<DVector<f64>> {
        debug_assert!(gamma > 0.0);
        match self {
            ProxFn::Zero => Ok(x.clone()),
            ProxFn::IndicatorBox { lo, hi } => match metric {
                BlockMetric::Dense(_) => Err(self.capability(metric)),
                _ => Ok(DVector::from_fn(x.len(), |i, _| x[i].clamp(lo[i], hi[i]))),
            },
            ProxFn::IndicatorOrthant => match metric {
                BlockMetric::Dense(_) => Err(self.capability(metric)),
                _ => Ok(x.map(|v| v.max(0.0))),
            },
            ProxFn::IndicatorAffine { e, d } => {
                // x - M^{-1} E^T (E M^{-1} E^T)^{-1} (E x - d)
                let minv_et = apply_inv_cols(metric, &e.transpose());
                let gram = e * &minv_et;
                let chol = Cholesky::new(gram).ok_or_else(|| {
                    SplitError::Capability("affine projection: E M^{-1} E^T singular".into())
                })?;
                let resid = e * x - d;
                let mult = chol.solve(&resid);
                Ok(x - minv_et * mult)
            }
            ProxFn::IndicatorPoint { p } => Ok(p.clone()),
            ProxFn::IndicatorL2Ball { radius } => match metric.as_scalar() {
                Some(_) => {
                    let nrm = x.norm();
                    if nrm <= *radius {
                        Ok(x.clone())
                    } else {
                        Ok(x * (*radius / nrm))
                    }
                }
                None => Err(self.capability(metric)),
            },
            ProxFn::Quadratic { weight, center, .. } => match metric {
                BlockMetric::ScaledIdentity(m) => {
                    Ok((center * (gamma * weight) + x * *m) / (gamma * weight + m))
                }
                BlockMetric::Diagonal(dv) => Ok(DVector::from_fn(x.len(), |i, _| {
                    (gamma * weight * center[i] + dv[i] * x[i]) / (gamma * weight + dv[i])
                })),
                BlockMetric::Dense(m) => {
                    let dim = x.len();
                    let lhs = m + DMatrix::from_diagonal_element(dim, dim, gamma * weight);
                    let rhs = m * x + center * (gamma * weight);
                    let chol = Cholesky::new(lhs).ok_or_else(|| {
                        SplitError::MetricIntegrity("quadratic prox system not SPD".into())
                    })?;
                    Ok(chol.solve(&rhs))
                }
            },
            ProxFn::LeastSquares { a, b } => {
                let dim = x.len();
                let lhs = metric.dense(dim) + a.transpose() * a * gamma;
                let rhs = metric.apply(x) + a.transpose() * b * gamma;
                let chol = Cholesky::new(lhs).ok_or_else(|| {
                    SplitError::MetricIntegrity("least-squares prox system not SPD".into())
                })?;
                Ok(chol.solve(&rhs))
            }
            ProxFn::L1 { weight } => match metric {
                BlockMetric::ScaledIdentity(m) => {
                    let t = gamma * weight / m;
                    Ok(x.map(|v| soft_threshold(v, t)))
                }
                BlockMetric::Diagonal(dv) => Ok(DVector::from_fn(x.len(), |i, _| {
                    soft_threshold(x[i], gamma * weight / dv[i])
                })),
                BlockMetric::Dense(_) => Err(self.capability(metric)),
            },
            ProxFn::L2 { weight } => match metric.as_scalar() {
                Some(m) => {
                    let t = gamma * weight / m;
                    let nrm = x.norm();
                    if nrm <= t {
                        Ok(DVector::zeros(x.len()))
                    } else {
                        Ok(x * (1.0 - t / nrm))
                    }
                }
                None => Err(self.capability(metric)),
            },
            ProxFn::GroupL2 { groups } => match metric.as_scalar() {
                Some(m) => {
                    let mut out = x.clone();
                    for (idx, w) in groups {
                        let t = gamma * w / m;
                        let nrm = idx.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt();
                        let scale = if nrm <= t { 0.0 } else { 1.0 - t / nrm };
                        for &i in idx {
                            out[i] = x[i] * scale;
                        }
                    }
                    Ok(out)
                }
                None => Err(self.capability(metric)),
            },
            ProxFn::Conjugate(inner) => match metric.as_scalar() {
                Some(m) => {
                    // Moreau under a scalar metric: the effective stepsize is gamma/m
                    let ge = gamma / m;
                    let inner_prox =
                        inner.prox(1.0 / ge, &BlockMetric::ScaledIdentity(1.0), &(x / ge))?;
                    Ok(x - inner_prox * ge)
                }
                None => Err(self.capability(metric)),
            },
        }
    }

    /// True when `prox` with this metric kind has a supported route.
    pub fn supports_prox(&self, metric: &BlockMetric) -> bool {
        match self {
            ProxFn::Zero | ProxFn::IndicatorPoint { .. } => true,
            ProxFn::IndicatorAffine { .. } => true,
            ProxFn::Quadratic { .. } | ProxFn::LeastSquares { .. } => true,
            ProxFn::IndicatorBox { .. } | ProxFn::IndicatorOrthant | ProxFn::L1 { .. } => {
                metric.is_diagonal()
            }
            ProxFn::IndicatorL2Ball { .. }
            | ProxFn::L2 { .. }
            | ProxFn::GroupL2 { .. }
            | ProxFn::Conjugate(_) => metric.as_scalar().is_some(),
        }
    }

    fn capability(&self, metric: &BlockMetric) -> SplitError {
        SplitError::Capability(format!(
            "no closed-form prox for {} under {} metric",
            self.kind_name(),
            match metric {
                BlockMetric::ScaledIdentity(_) => "scaled-identity",
                BlockMetric::Diagonal(_) => "diagonal",
                BlockMetric::Dense(_) => "dense",
            }
        ))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ProxFn::Zero => "zero",
            ProxFn::IndicatorBox { .. } => "indicator-box",
            ProxFn::IndicatorOrthant => "indicator-orthant",
            ProxFn::IndicatorAffine { .. } => "indicator-affine",
            ProxFn::IndicatorPoint { .. } => "indicator-point",
            ProxFn::IndicatorL2Ball { .. } => "indicator-l2-ball",
            ProxFn::Quadratic { .. } => "quadratic",
            ProxFn::LeastSquares { .. } => "least-squares",
            ProxFn::L1 { .. } => "l1",
            ProxFn::L2 { .. } => "l2",
            ProxFn::GroupL2 { .. } => "group-l2",
            ProxFn::Conjugate(_) => "conjugate-of",
        }
    }

    /// Gradient where the function is differentiable.
    pub fn grad(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            ProxFn::Zero => Some(DVector::zeros(x.len())),
            ProxFn::Quadratic { weight, center, .. } => Some((x - center) * *weight),
            ProxFn::LeastSquares { a, b } => Some(a.transpose() * (a * x - b)),
            _ => None,
        }
    }

    /// Lipschitz constant of the gradient (infinite if nondifferentiable).
    pub fn lipschitz_grad(&self) -> f64 {
        match self {
            ProxFn::Zero => 0.0,
            ProxFn::Quadratic { weight, .. } => *weight,
            ProxFn::LeastSquares { a, .. } => {
                let gram = a.transpose() * a;
                ((&gram + gram.transpose()) * 0.5)
                    .symmetric_eigen()
                    .eigenvalues
                    .max()
            }
            ProxFn::Conjugate(inner) => {
                let mu = inner.strong_convexity();
                if mu > 0.0 {
                    1.0 / mu
                } else {
                    f64::INFINITY
                }
            }
            _ => f64::INFINITY,
        }
    }

    /// Strong convexity modulus (zero when merely convex).
    pub fn strong_convexity(&self) -> f64 {
        match self {
            ProxFn::Quadratic { weight, .. } => *weight,
            ProxFn::LeastSquares { a, .. } => {
                let gram = a.transpose() * a;
                ((&gram + gram.transpose()) * 0.5)
                    .symmetric_eigen()
                    .eigenvalues
                    .min()
                    .max(0.0)
            }
            ProxFn::Conjugate(inner) => {
                let l = inner.lipschitz_grad();
                if l.is_finite() && l > 0.0 {
                    1.0 / l
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    }

    /// Lipschitz constant of the function itself over the whole space
    /// (infinite when unbounded subgradients exist).
    pub fn lipschitz_value(&self, dim: usize) -> f64 {
        match self {
            ProxFn::Zero => 0.0,
            ProxFn::L1 { weight } => weight * (dim as f64).sqrt(),
            ProxFn::L2 { weight } => *weight,
            ProxFn::GroupL2 { groups } => groups
                .iter()
                .map(|(_, w)| w * w)
                .sum::<f64>()
                .sqrt(),
            ProxFn::IndicatorPoint { .. } => f64::INFINITY,
            ProxFn::Conjugate(inner) => match inner.as_ref() {
                // conj of an indicator of a bounded set is its support function
                ProxFn::IndicatorPoint { p } => p.norm(),
                _ => f64::INFINITY,
            },
            _ => f64::INFINITY,
        }
    }

    /// Nearest point of dom(f) in the Euclidean sense (identity on full-domain
    /// kinds); used to build feasible probe points.
    pub fn project_domain(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            ProxFn::IndicatorBox { lo, hi } => {
                DVector::from_fn(x.len(), |i, _| x[i].clamp(lo[i], hi[i]))
            }
            ProxFn::IndicatorOrthant => x.map(|v| v.max(0.0)),
            ProxFn::IndicatorPoint { p } => p.clone(),
            ProxFn::IndicatorL2Ball { radius } => {
                let nrm = x.norm();
                if nrm <= *radius {
                    x.clone()
                } else {
                    x * (*radius / nrm)
                }
            }
            ProxFn::IndicatorAffine { .. } => self
                .prox(1.0, &BlockMetric::ScaledIdentity(1.0), x)
                .expect("affine projection under identity always supported"),
            ProxFn::Conjugate(inner) => match inner.as_ref() {
                ProxFn::Zero => DVector::zeros(x.len()),
                ProxFn::L1 { weight } => x.map(|v| v.clamp(-*weight, *weight)),
                ProxFn::L2 { weight } => {
                    let nrm = x.norm();
                    if nrm <= *weight {
                        x.clone()
                    } else {
                        x * (*weight / nrm)
                    }
                }
                ProxFn::GroupL2 { groups } => {
                    let mut out = x.clone();
                    let mut covered = vec![false; x.len()];
                    for (idx, w) in groups {
                        let nrm = idx.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt();
                        if nrm > *w {
                            for &i in idx {
                                out[i] = x[i] * (w / nrm);
                            }
                        }
                        for &i in idx {
                            covered[i] = true;
                        }
                    }
                    for i in 0..x.len() {
                        if !covered[i] {
                            out[i] = 0.0;
                        }
                    }
                    out
                }
                _ => x.clone(),
            },
            _ => x.clone(),
        }
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn apply_inv_cols(metric: &BlockMetric, cols: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(cols.nrows(), cols.ncols());
    for j in 0..cols.ncols() {
        let col = cols.column(j).into_owned();
        out.set_column(j, &metric.apply_inv(&col));
    }
    out
}

/// A block-separable function on the product space: one catalog entry per block.
#[derive(Debug, Clone)]
pub struct SeparableFunction {
    pub blocks: Vec<ProxFn>,
}

impl SeparableFunction {
    pub fn new(blocks: Vec<ProxFn>) -> Self {
        SeparableFunction { blocks }
    }

    pub fn zero(n_blocks: usize) -> Self {
        SeparableFunction {
            blocks: vec![ProxFn::Zero; n_blocks],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| b.is_zero())
    }

    pub fn value(&self, p: &ProductPoint) -> f64 {
        let mut total = 0.0;
        for (f, x) in self.blocks.iter().zip(&p.blocks) {
            let v = f.value(x);
            if v == f64::INFINITY {
                return f64::INFINITY;
            }
            total += v;
        }
        total
    }

    /// Blockwise prox under a block-diagonal metric.
    pub fn prox(
        &self,
        gamma: f64,
        parts: &[BlockMetric],
        p: &ProductPoint,
    ) -> Result<ProductPoint> {
        let mut out = Vec::with_capacity(self.blocks.len());
        for ((f, m), x) in self.blocks.iter().zip(parts).zip(&p.blocks) {
            out.push(f.prox(gamma, m, x)?);
        }
        Ok(ProductPoint::new(out))
    }

    pub fn supports_prox(&self, parts: &[BlockMetric]) -> Result<()> {
        for (i, (f, m)) in self.blocks.iter().zip(parts).enumerate() {
            if !f.supports_prox(m) {
                return Err(SplitError::Capability(format!(
                    "block {}: no closed-form prox for {} under the given metric block",
                    i,
                    f.kind_name()
                )));
            }
        }
        Ok(())
    }

    pub fn grad(&self, p: &ProductPoint) -> Option<ProductPoint> {
        let mut out = Vec::with_capacity(self.blocks.len());
        for (f, x) in self.blocks.iter().zip(&p.blocks) {
            out.push(f.grad(x)?);
        }
        Some(ProductPoint::new(out))
    }

    /// Lipschitz constant of the full gradient (separable, so the max).
    pub fn lipschitz_grad(&self) -> f64 {
        self.blocks
            .iter()
            .map(|f| f.lipschitz_grad())
            .fold(0.0, f64::max)
    }

    /// Lipschitz constant of the function value on the product space.
    pub fn lipschitz_value(&self, dims: &[usize]) -> f64 {
        let mut sq = 0.0;
        for (f, &d) in self.blocks.iter().zip(dims) {
            let l = f.lipschitz_value(d);
            if !l.is_finite() {
                return f64::INFINITY;
            }
            sq += l * l;
        }
        sq.sqrt()
    }

    pub fn project_domain(&self, p: &ProductPoint) -> ProductPoint {
        ProductPoint::new(
            self.blocks
                .iter()
                .zip(&p.blocks)
                .map(|(f, x)| f.project_domain(x))
                .collect(),
        )
    }

    /// Checked smooth view: every block must expose a gradient.
    pub fn smooth_view(&self) -> Result<SmoothAggregate<'_>> {
        for (i, f) in self.blocks.iter().enumerate() {
            if !f.lipschitz_grad().is_finite() {
                return Err(SplitError::Capability(format!(
                    "block {} ({}) is not differentiable",
                    i,
                    f.kind_name()
                )));
            }
        }
        Ok(SmoothAggregate {
            f: self,
            lgrad: self.lipschitz_grad(),
        })
    }
}

/// A differentiable block-separable function with a cocoercivity certificate:
/// the gradient is (1/beta)-Lipschitz, hence beta-cocoercive (Baillon-Haddad).
#[derive(Debug, Clone, Copy)]
pub struct SmoothAggregate<'a> {
    f: &'a SeparableFunction,
    lgrad: f64,
}

impl<'a> SmoothAggregate<'a> {
    pub fn value(&self, p: &ProductPoint) -> f64 {
        self.f.value(p)
    }

    pub fn grad(&self, p: &ProductPoint) -> ProductPoint {
        self.f.grad(p).expect("checked at construction")
    }

    pub fn lipschitz_grad(&self) -> f64 {
        self.lgrad
    }

    /// Cocoercivity constant beta; infinite for an identically-zero function.
    pub fn beta(&self) -> f64 {
        if self.lgrad == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.lgrad
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn ident() -> BlockMetric {
        BlockMetric::ScaledIdentity(1.0)
    }

    /// Slow numeric prox oracle: projected subgradient descent on
    /// f(y) + (1/(2 gamma)) ||y - x||_M^2 for smooth f.
    fn numeric_prox_quadratic(
        weight: f64,
        center: &DVector<f64>,
        gamma: f64,
        metric_scale: f64,
        x: &DVector<f64>,
    ) -> DVector<f64> {
        let mut y = x.clone();
        let lr = 0.2 / (weight + metric_scale / gamma);
        for _ in 0..20_000 {
            let grad = (&y - center) * weight + (&y - x) * (metric_scale / gamma);
            y -= grad * lr;
        }
        y
    }

    #[test]
    fn prox_of_zero_is_identity() {
        let x = dvector![3.0, -1.0];
        let p = ProxFn::Zero.prox(2.5, &ident(), &x).unwrap();
        assert_eq!(p, x);
    }

    #[test]
    fn orthant_projection() {
        let x = dvector![-1.0, 2.0];
        let p = ProxFn::IndicatorOrthant.prox(1.0, &ident(), &x).unwrap();
        assert_eq!(p, dvector![0.0, 2.0]);
    }

    #[test]
    fn quadratic_prox_under_metric_matches_numeric_oracle() {
        // f = (1/2)||.||^2, U = 2I, gamma = 2, x = (4, -2) -> (2, -1)
        let f = ProxFn::quadratic(1.0, DVector::zeros(2));
        let x = dvector![4.0, -2.0];
        let p = f.prox(2.0, &BlockMetric::ScaledIdentity(2.0), &x).unwrap();
        assert!((&p - dvector![2.0, -1.0]).amax() < 1e-12);
        let oracle = numeric_prox_quadratic(1.0, &DVector::zeros(2), 2.0, 2.0, &x);
        assert!((&p - oracle).amax() < 1e-6, "numeric oracle disagrees");
    }

    #[test]
    fn soft_threshold_l1() {
        let f = ProxFn::L1 { weight: 1.0 };
        let x = dvector![3.0, -0.5, 0.2];
        let p = f.prox(1.0, &ident(), &x).unwrap();
        assert_eq!(p, dvector![2.0, 0.0, 0.0]);
        // diagonal metric rescales per coordinate
        let p2 = f
            .prox(1.0, &BlockMetric::Diagonal(dvector![2.0, 1.0, 0.1]), &x)
            .unwrap();
        assert!((p2[0] - 2.5).abs() < 1e-14);
        assert_eq!(p2[2], 0.0);
    }

    #[test]
    fn conjugate_closed_forms() {
        // conj of tau|.|_1 is the box indicator
        let c = ProxFn::L1 { weight: 0.5 }.conjugate(2);
        assert_eq!(c.kind_name(), "indicator-box");
        assert_eq!(c.value(&dvector![0.4, -0.5]), 0.0);
        assert_eq!(c.value(&dvector![0.6, 0.0]), f64::INFINITY);
        // conj of the indicator of {0} is the zero function
        let z = ProxFn::indicator_zero(3).conjugate(3);
        assert!(z.is_zero());
        // conj of l2 norm is the ball indicator
        let b = ProxFn::L2 { weight: 2.0 }.conjugate(2);
        assert_eq!(b.kind_name(), "indicator-l2-ball");
    }

    #[test]
    fn conjugate_is_involution_on_samples() {
        let dim = 3;
        let fns = vec![
            ProxFn::L1 { weight: 0.7 },
            ProxFn::L2 { weight: 1.3 },
            ProxFn::Quadratic {
                weight: 2.0,
                center: dvector![1.0, -1.0, 0.5],
                constant: 0.25,
            },
            ProxFn::IndicatorL2Ball { radius: 1.5 },
            ProxFn::GroupL2 {
                groups: vec![(vec![0, 1], 1.0), (vec![2], 0.5)],
            },
            ProxFn::IndicatorOrthant,
        ];
        for f in fns {
            let ff = f.conjugate(dim).conjugate(dim);
            for s in 0..12 {
                let x = DVector::from_fn(dim, |i, _| ((s * 3 + i) as f64 * 0.37).sin() * 1.8);
                let a = f.value(&x);
                let b = ff.value(&x);
                if a == f64::INFINITY || b == f64::INFINITY {
                    assert_eq!(a, b, "{} at {:?}", f.kind_name(), x);
                } else {
                    assert!((a - b).abs() < 1e-9, "{}: {a} vs {b}", f.kind_name());
                }
            }
        }
    }

    #[test]
    fn moreau_wrapper_matches_closed_form() {
        // prox of conj(L1) computed via Moreau equals the clamp
        let wrapped = ProxFn::Conjugate(Box::new(ProxFn::L1 { weight: 0.8 }));
        let closed = ProxFn::L1 { weight: 0.8 }.conjugate(3);
        for s in 0..8 {
            let x = DVector::from_fn(3, |i, _| ((s + i) as f64 * 0.71).cos() * 2.0);
            for gamma in [0.3, 1.0, 2.5] {
                let a = wrapped.prox(gamma, &ident(), &x).unwrap();
                let b = closed.prox(gamma, &ident(), &x).unwrap();
                assert!((a - b).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn resolvent_optimality_subgradient_inequality() {
        // (x - p)/gamma must be a subgradient of f at p: check the inequality
        // against 64 sampled competitors for each catalog entry.
        let dim = 4;
        let fns = vec![
            ProxFn::Zero,
            ProxFn::L1 { weight: 0.9 },
            ProxFn::L2 { weight: 1.1 },
            ProxFn::GroupL2 {
                groups: vec![(vec![0, 2], 0.8), (vec![1, 3], 1.2)],
            },
            ProxFn::quadratic(1.7, dvector![0.5, -0.5, 1.0, 0.0]),
            ProxFn::IndicatorOrthant,
            ProxFn::IndicatorBox {
                lo: dvector![-1.0, -1.0, -1.0, -1.0],
                hi: dvector![1.0, 1.0, 1.0, 1.0],
            },
            ProxFn::IndicatorL2Ball { radius: 1.0 },
            ProxFn::Conjugate(Box::new(ProxFn::GroupL2 {
                groups: vec![(vec![0, 1], 1.0), (vec![2, 3], 0.6)],
            })),
        ];
        for f in fns {
            for s in 0..4 {
                let x = DVector::from_fn(dim, |i, _| ((s * 11 + i * 3) as f64 * 0.29).sin() * 2.5);
                let gamma = 0.7 + 0.4 * s as f64;
                let p = f.prox(gamma, &ident(), &x).unwrap();
                let sub = (&x - &p) / gamma;
                let fp = f.value(&p);
                assert!(fp < f64::INFINITY, "{} prox output infeasible", f.kind_name());
                for c in 0..64 {
                    let y = DVector::from_fn(dim, |i, _| {
                        ((c * 7 + i * 5 + s) as f64 * 0.41).cos() * 2.0
                    });
                    let y = f.project_domain(&y);
                    let fy = f.value(&y);
                    if fy == f64::INFINITY {
                        continue;
                    }
                    let margin = fy - fp - (&y - &p).dot(&sub);
                    assert!(
                        margin >= -1e-8,
                        "{}: subgradient inequality violated by {margin:.3e}",
                        f.kind_name()
                    );
                }
            }
        }
    }

    #[test]
    fn least_squares_prox_and_grad() {
        let a = dmatrix![1.0, 0.5; 0.0, 2.0; 1.0, -1.0];
        let bvec = dvector![1.0, -2.0, 0.5];
        let f = ProxFn::LeastSquares {
            a: a.clone(),
            b: bvec.clone(),
        };
        let x = dvector![0.3, 0.7];
        let g = f.grad(&x).unwrap();
        // finite-difference check
        let h = 1e-6;
        for i in 0..2 {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-5 * (1.0 + g[i].abs()));
        }
        // prox optimality: gamma * grad(p) + M(p - x) = 0
        let gamma = 0.8;
        let p = f.prox(gamma, &BlockMetric::ScaledIdentity(1.5), &x).unwrap();
        let resid = f.grad(&p).unwrap() * gamma + (&p - &x) * 1.5;
        assert!(resid.amax() < 1e-10);
        // certificates
        let gram = a.transpose() * a;
        let eig = gram.symmetric_eigen();
        assert!((f.lipschitz_grad() - eig.eigenvalues.max()).abs() < 1e-10);
        assert!((f.strong_convexity() - eig.eigenvalues.min()).abs() < 1e-10);
    }

    #[test]
    fn smooth_view_certificates() {
        let f = SeparableFunction::new(vec![
            ProxFn::quadratic(2.0, DVector::zeros(2)),
            ProxFn::Zero,
        ]);
        let sm = f.smooth_view().unwrap();
        assert_eq!(sm.lipschitz_grad(), 2.0);
        assert_eq!(sm.beta(), 0.5);
        // Lipschitz certificate on sampled pairs
        for s in 0..6 {
            let p = ProductPoint::new(vec![
                DVector::from_fn(2, |i, _| ((s + i) as f64).sin()),
                DVector::from_fn(1, |_, _| s as f64 * 0.1),
            ]);
            let q = ProductPoint::new(vec![
                DVector::from_fn(2, |i, _| ((s * 2 + i) as f64).cos()),
                DVector::from_fn(1, |_, _| -(s as f64) * 0.2),
            ]);
            let dg = sm.grad(&p).sub(&sm.grad(&q)).norm();
            assert!(dg <= sm.lipschitz_grad() * p.sub(&q).norm() + 1e-12);
        }
        let bad = SeparableFunction::new(vec![ProxFn::L1 { weight: 1.0 }]);
        assert!(bad.smooth_view().is_err());
    }

    #[test]
    fn group_l2_prox_shrinks_groups() {
        let f = ProxFn::GroupL2 {
            groups: vec![(vec![0, 1], 5.0), (vec![2], 0.1)],
        };
        let x = dvector![3.0, 4.0, 2.0];
        let p = f.prox(1.0, &ident(), &x).unwrap();
        // group norm 5 <= threshold 5 -> zeroed exactly at the boundary
        assert_eq!(p[0], 0.0);
        assert_eq!(p[1], 0.0);
        assert!((p[2] - 1.9).abs() < 1e-14);
    }

    #[test]
    fn capability_errors_name_the_pairing() {
        let f = ProxFn::L2 { weight: 1.0 };
        let err = f
            .prox(1.0, &BlockMetric::Diagonal(dvector![1.0, 2.0]), &dvector![1.0, 1.0])
            .unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("l2") && msg.contains("diagonal"), "{msg}");
    }
}
