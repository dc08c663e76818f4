//! JSON document schema for problem instances: dimensions, function-kind
//! descriptors with parameters, dense B blocks as row-major arrays, and the
//! optional metric-class configuration. `schema_version` is required.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SplitError};
use crate::model::metric_class::{MetricClass, MetricClassConfig};
use crate::model::problem::{DualPair, ModelProblem};
use crate::ops::linmap::BlockLinearMap;
use crate::ops::prox::ProxFn;
use crate::space::metric::BlockMetric;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub data: Vec<f64>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        MatrixDoc {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(SplitError::Layout(format!(
                "matrix doc {}x{} carries {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FnDoc {
    Zero,
    IndicatorBox {
        /// None encodes an unbounded side.
        lo: Vec<Option<f64>>,
        hi: Vec<Option<f64>>,
    },
    IndicatorOrthant,
    IndicatorAffine {
        e: MatrixDoc,
        d: Vec<f64>,
    },
    IndicatorPoint {
        p: Vec<f64>,
    },
    IndicatorL2Ball {
        radius: f64,
    },
    Quadratic {
        weight: f64,
        center: Vec<f64>,
        constant: f64,
    },
    LeastSquares {
        a: MatrixDoc,
        b: Vec<f64>,
    },
    L1 {
        weight: f64,
    },
    L2 {
        weight: f64,
    },
    GroupL2 {
        groups: Vec<GroupDoc>,
    },
    ConjugateOf {
        inner: Box<FnDoc>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupDoc {
    pub indices: Vec<usize>,
    pub weight: f64,
}

impl FnDoc {
    pub fn from_fn(f: &ProxFn) -> Self {
        match f {
            ProxFn::Zero => FnDoc::Zero,
            ProxFn::IndicatorBox { lo, hi } => FnDoc::IndicatorBox {
                lo: lo.iter().map(|&v| finite_opt(v)).collect(),
                hi: hi.iter().map(|&v| finite_opt(v)).collect(),
            },
            ProxFn::IndicatorOrthant => FnDoc::IndicatorOrthant,
            ProxFn::IndicatorAffine { e, d } => FnDoc::IndicatorAffine {
                e: MatrixDoc::from_matrix(e),
                d: d.iter().copied().collect(),
            },
            ProxFn::IndicatorPoint { p } => FnDoc::IndicatorPoint {
                p: p.iter().copied().collect(),
            },
            ProxFn::IndicatorL2Ball { radius } => FnDoc::IndicatorL2Ball { radius: *radius },
            ProxFn::Quadratic {
                weight,
                center,
                constant,
            } => FnDoc::Quadratic {
                weight: *weight,
                center: center.iter().copied().collect(),
                constant: *constant,
            },
            ProxFn::LeastSquares { a, b } => FnDoc::LeastSquares {
                a: MatrixDoc::from_matrix(a),
                b: b.iter().copied().collect(),
            },
            ProxFn::L1 { weight } => FnDoc::L1 { weight: *weight },
            ProxFn::L2 { weight } => FnDoc::L2 { weight: *weight },
            ProxFn::GroupL2 { groups } => FnDoc::GroupL2 {
                groups: groups
                    .iter()
                    .map(|(indices, weight)| GroupDoc {
                        indices: indices.clone(),
                        weight: *weight,
                    })
                    .collect(),
            },
            ProxFn::Conjugate(inner) => FnDoc::ConjugateOf {
                inner: Box::new(FnDoc::from_fn(inner)),
            },
        }
    }

    pub fn to_fn(&self) -> Result<ProxFn> {
        Ok(match self {
            FnDoc::Zero => ProxFn::Zero,
            FnDoc::IndicatorBox { lo, hi } => ProxFn::IndicatorBox {
                lo: DVector::from_iterator(
                    lo.len(),
                    lo.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)),
                ),
                hi: DVector::from_iterator(hi.len(), hi.iter().map(|v| v.unwrap_or(f64::INFINITY))),
            },
            FnDoc::IndicatorOrthant => ProxFn::IndicatorOrthant,
            FnDoc::IndicatorAffine { e, d } => ProxFn::IndicatorAffine {
                e: e.to_matrix()?,
                d: DVector::from_vec(d.clone()),
            },
            FnDoc::IndicatorPoint { p } => ProxFn::IndicatorPoint {
                p: DVector::from_vec(p.clone()),
            },
            FnDoc::IndicatorL2Ball { radius } => ProxFn::IndicatorL2Ball { radius: *radius },
            FnDoc::Quadratic {
                weight,
                center,
                constant,
            } => ProxFn::Quadratic {
                weight: *weight,
                center: DVector::from_vec(center.clone()),
                constant: *constant,
            },
            FnDoc::LeastSquares { a, b } => ProxFn::LeastSquares {
                a: a.to_matrix()?,
                b: DVector::from_vec(b.clone()),
            },
            FnDoc::L1 { weight } => ProxFn::L1 { weight: *weight },
            FnDoc::L2 { weight } => ProxFn::L2 { weight: *weight },
            FnDoc::GroupL2 { groups } => ProxFn::GroupL2 {
                groups: groups
                    .iter()
                    .map(|g| (g.indices.clone(), g.weight))
                    .collect(),
            },
            FnDoc::ConjugateOf { inner } => ProxFn::Conjugate(Box::new(inner.to_fn()?)),
        })
    }
}

fn finite_opt(v: f64) -> Option<f64> {
    if v.is_finite() {
        Some(v)
    } else {
        None
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BlockMetricDoc {
    ScaledIdentity { scale: f64 },
    Diagonal { entries: Vec<f64> },
    Dense { m: MatrixDoc },
}

impl BlockMetricDoc {
    pub fn from_metric(m: &BlockMetric) -> Self {
        match m {
            BlockMetric::ScaledIdentity(c) => BlockMetricDoc::ScaledIdentity { scale: *c },
            BlockMetric::Diagonal(d) => BlockMetricDoc::Diagonal {
                entries: d.iter().copied().collect(),
            },
            BlockMetric::Dense(m) => BlockMetricDoc::Dense {
                m: MatrixDoc::from_matrix(m),
            },
        }
    }

    pub fn to_metric(&self) -> Result<BlockMetric> {
        Ok(match self {
            BlockMetricDoc::ScaledIdentity { scale } => BlockMetric::ScaledIdentity(*scale),
            BlockMetricDoc::Diagonal { entries } => {
                BlockMetric::Diagonal(DVector::from_vec(entries.clone()))
            }
            BlockMetricDoc::Dense { m } => BlockMetric::Dense(m.to_matrix()?),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricClassDoc {
    pub class: u8,
    pub w: f64,
    pub v0: BlockMetricDoc,
    pub vs: Vec<BlockMetricDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ws: Option<Vec<BlockMetricDoc>>,
}

impl MetricClassDoc {
    pub fn from_config(c: &MetricClassConfig) -> Self {
        MetricClassDoc {
            class: match c.class {
                MetricClass::One => 1,
                MetricClass::Two => 2,
            },
            w: c.w,
            v0: BlockMetricDoc::from_metric(&c.v0),
            vs: c.vs.iter().map(BlockMetricDoc::from_metric).collect(),
            ws: c
                .ws
                .as_ref()
                .map(|ws| ws.iter().map(BlockMetricDoc::from_metric).collect()),
        }
    }

    pub fn to_config(&self) -> Result<MetricClassConfig> {
        let class = match self.class {
            1 => MetricClass::One,
            2 => MetricClass::Two,
            other => {
                return Err(SplitError::Config(format!(
                    "metric class must be 1 or 2, got {other}"
                )))
            }
        };
        Ok(MetricClassConfig {
            class,
            w: self.w,
            v0: self.v0.to_metric()?,
            vs: self
                .vs
                .iter()
                .map(|m| m.to_metric())
                .collect::<Result<_>>()?,
            ws: match &self.ws {
                Some(ws) => Some(ws.iter().map(|m| m.to_metric()).collect::<Result<_>>()?),
                None => None,
            },
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairDoc {
    pub h: FnDoc,
    pub l: FnDoc,
}

/// The persisted problem-instance document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub schema_version: u32,
    pub primal_dim: usize,
    pub dual_dims: Vec<usize>,
    pub f: FnDoc,
    pub g: FnDoc,
    pub pairs: Vec<PairDoc>,
    /// Dense B_i blocks, row-major.
    pub b_blocks: Vec<MatrixDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric_class: Option<MetricClassDoc>,
}

impl InstanceDoc {
    pub fn from_model(mp: &ModelProblem, metric: Option<&MetricClassConfig>) -> Self {
        InstanceDoc {
            schema_version: SCHEMA_VERSION,
            primal_dim: mp.primal_dim(),
            dual_dims: mp.b.dual_dims(),
            f: FnDoc::from_fn(&mp.f),
            g: FnDoc::from_fn(&mp.g),
            pairs: mp
                .pairs
                .iter()
                .map(|p| PairDoc {
                    h: FnDoc::from_fn(&p.h),
                    l: FnDoc::from_fn(&p.l),
                })
                .collect(),
            b_blocks: (0..mp.b.n_duals())
                .map(|i| MatrixDoc::from_matrix(mp.b.block(i)))
                .collect(),
            metric_class: metric.map(MetricClassDoc::from_config),
        }
    }

    pub fn to_model(&self) -> Result<(ModelProblem, Option<MetricClassConfig>)> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(SplitError::Config(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let blocks: Vec<DMatrix<f64>> = self
            .b_blocks
            .iter()
            .map(|m| m.to_matrix())
            .collect::<Result<_>>()?;
        for (blk, &d) in blocks.iter().zip(self.dual_dims.iter()) {
            if blk.nrows() != d || blk.ncols() != self.primal_dim {
                return Err(SplitError::Layout(
                    "B block shape disagrees with the declared dimensions".into(),
                ));
            }
        }
        let mp = ModelProblem {
            f: self.f.to_fn()?,
            g: self.g.to_fn()?,
            pairs: self
                .pairs
                .iter()
                .map(|p| {
                    Ok(DualPair {
                        h: p.h.to_fn()?,
                        l: p.l.to_fn()?,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            b: Arc::new(BlockLinearMap::new(blocks)?),
        };
        let metric = match &self.metric_class {
            Some(doc) => Some(doc.to_config()?),
            None => None,
        };
        Ok((mp, metric))
    }
}
