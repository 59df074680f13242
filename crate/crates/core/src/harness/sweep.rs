//! Bias/error trade-off as the protected group's boundary shift grows.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label};
use crate::error::{Error, Result};
use crate::fairness::sdb_candidates;
use crate::learners::ConfidenceModel;
use crate::metrics::sign;

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaGrid {
    /// 0 plus every candidate shift of the evaluation data's protected negatives.
    Auto,
    Values(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub bias: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub points: Vec<CurvePoint>,
}

impl TradeoffCurve {
    /// Whether the signed bias never increases along the curve.
    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[1].bias <= w[0].bias)
    }

    /// The first point with `|bias| <= tolerance`.
    pub fn first_within(&self, tolerance: f64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.bias.abs() <= tolerance)
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["lambda", "bias", "error"])?;
        for p in &self.points {
            w.write_record([p.lambda.to_string(), p.bias.to_string(), p.error.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

pub fn sweep_lambda(model: &ConfidenceModel, eval: &Dataset, grid: &LambdaGrid) -> Result<TradeoffCurve> {
    let confs = model.confidences(eval)?;
    sweep_confidences(&confs, eval.labels(), eval.protected(), grid)
}

/// [`sweep_lambda`] on precomputed confidences. The protected group is
/// always the shifted one.
pub fn sweep_confidences(
    confs: &[f64],
    labels: &[Label],
    protected: &[bool],
    grid: &LambdaGrid,
) -> Result<TradeoffCurve> {
    let n = confs.len();
    if labels.len() != n || protected.len() != n {
        return Err(Error::InvalidArgument("confidences, labels and mask differ in length".into()));
    }
    let n_prot = protected.iter().filter(|&&p| p).count();
    if n_prot == 0 {
        return Err(Error::Degenerate("trade-off sweep needs a protected group".into()));
    }
    let lambdas = match grid {
        LambdaGrid::Auto => sdb_candidates(confs, protected),
        LambdaGrid::Values(v) => {
            if v.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
                return Err(Error::InvalidArgument("shifts must be finite and >= 0".into()));
            }
            if v.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidArgument("shift grid must be strictly increasing".into()));
            }
            v.clone()
        }
    };
    let base: Vec<Label> = confs.iter().map(|&c| sign(c)).collect();
    let n_rest = n - n_prot;
    let rest_rate = if n_rest == 0 {
        0.0
    } else {
        (0..n).filter(|&i| !protected[i] && base[i] == 1).count() as f64 / n_rest as f64
    };
    let mut prot_pos = (0..n).filter(|&i| protected[i] && base[i] == 1).count();
    let mut errors = (0..n).filter(|&i| base[i] != labels[i]).count();
    let mut negatives: Vec<usize> = (0..n).filter(|&i| protected[i] && base[i] == -1).collect();
    negatives.sort_by(|&a, &b| confs[b].total_cmp(&confs[a]));

    let mut next = 0;
    let mut points = Vec::with_capacity(lambdas.len());
    for lambda in lambdas {
        while next < negatives.len() && confs[negatives[next]] >= -lambda {
            let i = negatives[next];
            prot_pos += 1;
            if labels[i] == 1 {
                errors -= 1;
            } else {
                errors += 1;
            }
            next += 1;
        }
        let bias = if n_rest == 0 {
            0.0
        } else {
            rest_rate - prot_pos as f64 / n_prot as f64
        };
        points.push(CurvePoint {
            lambda,
            bias,
            error: errors as f64 / n as f64,
        });
    }
    Ok(TradeoffCurve { points })
}
