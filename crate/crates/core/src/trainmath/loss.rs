use crate::error::{Error, Result};
use crate::raster::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParams {
    /// Dice recall weight.
    pub beta: f64,
    /// Dice smoothing term.
    pub eps: f64,
    /// BCE weight in the per-channel mix.
    pub gamma1: f64,
    /// Dice weight in the per-channel mix.
    pub gamma2: f64,
    /// Probabilities are clamped to `[clamp, 1 - clamp]` before taking logs.
    pub clamp: f64,
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            beta: 1.0,
            eps: 1e-4,
            gamma1: 0.5,
            gamma2: 0.5,
            clamp: 1e-7,
        }
    }
}

impl LossParams {
    pub fn validate(&self) -> Result<()> {
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(Error::InvalidArgument("dice eps must be > 0".into()));
        }
        if !(self.gamma1 >= 0.0 && self.gamma2 >= 0.0 && self.gamma1 + self.gamma2 > 0.0) {
            return Err(Error::InvalidArgument(
                "gamma weights must be >= 0 with a positive sum".into(),
            ));
        }
        if !(self.clamp > 0.0 && self.clamp < 0.5) {
            return Err(Error::InvalidArgument(
                "BCE clamp must lie in (0, 0.5)".into(),
            ));
        }
        Ok(())
    }
}

/// Per-channel weights for the normalized total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelWeights {
    pub building: f64,
    pub border: f64,
    pub spacing: f64,
}

impl Default for ChannelWeights {
    fn default() -> Self {
        Self {
            building: 1.0,
            border: 2.0,
            spacing: 2.0,
        }
    }
}

impl ChannelWeights {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.building, self.border, self.spacing]
    }
}

/// Scalar loss with its gradient with respect to every prediction pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: Vec<f64>,
}

fn check(pred: &[f64], gt: &BinaryMask) -> Result<()> {
    if pred.len() != gt.data().len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} pixels", gt.data().len()),
            actual: format!("{} pixels", pred.len()),
        });
    }
    Ok(())
}

/// Soft Dice loss `1 - ((1+b^2)TP + eps) / ((1+b^2)TP + b^2 FN + FP + eps)`
/// with `TP = sum p g`, `FP = sum p (1-g)`, `FN = sum (1-p) g`.
pub fn dice_loss(pred: &[f64], gt: &BinaryMask, params: &LossParams) -> Result<LossValue> {
    check(pred, gt)?;
    let b2 = params.beta * params.beta;
    let a = 1.0 + b2;
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for (&p, &g) in pred.iter().zip(gt.data()) {
        let g = g as f64;
        tp += p * g;
        fp += p * (1.0 - g);
        fn_ += (1.0 - p) * g;
    }
    let num = a * tp + params.eps;
    let den = a * tp + b2 * fn_ + fp + params.eps;
    let grad = gt
        .data()
        .iter()
        .map(|&g| {
            let g = g as f64;
            let dnum = a * g;
            let dden = a * g - b2 * g + (1.0 - g);
            -(dnum * den - num * dden) / (den * den)
        })
        .collect();
    Ok(LossValue {
        value: 1.0 - num / den,
        grad,
    })
}

/// Mean binary cross-entropy. Gradient is zero where the clamp is active.
pub fn bce_loss(pred: &[f64], gt: &BinaryMask, params: &LossParams) -> Result<LossValue> {
    check(pred, gt)?;
    let n = pred.len() as f64;
    let (lo, hi) = (params.clamp, 1.0 - params.clamp);
    let mut sum = 0.0;
    let mut grad = Vec::with_capacity(pred.len());
    for (&p, &g) in pred.iter().zip(gt.data()) {
        let g = g as f64;
        let q = p.clamp(lo, hi);
        sum += -(g * q.ln() + (1.0 - g) * (1.0 - q).ln());
        grad.push(if p < lo || p > hi {
            0.0
        } else {
            (-g / q + (1.0 - g) / (1.0 - q)) / n
        });
    }
    Ok(LossValue {
        value: sum / n,
        grad,
    })
}

/// `gamma1 * BCE + gamma2 * Dice` for one channel.
pub fn channel_loss(pred: &[f64], gt: &BinaryMask, params: &LossParams) -> Result<LossValue> {
    params.validate()?;
    let bce = bce_loss(pred, gt, params)?;
    let dice = dice_loss(pred, gt, params)?;
    Ok(LossValue {
        value: params.gamma1 * bce.value + params.gamma2 * dice.value,
        grad: bce
            .grad
            .iter()
            .zip(&dice.grad)
            .map(|(b, d)| params.gamma1 * b + params.gamma2 * d)
            .collect(),
    })
}

/// Weighted mean of per-channel losses, normalized by the weight sum.
pub fn total_loss(losses: &[f64], weights: &[f64]) -> Result<f64> {
    if losses.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "{} channel losses but {} weights",
            losses.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
        return Err(Error::InvalidArgument(
            "channel weights must be finite and >= 0".into(),
        ));
    }
    let wsum: f64 = weights.iter().sum();
    if wsum <= 0.0 {
        return Err(Error::InvalidArgument("channel weights sum to zero".into()));
    }
    Ok(losses.iter().zip(weights).map(|(l, w)| l * w).sum::<f64>() / wsum)
}
