use super::loss::{bce_loss, channel_loss, dice_loss, LossParams, LossValue};
use crate::error::Result;
use crate::raster::BinaryMask;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Dice,
    Bce,
    Channel,
}

impl LossKind {
    pub fn eval(self, pred: &[f64], gt: &BinaryMask, params: &LossParams) -> Result<LossValue> {
        match self {
            LossKind::Dice => dice_loss(pred, gt, params),
            LossKind::Bce => bce_loss(pred, gt, params),
            LossKind::Channel => channel_loss(pred, gt, params),
        }
    }
}

/// Largest per-pixel relative error between the analytic gradient and a
/// central finite difference with the given step. Relative error is
/// `|a - n| / max(|a|, |n|, 1e-12)`.
pub fn max_relative_error(
    kind: LossKind,
    pred: &[f64],
    gt: &BinaryMask,
    params: &LossParams,
    step: f64,
) -> Result<f64> {
    let analytic = kind.eval(pred, gt, params)?.grad;
    let mut probe = pred.to_vec();
    let mut worst = 0.0f64;
    for i in 0..pred.len() {
        probe[i] = pred[i] + step;
        let up = kind.eval(&probe, gt, params)?.value;
        probe[i] = pred[i] - step;
        let down = kind.eval(&probe, gt, params)?.value;
        probe[i] = pred[i];
        let numeric = (up - down) / (2.0 * step);
        let scale = analytic[i].abs().max(numeric.abs()).max(1e-12);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    Ok(worst)
}

/// Runs `cases` random `side x side` checks with predictions in (0.05, 0.95)
/// and random binary targets; returns the worst relative error seen.
pub fn random_gradcheck<R: Rng + ?Sized>(
    kind: LossKind,
    cases: usize,
    side: usize,
    step: f64,
    params: &LossParams,
    rng: &mut R,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let pred: Vec<f64> = (0..side * side)
            .map(|_| rng.gen_range(0.05..0.95))
            .collect();
        let gt = BinaryMask::from_vec(
            side,
            side,
            (0..side * side).map(|_| rng.gen_range(0..=1u8)).collect(),
        )?;
        worst = worst.max(max_relative_error(kind, &pred, &gt, params, step)?);
    }
    Ok(worst)
}
