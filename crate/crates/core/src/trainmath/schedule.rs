use crate::error::{Error, Result};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams {
    pub total_epochs: f64,
    /// Length of the one-cycle warm-up phase.
    pub up_epochs: f64,
    pub lr_init: f64,
    pub lr_max: f64,
    pub lr_final: f64,
    pub poly_power: f64,
    pub poly_lr0: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            total_epochs: 100.0,
            up_epochs: 40.0,
            // 1e-4 / 20, and that divided by 1000.
            lr_init: 5e-6,
            lr_max: 1e-4,
            lr_final: 5e-9,
            poly_power: 0.9,
            poly_lr0: 1e-3,
        }
    }
}

impl ScheduleParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.up_epochs && self.up_epochs < self.total_epochs) {
            return Err(Error::InvalidArgument(
                "schedule needs 0 < up_epochs < total_epochs".into(),
            ));
        }
        if !(0.0 < self.lr_final && self.lr_final < self.lr_init && self.lr_init < self.lr_max) {
            return Err(Error::InvalidArgument(
                "schedule needs 0 < lr_final < lr_init < lr_max".into(),
            ));
        }
        Ok(())
    }

    fn check_epoch(&self, epoch: f64) -> Result<()> {
        if !(0.0..=self.total_epochs).contains(&epoch) {
            return Err(Error::InvalidArgument(format!(
                "epoch {epoch} outside [0, {}]",
                self.total_epochs
            )));
        }
        Ok(())
    }
}

// Written as a weighted sum so that t = 0 and t = 1 reproduce the endpoints bit for bit.
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a * (1.0 - t) + b * t
}

/// Closed-form polynomial decay `lr0 * (1 - epoch/total)^power`.
pub fn lr_poly(epoch: f64, params: &ScheduleParams) -> Result<f64> {
    params.check_epoch(epoch)?;
    Ok(params.poly_lr0 * (1.0 - epoch / params.total_epochs).powf(params.poly_power))
}

/// Recursive variant `lr_{t+1} = lr_t * (1 - t/total)^power` starting from
/// `lr0` at epoch 0. It decays far faster than the closed form; kept for comparison.
pub fn lr_poly_recursive(epoch: usize, params: &ScheduleParams) -> Result<f64> {
    params.check_epoch(epoch as f64)?;
    let mut lr = params.poly_lr0;
    for t in 0..epoch {
        lr *= (1.0 - t as f64 / params.total_epochs).powf(params.poly_power);
    }
    Ok(lr)
}

/// One-cycle policy: cosine ramp from `lr_init` to `lr_max` over
/// `up_epochs`, then cosine decay to `lr_final` at `total_epochs`.
pub fn lr_one_cycle(epoch: f64, params: &ScheduleParams) -> Result<f64> {
    params.check_epoch(epoch)?;
    if epoch <= params.up_epochs {
        let t = (1.0 - (PI * epoch / params.up_epochs).cos()) / 2.0;
        Ok(lerp(params.lr_init, params.lr_max, t))
    } else {
        let down = params.total_epochs - params.up_epochs;
        let t = (1.0 + (PI * (epoch - params.up_epochs) / down).cos()) / 2.0;
        Ok(lerp(params.lr_final, params.lr_max, t))
    }
}
