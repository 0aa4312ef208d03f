//! Training numerics: segmentation losses with analytic gradients, learning
//! rate schedules and CutMix sample synthesis.

mod cutmix;
mod gradcheck;
mod loss;
mod schedule;

pub use cutmix::{cutmix, sample_box, MixBox, MixSample};
pub use gradcheck::{max_relative_error, random_gradcheck, LossKind};
pub use loss::{
    bce_loss, channel_loss, dice_loss, total_loss, ChannelWeights, LossParams, LossValue,
};
pub use schedule::{lr_one_cycle, lr_poly, lr_poly_recursive, ScheduleParams};
