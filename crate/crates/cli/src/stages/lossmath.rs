use super::RunOutput;
use crate::config::required;
use crate::error::{CliError, CliResult};
use crate::io::Inputs;
use clap::{Args, ValueEnum};
use footprint_core::formats::{decode_pgm, decode_pmap};
use footprint_core::trainmath::{
    random_gradcheck, total_loss, ChannelWeights, LossKind, LossParams,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossOp {
    Dice,
    Bce,
    Channel,
    Total,
    Gradcheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradKind {
    Dice,
    Bce,
    Channel,
    All,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct LossArgs {
    #[arg(value_enum)]
    pub op: Option<LossOp>,
    /// Predictions (PMAP1).
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Target mask (PGM).
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Channel of --pred to score.
    #[arg(long)]
    pub channel: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub gamma1: Option<f64>,
    #[arg(long)]
    pub gamma2: Option<f64>,
    #[arg(long)]
    pub clamp: Option<f64>,
    /// Per-channel losses for `total`.
    #[arg(long, value_delimiter = ',')]
    pub losses: Vec<f64>,
    /// Channel weights for `total` (default 1,2,2).
    #[arg(long, value_delimiter = ',')]
    pub weights: Vec<f64>,
    #[arg(long)]
    pub cases: Option<usize>,
    #[arg(long)]
    pub side: Option<usize>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub kind: Option<GradKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum LossParamsOut {
    Pointwise {
        kind: LossOp,
        channel: usize,
        beta: f64,
        eps: f64,
        gamma1: f64,
        gamma2: f64,
        clamp: f64,
    },
    Total {
        losses: Vec<f64>,
        weights: Vec<f64>,
    },
    Gradcheck {
        kind: GradKind,
        cases: usize,
        side: usize,
        step: f64,
        seed: u64,
        beta: f64,
        eps: f64,
        gamma1: f64,
        gamma2: f64,
        clamp: f64,
    },
}

#[derive(Debug, Clone)]
pub struct LossConfig {
    pub pred: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub params: LossParamsOut,
}

impl LossArgs {
    pub fn resolve(self) -> CliResult<LossConfig> {
        let op = required(self.op, "op (dice|bce|channel|total|gradcheck)")?;
        let d = LossParams::default();
        let lp = LossParams {
            beta: self.beta.unwrap_or(d.beta),
            eps: self.eps.unwrap_or(d.eps),
            gamma1: self.gamma1.unwrap_or(d.gamma1),
            gamma2: self.gamma2.unwrap_or(d.gamma2),
            clamp: self.clamp.unwrap_or(d.clamp),
        };
        lp.validate().map_err(|e| CliError::usage(e.to_string()))?;
        let params = match op {
            LossOp::Dice | LossOp::Bce | LossOp::Channel => {
                if self.pred.is_none() || self.gt.is_none() {
                    return Err(CliError::usage("dice/bce/channel need --pred and --gt"));
                }
                LossParamsOut::Pointwise {
                    kind: op,
                    channel: self.channel.unwrap_or(0),
                    beta: lp.beta,
                    eps: lp.eps,
                    gamma1: lp.gamma1,
                    gamma2: lp.gamma2,
                    clamp: lp.clamp,
                }
            }
            LossOp::Total => {
                if self.losses.is_empty() {
                    return Err(CliError::usage("total needs --losses"));
                }
                let weights = if self.weights.is_empty() {
                    ChannelWeights::default().to_vec()
                } else {
                    self.weights
                };
                if weights.len() != self.losses.len() {
                    return Err(CliError::usage(format!(
                        "{} losses but {} weights",
                        self.losses.len(),
                        weights.len()
                    )));
                }
                LossParamsOut::Total {
                    losses: self.losses,
                    weights,
                }
            }
            LossOp::Gradcheck => {
                let step = self.step.unwrap_or(1e-5);
                if !(step > 0.0 && step < 0.05) {
                    return Err(CliError::usage(format!("--step {step} outside (0, 0.05)")));
                }
                let side = self.side.unwrap_or(16);
                if side == 0 {
                    return Err(CliError::usage("--side must be >= 1"));
                }
                LossParamsOut::Gradcheck {
                    kind: self.kind.unwrap_or(GradKind::All),
                    cases: self.cases.unwrap_or(50),
                    side,
                    step,
                    seed: required(self.seed, "seed")?,
                    beta: lp.beta,
                    eps: lp.eps,
                    gamma1: lp.gamma1,
                    gamma2: lp.gamma2,
                    clamp: lp.clamp,
                }
            }
        };
        Ok(LossConfig {
            pred: self.pred,
            gt: self.gt,
            params,
        })
    }
}

/// Nine significant digits, fixed notation when the exponent is moderate.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let s = format!("{:.*}", (8 - exp) as usize, v);
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.')
        } else {
            &s
        };
        s.to_string()
    } else {
        format!("{v:.8e}")
    }
}

impl LossConfig {
    pub fn run(&self) -> CliResult<RunOutput> {
        let value = match &self.params {
            LossParamsOut::Pointwise {
                kind,
                channel,
                beta,
                eps,
                gamma1,
                gamma2,
                clamp,
            } => {
                let mut inputs = Inputs::default();
                let pred =
                    decode_pmap(&inputs.read(self.pred.as_ref().expect("checked in resolve"))?)?;
                let gt = decode_pgm(&inputs.read(self.gt.as_ref().expect("checked in resolve"))?)?;
                if *channel >= pred.channels() {
                    return Err(CliError::usage(format!(
                        "--channel {channel} out of range for {}-channel map",
                        pred.channels()
                    )));
                }
                let p: Vec<f64> = pred.channel(*channel).iter().map(|&v| v as f64).collect();
                let lp = LossParams {
                    beta: *beta,
                    eps: *eps,
                    gamma1: *gamma1,
                    gamma2: *gamma2,
                    clamp: *clamp,
                };
                let kind = match kind {
                    LossOp::Dice => LossKind::Dice,
                    LossOp::Bce => LossKind::Bce,
                    _ => LossKind::Channel,
                };
                kind.eval(&p, &gt, &lp)?.value
            }
            LossParamsOut::Total { losses, weights } => total_loss(losses, weights)?,
            LossParamsOut::Gradcheck {
                kind,
                cases,
                side,
                step,
                seed,
                beta,
                eps,
                gamma1,
                gamma2,
                clamp,
            } => {
                let lp = LossParams {
                    beta: *beta,
                    eps: *eps,
                    gamma1: *gamma1,
                    gamma2: *gamma2,
                    clamp: *clamp,
                };
                let kinds: &[LossKind] = match kind {
                    GradKind::Dice => &[LossKind::Dice],
                    GradKind::Bce => &[LossKind::Bce],
                    GradKind::Channel => &[LossKind::Channel],
                    GradKind::All => &[LossKind::Dice, LossKind::Bce, LossKind::Channel],
                };
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut worst = 0.0f64;
                for &k in kinds {
                    worst = worst.max(random_gradcheck(k, *cases, *side, *step, &lp, &mut rng)?);
                }
                worst
            }
        };
        Ok(RunOutput {
            stdout: format!("{}\n", format_sig9(value)),
            manifest: None,
        })
    }
}
