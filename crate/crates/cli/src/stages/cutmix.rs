use super::{RunOutput, StageConfig};
use crate::config::required;
use crate::error::{CliError, CliResult};
use crate::io::{sidecar, Inputs, Outputs};
use clap::Args;
use footprint_core::formats::{decode_pmap, encode_pmap};
use footprint_core::targets::TargetStack;
use footprint_core::trainmath::{cutmix, sample_box, MixBox, MixSample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct CutmixArgs {
    /// Image of the base sample (PMAP1).
    #[arg(long)]
    pub image_a: Option<PathBuf>,
    /// 3-channel target stack of the base sample (PMAP1).
    #[arg(long)]
    pub targets_a: Option<PathBuf>,
    #[arg(long)]
    pub image_b: Option<PathBuf>,
    #[arg(long)]
    pub targets_b: Option<PathBuf>,
    /// Explicit box `row,col,height,width`.
    #[arg(long = "box", value_name = "ROW,COL,H,W")]
    pub mix_box: Option<String>,
    /// Seed for a random box.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_image: Option<PathBuf>,
    #[arg(long)]
    pub out_targets: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoxChoice {
    Explicit(MixBox),
    Seed(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutmixParams {
    #[serde(rename = "box")]
    pub choice: BoxChoice,
}

#[derive(Debug, Clone)]
pub struct CutmixConfig {
    pub image_a: PathBuf,
    pub targets_a: PathBuf,
    pub image_b: PathBuf,
    pub targets_b: PathBuf,
    pub out_image: PathBuf,
    pub out_targets: PathBuf,
    pub params: CutmixParams,
}

fn parse_box(s: &str) -> CliResult<MixBox> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::usage(format!("--box {s:?}: {e}")))?;
    match v[..] {
        [row, col, height, width] => Ok(MixBox {
            row,
            col,
            height,
            width,
        }),
        _ => Err(CliError::usage(format!(
            "--box {s:?} needs row,col,height,width"
        ))),
    }
}

impl CutmixArgs {
    pub fn resolve(self) -> CliResult<CutmixConfig> {
        let choice = match (self.mix_box, self.seed) {
            (Some(_), Some(_)) => {
                return Err(CliError::usage("--box and --seed are mutually exclusive"))
            }
            (Some(b), None) => BoxChoice::Explicit(parse_box(&b)?),
            (None, Some(s)) => BoxChoice::Seed(s),
            (None, None) => return Err(CliError::usage("cutmix needs --box or --seed")),
        };
        Ok(CutmixConfig {
            image_a: required(self.image_a, "image-a")?,
            targets_a: required(self.targets_a, "targets-a")?,
            image_b: required(self.image_b, "image-b")?,
            targets_b: required(self.targets_b, "targets-b")?,
            out_image: required(self.out_image, "out-image")?,
            out_targets: required(self.out_targets, "out-targets")?,
            params: CutmixParams { choice },
        })
    }
}

fn load(inputs: &mut Inputs, image: &Path, targets: &Path) -> CliResult<MixSample> {
    Ok(MixSample {
        image: decode_pmap(&inputs.read(image)?)?,
        targets: TargetStack::from_prob_map(&decode_pmap(&inputs.read(targets)?)?)?,
    })
}

impl CutmixConfig {
    pub fn run(&self, stage: &StageConfig) -> CliResult<RunOutput> {
        let mut inputs = Inputs::default();
        let a = load(&mut inputs, &self.image_a, &self.targets_a)?;
        let b = load(&mut inputs, &self.image_b, &self.targets_b)?;
        let mix_box = match self.params.choice {
            BoxChoice::Explicit(b) => b,
            BoxChoice::Seed(s) => {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                sample_box(a.image.height(), a.image.width(), &mut rng).0
            }
        };
        let mixed = cutmix(&a, &b, mix_box)?;
        let mut outputs = Outputs::default();
        outputs.add(&self.out_image, encode_pmap(&mixed.image));
        outputs.add(&self.out_targets, encode_pmap(&mixed.targets.to_prob_map()));
        let manifest = outputs.commit(
            &sidecar(&self.out_image),
            stage.name(),
            &stage.params(),
            inputs,
        )?;
        Ok(RunOutput {
            stdout: format!(
                "{}\n",
                serde_json::to_string(&mix_box).expect("box serializes")
            ),
            manifest: Some(manifest),
        })
    }
}
