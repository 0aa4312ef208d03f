use super::{channel_names, stem, RunOutput, StageConfig};
use crate::config::unit_interval;
use crate::error::{CliError, CliResult};
use crate::io::{sidecar, Inputs, Outputs};
use clap::Args;
use footprint_core::formats::{decode_pmap, encode_pgm, encode_pmap};
use footprint_core::fusion::{binarize, fuse_folds, FoldInput, ViewTransform, DEFAULT_THRESHOLD};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct FuseArgs {
    /// Fold probability map (PMAP1). With --tta, the base name whose
    /// `.id`, `.hf`, `.vf` and `.r180` variants are read.
    #[arg(long = "input", required = false)]
    pub input: Vec<PathBuf>,
    /// Average four flipped/rotated views per fold before the fold ensemble.
    #[arg(long)]
    pub tta: bool,
    #[arg(long)]
    pub threshold: Option<f32>,
    /// Fused PMAP1; per-channel masks go next to it as `<stem>.<channel>.pgm`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuseParams {
    pub folds: usize,
    pub tta: bool,
    pub threshold: f32,
}

#[derive(Debug, Clone)]
pub struct FuseConfig {
    pub inputs: Vec<PathBuf>,
    pub output: PathBuf,
    pub params: FuseParams,
}

impl FuseArgs {
    pub fn resolve(self) -> CliResult<FuseConfig> {
        if self.input.is_empty() {
            return Err(CliError::usage("fuse needs at least one --input"));
        }
        let threshold = self.threshold.unwrap_or(DEFAULT_THRESHOLD);
        unit_interval(threshold as f64, "threshold")?;
        Ok(FuseConfig {
            params: FuseParams {
                folds: self.input.len(),
                tta: self.tta,
                threshold,
            },
            inputs: self.input,
            output: crate::config::required(self.output, "output")?,
        })
    }
}

/// `fold0.pmap` + `hf` -> `fold0.hf.pmap`.
pub fn view_path(base: &Path, view: ViewTransform) -> PathBuf {
    let name = base
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let file = match name.rfind('.') {
        Some(i) if i > 0 => format!("{}.{}{}", &name[..i], view.suffix(), &name[i..]),
        _ => format!("{name}.{}", view.suffix()),
    };
    base.with_file_name(file)
}

impl FuseConfig {
    pub fn run(&self, stage: &StageConfig) -> CliResult<RunOutput> {
        let mut inputs = Inputs::default();
        let mut folds = Vec::with_capacity(self.inputs.len());
        for base in &self.inputs {
            if self.params.tta {
                let mut views = Vec::with_capacity(4);
                for v in ViewTransform::ALL {
                    views.push((v, decode_pmap(&inputs.read(&view_path(base, v))?)?));
                }
                folds.push(FoldInput::Views(views));
            } else {
                folds.push(FoldInput::Single(decode_pmap(&inputs.read(base)?)?));
            }
        }
        let fused = fuse_folds(folds)?.fused;
        let mut outputs = Outputs::default();
        outputs.add(&self.output, encode_pmap(&fused));
        let base = stem(&self.output, &[".pmap"]);
        for (c, name) in channel_names(fused.channels()).iter().enumerate() {
            let mask = binarize(&fused, c, self.params.threshold)?;
            outputs.add(
                self.output.with_file_name(format!("{base}.{name}.pgm")),
                encode_pgm(&mask),
            );
        }
        let manifest = outputs.commit(
            &sidecar(&self.output),
            stage.name(),
            &stage.params(),
            inputs,
        )?;
        Ok(RunOutput {
            stdout: String::new(),
            manifest: Some(manifest),
        })
    }
}
