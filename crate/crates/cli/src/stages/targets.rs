use super::{check_image_id, RunOutput, StageConfig};
use crate::config::required;
use crate::error::CliResult;
use crate::io::{Inputs, Outputs};
use clap::{Args, ValueEnum};
use footprint_core::annotations::ingest_annotations;
use footprint_core::formats::{encode_pgm, encode_pmap};
use footprint_core::raster::Kernel;
use footprint_core::targets::{
    make_border_mask, make_building_mask, make_spacing_mask, TargetStack, BORDER_EROSIONS,
    BORDER_KERNEL_SIDE, SPACING_KERNEL_SIDE, SPACING_MAX_DIST,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetFormat {
    /// Three masks per image: `<id>.building.pgm`, `<id>.border.pgm`, `<id>.spacing.pgm`.
    Pgm,
    /// One 3-channel `<id>.pmap` per image.
    Pmap,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct TargetsArgs {
    /// Annotation JSON (`{image: [{"points": [[x, y], ...]}]}`) or GeoJSON.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<TargetFormat>,
    /// Image id for GeoJSON features that carry none.
    #[arg(long)]
    pub image: Option<String>,
    /// Erosion passes for the border ring.
    #[arg(long)]
    pub erosions: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetsParams {
    pub height: usize,
    pub width: usize,
    pub format: TargetFormat,
    pub default_image: String,
    pub erosions: usize,
}

#[derive(Debug, Clone)]
pub struct TargetsConfig {
    pub annotations: PathBuf,
    pub out_dir: PathBuf,
    pub params: TargetsParams,
}

impl TargetsArgs {
    pub fn resolve(self) -> CliResult<TargetsConfig> {
        let height = required(self.height, "height")?;
        let width = required(self.width, "width")?;
        if height == 0 || width == 0 {
            return Err(crate::CliError::usage("--height and --width must be >= 1"));
        }
        let default_image = self.image.unwrap_or_else(|| "image".into());
        check_image_id(&default_image)?;
        Ok(TargetsConfig {
            annotations: required(self.annotations, "annotations")?,
            out_dir: required(self.out_dir, "out-dir")?,
            params: TargetsParams {
                height,
                width,
                format: self.format.unwrap_or(TargetFormat::Pgm),
                default_image,
                erosions: self.erosions.unwrap_or(BORDER_EROSIONS),
            },
        })
    }
}

impl TargetsConfig {
    pub fn run(&self, stage: &StageConfig) -> CliResult<RunOutput> {
        let p = &self.params;
        let mut inputs = Inputs::default();
        let doc = inputs.read_string(&self.annotations)?;
        let ann = ingest_annotations(&doc, &p.default_image)?;
        for id in ann.keys() {
            check_image_id(id)?;
        }
        let border_kernel = Kernel::square(BORDER_KERNEL_SIDE)?;
        let spacing_kernel = Kernel::square(SPACING_KERNEL_SIDE)?;
        let stacks: Vec<(String, TargetStack)> = ann
            .par_iter()
            .map(|(id, rings)| {
                let building = make_building_mask(rings, p.height, p.width)?;
                let border = make_border_mask(rings, p.height, p.width, p.erosions, border_kernel)?;
                let spacing = make_spacing_mask(&building, spacing_kernel, SPACING_MAX_DIST)?;
                Ok((
                    id.clone(),
                    TargetStack {
                        building,
                        border,
                        spacing,
                    },
                ))
            })
            .collect::<footprint_core::Result<_>>()?;
        let mut outputs = Outputs::default();
        for (id, stack) in &stacks {
            match p.format {
                TargetFormat::Pgm => {
                    for (name, mask) in TargetStack::CHANNEL_NAMES.iter().zip(stack.channels()) {
                        outputs.add(
                            self.out_dir.join(format!("{id}.{name}.pgm")),
                            encode_pgm(mask),
                        );
                    }
                }
                TargetFormat::Pmap => {
                    outputs.add(
                        self.out_dir.join(format!("{id}.pmap")),
                        encode_pmap(&stack.to_prob_map()),
                    );
                }
            }
        }
        let manifest = outputs.commit(
            &self.out_dir.join("targets.manifest.json"),
            stage.name(),
            &stage.params(),
            inputs,
        )?;
        Ok(RunOutput {
            stdout: format!("{} image(s)\n", stacks.len()),
            manifest: Some(manifest),
        })
    }
}
