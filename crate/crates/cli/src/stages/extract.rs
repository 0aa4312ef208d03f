use super::{check_image_id, check_unique, stem, RunOutput, StageConfig};
use crate::config::{required, unit_interval};
use crate::error::{CliError, CliResult};
use crate::io::{Inputs, Outputs};
use clap::{Args, ValueEnum};
use footprint_core::annotations::polygon_set_to_geojson;
use footprint_core::extract::PolygonSet;
use footprint_core::extract::{
    extract_multi_class, extract_single_class, ExtractParams, DEFAULT_MIN_AREA,
};
use footprint_core::formats::{decode_pgm, decode_pmap, encode_imap, PMAP_MAGIC};
use footprint_core::fusion::{binarize, DEFAULT_THRESHOLD};
use footprint_core::raster::{BinaryMask, InstanceMap, ProbMap};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Connected components of the building mask.
    Single,
    /// Border-subtracted seeds grown back over the building mask.
    Multi,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct ExtractArgs {
    /// PMAP1 map, or a `<id>.building.pgm` mask (multi mode also reads the
    /// sibling `<id>.border.pgm` and, if present, `<id>.spacing.pgm`).
    #[arg(long = "input", required = false)]
    pub input: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub min_area: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f32>,
    /// Ignore the spacing channel even when the input has one.
    #[arg(long)]
    pub no_spacing: bool,
    /// Receives `<id>.geojson` and `<id>.imap` per input.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractStageParams {
    pub mode: Mode,
    pub min_area: usize,
    pub threshold: f32,
    pub use_spacing: bool,
}

#[derive(Debug, Clone)]
pub struct ExtractConfig {
    pub inputs: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub params: ExtractStageParams,
}

impl ExtractArgs {
    pub fn resolve(self) -> CliResult<ExtractConfig> {
        if self.input.is_empty() {
            return Err(CliError::usage("extract needs at least one --input"));
        }
        let threshold = self.threshold.unwrap_or(DEFAULT_THRESHOLD);
        unit_interval(threshold as f64, "threshold")?;
        Ok(ExtractConfig {
            inputs: self.input,
            out_dir: required(self.out_dir, "out-dir")?,
            params: ExtractStageParams {
                mode: self.mode.unwrap_or(Mode::Multi),
                min_area: self.min_area.unwrap_or(DEFAULT_MIN_AREA),
                threshold,
                use_spacing: !self.no_spacing,
            },
        })
    }
}

enum Loaded {
    Map(ProbMap),
    Masks(Vec<BinaryMask>),
}

const BUILDING_SUFFIX: &str = ".building.pgm";

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    path.with_file_name(format!("{}{suffix}", stem(path, &[BUILDING_SUFFIX])))
}

impl ExtractConfig {
    fn load(&self, inputs: &mut Inputs, path: &Path) -> CliResult<Loaded> {
        let bytes = inputs.read(path)?;
        if bytes.starts_with(PMAP_MAGIC) {
            return Ok(Loaded::Map(decode_pmap(&bytes)?));
        }
        let building = decode_pgm(&bytes)?;
        if self.params.mode == Mode::Single {
            return Ok(Loaded::Masks(vec![building]));
        }
        let name = path.to_string_lossy();
        if !name.ends_with(BUILDING_SUFFIX) {
            return Err(CliError::usage(format!(
                "multi mode reads PGM masks as <id>{BUILDING_SUFFIX} plus siblings, got {name}"
            )));
        }
        let border = decode_pgm(&inputs.read(&sibling(path, ".border.pgm"))?)?;
        let mut masks = vec![building, border];
        let spacing = sibling(path, ".spacing.pgm");
        if self.params.use_spacing && spacing.exists() {
            masks.push(decode_pgm(&inputs.read(&spacing)?)?);
        }
        Ok(Loaded::Masks(masks))
    }

    fn extract(&self, loaded: Loaded) -> CliResult<(InstanceMap, PolygonSet)> {
        let p = &self.params;
        let core = ExtractParams {
            threshold: p.threshold,
            min_area: p.min_area,
            use_spacing: p.use_spacing,
        };
        let out = match (p.mode, loaded) {
            (Mode::Single, Loaded::Map(m)) => {
                extract_single_class(&binarize(&m, 0, p.threshold)?, p.min_area)
            }
            (Mode::Single, Loaded::Masks(ms)) => extract_single_class(&ms[0], p.min_area),
            (Mode::Multi, Loaded::Map(m)) => extract_multi_class(&m, &core)?,
            (Mode::Multi, Loaded::Masks(ms)) => {
                let refs: Vec<&BinaryMask> = ms.iter().collect();
                extract_multi_class(&ProbMap::from_masks(&refs)?, &core)?
            }
        };
        Ok(out)
    }

    pub fn run(&self, stage: &StageConfig) -> CliResult<RunOutput> {
        let mut inputs = Inputs::default();
        let mut jobs = Vec::with_capacity(self.inputs.len());
        for path in &self.inputs {
            let id = stem(path, &[BUILDING_SUFFIX, ".pmap", ".pgm"]);
            check_image_id(&id)?;
            jobs.push((id, self.load(&mut inputs, path)?));
        }
        check_unique(jobs.iter().map(|(id, _)| id))?;
        let results: Vec<(String, InstanceMap, PolygonSet)> = jobs
            .into_par_iter()
            .map(|(id, loaded)| {
                let (inst, set) = self.extract(loaded)?;
                Ok((id.clone(), inst, set.with_image_id(id)))
            })
            .collect::<CliResult<_>>()?;
        let mut outputs = Outputs::default();
        let mut summary = String::new();
        for (id, inst, set) in &results {
            let mut gj = serde_json::to_vec_pretty(&polygon_set_to_geojson(set))
                .expect("GeoJSON serializes");
            gj.push(b'\n');
            outputs.add(self.out_dir.join(format!("{id}.geojson")), gj);
            outputs.add(self.out_dir.join(format!("{id}.imap")), encode_imap(inst));
            summary.push_str(&format!("{id}: {} instance(s)\n", set.instances.len()));
        }
        let manifest = outputs.commit(
            &self.out_dir.join("extract.manifest.json"),
            stage.name(),
            &stage.params(),
            inputs,
        )?;
        Ok(RunOutput {
            stdout: summary,
            manifest: Some(manifest),
        })
    }
}
