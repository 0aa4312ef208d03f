use super::{check_image_id, check_unique, stem, RunOutput, StageConfig};
use crate::config::required;
use crate::error::{CliError, CliResult};
use crate::io::{sidecar, Inputs, Outputs};
use clap::Args;
use footprint_core::annotations::{polygon_set_from_geojson, rings_to_instances};
use footprint_core::eval::{
    color_map, export_per_image_csv, match_instances, parse_per_image_csv, EvalReport, ImageCounts,
    DEFAULT_IOU_THRESHOLD,
};
use footprint_core::formats::{decode_imap, IMAP_MAGIC};
use footprint_core::raster::InstanceMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct EvalArgs {
    /// Predicted instances (GeoJSON or IMAP1); pairs with the --gt at the same position.
    #[arg(long = "pred", required = false)]
    pub pred: Vec<PathBuf>,
    /// Ground-truth instances (GeoJSON or IMAP1).
    #[arg(long = "gt", required = false)]
    pub gt: Vec<PathBuf>,
    /// Score precomputed per-image counts (`image_id,tp,fp,fn` CSV) instead of instances.
    #[arg(long, conflicts_with_all = ["pred", "gt"])]
    pub counts: Option<PathBuf>,
    #[arg(long)]
    pub iou: Option<f64>,
    /// Color-map PPM; only with a single pred/gt pair.
    #[arg(long)]
    pub colormap: Option<PathBuf>,
    /// Directory receiving `<id>.ppm` per pair.
    #[arg(long)]
    pub colormap_dir: Option<PathBuf>,
    /// Per-image counts CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// JSON report with per-image rows, global counts and F1.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalParams {
    pub iou: f64,
}

#[derive(Debug, Clone)]
pub enum EvalSource {
    Pairs(Vec<(PathBuf, PathBuf)>),
    Counts(PathBuf),
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub source: EvalSource,
    pub colormap: Option<PathBuf>,
    pub colormap_dir: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub report: PathBuf,
    pub params: EvalParams,
}

impl EvalArgs {
    pub fn resolve(self) -> CliResult<EvalConfig> {
        let iou = self.iou.unwrap_or(DEFAULT_IOU_THRESHOLD);
        if !(iou > 0.0 && iou <= 1.0) {
            return Err(CliError::usage(format!("--iou {iou} outside (0, 1]")));
        }
        let source = match self.counts {
            Some(c) => {
                if !self.pred.is_empty() || !self.gt.is_empty() {
                    return Err(CliError::usage("--counts conflicts with --pred/--gt"));
                }
                if self.colormap.is_some() || self.colormap_dir.is_some() {
                    return Err(CliError::usage("color maps need --pred/--gt instances"));
                }
                EvalSource::Counts(c)
            }
            None => {
                if self.pred.is_empty() || self.pred.len() != self.gt.len() {
                    return Err(CliError::usage(format!(
                        "need matching --pred/--gt pairs, got {} and {}",
                        self.pred.len(),
                        self.gt.len()
                    )));
                }
                if self.colormap.is_some() && self.pred.len() != 1 {
                    return Err(CliError::usage(
                        "--colormap takes a single pair; use --colormap-dir",
                    ));
                }
                EvalSource::Pairs(self.pred.into_iter().zip(self.gt).collect())
            }
        };
        Ok(EvalConfig {
            source,
            colormap: self.colormap,
            colormap_dir: self.colormap_dir,
            csv: self.csv,
            report: required(self.report, "report")?,
            params: EvalParams { iou },
        })
    }
}

/// Loads instances and the image id they carry, if any.
fn load_instances(inputs: &mut Inputs, path: &Path) -> CliResult<(InstanceMap, Option<String>)> {
    let bytes = inputs.read(path)?;
    if bytes.starts_with(IMAP_MAGIC) {
        return Ok((decode_imap(&bytes)?, None));
    }
    let text = String::from_utf8(bytes)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let set = polygon_set_from_geojson(&text)?;
    let rings: Vec<_> = set.instances.into_iter().map(|i| i.exterior).collect();
    let id = Some(set.image_id).filter(|s| !s.is_empty());
    Ok((rings_to_instances(&rings, set.height, set.width)?, id))
}

impl EvalConfig {
    pub fn run(&self, stage: &StageConfig) -> CliResult<RunOutput> {
        let mut inputs = Inputs::default();
        let mut outputs = Outputs::default();
        let rows = match &self.source {
            EvalSource::Counts(path) => parse_per_image_csv(&inputs.read_string(path)?)?,
            EvalSource::Pairs(pairs) => {
                let mut loaded = Vec::with_capacity(pairs.len());
                for (p, g) in pairs {
                    let (pred, pid) = load_instances(&mut inputs, p)?;
                    let (gt, _) = load_instances(&mut inputs, g)?;
                    let id = pid.unwrap_or_else(|| stem(p, &[".geojson", ".imap", ".json"]));
                    check_image_id(&id)?;
                    loaded.push((id, pred, gt));
                }
                check_unique(loaded.iter().map(|(id, _, _)| id))?;
                let want_color = self.colormap.is_some() || self.colormap_dir.is_some();
                let scored: Vec<(ImageCounts, Option<Vec<u8>>)> = loaded
                    .par_iter()
                    .map(|(id, pred, gt)| {
                        let m = match_instances(pred, gt, self.params.iou)?;
                        let ppm = if want_color {
                            Some(color_map(pred, gt, &m)?.to_ppm())
                        } else {
                            None
                        };
                        Ok((ImageCounts::new(id.clone(), m.counts), ppm))
                    })
                    .collect::<footprint_core::Result<_>>()?;
                let mut rows = Vec::with_capacity(scored.len());
                for (row, ppm) in scored {
                    if let Some(ppm) = ppm {
                        match (&self.colormap, &self.colormap_dir) {
                            (Some(path), _) => outputs.add(path, ppm.clone()),
                            (None, Some(dir)) => {
                                outputs.add(dir.join(format!("{}.ppm", row.image_id)), ppm)
                            }
                            _ => {}
                        }
                    }
                    rows.push(row);
                }
                rows
            }
        };
        if let Some(path) = &self.csv {
            outputs.add(path, export_per_image_csv(&rows)?.into_bytes());
        }
        let report = EvalReport::from_rows(rows);
        let mut text = serde_json::to_vec_pretty(&report).expect("report serializes");
        text.push(b'\n');
        outputs.add(&self.report, text);
        let manifest = outputs.commit(
            &sidecar(&self.report),
            stage.name(),
            &stage.params(),
            inputs,
        )?;
        let g = report.global;
        Ok(RunOutput {
            stdout: format!(
                "F1 {:.4}% (tp {}, fp {}, fn {})\n",
                report.f1_percent, g.tp, g.fp, g.fn_
            ),
            manifest: Some(manifest),
        })
    }
}
