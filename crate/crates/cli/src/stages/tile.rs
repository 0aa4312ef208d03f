use super::{RunOutput, StageConfig};
use crate::config::required;
use crate::error::{CliError, CliResult};
use crate::io::{sidecar, Inputs, Outputs};
use clap::Args;
use footprint_core::annotations::ingest_annotations;
use footprint_core::dataset::{
    crop_samples, subdivide_tile, tile_index, window_is_blank, TileRecord, CROP_SIZE,
    DEFAULT_TILE_SIZE,
};
use footprint_core::formats::{decode_pgm_samples, encode_pgm_samples};
use footprint_core::targets::PolygonRing;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::path::PathBuf;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct TileArgs {
    /// Source raster (8-bit PGM).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub size: Option<usize>,
    /// Sample value marking "no data"; tiles made only of it are blank.
    #[arg(long)]
    pub nodata: Option<u8>,
    /// Tile index JSON to write.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Also write each non-blank tile as `tile_<id>.pgm` here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Split each non-blank tile into four 512-pixel quadrants instead.
    #[arg(long)]
    pub subdivide: bool,
    /// Annotations in source pixel coordinates, remapped into each quadrant.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TileParams {
    pub size: usize,
    pub nodata: u8,
    pub write_tiles: bool,
    pub subdivide: bool,
}

#[derive(Debug, Clone)]
pub struct TileConfig {
    pub input: PathBuf,
    pub index: PathBuf,
    pub out_dir: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub params: TileParams,
}

impl TileArgs {
    pub fn resolve(self) -> CliResult<TileConfig> {
        let size = self.size.unwrap_or(DEFAULT_TILE_SIZE);
        if size == 0 {
            return Err(CliError::usage("--size must be >= 1"));
        }
        if self.subdivide && (size != DEFAULT_TILE_SIZE || self.out_dir.is_none()) {
            return Err(CliError::usage(format!(
                "--subdivide needs --size {DEFAULT_TILE_SIZE} and --out-dir"
            )));
        }
        if self.annotations.is_some() && !self.subdivide {
            return Err(CliError::usage(
                "--annotations is only used with --subdivide",
            ));
        }
        Ok(TileConfig {
            input: required(self.input, "input")?,
            index: required(self.index, "index")?,
            params: TileParams {
                size,
                nodata: self.nodata.unwrap_or(0),
                write_tiles: self.out_dir.is_some(),
                subdivide: self.subdivide,
            },
            out_dir: self.out_dir,
            annotations: self.annotations,
        })
    }
}

fn points_doc(rings: &[PolygonRing]) -> Value {
    Value::Array(
        rings
            .iter()
            .map(|r| json!({ "points": r.vertices.iter().map(|&(x, y)| json!([x, y])).collect::<Vec<_>>() }))
            .collect(),
    )
}

impl TileConfig {
    pub fn run(&self, stage: &StageConfig) -> CliResult<RunOutput> {
        let p = &self.params;
        let mut inputs = Inputs::default();
        let (h, w, samples) = decode_pgm_samples(&inputs.read(&self.input)?)?;
        let rings: Vec<PolygonRing> = match &self.annotations {
            Some(path) => ingest_annotations(&inputs.read_string(path)?, "source")?
                .into_values()
                .flatten()
                .collect(),
            None => Vec::new(),
        };
        let mut tiles = tile_index(h, w, p.size, |_, _| false)?;
        tiles
            .par_iter_mut()
            .for_each(|t| t.blank = window_is_blank(&samples, w, t.row, t.col, p.size, p.nodata));

        let mut outputs = Outputs::default();
        if let Some(dir) = &self.out_dir {
            let kept: Vec<&TileRecord> = tiles.iter().filter(|t| !t.blank).collect();
            if p.subdivide {
                let crops = kept
                    .par_iter()
                    .map(|t| {
                        let tile = crop_samples(&samples, w, t.row, t.col, p.size);
                        let local: Vec<PolygonRing> = rings
                            .iter()
                            .map(|r| r.translate(-(t.col as f64), -(t.row as f64)))
                            .collect();
                        subdivide_tile(p.size, p.size, &tile, &local).map(|c| (t.tile_id, c))
                    })
                    .collect::<footprint_core::Result<Vec<_>>>()?;
                let mut ann = Map::new();
                for (id, quads) in crops {
                    for (q, crop) in quads.iter().enumerate() {
                        let name = format!("tile_{id:06}_q{q}");
                        outputs.add(
                            dir.join(format!("{name}.pgm")),
                            encode_pgm_samples(CROP_SIZE, CROP_SIZE, &crop.samples),
                        );
                        ann.insert(name, points_doc(&crop.rings));
                    }
                }
                if self.annotations.is_some() {
                    let mut doc = serde_json::to_vec_pretty(&Value::Object(ann))
                        .expect("annotations serialize");
                    doc.push(b'\n');
                    outputs.add(dir.join("crops.json"), doc);
                }
            } else {
                let encoded: Vec<(u32, Vec<u8>)> = kept
                    .par_iter()
                    .map(|t| {
                        (
                            t.tile_id,
                            encode_pgm_samples(
                                p.size,
                                p.size,
                                &crop_samples(&samples, w, t.row, t.col, p.size),
                            ),
                        )
                    })
                    .collect();
                for (id, bytes) in encoded {
                    outputs.add(dir.join(format!("tile_{id:06}.pgm")), bytes);
                }
            }
        }
        let mut index = serde_json::to_vec_pretty(&tiles).expect("tile index serializes");
        index.push(b'\n');
        outputs.add(&self.index, index);
        let manifest =
            outputs.commit(&sidecar(&self.index), stage.name(), &stage.params(), inputs)?;
        let blank = tiles.iter().filter(|t| t.blank).count();
        Ok(RunOutput {
            stdout: format!("{} tile(s), {blank} blank\n", tiles.len()),
            manifest: Some(manifest),
        })
    }
}
