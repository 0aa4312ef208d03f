use super::{RunOutput, StageConfig};
use crate::config::required;
use crate::error::{CliError, CliResult};
use crate::io::{sidecar, Inputs, Outputs};
use clap::Args;
use footprint_core::dataset::{kfold_assign, TileRecord, DEFAULT_FOLDS};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct SplitArgs {
    #[arg(long)]
    pub k: Option<usize>,
    /// Tile index JSON whose fold fields are rewritten.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Destination (default: rewrite --index in place).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitParams {
    pub k: usize,
}

#[derive(Debug, Clone)]
pub struct SplitConfig {
    pub index: PathBuf,
    pub output: PathBuf,
    pub params: SplitParams,
}

impl SplitArgs {
    pub fn resolve(self) -> CliResult<SplitConfig> {
        let k = self.k.unwrap_or(DEFAULT_FOLDS);
        if k < 2 {
            return Err(CliError::usage(format!("--k {k} must be >= 2")));
        }
        let index = required(self.index, "index")?;
        Ok(SplitConfig {
            output: self.output.unwrap_or_else(|| index.clone()),
            index,
            params: SplitParams { k },
        })
    }
}

impl SplitConfig {
    pub fn run(&self, stage: &StageConfig) -> CliResult<RunOutput> {
        let mut inputs = Inputs::default();
        let text = inputs.read_string(&self.index)?;
        let mut tiles: Vec<TileRecord> =
            serde_json::from_str(&text).map_err(footprint_core::Error::from)?;
        kfold_assign(&mut tiles, self.params.k)?;
        let mut sizes = vec![0usize; self.params.k];
        tiles
            .iter()
            .filter_map(|t| t.fold)
            .for_each(|f| sizes[f as usize] += 1);
        let mut out = serde_json::to_vec_pretty(&tiles).expect("tile index serializes");
        out.push(b'\n');
        let mut outputs = Outputs::default();
        outputs.add(&self.output, out);
        let manifest = outputs.commit(
            &sidecar(&self.output),
            stage.name(),
            &stage.params(),
            inputs,
        )?;
        Ok(RunOutput {
            stdout: format!("fold sizes {sizes:?}\n"),
            manifest: Some(manifest),
        })
    }
}
