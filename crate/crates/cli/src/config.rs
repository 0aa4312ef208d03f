//! Argument parsing and the flag > config file > default precedence.

use crate::error::{CliError, CliResult};
use crate::stages::{
    cutmix::CutmixArgs, eval::EvalArgs, extract::ExtractArgs, fuse::FuseArgs, lossmath::LossArgs,
    lr::LrArgs, split::SplitArgs, targets::TargetsArgs, tile::TileArgs, StageConfig,
};
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "footprint",
    version,
    about = "Building-footprint targets, fusion, extraction and scoring"
)]
pub struct Cli {
    /// JSON file with default values for the stage's flags (same names as the long flags).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads (default: logical CPU count). Never affects outputs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub stage: Stage,
}

#[derive(Debug, Subcommand)]
pub enum Stage {
    /// Rasterize polygon annotations into building, border and spacing masks.
    Targets(TargetsArgs),
    /// Average fold (and optional TTA view) probability maps and binarize.
    Fuse(FuseArgs),
    /// Extract building instances and their exterior polygons.
    Extract(ExtractArgs),
    /// Object-level scoring with per-image counts and color maps.
    Eval(EvalArgs),
    /// Cut a source raster into fixed-size tiles and flag blank ones.
    Tile(TileArgs),
    /// Assign folds to the non-blank tiles of a tile index.
    Split(SplitArgs),
    /// Evaluate loss functions or check their gradients.
    Lossmath(LossArgs),
    /// Dump a learning-rate schedule as CSV.
    Lr(LrArgs),
    /// Paste a box of one training sample into another.
    Cutmix(CutmixArgs),
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Targets(_) => "targets",
            Stage::Fuse(_) => "fuse",
            Stage::Extract(_) => "extract",
            Stage::Eval(_) => "eval",
            Stage::Tile(_) => "tile",
            Stage::Split(_) => "split",
            Stage::Lossmath(_) => "lossmath",
            Stage::Lr(_) => "lr",
            Stage::Cutmix(_) => "cutmix",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub threads: Option<usize>,
    pub stage: StageConfig,
}

/// Parses arguments (program name first), loads the `--config` document if
/// any, and resolves the effective stage configuration.
pub fn parse_invocation<I, T>(args: I) -> CliResult<Invocation>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Info(e.to_string()),
            _ => CliError::Parse(e.render().to_string()),
        }
    })?;
    let doc = match &cli.config {
        Some(path) => Some(
            std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?,
        ),
        None => None,
    };
    resolve(cli, doc.as_deref())
}

/// Resolves a parsed command line against an optional JSON config document.
pub fn resolve(cli: Cli, config_doc: Option<&str>) -> CliResult<Invocation> {
    let stage_name = cli.stage.name();
    let mut file = match config_doc {
        Some(text) => match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return Err(CliError::usage("config document must be a JSON object")),
            Err(e) => return Err(CliError::usage(format!("config document: {e}"))),
        },
        None => Map::new(),
    };
    if let Some(s) = file.remove("stage") {
        if s.as_str() != Some(stage_name) {
            return Err(CliError::usage(format!(
                "config is for stage {s}, not {stage_name}"
            )));
        }
    }
    let file_threads = match file.remove("threads") {
        None => None,
        Some(v) => Some(
            v.as_u64()
                .ok_or_else(|| CliError::usage("config \"threads\" must be a positive integer"))?
                as usize,
        ),
    };
    let threads = cli.threads.or(file_threads);
    if threads == Some(0) {
        return Err(CliError::usage("--threads must be >= 1"));
    }
    let stage = match cli.stage {
        Stage::Targets(a) => StageConfig::Targets(merge(&a, file)?.resolve()?),
        Stage::Fuse(a) => StageConfig::Fuse(merge(&a, file)?.resolve()?),
        Stage::Extract(a) => StageConfig::Extract(merge(&a, file)?.resolve()?),
        Stage::Eval(a) => StageConfig::Eval(merge(&a, file)?.resolve()?),
        Stage::Tile(a) => StageConfig::Tile(merge(&a, file)?.resolve()?),
        Stage::Split(a) => StageConfig::Split(merge(&a, file)?.resolve()?),
        Stage::Lossmath(a) => StageConfig::Lossmath(merge(&a, file)?.resolve()?),
        Stage::Lr(a) => StageConfig::Lr(merge(&a, file)?.resolve()?),
        Stage::Cutmix(a) => StageConfig::Cutmix(merge(&a, file)?.resolve()?),
    };
    Ok(Invocation { threads, stage })
}

/// Overlays the flags actually given on the config file values. Unset
/// options, empty lists and `false` switches count as "not given".
fn merge<A: Serialize + DeserializeOwned>(flags: &A, mut file: Map<String, Value>) -> CliResult<A> {
    // Validate the file on its own first so unknown keys are reported as such.
    serde_json::from_value::<A>(Value::Object(file.clone()))
        .map_err(|e| CliError::usage(format!("config document: {e}")))?;
    let Value::Object(given) = serde_json::to_value(flags).expect("flag structs serialize") else {
        unreachable!("flag structs serialize to objects")
    };
    for (k, v) in given {
        let unset = match &v {
            Value::Null | Value::Bool(false) => true,
            Value::Array(a) => a.is_empty(),
            _ => false,
        };
        if !unset {
            file.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(file)).map_err(|e| CliError::usage(e.to_string()))
}

pub(crate) fn required<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::usage(format!("missing required --{flag}")))
}

pub(crate) fn unit_interval(v: f64, flag: &str) -> CliResult<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(CliError::usage(format!("--{flag} {v} outside [0, 1]")))
    }
}
