pub mod cutmix;
pub mod eval;
pub mod extract;
pub mod fuse;
pub mod lossmath;
pub mod lr;
pub mod split;
pub mod targets;
pub mod tile;

use crate::error::{CliError, CliResult};
use crate::io::Manifest;
use std::path::Path;

#[derive(Debug, Clone)]
pub enum StageConfig {
    Targets(targets::TargetsConfig),
    Fuse(fuse::FuseConfig),
    Extract(extract::ExtractConfig),
    Eval(eval::EvalConfig),
    Tile(tile::TileConfig),
    Split(split::SplitConfig),
    Lossmath(lossmath::LossConfig),
    Lr(lr::LrConfig),
    Cutmix(cutmix::CutmixConfig),
}

impl StageConfig {
    pub fn name(&self) -> &'static str {
        match self {
            StageConfig::Targets(_) => "targets",
            StageConfig::Fuse(_) => "fuse",
            StageConfig::Extract(_) => "extract",
            StageConfig::Eval(_) => "eval",
            StageConfig::Tile(_) => "tile",
            StageConfig::Split(_) => "split",
            StageConfig::Lossmath(_) => "lossmath",
            StageConfig::Lr(_) => "lr",
            StageConfig::Cutmix(_) => "cutmix",
        }
    }

    /// The hashed parameter set: every effective setting except paths and
    /// the thread count.
    pub fn params(&self) -> serde_json::Value {
        let v = match self {
            StageConfig::Targets(c) => serde_json::to_value(&c.params),
            StageConfig::Fuse(c) => serde_json::to_value(&c.params),
            StageConfig::Extract(c) => serde_json::to_value(&c.params),
            StageConfig::Eval(c) => serde_json::to_value(&c.params),
            StageConfig::Tile(c) => serde_json::to_value(&c.params),
            StageConfig::Split(c) => serde_json::to_value(&c.params),
            StageConfig::Lossmath(c) => serde_json::to_value(&c.params),
            StageConfig::Lr(c) => serde_json::to_value(&c.params),
            StageConfig::Cutmix(c) => serde_json::to_value(&c.params),
        };
        v.expect("params serialize")
    }

    pub fn run(&self) -> CliResult<RunOutput> {
        match self {
            StageConfig::Targets(c) => c.run(self),
            StageConfig::Fuse(c) => c.run(self),
            StageConfig::Extract(c) => c.run(self),
            StageConfig::Eval(c) => c.run(self),
            StageConfig::Tile(c) => c.run(self),
            StageConfig::Split(c) => c.run(self),
            StageConfig::Lossmath(c) => c.run(),
            StageConfig::Lr(c) => c.run(self),
            StageConfig::Cutmix(c) => c.run(self),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    /// Text for standard output.
    pub stdout: String,
    pub manifest: Option<Manifest>,
}

/// File name with any of `suffixes` (tried in order) stripped from the end.
pub(crate) fn stem(path: &Path, suffixes: &[&str]) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    for s in suffixes {
        if let Some(base) = name.strip_suffix(s) {
            if !base.is_empty() {
                return base.to_string();
            }
        }
    }
    name
}

/// Image ids become file names, so keep them to a safe character set.
pub(crate) fn check_image_id(id: &str) -> CliResult<()> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
    if ok {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "image id {id:?} is not usable as a file name"
        )))
    }
}

pub(crate) fn check_unique<'a>(ids: impl IntoIterator<Item = &'a String>) -> CliResult<()> {
    let mut seen = std::collections::BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(CliError::usage(format!("duplicate image id {id:?}")));
        }
    }
    Ok(())
}

/// Channel file-name suffixes for a map of `n` channels.
pub(crate) fn channel_names(n: usize) -> Vec<String> {
    if n <= 3 {
        footprint_core::targets::TargetStack::CHANNEL_NAMES[..n]
            .iter()
            .map(|s| s.to_string())
            .collect()
    } else {
        (0..n).map(|i| format!("ch{i}")).collect()
    }
}
