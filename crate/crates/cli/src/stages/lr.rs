use super::{RunOutput, StageConfig};
use crate::error::{CliError, CliResult};
use crate::io::{sidecar, Inputs, Outputs};
use clap::{Args, ValueEnum};
use footprint_core::trainmath::{lr_one_cycle, lr_poly, lr_poly_recursive, ScheduleParams};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Poly,
    Onecycle,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct LrArgs {
    #[arg(long, value_enum)]
    pub schedule: Option<Schedule>,
    /// Use the recursive poly update instead of the closed form.
    #[arg(long)]
    pub recursive: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// One-cycle warm-up length.
    #[arg(long)]
    pub up_epochs: Option<usize>,
    /// CSV destination (default: standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LrParams {
    pub schedule: Schedule,
    pub recursive: bool,
    pub epochs: usize,
    pub up_epochs: usize,
}

#[derive(Debug, Clone)]
pub struct LrConfig {
    pub output: Option<PathBuf>,
    pub params: LrParams,
}

impl LrArgs {
    pub fn resolve(self) -> CliResult<LrConfig> {
        let schedule = self.schedule.unwrap_or(Schedule::Onecycle);
        if self.recursive && schedule != Schedule::Poly {
            return Err(CliError::usage(
                "--recursive applies to --schedule poly only",
            ));
        }
        let d = ScheduleParams::default();
        let params = LrParams {
            schedule,
            recursive: self.recursive,
            epochs: self.epochs.unwrap_or(d.total_epochs as usize),
            up_epochs: self.up_epochs.unwrap_or(d.up_epochs as usize),
        };
        schedule_params(&params)
            .validate()
            .map_err(|e| CliError::usage(e.to_string()))?;
        Ok(LrConfig {
            output: self.output,
            params,
        })
    }
}

fn schedule_params(p: &LrParams) -> ScheduleParams {
    ScheduleParams {
        total_epochs: p.epochs as f64,
        up_epochs: p.up_epochs as f64,
        ..ScheduleParams::default()
    }
}

/// `epoch,lr` rows for every integer epoch from 0 to the total.
pub fn schedule_csv(p: &LrParams) -> CliResult<String> {
    let sp = schedule_params(p);
    let mut out = String::from("epoch,lr\n");
    for e in 0..=p.epochs {
        let lr = match (p.schedule, p.recursive) {
            (Schedule::Onecycle, _) => lr_one_cycle(e as f64, &sp)?,
            (Schedule::Poly, false) => lr_poly(e as f64, &sp)?,
            (Schedule::Poly, true) => lr_poly_recursive(e, &sp)?,
        };
        out.push_str(&format!("{e},{lr:e}\n"));
    }
    Ok(out)
}

impl LrConfig {
    pub fn run(&self, stage: &StageConfig) -> CliResult<RunOutput> {
        let csv = schedule_csv(&self.params)?;
        match &self.output {
            None => Ok(RunOutput {
                stdout: csv,
                manifest: None,
            }),
            Some(path) => {
                let mut outputs = Outputs::default();
                outputs.add(path, csv.into_bytes());
                let manifest = outputs.commit(
                    &sidecar(path),
                    stage.name(),
                    &stage.params(),
                    Inputs::default(),
                )?;
                Ok(RunOutput {
                    stdout: String::new(),
                    manifest: Some(manifest),
                })
            }
        }
    }
}
