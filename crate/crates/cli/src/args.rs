//! Flags and the optional TOML config file. Every subcommand has a table in
//! the config named after it, with the same keys as its long flags.
//! Flags given on the command line win over config values.

use std::path::{Path, PathBuf};

use camscope_core::aggregate::{AggregationMethod, VariabilityMethod};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::failure::{Classify, CmdResult};

#[derive(Debug, Parser)]
#[command(name = "camscope", version, about = "Train packet classifiers and explore their class activation maps")]
pub struct Cli {
    /// TOML file with per-subcommand defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn labelled pcap captures or a CSV table into a dataset bundle.
    Prepare(PrepareArgs),
    /// Generate a planted-motif dataset bundle.
    Synth(SynthArgs),
    /// Train a model on a dataset bundle.
    Train(TrainArgs),
    /// Classify every sample of a bundle.
    Predict(PredictArgs),
    /// Write one class's aggregated CAM as JSON and optionally SVG.
    ExportCam(ExportCamArgs),
    /// Serve the HTTP API (and optionally a UI directory).
    Serve(ServeArgs),
}

macro_rules! fill_from {
    ($ty:ident { $($field:ident),* $(,)? }) => {
        impl $ty {
            /// Takes every option not set on the command line from `config`.
            pub fn fill_from(mut self, config: Self) -> Self {
                $( if self.$field.is_none() { self.$field = config.$field; } )*
                self
            }
        }
    };
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct PrepareArgs {
    /// Directory holding the captures named in the manifest.
    #[arg(long, value_name = "DIR")]
    pub pcap_dir: Option<PathBuf>,
    /// JSON `{"files": {"<capture>": "<class>"}}`.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Numeric CSV with a `label` column, instead of captures.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["pcap_dir", "manifest"])]
    pub csv: Option<PathBuf>,
    /// Output bundle; `.json` writes JSON, anything else the binary format.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Undersample every larger class to this many samples.
    #[arg(long, value_name = "N")]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}
fill_from!(PrepareArgs { pcap_dir, manifest, csv, out, per_class, seed });

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SynthArgs {
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long, value_name = "N")]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub motif_len: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Also write the planted motifs as JSON.
    #[arg(long, value_name = "FILE")]
    pub motifs: Option<PathBuf>,
}
fill_from!(SynthArgs { classes, per_class, length, motif_len, seed, out, motifs });

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct TrainArgs {
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// Weight file to write.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Per-epoch metrics CSV; defaults to `<out>.metrics.csv`.
    #[arg(long, value_name = "FILE")]
    pub metrics: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Convolution widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub channels: Option<Vec<usize>>,
    #[arg(long)]
    pub kernel_size: Option<usize>,
}
fill_from!(TrainArgs { data, out, metrics, epochs, seed, batch_size, lr, channels, kernel_size });

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct PredictArgs {
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub weights: Option<PathBuf>,
    /// CSV of predictions; standard output when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}
fill_from!(PredictArgs { data, weights, out });

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExportCamArgs {
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub class: Option<usize>,
    /// mean, median or kde_mode.
    #[arg(long)]
    pub agg: Option<AggregationMethod>,
    /// variance, stddev, entropy or gini.
    #[arg(long)]
    pub var: Option<VariabilityMethod>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub svg: Option<PathBuf>,
    /// Cells per SVG row.
    #[arg(long)]
    pub wrap: Option<usize>,
    #[arg(long)]
    pub cell_size: Option<f64>,
}
fill_from!(ExportCamArgs { data, weights, class, agg, var, out, svg, wrap, cell_size });

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ServeArgs {
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub weights: Option<PathBuf>,
    /// Address to bind, e.g. 127.0.0.1:8080 (port 0 picks a free port).
    #[arg(long, value_name = "ADDR")]
    pub listen: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub ui_dir: Option<PathBuf>,
}
fill_from!(ServeArgs { data, weights, listen, ui_dir });

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub prepare: PrepareArgs,
    pub synth: SynthArgs,
    pub train: TrainArgs,
    pub predict: PredictArgs,
    pub export_cam: ExportCamArgs,
    pub serve: ServeArgs,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CmdResult<Self> {
        let text = std::fs::read_to_string(path).invalid(format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).invalid(format!("invalid config {}", path.display()))
    }
}

impl Command {
    pub fn with_config(self, config: ConfigFile) -> Self {
        match self {
            Command::Prepare(a) => Command::Prepare(a.fill_from(config.prepare)),
            Command::Synth(a) => Command::Synth(a.fill_from(config.synth)),
            Command::Train(a) => Command::Train(a.fill_from(config.train)),
            Command::Predict(a) => Command::Predict(a.fill_from(config.predict)),
            Command::ExportCam(a) => Command::ExportCam(a.fill_from(config.export_cam)),
            Command::Serve(a) => Command::Serve(a.fill_from(config.serve)),
        }
    }
}
