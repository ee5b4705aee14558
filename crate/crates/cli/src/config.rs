use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use squarepack::VerifyLevel;

/// Perfect packing of a square by the squares of sidelength n^-t.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "squarepack", version)]
pub struct CliConfig {
    /// Print the parsed configuration as JSON and exit.
    #[arg(long, global = true)]
    #[serde(default)]
    pub dump_config: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "subcommand")]
pub enum Command {
    /// Run the packing engine and write a certificate.
    Pack(PackArgs),
    /// Check a certificate.
    Verify(VerifyArgs),
    /// Run a grid of parameters and tabulate how far each gets.
    Sweep(SweepArgs),
    /// Draw a certificate as SVG.
    Render(RenderArgs),
    /// Pack a single block.
    BlockDemo(BlockDemoArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    #[default]
    Fast,
    FullBruteforce,
}

impl From<Level> for VerifyLevel {
    fn from(l: Level) -> Self {
        match l {
            Level::Fast => VerifyLevel::Fast,
            Level::FullBruteforce => VerifyLevel::FullBruteforce,
        }
    }
}

fn parse_t(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if t > 0.5 && t < 1.0 {
        Ok(t)
    } else {
        Err(format!("t = {t} must lie strictly between 1/2 and 1"))
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PackArgs {
    #[arg(long, value_parser = parse_t)]
    pub t: f64,
    #[arg(long = "m", value_name = "M")]
    #[serde(rename = "M")]
    pub m: u64,
    #[arg(long)]
    pub n0: u64,
    /// Stop once at least this many squares are placed.
    #[arg(long, default_value_t = 10_000)]
    pub budget: u64,
    /// Never place this index or beyond.
    #[arg(long)]
    pub n_max: Option<u64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    pub precision: Precision,
    /// Certificate JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Run report JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Skip the independent check of the final state.
    #[arg(long)]
    #[serde(default)]
    pub no_verify: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    pub path: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub level: Level,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_t, default_values_t = [0.6, 0.75, 0.9])]
    pub t: Vec<f64>,
    #[arg(long = "m", value_name = "M", value_delimiter = ',', default_values_t = [4, 8, 16])]
    #[serde(rename = "M")]
    pub m: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [10_000, 1_000_000, 100_000_000])]
    pub n0: Vec<u64>,
    #[arg(long, default_value_t = 10_000)]
    pub budget: u64,
    /// CSV table; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rows and monotonicity findings as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RenderArgs {
    pub path: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 800)]
    pub pixels: u32,
    #[arg(long)]
    #[serde(default)]
    pub no_residuals: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BlockDemoArgs {
    #[arg(long, default_value_t = 0.75, value_parser = parse_t)]
    pub t: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub n0: u64,
    /// Block scale used when no grid is forced.
    #[arg(long = "m", value_name = "M", default_value_t = 8)]
    #[serde(rename = "M")]
    pub m: u64,
    /// Force the number of columns; needs --m2.
    #[arg(long, requires = "m2")]
    pub m1: Option<u64>,
    #[arg(long, requires = "m1")]
    pub m2: Option<u64>,
    /// Rectangle width in units of n0^-t; defaults to M1 + 1/2 (or M + 1/2).
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub height: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}
