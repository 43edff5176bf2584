use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "depcap",
    version,
    about = "Estimate dependence strength: UMI, CMI, channel capacity"
)]
pub struct Cli {
    /// Also report values in bits (estimates are always computed in nats)
    #[arg(long, global = true)]
    pub bits: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Estimate an information quantity from a CSV sample
    Estimate(EstimateArgs),
    /// Discrete channel tools
    #[command(subcommand)]
    Channel(ChannelCommand),
    /// Run the axiom battery for a dependence measure
    Axioms(AxiomArgs),
    /// Synthetic benchmarks
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ksg,
    Entropy,
    Umi,
    UmiDisc,
    Cmi,
    CmiDisc,
    PartitionMi,
    PartitionUmi,
    PartitionCmi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyOf {
    X,
    Y,
    Joint,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// CSV with columns x0.. and y0.. (or xcat and y0.. for categorical X)
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Required by the optimizing methods (cmi, cmi-disc)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Second-moment budget for cmi; defaults to the empirical second moment
    #[arg(long)]
    pub a: Option<f64>,
    /// Comma-separated target prior over labels in first-appearance order
    #[arg(long, value_delimiter = ',')]
    pub target_prior: Option<Vec<f64>>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    pub c_reg: f64,
    /// Fixed KDE bandwidth; defaults to ½N^(-1/(2d+3))
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub c_lo: f64,
    #[arg(long, default_value_t = 10.0)]
    pub c_hi: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    #[arg(long, default_value_t = 500)]
    pub iters: usize,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Which block the entropy method measures
    #[arg(long, value_enum, default_value = "x")]
    pub of: EntropyOf,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum ChannelCommand {
    /// Shannon capacity (Blahut–Arimoto) or Rényi capacity of a channel matrix
    Capacity(CapacityArgs),
    /// Serial composition: first then second
    Compose(PairArgs),
    /// Parallel (Kronecker) product
    Parallel(PairArgs),
    /// Append a convex combination of existing rows
    Augment(AugmentArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CapacityArgs {
    /// CSV of row-stochastic rows, one input symbol per row
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub renyi: Option<f64>,
    #[arg(long, default_value_t = 1e-11)]
    pub tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_iters: usize,
    /// Simplex grid resolution for Rényi capacity
    #[arg(long, default_value_t = 60)]
    pub resolution: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PairArgs {
    #[arg(long)]
    pub first: PathBuf,
    #[arg(long)]
    pub second: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AugmentArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Comma-separated mixing weights over the existing rows
    #[arg(long, value_delimiter = ',', required = true)]
    pub alpha: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct AxiomArgs {
    /// shannon, umi, or renyi:<order>
    #[arg(long)]
    pub measure: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Umi,
    Cmi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Knn,
    Partition,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strength {
    Ksg,
    Umi,
    Cmi,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum BenchCommand {
    /// Sample-complexity sweep on the Beta-input Gaussian channel
    Sweep(SweepArgs),
    /// Trend-recovery probability under subsampling
    Trend(TrendArgs),
    /// Generate a three-gene cascade CSV with columns t,x,y,z
    Cascade(CascadeArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub figure: Figure,
    #[arg(long, value_delimiter = ',', required = true)]
    pub sigmas: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub ns: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub methods: Baseline,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrendArgs {
    /// CSV with a t column and the columns named in --peaks
    #[arg(long)]
    pub input: PathBuf,
    /// Expected peak timepoint per edge, e.g. x:y=0,y:z=1
    #[arg(long, value_delimiter = ',', required = true)]
    pub peaks: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub rates: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, value_enum, default_value = "umi")]
    pub method: Strength,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CascadeArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub timepoints: Vec<f64>,
    /// σ² of the X→Y noise, one per timepoint
    #[arg(long, value_delimiter = ',', required = true)]
    pub noise_xy: Vec<f64>,
    /// σ² of the Y→Z noise, one per timepoint
    #[arg(long, value_delimiter = ',', required = true)]
    pub noise_yz: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    pub n_per_t: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}
