use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

fn open_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1)"))
    }
}

fn closed_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1]"))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qcert",
    version,
    about = "Certify pure quantum states with single-qubit measurements"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the amplified certification test on simulated lab copies.
    Certify(CertifyArgs),
    /// Exact acceptance and rejection probabilities, fidelity gaps and bounds.
    Analyze(AnalyzeArgs),
    /// Build the phase-state measurement tree for two states.
    Dtbasis(DtbasisArgs),
    /// Codeword-superposition hard instances.
    #[command(subcommand)]
    Lowerbound(LowerboundCommand),
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Target state file (dense or mps).
    #[arg(long)]
    pub target: PathBuf,
    /// Lab state file (dense, mps or mixture).
    #[arg(long)]
    pub lab: PathBuf,
    #[arg(long, value_parser = open_unit)]
    pub epsilon: f64,
    #[arg(long, value_parser = open_unit)]
    pub delta: f64,
    /// Override the number of copies.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub copies: Option<u64>,
    /// Override the reject-fraction threshold (default 3ε/(4n)).
    #[arg(long, value_parser = closed_unit)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub seed: u64,
    /// JSONL report path.
    #[arg(long)]
    pub out: PathBuf,
    /// Largest lab state simulated densely (memory 16·2ⁿ bytes).
    #[arg(long, default_value_t = 24)]
    pub max_qubits: usize,
    /// Largest MPS bond dimension accepted on input.
    #[arg(long, default_value_t = qcert::mps::DEFAULT_CHI_MAX)]
    pub max_bond: usize,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub lab: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Enumeration cap (work about n²·2ⁿ, memory about 16·n·2ⁿ bytes).
    #[arg(long, default_value_t = qcert::analyzer::DEFAULT_ANALYZER_CAP)]
    pub max_qubits: usize,
    #[arg(long, default_value_t = qcert::mps::DEFAULT_CHI_MAX)]
    pub max_bond: usize,
}

#[derive(Debug, Args)]
pub struct DtbasisArgs {
    #[arg(long)]
    pub state0: PathBuf,
    #[arg(long)]
    pub state1: PathBuf,
    /// Write the tree as JSON.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Verify every leaf has probability 2⁻ᵐ for both states.
    #[arg(long)]
    pub check: bool,
    /// Eager tree depth cap (memory about 64·2ᵐ bytes for the nodes).
    #[arg(long, default_value_t = qcert::dtbasis::DEFAULT_MAX_DEPTH)]
    pub max_depth: usize,
    #[arg(long, default_value_t = qcert::mps::DEFAULT_CHI_MAX)]
    pub max_bond: usize,
}

#[derive(Debug, Subcommand)]
pub enum LowerboundCommand {
    /// Sample codes and report norm and mixture-fidelity statistics.
    Gen(EnsembleArgs),
    /// Total variation distance and cross terms in random product bases.
    Tv(TvArgs),
    /// Numerically maximize the single-qubit uncertainty expression.
    Claim(ClaimArgs),
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[arg(long = "n")]
    pub n: usize,
    /// Codewords per code.
    #[arg(long = "N")]
    pub big_n: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TvArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Size of the adaptively measured set (0, 1 or 2).
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=2))]
    pub adaptive: u8,
    /// Dense vector cap (memory 16·(N+1)·2ⁿ bytes per trial).
    #[arg(long, default_value_t = qcert::lowerbound::DEFAULT_DENSE_CAP)]
    pub max_qubits: usize,
}

#[derive(Debug, Args)]
pub struct ClaimArgs {
    /// Number of Fibonacci-grid axes.
    #[arg(long, default_value_t = 10_000)]
    pub grid: usize,
    /// Pattern-search rounds per refined axis.
    #[arg(long, default_value_t = 60)]
    pub refine: usize,
    /// Optional JSONL report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
