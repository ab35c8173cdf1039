mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dlgn::DlgnError;

#[derive(Parser, Debug)]
#[command(
    name = "dlgn",
    version,
    about = "Train, harden and evaluate differentiable logic gate networks"
)]
pub struct Cli {
    /// Run configuration file (key = value).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a network and write metrics, checkpoints and the config echo.
    Train {
        /// Continue from a checkpoint instead of a fresh network.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Accuracy of a checkpoint or netlist on a dataset.
    Eval(EvalArgs),
    /// Harden a checkpoint into a circuit and report node counts.
    Discretize(CircuitArgs),
    /// Harden a checkpoint and write the netlist to a file.
    Export {
        #[command(flatten)]
        circuit: CircuitArgs,
        /// Netlist destination (default: <out>/circuit.netlist).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write diagnostic CSVs.
    Diagnose(DiagnoseArgs),
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long, conflicts_with = "netlist", required_unless_present = "netlist")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub netlist: Option<PathBuf>,
    /// Dataset spec; defaults to the configured dataset.
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long, value_enum, default_value_t = Split::Test)]
    pub split: Split,
    /// Use bit-packed circuit evaluation and report throughput.
    #[arg(long)]
    pub packed: bool,
}

#[derive(Args, Debug)]
pub struct CircuitArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Simplify the hardened circuit before reporting or exporting.
    #[arg(long)]
    pub simplify: bool,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    /// Required for every diagnostic except `concentration`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    pub which: Vec<Diagnostic>,
    /// Layers (1-based) for histograms; defaults to all.
    #[arg(long, value_delimiter = ',')]
    pub layers: Vec<usize>,
    /// Fresh neurons per scheme for `concentration`.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    Gradnorms,
    Histograms,
    Gap,
    Concentration,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &DlgnError) -> u8 {
    if e.is_numeric() {
        2
    } else {
        1
    }
}
