use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mcb::sim::AlgorithmChoice;
use mcb::{BootstrapMethod, IcPenalty, LambdaPolicy, SelectorKind, SelectorSpec};

#[derive(Debug, Parser)]
#[command(name = "mcb", version, about = "Model confidence bounds for variable selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Master seed for bootstrap and cross-validation.
    #[arg(long, global = true, env = "MCB_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bootstrap a selector and report the final bounds at each level.
    FitMcb {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        selector: SelectorArgs,
        #[command(flatten)]
        boot: BootArgs,
        /// Significance level; repeat for several.
        #[arg(long, default_values_t = vec![0.05])]
        alpha: Vec<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Model uncertainty curves of one or more selectors on a dataset.
    Muc {
        #[command(flatten)]
        data: DataArgs,
        /// Selectors to compare; repeat for several.
        #[arg(long = "selector", value_enum, default_values_t = vec![SelectorName::AdaptiveLasso])]
        selectors: Vec<SelectorName>,
        #[command(flatten)]
        tuning: TuningArgs,
        #[command(flatten)]
        boot: BootArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// F-test variable selection confidence set.
    Vscs {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_values_t = vec![0.05])]
        alpha: Vec<f64>,
        /// Include every surviving model in the report.
        #[arg(long)]
        dump_survivors: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run a campaign of simulated designs and tabulate coverage.
    Simulate {
        /// Campaign JSON: {"designs": [ ... ]}.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        /// Directory for per-design mean MUC point CSVs.
        #[arg(long)]
        muc_dir: Option<PathBuf>,
    },
    /// Compare selectors on shared simulated datasets by MUC area.
    Compare {
        /// Design JSON with the simulation settings.
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "selector", value_enum, required = true)]
        selectors: Vec<SelectorName>,
        #[command(flatten)]
        tuning: TuningArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the response column.
    #[arg(long, default_value = "y")]
    pub response: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectorName {
    Lasso,
    AdaptiveLasso,
    Scad,
    Mcp,
    StepwiseBic,
    StepwiseAic,
}

#[derive(Debug, Args)]
pub struct SelectorArgs {
    #[arg(long, value_enum, default_value_t = SelectorName::AdaptiveLasso)]
    pub selector: SelectorName,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TuningArgs {
    /// Fixed penalty level; cross-validated when absent.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub cv_folds: usize,
    #[arg(long, default_value_t = 1.0)]
    pub adaptive_gamma: f64,
    #[arg(long, default_value_t = 3.7)]
    pub scad_a: f64,
    #[arg(long, default_value_t = 3.0)]
    pub mcp_gamma: f64,
    /// Custom information criterion penalty C_n for stepwise search.
    #[arg(long)]
    pub ic_penalty: Option<f64>,
}

impl TuningArgs {
    pub fn spec(&self, name: SelectorName, seed: u64) -> SelectorSpec {
        let (kind, ic) = match name {
            SelectorName::Lasso => (SelectorKind::Lasso, IcPenalty::Bic),
            SelectorName::AdaptiveLasso => (SelectorKind::AdaptiveLasso, IcPenalty::Bic),
            SelectorName::Scad => (SelectorKind::Scad, IcPenalty::Bic),
            SelectorName::Mcp => (SelectorKind::Mcp, IcPenalty::Bic),
            SelectorName::StepwiseBic => (SelectorKind::StepwiseIc, IcPenalty::Bic),
            SelectorName::StepwiseAic => (SelectorKind::StepwiseIc, IcPenalty::Aic),
        };
        let ic_penalty = match (kind, self.ic_penalty) {
            (SelectorKind::StepwiseIc, Some(c)) => IcPenalty::Custom(c),
            _ => ic,
        };
        SelectorSpec {
            kind,
            lambda: self
                .lambda
                .map_or(LambdaPolicy::CrossValidated, LambdaPolicy::Fixed),
            ic_penalty,
            adaptive_gamma: self.adaptive_gamma,
            scad_a: self.scad_a,
            mcp_gamma: self.mcp_gamma,
            cv_folds: self.cv_folds,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodName {
    /// Modified residual bootstrap for the Lasso, residual otherwise.
    Auto,
    Residual,
    ModifiedResidual,
}

impl MethodName {
    pub fn resolve(self, kind: SelectorKind) -> BootstrapMethod {
        match self {
            MethodName::Auto => mcb::sim::default_method(kind),
            MethodName::Residual => BootstrapMethod::Residual,
            MethodName::ModifiedResidual => BootstrapMethod::ModifiedResidual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmName {
    Auto,
    Exhaustive,
    Ranked,
}

impl From<AlgorithmName> for AlgorithmChoice {
    fn from(a: AlgorithmName) -> Self {
        match a {
            AlgorithmName::Auto => AlgorithmChoice::Auto,
            AlgorithmName::Exhaustive => AlgorithmChoice::Exhaustive,
            AlgorithmName::Ranked => AlgorithmChoice::Ranked,
        }
    }
}

#[derive(Debug, Args)]
pub struct BootArgs {
    /// Bootstrap replicates.
    #[arg(long = "B", short = 'B', default_value_t = 1000)]
    pub b: usize,
    #[arg(long, value_enum, default_value_t = MethodName::Auto)]
    pub method: MethodName,
    #[arg(long, value_enum, default_value_t = AlgorithmName::Auto)]
    pub algorithm: AlgorithmName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report destination. For CSV output of several curves this is a directory.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Output format; inferred from the file extension when absent.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}
