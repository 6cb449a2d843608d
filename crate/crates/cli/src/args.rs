use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

/// Entropy-rate asymptotics of hidden Markov chains near weak Black Holes.
#[derive(Debug, Parser)]
#[command(name = "hmm-entropy", version, about, args_conflicts_with_subcommands = true)]
pub struct Cli {
    /// Worker threads for sequence enumeration.
    #[arg(long, global = true, env = "HMM_ENTROPY_THREADS")]
    pub threads: Option<usize>,

    /// Write the run manifest here (atomically) instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Re-run a manifest and check that it reproduces its payload.
    #[arg(long, value_name = "MANIFEST")]
    pub replay: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Binary Markov input through a BSC(ε).
    Bsc,
    /// Binary Markov input through a BEC(ε).
    Bec,
    /// Binary Markov input through an i.i.d.-state Gilbert–Elliott channel.
    Ge,
}

/// Where the model comes from. Probabilities are exact rationals ("1/3").
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// JSON model file.
    #[arg(long, conflicts_with = "preset")]
    pub model: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub preset: Option<Preset>,

    /// Input chain [[1−p, p], [1, 0]] (no two consecutive ones).
    #[arg(long, conflicts_with_all = ["pi00", "pi11"])]
    pub pi: Option<String>,

    /// Input chain stay probability of 0.
    #[arg(long, requires = "pi11")]
    pub pi00: Option<String>,

    /// Input chain stay probability of 1.
    #[arg(long, requires = "pi00")]
    pub pi11: Option<String>,

    /// Gilbert–Elliott probability of the good state.
    #[arg(long, default_value = "1/2")]
    pub q0: String,

    /// Gilbert–Elliott crossover ratio of the bad state.
    #[arg(long, default_value = "2")]
    pub kappa: String,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Classify Δ(0) and check the normal parameterization.
    Detect {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Expansion of the entropy rate through order k.
    Expand {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        k: usize,
        /// Horizon; defaults to 6k + 6.
        #[arg(long)]
        n: Option<usize>,
        /// Also compute the lower bound and require agreement.
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 4)]
        slack: usize,
        /// Double-double accumulation of real coefficients.
        #[arg(long)]
        extended: bool,
    },
    /// Raw upper and lower bound log-series at horizon n.
    Bounds {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Expansion against the exact finite-horizon entropy (and optionally
    /// Monte Carlo) at a list of noise levels.
    Compare {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        k: usize,
        /// Comma-separated noise levels, e.g. "1/1000,1e-4".
        #[arg(long, value_delimiter = ',', default_value = "1e-3,1e-4")]
        eps: Vec<String>,
        /// Horizon of the exact column; defaults to 6k + 6.
        #[arg(long)]
        n: Option<usize>,
        /// Monte Carlo samples per row; 0 skips the column.
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        burnin: usize,
        /// Maximum number of sequences summed by the exact column.
        #[arg(long)]
        budget: Option<u128>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Monte Carlo estimate of the entropy rate at one noise level.
    Mc {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        eps: String,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        burnin: usize,
    },
    /// Write a model (usually a preset) as a JSON model file.
    EmitModel {
        #[command(flatten)]
        model: ModelArgs,
        /// Destination of the model file.
        path: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Detect { .. } => "detect",
            Command::Expand { .. } => "expand",
            Command::Bounds { .. } => "bounds",
            Command::Compare { .. } => "compare",
            Command::Mc { .. } => "mc",
            Command::EmitModel { .. } => "emit-model",
        }
    }

    pub fn model(&self) -> &ModelArgs {
        match self {
            Command::Detect { model }
            | Command::Expand { model, .. }
            | Command::Bounds { model, .. }
            | Command::Compare { model, .. }
            | Command::Mc { model, .. }
            | Command::EmitModel { model, .. } => model,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn params_round_trip_through_json() {
        let cli = Cli::try_parse_from(["hmm-entropy", "expand", "--preset", "bsc", "--pi", "1/2", "--k", "1"]).unwrap();
        let cmd = cli.command.unwrap();
        let json = serde_json::to_value(&cmd).unwrap();
        let back: Command = serde_json::from_value(json.clone()).unwrap();
        assert_eq!(serde_json::to_value(&back).unwrap(), json);
        assert_eq!(back.name(), "expand");
    }
}
