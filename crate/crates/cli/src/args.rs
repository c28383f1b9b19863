use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "finsler", version, about = "Verify the anisotropic N-Liouville classification numerically")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the suites named by --suite (default: all).
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated suite names, or `all`.
        #[arg(long, value_name = "NAME[,NAME…]")]
        suite: Option<String>,
    },
    /// Run a suite list given positionally, e.g. `suite all`.
    Suite {
        #[arg(value_name = "NAME[,NAME…]")]
        names: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Evaluate H0 and Ĥ0 at points.
    DualNorm {
        #[command(flatten)]
        run: RunArgs,
        /// Points separated by `;`, coordinates by `,`: `3,4;0,2`.
        #[arg(long, allow_hyphen_values = true)]
        points: String,
    },
    /// Unit Wulff volume against its Monte Carlo oracle, plus the perimeter check.
    WulffVolume {
        #[command(flatten)]
        run: RunArgs,
    },
    /// PDE residual of the explicit solution on the sample grid.
    VerifySolution {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Total mass against the quantized value.
    Quantization {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Pohozaev balances on Wulff balls and the level-set split.
    Pohozaev {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Far-field behaviour; --csv writes the per-radius curve.
    Asymptotics {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Isoperimetric ratios of Wulff shapes and random polygons.
    Isoperimetric {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Aggregate previously written JSON reports.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Flags shared by every subcommand that builds a gauge. Flags override the
/// values of a --config file.
#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// Run configuration file (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Norm specification file (JSON).
    #[arg(long)]
    pub norm: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Solution center, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<String>,
    /// Second dilation point for the Pohozaev suite, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report path; `-` prints the JSON instead of the table.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV path for the asymptotic curve.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Leave wall-clock timings out of the report.
    #[arg(long)]
    pub deterministic: bool,
}
