use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Parser)]
#[command(name = "maxent", version, about = "Max-entropy distributions over combinatorial polytopes")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleMethod {
    /// Inverse CDF over the enumerated family.
    Enumerate,
    /// Sequential conditioning (spanning trees only).
    Conditional,
}

/// Vectors are given inline as a JSON array (`"[0.5, 0.5]"`) or as a path to
/// a file holding one.
#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Max-entropy distribution with the given marginals.
    Solve {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        theta: String,
        /// Interiority radius; computed from the polytope when omitted.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        /// Run the approximate solver behind a noisy oracle of this precision.
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Min-KL projection of the distribution `∝ e^{−μ(M)}` onto the marginals.
    SolveKl {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        theta: String,
        #[arg(long)]
        mu: String,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Estimate |M| using only max-entropy queries and hull separation.
    Count {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
    /// Estimate Σ_M e^{−μ(M)} the same way.
    CountMu {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        mu: String,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
    /// Draw members with probability ∝ e^{−λ(M)}.
    Sample {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        lambda: String,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SampleMethod::Enumerate)]
        method: SampleMethod,
    },
    /// Re-check a saved solve report against the marginals it targets.
    Verify {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        theta: String,
        /// A `solve` / `solve-kl` JSON report (or a bare result object).
        #[arg(long)]
        result: PathBuf,
    },
    /// Randomized cycle-cover heuristic for ATSP (illustrative).
    AtspDemo {
        /// JSON file `{"costs": [[...], ...]}` over a complete digraph.
        #[arg(long)]
        instance: PathBuf,
        /// Fractional point over arcs `(u, v)`, `u ≠ v`, in lexicographic order.
        #[arg(long)]
        x: String,
        /// Independent trials.
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        /// Inverse temperature for later-stage marginals.
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 0.01)]
        mix: f64,
    },
}
