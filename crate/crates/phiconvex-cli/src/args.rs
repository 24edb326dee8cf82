//! Command-line surface. Every value is optional at the clap layer so the
//! config file can fill gaps; explicit flags always beat file values, and
//! hard defaults are applied last, in `exec`.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "phiconvex",
    version,
    about = "Checks, bounds, and classifications for strong convexity along a map"
)]
pub struct Cli {
    /// Config file in `key = value` form; flags beat file values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Write the JSON report to this path.
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,

    /// Grid points per axis (default 17).
    #[arg(long, global = true, value_name = "N")]
    pub grid: Option<usize>,

    /// Even number of t subdivisions (default 16).
    #[arg(long = "t-steps", global = true, value_name = "K")]
    pub t_steps: Option<usize>,

    /// Local refinement rounds around the worst triple (default 3).
    #[arg(long, global = true, value_name = "R")]
    pub refine: Option<usize>,

    /// Verdict tolerance (default 1e-9).
    #[arg(long, global = true, value_name = "T")]
    pub tol: Option<f64>,

    /// Quadrature tolerance (default 1e-10).
    #[arg(long = "quad-tol", global = true, value_name = "Q")]
    pub quad_tol: Option<f64>,

    /// Seed for all randomized sampling (default 0).
    #[arg(long, global = true, value_name = "S")]
    pub seed: Option<u64>,

    /// Worker threads for grid scans (default 1); never changes results.
    #[arg(long, global = true, value_name = "W")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Option<CommandArgs>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum CommandArgs {
    /// Check strong convexity along the map over the full (x, y, t) grid.
    Check(ProblemArgs),
    /// The same check restricted to t = 1/2.
    Midcheck(ProblemArgs),
    /// Estimate the best modulus c* from defect ratios.
    Modulus(ProblemArgs),
    /// Midpoint/mean/trapezoid bracket over an interval.
    Hh(ProblemArgs),
    /// Upper bound on the mean of f(x)·f(reflected x).
    Product(ProblemArgs),
    /// Upper bound on the mean of f·g.
    PairProduct(ProblemArgs),
    /// Classify a norm by its parallelogram defect.
    NormTest(SpaceArgs),
    /// Strong convexity check of the squared norm.
    SqnormCheck(SpaceArgs),
    /// Budgeted midconvexity counterexample search for the squared norm.
    Counterexample(SpaceArgs),
    /// Shift identity: residuals of g = f − c·norm² and verdict agreement.
    Lemma2(ProblemArgs),
}

impl CommandArgs {
    pub fn name(&self) -> &'static str {
        match self {
            CommandArgs::Check(_) => "check",
            CommandArgs::Midcheck(_) => "midcheck",
            CommandArgs::Modulus(_) => "modulus",
            CommandArgs::Hh(_) => "hh",
            CommandArgs::Product(_) => "product",
            CommandArgs::PairProduct(_) => "pair-product",
            CommandArgs::NormTest(_) => "norm-test",
            CommandArgs::SqnormCheck(_) => "sqnorm-check",
            CommandArgs::Counterexample(_) => "counterexample",
            CommandArgs::Lemma2(_) => "lemma2",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ProblemArgs {
    /// Function under test, in the expression language.
    #[arg(long, value_name = "EXPR")]
    pub f: Option<String>,

    /// Second function (pair-product only).
    #[arg(long, value_name = "EXPR")]
    pub g: Option<String>,

    /// Map component; repeat once per coordinate. Defaults to the identity.
    #[arg(long = "phi", value_name = "EXPR")]
    pub phi: Vec<String>,

    /// Interval endpoints for one-dimensional domains.
    #[arg(long, value_name = "A", allow_hyphen_values = true)]
    pub a: Option<f64>,

    #[arg(long, value_name = "B", allow_hyphen_values = true)]
    pub b: Option<f64>,

    /// Cube bounds "lo,hi" for multi-dimensional domains (with --dim).
    #[arg(long = "box", value_name = "LO,HI", allow_hyphen_values = true)]
    pub box_bounds: Option<String>,

    #[arg(long, value_name = "N")]
    pub dim: Option<usize>,

    /// Modulus: a number, or "estimate" to chain a modulus estimate first.
    #[arg(long, value_name = "C|estimate", allow_hyphen_values = true)]
    pub c: Option<String>,

    /// Norm: euclid | max | p:REAL.
    #[arg(long, value_name = "KIND")]
    pub norm: Option<String>,

    /// Seeded triples for lemma2 residual sampling (default 1000).
    #[arg(long, value_name = "N")]
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SpaceArgs {
    /// Norm: euclid | max | p:REAL.
    #[arg(long, value_name = "KIND")]
    pub norm: Option<String>,

    /// Space dimension (default 2).
    #[arg(long, value_name = "N")]
    pub dim: Option<usize>,

    /// Cube bounds "lo,hi" for the sampling or search box.
    #[arg(long = "box", value_name = "LO,HI", allow_hyphen_values = true)]
    pub box_bounds: Option<String>,

    /// Modulus to test (default 1).
    #[arg(long, value_name = "C", allow_hyphen_values = true)]
    pub c: Option<String>,

    /// Pair sampler for norm-test: grid | seeded (default grid).
    #[arg(long, value_name = "KIND")]
    pub sampler: Option<String>,

    /// Pair budget for norm-test (default 10000).
    #[arg(long, value_name = "N")]
    pub samples: Option<u64>,

    /// Evaluation budget for counterexample search (default 100000).
    #[arg(long, value_name = "N")]
    pub budget: Option<u64>,
}
