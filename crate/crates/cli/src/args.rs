use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "sethit", version, about = "Exact same-set hitting computations and numerical checks")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Cap on enumeration size; larger instances are refused.
    #[arg(long, global = true, default_value_t = 1 << 24)]
    pub budget: u128,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Emit the report as JSON (the default).
    #[arg(long, global = true, conflicts_with = "table")]
    pub json: bool,
    /// Emit the report as flattened `path = value` lines.
    #[arg(long, global = true)]
    pub table: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Alphabet, marginals, α, β, ρ and Markov structure of a distribution.
    Inspect {
        /// Distribution file.
        dist: PathBuf,
    },
    /// Convex decomposition of a two-step equal-marginal distribution into cycles and point masses.
    Decompose {
        dist: PathBuf,
    },
    /// Fourier expansion, influences and variance of a function under one step's marginal.
    Fourier(FourierArgs),
    /// Exact hitting expectation E[∏ f⁽ʲ⁾(X⁽ʲ⁾)].
    Hit(HitArgs),
    /// Density increment and influence reduction.
    #[command(subcommand)]
    Reduce(Reduce),
    /// Property suites.
    #[command(subcommand)]
    Verify(Verify),
    /// Numerical checks on multilinear polynomials and Gaussian counterparts.
    #[command(subcommand)]
    Invariance(Invariance),
}

#[derive(Args, Debug, Clone)]
pub struct Inputs {
    #[arg(long)]
    pub dist: PathBuf,
    /// Function file; repeat once per step for multi-set hitting.
    #[arg(long = "fn", required = true)]
    pub fns: Vec<PathBuf>,
    /// Number of coordinates, for function files that leave it out.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Enumerate,
    Dp,
    Auto,
}

#[derive(Args, Debug)]
pub struct FourierArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Step whose marginal defines the basis.
    #[arg(long, default_value_t = 0)]
    pub step: usize,
    /// Number of largest coefficients to list.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Args, Debug)]
pub struct HitArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long, value_enum, default_value_t = EngineArg::Auto)]
    pub engine: EngineArg,
}

#[derive(Subcommand, Debug)]
pub enum Reduce {
    /// Restrict f until it is ε-resilient up to size k.
    Density {
        #[command(flatten)]
        inputs: Inputs,
        /// ε, as a decimal or p/q.
        #[arg(long)]
        eps: String,
        #[arg(long)]
        k: usize,
    },
    /// Replace functions with M-operator images until every influence is at most τ.
    Influence {
        #[command(flatten)]
        inputs: Inputs,
        /// τ, as a decimal or p/q.
        #[arg(long)]
        tau: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum Verify {
    /// Var-weighted edge variance inequality for every symbol indicator on every step.
    EdgeVariance {
        #[arg(long)]
        dist: PathBuf,
    },
    /// Decomposition guarantees (same as `decompose`).
    Decomposition {
        #[arg(long)]
        dist: PathBuf,
    },
    /// The unequal-marginals and three-sets families.
    Counterexamples {
        /// Comma-separated sizes.
        #[arg(long, value_delimiter = ',', default_values_t = [6usize, 9, 12])]
        n: Vec<usize>,
        #[arg(long, value_enum, default_value_t = Suite::Both)]
        suite: Suite,
    },
    /// Merging the last two steps of a Markov-generated distribution.
    Markov {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Least-squares exponent of δ(μ) against μ over a threshold family.
    Exponent {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        n: usize,
        /// Symbol counted by the threshold sets.
        #[arg(long, default_value_t = 0)]
        symbol: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.2, 0.4, 0.7])]
        grid: Vec<f64>,
        /// Expected slope; the run fails if the fit is further than `--tol` from it.
        #[arg(long)]
        expect: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Unequal,
    Three,
    Both,
}

#[derive(Args, Debug, Clone)]
pub struct PolyInputs {
    #[arg(long)]
    pub dist: PathBuf,
    /// Function file, expanded in the basis of its step's marginal.
    #[arg(long = "fn")]
    pub fns: Vec<PathBuf>,
    /// Polynomial file (`n`, `ensemble_size`, `terms`); an alternative to `--fn`.
    #[arg(long = "poly", conflicts_with = "fns")]
    pub polys: Vec<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct Sampling {
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Invariance {
    /// Both hypercontractive inequalities with ρ = α^{1/6}/2.
    Hyper {
        #[command(flatten)]
        inputs: PolyInputs,
        #[arg(long, default_value_t = 0)]
        step: usize,
        /// Smallest atom of the marginal; defaults to the actual minimum positive mass.
        #[arg(long)]
        alpha: Option<f64>,
        /// Use independent standard normals instead of the discrete ensemble.
        #[arg(long)]
        gaussian: bool,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// |E[χ_λ(P̄(X̄))] − E[χ_λ(P̄(Ḡ))]| against the invariance bound.
    Gap {
        #[command(flatten)]
        inputs: PolyInputs,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        /// Constant in the bound.
        #[arg(long, default_value_t = 10.0)]
        c: f64,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// |E[∏P⁽ʲ⁾] − E[∏T_{1−γ}P⁽ʲ⁾]| by exact enumeration.
    Smooth {
        #[command(flatten)]
        inputs: PolyInputs,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
    },
    /// Gaussian reverse hypercontractivity for half-line indicators of a correlated pair.
    Rhc {
        /// Correlation of the pair.
        #[arg(long, allow_hyphen_values = true)]
        corr: f64,
        /// Orientation of each half-line: `+` for x > t, `-` for x < −t.
        #[arg(long, value_delimiter = ',', default_values_t = ["+".to_string(), "+".to_string()])]
        signs: Vec<String>,
        /// Thresholds t, one per step.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.0, 0.0])]
        thresholds: Vec<f64>,
        /// ρ in the exponent; defaults to |corr|.
        #[arg(long)]
        rho: Option<f64>,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// φ_λ and φ at the given points.
    Mollifier {
        #[arg(long)]
        lambda: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
    },
    /// Tail mass profile E[(P^{≥d})²] against (1 − γ)^d.
    Decay {
        #[command(flatten)]
        inputs: PolyInputs,
        #[arg(long, default_value_t = 0)]
        step: usize,
        #[arg(long)]
        gamma: f64,
    },
}
