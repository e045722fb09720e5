use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "fracdioph", version, about = "Measures on conformal limit sets: dimensions, decay exponents and Diophantine experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// System definition file (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every stochastic step; mandatory for stochastic commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory. Tables go to stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for the parallel parts.
    #[arg(long, global = true, env = "FRACDIOPH_THREADS")]
    pub threads: Option<usize>,
    /// Also write SVG plots (needs --out).
    #[arg(long, global = true)]
    pub svg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Absolute,
    Quasi,
    Decaying,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Check the axioms of the system.
    Validate,
    /// Bowen dimension with its bracket.
    Dimension {
        /// Enumeration level; defaults to about 2¹⁶ words.
        #[arg(long)]
        level: Option<usize>,
    },
    /// Pressure, dimension, Lyapunov exponent, entropy and their ratio.
    Thermo {
        #[arg(long, default_value_t = 8)]
        level: usize,
    },
    /// Random points of the limit set drawn from the measure.
    Sample {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Coding error allowed per point.
        #[arg(long, default_value = "1e-9", value_parser = scalar)]
        radius: f64,
    },
    /// Envelope fit `ratio ≤ C₁ β^α` over balls and hyperplanes.
    DecayFit {
        #[arg(long, value_enum, default_value_t = ModeArg::Absolute)]
        mode: ModeArg,
        /// Exponent γ of the quasi mode.
        #[arg(long, value_parser = scalar)]
        gamma: Option<f64>,
        /// Ball centres, sampled from the measure.
        #[arg(long, default_value_t = 20)]
        centers: usize,
        #[arg(long, value_delimiter = ',', default_value = "1/3,1/9,1/27,1/81", value_parser = scalar)]
        radii: Vec<f64>,
        /// Hyperplanes per ball.
        #[arg(long, default_value_t = 4)]
        per_ball: usize,
        /// β grid (ignored in quasi mode).
        #[arg(long, value_delimiter = ',', default_value = "1/2,1/4,1/8,1/16,1/32,1/64,1/128,1/256,1/512,1/1024,1/2048,1/4096", value_parser = scalar)]
        betas: Vec<f64>,
    },
    /// Envelope of `μ(N(L, β))` pooled over random surfaces.
    GlobalDecay {
        #[arg(long, default_value_t = 24)]
        surfaces: usize,
        /// Draw round spheres as well as hyperplanes.
        #[arg(long)]
        spheres: bool,
        #[arg(long, value_delimiter = ',', default_value = "1/4,1/8,1/16,1/32,1/64,1/128,1/256,1/512,1/1024", value_parser = scalar)]
        betas: Vec<f64>,
        /// Extra hyperplane `normal:offset`, e.g. `0,1:0`; repeatable.
        #[arg(long = "plane")]
        planes: Vec<String>,
    },
    /// Monte Carlo check of the escape bound `(1 − κ)^k`.
    EscapeCheck {
        /// κ; derived by search when omitted (together with r).
        #[arg(long, value_parser = scalar)]
        kappa: Option<f64>,
        #[arg(long)]
        r: Option<usize>,
        /// Largest r tried by the search.
        #[arg(long, default_value_t = 1)]
        r_max: usize,
        #[arg(long, default_value_t = 12)]
        k_max: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        /// Normal of the hyperplane L (defaults to the first axis).
        #[arg(long, value_delimiter = ',', value_parser = scalar)]
        normal: Vec<f64>,
        /// Offset of L; in one dimension, L is this point.
        #[arg(long, value_parser = scalar)]
        offset: f64,
        /// Radii ρ_k = diam(X)·ratio^{k−1}; defaults to the contraction ratio.
        #[arg(long, value_parser = scalar)]
        rho_ratio: Option<f64>,
        /// Conditioning word ω.
        #[arg(long, value_delimiter = ',')]
        omega: Vec<usize>,
    },
    /// Diophantine exponents of one point.
    Omega {
        /// Coordinates: golden, sqrt2, sqrt3, pi, e, p/q or decimals, comma-separated.
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 100_000)]
        qmax: u64,
    },
    /// ω̂ at points sampled from the measure.
    Extremality {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        qmax: u64,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5", value_parser = scalar)]
        margins: Vec<f64>,
    },
    /// Exact periodic shadow of an orbit of an expanding toral map.
    ToralShadow {
        /// Integer matrix, rows separated by ';' (e.g. "2" or "2,1;1,3").
        #[arg(long)]
        matrix: String,
        /// Starting point, same syntax as `omega --x`; rationals stay exact.
        #[arg(long)]
        x: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Report the Liouville mass for every n up to this.
        #[arg(long, default_value_t = 10)]
        liouville: u32,
    },
    /// Execute a bundled run file.
    Run { file: PathBuf },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Dimension { .. } => "dimension",
            Command::Thermo { .. } => "thermo",
            Command::Sample { .. } => "sample",
            Command::DecayFit { .. } => "decay-fit",
            Command::GlobalDecay { .. } => "global-decay",
            Command::EscapeCheck { .. } => "escape-check",
            Command::Omega { .. } => "omega",
            Command::Extremality { .. } => "extremality",
            Command::ToralShadow { .. } => "toral-shadow",
            Command::Run { .. } => "run",
        }
    }

    pub fn stochastic(&self) -> bool {
        matches!(
            self,
            Command::Sample { .. }
                | Command::DecayFit { .. }
                | Command::GlobalDecay { .. }
                | Command::EscapeCheck { .. }
                | Command::Extremality { .. }
        )
    }

    pub fn needs_system(&self) -> bool {
        !matches!(self, Command::Omega { .. } | Command::ToralShadow { .. } | Command::Run { .. })
    }
}

/// Reads `p/q`, integers and decimals.
pub fn scalar(s: &str) -> Result<f64, String> {
    if let Ok(v) = s.trim().parse::<f64>() {
        return Ok(v);
    }
    let (p, q) = s.split_once('/').ok_or_else(|| format!("cannot read {s:?} as a number"))?;
    let p: f64 = p.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
    let q: f64 = q.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
    if q == 0.0 {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(p / q)
}
