//! Command-line surface and its resolution into a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use bergman_osc::check::Fault;
use bergman_osc::quadrature::QuadratureConfig;
use bergman_osc::spectra::Transform;
use bergman_osc::study::Functional;
use bergman_osc::symbols::{parse_symbol, Symbol};
use bergman_osc::thresholds::{default_radii, BOUNDARY_LADDER, DEFAULT_ANGLES, DEFAULT_RADII};
use bergman_osc::{Error, Result};

const SYMBOL_HELP: &str = "Symbol expression.

Grammar:
  expr  := term (('+' | '-') term)*
  term  := unary ('*' unary)*
  unary := '-' unary | atom
  atom  := number | name '(' [arg (',' arg)*] ')' | '(' expr ')'
  arg   := ident '=' number | expr

Names: const(c), zk(k), conjzk(k), abs2(), re(), zpluszbar(), rand(seed),
rand_harmonic(seed), example45(b=..., beta=...), truncate(expr, rho=...),
conj(expr).";

const AFTER_HELP: &str = "Exit codes: 0 success, 1 failed checks, 2 configuration error, 3 numerical failure.";

#[derive(Debug, Parser)]
#[command(name = "bergman-osc", version, about = "Mean oscillation, Berezin transforms and finite sections of Bergman-space Toeplitz operators", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Absolute quadrature tolerance.
    #[arg(long, global = true, default_value_t = QuadratureConfig::default().tolerance)]
    pub tolerance: f64,
    /// Gauss-Legendre nodes per panel.
    #[arg(long, global = true, default_value_t = QuadratureConfig::default().nodes)]
    pub nodes: usize,
    /// Base panels per unit range.
    #[arg(long, global = true, default_value_t = QuadratureConfig::default().panels)]
    pub panels: usize,
    /// Worker threads (0: one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Output file prefix; nothing is written without it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    Box,
    Berezin,
}

impl From<TransformArg> for Transform {
    fn from(t: TransformArg) -> Self {
        match t {
            TransformArg::Box => Transform::BoxAverage,
            TransformArg::Berezin => Transform::Berezin,
        }
    }
}

#[derive(Debug, Args)]
pub struct Lattice {
    /// Comma-separated radii in (0, 1), increasing.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// Number of radii geometric in 1 - r over [0.9, 0.999] when --radii is absent.
    #[arg(long)]
    pub n_radii: Option<usize>,
    /// Angles per circle (radial symbols use one).
    #[arg(long, default_value_t = DEFAULT_ANGLES)]
    pub angles: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Radial profile of a functional with its fitted slope and verdict.
    Profile {
        #[arg(long, long_help = SYMBOL_HELP)]
        symbol: String,
        /// vwmo, bwmo, averaging, bmo1, fhat, disc or omega.
        #[arg(long)]
        functional: String,
        #[command(flatten)]
        lattice: Lattice,
        /// Prefix grid side for the sup-type functionals (>= 16).
        #[arg(long, default_value_t = 16)]
        grid: usize,
    },
    /// Eigenvalues of the N-section with the boundary cluster set.
    Spectrum {
        #[arg(long, long_help = SYMBOL_HELP)]
        symbol: String,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[command(flatten)]
        lattice: Lattice,
    },
    /// Fredholm index from the winding of the boundary curves.
    Index {
        #[arg(long, long_help = SYMBOL_HELP)]
        symbol: String,
        #[command(flatten)]
        lattice: Lattice,
        #[arg(long, value_enum, default_value_t = TransformArg::Box)]
        transform: TransformArg,
    },
    /// Profiles and classification over the example45 (b, beta) grid.
    Example45 {
        #[command(flatten)]
        lattice: Lattice,
        #[arg(long, default_value_t = 16)]
        grid: usize,
    },
    /// Run the invariant suite; exit 1 if any check fails.
    Check {
        /// Subset finishing in seconds.
        #[arg(long)]
        fast: bool,
        /// Harness self-test: run with a deliberate defect.
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Recompute the anchor table after a green check run.
    Anchors {
        #[arg(long, default_value = "docs/anchors.json")]
        table: PathBuf,
        /// Gate on the fast check subset only.
        #[arg(long)]
        fast: bool,
    },
}

/// Fully resolved settings of one run, embedded in every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub symbol: Option<String>,
    pub functional: Option<Functional>,
    pub radii: Vec<f64>,
    pub angles: usize,
    pub grid: Option<usize>,
    pub n: Option<usize>,
    pub transform: Option<Transform>,
    pub quadrature: QuadratureConfig,
    pub out: Option<PathBuf>,
    pub format: Format,
    #[serde(skip)]
    pub threads: usize,
    #[serde(skip)]
    pub fast: bool,
    #[serde(skip)]
    pub fault: Option<Fault>,
    #[serde(skip)]
    pub table: Option<PathBuf>,
}

impl RunConfig {
    pub fn symbol(&self) -> Result<Symbol> {
        parse_symbol(self.symbol.as_deref().unwrap_or_default())
    }
}

fn resolve_radii(l: &Lattice, default: Vec<f64>) -> Result<Vec<f64>> {
    let radii = match (&l.radii, l.n_radii) {
        (Some(r), _) => r.clone(),
        (None, Some(n)) if n >= 2 => default_radii(n),
        (None, Some(_)) => return Err(Error::BadParameters("--n-radii needs at least 2".into())),
        (None, None) => default,
    };
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(Error::BadParameters("radii must lie in (0, 1)".into()));
    }
    if !radii.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::BadParameters("radii must increase".into()));
    }
    if l.angles == 0 {
        return Err(Error::BadParameters("--angles must be positive".into()));
    }
    Ok(radii)
}

/// Validate everything that does not need numerics. Errors here exit with 2.
pub fn resolve(cli: Cli) -> Result<RunConfig> {
    let g = cli.global;
    let quadrature = QuadratureConfig {
        tolerance: g.tolerance,
        nodes: g.nodes,
        panels: g.panels,
        ..QuadratureConfig::default()
    };
    quadrature.validate()?;
    let mut rc = RunConfig {
        command: String::new(),
        symbol: None,
        functional: None,
        radii: Vec::new(),
        angles: DEFAULT_ANGLES,
        grid: None,
        n: None,
        transform: None,
        quadrature,
        out: g.out,
        format: g.format,
        threads: g.threads,
        fast: false,
        fault: None,
        table: None,
    };
    let ladder = BOUNDARY_LADDER.to_vec();
    match cli.command {
        Command::Profile { symbol, functional, lattice, grid } => {
            rc.command = "profile".into();
            rc.functional = Some(functional.parse()?);
            rc.radii = resolve_radii(&lattice, default_radii(DEFAULT_RADII))?;
            rc.angles = lattice.angles;
            rc.grid = Some(check_grid(grid)?);
            rc.symbol = Some(symbol);
        }
        Command::Spectrum { symbol, n, lattice } => {
            rc.command = "spectrum".into();
            if !(1..=bergman_osc::eigen::MAX_DIM).contains(&n) {
                return Err(Error::BadParameters(format!("--n must lie in 1..={}", bergman_osc::eigen::MAX_DIM)));
            }
            rc.n = Some(n);
            rc.radii = resolve_radii(&lattice, ladder)?;
            rc.angles = lattice.angles;
            rc.transform = Some(Transform::BoxAverage);
            rc.symbol = Some(symbol);
        }
        Command::Index { symbol, lattice, transform } => {
            rc.command = "index".into();
            rc.radii = resolve_radii(&lattice, ladder)?;
            rc.angles = lattice.angles;
            rc.transform = Some(transform.into());
            rc.symbol = Some(symbol);
        }
        Command::Example45 { lattice, grid } => {
            rc.command = "example45".into();
            rc.radii = resolve_radii(&lattice, default_radii(DEFAULT_RADII))?;
            rc.angles = lattice.angles;
            rc.grid = Some(check_grid(grid)?);
        }
        Command::Check { fast, inject_fault } => {
            rc.command = "check".into();
            rc.fast = fast;
            rc.fault = inject_fault.map(|s| s.parse()).transpose()?;
        }
        Command::Anchors { table, fast } => {
            rc.command = "anchors".into();
            rc.fast = fast;
            rc.table = Some(table);
        }
    }
    if rc.symbol.is_some() {
        rc.symbol()?;
    }
    Ok(rc)
}

fn check_grid(grid: usize) -> Result<usize> {
    if grid < bergman_osc::oscillation::MIN_GRID {
        return Err(Error::BadParameters(format!("--grid must be at least {}", bergman_osc::oscillation::MIN_GRID)));
    }
    Ok(grid)
}
