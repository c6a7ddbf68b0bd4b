//! Command-line surface: argument parsing, run configuration and commands.
//!
//! Settings come from an optional `key = value` file (`--config`) with
//! command-line flags taking precedence.

mod commands;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dense::DEFAULT_DENSE_LIMIT;
use crate::eigsolve::DEFAULT_IMAG_TOL;
use crate::error::{Error, Result};
use crate::matgen::{default_advection, ProblemSpec, DEFAULT_ALPHA};

pub use commands::{cmd_gen, cmd_spectrum, cmd_spy, cmd_sweep, cmd_verify, Pipeline};

pub const DEFAULT_ITERS: usize = 500;
pub const DEFAULT_GRID_N: usize = 16;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "twogrid", version, about = "Two-grid optimal interpolation laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the operator (and block operator) as Matrix Market files.
    Gen(Options),
    /// Run the identity and invariant checks and report residuals.
    Verify(VerifyOptions),
    /// Sweep coarse space sizes and write rates.csv, rates.svg and spy.svg.
    Sweep(Options),
    /// Write a sparsity plot of the operator.
    Spy(Options),
    /// Write the generalized eigenvalues as spectrum.csv.
    Spectrum(SpectrumOptions),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// key = value settings file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// poisson2d, advdiff2d or random.
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub bx: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub by: Option<f64>,
    /// Dimension of the random operator.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma separated list; `a..b` expands to an inclusive range.
    #[arg(long)]
    pub nc_list: Option<String>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// Work with A directly (symmetric positive definite theory) instead of
    /// the block operator.
    #[arg(long)]
    pub spd: bool,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub imag_tol: Option<f64>,
    #[arg(long)]
    pub dense_limit: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct VerifyOptions {
    #[command(flatten)]
    pub common: Options,
    /// Add 1 to the first entry of the symmetrized smoother (fault injection).
    #[arg(long, hide = true)]
    pub corrupt_msym: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SpectrumOptions {
    #[command(flatten)]
    pub common: Options,
    /// Also write the eigenvector matrix as vectors.mtx.
    #[arg(long)]
    pub vectors: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub spd_mode: bool,
    /// Explicit list, or `None` for the size-dependent default.
    pub nc_list: Option<Vec<usize>>,
    pub power_iters: usize,
    pub seed: u64,
    pub imag_tol: f64,
    pub dense_limit: usize,
    pub out_dir: PathBuf,
}

impl RunConfig {
    /// Dimension of the operator the selected mode works on.
    pub fn operator_dim(&self) -> usize {
        let k = self.problem.dim();
        if self.spd_mode {
            k
        } else {
            2 * k
        }
    }

    /// The coarse sizes to use: the explicit list, checked against the
    /// operator size, or eighths of `n` (every size for `n <= 64` in the
    /// symmetric positive definite mode).
    pub fn resolved_nc_list(&self) -> Result<Vec<usize>> {
        let n = self.operator_dim();
        let list = match &self.nc_list {
            Some(l) => l.clone(),
            None if self.spd_mode && n <= 64 => (1..n).collect(),
            None => {
                let mut l: Vec<usize> = [1, 2, 4, 6, 8, 10, 12, 14].iter().map(|f| f * n / 16).collect();
                l.retain(|&c| c >= 1 && c < n);
                l.dedup();
                if l.is_empty() {
                    l.push(n.max(1));
                }
                l
            }
        };
        if list.is_empty() {
            return Err(Error::InvalidArgument("nc_list is empty".into()));
        }
        if let Some(&bad) = list.iter().find(|&&c| c == 0 || c > n) {
            return Err(Error::InvalidArgument(format!(
                "nc_list entry {bad} outside 1..={n} for this operator"
            )));
        }
        if list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("nc_list must be strictly ascending".into()));
        }
        Ok(list)
    }

    /// Provenance line printed at the top of every report.
    pub fn header(&self) -> String {
        let [bx, by] = default_advection();
        format!(
            "{} mode={} iters={} seed={} imag_tol={:e} dense_limit={} (defaults: alpha={DEFAULT_ALPHA} b=[{bx:.6}, {by:.6}] iters={DEFAULT_ITERS})",
            self.problem,
            if self.spd_mode { "spd" } else { "block" },
            self.power_iters,
            self.seed,
            self.imag_tol,
            self.dense_limit,
        )
    }
}

/// Expands `"1..3,8"` into `[1, 2, 3, 8]`.
pub fn parse_nc_list(s: &str) -> Result<Vec<usize>> {
    let bad = |t: &str| Error::InvalidArgument(format!("bad nc_list entry `{t}`"));
    let mut out = Vec::new();
    for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((lo, hi)) = tok.split_once("..") {
            let lo: usize = lo.trim().parse().map_err(|_| bad(tok))?;
            let hi: usize = hi.trim().parse().map_err(|_| bad(tok))?;
            if lo > hi {
                return Err(bad(tok));
            }
            out.extend(lo..=hi);
        } else {
            out.push(tok.parse().map_err(|_| bad(tok))?);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument("nc_list is empty".into()));
    }
    Ok(out)
}

/// Parses a `key = value` file into flag form. Blank lines and lines
/// starting with `#` are ignored.
pub fn parse_config_text(text: &str) -> Result<Options> {
    let mut o = Options::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let (key, value) = l
            .split_once('=')
            .ok_or_else(|| Error::Parse { line, msg: format!("expected key = value, got `{l}`") })?;
        let (key, value) = (key.trim(), value.trim());
        let perr = |what: &str| Error::Parse { line, msg: format!("bad {what} `{value}`") };
        match key {
            "problem" => o.problem = Some(value.to_owned()),
            "grid_n" => o.grid_n = Some(value.parse().map_err(|_| perr("grid_n"))?),
            "alpha" => o.alpha = Some(value.parse().map_err(|_| perr("alpha"))?),
            "bx" => o.bx = Some(value.parse().map_err(|_| perr("bx"))?),
            "by" => o.by = Some(value.parse().map_err(|_| perr("by"))?),
            "n" => o.n = Some(value.parse().map_err(|_| perr("n"))?),
            "density" => o.density = Some(value.parse().map_err(|_| perr("density"))?),
            "seed" => o.seed = Some(value.parse().map_err(|_| perr("seed"))?),
            "nc_list" => o.nc_list = Some(value.to_owned()),
            "iters" => o.iters = Some(value.parse().map_err(|_| perr("iters"))?),
            "spd" => o.spd = value.parse().map_err(|_| perr("spd flag"))?,
            "out_dir" => o.out_dir = Some(PathBuf::from(value)),
            "imag_tol" => o.imag_tol = Some(value.parse().map_err(|_| perr("imag_tol"))?),
            "dense_limit" => o.dense_limit = Some(value.parse().map_err(|_| perr("dense_limit"))?),
            other => return Err(Error::Parse { line, msg: format!("unknown key `{other}`") }),
        }
    }
    Ok(o)
}

impl Options {
    /// Fills unset fields from `base`.
    fn or(self, base: Options) -> Options {
        Options {
            config: self.config,
            problem: self.problem.or(base.problem),
            grid_n: self.grid_n.or(base.grid_n),
            alpha: self.alpha.or(base.alpha),
            bx: self.bx.or(base.bx),
            by: self.by.or(base.by),
            n: self.n.or(base.n),
            density: self.density.or(base.density),
            seed: self.seed.or(base.seed),
            nc_list: self.nc_list.or(base.nc_list),
            iters: self.iters.or(base.iters),
            spd: self.spd || base.spd,
            out_dir: self.out_dir.or(base.out_dir),
            imag_tol: self.imag_tol.or(base.imag_tol),
            dense_limit: self.dense_limit.or(base.dense_limit),
        }
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let merged = match &self.config {
            Some(path) => self.clone().or(load_config(path)?),
            None => self.clone(),
        };
        merged.into_config()
    }

    fn into_config(self) -> Result<RunConfig> {
        let [dbx, dby] = default_advection();
        let seed = self.seed.unwrap_or(DEFAULT_SEED);
        let problem = match self.problem.as_deref().unwrap_or("advdiff2d") {
            "poisson2d" | "poisson" => {
                ProblemSpec::Poisson2d { grid_n: self.grid_n.unwrap_or(DEFAULT_GRID_N) }
            }
            "advdiff2d" | "advdiff" => ProblemSpec::AdvDiff2d {
                grid_n: self.grid_n.unwrap_or(DEFAULT_GRID_N),
                alpha: self.alpha.unwrap_or(DEFAULT_ALPHA),
                b_vec: [self.bx.unwrap_or(dbx), self.by.unwrap_or(dby)],
            },
            "random" => ProblemSpec::Random {
                n: self.n.unwrap_or(64),
                density: self.density.unwrap_or(0.1),
                seed,
            },
            other => return Err(Error::InvalidArgument(format!("unknown problem `{other}`"))),
        };
        problem.validate()?;
        let power_iters = self.iters.unwrap_or(DEFAULT_ITERS);
        if power_iters == 0 {
            return Err(Error::InvalidArgument("iters must be >= 1".into()));
        }
        let imag_tol = self.imag_tol.unwrap_or(DEFAULT_IMAG_TOL);
        if !(imag_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!("imag_tol must be >= 0, got {imag_tol}")));
        }
        let config = RunConfig {
            problem,
            spd_mode: self.spd,
            nc_list: self.nc_list.as_deref().map(parse_nc_list).transpose()?,
            power_iters,
            seed,
            imag_tol,
            dense_limit: self.dense_limit.unwrap_or(DEFAULT_DENSE_LIMIT),
            out_dir: self.out_dir.unwrap_or_else(|| PathBuf::from("out")),
        };
        config.resolved_nc_list()?;
        Ok(config)
    }
}

fn load_config(path: &Path) -> Result<Options> {
    parse_config_text(&fs::read_to_string(path)?)
}

/// Process exit code for an error: 2 for usage and configuration problems,
/// 3 for I/O failures, 1 for numerical failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::Parse { .. } | Error::DenseLimit { .. } => 2,
        Error::Io(_) => 3,
        Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => 3,
        _ => 1,
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Gen(o) => o.resolve().and_then(|c| cmd_gen(&c)),
        Command::Verify(v) => v.common.resolve().and_then(|c| cmd_verify(&c, v.corrupt_msym)),
        Command::Sweep(o) => o.resolve().and_then(|c| cmd_sweep(&c).map(|_| 0)),
        Command::Spy(o) => o.resolve().and_then(|c| cmd_spy(&c)),
        Command::Spectrum(s) => s.common.resolve().and_then(|c| cmd_spectrum(&c, s.vectors)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("twogrid: {e}");
            exit_code(&e)
        }
    }
}
