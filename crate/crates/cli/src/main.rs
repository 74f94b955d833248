//! `dslump`: dispersion tables, lump solves, surface reconstruction,
//! expansion checks and profile decomposition from the command line.
//!
//! Exit codes: 0 success, 2 usage or domain error, 3 non-convergence,
//! 4 resolution or data failure.

mod commands;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use commands::{DecomposeConfig, DispersionConfig, Outcome, ReconstructConfig, SolveConfig, SynthesizeConfig, VerifyConfig};
use manifest::{OutDir, RunManifest, MANIFEST_SCHEMA};

/// Default output root when `--out` is not given.
pub const OUT_ROOT_VAR: &str = "DSLUMP_OUT_ROOT";

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            message: message.into(),
        }
    }
}

impl From<dslump::Error> for Failure {
    fn from(e: dslump::Error) -> Self {
        use dslump::Error::*;
        let code = match &e {
            Convergence(_) | NoConvergence(_) | Collapse { .. } | DegenerateRay { .. } => 3,
            Resolution(_) | Truncation { .. } | NonConvergentTail(_) => 4,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(name = "dslump", version, about = "Davey-Stewartson lumps and gravity-capillary solitary waves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config, or a manifest from an earlier run. Flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory. Defaults to `$DSLUMP_OUT_ROOT/<command>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Table of ω, Λ and the envelope coefficients.
    Dispersion {
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
        /// Inclusive grid `lo:hi:n`.
        #[arg(long)]
        beta_grid: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Ground state of the envelope functional.
    SolveLump {
        #[arg(long)]
        beta: Option<f64>,
        /// `N` or `NXxNZ`.
        #[arg(long)]
        grid: Option<String>,
        /// `L` or `LXxLZ`.
        #[arg(long = "box")]
        box_size: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        optimizer: Option<String>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Free surface `η₁ + F(η₁)` from an envelope.
    Reconstruct {
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        epsilon: Option<f64>,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        delta: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Convergence of the leading-order expansions in ε.
    Verify {
        #[arg(long)]
        beta: Option<f64>,
        /// Comma-separated subset of hf, k4, l4, l3, approx.
        #[arg(long, value_delimiter = ',')]
        which: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        eps_list: Option<Vec<f64>>,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        delta: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Profile decomposition of a lattice sequence.
    ProfileDecompose {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        eps_cc: Option<f64>,
        #[arg(long)]
        tail_fraction: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Lattice sequence of translated profiles (profiles and tracks come from --config).
    ProfileSynthesize {
        #[arg(long)]
        noise_amp: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        len: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-run a command from its manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(out: Option<PathBuf>, command: &str) -> PathBuf {
    out.unwrap_or_else(|| {
        let root = std::env::var_os(OUT_ROOT_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("dslump-out"));
        root.join(command)
    })
}

/// Base config from `--config`, which may be a plain config or a manifest.
fn base_config<C: DeserializeOwned + Default>(path: Option<&Path>, command: &str) -> Result<C, Failure> {
    let Some(path) = path else {
        return Ok(C::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let value = if value.get("schema").and_then(|s| s.as_str()) == Some(MANIFEST_SCHEMA) {
        let m: RunManifest = serde_json::from_value(value).map_err(|e| Failure::usage(e.to_string()))?;
        m.check()?;
        if m.command != command {
            return Err(Failure::usage(format!("manifest is for `{}`, not `{command}`", m.command)));
        }
        m.config
    } else {
        value
    };
    serde_json::from_value(value).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn parse_pair<T: std::str::FromStr>(s: &str, what: &str) -> Result<(T, T), Failure> {
    let parse = |p: &str| p.trim().parse::<T>().map_err(|_| Failure::usage(format!("invalid {what} `{s}`")));
    match s.split_once(['x', 'X']) {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => {
            let v = parse(s)?;
            Ok((parse(s)?, v))
        }
    }
}

fn beta_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::usage(format!("invalid --beta-grid `{spec}`, expected lo:hi:n"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    match n {
        0 => Err(bad()),
        1 => Ok(vec![lo]),
        _ => Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()),
    }
}

fn absolute(p: PathBuf) -> PathBuf {
    std::path::absolute(&p).unwrap_or(p)
}

fn execute<C: Serialize>(command: &str, cfg: &C, out: PathBuf, body: fn(&C, &mut OutDir) -> Outcome) -> Result<(), Failure> {
    let start = Instant::now();
    let mut dir = OutDir::create(out)?;
    let status = body(cfg, &mut dir)?;
    let config = serde_json::to_value(cfg).map_err(|e| Failure::data(e.to_string()))?;
    dir.finish(command, config, start.elapsed().as_secs_f64())?;
    match status {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn replay(path: &Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let m = RunManifest::load(path)?;
    let out = out_dir(out, &m.command);
    let cfg = m.config;
    fn from<C: DeserializeOwned>(v: serde_json::Value) -> Result<C, Failure> {
        serde_json::from_value(v).map_err(|e| Failure::usage(format!("manifest config: {e}")))
    }
    match m.command.as_str() {
        "dispersion" => execute("dispersion", &from::<DispersionConfig>(cfg)?, out, commands::dispersion),
        "solve-lump" => execute("solve-lump", &from::<SolveConfig>(cfg)?, out, commands::solve_lump),
        "reconstruct" => execute("reconstruct", &from::<ReconstructConfig>(cfg)?, out, commands::reconstruct),
        "verify" => execute("verify", &from::<VerifyConfig>(cfg)?, out, commands::verify),
        "profile-decompose" => execute("profile-decompose", &from::<DecomposeConfig>(cfg)?, out, commands::profile_decompose),
        "profile-synthesize" => execute("profile-synthesize", &from::<SynthesizeConfig>(cfg)?, out, commands::profile_synthesize),
        other => Err(Failure::usage(format!("unknown command `{other}` in manifest"))),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Dispersion { beta, beta_grid: grid, common } => {
            let mut cfg: DispersionConfig = base_config(common.config.as_deref(), "dispersion")?;
            match (beta, grid) {
                (Some(_), Some(_)) => return Err(Failure::usage("give either --beta or --beta-grid")),
                (Some(b), None) => cfg.betas = vec![b],
                (None, Some(g)) => cfg.betas = beta_grid(&g)?,
                (None, None) => {}
            }
            execute("dispersion", &cfg, out_dir(common.out, "dispersion"), commands::dispersion)
        }
        Command::SolveLump {
            beta,
            grid,
            box_size,
            tol,
            seed,
            optimizer,
            max_iters,
            common,
        } => {
            let mut cfg: SolveConfig = base_config(common.config.as_deref(), "solve-lump")?;
            let s = &mut cfg.solver;
            if let Some(b) = beta {
                cfg.beta = b;
            }
            if let Some(g) = grid {
                (s.grid.nx, s.grid.nz) = parse_pair(&g, "--grid")?;
            }
            if let Some(b) = box_size {
                (s.grid.lx, s.grid.lz) = parse_pair(&b, "--box")?;
            }
            if let Some(t) = tol {
                s.tol_residual = t;
            }
            if let Some(v) = seed {
                s.initial.seed = v;
            }
            if let Some(o) = optimizer {
                s.optimizer = o;
            }
            if let Some(m) = max_iters {
                s.max_iters = m;
            }
            execute("solve-lump", &cfg, out_dir(common.out, "solve-lump"), commands::solve_lump)
        }
        Command::Reconstruct {
            beta,
            epsilon,
            input,
            delta,
            common,
        } => {
            let mut cfg: ReconstructConfig = base_config(common.config.as_deref(), "reconstruct")?;
            if let Some(b) = beta {
                cfg.beta = b;
            }
            if let Some(e) = epsilon {
                cfg.epsilon = e;
            }
            if let Some(p) = input {
                cfg.input = Some(absolute(p));
            }
            if delta.is_some() {
                cfg.delta = delta;
            }
            execute("reconstruct", &cfg, out_dir(common.out, "reconstruct"), commands::reconstruct)
        }
        Command::Verify {
            beta,
            which,
            eps_list,
            input,
            delta,
            common,
        } => {
            let mut cfg: VerifyConfig = base_config(common.config.as_deref(), "verify")?;
            if let Some(b) = beta {
                cfg.beta = b;
            }
            if let Some(w) = which {
                cfg.which = w;
            }
            if let Some(e) = eps_list {
                cfg.eps_list = e;
            }
            if let Some(p) = input {
                cfg.input = Some(absolute(p));
            }
            if delta.is_some() {
                cfg.delta = delta;
            }
            execute("verify", &cfg, out_dir(common.out, "verify"), commands::verify)
        }
        Command::ProfileDecompose {
            input,
            eps_cc,
            tail_fraction,
            common,
        } => {
            let mut cfg: DecomposeConfig = base_config(common.config.as_deref(), "profile-decompose")?;
            if let Some(p) = input {
                cfg.input = Some(absolute(p));
            }
            if let Some(e) = eps_cc {
                cfg.eps_cc = e;
            }
            if let Some(t) = tail_fraction {
                cfg.tail_fraction = t;
            }
            execute("profile-decompose", &cfg, out_dir(common.out, "profile-decompose"), commands::profile_decompose)
        }
        Command::ProfileSynthesize {
            noise_amp,
            seed,
            len,
            common,
        } => {
            let mut cfg: SynthesizeConfig = base_config(common.config.as_deref(), "profile-synthesize")?;
            if let Some(a) = noise_amp {
                cfg.noise_amp = a;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = len {
                cfg.len = n;
            }
            execute("profile-synthesize", &cfg, out_dir(common.out, "profile-synthesize"), commands::profile_synthesize)
        }
        Command::Replay { manifest, out } => replay(&manifest, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
