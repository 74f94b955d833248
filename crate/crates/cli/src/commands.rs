//! Resolved configurations and the work each subcommand does.

use std::path::{Path, PathBuf};

use dslump::dispersion::{ds_coefficients, solve_dispersion, DispersionParams};
use dslump::fields::io::Field;
use dslump::fields::MultiplierBank;
use dslump::profile::{decompose, synthesize, LatticeEntry, LatticeSequence, TrackSpec};
use dslump::reduction::{verifier, ConvergenceReport, VerifyContext, DEFAULT_EPSILONS};
use dslump::solver::{optimizer, reconstruct_surface, SolveReport, SolverConfig};
use dslump::Error;
use serde::{Deserialize, Serialize};

use crate::manifest::OutDir;
use crate::Failure;

/// Outcome of a command whose files were written.
pub type Outcome = Result<Option<Failure>, Failure>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DispersionConfig {
    pub betas: Vec<f64>,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self { betas: vec![0.25] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub beta: f64,
    pub solver: SolverConfig,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            beta: 0.25,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructConfig {
    pub beta: f64,
    pub epsilon: f64,
    pub input: Option<PathBuf>,
    /// Cutoff radius; `ω/4` when absent.
    pub delta: Option<f64>,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self {
            beta: 0.25,
            epsilon: 0.025,
            input: None,
            delta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub beta: f64,
    pub which: Vec<String>,
    pub eps_list: Vec<f64>,
    /// Envelope file; the built-in Gaussian when absent.
    pub input: Option<PathBuf>,
    pub delta: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            beta: 0.25,
            which: dslump::reduction::available_verifiers().iter().map(|s| s.to_string()).collect(),
            eps_list: DEFAULT_EPSILONS.to_vec(),
            input: None,
            delta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecomposeConfig {
    pub input: Option<PathBuf>,
    pub eps_cc: f64,
    pub tail_fraction: f64,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self {
            input: None,
            eps_cc: 1e-3,
            tail_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesizeConfig {
    pub dim: usize,
    pub profiles: Vec<LatticeEntry>,
    pub tracks: Vec<TrackSpec>,
    pub noise_amp: f64,
    pub seed: u64,
    pub len: usize,
}

impl Default for SynthesizeConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            profiles: vec![],
            tracks: vec![],
            noise_amp: 0.0,
            seed: 0,
            len: 32,
        }
    }
}

fn bank_for(params: DispersionParams, delta: Option<f64>) -> Result<MultiplierBank, Failure> {
    Ok(match delta {
        Some(d) => MultiplierBank::new(params, d)?,
        None => MultiplierBank::with_default_delta(params),
    })
}

fn load_field(path: &Path) -> Result<Field, Failure> {
    Field::load(path).map_err(|e| match e {
        Error::Io(io) => Failure::usage(format!("cannot read {}: {io}", path.display())),
        other => Failure::usage(format!("{}: {other}", path.display())),
    })
}

fn csv_field(out: &mut OutDir, name: &str, field: Field) -> Result<(), Failure> {
    let mut buf = Vec::new();
    field.write_csv(&mut buf)?;
    out.write(name, &buf)
}

pub fn dispersion(cfg: &DispersionConfig, out: &mut OutDir) -> Outcome {
    if cfg.betas.is_empty() {
        return Err(Failure::usage("no beta values given"));
    }
    let mut csv = String::from("beta,omega,lambda,a1,a2,a3,A,B,C1,C2,g2omega\n");
    for &beta in &cfg.betas {
        let p = solve_dispersion(beta)?;
        let c = ds_coefficients(&p)?;
        csv += &format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
            beta, p.omega, p.lambda_crit, c.a1, c.a2, c.a3, c.a_omega, c.b_omega, c.c1, c.c2, c.g_2omega
        );
    }
    out.write("dispersion.csv", csv.as_bytes())?;
    Ok(None)
}

fn write_solve(out: &mut OutDir, report: &SolveReport) -> Result<(), Failure> {
    out.write_json("report.json", report)?;
    csv_field(out, "zeta.csv", Field::Complex(report.zeta.clone()))?;
    let mut trace = String::from("iteration,t0,residual\n");
    for (i, t) in report.trace.iter().enumerate() {
        trace += &format!("{i},{:?},{:?}\n", t.t0, t.residual);
    }
    out.write("trace.csv", trace.as_bytes())
}

pub fn solve_lump(cfg: &SolveConfig, out: &mut OutDir) -> Outcome {
    cfg.solver.validate()?;
    let p = solve_dispersion(cfg.beta)?;
    let c = ds_coefficients(&p)?;
    let report = optimizer(&cfg.solver.optimizer)?.minimise(&cfg.solver, &c)?;
    write_solve(out, &report)?;
    if report.converged {
        Ok(None)
    } else {
        Ok(Some(Failure::from(Error::NoConvergence(Box::new(report)))))
    }
}

/// Round-off level of the normalised spectral overlap.
const DISJOINT_TOL: f64 = 1e-12;

#[derive(Serialize)]
struct ReconstructSummary {
    epsilon: f64,
    wave_speed: f64,
    truncated_fraction: f64,
    /// `Σ|η̂₁||F̂| / (‖η̂₁‖‖F̂‖)`; zero when the spectra are disjoint.
    spectral_overlap: f64,
    spectra_disjoint: bool,
    eta_sup: f64,
}

pub fn reconstruct(cfg: &ReconstructConfig, out: &mut OutDir) -> Outcome {
    let input = cfg.input.as_deref().ok_or_else(|| Failure::usage("--in is required"))?;
    if !(0.0..1.0).contains(&cfg.epsilon) {
        return Err(Failure::usage(format!("epsilon must lie in [0, 1), got {}", cfg.epsilon)));
    }
    let zeta = load_field(input)?.into_complex();
    let p = solve_dispersion(cfg.beta)?;
    let c = ds_coefficients(&p)?;
    let bank = bank_for(p, cfg.delta)?;
    let r = reconstruct_surface(&zeta, cfg.epsilon, &p, &c, &bank)?;

    let (a, b) = (r.eta1.fft(), r.eta2_approx.fft());
    let cross: f64 = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x.norm() * y.norm()).sum();
    let na: f64 = a.coeffs.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let nb: f64 = b.coeffs.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let overlap = if na > 0.0 && nb > 0.0 { cross / (na * nb) } else { 0.0 };

    csv_field(out, "eta.csv", Field::Real(r.eta.clone()))?;
    csv_field(out, "eta1.csv", Field::Real(r.eta1.clone()))?;
    csv_field(out, "f_eta1.csv", Field::Real(r.eta2_approx.clone()))?;
    out.write_json(
        "summary.json",
        &ReconstructSummary {
            epsilon: r.epsilon,
            wave_speed: r.wave_speed,
            truncated_fraction: r.truncated_fraction,
            spectral_overlap: overlap,
            spectra_disjoint: overlap < DISJOINT_TOL,
            eta_sup: r.eta.sup_norm(),
        },
    )?;
    Ok(None)
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    epsilons: &'a [f64],
    reports: Vec<&'a ConvergenceReport>,
}

pub fn verify(cfg: &VerifyConfig, out: &mut OutDir) -> Outcome {
    if cfg.which.is_empty() {
        return Err(Failure::usage("no verifier selected"));
    }
    let verifiers = cfg.which.iter().map(|w| verifier(w)).collect::<Result<Vec<_>, _>>()?;
    let p = solve_dispersion(cfg.beta)?;
    let c = ds_coefficients(&p)?;
    let bank = bank_for(p, cfg.delta)?;
    let zeta = match &cfg.input {
        Some(path) => load_field(path)?.into_complex(),
        None => VerifyContext::default_envelope(),
    };
    let ctx = VerifyContext {
        params: p,
        coeffs: c,
        bank: &bank,
        zeta,
    };
    let mut reports = vec![];
    for v in verifiers {
        reports.extend(v.run(&ctx, &cfg.eps_list)?);
    }
    for r in &reports {
        let mut buf = Vec::new();
        r.write_csv(&mut buf)?;
        out.write(&format!("{}.csv", r.name), &buf)?;
        out.write_json(&format!("{}.json", r.name), r)?;
    }
    out.write_json(
        "verify.json",
        &VerifySummary {
            epsilons: &cfg.eps_list,
            reports: reports.iter().collect(),
        },
    )?;
    Ok(None)
}

#[derive(Serialize)]
struct DecomposeSummary {
    count: usize,
    residual_sup: f64,
    norm_gap: f64,
    min_track_distance: Option<f64>,
    cap_reached: bool,
    cap: f64,
    tail_start: usize,
    sequence_length: usize,
}

pub fn profile_decompose(cfg: &DecomposeConfig, out: &mut OutDir) -> Outcome {
    let input = cfg.input.as_deref().ok_or_else(|| Failure::usage("--in is required"))?;
    let text = std::fs::read_to_string(input).map_err(|e| Failure::usage(format!("cannot read {}: {e}", input.display())))?;
    let seq = LatticeSequence::from_json(&text).map_err(|e| Failure::usage(format!("{}: {e}", input.display())))?;
    let r = decompose(&seq, cfg.eps_cc, cfg.tail_fraction)?;

    out.write("profiles.json", (r.to_json()? + "\n").as_bytes())?;
    let mut tracks = String::from("profile,n,w1,w2\n");
    for (l, t) in r.tracks.iter().enumerate() {
        for (n, w) in t.iter().enumerate() {
            tracks += &format!("{},{},{},{}\n", l + 1, n + 1, w[0], w[1]);
        }
    }
    out.write("tracks.csv", tracks.as_bytes())?;
    out.write_json(
        "summary.json",
        &DecomposeSummary {
            count: r.count(),
            residual_sup: r.residual_sup,
            norm_gap: r.norm_gap,
            min_track_distance: r.min_track_distance,
            cap_reached: r.cap_reached,
            cap: r.cap,
            tail_start: r.tail_start,
            sequence_length: seq.len(),
        },
    )?;
    Ok(None)
}

pub fn profile_synthesize(cfg: &SynthesizeConfig, out: &mut OutDir) -> Outcome {
    let seq = synthesize(cfg.dim, &cfg.profiles, &cfg.tracks, cfg.noise_amp, cfg.seed, cfg.len)?;
    out.write("sequence.json", (seq.to_json()? + "\n").as_bytes())?;
    Ok(None)
}
