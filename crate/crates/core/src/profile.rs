//! Profile decomposition of bounded sequences in `ℓ²(ℤ², ℝ^d)`.
//!
//! The weak limit of a recentred sequence is replaced by a robust tail
//! average: at each site the tail values are compared with their
//! componentwise median, values more than `eps_cc/10` away are treated as
//! mass passing through (which converges weakly to zero) and the rest are
//! averaged. A site where no majority agrees fails the Cauchy check.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Site = [i64; 2];

pub const LATTICE_SCHEMA: &str = "dslump-lattice";
pub const LATTICE_VERSION: u32 = 1;

/// A finitely supported map `ℤ² → ℝ^d`, serialized as a sparse site list.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<SiteValue>", into = "Vec<SiteValue>")]
pub struct LatticeEntry {
    pub sites: BTreeMap<Site, Vec<f64>>,
}

fn vnorm_sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

impl LatticeEntry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, site: Site, value: Vec<f64>) {
        self.sites.insert(site, value);
    }

    pub fn get(&self, site: &Site) -> Option<&Vec<f64>> {
        self.sites.get(site)
    }

    pub fn norm_sq(&self) -> f64 {
        self.sites.values().map(|v| vnorm_sq(v)).sum()
    }

    /// `max_j ‖x_j‖`.
    pub fn sup_norm(&self) -> f64 {
        self.sites.values().map(|v| vnorm_sq(v).sqrt()).fold(0.0, f64::max)
    }

    /// `(T_w x)_j = x_{j−w}`.
    pub fn translate(&self, w: Site) -> Self {
        Self {
            sites: self
                .sites
                .iter()
                .map(|(j, v)| ([j[0] + w[0], j[1] + w[1]], v.clone()))
                .collect(),
        }
    }

    /// Site of largest norm, the lexicographically smallest among ties.
    pub fn argmax(&self) -> Option<Site> {
        let mut best: Option<(Site, f64)> = None;
        for (j, v) in &self.sites {
            let n = vnorm_sq(v);
            if best.is_none_or(|(_, b)| n > b) {
                best = Some((*j, n));
            }
        }
        best.filter(|(_, n)| *n > 0.0).map(|(j, _)| j)
    }

    /// `self − T_w p`, dropping sites that become exactly zero.
    pub fn subtract_translate(&mut self, p: &LatticeEntry, w: Site, dim: usize) {
        for (j, v) in &p.sites {
            let s = [j[0] + w[0], j[1] + w[1]];
            let e = self.sites.entry(s).or_insert_with(|| vec![0.0; dim]);
            for (a, b) in e.iter_mut().zip(v) {
                *a -= b;
            }
            if e.iter().all(|a| *a == 0.0) {
                self.sites.remove(&s);
            }
        }
    }

    /// `‖self − other‖_{ℓ²}`.
    pub fn distance(&self, other: &LatticeEntry) -> f64 {
        let keys: BTreeSet<&Site> = self.sites.keys().chain(other.sites.keys()).collect();
        keys.into_iter()
            .map(|j| match (self.sites.get(j), other.sites.get(j)) {
                (Some(a), Some(b)) => a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum(),
                (Some(a), None) | (None, Some(a)) => vnorm_sq(a),
                (None, None) => 0.0,
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// `x_1, …, x_N` with fibre `ℝ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSequence {
    pub dim: usize,
    pub entries: Vec<LatticeEntry>,
}

#[derive(Clone, Serialize, Deserialize)]
struct SiteValue {
    site: Site,
    value: Vec<f64>,
}

impl From<Vec<SiteValue>> for LatticeEntry {
    fn from(list: Vec<SiteValue>) -> Self {
        Self {
            sites: list.into_iter().map(|sv| (sv.site, sv.value)).collect(),
        }
    }
}

impl From<LatticeEntry> for Vec<SiteValue> {
    fn from(e: LatticeEntry) -> Self {
        entry_wire(&e)
    }
}

#[derive(Serialize, Deserialize)]
struct SequenceWire {
    schema: String,
    version: u32,
    dim: usize,
    entries: Vec<Vec<SiteValue>>,
}

fn entry_wire(e: &LatticeEntry) -> Vec<SiteValue> {
    e.sites
        .iter()
        .map(|(j, v)| SiteValue {
            site: *j,
            value: v.clone(),
        })
        .collect()
}

fn entry_from_wire(list: Vec<SiteValue>, dim: usize) -> Result<LatticeEntry> {
    let mut e = LatticeEntry::new();
    for sv in list {
        if sv.value.len() != dim {
            return Err(Error::Shape {
                expected: dim,
                actual: sv.value.len(),
            });
        }
        if sv.value.iter().any(|a| !a.is_finite()) {
            return Err(Error::Format(format!("non-finite value at site {:?}", sv.site)));
        }
        if e.sites.insert(sv.site, sv.value).is_some() {
            return Err(Error::Format(format!("duplicate site {:?}", sv.site)));
        }
    }
    Ok(e)
}

impl LatticeSequence {
    pub fn new(dim: usize, entries: Vec<LatticeEntry>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("fibre dimension must be positive".into()));
        }
        for e in &entries {
            if let Some(v) = e.sites.values().find(|v| v.len() != dim) {
                return Err(Error::Shape {
                    expected: dim,
                    actual: v.len(),
                });
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn translate(&self, w: Site) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e.translate(w)).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let wire = SequenceWire {
            schema: LATTICE_SCHEMA.into(),
            version: LATTICE_VERSION,
            dim: self.dim,
            entries: self.entries.iter().map(entry_wire).collect(),
        };
        Ok(serde_json::to_string_pretty(&wire)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: SequenceWire = serde_json::from_str(text)?;
        if wire.schema != LATTICE_SCHEMA {
            return Err(Error::Format(format!("unexpected schema '{}'", wire.schema)));
        }
        if wire.version != LATTICE_VERSION {
            return Err(Error::Format(format!("unsupported lattice version {}", wire.version)));
        }
        let dim = wire.dim;
        let entries = wire
            .entries
            .into_iter()
            .map(|l| entry_from_wire(l, dim))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, entries)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub dim: usize,
    /// Profiles, each recentred so that its largest site is the origin.
    pub profiles: Vec<LatticeEntry>,
    /// `tracks[ℓ][n]`: translation of profile `ℓ` in entry `n`.
    pub tracks: Vec<Vec<Site>>,
    /// `max ‖x_n − Σ T x^ℓ‖_∞` over the tail.
    pub residual_sup: f64,
    /// `|‖x_N‖² − Σ‖x^ℓ‖² − ‖r_N‖²|`.
    pub norm_gap: f64,
    /// Smallest distance between two tracks at the last index.
    pub min_track_distance: Option<f64>,
    /// The profile-count cap stopped the iteration.
    pub cap_reached: bool,
    pub cap: f64,
    pub tail_start: usize,
}

#[derive(Serialize, Deserialize)]
struct ResultWire {
    schema: String,
    version: u32,
    dim: usize,
    profiles: Vec<Vec<SiteValue>>,
    tracks: Vec<Vec<Site>>,
    residual_sup: f64,
    norm_gap: f64,
    min_track_distance: Option<f64>,
    cap_reached: bool,
    cap: f64,
    tail_start: usize,
}

impl DecompositionResult {
    pub fn count(&self) -> usize {
        self.profiles.len()
    }

    pub fn to_json(&self) -> Result<String> {
        let wire = ResultWire {
            schema: "dslump-decomposition".into(),
            version: LATTICE_VERSION,
            dim: self.dim,
            profiles: self.profiles.iter().map(entry_wire).collect(),
            tracks: self.tracks.clone(),
            residual_sup: self.residual_sup,
            norm_gap: self.norm_gap,
            min_track_distance: self.min_track_distance,
            cap_reached: self.cap_reached,
            cap: self.cap,
            tail_start: self.tail_start,
        };
        Ok(serde_json::to_string_pretty(&wire)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let w: ResultWire = serde_json::from_str(text)?;
        if w.schema != "dslump-decomposition" || w.version != LATTICE_VERSION {
            return Err(Error::Format(format!("unsupported decomposition file {} v{}", w.schema, w.version)));
        }
        Ok(Self {
            dim: w.dim,
            profiles: w
                .profiles
                .into_iter()
                .map(|l| entry_from_wire(l, w.dim))
                .collect::<Result<_>>()?,
            tracks: w.tracks,
            residual_sup: w.residual_sup,
            norm_gap: w.norm_gap,
            min_track_distance: w.min_track_distance,
            cap_reached: w.cap_reached,
            cap: w.cap,
            tail_start: w.tail_start,
        })
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Robust tail limit of the recentred entries `ys`.
fn tail_limit(ys: &[LatticeEntry], dim: usize, tol: f64) -> Result<LatticeEntry> {
    let sites: BTreeSet<Site> = ys.iter().flat_map(|y| y.sites.keys().copied()).collect();
    let zero = vec![0.0; dim];
    let mut out = LatticeEntry::new();
    for j in sites {
        let present = ys.iter().filter(|y| y.sites.contains_key(&j)).count();
        if 2 * present <= ys.len() {
            // zero in most of the tail, so zero in the limit
            continue;
        }
        let vals: Vec<&Vec<f64>> = ys.iter().map(|y| y.sites.get(&j).unwrap_or(&zero)).collect();
        let med: Vec<f64> = (0..dim)
            .map(|c| median(&mut vals.iter().map(|v| v[c]).collect::<Vec<_>>()))
            .collect();
        let inliers: Vec<&&Vec<f64>> = vals
            .iter()
            .filter(|v| v.iter().zip(&med).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() <= tol)
            .collect();
        if 2 * inliers.len() <= vals.len() {
            return Err(Error::NonConvergentTail(format!(
                "site {j:?}: only {} of {} tail values agree within {tol:e}",
                inliers.len(),
                vals.len()
            )));
        }
        let k = inliers.len() as f64;
        let mean: Vec<f64> = (0..dim).map(|c| inliers.iter().map(|v| v[c]).sum::<f64>() / k).collect();
        if mean.iter().any(|a| *a != 0.0) {
            out.insert(j, mean);
        }
    }
    Ok(out)
}

fn min_pairwise(points: &[Site]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (a, p) in points.iter().enumerate() {
        for q in &points[a + 1..] {
            let d = (((p[0] - q[0]).pow(2) + (p[1] - q[1]).pow(2)) as f64).sqrt();
            best = Some(best.map_or(d, |b| b.min(d)));
        }
    }
    best
}

/// Greedy extraction of profiles: recentre at the largest site, take the
/// tail limit, subtract its translates, repeat until the tail residual is
/// below `eps_cc` in `ℓ∞` or the profile count passes
/// `1 + ‖x‖²_max / eps_cc²`. An extraction that removes less than
/// `eps_cc²/2` of mean tail norm is reported as a non-convergent tail.
pub fn decompose(seq: &LatticeSequence, eps_cc: f64, tail_fraction: f64) -> Result<DecompositionResult> {
    if seq.is_empty() {
        return Err(Error::Domain("sequence is empty".into()));
    }
    if !(eps_cc > 0.0 && eps_cc.is_finite()) {
        return Err(Error::Domain(format!("eps_cc must be positive, got {eps_cc}")));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Domain(format!("tail_fraction must lie in (0, 1], got {tail_fraction}")));
    }
    let n = seq.len();
    let tail_len = ((tail_fraction * n as f64).ceil() as usize).clamp(1, n);
    let tail_start = n - tail_len;
    let max_norm = seq.entries.iter().map(LatticeEntry::norm_sq).fold(0.0, f64::max);
    let cap = 1.0 + max_norm / (eps_cc * eps_cc);
    let tol = eps_cc / 10.0;

    let mut residual = seq.entries.clone();
    let mut profiles = vec![];
    let mut tracks = vec![];
    let mut cap_reached = false;
    let tail_sup = |r: &[LatticeEntry]| r[tail_start..].iter().map(LatticeEntry::sup_norm).fold(0.0, f64::max);
    let tail_energy = |r: &[LatticeEntry]| r[tail_start..].iter().map(LatticeEntry::norm_sq).sum::<f64>() / tail_len as f64;

    while tail_sup(&residual) > eps_cc {
        if (profiles.len() + 1) as f64 > cap {
            cap_reached = true;
            break;
        }
        let track: Vec<Site> = residual.iter().map(|r| r.argmax().unwrap_or([0, 0])).collect();
        let ys: Vec<LatticeEntry> = residual[tail_start..]
            .iter()
            .zip(&track[tail_start..])
            .map(|(r, w)| r.translate([-w[0], -w[1]]))
            .collect();
        let profile = tail_limit(&ys, seq.dim, tol)?;
        if profile.sites.is_empty() {
            return Err(Error::NonConvergentTail("extracted profile vanishes".into()));
        }
        let before = tail_energy(&residual);
        for (r, w) in residual.iter_mut().zip(&track) {
            r.subtract_translate(&profile, *w, seq.dim);
        }
        // Each genuine profile carries at least eps_cc² of norm.
        if before - tail_energy(&residual) < 0.5 * eps_cc * eps_cc {
            return Err(Error::NonConvergentTail(format!(
                "profile {} does not reduce the tail residual; the recentring track is not stable",
                profiles.len() + 1
            )));
        }
        profiles.push(profile);
        tracks.push(track);
    }

    let last = n - 1;
    let norm_gap = (seq.entries[last].norm_sq()
        - profiles.iter().map(LatticeEntry::norm_sq).sum::<f64>()
        - residual[last].norm_sq())
    .abs();
    let ends: Vec<Site> = tracks.iter().map(|t| t[last]).collect();
    Ok(DecompositionResult {
        dim: seq.dim,
        profiles,
        residual_sup: tail_sup(&residual),
        tracks,
        norm_gap,
        min_track_distance: min_pairwise(&ends),
        cap_reached,
        cap,
        tail_start,
    })
}

/// Affine track `w_n = start + n·velocity`, `n = 1..N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackSpec {
    pub start: Site,
    pub velocity: Site,
}

impl TrackSpec {
    pub fn at(&self, n: usize) -> Site {
        let n = n as i64;
        [self.start[0] + n * self.velocity[0], self.start[1] + n * self.velocity[1]]
    }
}

/// `x_n = Σ_ℓ T_{w_nℓ} x^ℓ + noise`, with noise uniform in
/// `[−noise_amp, noise_amp]` on the support of the clean entry.
pub fn synthesize(
    dim: usize,
    profiles: &[LatticeEntry],
    tracks: &[TrackSpec],
    noise_amp: f64,
    seed: u64,
    len: usize,
) -> Result<LatticeSequence> {
    if profiles.len() != tracks.len() {
        return Err(Error::Shape {
            expected: profiles.len(),
            actual: tracks.len(),
        });
    }
    if let Some(v) = profiles.iter().flat_map(|p| p.sites.values()).find(|v| v.len() != dim) {
        return Err(Error::Shape {
            expected: dim,
            actual: v.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(len);
    for n in 1..=len {
        let mut e = LatticeEntry::new();
        for (p, t) in profiles.iter().zip(tracks) {
            let w = t.at(n);
            for (j, v) in &p.sites {
                let acc = e.sites.entry([j[0] + w[0], j[1] + w[1]]).or_insert_with(|| vec![0.0; dim]);
                for (a, b) in acc.iter_mut().zip(v) {
                    *a += b;
                }
            }
        }
        if noise_amp > 0.0 {
            for v in e.sites.values_mut() {
                for a in v.iter_mut() {
                    *a += rng.random_range(-noise_amp..=noise_amp);
                }
            }
        }
        e.sites.retain(|_, v| v.iter().any(|a| *a != 0.0));
        entries.push(e);
    }
    LatticeSequence::new(dim, entries)
}

/// `|a − b|_{ℓ²}` after moving `a` so that its largest site matches that of `b`.
pub fn aligned_distance(a: &LatticeEntry, b: &LatticeEntry) -> f64 {
    match (a.argmax(), b.argmax()) {
        (Some(p), Some(q)) => a.translate([q[0] - p[0], q[1] - p[1]]).distance(b),
        _ => a.distance(b),
    }
}
