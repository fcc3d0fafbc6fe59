//! Orbits under words and walks, certified escape, and the ping-pong
//! machinery: four truncated cones `W₁..W₄` around the attracting directions
//! `q̃, p̃, q, p` on which three of the four generators at least double the
//! norm, plus the collar `U` near the line at infinity on which every reduced
//! word of length `k` grows norms by more than `2^{k−1}`.

use std::f64::consts::TAU;
use std::io::{self, Write};

use num_complex::Complex64;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{chordal_to, Direction, Point2};
use crate::group::{random_reduced_word, Generator, Word};
use crate::henon::{GroupAction, GroupPreset};
use crate::rng::{self, unit_f64};
use crate::{Error, Result};

/// Norm growth factor per letter on the cones.
pub const DOUBLING: f64 = 2.0;

/// Samples per verification batch; one CSV row per batch.
pub const BATCH: usize = 1000;

/// Applies a reduced word to `p`, last letter first.
pub fn evaluate_word<A: GroupAction + ?Sized>(g: &A, w: &Word, p: Point2) -> Result<Point2> {
    w.application_order().try_fold(p, |z, letter| g.act(letter, z))
}

/// A finite orbit segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<Point2>,
    /// Index into `points` of the first point with norm above the bound, or
    /// `points.len()` when the next image overflowed.
    pub escaped_at: Option<usize>,
    /// The escaping point also lies in the outgoing invariant region of the
    /// generator that produced it.
    pub escape_certified: bool,
    pub overflowed: bool,
}

impl Trajectory {
    pub fn start(p: Point2) -> Self {
        Trajectory {
            points: vec![p],
            escaped_at: None,
            escape_certified: false,
            overflowed: false,
        }
    }

    pub fn last(&self) -> Point2 {
        *self.points.last().expect("trajectory is never empty")
    }

    pub fn escaped(&self) -> bool {
        self.escaped_at.is_some()
    }
}

/// Iterates `letters` in time order from `p`, stopping at the first point
/// whose norm exceeds `max_norm`.
pub fn orbit<A, I>(g: &A, letters: I, p: Point2, max_norm: f64) -> Trajectory
where
    A: GroupAction + ?Sized,
    I: IntoIterator<Item = Generator>,
{
    let mut traj = Trajectory::start(p);
    if p.norm() > max_norm {
        traj.escaped_at = Some(0);
        return traj;
    }
    for letter in letters {
        let z = traj.last();
        match g.act(letter, z) {
            Ok(next) => {
                traj.points.push(next);
                if next.norm() > max_norm {
                    traj.escaped_at = Some(traj.points.len() - 1);
                    traj.escape_certified = g.escape_certified(letter, next);
                    break;
                }
            }
            Err(_) => {
                traj.escaped_at = Some(traj.points.len());
                traj.escape_certified = g.escape_certified(letter, z);
                traj.overflowed = true;
                break;
            }
        }
    }
    traj
}

/// Index of the cone a generator maps into: `h₂ → W₁`, `h₂⁻¹ → W₂`,
/// `h₁ → W₃`, `h₁⁻¹ → W₄`.
pub fn target_cone(g: Generator) -> usize {
    match g {
        Generator::H2 => 0,
        Generator::H2Inv => 1,
        Generator::H1 => 2,
        Generator::H1Inv => 3,
    }
}

/// The generator whose attracting direction is the axis of cone `i`.
pub fn axis_generator(i: usize) -> Generator {
    [Generator::H2, Generator::H2Inv, Generator::H1, Generator::H1Inv][i]
}

/// `D(Wᵢ)`: every letter except the inverse of the axis generator.
pub fn doubling_set(i: usize) -> [Generator; 3] {
    let excluded = axis_generator(i).inverse();
    let mut out = [Generator::H1; 3];
    let mut k = 0;
    for g in Generator::ALL {
        if g != excluded {
            out[k] = g;
            k += 1;
        }
    }
    out
}

/// `{z : ‖z‖ ≥ inner_radius, chordal(direction(z), axis) ≤ aperture}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cone {
    pub axis: Direction,
    pub aperture: f64,
    pub inner_radius: f64,
}

impl Cone {
    pub fn contains(&self, p: Point2) -> bool {
        p.norm() >= self.inner_radius && chordal_to(p, &self.axis) <= self.aperture
    }

    /// Radius log-uniform in `[r₀, 10³·r₀]`; chordal offset from the axis
    /// uniform in the aperture disk; uniform global phase.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Point2 {
        let u = self.axis.unit_vector();
        // unit vector orthogonal to u
        let v = Point2::new(-u.y.conj(), u.x.conj());
        let s = self.aperture * unit_f64(rng).sqrt();
        let phi = TAU * unit_f64(rng);
        let t = Complex64::from_polar(s / (1.0 - s * s).sqrt(), phi);
        let w = Point2::new(u.x + t * v.x, u.y + t * v.y);
        let w = w.scale(1.0 / w.norm());
        let r = self.inner_radius * 10f64.powf(3.0 * unit_f64(rng));
        let phase = Complex64::from_polar(r, TAU * unit_f64(rng));
        Point2::new(w.x * phase, w.y * phase)
    }
}

/// Cones `W₁..W₄` with axes `q̃, p̃, q, p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeSystem {
    pub cones: [Cone; 4],
}

impl ConeSystem {
    /// Equal aperture and inner radius on all four cones. The apertures must
    /// be small enough that the cones are disjoint.
    pub fn new(g: &GroupPreset, aperture: f64, inner_radius: f64) -> Result<Self> {
        if !(aperture > 0.0 && aperture < 1.0) || !(inner_radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cone aperture {aperture} must lie in (0, 1) and inner radius {inner_radius} be positive"
            )));
        }
        if 2.0 * aperture >= g.min_separation() {
            return Err(Error::InvalidParameter(format!(
                "aperture {aperture} too wide for axis separation {}",
                g.min_separation()
            )));
        }
        let cones = std::array::from_fn(|i| Cone {
            axis: g.attracting_direction(axis_generator(i)),
            aperture,
            inner_radius,
        });
        Ok(ConeSystem { cones })
    }

    /// Indices of all cones containing `p`.
    pub fn containing(&self, p: Point2) -> Vec<usize> {
        (0..4).filter(|&i| self.cones[i].contains(p)).collect()
    }

    pub fn aperture(&self) -> f64 {
        self.cones[0].aperture
    }

    pub fn inner_radius(&self) -> f64 {
        self.cones[0].inner_radius
    }
}

/// Summary of one (cone, generator, batch) cell of a verification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    pub cone: usize,
    pub generator: Option<Generator>,
    pub batch: usize,
    pub samples: usize,
    pub min_ratio: f64,
    pub failures: usize,
    pub witness: Option<Point2>,
}

impl CheckRow {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Result of a sampled verification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub rows: Vec<CheckRow>,
    /// Nothing was sampled, so a pass carries no evidence.
    pub no_evidence: bool,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(CheckRow::passed)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().map(|r| r.failures).sum()
    }

    pub fn min_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.min_ratio).fold(f64::INFINITY, f64::min)
    }

    pub fn first_witness(&self) -> Option<Point2> {
        self.rows.iter().find_map(|r| r.witness)
    }

    pub fn merge(mut self, other: VerificationReport) -> Self {
        self.rows.extend(other.rows);
        self.no_evidence &= other.no_evidence;
        self
    }

    pub const CSV_HEADER: &'static str =
        "check,cone,generator,batch,samples,min_ratio,failures,pass,witness_x_re,witness_x_im,witness_y_re,witness_y_im";

    /// One CSV row per (cone, generator, batch).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            let generator = r.generator.map(|g| g.token().to_string()).unwrap_or_default();
            let witness = match r.witness {
                Some(p) => format!("{},{},{},{}", p.x.re, p.x.im, p.y.re, p.y.im),
                None => ",,,".to_string(),
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.check,
                r.cone + 1,
                generator,
                r.batch,
                r.samples,
                r.min_ratio,
                r.failures,
                r.passed(),
                witness
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct Outcome {
    ratio: f64,
    ok: bool,
    point: Point2,
}

fn summarize(check: &str, cone: usize, generator: Option<Generator>, outcomes: &[Outcome]) -> Vec<CheckRow> {
    outcomes
        .chunks(BATCH)
        .enumerate()
        .map(|(batch, chunk)| {
            let min_ratio = chunk.iter().map(|o| o.ratio).fold(f64::INFINITY, f64::min);
            let failures = chunk.iter().filter(|o| !o.ok).count();
            let witness = chunk.iter().find(|o| !o.ok).map(|o| o.point);
            CheckRow {
                check: check.to_string(),
                cone,
                generator,
                batch,
                samples: chunk.len(),
                min_ratio,
                failures,
                witness,
            }
        })
        .collect()
}

fn cone_samples(cs: &ConeSystem, cone: usize, samples: usize, seed: u64) -> Vec<Point2> {
    (0..samples as u64)
        .into_par_iter()
        .map(|k| cs.cones[cone].sample(&mut rng::substream(seed, &[cone as u64, k])))
        .collect()
}

fn norm_ratio(image: &Result<Point2>, z: Point2) -> f64 {
    match image {
        Ok(w) => w.norm() / z.norm(),
        Err(_) => f64::INFINITY,
    }
}

fn per_cone_check<F>(g: &GroupPreset, cs: &ConeSystem, samples: usize, seed: u64, check: &str, ok: F) -> VerificationReport
where
    F: Fn(Generator, Point2, &Result<Point2>) -> bool + Sync,
{
    let mut rows = Vec::new();
    for cone in 0..4 {
        let points = cone_samples(cs, cone, samples, seed);
        for b in doubling_set(cone) {
            let outcomes: Vec<Outcome> = points
                .par_iter()
                .map(|&z| {
                    let image = g.act(b, z);
                    Outcome {
                        ratio: norm_ratio(&image, z),
                        ok: ok(b, z, &image),
                        point: z,
                    }
                })
                .collect();
            if outcomes.is_empty() {
                rows.push(CheckRow {
                    check: check.to_string(),
                    cone,
                    generator: Some(b),
                    batch: 0,
                    samples: 0,
                    min_ratio: f64::INFINITY,
                    failures: 0,
                    witness: None,
                });
            } else {
                rows.extend(summarize(check, cone, Some(b), &outcomes));
            }
        }
    }
    VerificationReport {
        rows,
        no_evidence: samples == 0,
    }
}

/// Checks `‖b(z)‖ > 2‖z‖` for sampled `z ∈ Wᵢ` and every `b ∈ D(Wᵢ)`.
pub fn verify_cone_doubling(g: &GroupPreset, cs: &ConeSystem, samples: usize, seed: u64) -> VerificationReport {
    per_cone_check(g, cs, samples, seed, "doubling", |_, z, image| norm_ratio(image, z) > DOUBLING)
}

/// Checks that every `b ∈ D(Wᵢ)` maps sampled `z ∈ Wᵢ` into the cone around
/// `b`'s attracting direction.
pub fn verify_cone_transitions(g: &GroupPreset, cs: &ConeSystem, samples: usize, seed: u64) -> VerificationReport {
    per_cone_check(g, cs, samples, seed, "transition", |b, _, image| match image {
        Ok(w) => cs.cones[target_cone(b)].contains(*w),
        Err(_) => false,
    })
}

/// Search grid for [`build_cone_system`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSearch {
    pub aperture_start: f64,
    pub aperture_factor: f64,
    pub aperture_steps: usize,
    pub radius_factor: f64,
    pub radius_cap: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ConeSearch {
    fn default() -> Self {
        ConeSearch {
            aperture_start: 0.3,
            aperture_factor: 0.7,
            aperture_steps: 12,
            radius_factor: 2.0,
            radius_cap: 1e4,
            samples: 10_000,
            seed: 0,
        }
    }
}

/// Failure of a parameter search, with one line per rejected candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct NotFound {
    pub log: Vec<String>,
}

/// Apertures from `aperture_start` shrinking geometrically, inner radii from
/// the filtration radius growing geometrically up to the cap; returns the
/// first candidate passing both the doubling and the transition checks.
pub fn build_cone_system(g: &GroupPreset, search: &ConeSearch) -> std::result::Result<ConeSystem, NotFound> {
    let mut log = Vec::new();
    let start_radius = g.filtration().outer_radius();
    if start_radius > search.radius_cap {
        log.push(format!("radius cap {} below filtration radius {start_radius}", search.radius_cap));
        return Err(NotFound { log });
    }
    let mut aperture = search.aperture_start;
    for _ in 0..search.aperture_steps {
        let mut radius = start_radius;
        while radius <= search.radius_cap {
            match ConeSystem::new(g, aperture, radius) {
                Err(e) => {
                    log.push(format!("aperture {aperture}: {e}"));
                    break;
                }
                Ok(cs) => {
                    let doubling = verify_cone_doubling(g, &cs, search.samples, search.seed);
                    let transitions = verify_cone_transitions(g, &cs, search.samples, search.seed);
                    if doubling.passed() && transitions.passed() {
                        return Ok(cs);
                    }
                    log.push(format!(
                        "aperture {aperture}, radius {radius}: {} doubling and {} transition failures",
                        doubling.failures(),
                        transitions.failures()
                    ));
                }
            }
            radius *= search.radius_factor;
        }
        aperture *= search.aperture_factor;
    }
    Err(NotFound { log })
}

/// `U_approx = {z : ‖z‖ ≥ r_U, chordal(direction(z), d) ≥ β for d ∈ {p, q, p̃, q̃}}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollarParams {
    pub r_u: f64,
    pub beta: f64,
}

impl CollarParams {
    /// `β` must stay below half the minimal separation of the four directions.
    pub fn new(g: &GroupPreset, r_u: f64, beta: f64) -> Result<Self> {
        if !(r_u > 0.0) || !r_u.is_finite() {
            return Err(Error::InvalidParameter(format!("collar radius {r_u} must be positive")));
        }
        if !(beta > 0.0 && beta < 0.5 * g.min_separation()) {
            return Err(Error::InvalidParameter(format!(
                "collar gap {beta} must lie in (0, {})",
                0.5 * g.min_separation()
            )));
        }
        Ok(CollarParams { r_u, beta })
    }

    /// Radius log-uniform in `[r_U, 10³·r_U]`, direction uniform on the unit
    /// sphere of ℂ² conditioned on avoiding the excluded directions.
    pub fn sample<R: RngCore + ?Sized>(&self, g: &GroupPreset, rng: &mut R) -> Point2 {
        loop {
            let c: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
            let w = Point2::from_reals(c);
            let n = w.norm();
            if n == 0.0 {
                continue;
            }
            let r = self.r_u * 10f64.powf(3.0 * unit_f64(rng));
            let z = w.scale(r / n);
            if membership_u(g, self, z) {
                return z;
            }
        }
    }
}

pub fn membership_u(g: &GroupPreset, cp: &CollarParams, p: Point2) -> bool {
    p.norm() >= cp.r_u && g.directions().iter().all(|d| chordal_to(p, d) >= cp.beta)
}

/// Samples `z ∈ U_approx` and uniform reduced words `w` of length `k` and
/// checks `‖w(z)‖ > 2^{k−1}‖z‖`. A sample also fails if the first letter
/// applied does not carry `z` into its target cone.
pub fn verify_u_escape(
    g: &GroupPreset,
    cp: &CollarParams,
    cs: &ConeSystem,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    if k == 0 {
        return Err(Error::InvalidParameter("collar check needs k ≥ 1".into()));
    }
    let threshold = 2f64.powi(k as i32 - 1);
    let outcomes: Vec<Outcome> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::substream(seed, &[i]);
            let z = cp.sample(g, &mut rng);
            let w = random_reduced_word(&mut rng, k);
            let ratio = norm_ratio(&evaluate_word(g, &w, z), z);
            let first = w.application_order().next().expect("k ≥ 1");
            let entry = match g.act(first, z) {
                Ok(img) => cs.cones[target_cone(first)].contains(img),
                Err(_) => false,
            };
            Outcome { ratio, ok: ratio > threshold && entry, point: z }
        })
        .collect();
    Ok(VerificationReport {
        rows: summarize("collar", 0, None, &outcomes),
        no_evidence: samples == 0,
    })
}

/// Finds `r_U`, doubling from the cone inner radius, such that every generator
/// maps sampled collar points into its target cone with norm growth.
pub fn build_collar(
    g: &GroupPreset,
    cs: &ConeSystem,
    beta: f64,
    samples: usize,
    seed: u64,
    radius_cap: f64,
) -> std::result::Result<CollarParams, NotFound> {
    let mut log = Vec::new();
    let mut r_u = cs.inner_radius();
    while r_u <= radius_cap {
        let cp = match CollarParams::new(g, r_u, beta) {
            Ok(cp) => cp,
            Err(e) => {
                log.push(e.to_string());
                return Err(NotFound { log });
            }
        };
        let failures: usize = (0..samples as u64)
            .into_par_iter()
            .map(|i| {
                let z = cp.sample(g, &mut rng::substream(seed, &[i]));
                Generator::ALL
                    .iter()
                    .filter(|&&b| match g.act(b, z) {
                        Ok(img) => !(img.norm() > z.norm() && cs.cones[target_cone(b)].contains(img)),
                        Err(_) => true,
                    })
                    .count()
            })
            .sum();
        if failures == 0 {
            return Ok(cp);
        }
        log.push(format!("r_U {r_u}: {failures} failures"));
        r_u *= 2.0;
    }
    Err(NotFound { log })
}
