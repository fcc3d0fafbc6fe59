//! Random dynamics `x_{n+1} = g_{n+1}·x_n` with `g_n` i.i.d. from `ν`:
//! chains, escape of mass from balls, occupation measures on a grid, a
//! stationarity defect, averages over reduced words and along chains, and
//! the filled Julia set experiments.
//!
//! Chains stop once the norm exceeds an overflow guard; from then on the
//! chain sits in an absorbing "escaped" state. Every generator maps the far
//! exterior into itself in its own frame, so the convention only discards
//! excursions that would have to retrace a long reduced word exactly.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evaluate_word, membership_u, orbit, CollarParams, Trajectory};
use crate::geometry::Point2;
use crate::group::{enumerate_reduced, Generator, WalkMeasure};
use crate::henon::{filtration_radius, Filtration, GroupAction, GroupPreset, HenonMap, Region, DEFAULT_GROWTH};
use crate::rng::{self, unit_f64};
use crate::{Error, Result};

/// Norm beyond which a chain is declared escaped.
pub const DEFAULT_OVERFLOW_GUARD: f64 = 1e12;

/// Extra pushforward sample points per cell are capped at this total.
pub const MAX_POINTS_PER_CELL: usize = 16;

/// Largest word length accepted by [`word_average_mass`].
pub const MAX_WORD_AVERAGE_LENGTH: usize = 8;

pub fn simulate_chain<A: GroupAction + ?Sized>(
    g: &A,
    nu: &WalkMeasure,
    start: Point2,
    steps: usize,
    seed: u64,
) -> Trajectory {
    simulate_chain_with_guard(g, nu, start, steps, seed, DEFAULT_OVERFLOW_GUARD)
}

/// Draws letters from `nu` on the stream of `seed` and applies them in turn,
/// halting once the norm exceeds `guard`.
pub fn simulate_chain_with_guard<A: GroupAction + ?Sized>(
    g: &A,
    nu: &WalkMeasure,
    start: Point2,
    steps: usize,
    seed: u64,
    guard: f64,
) -> Trajectory {
    let mut rng = rng::stream(seed);
    orbit(g, (0..steps).map(|_| nu.sample(&mut rng)), start, guard)
}

/// State of a chain at step `n`, `None` once escaped.
fn state_at(t: &Trajectory, n: usize) -> Option<Point2> {
    match t.escaped_at {
        Some(e) if n >= e => None,
        _ => t.points.get(n).copied(),
    }
}

/// For each radius, the series `f_n` (`n = 0..=steps`) of the fraction of
/// chains inside the closed ball. Chain `(i, t)` starts at `starts[i]` and
/// uses the stream `derive_seed(seed, [i, t])`.
pub fn mass_escape_radii<A: GroupAction + ?Sized>(
    g: &A,
    nu: &WalkMeasure,
    starts: &[Point2],
    steps: usize,
    radii: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("mass escape needs trials ≥ 1".into()));
    }
    if starts.is_empty() {
        return Err(Error::EmptySample);
    }
    let chains = starts.len() * trials;
    let zero = || vec![vec![0u64; steps + 1]; radii.len()];
    let counts = (0..chains)
        .into_par_iter()
        .map(|c| {
            let (i, t) = (c / trials, c % trials);
            let chain_seed = rng::derive_seed(seed, &[i as u64, t as u64]);
            let traj = simulate_chain(g, nu, starts[i], steps, chain_seed);
            let mut inside = zero();
            for n in 0..=steps {
                if let Some(p) = state_at(&traj, n) {
                    let norm = p.norm();
                    for (k, r) in radii.iter().enumerate() {
                        if norm <= *r {
                            inside[k][n] += 1;
                        }
                    }
                }
            }
            inside
        })
        .reduce(zero, |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                for (u, v) in x.iter_mut().zip(y) {
                    *u += v;
                }
            }
            a
        });
    Ok(counts
        .into_iter()
        .map(|series| series.into_iter().map(|c| c as f64 / chains as f64).collect())
        .collect())
}

/// Fraction of chains inside the ball of `ball_radius` at each step.
pub fn mass_escape<A: GroupAction + ?Sized>(
    g: &A,
    nu: &WalkMeasure,
    starts: &[Point2],
    steps: usize,
    ball_radius: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    Ok(mass_escape_radii(g, nu, starts, steps, &[ball_radius], trials, seed)?.remove(0))
}

/// Writes `step,fraction` rows.
pub fn write_series_csv<W: Write>(mut w: W, header: (&str, &str), series: &[f64], offset: usize) -> io::Result<()> {
    writeln!(w, "{},{}", header.0, header.1)?;
    for (n, v) in series.iter().enumerate() {
        writeln!(w, "{},{}", n + offset, v)?;
    }
    Ok(())
}

/// Axis-aligned box in the four real coordinates `(Re x, Im x, Re y, Im y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridBox {
    pub center: [f64; 4],
    pub half_widths: [f64; 4],
}

impl GridBox {
    pub fn new(center: [f64; 4], half_widths: [f64; 4]) -> Result<Self> {
        if half_widths.iter().any(|h| !(*h > 0.0 && h.is_finite())) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid box half-widths {half_widths:?}")));
        }
        Ok(GridBox { center, half_widths })
    }

    /// Centred at the origin with half-width `2R` per axis.
    pub fn around_bidisk(f: &Filtration) -> Self {
        let h = 2.0 * f.radius;
        GridBox {
            center: [0.0; 4],
            half_widths: [h; 4],
        }
    }
}

/// Bin counts on a `bins⁴` grid over a box, plus an absorbing bucket for
/// everything outside it.
#[derive(Clone, Debug, PartialEq)]
pub struct GridHistogram {
    pub bounds: GridBox,
    pub bins: usize,
    pub counts: Vec<u64>,
    pub escaped: u64,
}

/// Default resolution per axis.
pub const DEFAULT_BINS: usize = 32;

impl GridHistogram {
    pub fn new(bounds: GridBox, bins: usize) -> Result<Self> {
        if bins == 0 || bins > 256 {
            return Err(Error::InvalidParameter(format!("bins per axis must be in 1..=256, got {bins}")));
        }
        Ok(GridHistogram {
            bounds,
            bins,
            counts: vec![0; bins.pow(4)],
            escaped: 0,
        })
    }

    fn empty_like(&self) -> Self {
        GridHistogram {
            bounds: self.bounds,
            bins: self.bins,
            counts: vec![0; self.counts.len()],
            escaped: 0,
        }
    }

    /// Flat cell index of `p`, or `None` outside the half-open box.
    pub fn cell_of(&self, p: Point2) -> Option<usize> {
        if !p.is_finite() {
            return None;
        }
        let c = p.to_reals();
        let mut index = 0;
        for axis in 0..4 {
            let lo = self.bounds.center[axis] - self.bounds.half_widths[axis];
            let t = (c[axis] - lo) / (2.0 * self.bounds.half_widths[axis]);
            if !(0.0..1.0).contains(&t) {
                return None;
            }
            let b = ((t * self.bins as f64) as usize).min(self.bins - 1);
            index = index * self.bins + b;
        }
        Some(index)
    }

    fn cell_corner_and_width(&self, index: usize) -> ([f64; 4], [f64; 4]) {
        let mut rem = index;
        let mut digits = [0usize; 4];
        for axis in (0..4).rev() {
            digits[axis] = rem % self.bins;
            rem /= self.bins;
        }
        let mut corner = [0.0; 4];
        let mut width = [0.0; 4];
        for axis in 0..4 {
            let hw = self.bounds.half_widths[axis];
            width[axis] = 2.0 * hw / self.bins as f64;
            corner[axis] = self.bounds.center[axis] - hw + digits[axis] as f64 * width[axis];
        }
        (corner, width)
    }

    pub fn cell_center(&self, index: usize) -> Point2 {
        let (corner, width) = self.cell_corner_and_width(index);
        Point2::from_reals(std::array::from_fn(|a| corner[a] + 0.5 * width[a]))
    }

    pub fn sample_in_cell<R: RngCore + ?Sized>(&self, index: usize, rng: &mut R) -> Point2 {
        let (corner, width) = self.cell_corner_and_width(index);
        Point2::from_reals(std::array::from_fn(|a| corner[a] + unit_f64(rng) * width[a]))
    }

    pub fn add(&mut self, p: Point2) {
        self.add_count(p, 1);
    }

    pub fn add_count(&mut self, p: Point2, n: u64) {
        match self.cell_of(p) {
            Some(i) => self.counts[i] += n,
            None => self.escaped += n,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.escaped
    }

    /// Cell-wise sum; associative and commutative.
    pub fn merge(mut self, other: &GridHistogram) -> Self {
        debug_assert_eq!(self.bins, other.bins);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.escaped += other.escaped;
        self
    }

    /// `(cell, count)` for occupied cells.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (i, c))
    }

    /// Probability of each cell, with the escaped bucket last.
    pub fn normalized(&self) -> Vec<f64> {
        let total = self.total() as f64;
        self.counts
            .iter()
            .chain(std::iter::once(&self.escaped))
            .map(|&c| c as f64 / total)
            .collect()
    }

    pub fn escaped_fraction(&self) -> f64 {
        self.escaped as f64 / self.total() as f64
    }
}

/// Occupation measure of every point visited by the trajectories.
pub fn empirical_measure(trajectories: &[Trajectory], bounds: GridBox, bins: usize) -> Result<GridHistogram> {
    if trajectories.is_empty() {
        return Err(Error::EmptyTrajectories);
    }
    let empty = GridHistogram::new(bounds, bins)?;
    Ok(trajectories
        .par_chunks(256)
        .map(|chunk| {
            let mut h = empty.clone();
            for t in chunk {
                for p in &t.points {
                    h.add(*p);
                }
            }
            h
        })
        .reduce(|| empty.clone(), |a, b| a.merge(&b)))
}

/// Number of sample points representing a cell holding mass `mass`.
fn points_per_cell(mass: f64, pushforward_samples: usize) -> usize {
    (1 + (mass * pushforward_samples as f64).floor() as usize).min(MAX_POINTS_PER_CELL)
}

/// Pushforward of `h` under one generator, in integer counts.
///
/// Each occupied cell is represented by its centre plus uniform points in the
/// cell, `min(16, 1 + ⌊mass·pushforward_samples⌋)` in total; its count is
/// split as evenly as possible among them. The escaped bucket maps to itself.
/// Total count is conserved exactly.
pub fn pushforward<A: GroupAction + ?Sized>(
    g: &A,
    gen: Generator,
    h: &GridHistogram,
    pushforward_samples: usize,
    seed: u64,
) -> GridHistogram {
    let total = h.total() as f64;
    let cells: Vec<(usize, u64)> = h.occupied().collect();
    let images: Vec<Vec<(Option<usize>, u64)>> = cells
        .par_iter()
        .map(|&(cell, count)| {
            let k = points_per_cell(count as f64 / total, pushforward_samples);
            let mut rng = rng::substream(seed, &[cell as u64]);
            (0..k)
                .map(|j| {
                    let p = if j == 0 { h.cell_center(cell) } else { h.sample_in_cell(cell, &mut rng) };
                    let share = count / k as u64 + u64::from((j as u64) < count % k as u64);
                    let target = g.act(gen, p).ok().and_then(|img| h.cell_of(img));
                    (target, share)
                })
                .collect()
        })
        .collect();
    let mut out = h.empty_like();
    out.escaped = h.escaped;
    for (target, share) in images.into_iter().flatten() {
        match target {
            Some(i) => out.counts[i] += share,
            None => out.escaped += share,
        }
    }
    out
}

/// Total variation `½ Σ |μ̂(c) − Σᵢ aᵢ (gᵢ)_*μ̂(c)|` over all cells and the
/// escaped bucket.
pub fn stationarity_defect<A: GroupAction + ?Sized>(
    g: &A,
    nu: &WalkMeasure,
    h: &GridHistogram,
    pushforward_samples: usize,
    seed: u64,
) -> f64 {
    let total = h.total() as f64;
    if total == 0.0 {
        return 0.0;
    }
    let weights = nu.weights();
    let mut mixture = vec![0.0; h.counts.len() + 1];
    for gen in Generator::ALL {
        let a = weights[gen.index()];
        let push = pushforward(g, gen, h, pushforward_samples, seed);
        for (m, &c) in mixture.iter_mut().zip(push.counts.iter().chain(std::iter::once(&push.escaped))) {
            *m += a * c as f64 / total;
        }
    }
    let mu = h.normalized();
    0.5 * mu.iter().zip(&mixture).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Both sides of `μ(U) = |Ω_n|⁻¹ Σ_{ω∈Ω_n} μ(ωU)` on a weighted sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordAverage {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    /// `|Ω_n|`, the number of masses averaged on the right.
    pub terms: usize,
}

/// Empirical check of the word-averaging identity for symmetric weights;
/// `z ∈ ωU` is tested as `ω⁻¹(z) ∈ U_approx`. Overflowing images count as
/// outside `U`.
pub fn word_average_mass(
    g: &GroupPreset,
    nu: &WalkMeasure,
    samples: &[(Point2, f64)],
    cp: &CollarParams,
    n: usize,
) -> Result<WordAverage> {
    if !nu.is_symmetric() {
        return Err(Error::AsymmetricWeights(nu.weights()));
    }
    if n > MAX_WORD_AVERAGE_LENGTH {
        return Err(Error::InvalidParameter(format!(
            "word length {n} above {MAX_WORD_AVERAGE_LENGTH}"
        )));
    }
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let total: f64 = samples.iter().map(|s| s.1).sum();
    let mass_of = |pred: &dyn Fn(Point2) -> bool| {
        samples.iter().filter(|(p, _)| pred(*p)).fold(0.0, |acc, s| acc + s.1) / total
    };
    let lhs = mass_of(&|p| membership_u(g, cp, p));
    let words = enumerate_reduced(n)?;
    let masses: Vec<f64> = words
        .par_iter()
        .map(|w| {
            let inv = w.inverse();
            mass_of(&|p| evaluate_word(g, &inv, p).map(|q| membership_u(g, cp, q)).unwrap_or(false))
        })
        .collect();
    let rhs = masses.iter().sum::<f64>() / words.len() as f64;
    Ok(WordAverage {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
        terms: words.len(),
    })
}

/// Registered observables for ergodic averages. The escaped state evaluates
/// as the limit at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    Constant,
    BallIndicator { radius: f64 },
    NormClamp { cap: f64 },
}

impl TestFunction {
    pub fn eval(&self, state: Option<Point2>) -> f64 {
        match (self, state) {
            (TestFunction::Constant, _) => 1.0,
            (TestFunction::BallIndicator { radius }, Some(p)) => f64::from(u8::from(p.norm() <= *radius)),
            (TestFunction::BallIndicator { .. }, None) => 0.0,
            (TestFunction::NormClamp { cap }, Some(p)) => p.norm().min(*cap),
            (TestFunction::NormClamp { cap }, None) => *cap,
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    /// `one`, `ball:<radius>` or `norm-clamp:<cap>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnknownTestFunction(s.to_string());
        let param = |v: &str| v.parse::<f64>().ok().filter(|x| *x > 0.0 && x.is_finite()).ok_or_else(bad);
        match s.split_once(':') {
            None if s == "one" => Ok(TestFunction::Constant),
            Some(("ball", v)) => Ok(TestFunction::BallIndicator { radius: param(v)? }),
            Some(("norm-clamp", v)) => Ok(TestFunction::NormClamp { cap: param(v)? }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Constant => write!(f, "one"),
            TestFunction::BallIndicator { radius } => write!(f, "ball:{radius}"),
            TestFunction::NormClamp { cap } => write!(f, "norm-clamp:{cap}"),
        }
    }
}

/// Running averages `A_N = N⁻¹ Σ_{n=1}^N f(S_n·x)` for `N = 1..=steps`.
pub fn ergodic_average<A: GroupAction + ?Sized>(
    g: &A,
    nu: &WalkMeasure,
    f: TestFunction,
    start: Point2,
    steps: usize,
    seed: u64,
) -> Vec<f64> {
    let traj = simulate_chain(g, nu, start, steps, seed);
    let mut sum = 0.0;
    (1..=steps)
        .map(|n| {
            sum += f.eval(state_at(&traj, n));
            sum / n as f64
        })
        .collect()
}

/// Outcome of the bounded-budget filled Julia set test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum JuliaVerdict {
    /// Neither orbit left the bidisk within the budget (heuristic).
    InK { steps: usize },
    /// `hⁿ(p) ∈ V⁻` at `step`; `witness` is that point.
    EscapesForward { step: usize, witness: Point2 },
    /// `h⁻ⁿ(p) ∈ V⁺` beyond the backward radius at `step`.
    EscapesBackward { step: usize, witness: Point2 },
    /// Some orbit left the bidisk without certified escape.
    Undecided { budget: usize },
}

impl JuliaVerdict {
    pub fn escapes(&self) -> bool {
        matches!(self, JuliaVerdict::EscapesForward { .. } | JuliaVerdict::EscapesBackward { .. })
    }
}

impl fmt::Display for JuliaVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JuliaVerdict::InK { steps } => write!(f, "InK({steps})"),
            JuliaVerdict::EscapesForward { step, .. } => write!(f, "EscapesForward({step})"),
            JuliaVerdict::EscapesBackward { step, .. } => write!(f, "EscapesBackward({step})"),
            JuliaVerdict::Undecided { budget } => write!(f, "Undecided({budget})"),
        }
    }
}

/// Classifies `p` against `K(m)` with at most `budget` steps each way.
///
/// Forward and backward orbits advance together; the first certified entry
/// into `V⁻` (forward) or `V⁺` (backward) decides. If both certify at the
/// same step, a start in `V⁺` reports the backward escape and any other start
/// the forward one. Verdicts only depend on the first `n` steps, so a larger
/// budget never changes an escape verdict.
pub fn classify_filled_julia(m: &HenonMap, p: Point2, budget: usize, f: &Filtration) -> JuliaVerdict {
    let prefer_backward = f.classify(p) == Region::VPlus;
    let mut fwd = Some(p);
    let mut bwd = Some(p);
    let mut left = p.max_norm() > f.radius;
    for step in 1..=budget {
        fwd = fwd.and_then(|z| m.apply(z).ok());
        bwd = bwd.and_then(|z| m.apply_inverse(z).ok());
        let f_hit = fwd.filter(|z| f.certifies_forward(*z));
        let b_hit = bwd.filter(|z| f.certifies_backward(*z));
        let forward = f_hit.map(|witness| JuliaVerdict::EscapesForward { step, witness });
        let backward = b_hit.map(|witness| JuliaVerdict::EscapesBackward { step, witness });
        let verdict = if prefer_backward { backward.or(forward) } else { forward.or(backward) };
        if let Some(v) = verdict {
            return v;
        }
        left |= [fwd, bwd].iter().any(|z| z.is_none_or(|z| z.max_norm() > f.radius));
    }
    if left {
        JuliaVerdict::Undecided { budget }
    } else {
        JuliaVerdict::InK { steps: budget }
    }
}

/// How to pick points for [`disjointness_report`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PointSample {
    /// `per_axis⁴` points on a regular grid spanning the box, edges included.
    Grid { bounds: GridBox, per_axis: usize },
    /// `count` points uniform in the box.
    Random { bounds: GridBox, count: usize },
    Explicit(Vec<Point2>),
}

impl PointSample {
    pub fn points(&self, seed: u64) -> Vec<Point2> {
        match self {
            PointSample::Grid { bounds, per_axis } => {
                let k = *per_axis;
                let coord = |axis: usize, i: usize| {
                    let (c, h) = (bounds.center[axis], bounds.half_widths[axis]);
                    if k == 1 {
                        c
                    } else {
                        c - h + 2.0 * h * i as f64 / (k - 1) as f64
                    }
                };
                let mut out = Vec::with_capacity(k.pow(4));
                for a in 0..k {
                    for b in 0..k {
                        for c in 0..k {
                            for d in 0..k {
                                out.push(Point2::from_reals([coord(0, a), coord(1, b), coord(2, c), coord(3, d)]));
                            }
                        }
                    }
                }
                out
            }
            PointSample::Random { bounds, count } => (0..*count as u64)
                .map(|i| {
                    let mut rng = rng::substream(seed, &[i]);
                    Point2::from_reals(std::array::from_fn(|a| {
                        bounds.center[a] + bounds.half_widths[a] * (2.0 * unit_f64(&mut rng) - 1.0)
                    }))
                })
                .collect(),
            PointSample::Explicit(points) => points.clone(),
        }
    }
}

/// Sampled comparison of `K(m₁)` and `K(m₂)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisjointnessReport {
    pub rows: Vec<(Point2, JuliaVerdict, JuliaVerdict)>,
    /// Points that no map certifies as escaping.
    pub overlap_count: usize,
    pub total: usize,
    /// `overlap_count == 0`; sampling evidence only.
    pub disjoint: bool,
    /// Always set: the verdict is heuristic.
    pub heuristic: bool,
}

impl DisjointnessReport {
    pub const CSV_HEADER: &'static str = "x_re,x_im,y_re,y_im,verdict1,verdict2";

    pub fn verdict_label(&self) -> &'static str {
        if self.disjoint {
            "disjoint (heuristic)"
        } else {
            "overlapping"
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for (p, v1, v2) in &self.rows {
            writeln!(w, "{},{},{},{},{},{}", p.x.re, p.x.im, p.y.re, p.y.im, v1, v2)?;
        }
        Ok(())
    }
}

/// Classifies each sampled point under both maps; a point overlaps when
/// neither verdict is an escape.
pub fn disjointness_report(m1: &HenonMap, m2: &HenonMap, points: &[Point2], budget: usize) -> Result<DisjointnessReport> {
    let f1 = filtration_radius(m1, DEFAULT_GROWTH)?;
    let f2 = filtration_radius(m2, DEFAULT_GROWTH)?;
    report(points, |p| (classify_filled_julia(m1, p, budget, &f1), classify_filled_julia(m2, p, budget, &f2)))
}

/// [`disjointness_report`] for `h₁` against its rotation conjugate `h₂`.
/// Since `K(h₂) = R_θ⁻¹ K(h₁)`, the second verdict classifies `R_θ(p)` under
/// `h₁`, and its witness lives in `h₂`'s frame.
pub fn disjointness_report_rotated(g: &GroupPreset, points: &[Point2], budget: usize) -> Result<DisjointnessReport> {
    let f = g.filtration();
    report(points, |p| {
        (
            classify_filled_julia(&g.h1, p, budget, f),
            classify_filled_julia(&g.h1, g.to_h2_frame(p), budget, f),
        )
    })
}

fn report<F>(points: &[Point2], classify: F) -> Result<DisjointnessReport>
where
    F: Fn(Point2) -> (JuliaVerdict, JuliaVerdict) + Sync,
{
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    let rows: Vec<(Point2, JuliaVerdict, JuliaVerdict)> = points
        .par_iter()
        .map(|&p| {
            let (a, b) = classify(p);
            (p, a, b)
        })
        .collect();
    let overlap_count = rows.iter().filter(|(_, a, b)| !a.escapes() && !b.escapes()).count();
    Ok(DisjointnessReport {
        total: rows.len(),
        disjoint: overlap_count == 0,
        heuristic: true,
        overlap_count,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::orbit;
    use crate::henon::HenonPair;
    use num_complex::Complex64;
    use Generator::*;

    fn square() -> HenonMap {
        HenonMap::monic_power(2, 1.0).unwrap()
    }

    fn f3() -> Filtration {
        filtration_radius(&square(), 2.0).unwrap()
    }

    #[test]
    fn chain_examples() {
        let g = GroupPreset::fixture();
        let t = simulate_chain(&g, &WalkMeasure::uniform(), Point2::real(0.1, 0.2), 0, 1);
        assert_eq!(t.points, vec![Point2::real(0.1, 0.2)]);

        let eps = 1e-12;
        let nu = WalkMeasure::new([1.0 - 3.0 * eps, eps, eps, eps]).unwrap();
        let chain = simulate_chain_with_guard(&g, &nu, Point2::real(0.0, 5.0), 10, 42, 1e6);
        let direct = orbit(&g, [H1; 10], Point2::real(0.0, 5.0), 1e6);
        assert_eq!(chain, direct);
        assert_eq!(chain.escaped_at, Some(4));
    }

    #[test]
    fn chains_are_reproducible() {
        let g = GroupPreset::fixture();
        let a = simulate_chain(&g, &WalkMeasure::uniform(), Point2::real(0.5, 0.5), 300, 77);
        let b = simulate_chain(&g, &WalkMeasure::uniform(), Point2::real(0.5, 0.5), 300, 77);
        assert_eq!(a, b);
    }

    #[test]
    fn mass_escape_edge_cases() {
        let g = GroupPreset::fixture();
        let starts = [Point2::ORIGIN, Point2::real(50.0, 0.0), Point2::real(1.0, 1.0), Point2::real(0.0, 20.0)];
        let f = mass_escape(&g, &WalkMeasure::uniform(), &starts, 0, 10.0, 3, 1).unwrap();
        assert_eq!(f, vec![0.5]);
        let f = mass_escape(&g, &WalkMeasure::uniform(), &[Point2::ORIGIN], 50, 10.0, 20, 1).unwrap();
        assert_eq!(f.len(), 51);
        assert!(f.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(mass_escape(&g, &WalkMeasure::uniform(), &starts, 5, 10.0, 0, 1).is_err());
    }

    fn small_box() -> GridBox {
        GridBox::new([0.0; 4], [1.0; 4]).unwrap()
    }

    #[test]
    fn histogram_examples() {
        let p = Point2::real(0.3, -0.2);
        let t = Trajectory { points: vec![p; 7], escaped_at: None, escape_certified: false, overflowed: false };
        let h = empirical_measure(&[t], small_box(), 4).unwrap();
        assert_eq!(h.occupied().count(), 1);
        assert_eq!(h.counts[h.cell_of(p).unwrap()], 7);

        let far = Trajectory { points: vec![Point2::real(5.0, 0.0); 3], escaped_at: None, escape_certified: false, overflowed: false };
        let h = empirical_measure(&[far], small_box(), 4).unwrap();
        assert_eq!(h.escaped, h.total());

        let a = Trajectory { points: vec![Point2::real(0.1, 0.1), Point2::real(-0.6, 0.7)], escaped_at: None, escape_certified: false, overflowed: false };
        let h = empirical_measure(&[a], small_box(), 4).unwrap();
        let occ: Vec<u64> = h.occupied().map(|(_, c)| c).collect();
        assert_eq!(occ, vec![1, 1]);

        assert!(matches!(empirical_measure(&[], small_box(), 4), Err(Error::EmptyTrajectories)));
    }

    #[test]
    fn cell_geometry_round_trips() {
        let h = GridHistogram::new(small_box(), 5).unwrap();
        let mut rng = rng::stream(3);
        for cell in [0, 17, 311, 624] {
            assert_eq!(h.cell_of(h.cell_center(cell)), Some(cell));
            for _ in 0..50 {
                assert_eq!(h.cell_of(h.sample_in_cell(cell, &mut rng)), Some(cell));
            }
        }
    }

    #[test]
    fn pushforward_conserves_counts() {
        let g = GroupPreset::fixture();
        let f = g.filtration();
        let trajs: Vec<Trajectory> = (0..200)
            .map(|i| simulate_chain(&g, &WalkMeasure::uniform(), Point2::real(0.01 * i as f64, 0.3), 30, i))
            .collect();
        let h = empirical_measure(&trajs, GridBox::around_bidisk(f), 8).unwrap();
        for gen in Generator::ALL {
            let push = pushforward(&g, gen, &h, 100, 5);
            assert_eq!(push.total(), h.total());
            assert!(push.escaped >= h.escaped);
        }
        let merged = h.clone().merge(&h);
        assert_eq!(merged.total(), 2 * h.total());
        let probs = h.normalized();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn defect_of_escaped_mass_is_zero() {
        let g = GroupPreset::fixture();
        let mut h = GridHistogram::new(small_box(), 4).unwrap();
        h.add_count(Point2::real(100.0, 0.0), 10);
        assert_eq!(stationarity_defect(&g, &WalkMeasure::uniform(), &h, 10, 0), 0.0);
    }

    #[test]
    fn defect_of_point_mass_with_separated_images_is_one() {
        let g = GroupPreset::fixture();
        let h0 = GridHistogram::new(GridBox::around_bidisk(g.filtration()), DEFAULT_BINS).unwrap();
        let z = Point2::real(0.5, 0.3);
        let cell = h0.cell_of(z).unwrap();
        let center = h0.cell_center(cell);
        let targets: Vec<usize> = Generator::ALL
            .iter()
            .map(|&b| h0.cell_of(g.act(b, center).unwrap()).expect("image stays in the box"))
            .collect();
        // precondition of the hand evaluation: four distinct interior cells, none the source
        let mut uniq = targets.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 4);
        assert!(!targets.contains(&cell));

        let mut h = h0.clone();
        h.add(z);
        let d = stationarity_defect(&g, &WalkMeasure::uniform(), &h, 0, 0);
        assert!((d - 1.0).abs() < 1e-12, "defect {d}");
    }

    #[test]
    fn defect_of_escaping_chain_is_positive() {
        let g = GroupPreset::fixture();
        let trajs: Vec<Trajectory> =
            (0..50).map(|i| simulate_chain(&g, &WalkMeasure::uniform(), Point2::real(1.0, 1.5), 100, i)).collect();
        let h = empirical_measure(&trajs, GridBox::around_bidisk(g.filtration()), 8).unwrap();
        assert!(stationarity_defect(&g, &WalkMeasure::uniform(), &h, 200, 1) > 0.0);
    }

    #[test]
    fn word_average_examples() {
        let g = GroupPreset::fixture();
        let cp = CollarParams::new(&g, 10.0, 0.2).unwrap();
        let samples: Vec<(Point2, f64)> = (0..300)
            .map(|i| {
                let t = i as f64 * 0.1;
                (Point2::real(20.0 * t.cos(), 15.0 * t.sin()), 1.0 + (i % 3) as f64)
            })
            .collect();
        let nu = WalkMeasure::uniform();
        let w0 = word_average_mass(&g, &nu, &samples, &cp, 0).unwrap();
        assert_eq!(w0.lhs, w0.rhs);
        assert_eq!(w0.gap, 0.0);
        assert_eq!(w0.terms, 1);
        assert_eq!(word_average_mass(&g, &nu, &samples, &cp, 1).unwrap().terms, 4);
        assert_eq!(word_average_mass(&g, &nu, &samples, &cp, 2).unwrap().terms, 12);
        let skewed = WalkMeasure::new([0.4, 0.2, 0.2, 0.2]).unwrap();
        assert!(matches!(word_average_mass(&g, &skewed, &samples, &cp, 1), Err(Error::AsymmetricWeights(_))));
        assert!(word_average_mass(&g, &nu, &samples, &cp, 9).is_err());
    }

    #[test]
    fn test_function_registry() {
        assert_eq!("one".parse::<TestFunction>().unwrap(), TestFunction::Constant);
        assert_eq!("ball:10".parse::<TestFunction>().unwrap(), TestFunction::BallIndicator { radius: 10.0 });
        assert_eq!("norm-clamp:5".parse::<TestFunction>().unwrap(), TestFunction::NormClamp { cap: 5.0 });
        for bad in ["sin", "ball", "ball:-1", "ball:x", ""] {
            assert!(bad.parse::<TestFunction>().is_err(), "{bad}");
        }
        let f = TestFunction::BallIndicator { radius: 2.5 };
        assert_eq!(f.to_string().parse::<TestFunction>().unwrap(), f);
    }

    #[test]
    fn ergodic_average_examples() {
        let g = GroupPreset::fixture();
        let nu = WalkMeasure::uniform();
        let ones = ergodic_average(&g, &nu, TestFunction::Constant, Point2::real(0.2, 0.1), 100, 3);
        assert!(ones.iter().all(|&v| v == 1.0));

        let start = Point2::real(0.2, 0.1);
        let ball = TestFunction::BallIndicator { radius: 0.5 };
        let one_step = ergodic_average(&g, &nu, ball, start, 1, 9);
        let first = simulate_chain(&g, &nu, start, 1, 9);
        assert_eq!(one_step, vec![ball.eval(Some(first.points[1]))]);
    }

    #[test]
    fn filled_julia_examples() {
        let m = square();
        let f = f3();
        assert_eq!(classify_filled_julia(&m, Point2::ORIGIN, 50, &f), JuliaVerdict::InK { steps: 50 });
        assert!(matches!(
            classify_filled_julia(&m, Point2::real(0.0, 5.0), 50, &f),
            JuliaVerdict::EscapesForward { step: 1, .. }
        ));
        match classify_filled_julia(&m, Point2::real(5.0, 0.0), 50, &f) {
            JuliaVerdict::EscapesBackward { step: 1, witness } => assert_eq!(witness, Point2::real(25.0, 5.0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn escape_certificates_are_sound() {
        let m = HenonMap::new(
            vec![Complex64::new(0.3, -0.2), Complex64::new(0.0, 0.5), Complex64::new(1.0, 0.2)],
            Complex64::new(0.6, 0.0),
        )
        .unwrap();
        let f = filtration_radius(&m, 2.0).unwrap();
        let pts = PointSample::Random { bounds: GridBox::new([0.0; 4], [4.0; 4]).unwrap(), count: 2000 }.points(8);
        let mut checked = 0;
        for p in pts {
            match classify_filled_julia(&m, p, 40, &f) {
                JuliaVerdict::EscapesForward { witness, .. } => {
                    let mut z = witness;
                    for _ in 0..10 {
                        let Ok(next) = m.apply(z) else { break };
                        assert!(next.y.norm() >= 2.0 * z.y.norm());
                        z = next;
                    }
                    checked += 1;
                }
                JuliaVerdict::EscapesBackward { witness, .. } => {
                    let mut z = witness;
                    for _ in 0..10 {
                        let Ok(next) = m.apply_inverse(z) else { break };
                        assert!(next.x.norm() >= 2.0 * z.x.norm());
                        z = next;
                    }
                    checked += 1;
                }
                _ => {}
            }
        }
        assert!(checked > 1000);
    }

    #[test]
    fn larger_budget_keeps_escape_verdicts() {
        let m = square();
        let f = f3();
        let pts = PointSample::Random { bounds: GridBox::new([0.0; 4], [2.0; 4]).unwrap(), count: 3000 }.points(2);
        for p in pts {
            let small = classify_filled_julia(&m, p, 5, &f);
            let large = classify_filled_julia(&m, p, 40, &f);
            if small.escapes() {
                assert_eq!(small, large);
            }
        }
    }

    #[test]
    fn disjointness_examples() {
        let m1 = square();
        let bounds = GridBox::new([0.0; 4], [1.0; 4]).unwrap();
        let pts = PointSample::Grid { bounds, per_axis: 5 }.points(0);
        assert!(pts.contains(&Point2::ORIGIN));
        let same = disjointness_report(&m1, &m1, &pts, 30).unwrap();
        assert!(same.overlap_count > 0);
        assert!(!same.disjoint);
        assert!(same.heuristic);

        let m2 = m1.translated(Complex64::new(100.0, 100.0));
        let mut pts2 = pts.clone();
        pts2.extend(
            PointSample::Grid { bounds: GridBox::new([100.0, 0.0, 100.0, 0.0], [1.0; 4]).unwrap(), per_axis: 5 }.points(0),
        );
        let apart = disjointness_report(&m1, &m2, &pts2, 30).unwrap();
        assert_eq!(apart.overlap_count, 0);
        assert!(apart.disjoint);
        assert_eq!(apart.verdict_label(), "disjoint (heuristic)");

        assert!(matches!(disjointness_report(&m1, &m2, &[], 10), Err(Error::EmptySample)));
    }

    #[test]
    fn rotated_report_matches_explicit_frame_change() {
        let g = GroupPreset::fixture();
        let pts = PointSample::Random { bounds: GridBox::new([0.0; 4], [2.0; 4]).unwrap(), count: 500 }.points(4);
        let r = disjointness_report_rotated(&g, &pts, 20).unwrap();
        for (p, v1, v2) in &r.rows {
            assert_eq!(*v1, classify_filled_julia(&g.h1, *p, 20, g.filtration()));
            let q = crate::geometry::rotate(g.theta, *p);
            assert_eq!(v2.to_string(), classify_filled_julia(&g.h1, q, 20, g.filtration()).to_string());
        }
        // the origin is fixed by both maps
        let r = disjointness_report_rotated(&g, &[Point2::ORIGIN], 20).unwrap();
        assert_eq!(r.overlap_count, 1);
    }

    #[test]
    fn pair_group_chains_run() {
        let m1 = square();
        let pair = HenonPair::new(m1.clone(), m1.translated(Complex64::new(100.0, 100.0)));
        let f = mass_escape(&pair, &WalkMeasure::uniform(), &[Point2::ORIGIN], 100, 10.0, 50, 3).unwrap();
        assert_eq!(f[0], 1.0);
        assert!(f[100] < 0.5);
    }
}
