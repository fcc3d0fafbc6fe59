//! Generalized Hénon maps `h(x, y) = (y, P(y) − δx)`, their inverses and
//! projective extensions, the rotation preset `(h₁, θ)` and the escape
//! filtration `V ∪ V⁺ ∪ V⁻`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::{chordal_distance, rotate, Direction, Point2, ProjPoint};
use crate::group::Generator;
use crate::{Error, Result};

/// Modulus below which all three projective image coordinates count as zero.
pub const INDETERMINACY_TOLERANCE: f64 = 1e-14;

/// Minimal pairwise chordal distance for indeterminacy directions to count as
/// distinct.
pub const DISTINCTNESS_TOLERANCE: f64 = 1e-9;

/// Default filtration growth factor, matching norm doubling.
pub const DEFAULT_GROWTH: f64 = 2.0;

const RADIUS_TOLERANCE: f64 = 1e-10;

/// `h(x, y) = (y, P(y) − δx)` with `deg P ≥ 2` and `δ ≠ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct HenonMap {
    coeffs: Vec<Complex64>,
    delta: Complex64,
}

/// Image of a point under the projective extension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProjImage {
    Point(ProjPoint),
    Indeterminate,
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn finite_or_overflow(p: Point2) -> Result<Point2> {
    if p.is_finite() {
        Ok(p)
    } else {
        Err(Error::EscapeOverflow)
    }
}

impl HenonMap {
    /// `coeffs` are `p₀, …, p_d` from low to high degree.
    pub fn new(coeffs: Vec<Complex64>, delta: Complex64) -> Result<Self> {
        if coeffs.len() < 3 {
            return Err(Error::InvalidMap(format!(
                "degree must be at least 2, got {} coefficient(s)",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) || !delta.is_finite() {
            return Err(Error::InvalidMap("non-finite coefficient".into()));
        }
        if *coeffs.last().unwrap() == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidMap("leading coefficient is zero".into()));
        }
        if delta == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidMap("delta must be nonzero".into()));
        }
        Ok(HenonMap { coeffs, delta })
    }

    /// `P(y) = y^d` with real `δ`.
    pub fn monic_power(degree: usize, delta: f64) -> Result<Self> {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); degree + 1];
        if let Some(last) = coeffs.last_mut() {
            *last = Complex64::new(1.0, 0.0);
        }
        Self::new(coeffs, Complex64::new(delta, 0.0))
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn delta(&self) -> Complex64 {
        self.delta
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `P(z)` by Horner's rule.
    pub fn poly(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs, z)
    }

    pub fn apply(&self, p: Point2) -> Result<Point2> {
        finite_or_overflow(Point2::new(p.y, self.poly(p.y) - self.delta * p.x))
    }

    /// `h⁻¹(x, y) = ((P(x) − y)/δ, x)`.
    pub fn apply_inverse(&self, p: Point2) -> Result<Point2> {
        finite_or_overflow(Point2::new((self.poly(p.x) - p.y) / self.delta, p.x))
    }

    /// `P̃(x₁, x₂) = Σ pᵢ x₁ⁱ x₂^{d−i}`.
    fn homogenized(&self, x1: Complex64, x2: Complex64) -> Complex64 {
        let d = self.degree();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut x1_pow = Complex64::new(1.0, 0.0);
        for (i, &c) in self.coeffs.iter().enumerate() {
            acc += c * x1_pow * x2.powu((d - i) as u32);
            x1_pow *= x1;
        }
        acc
    }

    /// `[x₀ : x₁ : x₂] ↦ [x₁x₂^{d−1} : P̃(x₁, x₂) − δx₀x₂^{d−1} : x₂^d]`.
    pub fn apply_projective(&self, p: &ProjPoint) -> ProjImage {
        let [x0, x1, x2] = p.coords();
        let d = self.degree() as u32;
        let x2_pow = x2.powu(d - 1);
        let out = [
            x1 * x2_pow,
            self.homogenized(x1, x2) - self.delta * x0 * x2_pow,
            x2_pow * x2,
        ];
        if out.iter().all(|z| z.norm() < INDETERMINACY_TOLERANCE) {
            return ProjImage::Indeterminate;
        }
        match ProjPoint::new(out[0], out[1], out[2]) {
            Ok(q) => ProjImage::Point(q),
            Err(_) => ProjImage::Indeterminate,
        }
    }

    /// The Hénon map `σ ∘ h⁻¹ ∘ σ` with `σ(x, y) = (y, x)`, namely
    /// `(x, y) ↦ (y, P(y)/δ − x/δ)`. Its forward filtration is the backward
    /// filtration of `h` with coordinates swapped.
    pub fn inverse_normal_form(&self) -> HenonMap {
        let coeffs = self.coeffs.iter().map(|c| c / self.delta).collect();
        HenonMap {
            coeffs,
            delta: 1.0 / self.delta,
        }
    }

    /// Conjugate `T ∘ h ∘ T⁻¹` by the translation `T(x, y) = (x + c, y + c)`.
    ///
    /// The result is again a Hénon map, with polynomial
    /// `Q(y) = P(y − c) + (1 + δ)c`, and its filled Julia set is the translate
    /// of this map's by `(c, c)`.
    pub fn translated(&self, c: Complex64) -> HenonMap {
        // Horner over polynomials: Q = (((p_d)(y − c) + p_{d−1})(y − c) + …)
        let mut q: Vec<Complex64> = Vec::with_capacity(self.coeffs.len());
        for &coef in self.coeffs.iter().rev() {
            let mut next = vec![Complex64::new(0.0, 0.0); q.len() + 1];
            for (i, &a) in q.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= a * c;
            }
            next[0] += coef;
            q = next;
        }
        q[0] += (1.0 + self.delta) * c;
        HenonMap {
            coeffs: q,
            delta: self.delta,
        }
    }
}

/// Wire format of a single map: `{"coeffs": [[re, im], ...], "delta": [re, im]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub coeffs: Vec<[f64; 2]>,
    pub delta: [f64; 2],
}

/// Wire format of a rotation preset: a [`MapSpec`] plus `"theta"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetSpec {
    pub coeffs: Vec<[f64; 2]>,
    pub delta: [f64; 2],
    pub theta: f64,
}

impl MapSpec {
    pub fn build(&self) -> Result<HenonMap> {
        let coeffs = self.coeffs.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        HenonMap::new(coeffs, Complex64::new(self.delta[0], self.delta[1]))
    }

    pub fn from_map(m: &HenonMap) -> Self {
        MapSpec {
            coeffs: m.coeffs.iter().map(|c| [c.re, c.im]).collect(),
            delta: [m.delta.re, m.delta.im],
        }
    }
}

impl PresetSpec {
    pub fn parse(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn build(&self) -> Result<GroupPreset> {
        let map = MapSpec {
            coeffs: self.coeffs.clone(),
            delta: self.delta,
        }
        .build()?;
        GroupPreset::new(map, self.theta)
    }

    pub fn from_preset(g: &GroupPreset) -> Self {
        let m = MapSpec::from_map(&g.h1);
        PresetSpec {
            coeffs: m.coeffs,
            delta: m.delta,
            theta: g.theta,
        }
    }
}

/// The three filtration regions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// The bidisk `max(|x|, |y|) ≤ R`.
    V,
    /// `|x| > R`, `|x| > |y|`: the backward escape region.
    VPlus,
    /// `|y| > R`, `|y| ≥ |x|`: forward invariant, forward escape region.
    VMinus,
}

/// Bidisk filtration of a Hénon map.
///
/// `radius` is the least `R` with
/// `|p_d|t^d − Σ_{i<d}|p_i|t^i − |δ|t ≥ λt` for all `t ≥ R`, which makes
/// `V⁻` forward invariant with `|y|` growing by at least `λ` per step.
/// `backward_radius` is the same threshold for the inverse map,
/// `|p_d|t^d − Σ_{i<d}|p_i|t^i − t ≥ λ|δ|t`, which governs growth of `|x|`
/// under `h⁻¹` on `V⁺`. The two agree when `|δ| = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Filtration {
    pub radius: f64,
    pub backward_radius: f64,
    pub lambda: f64,
}

/// Least positive `t` beyond which
/// `lead·t^d − Σ lower[i]·t^i − linear·t ≥ 0`.
///
/// All non-leading coefficients are nonpositive and the linear one is strictly
/// negative, so Descartes' rule gives exactly one positive root; the
/// polynomial is negative before it and nonnegative after.
fn growth_threshold(lead: f64, lower: &[f64], linear: f64) -> f64 {
    let f = |t: f64| {
        let mut acc = lead;
        for i in (0..lower.len()).rev() {
            let mut c = -lower[i];
            if i == 1 {
                c -= linear;
            }
            acc = acc * t + c;
        }
        acc
    };
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = if hi == 1.0 { 0.0 } else { hi / 2.0 };
    while hi - lo > RADIUS_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Computes the forward and backward filtration radii for growth factor `lambda`.
pub fn filtration_radius(m: &HenonMap, lambda: f64) -> Result<Filtration> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::NegativeGrowth(lambda));
    }
    let d = m.degree();
    let lead = m.coeffs[d].norm();
    let lower: Vec<f64> = m.coeffs[..d].iter().map(|c| c.norm()).collect();
    let abs_delta = m.delta.norm();
    Ok(Filtration {
        radius: growth_threshold(lead, &lower, abs_delta + lambda),
        backward_radius: growth_threshold(lead, &lower, 1.0 + lambda * abs_delta),
        lambda,
    })
}

impl Filtration {
    pub fn for_map(m: &HenonMap, lambda: f64) -> Result<Self> {
        filtration_radius(m, lambda)
    }

    /// Total classification; the tie `|x| = |y| > R` belongs to `V⁻`.
    pub fn classify(&self, p: Point2) -> Region {
        classify_region(self, p)
    }

    /// `p ∈ V⁻`: the forward orbit escapes with `|y|` growing by `λ` per step.
    pub fn certifies_forward(&self, p: Point2) -> bool {
        self.classify(p) == Region::VMinus
    }

    /// `p ∈ V⁺` beyond the backward radius: the backward orbit escapes with
    /// `|x|` growing by `λ` per step.
    pub fn certifies_backward(&self, p: Point2) -> bool {
        self.classify(p) == Region::VPlus && p.x.norm() > self.backward_radius
    }

    /// Larger of the two radii; the bidisk that contains the filled Julia set.
    pub fn outer_radius(&self) -> f64 {
        self.radius.max(self.backward_radius)
    }
}

pub fn classify_region(f: &Filtration, p: Point2) -> Region {
    let (ax, ay) = (p.x.norm(), p.y.norm());
    if ax.max(ay) <= f.radius {
        Region::V
    } else if ay >= ax {
        Region::VMinus
    } else {
        Region::VPlus
    }
}

/// The indeterminacy directions `p = [1:0]`, `q = [0:1]`,
/// `p̃ = [cos θ : −sin θ]`, `q̃ = [sin θ : cos θ]` on the line at infinity, and
/// whether they are pairwise distinct.
pub fn indeterminacy_set(theta: f64) -> ([Direction; 4], bool) {
    // a non-finite angle reports the θ = 0 directions, flagged as not distinct
    let (s, c) = if theta.is_finite() { theta.sin_cos() } else { (0.0, 1.0) };
    let dirs = [
        Direction::real(1.0, 0.0).unwrap(),
        Direction::real(0.0, 1.0).unwrap(),
        Direction::real(c, -s).unwrap(),
        Direction::real(s, c).unwrap(),
    ];
    let distinct = theta.is_finite()
        && (0..4).all(|i| {
            (i + 1..4).all(|j| chordal_distance(&dirs[i], &dirs[j]) > DISTINCTNESS_TOLERANCE)
        });
    (dirs, distinct)
}

/// Anything that lets the four letters act on ℂ² and can certify escape.
pub trait GroupAction: Sync {
    fn act(&self, g: Generator, p: Point2) -> Result<Point2>;

    /// Whether `p` lies in the outgoing invariant region of `g`, so that
    /// iterating `g` from `p` escapes with norm growth.
    fn escape_certified(&self, g: Generator, p: Point2) -> bool;
}

/// `G = ⟨h₁, h₂ = R_θ⁻¹ ∘ h₁ ∘ R_θ⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupPreset {
    pub h1: HenonMap,
    pub theta: f64,
    filtration: Filtration,
    directions: [Direction; 4],
}

impl GroupPreset {
    /// Requires `θ ∈ (0, 2π)` with the four indeterminacy directions distinct,
    /// which excludes `π/2`, `π` and `3π/2`.
    pub fn new(h1: HenonMap, theta: f64) -> Result<Self> {
        Self::with_growth(h1, theta, DEFAULT_GROWTH)
    }

    pub fn with_growth(h1: HenonMap, theta: f64, lambda: f64) -> Result<Self> {
        let (directions, distinct) = indeterminacy_set(theta);
        if !(theta > 0.0 && theta < std::f64::consts::TAU) || !distinct {
            return Err(Error::InvalidAngle(theta));
        }
        let filtration = filtration_radius(&h1, lambda)?;
        Ok(GroupPreset {
            h1,
            theta,
            filtration,
            directions,
        })
    }

    /// `P(y) = y²`, `δ = 1`, `θ = π/4`.
    pub fn fixture() -> Self {
        GroupPreset::new(HenonMap::monic_power(2, 1.0).unwrap(), std::f64::consts::FRAC_PI_4).unwrap()
    }

    pub fn filtration(&self) -> &Filtration {
        &self.filtration
    }

    /// `[p, q, p̃, q̃]`.
    pub fn directions(&self) -> &[Direction; 4] {
        &self.directions
    }

    /// Smallest pairwise chordal distance between the four directions.
    pub fn min_separation(&self) -> f64 {
        let d = &self.directions;
        let mut best = f64::INFINITY;
        for i in 0..4 {
            for j in i + 1..4 {
                best = best.min(chordal_distance(&d[i], &d[j]));
            }
        }
        best
    }

    /// Attracting direction at infinity of `g`: `h₁ ↦ q`, `h₁⁻¹ ↦ p`,
    /// `h₂ ↦ q̃`, `h₂⁻¹ ↦ p̃`.
    pub fn attracting_direction(&self, g: Generator) -> Direction {
        match g {
            Generator::H1 => self.directions[1],
            Generator::H1Inv => self.directions[0],
            Generator::H2 => self.directions[3],
            Generator::H2Inv => self.directions[2],
        }
    }

    /// Point expressed in `h₂`'s frame, where it acts as `h₁`.
    pub fn to_h2_frame(&self, p: Point2) -> Point2 {
        rotate(self.theta, p)
    }

    pub fn apply_h2(&self, p: Point2) -> Result<Point2> {
        Ok(rotate(-self.theta, self.h1.apply(rotate(self.theta, p))?))
    }

    pub fn apply_h2_inverse(&self, p: Point2) -> Result<Point2> {
        Ok(rotate(-self.theta, self.h1.apply_inverse(rotate(self.theta, p))?))
    }
}

impl GroupAction for GroupPreset {
    fn act(&self, g: Generator, p: Point2) -> Result<Point2> {
        match g {
            Generator::H1 => self.h1.apply(p),
            Generator::H1Inv => self.h1.apply_inverse(p),
            Generator::H2 => self.apply_h2(p),
            Generator::H2Inv => self.apply_h2_inverse(p),
        }
    }

    fn escape_certified(&self, g: Generator, p: Point2) -> bool {
        let f = &self.filtration;
        match g {
            Generator::H1 => f.certifies_forward(p),
            Generator::H1Inv => f.certifies_backward(p),
            Generator::H2 => f.certifies_forward(self.to_h2_frame(p)),
            Generator::H2Inv => f.certifies_backward(self.to_h2_frame(p)),
        }
    }
}

/// Two arbitrary Hénon maps acting as `h₁` and `h₂`, each in its own frame.
#[derive(Clone, Debug, PartialEq)]
pub struct HenonPair {
    pub h1: HenonMap,
    pub h2: HenonMap,
    f1: Filtration,
    f2: Filtration,
}

impl HenonPair {
    pub fn new(h1: HenonMap, h2: HenonMap) -> Self {
        let f1 = filtration_radius(&h1, DEFAULT_GROWTH).expect("default growth is valid");
        let f2 = filtration_radius(&h2, DEFAULT_GROWTH).expect("default growth is valid");
        HenonPair { h1, h2, f1, f2 }
    }

    pub fn filtrations(&self) -> (&Filtration, &Filtration) {
        (&self.f1, &self.f2)
    }
}

impl GroupAction for HenonPair {
    fn act(&self, g: Generator, p: Point2) -> Result<Point2> {
        match g {
            Generator::H1 => self.h1.apply(p),
            Generator::H1Inv => self.h1.apply_inverse(p),
            Generator::H2 => self.h2.apply(p),
            Generator::H2Inv => self.h2.apply_inverse(p),
        }
    }

    fn escape_certified(&self, g: Generator, p: Point2) -> bool {
        match g {
            Generator::H1 => self.f1.certifies_forward(p),
            Generator::H1Inv => self.f1.certifies_backward(p),
            Generator::H2 => self.f2.certifies_forward(p),
            Generator::H2Inv => self.f2.certifies_backward(p),
        }
    }
}
