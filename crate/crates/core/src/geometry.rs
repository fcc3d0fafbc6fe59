//! Complex 2-vectors, projective points, rotations and the chordal metric on
//! directions at infinity.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Complex zero with a positive sign bit on both parts.
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Slack allowed on non-pivot coordinates when recognising an already
/// canonical tuple. Division by the pivot can overshoot modulus 1 by a few ulps.
const CANONICAL_SLACK: f64 = 1e-12;

/// A point of ℂ².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: Complex64,
    pub y: Complex64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: ZERO, y: ZERO };

    pub fn new(x: Complex64, y: Complex64) -> Self {
        Point2 { x, y }
    }

    /// Point with real coordinates.
    pub fn real(x: f64, y: f64) -> Self {
        Point2::new(Complex64::new(x, 0.0), Complex64::new(y, 0.0))
    }

    /// Builds a point from its four real coordinates `(Re x, Im x, Re y, Im y)`.
    pub fn from_reals(c: [f64; 4]) -> Self {
        Point2::new(Complex64::new(c[0], c[1]), Complex64::new(c[2], c[3]))
    }

    pub fn to_reals(self) -> [f64; 4] {
        [self.x.re, self.x.im, self.y.re, self.y.im]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x.norm_sqr() + self.y.norm_sqr()
    }

    /// Hermitian norm on ℂ² ≅ ℝ⁴.
    pub fn norm(&self) -> f64 {
        self.x.norm().hypot(self.y.norm())
    }

    /// Max-norm `max(|x|, |y|)`, the norm of the filtration bidisks.
    pub fn max_norm(&self) -> f64 {
        self.x.norm().max(self.y.norm())
    }

    pub fn scale(self, s: f64) -> Self {
        Point2::new(self.x * s, self.y * s)
    }

    pub fn sub(self, other: Point2) -> Self {
        Point2::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(self, other: Point2) -> Self {
        Point2::new(self.x + other.x, self.y + other.y)
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Applies the real rotation matrix `[[cos θ, −sin θ], [sin θ, cos θ]]`.
pub fn rotate(theta: f64, p: Point2) -> Point2 {
    let (s, c) = theta.sin_cos();
    Point2::new(p.x * c - p.y * s, p.x * s + p.y * c)
}

/// Index of the pivot coordinate: largest modulus, ties to the lowest index.
fn pivot_index(moduli: &[f64]) -> usize {
    let mut best = 0;
    for (i, &m) in moduli.iter().enumerate().skip(1) {
        if m > moduli[best] {
            best = i;
        }
    }
    best
}

/// Scales a homogeneous tuple so its pivot coordinate is exactly `1`.
///
/// A tuple that already has an exact `1` somewhere and no coordinate with
/// modulus noticeably above `1` is returned untouched, which makes the
/// normalisation idempotent bit-for-bit.
fn canonicalize<const N: usize>(mut c: [Complex64; N]) -> Option<[Complex64; N]> {
    let moduli: Vec<f64> = c.iter().map(|z| z.norm()).collect();
    if moduli.iter().any(|m| !m.is_finite()) {
        return None;
    }
    let already = c.contains(&ONE) && moduli.iter().all(|&m| m <= 1.0 + CANONICAL_SLACK);
    if already {
        return Some(c);
    }
    let k = pivot_index(&moduli);
    if moduli[k] == 0.0 {
        return None;
    }
    let pivot = c[k];
    for (i, z) in c.iter_mut().enumerate() {
        *z = if i == k { ONE } else { *z / pivot };
        // drop negative zeros so bitwise comparisons are stable
        *z = Complex64::new(z.re + 0.0, z.im + 0.0);
    }
    Some(c)
}

/// A point `[x0 : x1 : x2]` of ℂℙ² in canonical normalisation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjPoint {
    coords: [Complex64; 3],
}

impl ProjPoint {
    pub fn new(x0: Complex64, x1: Complex64, x2: Complex64) -> Result<Self> {
        canonicalize([x0, x1, x2])
            .map(|coords| ProjPoint { coords })
            .ok_or(Error::DegenerateProjective)
    }

    pub fn real(x0: f64, x1: f64, x2: f64) -> Result<Self> {
        Self::new(x0.into(), x1.into(), x2.into())
    }

    /// The affine point `(x, y)` as `[x : y : 1]`.
    pub fn from_affine(p: Point2) -> Result<Self> {
        Self::new(p.x, p.y, ONE)
    }

    pub fn coords(&self) -> [Complex64; 3] {
        self.coords
    }

    /// Returns `(x0/x2, x1/x2)` unless the point lies on the line at infinity.
    pub fn to_affine(&self) -> Option<Point2> {
        let [x0, x1, x2] = self.coords;
        if x2 == ZERO {
            None
        } else {
            Some(Point2::new(x0 / x2, x1 / x2))
        }
    }

    pub fn is_at_infinity(&self) -> bool {
        self.coords[2] == ZERO
    }

    /// Re-applies the canonical normalisation.
    pub fn normalized(&self) -> Self {
        // canonical input is a fixed point of canonicalize
        let coords = canonicalize(self.coords).expect("valid projective point");
        ProjPoint { coords }
    }
}

impl fmt::Display for ProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.coords;
        write!(f, "[{a} : {b} : {c}]")
    }
}

/// A point `[a : b]` of ℂℙ¹, i.e. a direction of complex lines through the
/// origin, equivalently a point of the line at infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    coords: [Complex64; 2],
}

impl Direction {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        canonicalize([a, b])
            .map(|coords| Direction { coords })
            .ok_or(Error::DegenerateProjective)
    }

    pub fn real(a: f64, b: f64) -> Result<Self> {
        Self::new(a.into(), b.into())
    }

    pub fn a(&self) -> Complex64 {
        self.coords[0]
    }

    pub fn b(&self) -> Complex64 {
        self.coords[1]
    }

    /// A representative of unit Hermitian norm.
    pub fn unit_vector(&self) -> Point2 {
        let p = Point2::new(self.coords[0], self.coords[1]);
        p.scale(1.0 / p.norm())
    }

    pub fn normalized(&self) -> Self {
        let coords = canonicalize(self.coords).expect("valid direction");
        Direction { coords }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} : {}]", self.coords[0], self.coords[1])
    }
}

/// Chordal distance `|ad − bc| / (‖(a,b)‖·‖(c,d)‖)` between `[a:b]` and `[c:d]`.
///
/// Equals the sine of the angle between the two complex lines, so it lies in
/// `[0, 1]` and vanishes exactly on projectively equal directions.
pub fn chordal_distance(u: &Direction, v: &Direction) -> f64 {
    let (a, b) = (u.a(), u.b());
    let (c, d) = (v.a(), v.b());
    let num = (a * d - b * c).norm();
    let den = a.norm().hypot(b.norm()) * c.norm().hypot(d.norm());
    (num / den).min(1.0)
}

/// The class `[x : y]` on the line at infinity of a nonzero affine point.
pub fn direction_of(p: Point2) -> Result<Direction> {
    if p.x == ZERO && p.y == ZERO {
        return Err(Error::OriginHasNoDirection);
    }
    Direction::new(p.x, p.y)
}

/// Chordal distance from the direction of `p` to `axis`, skipping the
/// canonicalisation of `p`. The origin is reported at distance 1.
pub(crate) fn chordal_to(p: Point2, axis: &Direction) -> f64 {
    let n = p.norm();
    if n == 0.0 || !n.is_finite() {
        return 1.0;
    }
    let (c, d) = (axis.a(), axis.b());
    let num = (p.x * d - p.y * c).norm();
    (num / (n * c.norm().hypot(d.norm()))).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_point(rng: &mut ChaCha8Rng, scale: f64) -> Point2 {
        Point2::from_reals(std::array::from_fn(|_| rng.random_range(-scale..scale)))
    }

    #[test]
    fn rotate_examples() {
        let p = rotate(FRAC_PI_4, Point2::real(1.0, 0.0));
        assert_relative_eq!(p.x.re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(p.y.re, FRAC_1_SQRT_2, epsilon = 1e-15);

        let q = Point2::new(c(3.0, 1.0), c(2.0, 0.0));
        assert_eq!(rotate(0.0, q), q);

        let p = rotate(FRAC_PI_4, Point2::real(0.0, 1.0));
        assert_relative_eq!(p.x.re, -FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(p.y.re, FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn rotation_preserves_norm_and_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let p = random_point(&mut rng, 100.0);
            let theta = rng.random_range(-10.0..10.0);
            let r = rotate(theta, p);
            assert!((r.norm() - p.norm()).abs() <= 1e-12 * p.norm());
            let back = rotate(-theta, r);
            assert!(back.sub(p).norm() <= 1e-12 * p.norm());
        }
    }

    #[test]
    fn chordal_examples() {
        let e1 = Direction::real(1.0, 0.0).unwrap();
        let e2 = Direction::real(0.0, 1.0).unwrap();
        let diag = Direction::real(1.0, 1.0).unwrap();
        assert_eq!(chordal_distance(&e1, &e2), 1.0);
        assert_eq!(chordal_distance(&diag, &diag), 0.0);
        assert_relative_eq!(chordal_distance(&diag, &e1), FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn chordal_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let dir = |rng: &mut ChaCha8Rng| {
            let p = random_point(rng, 1.0);
            direction_of(p).unwrap()
        };
        for _ in 0..10_000 {
            let (u, v, w) = (dir(&mut rng), dir(&mut rng), dir(&mut rng));
            let (uv, vw, uw) = (
                chordal_distance(&u, &v),
                chordal_distance(&v, &w),
                chordal_distance(&u, &w),
            );
            assert!(uw <= uv + vw + 1e-12);
            assert_eq!(uv, chordal_distance(&v, &u));
        }
    }

    #[test]
    fn direction_examples() {
        assert_eq!(direction_of(Point2::real(5.0, 0.0)).unwrap(), Direction::real(1.0, 0.0).unwrap());
        assert_eq!(
            direction_of(Point2::new(c(0.0, 0.0), c(0.0, 3.0))).unwrap(),
            Direction::real(0.0, 1.0).unwrap()
        );
        assert_eq!(direction_of(Point2::real(2.0, 2.0)).unwrap(), Direction::real(1.0, 1.0).unwrap());
        assert!(matches!(direction_of(Point2::ORIGIN), Err(Error::OriginHasNoDirection)));
    }

    #[test]
    fn canonical_ties_break_to_lowest_index() {
        let p = ProjPoint::new(c(0.0, 2.0), c(2.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(p.coords()[0], ONE);
        assert!(ProjPoint::real(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn normalization_is_idempotent_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10_000 {
            let q = random_point(&mut rng, 1e3);
            let z = c(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let p = ProjPoint::new(q.x, q.y, z).unwrap();
            let again = p.normalized();
            for (a, b) in p.coords().iter().zip(again.coords()) {
                assert_eq!(a.re.to_bits(), b.re.to_bits());
                assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
            let d = direction_of(q).unwrap();
            assert_eq!(d.normalized(), d);
        }
    }
}
