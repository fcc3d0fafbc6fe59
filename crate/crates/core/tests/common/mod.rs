#![allow(dead_code)]

use henon_lab::dynamics::{build_collar, build_cone_system, CollarParams, ConeSearch, ConeSystem};
use henon_lab::rng::{self, unit_f64, Stream};
use henon_lab::{Complex64, GroupPreset, HenonMap, Point2};

pub fn complex_in_disc(rng: &mut Stream, r: f64) -> Complex64 {
    Complex64::from_polar(r * unit_f64(rng).sqrt(), std::f64::consts::TAU * unit_f64(rng))
}

pub fn point_in_bidisk(rng: &mut Stream, r: f64) -> Point2 {
    Point2::new(complex_in_disc(rng, r), complex_in_disc(rng, r))
}

/// Degree 2 or 3, coefficients of modulus at most 2 with a leading one of
/// modulus at least ½, `|δ| ∈ [0.1, 2]`.
pub fn random_map(rng: &mut Stream) -> HenonMap {
    let d = 2 + (unit_f64(rng) < 0.5) as usize;
    let mut coeffs: Vec<Complex64> = (0..=d).map(|_| complex_in_disc(rng, 2.0)).collect();
    let lead = Complex64::from_polar(0.5 + 1.5 * unit_f64(rng), std::f64::consts::TAU * unit_f64(rng));
    coeffs[d] = lead;
    let delta = Complex64::from_polar(0.1 + 1.9 * unit_f64(rng), std::f64::consts::TAU * unit_f64(rng));
    HenonMap::new(coeffs, delta).unwrap()
}

pub fn random_maps(seed: u64, n: usize) -> Vec<HenonMap> {
    let mut rng = rng::stream(seed);
    (0..n).map(|_| random_map(&mut rng)).collect()
}

/// Cone system and collar of a preset, from the default searches.
pub fn systems(g: &GroupPreset) -> (ConeSystem, CollarParams) {
    let cs = build_cone_system(g, &ConeSearch::default()).expect("cone system");
    let cp = build_collar(g, &cs, 0.25 * g.min_separation(), 1000, 0, 1e8).expect("collar");
    (cs, cp)
}

pub fn collar_starts(g: &GroupPreset, cp: &CollarParams, n: usize, seed: u64) -> Vec<Point2> {
    (0..n as u64).map(|i| cp.sample(g, &mut rng::substream(seed, &[i]))).collect()
}

pub fn presets() -> Vec<GroupPreset> {
    vec![
        GroupPreset::fixture(),
        GroupPreset::new(HenonMap::monic_power(3, 1.0).unwrap(), 1.0).unwrap(),
        GroupPreset::new(HenonMap::monic_power(2, 0.5).unwrap(), 0.3).unwrap(),
        GroupPreset::new(
            HenonMap::new(
                vec![Complex64::new(0.2, 0.1), Complex64::new(-0.5, 0.0), Complex64::new(1.0, 0.5)],
                Complex64::new(0.0, 1.5),
            )
            .unwrap(),
            2.0,
        )
        .unwrap(),
    ]
}
