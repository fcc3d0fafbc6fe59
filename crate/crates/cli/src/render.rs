//! Escape-time rasters of affine slices of ℂ² and their PGM encoding.

use std::fs;
use std::io;
use std::path::Path;

use henon_lab::dynamics::orbit;
use henon_lab::group::random_reduced_word;
use henon_lab::{rng, Generator, GroupPreset, Point2};
use rayon::prelude::*;
use serde::Serialize;

use crate::CliError;

/// `anchor + s·u + t·v` for `|s| ≤ extent[0]`, `|t| ≤ extent[1]`, in the four
/// real coordinates `(Re x, Im x, Re y, Im y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Slice {
    pub anchor: [f64; 4],
    pub u: [f64; 4],
    pub v: [f64; 4],
    pub extent: [f64; 2],
}

const RE_X: [f64; 4] = [1.0, 0.0, 0.0, 0.0];
const RE_Y: [f64; 4] = [0.0, 0.0, 1.0, 0.0];
const IM_Y: [f64; 4] = [0.0, 0.0, 0.0, 1.0];

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Slice {
    pub fn new(anchor: [f64; 4], u: [f64; 4], v: [f64; 4], extent: [f64; 2]) -> Result<Self, CliError> {
        let finite = anchor.iter().chain(&u).chain(&v).chain(&extent).all(|c| c.is_finite());
        let (uu, vv, uv) = (dot(&u, &u), dot(&v, &v), dot(&u, &v));
        if !finite || !(extent[0] > 0.0 && extent[1] > 0.0) {
            return Err(CliError::Usage(format!("degenerate slice extent {extent:?}")));
        }
        if uu == 0.0 || vv == 0.0 || uv * uv >= (1.0 - 1e-12) * uu * vv {
            return Err(CliError::Usage("slice directions must be nonzero and independent".into()));
        }
        Ok(Slice { anchor, u, v, extent })
    }

    /// The `(Re x, Re y)` plane through `anchor`.
    pub fn real_plane(anchor: [f64; 4], extent: [f64; 2]) -> Result<Self, CliError> {
        Slice::new(anchor, RE_X, RE_Y, extent)
    }

    /// The complex `y`-line through `anchor`.
    pub fn y_line(anchor: [f64; 4], extent: [f64; 2]) -> Result<Self, CliError> {
        Slice::new(anchor, RE_Y, IM_Y, extent)
    }

    /// Centre of pixel `(col, row)`; row 0 is the top (`t = +extent`), and a
    /// single column or row sits on the anchor.
    pub fn point(&self, col: usize, row: usize, width: usize, height: usize) -> Point2 {
        let s = linspace(-self.extent[0], self.extent[0], width, col);
        let t = linspace(self.extent[1], -self.extent[1], height, row);
        Point2::from_reals(std::array::from_fn(|a| self.anchor[a] + s * self.u[a] + t * self.v[a]))
    }
}

fn linspace(a: f64, b: f64, n: usize, i: usize) -> f64 {
    if n == 1 {
        0.5 * (a + b)
    } else {
        a + (b - a) * i as f64 / (n - 1) as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum RenderMode {
    /// Escape step of the forward `h₁` orbit.
    Forward,
    /// Smaller of the forward and backward escape steps; pixels at the cap
    /// approximate the filled Julia set.
    Biorbit,
    /// Smallest escape step over `words` sampled reduced words of length
    /// `word_length`. A heuristic picture of the escaping region only.
    Group { words: usize, word_length: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub cap: u16,
    /// Row-major, row 0 on top.
    pub values: Vec<u16>,
    pub slice: Slice,
}

pub const MAX_CAP: u32 = u16::MAX as u32;

/// Escape step of each pixel, or `cap` when nothing escapes within budget.
/// Group mode draws the words of pixel `i` from `substream(seed, [i])`.
pub fn render_escape_slice(
    g: &GroupPreset,
    slice: Slice,
    mode: RenderMode,
    width: usize,
    height: usize,
    cap: u32,
    escape_radius: f64,
    seed: u64,
) -> Result<Raster, CliError> {
    if width == 0 || height == 0 {
        return Err(CliError::Usage("raster needs at least one pixel".into()));
    }
    if cap == 0 || cap > MAX_CAP {
        return Err(CliError::Usage(format!("cap must be in 1..={MAX_CAP}, got {cap}")));
    }
    let steps = cap as usize;
    let escape = |letters: &mut dyn Iterator<Item = Generator>, p: Point2| {
        orbit(g, letters, p, escape_radius).escaped_at.unwrap_or(steps).min(steps)
    };
    let values = (0..width * height)
        .into_par_iter()
        .map(|i| {
            let p = slice.point(i % width, i / width, width, height);
            let n = match mode {
                RenderMode::Forward => escape(&mut std::iter::repeat_n(Generator::H1, steps), p),
                RenderMode::Biorbit => escape(&mut std::iter::repeat_n(Generator::H1, steps), p)
                    .min(escape(&mut std::iter::repeat_n(Generator::H1Inv, steps), p)),
                RenderMode::Group { words, word_length } => {
                    let mut rng = rng::substream(seed, &[i as u64]);
                    (0..words)
                        .map(|_| {
                            let w = random_reduced_word(&mut rng, word_length);
                            let mut letters = w.application_order();
                            escape(&mut letters, p)
                        })
                        .min()
                        .unwrap_or(steps)
                }
            };
            n as u16
        })
        .collect();
    Ok(Raster {
        width,
        height,
        cap: cap as u16,
        values,
        slice,
    })
}

/// Binary PGM: `P5`, one comment line with `hash`, 8-bit samples when the cap
/// fits in a byte, else 16-bit big-endian with maxval 65535.
pub fn pgm_bytes(r: &Raster, hash: &str) -> Vec<u8> {
    let wide = r.cap > 255;
    let maxval = if wide { 65535 } else { 255 };
    let mut out = format!("P5\n# {hash}\n{} {}\n{maxval}\n", r.width, r.height).into_bytes();
    for &v in &r.values {
        if wide {
            out.extend_from_slice(&v.to_be_bytes());
        } else {
            out.push(v as u8);
        }
    }
    out
}

pub fn write_pgm(r: &Raster, hash: &str, path: &Path) -> Result<(), CliError> {
    fs::write(path, pgm_bytes(r, hash)).map_err(|e| CliError::io(path, e))
}

/// Parses a file produced by [`pgm_bytes`] back into `(width, height, maxval, hash, values)`.
pub fn parse_pgm(bytes: &[u8]) -> io::Result<(usize, usize, u32, String, Vec<u16>)> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut lines = Vec::new();
    let mut pos = 0;
    while lines.len() < 4 {
        let end = bytes[pos..].iter().position(|&b| b == b'\n').ok_or_else(|| bad("truncated header"))?;
        lines.push(std::str::from_utf8(&bytes[pos..pos + end]).map_err(|_| bad("header is not UTF-8"))?);
        pos += end + 1;
    }
    if lines[0] != "P5" {
        return Err(bad("not a binary PGM"));
    }
    let hash = lines[1].strip_prefix("# ").ok_or_else(|| bad("missing hash comment"))?.to_string();
    let (w, h) = lines[2].split_once(' ').ok_or_else(|| bad("bad size line"))?;
    let (w, h): (usize, usize) = (w.parse().map_err(|_| bad("bad width"))?, h.parse().map_err(|_| bad("bad height"))?);
    let maxval: u32 = lines[3].parse().map_err(|_| bad("bad maxval"))?;
    let payload = &bytes[pos..];
    let values: Vec<u16> = if maxval > 255 {
        payload.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        payload.iter().map(|&b| u16::from(b)).collect()
    };
    if values.len() != w * h || (maxval > 255 && payload.len() % 2 != 0) {
        return Err(bad("payload size does not match the header"));
    }
    Ok((w, h, maxval, hash, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window() -> Slice {
        Slice::y_line([0.0; 4], [4.0, 4.0]).unwrap()
    }

    #[test]
    fn pgm_header_and_payload() {
        let r = Raster { width: 2, height: 2, cap: 255, values: vec![0, 255, 1, 2], slice: window() };
        let bytes = pgm_bytes(&r, "0123456789abcdef");
        let header = b"P5\n# 0123456789abcdef\n2 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[0, 255, 1, 2]);

        let r = Raster { cap: 1000, values: vec![0, 1000, 1, 2], ..r };
        let bytes = pgm_bytes(&r, "h");
        let header = b"P5\n# h\n2 2\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[0, 0, 3, 232, 0, 1, 0, 2]);
        let (w, h, maxval, hash, values) = parse_pgm(&bytes).unwrap();
        assert_eq!((w, h, maxval, hash.as_str()), (2, 2, 65535, "h"));
        assert_eq!(values, r.values);
    }

    #[test]
    fn slice_pixels() {
        let s = window();
        assert_eq!(s.point(0, 0, 1, 1), Point2::ORIGIN);
        assert_eq!(s.point(0, 0, 9, 9), Point2::new(0.0.into(), henon_lab::Complex64::new(-4.0, 4.0)));
        assert_eq!(s.point(8, 8, 9, 9), Point2::new(0.0.into(), henon_lab::Complex64::new(4.0, -4.0)));
        assert!(Slice::y_line([0.0; 4], [0.0, 1.0]).is_err());
        assert!(Slice::new([0.0; 4], RE_X, [2.0, 0.0, 0.0, 0.0], [1.0, 1.0]).is_err());
        assert!(Slice::new([0.0; 4], RE_X, [0.0; 4], [1.0, 1.0]).is_err());
    }

    #[test]
    fn forward_render_examples() {
        let g = GroupPreset::fixture();
        // 9×9 over |y| ≤ 4: column 4 is Re y = 0, row 4 is Im y = 0
        let r = render_escape_slice(&g, window(), RenderMode::Forward, 9, 9, 100, 1e6, 0).unwrap();
        assert_eq!(r.values[4 * 9 + 4], 100);
        let direct = orbit(&g, std::iter::repeat_n(Generator::H1, 100), Point2::real(0.0, 3.5), 1e6);
        let s = Slice::y_line([0.0, 0.0, 3.5, 0.0], [0.5, 0.5]).unwrap();
        let one = render_escape_slice(&g, s, RenderMode::Forward, 1, 1, 100, 1e6, 0).unwrap();
        assert_eq!(one.values, vec![direct.escaped_at.unwrap() as u16]);
        assert!(one.values[0] < 100);
    }

    #[test]
    fn group_render_is_reproducible() {
        let g = GroupPreset::fixture();
        let mode = RenderMode::Group { words: 3, word_length: 10 };
        let a = render_escape_slice(&g, window(), mode, 7, 5, 20, 1e6, 9).unwrap();
        let b = render_escape_slice(&g, window(), mode, 7, 5, 20, 1e6, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.values.iter().all(|&v| v <= 20));
    }

    #[test]
    fn cap_limits() {
        let g = GroupPreset::fixture();
        assert!(render_escape_slice(&g, window(), RenderMode::Forward, 1, 1, 0, 1e6, 0).is_err());
        assert!(render_escape_slice(&g, window(), RenderMode::Forward, 1, 1, 65536, 1e6, 0).is_err());
        assert!(render_escape_slice(&g, window(), RenderMode::Forward, 0, 1, 10, 1e6, 0).is_err());
    }
}
