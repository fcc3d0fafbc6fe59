//! Free-group words over `{h₁, h₂, h₁⁻¹, h₂⁻¹}`, the step distribution `ν`,
//! random walks and their linear drift.
//!
//! A [`Word`] is written as a composition: its first letter is applied last.
//! So `S_n = ω_n ∘ ⋯ ∘ ω_1` is the word `[ω_n, …, ω_1]`. A walk sample, on
//! the other hand, is a plain sequence of letters in time order.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{self, unit_f64};
use crate::{Error, Result};

/// Largest `n` accepted by [`enumerate_reduced`]; `|Ω₁₂| = 4·3¹¹ ≈ 7·10⁵`.
pub const MAX_ENUMERATION_LENGTH: usize = 12;

/// A letter of the symmetric generating set, in the fixed order
/// `H1, H2, H1Inv, H2Inv`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Generator {
    H1,
    H2,
    H1Inv,
    H2Inv,
}

impl Generator {
    pub const ALL: [Generator; 4] = [Generator::H1, Generator::H2, Generator::H1Inv, Generator::H2Inv];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Generator {
        Self::ALL[i]
    }

    pub fn inverse(self) -> Generator {
        match self {
            Generator::H1 => Generator::H1Inv,
            Generator::H2 => Generator::H2Inv,
            Generator::H1Inv => Generator::H1,
            Generator::H2Inv => Generator::H2,
        }
    }

    /// Log token: `a`, `b`, `A`, `B`.
    pub fn token(self) -> char {
        match self {
            Generator::H1 => 'a',
            Generator::H2 => 'b',
            Generator::H1Inv => 'A',
            Generator::H2Inv => 'B',
        }
    }

    pub fn from_token(c: char) -> Result<Generator> {
        match c {
            'a' => Ok(Generator::H1),
            'b' => Ok(Generator::H2),
            'A' => Ok(Generator::H1Inv),
            'B' => Ok(Generator::H2Inv),
            other => Err(Error::InvalidWordToken(other)),
        }
    }
}

/// A freely reduced word.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Generator>);

/// Pushes `g` onto a reduced stack, cancelling against the top if needed.
fn push_reduced(stack: &mut Vec<Generator>, g: Generator) {
    if stack.last() == Some(&g.inverse()) {
        stack.pop();
    } else {
        stack.push(g);
    }
}

/// Free reduction by the usual stack scan.
pub fn reduce(letters: &[Generator]) -> Word {
    let mut stack = Vec::with_capacity(letters.len());
    for &g in letters {
        push_reduced(&mut stack, g);
    }
    Word(stack)
}

/// Reduced product `u · v` (apply `v`, then `u`).
pub fn concat(u: &Word, v: &Word) -> Word {
    let mut stack = u.0.clone();
    for &g in &v.0 {
        push_reduced(&mut stack, g);
    }
    Word(stack)
}

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn letters(&self) -> &[Generator] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Letters in the order they act on a point.
    pub fn application_order(&self) -> impl Iterator<Item = Generator> + '_ {
        self.0.iter().rev().copied()
    }

    /// The word `S_n` of a walk whose letters are given in time order.
    pub fn from_walk(steps: &[Generator]) -> Word {
        let mut stack = Vec::with_capacity(steps.len());
        for &g in steps.iter().rev() {
            push_reduced(&mut stack, g);
        }
        Word(stack)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|g| g.inverse()).collect())
    }

    pub fn is_reduced(letters: &[Generator]) -> bool {
        letters.windows(2).all(|w| w[1] != w[0].inverse())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        for g in &self.0 {
            write!(f, "{}", g.token())?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Parses the token form and reduces it.
    fn from_str(s: &str) -> Result<Self> {
        if s == "e" {
            return Ok(Word::identity());
        }
        let letters = s.chars().map(Generator::from_token).collect::<Result<Vec<_>>>()?;
        Ok(reduce(&letters))
    }
}

/// All reduced words of length exactly `n`, in lexicographic order of letter
/// indices.
pub fn enumerate_reduced(n: usize) -> Result<Vec<Word>> {
    if n > MAX_ENUMERATION_LENGTH {
        return Err(Error::EnumerationTooLong(n));
    }
    let mut words = vec![Vec::with_capacity(n)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(words.len() * 4);
        for w in &words {
            for g in Generator::ALL {
                if w.last().map(|l: &Generator| l.inverse()) != Some(g) {
                    let mut ext = Vec::with_capacity(n);
                    ext.extend_from_slice(w);
                    ext.push(g);
                    next.push(ext);
                }
            }
        }
        words = next;
    }
    Ok(words.into_iter().map(Word).collect())
}

/// `|Ω_n|`: `1` for `n = 0`, else `4·3^{n−1}`.
pub fn reduced_count(n: usize) -> u64 {
    if n == 0 {
        1
    } else {
        4 * 3u64.pow(n as u32 - 1)
    }
}

/// A uniformly random reduced word of length `n`.
pub fn random_reduced_word<R: rand::RngCore + ?Sized>(rng: &mut R, n: usize) -> Word {
    let mut letters: Vec<Generator> = Vec::with_capacity(n);
    for _ in 0..n {
        let g = match letters.last() {
            None => Generator::from_index(rng::index_below(rng, 4)),
            Some(&last) => {
                let allowed: Vec<Generator> =
                    Generator::ALL.into_iter().filter(|&g| g != last.inverse()).collect();
                allowed[rng::index_below(rng, 3)]
            }
        };
        letters.push(g);
    }
    Word(letters)
}

/// `ν = a₁δ_{h₁} + a₂δ_{h₂} + a₃δ_{h₁⁻¹} + a₄δ_{h₂⁻¹}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkMeasure {
    weights: [f64; 4],
}

impl WalkMeasure {
    /// Weights in the order `H1, H2, H1Inv, H2Inv`; each positive, summing to 1.
    pub fn new(weights: [f64; 4]) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidMeasure(format!("weights must be positive, got {weights:?}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        Ok(WalkMeasure { weights })
    }

    pub fn uniform() -> Self {
        WalkMeasure { weights: [0.25; 4] }
    }

    pub fn weights(&self) -> [f64; 4] {
        self.weights
    }

    pub fn is_symmetric(&self) -> bool {
        let w = self.weights;
        w.iter().all(|x| (x - w[0]).abs() <= 1e-12)
    }

    /// One letter by inverse CDF over the fixed letter order.
    pub fn sample<R: rand::RngCore + ?Sized>(&self, rng: &mut R) -> Generator {
        let u = unit_f64(rng);
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return Generator::from_index(i);
            }
        }
        Generator::H2Inv
    }
}

/// `n` i.i.d. letters drawn from `nu`, reproducible from `seed`.
pub fn sample_walk(nu: &WalkMeasure, n: usize, seed: u64) -> Vec<Generator> {
    let mut rng = rng::stream(seed);
    (0..n).map(|_| nu.sample(&mut rng)).collect()
}

/// Mean and standard error of a set of trial values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Summed in index order, so the result is independent of scheduling.
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Estimate { mean, stderr }
    }
}

/// Estimates the linear rate `length(S_n)/n` of the walk driven by `nu`.
///
/// Trial `t` draws from the stream `seed ^ mix(t)`.
pub fn drift_estimate(nu: &WalkMeasure, n: usize, trials: usize, seed: u64) -> Result<Estimate> {
    if n == 0 || trials == 0 {
        return Err(Error::InvalidParameter("drift needs n ≥ 1 and trials ≥ 1".into()));
    }
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::substream(seed, &[t]);
            let mut stack = Vec::with_capacity(n);
            for _ in 0..n {
                push_reduced(&mut stack, nu.sample(&mut rng));
            }
            stack.len() as f64 / n as f64
        })
        .collect();
    Ok(Estimate::from_samples(&values))
}
