//! Quantitative interpretability metric.
//!
//! Given the thresholded decodings of the hidden states and the ground
//! truth sequence, every pair `(h_i, s_j)` with `j` ranging over the
//! interior truth states is scored: 0 when fewer than 95% of the pixels
//! agree, 1 for a fresh match, and 0.5 when that truth state was already
//! matched by an earlier pair. The pair order is lexicographic in
//! `(i, j)`, so "already matched" means matched by a lower hidden index,
//! or by the same hidden state against an earlier truth state. The sum is
//! normalized by `min(n, m - 2)` and can exceed 1 when `n > m - 2`.

use crate::error::{Error, Result};
use crate::life::{Grid, Sequence};
use std::collections::HashSet;

/// Pixel-agreement level at and above which two states count as matching.
pub const MATCH_THRESHOLD: f64 = 0.95;

/// Decoded hidden states plus the truth sequence they are scored against.
#[derive(Clone, Debug)]
pub struct MetricInput {
    /// Thresholded decodings `h_1 .. h_n`, `n = model_timesteps - 1`.
    pub hidden_decoded: Vec<Grid>,
    /// Ground truth `s_1 .. s_m`, `m = gol_timesteps + 1`.
    pub truth: Sequence,
}

/// One scored pair. Indices are 1-based to mirror `h_i` / `s_j` naming.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairScore {
    pub i: usize,
    pub j: usize,
    pub score: f64,
}

#[derive(Clone, Debug)]
pub struct MatchReport {
    pub value: f64,
    pub pairs: Vec<PairScore>,
    pub denominator: usize,
}

/// Fraction of cells on which the two grids agree.
pub fn match_fraction(a: &Grid, b: &Grid) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::shape(
            format!("{}x{}", a.width(), a.height()),
            format!("{}x{}", b.width(), b.height()),
        ));
    }
    let equal = a
        .cells()
        .iter()
        .zip(b.cells())
        .filter(|(x, y)| x == y)
        .count();
    Ok(equal as f64 / a.cells().len() as f64)
}

/// Scores one sequence. Requires `n >= 1` hidden decodings and `m >= 3`
/// truth states; otherwise the normalizer `min(n, m - 2)` would be zero.
pub fn metric(input: &MetricInput) -> Result<MatchReport> {
    let n = input.hidden_decoded.len();
    let m = input.truth.len();
    if n == 0 || m < 3 {
        return Err(Error::invalid(format!(
            "metric undefined: need n >= 1 and m >= 3, got n={n}, m={m}"
        )));
    }
    let denominator = n.min(m - 2);
    let mut matched: HashSet<usize> = HashSet::new();
    let mut pairs = Vec::with_capacity(n * (m - 2));
    let mut total = 0.0;
    for (i0, h) in input.hidden_decoded.iter().enumerate() {
        // Interior truth states only: s_1 and s_m are the trained
        // endpoints and are excluded.
        for j in 2..m {
            let s = &input.truth.states[j - 1];
            let score = if match_fraction(h, s)? < MATCH_THRESHOLD {
                0.0
            } else if matched.insert(j) {
                1.0
            } else {
                0.5
            };
            total += score;
            pairs.push(PairScore {
                i: i0 + 1,
                j,
                score,
            });
        }
    }
    Ok(MatchReport {
        value: total / denominator as f64,
        pairs,
        denominator,
    })
}

/// Arithmetic mean of the metric over many sequences.
pub fn metric_mean(inputs: &[MetricInput]) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::invalid("metric_mean over an empty list"));
    }
    let mut acc = 0.0;
    for input in inputs {
        acc += metric(input)?.value;
    }
    Ok(acc / inputs.len() as f64)
}

/// Headline reporting rule: the better of the base and adversarial values.
pub fn max_of_variants(base: f64, adversarial: f64) -> f64 {
    base.max(adversarial)
}
