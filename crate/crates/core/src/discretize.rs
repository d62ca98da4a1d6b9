//! Discretization of substitute distributions into (word, substitute) pairs
//! by sampling with replacement.

use std::io::{BufRead, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::substitutes::{read_substitutes, SubstituteDistribution, SubstituteLine};

/// Default number of samples drawn per token.
pub const DEFAULT_SAMPLES: usize = 100;

const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// One observed co-occurrence: a word type `x` and a sampled substitute `y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CooccurrencePair {
    pub x: u32,
    pub y: u32,
}

/// Random stream for one token. Every token gets its own ChaCha stream of
/// the same key, so tokens can be sampled in any order or on any thread.
pub fn token_rng(seed: u64, token_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(token_index);
    rng
}

/// Draws `s` indices with replacement from a normalized categorical
/// distribution.
pub fn sample_indices<R: Rng + ?Sized>(probs: &[f64], s: usize, rng: &mut R) -> Result<Vec<usize>> {
    if s == 0 {
        return Err(Error::config("sample.S", "must be at least 1"));
    }
    let total: f64 = probs.iter().sum();
    if probs.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Unnormalized(total));
    }
    let dist = WeightedIndex::new(probs).map_err(|_| Error::Unnormalized(total))?;
    Ok((0..s).map(|_| dist.sample(rng)).collect())
}

/// Draws `s` substitutes of one distribution.
pub fn sample_substitutes<R: Rng + ?Sized>(
    dist: &SubstituteDistribution,
    s: usize,
    rng: &mut R,
) -> Result<Vec<u32>> {
    let probs: Vec<f64> = dist.entries.iter().map(|e| e.1).collect();
    Ok(sample_indices(&probs, s, rng)?
        .into_iter()
        .map(|i| dist.entries[i].0)
        .collect())
}

/// Emits `s` pairs `(token, substitute)` per token, in corpus order.
/// Token `i` samples from `token_rng(seed, i)`.
pub fn emit_pairs(
    tokens: &[u32],
    dists: &[SubstituteDistribution],
    s: usize,
    seed: u64,
) -> Result<Vec<CooccurrencePair>> {
    if tokens.len() != dists.len() {
        return Err(Error::LengthMismatch {
            position: tokens.len().min(dists.len()),
        });
    }
    let mut pairs = Vec::with_capacity(tokens.len() * s);
    for (i, (&x, dist)) in tokens.iter().zip(dists).enumerate() {
        let mut rng = token_rng(seed, i as u64);
        let ys = sample_substitutes(dist, s, &mut rng).map_err(|e| Error::Sentence {
            sentence: i,
            source: Box::new(e),
        })?;
        pairs.extend(ys.into_iter().map(|y| CooccurrencePair { x, y }));
    }
    Ok(pairs)
}

/// Reads a substitute file and writes the sampled pairs file
/// (`x<TAB>y` per line). Probabilities read back from the file carry only
/// six significant digits, so each entry list is renormalized after a
/// coarse sanity check. Returns the number of tokens processed.
pub fn sample_substitute_file<R: BufRead, W: Write>(
    input: R,
    in_name: &str,
    mut out: W,
    out_name: &str,
    s: usize,
    seed: u64,
) -> Result<usize> {
    let mut token = 0u64;
    for line in read_substitutes(input, in_name) {
        let SubstituteLine::Token { word, entries } = line? else {
            continue;
        };
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if (total - 1.0).abs() > 1e-3 {
            return Err(Error::Unnormalized(total));
        }
        let probs: Vec<f64> = entries.iter().map(|e| e.1 / total).collect();
        let mut rng = token_rng(seed, token);
        for i in sample_indices(&probs, s, &mut rng)? {
            writeln!(out, "{}\t{}", word, entries[i].0).map_err(|e| Error::io(out_name, e))?;
        }
        token += 1;
    }
    out.flush().map_err(|e| Error::io(out_name, e))?;
    Ok(token as usize)
}
