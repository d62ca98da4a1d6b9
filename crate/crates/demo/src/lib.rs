//! Browser demo: three small interactive views of the embedding pipeline.
//!
//! Every export is a plain function over numbers and strings so the page
//! needs no bindings beyond what `wasm-bindgen` generates.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subscode::corpus::tokenize_line;
use subscode::scode::{exact_ascent, init_embeddings, train};
use subscode::substitutes::substitute_distribution_pruned;
use subscode::{
    ContextWindow, CooccurrencePair, CountTable, EmpiricalDistribution, NgramModel,
    Result as CoreResult, TrainConfig, Vocabulary,
};
use wasm_bindgen::prelude::*;

const EXCERPT: &str = include_str!("../../../data/sample_corpus.txt");
const EXCERPT_LINES: usize = 3000;

fn block_pairs(seed: u64, blocks: u32, per_block: u32, n: usize) -> Vec<CooccurrencePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let b = rng.random_range(0..blocks);
            CooccurrencePair {
                x: b * per_block + rng.random_range(0..per_block),
                y: b * per_block + rng.random_range(0..per_block),
            }
        })
        .collect()
}

/// Trains on synthetic block data in two dimensions and returns the points
/// as `[phi_x0, phi_y0, .., psi_x0, psi_y0, ..]`, X vectors first. Word
/// `i` on either side belongs to block `i / per_block`.
#[wasm_bindgen]
pub fn train_blocks(
    seed: u32,
    blocks: u32,
    per_block: u32,
    epochs: u32,
    z_constant: f64,
) -> Result<Vec<f64>, JsError> {
    Ok(blocks_inner(seed, blocks, per_block, epochs, z_constant)?)
}

fn blocks_inner(
    seed: u32,
    blocks: u32,
    per_block: u32,
    epochs: u32,
    z_constant: f64,
) -> CoreResult<Vec<f64>> {
    let (blocks, per_block) = (blocks.max(1), per_block.max(1));
    let n = (blocks * per_block) as usize;
    let pairs = block_pairs(seed as u64, blocks, per_block, 10_000);
    let config = TrainConfig {
        dim: 2,
        z_constant,
        epochs: epochs as usize,
        seed: seed as u64,
        ..TrainConfig::default()
    };
    let out = train(&pairs, n, n, &config)?;
    let emb = out.embeddings;
    Ok(emb
        .phi_rows()
        .iter()
        .chain(emb.psi_rows())
        .copied()
        .collect())
}

/// Exact log-likelihood after each full-batch ascent step on a random
/// `size x size` co-occurrence instance.
#[wasm_bindgen]
pub fn ascent_curve(
    seed: u32,
    size: u32,
    dim: u32,
    step: f64,
    iterations: u32,
) -> Result<Vec<f64>, JsError> {
    Ok(ascent_inner(seed, size, dim, step, iterations)?)
}

fn ascent_inner(
    seed: u32,
    size: u32,
    dim: u32,
    step: f64,
    iterations: u32,
) -> CoreResult<Vec<f64>> {
    let size = size.clamp(1, 32) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let pairs: Vec<CooccurrencePair> = (0..20 * size * size)
        .map(|_| CooccurrencePair {
            x: rng.random_range(0..size as u32),
            y: rng.random_range(0..size as u32),
        })
        .collect();
    let emp = EmpiricalDistribution::from_pairs(&pairs, size, size)?;
    let mut emb = init_embeddings(size, size, dim.max(1) as usize, seed as u64)?;
    Ok(exact_ascent(
        &mut emb,
        &emp,
        step,
        iterations.min(5000) as usize,
    ))
}

/// A trigram model over an excerpt of the bundled corpus.
#[wasm_bindgen]
pub struct SubstituteModel {
    model: NgramModel,
}

#[wasm_bindgen]
impl SubstituteModel {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Result<SubstituteModel, JsError> {
        Ok(Self::build()?)
    }

    pub fn vocabulary_size(&self) -> usize {
        self.model.vocab().len()
    }

    /// Top-`k` substitutes for the token at `position`, one
    /// `word<TAB>probability` line each.
    pub fn substitutes(
        &self,
        sentence: &str,
        position: usize,
        k: usize,
    ) -> Result<String, JsError> {
        Ok(self.substitutes_inner(sentence, position, k)?)
    }
}

impl SubstituteModel {
    fn build() -> CoreResult<SubstituteModel> {
        let lines: Vec<&str> = EXCERPT.lines().take(EXCERPT_LINES).collect();
        let vocab = Vocabulary::build(&lines, 1)?;
        let ids: Vec<Vec<u32>> = lines
            .iter()
            .map(|l| vocab.apply(&tokenize_line(l)))
            .collect();
        let counts = CountTable::from_sentences(&ids, 3, &vocab)?;
        Ok(SubstituteModel {
            model: NgramModel::estimate_kn(&counts)?,
        })
    }

    fn substitutes_inner(&self, sentence: &str, position: usize, k: usize) -> CoreResult<String> {
        let tokens = tokenize_line(sentence);
        let ids = self.model.vocab().apply(&tokens);
        let window = ContextWindow::new(&ids, position)?;
        let dist = substitute_distribution_pruned(&self.model, &window, k.max(1))?;
        let mut out = String::new();
        for (id, p) in dist.entries {
            let _ = writeln!(out, "{}\t{p:.4}", self.model.vocab().word(id));
        }
        Ok(out)
    }
}
