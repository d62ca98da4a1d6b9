#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subscode::{LanguageModel, Result, Vocabulary};

pub fn sample_corpus_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/sample_corpus.txt")
}

pub fn sample_corpus() -> Vec<String> {
    std::fs::read_to_string(sample_corpus_path())
        .expect("bundled corpus")
        .lines()
        .map(str::to_owned)
        .collect()
}

/// Sentences over `w0..w{n_words}` from a sparse random bigram process, so
/// n-grams repeat often enough for every smoothing branch to fire.
pub fn toy_corpus(seed: u64, n_sentences: usize, n_words: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let successors: Vec<[usize; 3]> = (0..n_words)
        .map(|_| {
            [
                rng.random_range(0..n_words),
                rng.random_range(0..n_words),
                rng.random_range(0..n_words),
            ]
        })
        .collect();
    (0..n_sentences)
        .map(|_| {
            let len = rng.random_range(1..9);
            let mut w = rng.random_range(0..n_words);
            let mut words = Vec::with_capacity(len);
            for _ in 0..len {
                words.push(format!("w{w}"));
                w = if rng.random_bool(0.8) {
                    successors[w][rng.random_range(0..3)]
                } else {
                    rng.random_range(0..n_words)
                };
            }
            words.join(" ")
        })
        .collect()
}

pub fn to_ids(vocab: &Vocabulary, lines: &[String]) -> Vec<Vec<u32>> {
    lines
        .iter()
        .map(|l| vocab.apply(&subscode::corpus::tokenize_line(l)))
        .collect()
}

fn padded(sentence: &[u32], order: usize, bos: u32, eos: u32) -> Vec<u32> {
    let mut p = vec![bos; order - 1];
    p.extend_from_slice(sentence);
    p.push(eos);
    p
}

/// Interpolated Kneser-Ney written as the plain recursion
/// `P_k(w|h) = max(c(hw) - D_k, 0)/c(h) + D_k N1+(h.)/c(h) P_{k-1}(w|h')`,
/// with continuation counts below the top order and a uniform floor.
pub struct KnOracle {
    order: usize,
    counts: Vec<HashMap<Vec<u32>, f64>>,
    /// history -> (sum of counts, distinct successors), per order.
    histories: Vec<HashMap<Vec<u32>, (f64, f64)>>,
    discounts: Vec<f64>,
    n_predictable: f64,
}

impl KnOracle {
    pub fn new(sentences: &[Vec<u32>], order: usize, vocab: &Vocabulary) -> Self {
        let (bos, eos) = (vocab.bos_id(), vocab.eos_id());
        let mut raw: Vec<HashSet<Vec<u32>>> = vec![HashSet::new(); order];
        let mut top: HashMap<Vec<u32>, f64> = HashMap::new();
        for s in sentences {
            let p = padded(s, order, bos, eos);
            for end in order - 1..p.len() {
                for k in 1..=order {
                    raw[k - 1].insert(p[end + 1 - k..=end].to_vec());
                }
                *top.entry(p[end + 1 - order..=end].to_vec()).or_default() += 1.0;
            }
        }
        let mut counts = vec![HashMap::new(); order];
        counts[order - 1] = top;
        for k in 1..order {
            for g in &raw[k] {
                *counts[k - 1].entry(g[1..].to_vec()).or_default() += 1.0;
            }
        }
        let discounts = counts
            .iter()
            .map(|m| {
                let n1 = m.values().filter(|&&c| c == 1.0).count() as f64;
                let n2 = m.values().filter(|&&c| c == 2.0).count() as f64;
                if n1 == 0.0 || n2 == 0.0 {
                    0.5
                } else {
                    n1 / (n1 + 2.0 * n2)
                }
            })
            .collect();
        let histories = counts
            .iter()
            .map(|m| {
                let mut h: HashMap<Vec<u32>, (f64, f64)> = HashMap::new();
                for (g, &c) in m {
                    let e = h.entry(g[..g.len() - 1].to_vec()).or_default();
                    e.0 += c;
                    e.1 += 1.0;
                }
                h
            })
            .collect();
        KnOracle {
            order,
            counts,
            histories,
            discounts,
            n_predictable: (vocab.len() - 1) as f64,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn prob(&self, w: u32, h: &[u32]) -> f64 {
        let h = &h[h.len().saturating_sub(self.order - 1)..];
        let k = h.len() + 1;
        let d = self.discounts[k - 1];
        let mut g = h.to_vec();
        g.push(w);
        let c = self.counts[k - 1].get(&g).copied().unwrap_or(0.0);
        let lower = if k == 1 {
            1.0 / self.n_predictable
        } else {
            self.prob(w, &h[1..])
        };
        match self.histories[k - 1].get(h) {
            Some(&(total, types)) => (c - d).max(0.0) / total + d * types / total * lower,
            None => lower,
        }
    }
}

/// Add-one smoothing over full histories; a deliberately weak baseline.
pub struct AddOne {
    order: usize,
    vocab: Vocabulary,
    grams: HashMap<Vec<u32>, f64>,
    histories: HashMap<Vec<u32>, f64>,
}

impl AddOne {
    pub fn new(sentences: &[Vec<u32>], order: usize, vocab: &Vocabulary) -> Self {
        let mut grams: HashMap<Vec<u32>, f64> = HashMap::new();
        let mut histories: HashMap<Vec<u32>, f64> = HashMap::new();
        for s in sentences {
            let p = padded(s, order, vocab.bos_id(), vocab.eos_id());
            for end in order - 1..p.len() {
                let g = &p[end + 1 - order..=end];
                *grams.entry(g.to_vec()).or_default() += 1.0;
                *histories.entry(g[..order - 1].to_vec()).or_default() += 1.0;
            }
        }
        AddOne {
            order,
            vocab: vocab.clone(),
            grams,
            histories,
        }
    }
}

impl LanguageModel for AddOne {
    fn order(&self) -> usize {
        self.order
    }

    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn logprob(&self, word: u32, history: &[u32]) -> Result<f64> {
        let mut g = history.to_vec();
        g.push(word);
        let c = self.grams.get(&g).copied().unwrap_or(0.0);
        let h = self.histories.get(history).copied().unwrap_or(0.0);
        let v = (self.vocab.len() - 1) as f64;
        Ok(((c + 1.0) / (h + v)).ln())
    }
}

/// Pairs from two blocks: `x` and `y` always share a block.
pub fn block_pairs(seed: u64, n_pairs: usize, per_block: u32) -> Vec<subscode::CooccurrencePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_pairs)
        .map(|_| {
            let b = rng.random_range(0..2u32);
            subscode::CooccurrencePair {
                x: b * per_block + rng.random_range(0..per_block),
                y: b * per_block + rng.random_range(0..per_block),
            }
        })
        .collect()
}
