//! Corpus ingestion: whitespace tokenization, the lowercase sentence filter,
//! and vocabulary construction with rare-word replacement.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

/// Splits a line on runs of whitespace. Case is preserved.
pub fn tokenize_line(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// Like [`tokenize_line`], but for raw bytes that still need UTF-8 validation.
pub fn tokenize_bytes(bytes: &[u8]) -> Result<Vec<String>> {
    let text = std::str::from_utf8(bytes)?;
    Ok(tokenize_line(text).into_iter().map(str::to_owned).collect())
}

/// Fraction of non-whitespace characters that are ASCII `a`–`z`.
///
/// Returns `None` for lines without any non-whitespace character.
pub fn lowercase_fraction(line: &str) -> Option<f64> {
    let mut lower = 0usize;
    let mut total = 0usize;
    for c in line.chars().filter(|c| !c.is_whitespace()) {
        total += 1;
        if c.is_ascii_lowercase() {
            lower += 1;
        }
    }
    (total > 0).then(|| lower as f64 / total as f64)
}

/// Whether a line survives the lowercase filter. Blank lines never do.
pub fn keep_line(line: &str, lowercase_ratio: f64) -> bool {
    lowercase_fraction(line).is_some_and(|f| f >= lowercase_ratio)
}

/// Drops every line whose lowercase fraction is below `lowercase_ratio`.
/// Kept lines pass through unchanged.
pub fn clean_corpus<I, S>(lines: I, lowercase_ratio: f64) -> impl Iterator<Item = S>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    lines
        .into_iter()
        .filter(move |l| keep_line(l.as_ref(), lowercase_ratio))
}

/// Word to id map with counts.
///
/// Retained words take ids `0..n` in descending count order (ties broken by
/// byte order), followed by `<unk>`, `<s>` and `</s>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    unk_id: u32,
    bos_id: u32,
    eos_id: u32,
}

fn count_lines<S: AsRef<str>>(lines: &[S]) -> HashMap<&str, u64> {
    let mut counts = HashMap::new();
    for line in lines {
        for tok in tokenize_line(line.as_ref()) {
            *counts.entry(tok).or_insert(0) += 1;
        }
    }
    counts
}

#[cfg(feature = "parallel")]
fn count_tokens<S: AsRef<str> + Sync>(lines: &[S]) -> HashMap<&str, u64> {
    use rayon::prelude::*;

    lines
        .par_chunks(4096)
        .map(count_lines)
        .reduce(HashMap::new, |mut a, b| {
            for (w, c) in b {
                *a.entry(w).or_insert(0) += c;
            }
            a
        })
}

#[cfg(not(feature = "parallel"))]
fn count_tokens<S: AsRef<str> + Sync>(lines: &[S]) -> HashMap<&str, u64> {
    count_lines(lines)
}

impl Vocabulary {
    /// Counts every token of `lines` and keeps the words seen at least
    /// `min_count` times. Everything else, and any literal `<unk>`, is
    /// absorbed by the UNK entry.
    pub fn build<S: AsRef<str> + Sync>(lines: &[S], min_count: u64) -> Result<Self> {
        if min_count < 1 {
            return Err(Error::config("vocab.min_count", "must be at least 1"));
        }
        let counts = count_tokens(lines);
        if counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        for marker in [BOS, EOS] {
            if counts.contains_key(marker) {
                return Err(Error::ReservedWord(marker.to_string()));
            }
        }

        let mut unk_count = 0;
        let mut kept = Vec::new();
        for (word, count) in counts {
            if word == UNK || count < min_count {
                unk_count += count;
            } else {
                kept.push((word, count));
            }
        }
        kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        Ok(Self::from_ranked(
            kept.into_iter().map(|(w, c)| (w.to_string(), c)),
            unk_count,
        ))
    }

    /// Builds a vocabulary from an already ranked word list.
    fn from_ranked(ranked: impl IntoIterator<Item = (String, u64)>, unk_count: u64) -> Self {
        let mut words = Vec::new();
        let mut counts = Vec::new();
        for (w, c) in ranked {
            words.push(w);
            counts.push(c);
        }
        let unk_id = words.len() as u32;
        words.extend([UNK.to_string(), BOS.to_string(), EOS.to_string()]);
        counts.extend([unk_count, 0, 0]);
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Vocabulary {
            words,
            counts,
            index,
            unk_id,
            bos_id: unk_id + 1,
            eos_id: unk_id + 2,
        }
    }

    /// Vocabulary with ids in the given order, as listed in an ARPA unigram
    /// section. Missing markers are appended. Counts are zero.
    pub fn from_words<I: IntoIterator<Item = String>>(words: I) -> Result<Self> {
        let mut list: Vec<String> = Vec::new();
        let mut index = HashMap::new();
        for w in words {
            if index.contains_key(&w) {
                return Err(Error::InvalidArgument(format!("duplicate word `{w}`")));
            }
            index.insert(w.clone(), list.len() as u32);
            list.push(w);
        }
        for marker in [UNK, BOS, EOS] {
            if !index.contains_key(marker) {
                index.insert(marker.to_string(), list.len() as u32);
                list.push(marker.to_string());
            }
        }
        Ok(Vocabulary {
            counts: vec![0; list.len()],
            unk_id: index[UNK],
            bos_id: index[BOS],
            eos_id: index[EOS],
            words: list,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn unk_id(&self) -> u32 {
        self.unk_id
    }

    pub fn bos_id(&self) -> u32 {
        self.bos_id
    }

    pub fn eos_id(&self) -> u32 {
        self.eos_id
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    /// Id of `word`, or the UNK id for out-of-vocabulary words.
    pub fn lookup(&self, word: &str) -> u32 {
        self.id(word).unwrap_or(self.unk_id)
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Ids a language model can predict: everything but `<s>`.
    pub fn predictable(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.len() as u32).filter(move |&i| i != self.bos_id)
    }

    /// Ids that may fill a token position: everything but the sentence markers.
    pub fn candidates(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.len() as u32).filter(move |&i| i != self.bos_id && i != self.eos_id)
    }

    /// Maps a tokenized sentence to ids. Sentence markers are not added.
    pub fn apply<S: AsRef<str>>(&self, sentence: &[S]) -> Vec<u32> {
        sentence.iter().map(|w| self.lookup(w.as_ref())).collect()
    }

    /// Total number of tokens counted, UNK included.
    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Writes `word<TAB>count` lines, UNK first, then retained words in id order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}\t{}", UNK, self.counts[self.unk_id as usize])?;
        for id in 0..self.len() as u32 {
            if id == self.unk_id || id == self.bos_id || id == self.eos_id {
                continue;
            }
            writeln!(
                out,
                "{}\t{}",
                self.words[id as usize], self.counts[id as usize]
            )?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(input: R, name: &str) -> Result<Self> {
        let mut unk_count = None;
        let mut ranked = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io(name, e))?;
            if line.is_empty() {
                continue;
            }
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(name, i + 1, "expected `word<TAB>count`"))?;
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|_| Error::parse(name, i + 1, format!("bad count `{count}`")))?;
            match unk_count {
                None if word == UNK => unk_count = Some(count),
                None => return Err(Error::parse(name, i + 1, "first entry must be <unk>")),
                Some(_) if word == UNK || word == BOS || word == EOS => {
                    return Err(Error::parse(name, i + 1, format!("reserved word `{word}`")))
                }
                Some(_) => ranked.push((word.to_string(), count)),
            }
        }
        let unk_count = unk_count.ok_or_else(|| Error::parse(name, 1, "empty vocabulary file"))?;
        Ok(Self::from_ranked(ranked, unk_count))
    }
}
