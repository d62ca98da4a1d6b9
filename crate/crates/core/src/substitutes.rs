//! Substitute word distributions: for a token position, the probability of
//! each vocabulary word filling it given the surrounding `n - 1` words on
//! each side.
//!
//! A candidate `c` at position 0 is scored by
//! `sum_{j=0}^{n-1} ln P(w_j | w_{j-n+1} .. w_{j-1})` with `w_0 = c`, using the
//! same start/end padding the model was trained with. Terms past the end
//! marker are dropped. All other factors of the sentence probability do not
//! depend on `c` and cancel after normalization.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::ngram::NgramModel;

/// Default number of substitutes kept per position.
pub const DEFAULT_TOP_K: usize = 100;

/// A target position inside an id sentence.
#[derive(Clone, Copy, Debug)]
pub struct ContextWindow<'a> {
    sentence: &'a [u32],
    position: usize,
}

impl<'a> ContextWindow<'a> {
    pub fn new(sentence: &'a [u32], position: usize) -> Result<Self> {
        if position >= sentence.len() {
            return Err(Error::InvalidArgument(format!(
                "position {position} out of range for sentence of length {}",
                sentence.len()
            )));
        }
        Ok(ContextWindow { sentence, position })
    }

    pub fn sentence(&self) -> &'a [u32] {
        self.sentence
    }

    pub fn position(&self) -> usize {
        self.position
    }

    /// The context words on each side of the target for an order-`n` model.
    pub fn context(&self, order: usize) -> (&'a [u32], &'a [u32]) {
        let half = order - 1;
        let lo = self.position.saturating_sub(half);
        let hi = (self.position + 1 + half).min(self.sentence.len());
        (
            &self.sentence[lo..self.position],
            &self.sentence[self.position + 1..hi],
        )
    }
}

/// Top-K substitutes of one position, most probable first.
#[derive(Clone, Debug, PartialEq)]
pub struct SubstituteDistribution {
    pub position: usize,
    pub entries: Vec<(u32, f64)>,
}

impl SubstituteDistribution {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }
}

/// Reusable scoring state for one window.
struct WindowScorer<'m> {
    model: &'m NgramModel,
    padded: Vec<u32>,
    target: usize,
    n_terms: usize,
}

impl<'m> WindowScorer<'m> {
    fn new(model: &'m NgramModel, window: &ContextWindow<'_>) -> Result<Self> {
        let vocab = model.vocab();
        if let Some(&bad) = window
            .sentence
            .iter()
            .find(|&&id| id as usize >= vocab.len())
        {
            return Err(Error::UnknownId(bad));
        }
        let n = model.order();
        let mut padded = vec![vocab.bos_id(); n - 1];
        padded.extend_from_slice(window.sentence);
        padded.push(vocab.eos_id());
        let target = window.position + n - 1;
        let n_terms = n.min(padded.len() - target);
        Ok(WindowScorer {
            model,
            padded,
            target,
            n_terms,
        })
    }

    fn term(&self, j: usize) -> f64 {
        let n = self.model.order();
        let i = self.target + j;
        self.model
            .ln_prob(self.padded[i], &self.padded[i + 1 - n..i])
    }

    /// `ln P(candidate | left context)`.
    fn left_term(&mut self, candidate: u32) -> f64 {
        self.padded[self.target] = candidate;
        self.term(0)
    }

    fn score(&mut self, candidate: u32) -> f64 {
        self.padded[self.target] = candidate;
        let mut s = 0.0;
        for j in 0..self.n_terms {
            s += self.term(j);
        }
        s
    }

    /// Upper bounds on each right-context term, valid for any candidate.
    fn right_bounds(&self) -> Vec<f64> {
        (1..self.n_terms)
            .map(|j| {
                if self.model.max_ln_backoff() <= 0.0 {
                    self.model.max_ln_prob_of(self.padded[self.target + j])
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    }
}

/// Log score of `candidate` filling the window's target position.
pub fn context_score(
    model: &NgramModel,
    window: &ContextWindow<'_>,
    candidate: u32,
) -> Result<f64> {
    if !model.is_predictable(candidate) {
        return Err(Error::UnknownId(candidate));
    }
    Ok(WindowScorer::new(model, window)?.score(candidate))
}

fn candidate_ids(model: &NgramModel) -> impl Iterator<Item = u32> + '_ {
    model
        .vocab()
        .candidates()
        .filter(move |&id| model.is_predictable(id))
}

/// Higher score first, then lower id.
fn rank(a: &(f64, u32), b: &(f64, u32)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

fn normalize(position: usize, mut scored: Vec<(f64, u32)>) -> SubstituteDistribution {
    scored.sort_unstable_by(rank);
    let Some(&(max, _)) = scored.first() else {
        return SubstituteDistribution {
            position,
            entries: Vec::new(),
        };
    };
    let weights: Vec<f64> = scored.iter().map(|&(s, _)| (s - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let entries = scored
        .iter()
        .zip(&weights)
        .map(|(&(_, id), &w)| (id, w / total))
        .filter(|&(_, p)| p > 0.0)
        .collect();
    SubstituteDistribution { position, entries }
}

/// Scores every candidate and keeps the `k` best, renormalized.
pub fn substitute_distribution(
    model: &NgramModel,
    window: &ContextWindow<'_>,
    k: usize,
) -> Result<SubstituteDistribution> {
    if k == 0 {
        return Err(Error::config("subs.K", "must be at least 1"));
    }
    let mut scorer = WindowScorer::new(model, window)?;
    let mut scored: Vec<(f64, u32)> = candidate_ids(model).map(|c| (scorer.score(c), c)).collect();
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, rank);
        scored.truncate(k);
    }
    Ok(normalize(window.position, scored))
}

#[derive(PartialEq)]
struct Ranked(f64, u32);

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    /// Greater means better: higher score, then lower id.
    fn cmp(&self, other: &Self) -> Ordering {
        rank(&(other.0, other.1), &(self.0, self.1))
    }
}

/// Same output as [`substitute_distribution`], but candidates are visited in
/// order of an upper bound on their score and the search stops once no
/// remaining bound can beat the current K-th best score.
///
/// The bound is the exact left term plus, for each right-context word, the
/// largest probability the model stores for that word. It holds whenever no
/// backoff weight exceeds one, which is true of every Kneser-Ney model;
/// otherwise the search degrades to exhaustive scoring.
pub fn substitute_distribution_pruned(
    model: &NgramModel,
    window: &ContextWindow<'_>,
    k: usize,
) -> Result<SubstituteDistribution> {
    if k == 0 {
        return Err(Error::config("subs.K", "must be at least 1"));
    }
    let mut scorer = WindowScorer::new(model, window)?;
    let right = scorer.right_bounds();
    let mut frontier: BinaryHeap<Ranked> = candidate_ids(model)
        .map(|c| {
            let mut bound = scorer.left_term(c);
            for &u in &right {
                bound += u;
            }
            Ranked(bound, c)
        })
        .collect();

    // Worst retained entry on top.
    let mut best: BinaryHeap<Reverse<Ranked>> = BinaryHeap::with_capacity(k + 1);
    while let Some(Ranked(bound, c)) = frontier.pop() {
        if best.len() == k {
            let kth = best.peek().unwrap().0 .0;
            if bound < kth {
                break;
            }
        }
        let s = scorer.score(c);
        best.push(Reverse(Ranked(s, c)));
        if best.len() > k {
            best.pop();
        }
    }
    let scored = best
        .into_iter()
        .map(|Reverse(Ranked(s, c))| (s, c))
        .collect();
    Ok(normalize(window.position, scored))
}

fn sentence_distributions(
    model: &NgramModel,
    sentence: &[u32],
    k: usize,
    pruned: bool,
) -> Result<Vec<SubstituteDistribution>> {
    (0..sentence.len())
        .map(|p| {
            let window = ContextWindow::new(sentence, p)?;
            if pruned {
                substitute_distribution_pruned(model, &window, k)
            } else {
                substitute_distribution(model, &window, k)
            }
        })
        .collect()
}

/// Distributions for every token of every sentence, in corpus order.
pub fn substitutes_for_corpus<S: AsRef<[u32]> + Sync>(
    model: &NgramModel,
    corpus: &[S],
    k: usize,
    pruned: bool,
) -> Result<Vec<Vec<SubstituteDistribution>>> {
    let run = |(i, s): (usize, &S)| {
        sentence_distributions(model, s.as_ref(), k, pruned).map_err(|e| Error::Sentence {
            sentence: i,
            source: Box::new(e),
        })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        corpus.par_iter().enumerate().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        corpus.iter().enumerate().map(run).collect()
    }
}

/// Formats a probability with six significant digits.
pub fn format_probability(p: f64) -> String {
    if p <= 0.0 || !p.is_finite() {
        return format!("{p}");
    }
    let magnitude = p.log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{p:.decimals$}");
    // Rounding can carry into a new leading digit (0.0999999 -> 0.100000).
    let significant = s
        .chars()
        .filter(char::is_ascii_digit)
        .skip_while(|&c| c == '0')
        .count();
    if significant > 6 && decimals > 0 {
        let decimals = decimals - 1;
        format!("{p:.decimals$}")
    } else {
        s
    }
}

/// Writes one substitute-file line per token and `</s>` after each sentence.
pub fn write_substitutes<W: Write, S: AsRef<str>>(
    mut out: W,
    words: &[S],
    dists: &[SubstituteDistribution],
    model: &NgramModel,
) -> std::io::Result<()> {
    debug_assert_eq!(words.len(), dists.len());
    for (w, d) in words.iter().zip(dists) {
        out.write_all(w.as_ref().as_bytes())?;
        for &(id, p) in &d.entries {
            write!(
                out,
                "\t{} {}",
                model.vocab().word(id),
                format_probability(p)
            )?;
        }
        out.write_all(b"\n")?;
    }
    out.write_all(b"</s>\n")
}

/// Computes and writes substitutes for a tokenized corpus, streaming in
/// batches of sentences. Returns the number of token lines written.
pub fn write_substitutes_for_corpus<W: Write, S: AsRef<str> + Sync>(
    model: &NgramModel,
    corpus: &[Vec<S>],
    k: usize,
    pruned: bool,
    mut out: W,
    name: &str,
) -> Result<usize> {
    const BATCH: usize = 512;
    let mut written = 0;
    for (b, chunk) in corpus.chunks(BATCH).enumerate() {
        let ids: Vec<Vec<u32>> = chunk.iter().map(|s| model.vocab().apply(s)).collect();
        let dists = substitutes_for_corpus(model, &ids, k, pruned).map_err(|e| match e {
            Error::Sentence { sentence, source } => Error::Sentence {
                sentence: sentence + b * BATCH,
                source,
            },
            e => e,
        })?;
        for (i, (words, d)) in chunk.iter().zip(&dists).enumerate() {
            write_substitutes(&mut out, words, d, model).map_err(|e| Error::Sentence {
                sentence: b * BATCH + i,
                source: Box::new(Error::io(name, e)),
            })?;
            written += words.len();
        }
    }
    out.flush().map_err(|e| Error::io(name, e))?;
    Ok(written)
}

/// One parsed line of a substitute file.
#[derive(Clone, Debug, PartialEq)]
pub enum SubstituteLine {
    Token {
        word: String,
        entries: Vec<(String, f64)>,
    },
    EndOfSentence,
}

/// Iterates over the lines of a substitute file.
pub fn read_substitutes<'a, R: BufRead + 'a>(
    input: R,
    name: &'a str,
) -> impl Iterator<Item = Result<SubstituteLine>> + 'a {
    input.lines().enumerate().map(move |(i, line)| {
        let line = line.map_err(|e| Error::io(name, e))?;
        if line == "</s>" {
            return Ok(SubstituteLine::EndOfSentence);
        }
        let mut fields = line.split('\t');
        let word = fields.next().unwrap_or_default().to_string();
        let entries = fields
            .map(|f| {
                let (w, p) = f
                    .rsplit_once(' ')
                    .ok_or_else(|| Error::parse(name, i + 1, "expected `word probability`"))?;
                let p: f64 = p
                    .parse()
                    .map_err(|_| Error::parse(name, i + 1, format!("bad probability `{p}`")))?;
                Ok((w.to_string(), p))
            })
            .collect::<Result<Vec<_>>>()?;
        if entries.is_empty() {
            return Err(Error::parse(name, i + 1, "token line without substitutes"));
        }
        Ok(SubstituteLine::Token { word, entries })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use crate::ngram::CountTable;

    fn model(lines: &[&str], order: usize) -> NgramModel {
        let v = Vocabulary::build(lines, 1).unwrap();
        let ids: Vec<Vec<u32>> = lines
            .iter()
            .map(|l| v.apply(&crate::corpus::tokenize_line(l)))
            .collect();
        NgramModel::estimate_kn(&CountTable::from_sentences(&ids, order, &v).unwrap()).unwrap()
    }

    #[test]
    fn bigram_window_uses_two_terms() {
        let m = model(&["a b c", "a c b", "b a c", "c c a"], 2);
        let v = m.vocab();
        let (a, b, c) = (v.lookup("a"), v.lookup("b"), v.lookup("c"));
        let sent = [a, c, c];
        let w = ContextWindow::new(&sent, 1).unwrap();
        let expected = m.logprob(b, &[a]).unwrap() + m.logprob(c, &[b]).unwrap();
        assert_eq!(context_score(&m, &w, b).unwrap(), expected);
    }

    #[test]
    fn sentence_start_conditions_on_start_marker() {
        let m = model(&["a b c", "a c b", "b a c"], 2);
        let v = m.vocab();
        let (a, b, c) = (v.lookup("a"), v.lookup("b"), v.lookup("c"));
        let sent = [a, c];
        let w = ContextWindow::new(&sent, 0).unwrap();
        let expected = m.logprob(b, &[v.bos_id()]).unwrap() + m.logprob(c, &[b]).unwrap();
        assert_eq!(context_score(&m, &w, b).unwrap(), expected);
    }

    #[test]
    fn sentence_end_includes_end_marker_only() {
        let m = model(&["a b c", "a c b", "b a c"], 3);
        let v = m.vocab();
        let (a, b, c) = (v.lookup("a"), v.lookup("b"), v.lookup("c"));
        let sent = [a, c];
        let w = ContextWindow::new(&sent, 1).unwrap();
        let expected =
            m.logprob(b, &[v.bos_id(), a]).unwrap() + m.logprob(v.eos_id(), &[a, b]).unwrap();
        assert_eq!(context_score(&m, &w, b).unwrap(), expected);
    }

    #[test]
    fn window_context() {
        let sent = [1, 2, 3, 4, 5, 6, 7, 8];
        let w = ContextWindow::new(&sent, 4).unwrap();
        assert_eq!(w.context(4), (&sent[1..4], &sent[5..8]));
        assert!(ContextWindow::new(&sent, 8).is_err());
    }

    #[test]
    fn full_vocabulary_is_normalized() {
        let m = model(&["a b c", "a c b", "b a c", "c c a"], 3);
        let sent = [0, 1, 2];
        let w = ContextWindow::new(&sent, 1).unwrap();
        let d = substitute_distribution(&m, &w, 1000).unwrap();
        assert_eq!(d.entries.len(), m.vocab().candidates().count());
        assert!((d.total() - 1.0).abs() < 1e-9);
        assert!(d.entries.windows(2).all(|p| p[0].1 >= p[1].1));
        assert!(!d
            .entries
            .iter()
            .any(|e| e.0 == m.vocab().bos_id() || e.0 == m.vocab().eos_id()));
    }

    #[test]
    fn pruned_matches_on_tiny_vocabulary() {
        let m = model(&["a b", "b a", "a a"], 2);
        let sent = [0, 1];
        for p in 0..2 {
            let w = ContextWindow::new(&sent, p).unwrap();
            for k in 1..4 {
                assert_eq!(
                    substitute_distribution(&m, &w, k).unwrap(),
                    substitute_distribution_pruned(&m, &w, k).unwrap()
                );
            }
        }
    }

    #[test]
    fn k_must_be_positive() {
        let m = model(&["a b"], 2);
        let w = ContextWindow::new(&[0, 1], 0).unwrap();
        assert!(substitute_distribution(&m, &w, 0).is_err());
        assert!(substitute_distribution_pruned(&m, &w, 0).is_err());
    }

    #[test]
    fn probability_formatting() {
        assert_eq!(format_probability(0.191), "0.191000");
        assert_eq!(format_probability(0.0123456789), "0.0123457");
        assert_eq!(format_probability(1.0), "1.00000");
        assert_eq!(format_probability(0.09999999), "0.100000");
    }

    #[test]
    fn substitute_file_round_trip() {
        let m = model(&["a b c", "a c b", "b a c"], 2);
        let corpus = vec![vec!["a", "b"], vec!["zzz"]];
        let mut buf = Vec::new();
        let n = write_substitutes_for_corpus(&m, &corpus, 2, true, &mut buf, "subs").unwrap();
        assert_eq!(n, 3);
        let lines: Vec<_> = read_substitutes(&buf[..], "subs")
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[2], SubstituteLine::EndOfSentence);
        match &lines[3] {
            SubstituteLine::Token { word, entries } => {
                assert_eq!(word, "zzz");
                assert_eq!(entries.len(), 2);
                let total: f64 = entries.iter().map(|e| e.1).sum();
                assert!((total - 1.0).abs() < 1e-5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
