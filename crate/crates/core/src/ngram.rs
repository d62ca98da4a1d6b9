//! Order-n language model with interpolated Kneser-Ney smoothing.
//!
//! Every sentence is padded with `order - 1` start markers and one end
//! marker before counting, and queries use the same padding. The model is
//! stored in backoff form: a probability for each seen n-gram and a backoff
//! weight for each seen context, which is exact for interpolated smoothing
//! because an unseen continuation of `h` receives `gamma(h) * P(w | h')`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rustc_hash::FxHashMap;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// Largest supported model order.
pub const MAX_ORDER: usize = 8;

/// ARPA files mark impossible events (e.g. predicting `<s>`) with this log10 value.
const ARPA_NO_PROB: f64 = -99.0;

/// Raw n-gram counts for every order up to `order`.
#[derive(Clone, Debug, PartialEq)]
pub struct CountTable {
    order: usize,
    counts: Vec<BTreeMap<Vec<u32>, u64>>,
    vocab: Vocabulary,
}

impl CountTable {
    /// Counts all k-grams (k <= order) of the padded sentences.
    pub fn from_sentences<S: AsRef<[u32]>>(
        sentences: &[S],
        order: usize,
        vocab: &Vocabulary,
    ) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::config(
                "lm.order",
                format!("must be between 1 and {MAX_ORDER}, got {order}"),
            ));
        }
        let mut counts = vec![BTreeMap::new(); order];
        let mut padded = Vec::new();
        for sentence in sentences {
            let sentence = sentence.as_ref();
            if let Some(&bad) = sentence.iter().find(|&&id| id as usize >= vocab.len()) {
                return Err(Error::UnknownId(bad));
            }
            padded.clear();
            padded.resize(order - 1, vocab.bos_id());
            padded.extend_from_slice(sentence);
            padded.push(vocab.eos_id());
            for target in order - 1..padded.len() {
                for k in 1..=order {
                    let gram = &padded[target + 1 - k..=target];
                    *counts[k - 1].entry(gram.to_vec()).or_insert(0) += 1;
                }
            }
        }
        Ok(CountTable {
            order,
            counts,
            vocab: vocab.clone(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(BTreeMap::is_empty)
    }

    pub fn get(&self, gram: &[u32]) -> u64 {
        if gram.is_empty() || gram.len() > self.order {
            return 0;
        }
        self.counts[gram.len() - 1].get(gram).copied().unwrap_or(0)
    }

    /// All stored k-grams of one order with their counts.
    pub fn grams(&self, k: usize) -> &BTreeMap<Vec<u32>, u64> {
        &self.counts[k - 1]
    }

    /// Adds `by` to the count of a single stored n-gram, leaving all other
    /// orders untouched.
    pub fn add(&mut self, gram: &[u32], by: u64) {
        assert!(!gram.is_empty() && gram.len() <= self.order);
        *self.counts[gram.len() - 1]
            .entry(gram.to_vec())
            .or_insert(0) += by;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Entry {
    /// Natural-log conditional probability, `None` for pure contexts.
    ln_prob: Option<f64>,
    /// Natural-log backoff weight, `None` when the n-gram is never a context.
    ln_backoff: Option<f64>,
}

/// Queryable language model interface shared by the smoothed model and
/// simple baselines.
pub trait LanguageModel {
    fn order(&self) -> usize;

    fn vocab(&self) -> &Vocabulary;

    /// Natural-log probability of `word` after `history`.
    fn logprob(&self, word: u32, history: &[u32]) -> Result<f64>;
}

/// Backoff-form n-gram model. Immutable once built.
#[derive(Clone, Debug)]
pub struct NgramModel {
    order: usize,
    vocab: Vocabulary,
    tables: Vec<FxHashMap<Box<[u32]>, Entry>>,
    discounts: Vec<f64>,
    max_target_ln_prob: Vec<f64>,
    max_ln_backoff: f64,
}

fn discount_for(counts: impl Iterator<Item = u64>) -> f64 {
    let (mut n1, mut n2) = (0u64, 0u64);
    for c in counts {
        match c {
            1 => n1 += 1,
            2 => n2 += 1,
            _ => {}
        }
    }
    if n1 == 0 || n2 == 0 {
        0.5
    } else {
        n1 as f64 / (n1 as f64 + 2.0 * n2 as f64)
    }
}

/// Parsed ARPA line: source line, words, log10 prob (None for -99), log10 backoff.
type RawEntry<'a> = (usize, Vec<&'a str>, Option<f64>, Option<f64>);

impl NgramModel {
    /// Estimates an interpolated Kneser-Ney model with one discount per order.
    ///
    /// The highest order uses raw counts; lower orders use continuation
    /// counts (number of distinct left extensions). The unigram level
    /// interpolates with the uniform distribution over every predictable id.
    pub fn estimate_kn(counts: &CountTable) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let order = counts.order;
        let vocab = counts.vocab.clone();

        // Modified counts: raw at the top order, continuation counts below.
        let mut modified: Vec<BTreeMap<Vec<u32>, u64>> = Vec::with_capacity(order);
        for k in 1..=order {
            if k == order {
                modified.push(counts.counts[k - 1].clone());
            } else {
                let mut cont = BTreeMap::new();
                for gram in counts.counts[k].keys() {
                    *cont.entry(gram[1..].to_vec()).or_insert(0) += 1;
                }
                modified.push(cont);
            }
        }
        let discounts: Vec<f64> = modified
            .iter()
            .map(|m| discount_for(m.values().copied()))
            .collect();

        let mut model = NgramModel {
            order,
            vocab,
            tables: vec![FxHashMap::default(); order],
            discounts,
            max_target_ln_prob: Vec::new(),
            max_ln_backoff: 0.0,
        };

        // Unigrams.
        let d1 = model.discounts[0];
        let total: u64 = modified[0].values().sum();
        let types = modified[0].len() as f64;
        let n_pred = model.vocab.predictable().count() as f64;
        let predictable: Vec<u32> = model.vocab.predictable().collect();
        for w in predictable {
            let c = modified[0].get([w].as_slice()).copied().unwrap_or(0) as f64;
            let p = ((c - d1).max(0.0) + d1 * types / n_pred) / total as f64;
            model.tables[0].entry(Box::new([w])).or_default().ln_prob = Some(p.ln());
        }

        for k in 2..=order {
            let d = model.discounts[k - 1];
            // context -> (total count, distinct successors)
            let mut contexts: BTreeMap<&[u32], (u64, u64)> = BTreeMap::new();
            for (gram, &c) in &modified[k - 1] {
                let e = contexts.entry(&gram[..k - 1]).or_insert((0, 0));
                e.0 += c;
                e.1 += 1;
            }
            let mut new_entries = Vec::with_capacity(modified[k - 1].len());
            for (gram, &c) in &modified[k - 1] {
                let (hist, w) = (&gram[..k - 1], gram[k - 1]);
                let (total, types) = contexts[hist];
                let gamma = d * types as f64 / total as f64;
                let lower = model.ln_prob(w, &hist[1..]).exp();
                let p = (c as f64 - d).max(0.0) / total as f64 + gamma * lower;
                new_entries.push((gram.clone(), p.ln()));
            }
            for (hist, (total, types)) in contexts {
                let gamma = d * types as f64 / total as f64;
                model.tables[k - 2]
                    .entry(hist.into())
                    .or_default()
                    .ln_backoff = Some(gamma.ln());
            }
            for (gram, lp) in new_entries {
                model.tables[k - 1]
                    .entry(gram.into_boxed_slice())
                    .or_default()
                    .ln_prob = Some(lp);
            }
        }
        model.index_bounds();
        Ok(model)
    }

    /// Order-1 model assigning `1 / |predictable ids|` to every word.
    pub fn uniform(vocab: &Vocabulary) -> Self {
        let n = vocab.predictable().count() as f64;
        let mut table = FxHashMap::default();
        for w in vocab.predictable() {
            table.insert(
                vec![w].into_boxed_slice(),
                Entry {
                    ln_prob: Some(-n.ln()),
                    ln_backoff: None,
                },
            );
        }
        let mut model = NgramModel {
            order: 1,
            vocab: vocab.clone(),
            tables: vec![table],
            discounts: vec![0.0],
            max_target_ln_prob: Vec::new(),
            max_ln_backoff: 0.0,
        };
        model.index_bounds();
        model
    }

    fn index_bounds(&mut self) {
        let mut max_target = vec![f64::NEG_INFINITY; self.vocab.len()];
        let mut max_bo = f64::NEG_INFINITY;
        for table in &self.tables {
            for (gram, e) in table {
                if let Some(lp) = e.ln_prob {
                    let slot = &mut max_target[*gram.last().unwrap() as usize];
                    *slot = slot.max(lp);
                }
                if let Some(bo) = e.ln_backoff {
                    max_bo = max_bo.max(bo);
                }
            }
        }
        self.max_target_ln_prob = max_target;
        self.max_ln_backoff = max_bo.max(0.0);
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Discount used at order `k` (1-based).
    pub fn discount(&self, k: usize) -> f64 {
        self.discounts[k - 1]
    }

    /// Whether `word` has a unigram probability, i.e. can be predicted.
    pub fn is_predictable(&self, word: u32) -> bool {
        self.tables[0]
            .get([word].as_slice())
            .is_some_and(|e| e.ln_prob.is_some())
    }

    /// Largest stored log-probability of any n-gram ending in `word`.
    ///
    /// When every backoff weight is at most one this bounds
    /// `logprob(word, h)` from above for any history `h`.
    pub fn max_ln_prob_of(&self, word: u32) -> f64 {
        self.max_target_ln_prob
            .get(word as usize)
            .copied()
            .unwrap_or(f64::NEG_INFINITY)
    }

    /// Whether `gram` (history followed by word) has a stored probability.
    pub fn contains(&self, gram: &[u32]) -> bool {
        gram.len()
            .checked_sub(1)
            .and_then(|k| self.tables.get(k))
            .and_then(|t| t.get(gram))
            .is_some_and(|e| e.ln_prob.is_some())
    }

    /// Natural-log backoff weight of `context`; zero if it has none.
    pub fn ln_backoff(&self, context: &[u32]) -> f64 {
        context
            .len()
            .checked_sub(1)
            .and_then(|k| self.tables.get(k))
            .and_then(|t| t.get(context))
            .and_then(|e| e.ln_backoff)
            .unwrap_or(0.0)
    }

    /// Largest backoff weight in the model, clamped below at `ln 1 = 0`.
    pub fn max_ln_backoff(&self) -> f64 {
        self.max_ln_backoff
    }

    /// Backoff-recursion lookup. Returns `-inf` for unpredictable words.
    pub(crate) fn ln_prob(&self, word: u32, history: &[u32]) -> f64 {
        let history = &history[history.len().saturating_sub(self.order - 1)..];
        let mut key = [0u32; MAX_ORDER];
        let mut acc = 0.0;
        for start in 0..=history.len() {
            let hist = &history[start..];
            let n = hist.len();
            key[..n].copy_from_slice(hist);
            key[n] = word;
            if let Some(lp) = self.tables[n].get(&key[..=n]).and_then(|e| e.ln_prob) {
                return acc + lp;
            }
            if n > 0 {
                if let Some(bo) = self.tables[n - 1].get(hist).and_then(|e| e.ln_backoff) {
                    acc += bo;
                }
            }
        }
        f64::NEG_INFINITY
    }

    /// Natural-log conditional probability. Histories longer than
    /// `order - 1` are truncated to their most recent words.
    pub fn logprob(&self, word: u32, history: &[u32]) -> Result<f64> {
        if word as usize >= self.vocab.len() || !self.is_predictable(word) {
            return Err(Error::UnknownId(word));
        }
        if let Some(&bad) = history.iter().find(|&&h| h as usize >= self.vocab.len()) {
            return Err(Error::UnknownId(bad));
        }
        Ok(self.ln_prob(word, history))
    }

    /// Writes the model in ARPA format (log10, six decimals).
    pub fn write_arpa<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let sorted: Vec<Vec<(&[u32], &Entry)>> = self
            .tables
            .iter()
            .map(|t| {
                let mut v: Vec<_> = t.iter().map(|(k, e)| (&k[..], e)).collect();
                v.sort_unstable_by(|a, b| a.0.cmp(b.0));
                v
            })
            .collect();

        writeln!(out, "\\data\\")?;
        for (k, entries) in sorted.iter().enumerate() {
            writeln!(out, "ngram {}={}", k + 1, entries.len())?;
        }
        let ln10 = std::f64::consts::LN_10;
        for (k, entries) in sorted.iter().enumerate() {
            writeln!(out)?;
            writeln!(out, "\\{}-grams:", k + 1)?;
            for (gram, e) in entries {
                let lp = e.ln_prob.map_or(ARPA_NO_PROB, |p| p / ln10);
                write!(out, "{lp:.6}\t")?;
                for (i, &id) in gram.iter().enumerate() {
                    if i > 0 {
                        write!(out, " ")?;
                    }
                    write!(out, "{}", self.vocab.word(id))?;
                }
                if let Some(bo) = e.ln_backoff {
                    write!(out, "\t{:.6}", bo / ln10)?;
                }
                writeln!(out)?;
            }
        }
        writeln!(out)?;
        writeln!(out, "\\end\\")?;
        Ok(())
    }

    /// Parses an ARPA file. Vocabulary ids follow the unigram section order.
    pub fn read_arpa<R: BufRead>(input: R, name: &str) -> Result<Self> {
        let mut lines = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io(name, e))?;
            lines.push((i + 1, line));
        }
        let mut it = lines
            .iter()
            .map(|(n, l)| (*n, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .peekable();

        // Anything before \data\ is a free-form header.
        loop {
            match it.next() {
                Some((_, "\\data\\")) => break,
                Some(_) => continue,
                None => return Err(Error::parse(name, 0, "missing \\data\\ section")),
            }
        }
        let mut declared = Vec::new();
        while let Some(&(n, l)) = it.peek() {
            let Some(rest) = l.strip_prefix("ngram ") else {
                break;
            };
            it.next();
            let (k, c) = rest
                .split_once('=')
                .ok_or_else(|| Error::parse(name, n, "expected `ngram k=count`"))?;
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| Error::parse(name, n, "bad order in ngram count"))?;
            let c: usize = c
                .trim()
                .parse()
                .map_err(|_| Error::parse(name, n, "bad count in ngram count"))?;
            if k != declared.len() + 1 {
                return Err(Error::parse(name, n, format!("unexpected order {k}")));
            }
            declared.push(c);
        }
        let order = declared.len();
        if order == 0 || order > MAX_ORDER {
            return Err(Error::parse(
                name,
                0,
                format!("unsupported model order {order}"),
            ));
        }

        let ln10 = std::f64::consts::LN_10;
        let mut raw: Vec<Vec<RawEntry>> = Vec::new();
        for k in 1..=order {
            let (n, header) = it
                .next()
                .ok_or_else(|| Error::parse(name, 0, format!("missing \\{k}-grams: section")))?;
            if header != format!("\\{k}-grams:") {
                return Err(Error::parse(
                    name,
                    n,
                    format!("expected \\{k}-grams:, found `{header}`"),
                ));
            }
            let mut entries = Vec::new();
            while let Some(&(n, l)) = it.peek() {
                if l.starts_with('\\') {
                    break;
                }
                it.next();
                let fields: Vec<&str> = l.split_whitespace().collect();
                if fields.len() != k + 1 && fields.len() != k + 2 {
                    return Err(Error::parse(
                        name,
                        n,
                        format!("expected {} or {} fields", k + 1, k + 2),
                    ));
                }
                let parse_f = |s: &str| {
                    s.parse::<f64>()
                        .map_err(|_| Error::parse(name, n, format!("bad number `{s}`")))
                };
                let lp = parse_f(fields[0])?;
                let ln_prob = (lp > ARPA_NO_PROB).then_some(lp * ln10);
                let ln_backoff = match fields.get(k + 1) {
                    Some(s) => Some(parse_f(s)? * ln10),
                    None => None,
                };
                entries.push((n, fields[1..=k].to_vec(), ln_prob, ln_backoff));
            }
            if entries.len() != declared[k - 1] {
                return Err(Error::parse(
                    name,
                    n,
                    format!(
                        "\\{k}-grams: declares {} entries in \\data\\ but has {}",
                        declared[k - 1],
                        entries.len()
                    ),
                ));
            }
            raw.push(entries);
        }
        match it.next() {
            Some((_, "\\end\\")) => {}
            Some((n, l)) => return Err(Error::parse(name, n, format!("unexpected `{l}`"))),
            None => return Err(Error::parse(name, 0, "missing \\end\\")),
        }

        let vocab =
            Vocabulary::from_words(raw[0].iter().map(|(_, words, _, _)| words[0].to_string()))?;
        let mut tables = Vec::with_capacity(order);
        for entries in &raw {
            let mut table = FxHashMap::default();
            for (n, words, ln_prob, ln_backoff) in entries {
                let gram = words
                    .iter()
                    .map(|w| {
                        vocab.id(w).ok_or_else(|| {
                            Error::parse(name, *n, format!("word `{w}` not in unigrams"))
                        })
                    })
                    .collect::<Result<Vec<u32>>>()?;
                table.insert(
                    gram.into_boxed_slice(),
                    Entry {
                        ln_prob: *ln_prob,
                        ln_backoff: *ln_backoff,
                    },
                );
            }
            tables.push(table);
        }
        let mut model = NgramModel {
            order,
            vocab,
            tables,
            discounts: vec![f64::NAN; order],
            max_target_ln_prob: Vec::new(),
            max_ln_backoff: 0.0,
        };
        model.index_bounds();
        Ok(model)
    }
}

impl LanguageModel for NgramModel {
    fn order(&self) -> usize {
        self.order
    }

    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn logprob(&self, word: u32, history: &[u32]) -> Result<f64> {
        NgramModel::logprob(self, word, history)
    }
}

/// `10^(-(sum of log10 P) / T)` over every token and end marker of the corpus.
pub fn perplexity<M: LanguageModel, S: AsRef<[u32]>>(model: &M, corpus: &[S]) -> Result<f64> {
    let vocab = model.vocab();
    let mut total = 0.0;
    let mut n_predicted = 0usize;
    let mut padded = Vec::new();
    for sentence in corpus {
        padded.clear();
        padded.resize(model.order() - 1, vocab.bos_id());
        padded.extend_from_slice(sentence.as_ref());
        padded.push(vocab.eos_id());
        for i in model.order() - 1..padded.len() {
            let lo = i + 1 - model.order();
            total += model.logprob(padded[i], &padded[lo..i])?;
            n_predicted += 1;
        }
    }
    if n_predicted == 0 {
        return Err(Error::EmptyCorpus);
    }
    let log10_sum = total / std::f64::consts::LN_10;
    Ok(10f64.powf(-log10_sum / n_predicted as f64))
}
