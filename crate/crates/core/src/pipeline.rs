//! File-level stages of the corpus-to-embeddings pipeline.
//!
//! Each stage reads and writes the formats of its module and records a
//! `<output>.manifest` next to its main output. [`run_all`] chains the
//! stages with seeds derived from the single top-level seed.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::corpus::{keep_line, tokenize_line, Vocabulary};
use crate::discretize::{sample_substitute_file, CooccurrencePair};
use crate::error::{Error, Result};
use crate::eval::{export_scaled, nearest_neighbors, WordVectors};
use crate::ngram::{perplexity, CountTable, NgramModel};
use crate::scode::{train, EmbeddingSet, TrainConfig, TrainOutcome};
use crate::substitutes::write_substitutes_for_corpus;

fn name(path: &Path) -> String {
    path.display().to_string()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Reads a UTF-8 corpus, one sentence per line.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    let mut reader = open(path)?;
    let mut buf = Vec::new();
    let mut n = 0;
    loop {
        buf.clear();
        let read = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::io(path, e))?;
        if read == 0 {
            break;
        }
        n += 1;
        let line = std::str::from_utf8(&buf)
            .map_err(|e| Error::parse(name(path), n, format!("invalid UTF-8: {e}")))?;
        lines.push(line.trim_end_matches(['\n', '\r']).to_string());
    }
    Ok(lines)
}

/// SHA-256 of a file's bytes, hex encoded.
pub fn file_digest(path: &Path) -> Result<String> {
    let mut reader = open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Writes a manifest with the config digest, seed, and input/output digests.
pub fn write_manifest(
    path: &Path,
    config: &PipelineConfig,
    seed: u64,
    inputs: &[&Path],
    outputs: &[&Path],
) -> Result<()> {
    let mut out = create(path)?;
    let mut text = format!("config_sha256 {}\nseed {}\n", config.digest(), seed);
    for (kind, paths) in [("input", inputs), ("output", outputs)] {
        for p in paths {
            text.push_str(&format!("{kind} {} {}\n", p.display(), file_digest(p)?));
        }
    }
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

fn tokenized(lines: &[String]) -> Vec<Vec<&str>> {
    lines.iter().map(|l| tokenize_line(l)).collect()
}

/// Keeps the lines passing the lowercase filter. Returns the kept count.
pub fn clean_file(input: &Path, output: &Path, ratio: f64, cfg: &PipelineConfig) -> Result<usize> {
    let lines = read_lines(input)?;
    let mut out = create(output)?;
    let mut kept = 0;
    for l in lines.iter().filter(|l| keep_line(l, ratio)) {
        writeln!(out, "{l}").map_err(|e| Error::io(output, e))?;
        kept += 1;
    }
    out.flush().map_err(|e| Error::io(output, e))?;
    write_manifest(&manifest_path(output), cfg, cfg.seed, &[input], &[output])?;
    Ok(kept)
}

pub fn vocab_file(
    corpus: &Path,
    min_count: u64,
    output: &Path,
    cfg: &PipelineConfig,
) -> Result<Vocabulary> {
    let lines = read_lines(corpus)?;
    let vocab = Vocabulary::build(&lines, min_count)?;
    let mut out = create(output)?;
    vocab
        .write_tsv(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(output, e))?;
    write_manifest(&manifest_path(output), cfg, cfg.seed, &[corpus], &[output])?;
    Ok(vocab)
}

pub fn read_vocab(path: &Path) -> Result<Vocabulary> {
    Vocabulary::read_tsv(open(path)?, &name(path))
}

pub fn read_model(path: &Path) -> Result<NgramModel> {
    NgramModel::read_arpa(open(path)?, &name(path))
}

pub fn lm_train_file(
    corpus: &Path,
    vocab: &Path,
    order: usize,
    output: &Path,
    cfg: &PipelineConfig,
) -> Result<NgramModel> {
    let voc = read_vocab(vocab)?;
    let lines = read_lines(corpus)?;
    let ids: Vec<Vec<u32>> = tokenized(&lines).iter().map(|s| voc.apply(s)).collect();
    let counts = CountTable::from_sentences(&ids, order, &voc)?;
    let model = NgramModel::estimate_kn(&counts)?;
    let mut out = create(output)?;
    model
        .write_arpa(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(output, e))?;
    write_manifest(
        &manifest_path(output),
        cfg,
        cfg.seed,
        &[corpus, vocab],
        &[output],
    )?;
    Ok(model)
}

pub fn lm_ppl_file(lm: &Path, corpus: &Path) -> Result<f64> {
    let model = read_model(lm)?;
    let lines = read_lines(corpus)?;
    let ids: Vec<Vec<u32>> = tokenized(&lines)
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| model.vocab().apply(s))
        .collect();
    perplexity(&model, &ids)
}

/// Writes the substitute file for every non-empty line of `corpus`.
pub fn subs_file(
    lm: &Path,
    corpus: &Path,
    k: usize,
    pruned: bool,
    output: &Path,
    cfg: &PipelineConfig,
) -> Result<usize> {
    let model = read_model(lm)?;
    let lines = read_lines(corpus)?;
    let sentences: Vec<Vec<&str>> = tokenized(&lines)
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect();
    let out = create(output)?;
    let n = write_substitutes_for_corpus(&model, &sentences, k, pruned, out, &name(output))?;
    write_manifest(
        &manifest_path(output),
        cfg,
        cfg.seed,
        &[lm, corpus],
        &[output],
    )?;
    Ok(n)
}

pub fn sample_file(
    subs: &Path,
    s: usize,
    seed: u64,
    output: &Path,
    cfg: &PipelineConfig,
) -> Result<usize> {
    let out = create(output)?;
    let n = sample_substitute_file(open(subs)?, &name(subs), out, &name(output), s, seed)?;
    write_manifest(&manifest_path(output), cfg, seed, &[subs], &[output])?;
    Ok(n)
}

/// Pairs read from a pairs file, with both vocabularies ranked by
/// descending frequency and then byte order.
#[derive(Clone, Debug)]
pub struct PairData {
    pub x_words: Vec<String>,
    pub y_words: Vec<String>,
    pub pairs: Vec<CooccurrencePair>,
}

fn rank_words(counts: HashMap<String, u64>) -> (Vec<String>, HashMap<String, u32>) {
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let words: Vec<String> = ranked.into_iter().map(|(w, _)| w).collect();
    let index = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i as u32))
        .collect();
    (words, index)
}

pub fn read_pairs(path: &Path) -> Result<PairData> {
    let mut raw: Vec<(u32, u32)> = Vec::new();
    let mut x_tmp: HashMap<String, u32> = HashMap::new();
    let mut y_tmp: HashMap<String, u32> = HashMap::new();
    let mut x_names = Vec::new();
    let mut y_names = Vec::new();
    let intern = |map: &mut HashMap<String, u32>, names: &mut Vec<String>, w: &str| {
        if let Some(&id) = map.get(w) {
            return id;
        }
        let id = names.len() as u32;
        map.insert(w.to_string(), id);
        names.push(w.to_string());
        id
    };
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let (x, y) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(name(path), i + 1, "expected `x<TAB>y`"))?;
        let xi = intern(&mut x_tmp, &mut x_names, x);
        let yi = intern(&mut y_tmp, &mut y_names, y);
        raw.push((xi, yi));
    }
    if raw.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{}: no co-occurrence pairs",
            path.display()
        )));
    }
    let mut x_counts = vec![0u64; x_names.len()];
    let mut y_counts = vec![0u64; y_names.len()];
    for &(x, y) in &raw {
        x_counts[x as usize] += 1;
        y_counts[y as usize] += 1;
    }
    let (x_words, x_index) = rank_words(x_names.iter().cloned().zip(x_counts).collect());
    let (y_words, y_index) = rank_words(y_names.iter().cloned().zip(y_counts).collect());
    let x_map: Vec<u32> = x_names.iter().map(|w| x_index[w]).collect();
    let y_map: Vec<u32> = y_names.iter().map(|w| y_index[w]).collect();
    let pairs = raw
        .into_iter()
        .map(|(x, y)| CooccurrencePair {
            x: x_map[x as usize],
            y: y_map[y as usize],
        })
        .collect();
    Ok(PairData {
        x_words,
        y_words,
        pairs,
    })
}

/// Trained embeddings with the word labels of both sides.
#[derive(Clone, Debug)]
pub struct TrainedEmbeddings {
    pub x_words: Vec<String>,
    pub y_words: Vec<String>,
    pub outcome: TrainOutcome,
}

impl TrainedEmbeddings {
    pub fn embeddings(&self) -> &EmbeddingSet {
        &self.outcome.embeddings
    }

    /// The word-type vectors, the default export.
    pub fn phi_vectors(&self) -> WordVectors {
        let e = self.embeddings();
        WordVectors::new(self.x_words.clone(), e.dim(), e.phi_rows().to_vec())
            .expect("phi rows match x words")
    }

    pub fn psi_vectors(&self) -> WordVectors {
        let e = self.embeddings();
        WordVectors::new(self.y_words.clone(), e.dim(), e.psi_rows().to_vec())
            .expect("psi rows match y words")
    }
}

pub fn train_file(
    pairs: &Path,
    train_cfg: &TrainConfig,
    phi_out: &Path,
    psi_out: Option<&Path>,
    cfg: &PipelineConfig,
) -> Result<TrainedEmbeddings> {
    let data = read_pairs(pairs)?;
    let outcome = train(
        &data.pairs,
        data.x_words.len(),
        data.y_words.len(),
        train_cfg,
    )?;
    let trained = TrainedEmbeddings {
        x_words: data.x_words,
        y_words: data.y_words,
        outcome,
    };
    let mut outputs = vec![phi_out];
    let mut out = create(phi_out)?;
    trained
        .phi_vectors()
        .write(&mut out, 1.0)
        .map_err(|e| Error::io(phi_out, e))?;
    if let Some(psi) = psi_out {
        let mut out = create(psi)?;
        trained
            .psi_vectors()
            .write(&mut out, 1.0)
            .map_err(|e| Error::io(psi, e))?;
        outputs.push(psi);
    }
    write_manifest(
        &manifest_path(phi_out),
        cfg,
        train_cfg.seed,
        &[pairs],
        &outputs,
    )?;
    Ok(trained)
}

pub fn read_embeddings(path: &Path) -> Result<WordVectors> {
    WordVectors::read(open(path)?, &name(path))
}

pub fn neighbors_file(embeddings: &Path, word: &str, k: usize) -> Result<Vec<(String, f64)>> {
    let table = read_embeddings(embeddings)?;
    let nn = nearest_neighbors(&table, word, k)?;
    Ok(nn
        .neighbors
        .into_iter()
        .map(|(i, d)| (table.words()[i as usize].clone(), d))
        .collect())
}

pub fn export_file(
    embeddings: &Path,
    sigma: f64,
    output: &Path,
    cfg: &PipelineConfig,
) -> Result<()> {
    let table = read_embeddings(embeddings)?;
    let out = create(output)?;
    export_scaled(&table, sigma, out)?;
    write_manifest(
        &manifest_path(output),
        cfg,
        cfg.seed,
        &[embeddings],
        &[output],
    )
}

/// Paths of every artifact `run_all` writes under the output directory.
#[derive(Clone, Debug)]
pub struct RunPaths {
    pub lm_clean: PathBuf,
    pub embed_clean: PathBuf,
    pub vocab: PathBuf,
    pub lm: PathBuf,
    pub subs: PathBuf,
    pub pairs: PathBuf,
    pub embeddings: PathBuf,
    pub psi_embeddings: PathBuf,
    pub manifest: PathBuf,
}

impl RunPaths {
    pub fn new(dir: &Path) -> Self {
        RunPaths {
            lm_clean: dir.join("lm_corpus.clean.txt"),
            embed_clean: dir.join("embed_corpus.clean.txt"),
            vocab: dir.join("vocab.tsv"),
            lm: dir.join("lm.arpa"),
            subs: dir.join("substitutes.txt"),
            pairs: dir.join("pairs.tsv"),
            embeddings: dir.join("embeddings.txt"),
            psi_embeddings: dir.join("embeddings.psi.txt"),
            manifest: dir.join("manifest.txt"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub paths: RunPaths,
    pub vocab_size: usize,
    pub tokens: usize,
    pub trained: TrainedEmbeddings,
}

/// Runs clean (when configured), vocab, lm-train, subs, sample and train.
pub fn run_all(cfg: &PipelineConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let lm_corpus = cfg
        .lm_corpus
        .clone()
        .ok_or_else(|| Error::config("corpus.lm", "no LM corpus given"))?;
    let embed_corpus = cfg
        .embed_corpus
        .clone()
        .unwrap_or_else(|| lm_corpus.clone());
    let paths = RunPaths::new(&cfg.out_dir);

    let (lm_input, embed_input) = match cfg.lowercase_ratio {
        Some(ratio) => {
            clean_file(&lm_corpus, &paths.lm_clean, ratio, cfg)?;
            clean_file(&embed_corpus, &paths.embed_clean, ratio, cfg)?;
            (paths.lm_clean.clone(), paths.embed_clean.clone())
        }
        None => (lm_corpus.clone(), embed_corpus.clone()),
    };

    let vocab = vocab_file(&lm_input, cfg.min_count, &paths.vocab, cfg)?;
    lm_train_file(&lm_input, &paths.vocab, cfg.order, &paths.lm, cfg)?;
    let tokens = subs_file(
        &paths.lm,
        &embed_input,
        cfg.top_k,
        cfg.pruned,
        &paths.subs,
        cfg,
    )?;
    sample_file(
        &paths.subs,
        cfg.samples,
        cfg.sample_seed(),
        &paths.pairs,
        cfg,
    )?;
    let trained = train_file(
        &paths.pairs,
        &cfg.train_config(),
        &paths.embeddings,
        Some(&paths.psi_embeddings),
        cfg,
    )?;

    let mut inputs: Vec<&Path> = vec![&lm_corpus];
    if embed_corpus != lm_corpus {
        inputs.push(&embed_corpus);
    }
    write_manifest(
        &paths.manifest,
        cfg,
        cfg.seed,
        &inputs,
        &[
            &paths.vocab,
            &paths.lm,
            &paths.subs,
            &paths.pairs,
            &paths.embeddings,
            &paths.psi_embeddings,
        ],
    )?;

    Ok(RunSummary {
        paths,
        vocab_size: vocab.len(),
        tokens,
        trained,
    })
}
