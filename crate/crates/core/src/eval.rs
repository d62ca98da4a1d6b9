//! Labelled vector tables, the embeddings text format, and intrinsic checks.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Paper-style export scale for feature use.
pub const DEFAULT_SCALE: f64 = 0.1;

/// Word-labelled vectors, as stored in an embeddings file.
#[derive(Clone, Debug, PartialEq)]
pub struct WordVectors {
    words: Vec<String>,
    index: HashMap<String, u32>,
    dim: usize,
    data: Vec<f64>,
}

impl WordVectors {
    pub fn new(words: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != words.len() * dim {
            return Err(Error::DimensionMismatch {
                left: data.len(),
                right: words.len() * dim,
            });
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i as u32).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate word `{w}`")));
            }
        }
        Ok(WordVectors {
            words,
            index,
            dim,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn vector(&self, id: u32) -> &[f64] {
        &self.data[id as usize * self.dim..(id as usize + 1) * self.dim]
    }

    /// Writes the text format: a `count dim` header, then one
    /// `word v1 .. vd` line per word with every component multiplied by
    /// `scale` and printed with six decimals.
    pub fn write<W: Write>(&self, mut out: W, scale: f64) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (i, w) in self.words.iter().enumerate() {
            out.write_all(w.as_bytes())?;
            for v in self.vector(i as u32) {
                write!(out, " {:.6}", v * scale)?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn read<R: BufRead>(input: R, name: &str) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let (count, dim) = match lines.next() {
            Some((_, line)) => {
                let line = line.map_err(|e| Error::io(name, e))?;
                let mut f = line.split_whitespace().map(str::parse::<usize>);
                match (f.next(), f.next(), f.next()) {
                    (Some(Ok(c)), Some(Ok(d)), None) if d > 0 => (c, d),
                    _ => return Err(Error::parse(name, 1, "expected `<count> <dim>` header")),
                }
            }
            None => return Err(Error::parse(name, 1, "empty embeddings file")),
        };
        let mut words = Vec::with_capacity(count);
        let mut data = Vec::with_capacity(count * dim);
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(name, e))?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(' ');
            let word = fields.next().unwrap_or_default();
            let before = data.len();
            for f in fields {
                data.push(
                    f.parse::<f64>()
                        .map_err(|_| Error::parse(name, i + 1, format!("bad component `{f}`")))?,
                );
            }
            if data.len() - before != dim {
                return Err(Error::parse(
                    name,
                    i + 1,
                    format!("expected {dim} components, found {}", data.len() - before),
                ));
            }
            words.push(word.to_string());
        }
        if words.len() != count {
            return Err(Error::parse(
                name,
                1,
                format!("header declares {count} words, file has {}", words.len()),
            ));
        }
        WordVectors::new(words, dim, data)
    }
}

/// Nearest words of a query, closest first.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborList {
    pub query: u32,
    pub neighbors: Vec<(u32, f64)>,
}

fn sq_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// The `k` nearest vectors to `word` by squared Euclidean distance, ties by
/// ascending id. The query itself is excluded.
pub fn nearest_neighbors(vectors: &WordVectors, word: &str, k: usize) -> Result<NeighborList> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let query = vectors
        .id(word)
        .ok_or_else(|| Error::UnknownWord(word.to_string()))?;
    let q = vectors.vector(query);
    let mut scored: Vec<(u32, f64)> = (0..vectors.len() as u32)
        .filter(|&i| i != query)
        .map(|i| (i, sq_dist(q, vectors.vector(i))))
        .collect();
    scored.sort_unstable_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(NeighborList {
        query,
        neighbors: scored,
    })
}

/// Mean squared distance over all unordered pairs of points in the same
/// block, and over all pairs in different blocks.
pub fn block_separation(points: &[&[f64]], blocks: &[usize]) -> Result<(f64, f64)> {
    if points.len() != blocks.len() {
        return Err(Error::LengthMismatch {
            position: points.len().min(blocks.len()),
        });
    }
    let mut sizes: HashMap<usize, usize> = HashMap::new();
    for &b in blocks {
        *sizes.entry(b).or_insert(0) += 1;
    }
    if let Some((b, _)) = sizes.iter().find(|(_, &n)| n < 2) {
        return Err(Error::InvalidArgument(format!(
            "block {b} has a single member; within-block distance is undefined"
        )));
    }
    let (mut within, mut n_within, mut cross, mut n_cross) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = sq_dist(points[i], points[j]);
            if blocks[i] == blocks[j] {
                within += d;
                n_within += 1;
            } else {
                cross += d;
                n_cross += 1;
            }
        }
    }
    if n_cross == 0 {
        return Err(Error::InvalidArgument("only one block".into()));
    }
    Ok((within / n_within as f64, cross / n_cross as f64))
}

/// Writes `vectors` scaled by `sigma`; the table itself is not modified.
pub fn export_scaled<W: Write>(vectors: &WordVectors, sigma: f64, out: W) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::config("sigma", "must be positive"));
    }
    vectors
        .write(out, sigma)
        .map_err(|e| Error::io("embeddings", e))
}
