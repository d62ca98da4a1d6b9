mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use subscode::pipeline::{self, run_all, RunPaths};
use subscode::{Error, PipelineConfig};

fn small_config(dir: &Path, corpus: &Path) -> PipelineConfig {
    PipelineConfig {
        lm_corpus: Some(corpus.to_path_buf()),
        out_dir: dir.join("out"),
        top_k: 10,
        samples: 5,
        dim: 5,
        epochs: 2,
        ..PipelineConfig::default()
    }
}

fn write_corpus(dir: &Path, n: usize) -> std::path::PathBuf {
    let path = dir.join("corpus.txt");
    let lines: Vec<String> = common::sample_corpus().into_iter().take(n).collect();
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

#[test]
fn run_all_equals_manual_stages() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path(), 400);
    let cfg = small_config(tmp.path(), &corpus);
    let summary = run_all(&cfg).unwrap();

    let manual = tmp.path().join("manual");
    fs::create_dir_all(&manual).unwrap();
    let p = RunPaths::new(&manual);
    pipeline::vocab_file(&corpus, cfg.min_count, &p.vocab, &cfg).unwrap();
    pipeline::lm_train_file(&corpus, &p.vocab, cfg.order, &p.lm, &cfg).unwrap();
    pipeline::subs_file(&p.lm, &corpus, cfg.top_k, cfg.pruned, &p.subs, &cfg).unwrap();
    pipeline::sample_file(&p.subs, cfg.samples, cfg.sample_seed(), &p.pairs, &cfg).unwrap();
    pipeline::train_file(&p.pairs, &cfg.train_config(), &p.embeddings, None, &cfg).unwrap();

    for (a, b) in [
        (&summary.paths.vocab, &p.vocab),
        (&summary.paths.lm, &p.lm),
        (&summary.paths.subs, &p.subs),
        (&summary.paths.pairs, &p.pairs),
        (&summary.paths.embeddings, &p.embeddings),
    ] {
        assert_eq!(
            fs::read(a).unwrap(),
            fs::read(b).unwrap(),
            "{}",
            a.display()
        );
    }
}

#[test]
fn embeddings_cover_every_corpus_type() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path(), 300);
    let summary = run_all(&small_config(tmp.path(), &corpus)).unwrap();
    let types: BTreeSet<String> = fs::read_to_string(&corpus)
        .unwrap()
        .split_whitespace()
        .map(str::to_owned)
        .collect();
    let text = fs::read_to_string(&summary.paths.embeddings).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), format!("{} 5", types.len()));
    let words: BTreeSet<String> = lines
        .map(|l| l.split(' ').next().unwrap().to_owned())
        .collect();
    assert_eq!(words, types);

    assert!(summary
        .trained
        .embeddings()
        .norms()
        .all(|n| (n - 1.0).abs() <= 1e-6));
    // Six printed decimals bound the norm error of a stored vector.
    let stored = pipeline::read_embeddings(&summary.paths.embeddings).unwrap();
    for i in 0..stored.len() as u32 {
        let n: f64 = stored.vector(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() <= 1e-5);
    }
}

#[test]
fn manifests_track_inputs_and_config() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = write_corpus(tmp.path(), 200);
    let cfg = small_config(tmp.path(), &corpus);
    let vocab = tmp.path().join("v.tsv");
    pipeline::vocab_file(&corpus, 2, &vocab, &cfg).unwrap();
    let manifest = tmp.path().join("v.tsv.manifest");
    let first = fs::read_to_string(&manifest).unwrap();
    assert!(first.contains(&format!("config_sha256 {}", cfg.digest())));
    assert!(first.contains(&pipeline::file_digest(&corpus).unwrap()));

    pipeline::vocab_file(&corpus, 2, &vocab, &cfg).unwrap();
    assert_eq!(fs::read_to_string(&manifest).unwrap(), first);

    let mut text = fs::read_to_string(&corpus).unwrap();
    text.push_str("one more line\n");
    fs::write(&corpus, text).unwrap();
    pipeline::vocab_file(&corpus, 2, &vocab, &cfg).unwrap();
    assert_ne!(fs::read_to_string(&manifest).unwrap(), first);
}

#[test]
fn bad_bytes_report_their_line() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.txt");
    fs::write(&path, b"fine line\nbroken \xff byte\n").unwrap();
    let err = pipeline::read_lines(&path).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
}

#[test]
fn missing_lm_corpus_is_a_config_error() {
    let err = run_all(&PipelineConfig::default()).unwrap_err();
    assert!(matches!(&err, Error::Config { key, .. } if key == "corpus.lm"));
}

#[test]
fn cleaning_stage_feeds_the_rest() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("mixed.txt");
    let mut lines: Vec<String> = common::sample_corpus().into_iter().take(200).collect();
    lines.push("12345 67890 !!!".into());
    lines.push("ABC DEF GHI".into());
    fs::write(&corpus, lines.join("\n") + "\n").unwrap();
    let mut cfg = small_config(tmp.path(), &corpus);
    cfg.lowercase_ratio = Some(0.5);
    let summary = run_all(&cfg).unwrap();
    let cleaned = fs::read_to_string(&summary.paths.lm_clean).unwrap();
    assert!(!cleaned.contains("12345") && !cleaned.contains("ABC"));
    assert!(summary.trained.x_words.iter().all(|w| w != "ABC"));
}
