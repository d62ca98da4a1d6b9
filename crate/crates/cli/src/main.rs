use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use subscode::pipeline;
use subscode::{Error, PipelineConfig};

/// Substitute-based word embeddings on the unit sphere.
#[derive(Parser, Debug)]
#[command(name = "subscode", version)]
struct Cli {
    /// Plain-text `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Top-level seed; every stage derives its own seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Override a configuration key, e.g. `--set lm.order=3`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Drop sentences below a lowercase a-z ratio.
    Clean {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        ratio: Option<f64>,
    },
    /// Build a vocabulary file with rare words mapped to <unk>.
    Vocab {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        min_count: Option<u64>,
    },
    /// Train an interpolated Kneser-Ney model and write it as ARPA.
    LmTrain {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Perplexity of an ARPA model on a corpus.
    LmPpl {
        #[arg(long)]
        lm: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Top-K substitute distributions for every token.
    Subs {
        #[arg(long)]
        lm: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        /// Score every candidate instead of the bounded search.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Sample (word, substitute) pairs from a substitute file.
    Sample {
        #[arg(long)]
        subs: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Embed the pairs on the unit sphere.
    Train {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        psi_output: Option<PathBuf>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Nearest neighbors of a word in an embeddings file.
    Neighbors {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// Write an embeddings file scaled by sigma.
    Export {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = subscode::eval::DEFAULT_SCALE)]
        sigma: f64,
    },
    /// Run the whole pipeline from raw corpus to embeddings.
    RunAll {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        embed_corpus: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn set<T: ToString>(cfg: &mut PipelineConfig, key: &str, value: Option<T>) -> subscode::Result<()> {
    match value {
        Some(v) => cfg.set(key, &v.to_string()),
        None => Ok(()),
    }
}

fn load_config(cli: &Cli) -> subscode::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            PipelineConfig::parse(&text, &path.display().to_string())?
        }
        None => PipelineConfig::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    set(&mut cfg, "seed", cli.seed)?;
    set(&mut cfg, "threads", cli.threads)?;
    Ok(cfg)
}

fn run(cli: Cli) -> subscode::Result<()> {
    let mut cfg = load_config(&cli)?;
    match &cli.command {
        Command::Clean { ratio, .. } => set(&mut cfg, "clean.lowercase_ratio", *ratio)?,
        Command::Vocab { min_count, .. } => set(&mut cfg, "vocab.min_count", *min_count)?,
        Command::LmTrain { order, .. } => set(&mut cfg, "lm.order", *order)?,
        Command::Subs { k, exhaustive, .. } => {
            set(&mut cfg, "subs.K", *k)?;
            if *exhaustive {
                cfg.pruned = false;
            }
        }
        Command::Sample { samples, .. } => set(&mut cfg, "sample.S", *samples)?,
        Command::Train { dim, epochs, .. } => {
            set(&mut cfg, "scode.d", *dim)?;
            set(&mut cfg, "scode.epochs", *epochs)?;
        }
        Command::RunAll {
            corpus,
            embed_corpus,
            out_dir,
        } => {
            set(&mut cfg, "corpus.lm", corpus.as_ref().map(|p| p.display()))?;
            set(
                &mut cfg,
                "corpus.embed",
                embed_corpus.as_ref().map(|p| p.display()),
            )?;
            set(&mut cfg, "out_dir", out_dir.as_ref().map(|p| p.display()))?;
        }
        _ => {}
    }
    cfg.validate()?;

    if cfg.threads > 0 {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global();
    }

    match cli.command {
        Command::Clean { input, output, .. } => {
            let ratio = cfg.lowercase_ratio.ok_or_else(|| Error::Config {
                key: "clean.lowercase_ratio".into(),
                message: "required for `clean`".into(),
            })?;
            let kept = pipeline::clean_file(&input, &output, ratio, &cfg)?;
            eprintln!("kept {kept} lines");
        }
        Command::Vocab { corpus, output, .. } => {
            let v = pipeline::vocab_file(&corpus, cfg.min_count, &output, &cfg)?;
            eprintln!("{} entries", v.len());
        }
        Command::LmTrain {
            corpus,
            vocab,
            output,
            ..
        } => {
            pipeline::lm_train_file(&corpus, &vocab, cfg.order, &output, &cfg)?;
        }
        Command::LmPpl { lm, corpus } => {
            println!("{:.6}", pipeline::lm_ppl_file(&lm, &corpus)?);
        }
        Command::Subs {
            lm, corpus, output, ..
        } => {
            let n = pipeline::subs_file(&lm, &corpus, cfg.top_k, cfg.pruned, &output, &cfg)?;
            eprintln!("{n} tokens");
        }
        Command::Sample { subs, output, .. } => {
            let n = pipeline::sample_file(&subs, cfg.samples, cfg.sample_seed(), &output, &cfg)?;
            eprintln!("{} pairs", n * cfg.samples);
        }
        Command::Train {
            pairs,
            output,
            psi_output,
            ..
        } => {
            let t = pipeline::train_file(
                &pairs,
                &cfg.train_config(),
                &output,
                psi_output.as_deref(),
                &cfg,
            )?;
            if let (Some(a), Some(b)) = (
                t.outcome.initial_log_likelihood,
                t.outcome.final_log_likelihood,
            ) {
                eprintln!("log-likelihood {a:.6} -> {b:.6}");
            }
        }
        Command::Neighbors {
            embeddings,
            word,
            k,
        } => {
            for (w, d) in pipeline::neighbors_file(&embeddings, &word, k)? {
                println!("{w}\t{d:.6}");
            }
        }
        Command::Export {
            embeddings,
            output,
            sigma,
        } => pipeline::export_file(&embeddings, sigma, &output, &cfg)?,
        Command::RunAll { .. } => {
            let s = pipeline::run_all(&cfg)?;
            eprintln!(
                "{} tokens, {} embedded words -> {}",
                s.tokens,
                s.trained.x_words.len(),
                s.paths.embeddings.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
