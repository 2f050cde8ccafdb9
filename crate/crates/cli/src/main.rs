use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cams_core::cliffs::{
    attention_key, find_cliff_pairs, label_fragments, read_activity_file, read_attention_jsonl, read_pairs_csv,
    run_dtap, select_cases, write_pairs_csv, CaseMode, CliffConfig, DtapOptions, Split, DEFAULT_EPSILON,
};
use cams_core::pipeline::{
    corpus_stats, encode_corpus, load_vocab_dir, read_input, read_shard_dir, supervision_density, train_vocab,
    EncodeConfig, Framing, TrainConfig,
};
use cams_core::simil::McsOptions;
use cams_core::{parse_smiles, Encoder};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

#[derive(Parser)]
#[command(name = "cams", version, about = "Multi-scale motif tokenization for molecules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FramingArg {
    BosEos,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    A,
    B,
    C,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a merge list and write one vocabulary per prefix.
    TrainVocab {
        #[arg(long)]
        input: PathBuf,
        /// Maximum number of merge operations.
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        fmin: u64,
        /// Comma-separated, strictly ascending prefix lengths.
        #[arg(long, value_delimiter = ',', required = true)]
        prefixes: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        min_motif_freq: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode a SMILES file into token shards.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        vocabs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value_t = 10_000)]
        shard_molecules: usize,
        #[arg(long, value_enum, default_value_t = FramingArg::BosEos)]
        framing: FramingArg,
    },
    /// Corpus statistics over a shard directory.
    Stats {
        #[arg(long)]
        shards: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Supervision-density arithmetic.
    Density {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        views: u32,
        #[arg(long, default_value_t = 1.0)]
        tavg: f64,
    },
    /// Find activity-cliff pairs in a benchmark CSV.
    CliffPairs {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        tau_sim: f64,
        #[arg(long, default_value_t = 10.0)]
        tau_fold: f64,
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
        /// Case-study selection preset applied after the filter.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Keep at most this many pairs.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Token sequences and differential masks for every pair molecule, as
    /// JSON lines keyed like the attention file.
    ExplainPairs {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        vocabs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rel-DTAP report from per-molecule attention rows.
    Dtap {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        vocabs: PathBuf,
        #[arg(long)]
        attention: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        /// Leave molecules with no differential or no shared tokens out of
        /// the means.
        #[arg(long)]
        skip_empty_class: bool,
    },
}

fn write_json(value: &impl serde::Serialize, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TrainVocab { input, k, fmin, prefixes, min_motif_freq, out } => {
            let inputs = read_input(&input)?;
            let cfg = TrainConfig { k, f_min: fmin, prefixes, min_motif_freq };
            let trained = train_vocab(&inputs, &cfg)?;
            for path in trained.write(&out)? {
                info!("wrote {}", path.display());
            }
            let scales: Vec<_> =
                trained.vocabularies.iter().map(|v| json!({"prefix_k": v.prefix_k, "scale": v.scale})).collect();
            write_json(
                &json!({
                    "molecules": inputs.len(),
                    "parse_failures": trained.parse_failures,
                    "merges_learned": trained.merges.k_max,
                    "scales": scales,
                }),
                None,
            )
        }
        Command::Encode { input, vocabs, out, workers, shard_molecules, framing } => {
            let inputs = read_input(&input)?;
            let vocabs = load_vocab_dir(&vocabs)?;
            let framing = match framing {
                FramingArg::BosEos => Framing::BosEos,
                FramingArg::None => Framing::None,
            };
            let encoded = encode_corpus(&inputs, &vocabs, &EncodeConfig { workers, shard_molecules, framing })?;
            encoded.write(&out)?;
            let m = &encoded.manifest;
            info!("{} of {} molecules encoded into {} sequences", m.molecules_encoded, m.molecules_in, m.sequences);
            Ok(())
        }
        Command::Stats { shards, out } => {
            let shards = read_shard_dir(&shards)?;
            write_json(&corpus_stats(&shards)?, out.as_deref())
        }
        Command::Density { rho, views, tavg } => write_json(&supervision_density(rho, views, tavg)?, None),
        Command::CliffPairs { input, out, tau_sim, tau_fold, split, mode, limit } => {
            let limit = limit.unwrap_or(usize::MAX);
            let records = read_activity_file(&input)?;
            if records.is_empty() {
                bail!("{} has no rows", input.display());
            }
            let split = match split {
                SplitArg::Train => Split::Train,
                SplitArg::Test => Split::Test,
            };
            let cfg = CliffConfig { tau_sim, tau_fold, split, ..CliffConfig::default() };
            let mut pairs = find_cliff_pairs(&records, &cfg);
            if let Some(mode) = mode {
                let mode = match mode {
                    ModeArg::A => CaseMode::A,
                    ModeArg::B => CaseMode::B,
                    ModeArg::C => CaseMode::C,
                };
                pairs = select_cases(&pairs, mode, limit, &McsOptions::default());
            } else {
                pairs.truncate(limit);
            }
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_pairs_csv(&pairs, BufWriter::new(file))?;
            info!("{} pairs written to {}", pairs.len(), out.display());
            Ok(())
        }
        Command::ExplainPairs { pairs, vocabs, out } => {
            let rows = read_pairs_csv(open(&pairs)?)?;
            let vocabs = load_vocab_dir(&vocabs)?;
            let encoder = Encoder::new(&vocabs)?;
            let mut w = BufWriter::new(File::create(&out).with_context(|| format!("creating {}", out.display()))?);
            for row in &rows {
                let a = parse_smiles(&row.anchor_smiles)?;
                let b = parse_smiles(&row.partner_smiles)?;
                let (ea, eb) = (encoder.explain(&a)?, encoder.explain(&b)?);
                let (_, da, db) = label_fragments(&a, &b, &ea, &eb, &McsOptions::default());
                for (anchor, e, d) in [(true, &ea, da), (false, &eb, db)] {
                    let regions: Vec<[usize; 2]> = e.region_boundaries.iter().map(|r| [r.start, r.end]).collect();
                    let line = json!({
                        "molecule_id": attention_key(row.pair_id, anchor),
                        "token_ids": e.token_ids,
                        "diff_mask": d,
                        "region_boundaries": regions,
                    });
                    writeln!(w, "{line}")?;
                }
            }
            w.flush()?;
            Ok(())
        }
        Command::Dtap { pairs, vocabs, attention, out, epsilon, skip_empty_class } => {
            let rows = read_pairs_csv(open(&pairs)?)?;
            let vocabs = load_vocab_dir(&vocabs)?;
            let encoder = Encoder::new(&vocabs)?;
            let attention = read_attention_jsonl(BufReader::new(open(&attention)?))?;
            let opts = DtapOptions { epsilon, skip_empty_class, ..DtapOptions::default() };
            let summary = run_dtap(&rows, &encoder, &attention, &opts)?;
            write_json(&summary, out.as_deref())
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
