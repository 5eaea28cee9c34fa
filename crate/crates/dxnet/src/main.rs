use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dxnet::checkpoint::{load_checkpoint, save_checkpoint};
use dxnet::corpus::{CorpusConfig, build_toy_corpus};
use dxnet::embeddings::dump_embeddings;
use dxnet::eval::eval_report;
use dxnet::extract::{References, extract};
use dxnet::manifest::read_manifest;
use dxnet::pipeline::{TrainOptions, train_from_manifest, with_thread_pool};
use dxnet::wav::{read_wav, write_wav};
use dxnet::{DxError, Result};
use dxnet_core::net::{InferenceMode, InputScaling, Variant};
use dxnet_core::train::Curriculum;

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

/// Anchor-conditioned target speaker extraction.
#[derive(Debug, Parser)]
#[command(name = "dxnet", version)]
struct Cli {
    /// JSON object of flag values; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize the toy corpus and its train/test manifests.
    MakeDataset(MakeDataset),
    /// Train one model variant and write a checkpoint.
    Train(Train),
    /// Extract the target speaker from a mixture.
    Extract(Extract),
    /// Score a checkpoint on a manifest.
    Eval(Eval),
    /// Write a PCA view of canonical embeddings as CSV.
    DumpEmbeddings(DumpEmbeddings),
}

#[derive(Debug, Args)]
struct MakeDataset {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 8)]
    speakers: usize,
    #[arg(long, default_value_t = 25)]
    utts: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    sir_min: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    sir_max: f64,
    #[arg(long, default_value_t = 1)]
    interferers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct Train {
    #[arg(long)]
    manifest: PathBuf,
    /// denet, danet or danet_anchor.
    #[arg(long, value_parser = parse_variant)]
    variant: Variant,
    /// desk or paper.
    #[arg(long, default_value = "desk", value_parser = ["desk", "paper"])]
    preset: String,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 5.0)]
    grad_clip_norm: f64,
    /// none or frames_100_then_400; defaults to the variant's schedule.
    #[arg(long, value_parser = parse_curriculum)]
    curriculum: Option<Curriculum>,
    /// raw, peak_normalized or log_compressed; defaults to the preset's.
    #[arg(long, value_parser = parse_input_scaling)]
    input_scaling: Option<InputScaling>,
}

#[derive(Debug, Args)]
struct Extract {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    anchor: PathBuf,
    #[arg(long)]
    mixture: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// preset, oracle, anchor or nearest.
    #[arg(long, value_parser = parse_extract_mode)]
    mode: InferenceMode,
    /// Target reference (oracle mode).
    #[arg(long)]
    target: Option<PathBuf>,
    /// Interferer reference (oracle mode); repeat for several.
    #[arg(long)]
    interferer: Vec<PathBuf>,
    /// Process frames strictly left to right with the causal encoder.
    #[arg(long)]
    streaming: bool,
}

#[derive(Debug, Args)]
struct Eval {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// preset, oracle, anchor, nearest or danet-oracle.
    #[arg(long, value_parser = parse_mode)]
    mode: InferenceMode,
    /// JSON report path; a CSV mirror is written alongside.
    #[arg(long)]
    report: PathBuf,
}

#[derive(Debug, Args)]
struct DumpEmbeddings {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    anchor: PathBuf,
    #[arg(long)]
    mixture: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Repeat for several interferers.
    #[arg(long, required = true)]
    interferer: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| format!("unknown variant {s:?} (expected denet, danet or danet_anchor)"))
}

fn parse_input_scaling(s: &str) -> std::result::Result<InputScaling, String> {
    InputScaling::parse(s).ok_or_else(|| format!("unknown input scaling {s:?} (expected raw, peak_normalized or log_compressed)"))
}

fn parse_curriculum(s: &str) -> std::result::Result<Curriculum, String> {
    Curriculum::parse(s).ok_or_else(|| format!("unknown curriculum {s:?} (expected none or frames_100_then_400)"))
}

fn parse_mode(s: &str) -> std::result::Result<InferenceMode, String> {
    InferenceMode::parse(s)
        .ok_or_else(|| format!("unknown mode {s:?} (expected preset, oracle, anchor, nearest or danet-oracle)"))
}

fn parse_extract_mode(s: &str) -> std::result::Result<InferenceMode, String> {
    match parse_mode(s)? {
        InferenceMode::DanetOracle => Err("danet-oracle needs a reference to choose a stream; use eval".into()),
        m => Ok(m),
    }
}

/// Appends `--key value` for every config-file entry whose flag is absent
/// from the command line.
fn merge_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            path = args.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| DxError::io(&path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| DxError::Usage(format!("config {path}: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| DxError::Usage(format!("config {path}: expected a JSON object")))?;
    let mut out = args.clone();
    for (key, v) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        let given = args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if given || flag == "--config" {
            continue;
        }
        let scalar = |v: &serde_json::Value| match v {
            serde_json::Value::String(s) => Ok(s.clone()),
            serde_json::Value::Number(n) => Ok(n.to_string()),
            _ => Err(DxError::Usage(format!("config {path}: unsupported value for {key}"))),
        };
        match v {
            serde_json::Value::Bool(true) => out.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                for item in items {
                    out.push(flag.clone());
                    out.push(scalar(item)?);
                }
            }
            other => {
                out.push(flag);
                out.push(scalar(other)?);
            }
        }
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::MakeDataset(a) => {
            let cfg = CorpusConfig {
                n_speakers: a.speakers,
                utts_per_speaker: a.utts,
                sir_min_db: a.sir_min,
                sir_max_db: a.sir_max,
                n_interferers: a.interferers,
                seed: a.seed,
            };
            cfg.validate()?;
            let (train, test) = with_thread_pool(|| build_toy_corpus(&cfg, &a.out))?;
            println!(
                "wrote {} train and {} test entries to {}",
                train.len(),
                test.len(),
                a.out.display()
            );
        }
        Command::Train(a) => {
            let mut opts = TrainOptions::new(a.variant, &a.preset, a.epochs, a.seed);
            opts.train.batch_size = a.batch_size;
            opts.train.learning_rate = a.learning_rate;
            opts.train.grad_clip_norm = a.grad_clip_norm;
            if let Some(c) = a.curriculum {
                opts.train.curriculum = c;
            }
            opts.input_scaling = a.input_scaling;
            opts.validate()?;
            let ckpt = with_thread_pool(|| {
                train_from_manifest(&a.manifest, &opts, |epoch, loss| println!("epoch={epoch} loss={loss}"))
            })?;
            save_checkpoint(&ckpt, &a.out)?;
        }
        Command::Extract(a) => {
            let ckpt = load_checkpoint(&a.ckpt)?;
            dxnet::extract::check_mode(&ckpt, a.mode)?;
            let anchor = read_wav(&a.anchor)?;
            let mixture = read_wav(&a.mixture)?;
            let target = a.target.as_deref().map(read_wav).transpose()?;
            let interferers = a.interferer.iter().map(|p| read_wav(p)).collect::<Result<Vec<_>>>()?;
            let refs = match (&target, a.mode) {
                (Some(t), _) if !interferers.is_empty() => Some(References {
                    target: t,
                    interferers: &interferers,
                }),
                (_, InferenceMode::OracleMembership) => {
                    return Err(DxError::Usage("oracle mode needs --target and --interferer".into()));
                }
                _ => None,
            };
            let out = extract(&ckpt, a.mode, Some(&anchor), &mixture, refs, a.streaming)?;
            write_wav(&a.out, &out[0])?;
        }
        Command::Eval(a) => {
            let ckpt = load_checkpoint(&a.ckpt)?;
            dxnet::extract::check_mode(&ckpt, a.mode)?;
            let manifest = read_manifest(&a.manifest)?;
            let report = with_thread_pool(|| eval_report(&ckpt, &manifest, a.mode))?;
            report.write(&a.report)?;
            let agg = &report.aggregate;
            println!(
                "entries={} unprocessed_si_sdr_db={:.3} model_si_sdr_db={:.3} ideal_mask_si_sdr_db={:.3}",
                agg.count, agg.unprocessed.si_sdr_db, agg.model.si_sdr_db, agg.ideal_mask.si_sdr_db
            );
        }
        Command::DumpEmbeddings(a) => {
            let ckpt = load_checkpoint(&a.ckpt)?;
            let read = |p: &Path| read_wav(p);
            let target = read(&a.target)?;
            let interferers = a.interferer.iter().map(|p| read(p)).collect::<Result<Vec<_>>>()?;
            let refs = References {
                target: &target,
                interferers: &interferers,
            };
            let dump = dump_embeddings(&ckpt, &read(&a.anchor)?, &read(&a.mixture)?, refs)?;
            dump.write_csv(&a.out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match merge_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { EXIT_USAGE } else { EXIT_RUNTIME })
        }
    }
}
