//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.
//! `VARPEDIS_THREADS` sets the worker count (default: all cores).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bias::{evaluate_selection, evaluate_with_baseline, generate_population, PopulationSpec};
use crate::error::{Error, Result};
use crate::select::{build_manifest, select_classes, SelectionConfig};
use crate::stats::dataset_stats;
use crate::store::{read_dataset, write_dataset, write_manifest, Format};

pub const THREADS_ENV: &str = "VARPEDIS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "varpedis", version, about = "Variation-preserving instance selection over class embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select a training subset and write a JSONL manifest.
    Select(SelectArgs),
    /// Print per-class similarity statistics.
    Stats(StatsArgs),
    /// Generate a synthetic population, select from it and report bias metrics.
    SynthEval(SynthEvalArgs),
    /// Write the dataset described by a population spec.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SelectionFlags {
    /// Similarity threshold, in (0, 1].
    #[arg(long, default_value_t = 0.7, value_parser = parse_theta)]
    pub theta: f64,
    /// Number of similarity buckets (K).
    #[arg(long, default_value_t = 5, value_parser = parse_positive)]
    pub buckets: usize,
    /// Minimum records per bucket after repair (N).
    #[arg(long, default_value_t = 200, value_parser = parse_positive)]
    pub min_per_bucket: usize,
    /// Records sampled per bucket (N1).
    #[arg(long, default_value_t = 200, value_parser = parse_positive)]
    pub per_bucket: usize,
    /// Classes with at most this many records are kept whole.
    #[arg(long, default_value_t = 500)]
    pub small_class_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SelectionFlags {
    pub fn config(&self) -> SelectionConfig {
        SelectionConfig {
            theta: self.theta,
            k: self.buckets,
            n_min: self.min_per_bucket,
            n1: self.per_bucket,
            small_class_max: self.small_class_max,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Manifest path (JSONL).
    #[arg(long)]
    pub output: PathBuf,
    /// Input format; detected from magic bytes or extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    pub selection: SelectionFlags,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write the statistics as JSON.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthEvalArgs {
    /// Population spec (JSON).
    #[arg(long, alias = "input")]
    pub spec: PathBuf,
    /// Also write the report here.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the selection manifest here.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Add metrics for a size-matched uniform random sample drawn with this seed.
    #[arg(long)]
    pub baseline_seed: Option<u64>,
    #[command(flatten)]
    pub selection: SelectionFlags,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, alias = "input")]
    pub spec: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Output format; VPED for a `.vped` extension, CSV otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write `id,label,subgroup` ground truth here.
    #[arg(long)]
    pub tags: Option<PathBuf>,
}

fn parse_theta(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err("theta must be in the range (0, 1]".into())
    }
}

fn parse_positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err("must be a positive integer".into()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn refuse_overwrite(input: &Path, output: &Path) -> Result<()> {
    let same = match (input.canonicalize(), output.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    if same {
        return Err(Error::InvalidConfig(format!(
            "output {} would overwrite the input",
            output.display()
        )));
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

fn run_select(args: &SelectArgs) -> Result<()> {
    refuse_overwrite(&args.input, &args.output)?;
    let config = args.selection.config();
    config.validate()?;
    eprintln!("reading {}", args.input.display());
    let dataset = read_dataset(&args.input, args.format)?;
    eprintln!(
        "{} records, {} classes, dim {}",
        dataset.len(),
        dataset.num_classes(),
        dataset.dim()
    );
    let selections = select_classes(&dataset, &config)?;
    let manifest = build_manifest(&dataset, &config, &selections);
    write_manifest(&manifest, &args.output)?;
    eprintln!("wrote {}", args.output.display());

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let io = |e| Error::io("<stdout>", e);
    writeln!(
        out,
        "{:<24} {:>8} {:>10} {:>9} {:>8} {:>9}",
        "class", "input", "discarded", "retained", "buckets", "selected"
    )
    .map_err(io)?;
    for sel in &selections {
        let label = if sel.passthrough {
            format!("{} (all kept)", sel.label)
        } else {
            sel.label.clone()
        };
        writeln!(
            out,
            "{:<24} {:>8} {:>10} {:>9} {:>8} {:>9}",
            label,
            sel.size,
            sel.discarded.len(),
            if sel.passthrough { sel.size } else { sel.retained_count() },
            sel.buckets.len(),
            sel.selected.len()
        )
        .map_err(io)?;
    }
    writeln!(
        out,
        "{:<24} {:>8} {:>10} {:>9} {:>8} {:>9}",
        "total",
        dataset.len(),
        selections.iter().map(|s| s.discarded.len()).sum::<usize>(),
        "",
        "",
        manifest.selected_count()
    )
    .map_err(io)?;
    Ok(())
}

fn run_stats(args: &StatsArgs) -> Result<()> {
    if let Some(output) = &args.output {
        refuse_overwrite(&args.input, output)?;
    }
    let dataset = read_dataset(&args.input, args.format)?;
    let stats = dataset_stats(&dataset)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let io = |e| Error::io("<stdout>", e);
    for s in &stats {
        writeln!(
            out,
            "{}: n={} min={:.6} mean={:.6} max={:.6}",
            s.label, s.count, s.min, s.mean, s.max
        )
        .map_err(io)?;
        let bins: Vec<String> = s.histogram.iter().map(usize::to_string).collect();
        writeln!(out, "  histogram [-1, 1] x20: {}", bins.join(" ")).map_err(io)?;
    }
    if let Some(output) = &args.output {
        write_json(&stats, output)?;
    }
    Ok(())
}

fn read_spec(path: &Path) -> Result<PopulationSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PopulationSpec::from_json(&text)
}

fn run_synth_eval(args: &SynthEvalArgs) -> Result<()> {
    let config = args.selection.config();
    config.validate()?;
    let spec = read_spec(&args.spec)?;
    eprintln!("generating {} classes", spec.classes.len());
    let (dataset, tags) = generate_population(&spec)?;
    let selections = select_classes(&dataset, &config)?;
    let manifest = build_manifest(&dataset, &config, &selections);
    if let Some(path) = &args.manifest {
        write_manifest(&manifest, path)?;
    }
    let report = match args.baseline_seed {
        Some(seed) => evaluate_with_baseline(&manifest, &dataset, &tags, seed)?,
        None => evaluate_selection(&manifest, &dataset, &tags)?,
    };
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    if let Some(path) = &args.output {
        write_json(&report, path)?;
    }
    Ok(())
}

fn run_generate(args: &GenerateArgs) -> Result<()> {
    refuse_overwrite(&args.spec, &args.output)?;
    let spec = read_spec(&args.spec)?;
    let (dataset, tags) = generate_population(&spec)?;
    let format = args.format.unwrap_or_else(|| {
        let vped = args
            .output
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("vped"));
        if vped { Format::Vped } else { Format::Csv }
    });
    write_dataset(&dataset, &args.output, format)?;
    if let Some(path) = &args.tags {
        let mut out = create(path)?;
        for (i, r) in dataset.records().iter().enumerate() {
            writeln!(out, "{},{},{}", r.id, r.label, tags.subgroup_name(&r.label, i))
                .map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))?;
    }
    eprintln!("wrote {} records to {}", dataset.len(), args.output.display());
    Ok(())
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{THREADS_ENV}={raw:?} is not a thread count")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Select(a) => run_select(a),
        Command::Stats(a) => run_stats(a),
        Command::SynthEval(a) => run_synth_eval(a),
        Command::Generate(a) => run_generate(a),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = thread_pool().and_then(|pool| pool.install(|| execute(&cli)));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
