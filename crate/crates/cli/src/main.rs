//! `shufbench`: generate datasets, build offset tables, run and sweep
//! shuffling strategies against simulated storage devices.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 runtime or I/O
//! failure, 4 training diverged.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use shufbench::bench::{self, RunSpec, SweepSpec};
use shufbench::dataset::{
    build_offset_table, generate_synthetic, sidecar_path, DatasetFormat, Layout, SyntheticSpec,
};
use shufbench::shuffle::{Strategy, StrategyConfig};
use shufbench::storage::{estimate_time, DeviceProfile, IoContext, DEFAULT_PAGE_SIZE};
use shufbench::trainer::{Loss, OverlapMode, TrainConfig};

#[derive(Parser)]
#[command(
    name = "shufbench",
    version,
    about = "Shuffling strategies for out-of-core training, benchmarked"
)]
struct Cli {
    /// Directory every relative path is resolved against.
    #[arg(long, global = true, default_value = ".")]
    workdir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a linearly separable synthetic dataset.
    Gen(GenArgs),
    /// Scan a dataset and write its offset-table sidecar.
    Index(IndexArgs),
    /// Train once and write the per-epoch report and summary.
    Run(RunArgs),
    /// Train every strategy and seed, then tabulate total time per device.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    f: u32,
    #[arg(long, default_value = "dense")]
    format: DatasetFormat,
    /// Upper bound on non-zeros per sparse record.
    #[arg(long)]
    nnz: Option<u32>,
    #[arg(long, default_value_t = 0.05)]
    margin: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `random` or `sorted` (records grouped by label on disk).
    #[arg(long, default_value = "random")]
    layout: Layout,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IndexArgs {
    dataset: PathBuf,
    /// Sidecar path; defaults to the dataset path with a `.shfo` extension.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_PAGE_SIZE)]
    page_size: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 50)]
    batches: usize,
    #[arg(long, default_value_t = 10_000)]
    q: usize,
    #[arg(long, default_value_t = DEFAULT_PAGE_SIZE)]
    page_size: u64,
    #[arg(long, default_value_t = 256)]
    cache_pages: usize,
    #[arg(long, default_value_t = 1e-2)]
    target_rfvd: f64,
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    #[arg(long, default_value_t = 1e-3)]
    lambda: f64,
    /// `logistic` or `squared-hinge`.
    #[arg(long, default_value = "logistic")]
    loss: Loss,
    #[arg(long, default_value_t = 50)]
    max_epochs: usize,
    /// `none` or `prefetch`.
    #[arg(long, default_value = "none")]
    overlap: OverlapMode,
}

impl TrainArgs {
    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            lambda: self.lambda,
            loss: self.loss,
            max_epochs: self.max_epochs,
            target_rfvd: self.target_rfvd,
            overlap: self.overlap,
        }
    }

    fn strategy_config(&self, strategy: Strategy, seed: u64) -> StrategyConfig {
        StrategyConfig::new(strategy, self.batches, seed)
            .with_queue_size(self.q)
            .with_page_size(self.page_size)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    train: TrainArgs,
    /// none, queue, bmf, lirs-instance or lirs-page.
    #[arg(long)]
    strategy: Strategy,
    /// hdd, ssd, optane or a profile file.
    #[arg(long, default_value = "hdd")]
    device: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "report.csv")]
    out: PathBuf,
    /// Also write every epoch's plan as `epoch,batch_index,instance_id`.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    strategies: Vec<Strategy>,
    #[arg(long, value_delimiter = ',', default_value = "hdd,ssd,optane")]
    devices: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// Cell every total is normalized to, as `strategy+device`.
    #[arg(long)]
    baseline: String,
    /// Run cells concurrently; totals then use simulated time only.
    #[arg(long)]
    parallel: bool,
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
}

/// An error meant for the user's input rather than the machine.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(Usage(msg.into()))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<shufbench::Error>() {
        Some(shufbench::Error::InvalidArgument(_) | shufbench::Error::Profile(_)) => 2,
        Some(shufbench::Error::Diverged { .. } | shufbench::Error::NonFinite(_)) => 4,
        _ => 3,
    }
}

fn require_file(path: &Path) -> anyhow::Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{} does not exist", path.display())))
    }
}

fn gen(workdir: &Path, a: GenArgs) -> anyhow::Result<()> {
    let spec = match a.format {
        DatasetFormat::Dense => {
            if a.nnz.is_some() {
                return Err(usage("--nnz only applies to sparse datasets"));
            }
            SyntheticSpec::dense(a.n, a.f, a.margin, a.seed)
        }
        DatasetFormat::Sparse => match a.nnz {
            Some(nnz) => SyntheticSpec::sparse(a.n, a.f, nnz, a.margin, a.seed),
            None => SyntheticSpec {
                format: DatasetFormat::Sparse,
                ..SyntheticSpec::dense(a.n, a.f, a.margin, a.seed)
            },
        },
    }
    .with_layout(a.layout);
    spec.validate()?;
    let out = workdir.join(&a.out);
    let header =
        generate_synthetic(&out, &spec).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "N={} F={} {}",
        header.num_instances, header.num_features, header.format
    );
    Ok(())
}

fn index(workdir: &Path, a: IndexArgs) -> anyhow::Result<()> {
    let path = workdir.join(&a.dataset);
    require_file(&path)?;
    let mut ctx = IoContext::new(a.page_size, 1)?;
    let (header, table) = build_offset_table(&mut ctx, &path)?;
    let out = a
        .out
        .map_or_else(|| sidecar_path(&path), |o| workdir.join(o));
    table.write_sidecar(&out)?;
    let stats = ctx.stats();
    println!(
        "N={} F={} {} entries={} scan_pages={}",
        header.num_instances,
        header.num_features,
        header.format,
        table.len(),
        stats.pages_read()
    );
    for p in DeviceProfile::builtin() {
        println!("scan_time[{}]={}", p.name, estimate_time(&stats, &p));
    }
    Ok(())
}

fn run(workdir: &Path, a: RunArgs) -> anyhow::Result<()> {
    require_file(&workdir.join(&a.train.dataset))?;
    let spec = RunSpec {
        dataset: a.train.dataset.clone(),
        strategy: a.train.strategy_config(a.strategy, a.seed),
        train: a.train.train_config(),
        device: a.device,
        cache_pages: a.train.cache_pages,
        output: a.out,
        trace: a.trace,
    };
    spec.strategy.validate()?;
    spec.train.validate()?;
    let out = bench::run(&spec, workdir)?;
    let s = &out.summary;
    println!(
        "{} on {}: epochs={} reached_target={} total_time={} report={} summary={}",
        s.strategy,
        s.device,
        s.epochs,
        s.reached_target,
        s.total_time,
        out.report_path.display(),
        out.summary_path.display()
    );
    Ok(())
}

fn sweep(workdir: &Path, a: SweepArgs) -> anyhow::Result<()> {
    require_file(&workdir.join(&a.train.dataset))?;
    let (strategy, device) = a
        .baseline
        .split_once('+')
        .ok_or_else(|| usage(format!("baseline '{}' is not strategy+device", a.baseline)))?;
    let baseline_strategy: Strategy = strategy.parse()?;
    let spec = SweepSpec {
        dataset: a.train.dataset.clone(),
        strategies: a
            .strategies
            .iter()
            .map(|&s| a.train.strategy_config(s, 0))
            .collect(),
        devices: a.devices,
        seeds: a.seeds,
        train: a.train.train_config(),
        cache_pages: a.train.cache_pages,
        baseline: (baseline_strategy, device.to_string()),
        parallel: a.parallel,
    };
    let table = bench::sweep(&spec, workdir)?;
    let csv = table.to_csv();
    let out = workdir.join(&a.out);
    std::fs::write(&out, &csv).with_context(|| format!("writing {}", out.display()))?;
    print!("{csv}");
    let failed = table.cells.iter().filter(|c| c.outcome.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} cell(s) failed");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workdir = cli.workdir;
    let result = match cli.command {
        Command::Gen(a) => gen(&workdir, a),
        Command::Index(a) => index(&workdir, a),
        Command::Run(a) => run(&workdir, a),
        Command::Sweep(a) => sweep(&workdir, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
