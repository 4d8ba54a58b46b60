//! Single runs, strategy × device × seed sweeps and their CSV reports.
//!
//! Epoch report columns:
//! `epoch,objective,rfvd,t_load_sim,t_load_wall,t_comp_wall,pages_seq,pages_rand,cache_hits,redundant_loads`
//!
//! Summary columns (one row per run and device):
//! `strategy,device,epochs,reached_target,t_preprocess,t_load,t_comp,t_overlapping,total_time,f_star,final_objective,pages_seq,pages_rand,pages_written,cache_hits,redundant_loads`
//!
//! `total_time` always equals `t_preprocess + (t_load + t_comp - t_overlapping) * epochs`
//! evaluated on the other columns of the same row.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dataset::load_all;
use crate::error::{invalid, Error, Result};
use crate::shuffle::{Strategy, StrategyConfig};
use crate::storage::{DeviceProfile, IoStats};
use crate::trainer::{reference_minimum, run_training, ConvergenceReport, RunOptions, TrainConfig};

pub const EPOCH_HEADER: &str = "epoch,objective,rfvd,t_load_sim,t_load_wall,t_comp_wall,pages_seq,pages_rand,cache_hits,redundant_loads";
pub const SUMMARY_HEADER: &str = "strategy,device,epochs,reached_target,t_preprocess,t_load,t_comp,t_overlapping,total_time,f_star,final_objective,pages_seq,pages_rand,pages_written,cache_hits,redundant_loads";
pub const SWEEP_HEADER: &str = "strategy,device,seed,epochs,total_time,normalized";

/// Per-epoch rows of `report`, with simulated load time on `profile`.
pub fn epoch_csv(report: &ConvergenceReport, profile: &DeviceProfile) -> String {
    let mut out = String::from(EPOCH_HEADER);
    out.push('\n');
    for (i, e) in report.epochs.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            e.epoch,
            e.objective,
            e.rfvd,
            report.t_load_sim(i, profile),
            e.t_load_wall,
            e.t_comp_wall,
            e.io.pages_read_seq,
            e.io.pages_read_rand,
            e.io.page_cache_hits,
            e.io.redundant_page_loads
        );
    }
    out
}

/// One run evaluated under one device profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub strategy: String,
    pub device: String,
    pub epochs: usize,
    pub reached_target: bool,
    pub t_preprocess: f64,
    pub t_load: f64,
    pub t_comp: f64,
    pub t_overlapping: f64,
    pub total_time: f64,
    pub f_star: f64,
    pub final_objective: f64,
    pub pages_seq: u64,
    pub pages_rand: u64,
    pub pages_written: u64,
    pub cache_hits: u64,
    pub redundant_loads: u64,
}

impl Summary {
    pub fn from_report(report: &ConvergenceReport, profile: &DeviceProfile) -> Result<Summary> {
        let tm = report.time_model(profile);
        let io: IoStats = report.training_io();
        let summary = Summary {
            strategy: report.strategy.to_string(),
            device: profile.name.clone(),
            epochs: tm.epochs,
            reached_target: report.epochs_to_target.is_some(),
            t_preprocess: tm.t_preprocess,
            t_load: tm.t_load,
            t_comp: tm.t_comp,
            t_overlapping: tm.t_overlapping,
            total_time: crate::trainer::total_time(&tm)?,
            f_star: report.f_star,
            final_objective: report
                .epochs
                .last()
                .map_or(report.initial_objective, |e| e.objective),
            pages_seq: io.pages_read_seq,
            pages_rand: io.pages_read_rand,
            pages_written: report.preprocess.io.pages_written() + io.pages_written(),
            cache_hits: io.page_cache_hits,
            redundant_loads: io.redundant_page_loads,
        };
        summary.check()?;
        Ok(summary)
    }

    /// The same row with the wall-clock compute columns dropped, leaving
    /// only simulated time.
    pub fn simulated_only(mut self) -> Summary {
        self.t_comp = 0.0;
        self.t_overlapping = 0.0;
        self.total_time = self.recomputed_total();
        self
    }

    /// Total recomputed from this row's own columns.
    pub fn recomputed_total(&self) -> f64 {
        self.t_preprocess + (self.t_load + self.t_comp - self.t_overlapping) * self.epochs as f64
    }

    pub fn check(&self) -> Result<()> {
        if self.recomputed_total() != self.total_time {
            return Err(invalid(format!(
                "summary total {} disagrees with its components ({})",
                self.total_time,
                self.recomputed_total()
            )));
        }
        Ok(())
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.strategy,
            self.device,
            self.epochs,
            self.reached_target,
            self.t_preprocess,
            self.t_load,
            self.t_comp,
            self.t_overlapping,
            self.total_time,
            self.f_star,
            self.final_objective,
            self.pages_seq,
            self.pages_rand,
            self.pages_written,
            self.cache_hits,
            self.redundant_loads
        )
    }

    pub fn parse_row(line: &str) -> Result<Summary> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 16 {
            return Err(invalid(format!(
                "summary row has {} fields, expected 16",
                f.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            f[i].parse()
                .map_err(|_| invalid(format!("summary field {i}: '{}'", f[i])))
        };
        let int = |i: usize| -> Result<u64> {
            f[i].parse()
                .map_err(|_| invalid(format!("summary field {i}: '{}'", f[i])))
        };
        Ok(Summary {
            strategy: f[0].to_string(),
            device: f[1].to_string(),
            epochs: int(2)? as usize,
            reached_target: f[3] == "true",
            t_preprocess: num(4)?,
            t_load: num(5)?,
            t_comp: num(6)?,
            t_overlapping: num(7)?,
            total_time: num(8)?,
            f_star: num(9)?,
            final_objective: num(10)?,
            pages_seq: int(11)?,
            pages_rand: int(12)?,
            pages_written: int(13)?,
            cache_hits: int(14)?,
            redundant_loads: int(15)?,
        })
    }

    /// Parse a summary CSV (header plus rows).
    pub fn parse_csv(text: &str) -> Result<Vec<Summary>> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == SUMMARY_HEADER => {}
            _ => return Err(invalid("missing summary header")),
        }
        lines.map(Summary::parse_row).collect()
    }
}

pub fn summary_csv(rows: &[Summary]) -> Result<String> {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        r.check()?;
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    Ok(out)
}

/// Everything needed for one training run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub dataset: PathBuf,
    pub strategy: StrategyConfig,
    pub train: TrainConfig,
    pub device: String,
    pub cache_pages: usize,
    /// Report path; the summary goes next to it as `<stem>.summary.csv`.
    pub output: PathBuf,
    /// Optional epoch plan trace (`epoch,batch_index,instance_id`).
    pub trace: Option<PathBuf>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: ConvergenceReport,
    pub summary: Summary,
    pub report_path: PathBuf,
    pub summary_path: PathBuf,
}

pub fn summary_path_for(report: &Path) -> PathBuf {
    let stem = report
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    report.with_file_name(format!("{stem}.summary.csv"))
}

fn scratch_for(workdir: &Path, tag: &str) -> PathBuf {
    workdir.join(".scratch").join(tag)
}

/// Execute `spec`, resolving relative paths against `workdir`.
pub fn run(spec: &RunSpec, workdir: &Path) -> Result<RunOutcome> {
    let profile = DeviceProfile::resolve(&spec.device, workdir)?;
    let dataset = workdir.join(&spec.dataset);
    if !dataset.is_file() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("dataset {} not found", dataset.display()),
        )));
    }
    let report_path = workdir.join(&spec.output);
    let tag = format!(
        "{}-{}-{}",
        report_path
            .file_stem()
            .map_or("run".into(), |s| s.to_string_lossy()),
        spec.strategy.strategy,
        spec.strategy.seed
    );
    let mut opts = RunOptions::new(spec.cache_pages, scratch_for(workdir, &tag));
    opts.keep_plans = spec.trace.is_some();
    let report = run_training(&dataset, &spec.strategy, &spec.train, &opts)?;
    let summary = Summary::from_report(&report, &profile)?;

    if let Some(parent) = report_path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&report_path, epoch_csv(&report, &profile))?;
    let summary_path = summary_path_for(&report_path);
    fs::write(&summary_path, summary_csv(std::slice::from_ref(&summary))?)?;
    if let Some(trace) = &spec.trace {
        let mut w = std::io::BufWriter::new(fs::File::create(workdir.join(trace))?);
        for plan in &report.plans {
            plan.write_trace(&mut w)?;
        }
        w.flush()?;
    }
    let _ = fs::remove_dir_all(&opts.scratch_dir);
    Ok(RunOutcome {
        report,
        summary,
        report_path,
        summary_path,
    })
}

/// Strategies × devices × seeds over one dataset and training config.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub dataset: PathBuf,
    /// Strategy templates; each seed below replaces the template seed.
    pub strategies: Vec<StrategyConfig>,
    pub devices: Vec<String>,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
    pub cache_pages: usize,
    /// Cell every other cell is normalized to: `(strategy, device)`.
    pub baseline: (Strategy, String),
    /// Run cells concurrently. Wall-clock compute times would then overlap,
    /// so cells report simulated time only.
    pub parallel: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() || self.devices.is_empty() || self.seeds.is_empty() {
            return Err(invalid(
                "sweep needs at least one strategy, device and seed",
            ));
        }
        for s in &self.strategies {
            s.validate()?;
        }
        self.train.validate()?;
        if !self
            .strategies
            .iter()
            .any(|s| s.strategy == self.baseline.0)
            || !self.devices.contains(&self.baseline.1)
        {
            return Err(invalid(format!(
                "baseline {}+{} is not part of the sweep",
                self.baseline.0, self.baseline.1
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub strategy: Strategy,
    pub device: String,
    pub seed: u64,
    /// `Err` holds the failure message; the cell renders as FAIL.
    pub outcome: std::result::Result<Summary, String>,
    pub normalized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_HEADER);
        out.push('\n');
        for c in &self.cells {
            match (&c.outcome, c.normalized) {
                (Ok(s), Some(norm)) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        c.strategy, c.device, c.seed, s.epochs, s.total_time, norm
                    );
                }
                (Ok(s), None) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},FAIL",
                        c.strategy, c.device, c.seed, s.epochs, s.total_time
                    );
                }
                (Err(_), _) => {
                    let _ = writeln!(out, "{},{},{},FAIL,FAIL,FAIL", c.strategy, c.device, c.seed);
                }
            }
        }
        out
    }

    pub fn cell(&self, strategy: Strategy, device: &str, seed: u64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.strategy == strategy && c.device == device && c.seed == seed)
    }
}

/// Run every (strategy, seed) once and evaluate it under every device.
/// Device profiles only change simulated times, never the training run.
pub fn sweep(spec: &SweepSpec, workdir: &Path) -> Result<SweepTable> {
    spec.validate()?;
    let profiles = spec
        .devices
        .iter()
        .map(|d| DeviceProfile::resolve(d, workdir))
        .collect::<Result<Vec<_>>>()?;
    let dataset = workdir.join(&spec.dataset);
    let (header, eval) = load_all(&dataset)?;
    let f_star = reference_minimum(
        &eval,
        header.num_features as usize,
        spec.train.loss,
        spec.train.lambda,
    )?
    .objective;
    drop(eval);

    let jobs: Vec<(StrategyConfig, u64)> = spec
        .strategies
        .iter()
        .flat_map(|s| {
            spec.seeds.iter().map(move |&seed| {
                let mut cfg = s.clone();
                cfg.seed = seed;
                (cfg, seed)
            })
        })
        .collect();

    let run_job = |(cfg, seed): &(StrategyConfig, u64)| -> (
        Strategy,
        u64,
        std::result::Result<ConvergenceReport, String>,
    ) {
        let tag = format!("sweep-{}-{seed}", cfg.strategy);
        let mut opts = RunOptions::new(spec.cache_pages, scratch_for(workdir, &tag));
        opts.f_star = Some(f_star);
        let result = run_training(&dataset, cfg, &spec.train, &opts).map_err(|e| e.to_string());
        let _ = fs::remove_dir_all(&opts.scratch_dir);
        (cfg.strategy, *seed, result)
    };
    let runs: Vec<_> = if spec.parallel {
        jobs.par_iter().map(run_job).collect()
    } else {
        jobs.iter().map(run_job).collect()
    };

    let mut cells = Vec::new();
    for (strategy, seed, result) in &runs {
        for profile in &profiles {
            let outcome = match result {
                Ok(report) => Summary::from_report(report, profile)
                    .map(|s| if spec.parallel { s.simulated_only() } else { s })
                    .map_err(|e| e.to_string()),
                Err(msg) => Err(msg.clone()),
            };
            cells.push(SweepCell {
                strategy: *strategy,
                device: profile.name.clone(),
                seed: *seed,
                outcome,
                normalized: None,
            });
        }
    }
    let baseline_total = |seed: u64| {
        cells
            .iter()
            .find(|c| {
                c.strategy == spec.baseline.0 && c.device == spec.baseline.1 && c.seed == seed
            })
            .and_then(|c| c.outcome.as_ref().ok())
            .map(|s| s.total_time)
    };
    let norms: Vec<Option<f64>> = cells
        .iter()
        .map(|c| match (&c.outcome, baseline_total(c.seed)) {
            (Ok(s), Some(base)) if base > 0.0 => Some(s.total_time / base),
            _ => None,
        })
        .collect();
    for (c, n) in cells.iter_mut().zip(norms) {
        c.normalized = n;
    }
    Ok(SweepTable { cells })
}
