use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use super::metrics::{overlap_time, relative_fvd, total_time, OverlapMode, TimeModel};
use super::model::{apply_step, batch_gradient, objective, LinearModel, Loss};
use super::reference::reference_minimum;
use crate::dataset::{build_offset_table, load_all, DatasetFile, DatasetFormat, Record};
use crate::error::{invalid, Error, Result};
use crate::loader::{DataSource, Locator};
use crate::shuffle::{bmf_initial_split, EpochPlan, Planner, Strategy, StrategyConfig};
use crate::storage::{estimate_time, DeviceProfile, IoContext, IoStats};

/// Objective growth (relative to the starting objective) treated as
/// divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub lambda: f64,
    pub loss: Loss,
    pub max_epochs: usize,
    pub target_rfvd: f64,
    pub overlap: OverlapMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            lambda: 1e-3,
            loss: Loss::Logistic,
            max_epochs: 50,
            target_rfvd: 1e-2,
            overlap: OverlapMode::None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        // A zero learning rate is accepted: it freezes the model.
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(invalid("learning rate must be non-negative"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(invalid("lambda must be non-negative"));
        }
        if !(self.target_rfvd.is_finite() && self.target_rfvd > 0.0) {
            return Err(invalid("target rfvd must be positive"));
        }
        if self.max_epochs == 0 {
            return Err(invalid("max epochs must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub cache_pages: usize,
    /// Where block-minimization batch files are written.
    pub scratch_dir: PathBuf,
    /// Reference minimum; computed from the dataset when absent.
    pub f_star: Option<f64>,
    /// Keep every epoch's plan in the report.
    pub keep_plans: bool,
}

impl RunOptions {
    pub fn new(cache_pages: usize, scratch_dir: impl Into<PathBuf>) -> Self {
        RunOptions {
            cache_pages,
            scratch_dir: scratch_dir.into(),
            f_star: None,
            keep_plans: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseCost {
    pub io: IoStats,
    pub wall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based: the state after this many passes.
    pub epoch: usize,
    pub objective: f64,
    pub rfvd: f64,
    pub io: IoStats,
    pub max_page_loads: u32,
    pub t_load_wall: f64,
    pub t_comp_wall: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub strategy: Strategy,
    pub overlap: OverlapMode,
    pub target_rfvd: f64,
    pub initial_objective: f64,
    pub f_star: f64,
    pub epochs: Vec<EpochRecord>,
    pub epochs_to_target: Option<usize>,
    pub preprocess: PhaseCost,
    pub plans: Vec<EpochPlan>,
    pub model: LinearModel,
}

impl ConvergenceReport {
    pub fn objectives(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.objective).collect()
    }

    pub fn rfvd(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.rfvd).collect()
    }

    /// Epochs counted by the time model: until the target, or all run.
    pub fn counted_epochs(&self) -> usize {
        self.epochs_to_target.unwrap_or(self.epochs.len())
    }

    pub fn training_io(&self) -> IoStats {
        self.epochs[..self.counted_epochs()]
            .iter()
            .fold(IoStats::default(), |acc, e| acc + e.io)
    }

    /// Simulated load seconds of epoch `index` (0-based) on `profile`.
    pub fn t_load_sim(&self, index: usize, profile: &DeviceProfile) -> f64 {
        estimate_time(&self.epochs[index].io, profile)
    }

    pub fn t_preprocess_sim(&self, profile: &DeviceProfile) -> f64 {
        estimate_time(&self.preprocess.io, profile)
    }

    /// Per-epoch averages over the counted epochs, with simulated loading
    /// and measured computing.
    pub fn time_model(&self, profile: &DeviceProfile) -> TimeModel {
        let counted = self.counted_epochs();
        let epochs = &self.epochs[..counted];
        let denom = counted.max(1) as f64;
        let (mut load, mut comp, mut ov) = (0.0, 0.0, 0.0);
        for (i, e) in epochs.iter().enumerate() {
            let l = self.t_load_sim(i, profile);
            load += l;
            comp += e.t_comp_wall;
            ov += overlap_time(l, e.t_comp_wall, self.overlap);
        }
        let (load, comp) = (load / denom, comp / denom);
        TimeModel {
            t_preprocess: self.t_preprocess_sim(profile),
            t_load: load,
            t_comp: comp,
            t_overlapping: (ov / denom).min(load).min(comp),
            epochs: counted,
        }
    }

    pub fn total_time(&self, profile: &DeviceProfile) -> Result<f64> {
        total_time(&self.time_model(profile))
    }
}

enum Feed {
    Batch {
        records: Vec<Record>,
        load_wall: f64,
    },
    EpochEnd {
        io: IoStats,
        max_page_loads: u32,
        plan: Option<EpochPlan>,
    },
    Failed(Error),
}

/// Loader side of one epoch. `emit` returns false to stop early.
fn produce_epoch(
    ctx: &mut IoContext,
    source: &DataSource,
    planner: &Planner,
    epoch: usize,
    keep_plan: bool,
    emit: &mut dyn FnMut(Feed) -> bool,
) -> bool {
    let plan = match planner.plan(epoch) {
        Ok(p) => p,
        Err(e) => return emit(Feed::Failed(e)) && false,
    };
    let before = ctx.stats();
    let mut reader = source.epoch(ctx, &plan);
    loop {
        let start = Instant::now();
        let Some(batch) = reader.next_batch(ctx) else {
            break;
        };
        let load_wall = start.elapsed().as_secs_f64();
        match batch {
            Ok(records) => {
                if !emit(Feed::Batch { records, load_wall }) {
                    return false;
                }
            }
            Err(e) => {
                emit(Feed::Failed(e));
                return false;
            }
        }
    }
    let io = ctx.stats().since(&before);
    let max_page_loads = ctx.max_page_loads_this_epoch();
    emit(Feed::EpochEnd {
        io,
        max_page_loads,
        plan: keep_plan.then_some(plan),
    })
}

enum Control {
    Continue,
    Stop,
}

/// Compute side: owns the model and the evaluation set.
struct Learner<'a> {
    config: &'a TrainConfig,
    eval: &'a [Record],
    f_star: f64,
    initial: f64,
    model: LinearModel,
    seen: Vec<bool>,
    seen_count: usize,
    epoch_load_wall: f64,
    epoch_comp_wall: f64,
    epochs: Vec<EpochRecord>,
    plans: Vec<EpochPlan>,
    reached: Option<usize>,
}

impl<'a> Learner<'a> {
    fn new(config: &'a TrainConfig, eval: &'a [Record], num_features: usize, f_star: f64) -> Self {
        let model = LinearModel::zeros(num_features);
        let initial = objective(&model, eval, config.loss, config.lambda);
        Learner {
            config,
            eval,
            f_star,
            initial,
            model,
            seen: vec![false; eval.len()],
            seen_count: 0,
            epoch_load_wall: 0.0,
            epoch_comp_wall: 0.0,
            epochs: Vec::new(),
            plans: Vec::new(),
            reached: None,
        }
    }

    fn handle(&mut self, feed: Feed) -> Result<Control> {
        match feed {
            Feed::Failed(e) => Err(e),
            Feed::Batch { records, load_wall } => {
                self.epoch_load_wall += load_wall;
                for r in &records {
                    let slot = self.seen.get_mut(r.instance_id as usize).ok_or_else(|| {
                        invalid(format!("instance {} out of range", r.instance_id))
                    })?;
                    if *slot {
                        return Err(invalid(format!(
                            "instance {} delivered twice in one epoch",
                            r.instance_id
                        )));
                    }
                    *slot = true;
                }
                self.seen_count += records.len();
                if records.is_empty() {
                    return Ok(Control::Continue);
                }
                let start = Instant::now();
                let grad =
                    batch_gradient(&self.model, &records, self.config.loss, self.config.lambda)?;
                apply_step(&mut self.model, &grad, self.config.learning_rate);
                self.epoch_comp_wall += start.elapsed().as_secs_f64();
                Ok(Control::Continue)
            }
            Feed::EpochEnd {
                io,
                max_page_loads,
                plan,
            } => {
                let epoch = self.epochs.len() + 1;
                if self.seen_count != self.eval.len() {
                    return Err(invalid(format!(
                        "epoch {epoch} delivered {} of {} instances",
                        self.seen_count,
                        self.eval.len()
                    )));
                }
                self.seen.iter_mut().for_each(|s| *s = false);
                self.seen_count = 0;
                let f = objective(&self.model, self.eval, self.config.loss, self.config.lambda);
                if !f.is_finite() || f > DIVERGENCE_FACTOR * self.initial {
                    return Err(Error::Diverged {
                        epoch,
                        objective: f,
                    });
                }
                let rfvd = relative_fvd(f, self.f_star)?;
                self.epochs.push(EpochRecord {
                    epoch,
                    objective: f,
                    rfvd,
                    io,
                    max_page_loads,
                    t_load_wall: std::mem::take(&mut self.epoch_load_wall),
                    t_comp_wall: std::mem::take(&mut self.epoch_comp_wall),
                });
                self.plans.extend(plan);
                if rfvd <= self.config.target_rfvd {
                    self.reached = Some(epoch);
                    return Ok(Control::Stop);
                }
                Ok(Control::Continue)
            }
        }
    }
}

struct Prepared {
    ctx: IoContext,
    source: DataSource,
    planner: Planner,
    preprocess: PhaseCost,
}

/// Pre-processing each strategy needs before its first epoch.
fn prepare(path: &Path, strategy: &StrategyConfig, opts: &RunOptions) -> Result<Prepared> {
    let mut ctx = IoContext::new(strategy.page_size, opts.cache_pages)?;
    let start = Instant::now();
    let (source, planner) = match strategy.strategy {
        Strategy::NoShuffle | Strategy::BoundedQueue => {
            let dataset = DatasetFile::open(&mut ctx, path)?;
            let planner = Planner::new(strategy, dataset.num_instances(), None)?;
            (DataSource::Sequential { dataset }, planner)
        }
        Strategy::LirsInstance | Strategy::LirsPage => {
            let dataset = DatasetFile::open(&mut ctx, path)?;
            let table = match dataset.header.format {
                DatasetFormat::Dense => None,
                DatasetFormat::Sparse => Some(build_offset_table(&mut ctx, path)?.1),
            };
            let locator = Locator::for_dataset(&dataset, table)?;
            let units = (strategy.strategy == Strategy::LirsPage).then(|| locator.to_table());
            let planner = Planner::new(strategy, dataset.num_instances(), units.as_ref())?;
            (DataSource::Direct { dataset, locator }, planner)
        }
        Strategy::BlockMinimization => {
            let header = DatasetFile::open(&mut ctx, path)?.header;
            let split = bmf_initial_split(
                &mut ctx,
                path,
                &opts.scratch_dir,
                strategy.batches,
                strategy.seed,
            )?;
            let source =
                DataSource::batch_files(&mut ctx, &split, header.format, header.num_features)?;
            (source, Planner::bmf(split.assignment, strategy.seed))
        }
    };
    let preprocess = PhaseCost {
        io: ctx.stats(),
        wall: start.elapsed().as_secs_f64(),
    };
    Ok(Prepared {
        ctx,
        source,
        planner,
        preprocess,
    })
}

/// Pre-process, then train epoch by epoch until the target relative
/// function value difference or `max_epochs`.
pub fn run_training(
    path: &Path,
    strategy: &StrategyConfig,
    config: &TrainConfig,
    opts: &RunOptions,
) -> Result<ConvergenceReport> {
    config.validate()?;
    strategy.validate()?;
    let (header, eval) = load_all(path)?;
    let f_star = match opts.f_star {
        Some(f) => f,
        None => {
            reference_minimum(
                &eval,
                header.num_features as usize,
                config.loss,
                config.lambda,
            )?
            .objective
        }
    };
    let Prepared {
        mut ctx,
        source,
        planner,
        preprocess,
    } = prepare(path, strategy, opts)?;

    let mut learner = Learner::new(config, &eval, header.num_features as usize, f_star);
    let keep = opts.keep_plans;

    match config.overlap {
        OverlapMode::None => {
            let mut failure = None;
            for epoch in 0..config.max_epochs {
                let mut stop = false;
                produce_epoch(
                    &mut ctx,
                    &source,
                    &planner,
                    epoch,
                    keep,
                    &mut |feed| match learner.handle(feed) {
                        Ok(Control::Continue) => true,
                        Ok(Control::Stop) => {
                            stop = true;
                            false
                        }
                        Err(e) => {
                            failure = Some(e);
                            false
                        }
                    },
                );
                if let Some(e) = failure.take() {
                    return Err(e);
                }
                if stop {
                    break;
                }
            }
        }
        OverlapMode::Prefetch => {
            // Rendezvous channel: the loader holds at most one finished
            // batch while the learner computes the current one.
            let (tx, rx) = mpsc::sync_channel::<Feed>(0);
            let max_epochs = config.max_epochs;
            std::thread::scope(|scope| -> Result<()> {
                let ctx = &mut ctx;
                let source = &source;
                let planner = &planner;
                scope.spawn(move || {
                    for epoch in 0..max_epochs {
                        let mut send = |feed| tx.send(feed).is_ok();
                        if !produce_epoch(ctx, source, planner, epoch, keep, &mut send) {
                            break;
                        }
                    }
                });
                let outcome = (|| {
                    for feed in rx.iter() {
                        if let Control::Stop = learner.handle(feed)? {
                            break;
                        }
                    }
                    Ok(())
                })();
                // Unblocks the loader if it is waiting to hand over a batch.
                drop(rx);
                outcome
            })?;
        }
    }

    Ok(ConvergenceReport {
        strategy: strategy.strategy,
        overlap: config.overlap,
        target_rfvd: config.target_rfvd,
        initial_objective: learner.initial,
        f_star,
        epochs_to_target: learner.reached,
        epochs: learner.epochs,
        preprocess,
        plans: learner.plans,
        model: learner.model,
    })
}
