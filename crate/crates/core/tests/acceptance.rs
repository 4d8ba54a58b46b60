//! Acceptance checks, one line per criterion.
//!
//! Everything runs inside one test so the criteria execute in order and
//! the wall-clock compute timings of criterion 4 are not disturbed by
//! other tests running alongside.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore};
use shufbench::bench::{self, RunSpec, Summary};
use shufbench::dataset::{
    generate_synthetic, load_all, DatasetFile, Features, Layout, OffsetEntry, OffsetTable, Record,
    SyntheticSpec, HEADER_SIZE,
};
use shufbench::loader::{drain_epoch, DataSource, Locator};
use shufbench::rng::rng_from_seed;
use shufbench::shuffle::memory::{assignment_table_bytes, to_mib};
use shufbench::shuffle::{
    page_units, queue_shuffle_stream, records_fill_pages, BmfAssignment, Planner, Strategy,
    StrategyConfig,
};
use shufbench::storage::{CacheOutcome, DeviceProfile, IoContext, IoStats, PageCache};
use shufbench::trainer::{
    batch_gradient, objective, reference_minimum, run_training, ConvergenceReport, LinearModel,
    Loss, OverlapMode, RunOptions, TrainConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct Ledger {
    lines: Vec<(usize, bool)>,
}

impl Ledger {
    fn record(&mut self, id: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let in_time = took <= budget;
        let pass = o.pass && in_time;
        println!(
            "criterion {id:>2} {}: {name} -- {} [{:.2}s of {:.0}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            budget.as_secs_f64()
        );
        self.lines.push((id, pass));
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

// ---------------------------------------------------------------- 1

fn random_table(n: u64, rng: &mut impl Rng) -> OffsetTable {
    let mut offset = HEADER_SIZE as u64;
    let entries = (0..n)
        .map(|_| {
            let length = 8 + 8 * rng.random_range(1..600u32);
            let e = OffsetEntry { offset, length };
            offset += length as u64;
            e
        })
        .collect();
    OffsetTable { entries }
}

fn coverage() -> Outcome {
    let mut rng = rng_from_seed(0xC0);
    let mut checked = 0;
    for strategy in Strategy::ALL {
        for _ in 0..20 {
            let n = rng.random_range(1..3000u64);
            let page_size = 1u64 << rng.random_range(9..14);
            let table = random_table(n, &mut rng);
            let units = if strategy == Strategy::LirsPage && !records_fill_pages(&table, page_size)
            {
                page_units(&table, page_size).len() as u64
            } else {
                n
            };
            let b = rng.random_range(1..=units.min(64)) as usize;
            let seed = rng.next_u64();
            let config = StrategyConfig::new(strategy, b, seed)
                .with_queue_size(rng.random_range(1..200))
                .with_page_size(page_size);
            let planner = match strategy {
                Strategy::BlockMinimization => {
                    Planner::bmf(BmfAssignment::random(n, b, seed).expect("split"), seed)
                }
                _ => Planner::new(&config, n, Some(&table)).expect("planner"),
            };
            for epoch in 0..3 {
                let plan = planner.plan(epoch).expect("plan");
                if !plan.covers_exactly(n) {
                    return outcome(
                        false,
                        format!("{strategy} N={n} B={b} epoch {epoch} not a permutation"),
                    );
                }
                checked += 1;
            }
        }
    }
    outcome(
        true,
        format!("{checked} epoch plans are exact permutations"),
    )
}

// ---------------------------------------------------------------- 2, 3

fn epoch_io(path: &Path, strategy: Strategy, cache_pages: usize) -> (IoStats, u32) {
    let mut ctx = IoContext::new(4096, cache_pages).unwrap();
    let dataset = DatasetFile::open(&mut ctx, path).unwrap();
    let locator = Locator::for_dataset(&dataset, None).unwrap();
    let table = locator.to_table();
    let n = dataset.num_instances();
    let planner = Planner::new(&StrategyConfig::new(strategy, 16, 7), n, Some(&table)).unwrap();
    let source = DataSource::Direct { dataset, locator };
    let plan = planner.plan(0).unwrap();
    let before = ctx.stats();
    drain_epoch(&mut ctx, &source, &plan).unwrap();
    (ctx.stats().since(&before), ctx.max_page_loads_this_epoch())
}

fn page_halving(dir: &Path) -> Outcome {
    // 4 + 4 * 511 = 2048 bytes per record
    let path = dir.join("halving.shfd");
    generate_synthetic(&path, &SyntheticSpec::dense(8192, 511, 0.01, 2)).unwrap();
    let (inst, _) = epoch_io(&path, Strategy::LirsInstance, 8);
    let (page, _) = epoch_io(&path, Strategy::LirsPage, 8);
    let ratio = page.pages_read() as f64 / inst.pages_read() as f64;
    outcome(
        (ratio - 0.5).abs() <= 0.01,
        format!(
            "lirs-page {} / lirs-instance {} page reads = {:.4}",
            page.pages_read(),
            inst.pages_read(),
            ratio
        ),
    )
}

fn boundary_bound(dir: &Path) -> Outcome {
    // 4 + 4 * 767 = 3072 bytes per record
    let path = dir.join("boundary.shfd");
    let n = 6000u64;
    generate_synthetic(&path, &SyntheticSpec::dense(n, 767, 0.01, 3)).unwrap();
    let dataset_pages = (n * 3072).div_ceil(4096);
    let (io, max_loads) = epoch_io(&path, Strategy::LirsPage, 8);
    let pass = max_loads <= 2 && io.pages_read() <= 2 * dataset_pages;
    outcome(
        pass,
        format!(
            "max loads of one page {max_loads}, page reads {} vs 2 x {dataset_pages}",
            io.pages_read()
        ),
    )
}

// ---------------------------------------------------------------- 4, 5

const CONVERGENCE_SEEDS: u64 = 10;
const CONVERGENCE_STRATEGIES: [Strategy; 4] = [
    Strategy::LirsInstance,
    Strategy::LirsPage,
    Strategy::BlockMinimization,
    Strategy::NoShuffle,
];

struct ConvergenceRuns {
    /// Indexed `[seed][strategy]` in `CONVERGENCE_STRATEGIES` order.
    reports: Vec<Vec<ConvergenceReport>>,
}

fn convergence_train() -> TrainConfig {
    TrainConfig {
        learning_rate: 0.5,
        lambda: 1e-3,
        loss: Loss::Logistic,
        max_epochs: 100,
        target_rfvd: 1e-2,
        overlap: OverlapMode::None,
    }
}

fn convergence_runs(dir: &Path) -> ConvergenceRuns {
    let train = convergence_train();
    let mut reports = Vec::new();
    for seed in 0..CONVERGENCE_SEEDS {
        let path = dir.join(format!("convergence-{seed}.shfd"));
        let spec = SyntheticSpec::dense(50_000, 100, 0.05, seed).with_layout(Layout::SortedByLabel);
        generate_synthetic(&path, &spec).unwrap();
        let (_, records) = load_all(&path).unwrap();
        let f_star = reference_minimum(&records, 100, train.loss, train.lambda)
            .unwrap()
            .objective;
        drop(records);
        let mut row = Vec::new();
        for strategy in CONVERGENCE_STRATEGIES {
            // roughly 1/8 of the dataset's pages
            let mut opts = RunOptions::new(600, dir.join(format!("scratch-{seed}-{strategy}")));
            opts.f_star = Some(f_star);
            let config = StrategyConfig::new(strategy, 50, seed);
            row.push(run_training(&path, &config, &train, &opts).unwrap());
        }
        reports.push(row);
    }
    ConvergenceRuns { reports }
}

fn epochs_or_inf(r: &ConvergenceReport) -> f64 {
    r.epochs_to_target.map_or(f64::INFINITY, |e| e as f64)
}

fn convergence_ordering(runs: &ConvergenceRuns) -> Outcome {
    let med = |k: usize| {
        median(
            runs.reports
                .iter()
                .map(|row| epochs_or_inf(&row[k]))
                .collect(),
        )
    };
    let (inst, page, bmf, none) = (med(0), med(1), med(2), med(3));
    outcome(
        inst <= bmf && bmf <= none && page <= bmf,
        format!("median epochs lirs-instance {inst}, lirs-page {page}, bmf {bmf}, none {none}"),
    )
}

fn device_ordering(runs: &ConvergenceRuns) -> Outcome {
    let hdd = DeviceProfile::hdd();
    let optane = DeviceProfile::optane();
    let mean_load = |r: &ConvergenceReport, p: &DeviceProfile| r.time_model(p).t_load;
    let total = |r: &ConvergenceReport, p: &DeviceProfile| r.total_time(p).unwrap();
    let hdd_ratio = median(
        runs.reports
            .iter()
            .map(|row| mean_load(&row[0], &hdd) / mean_load(&row[2], &hdd))
            .collect(),
    );
    let per = |k: usize| {
        median(
            runs.reports
                .iter()
                .map(|row| total(&row[k], &optane))
                .collect(),
        )
    };
    let (inst, page, bmf) = (per(0), per(1), per(2));
    outcome(
        hdd_ratio >= 10.0 && page < bmf,
        format!(
            "hdd load lirs-instance/bmf = {hdd_ratio:.1}x; optane total lirs-page {page:.4}s vs bmf {bmf:.4}s (lirs-instance {inst:.4}s)"
        ),
    )
}

// ---------------------------------------------------------------- 6

fn memory_formulas() -> Outcome {
    let a = assignment_table_bytes(200_000, 8);
    let b = assignment_table_bytes(19_264_097, 8);
    let c = assignment_table_bytes(1_281_167, 4);
    let pass = a == 1_600_000
        && (to_mib(a) - 1.53).abs() < 0.005
        && (to_mib(b).round() - 147.0).abs() < 0.5
        && (to_mib(c) - 4.89).abs() < 0.005;
    outcome(
        pass,
        format!(
            "{a} B = {:.2} MB, {b} B = {:.1} MB, {c} B = {:.2} MB",
            to_mib(a),
            to_mib(b),
            to_mib(c)
        ),
    )
}

// ---------------------------------------------------------------- 7

fn queue_properties() -> Outcome {
    let items: Vec<usize> = (0..500).collect();
    if queue_shuffle_stream(items.clone(), 1, rng_from_seed(1)) != items {
        return outcome(false, "q=1 reordered its input");
    }
    for q in [2usize, 5, 50] {
        for seed in 0..1000 {
            let out = queue_shuffle_stream(items.clone(), q, rng_from_seed(seed));
            for (pos, &item) in out.iter().enumerate() {
                if pos + (q - 1) < item {
                    return outcome(
                        false,
                        format!("q={q} seed={seed}: item {item} emitted at {pos}"),
                    );
                }
            }
        }
    }
    outcome(
        true,
        "q=1 preserves order; q in {2,5,50} over 1000 seeds within bound",
    )
}

// ---------------------------------------------------------------- 8

fn random_batch(rng: &mut impl Rng, dim: usize, sparse: bool) -> Vec<Record> {
    let size = rng.random_range(1..20);
    (0..size)
        .map(|i| {
            let features = if sparse {
                let mut pairs: Vec<(u32, f32)> = Vec::new();
                for j in 0..dim as u32 {
                    if rng.random_bool(0.4) {
                        pairs.push((j, rng.random_range(-2.0..2.0)));
                    }
                }
                if pairs.is_empty() {
                    pairs.push((0, 1.0));
                }
                Features::Sparse(pairs)
            } else {
                Features::Dense((0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            };
            Record {
                instance_id: i,
                label: if rng.random_bool(0.5) { 1 } else { -1 },
                features,
            }
        })
        .collect()
}

fn gradient_check() -> Outcome {
    let mut rng = rng_from_seed(0x8);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for loss in [Loss::Logistic, Loss::SquaredHinge] {
        for trial in 0..100 {
            let dim = rng.random_range(1..12);
            let batch = random_batch(&mut rng, dim, trial % 2 == 1);
            let lambda = rng.random_range(0.0..0.1);
            let model = LinearModel {
                weights: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
                bias: rng.random_range(-1.0..1.0),
            };
            let grad = batch_gradient(&model, &batch, loss, lambda).unwrap();
            let f = |m: &LinearModel| objective(m, &batch, loss, lambda);
            let mut coords: Vec<(f64, f64)> = Vec::new();
            for j in 0..=dim {
                let (mut plus, mut minus) = (model.clone(), model.clone());
                if j < dim {
                    plus.weights[j] += h;
                    minus.weights[j] -= h;
                } else {
                    plus.bias += h;
                    minus.bias -= h;
                }
                let numeric = (f(&plus) - f(&minus)) / (2.0 * h);
                let analytic = if j < dim { grad.weights[j] } else { grad.bias };
                coords.push((analytic, numeric));
            }
            for (a, n) in coords {
                let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-3);
                worst = worst.max(rel);
            }
        }
    }
    outcome(
        worst < 1e-4,
        format!("worst relative error {worst:.2e} over 200 pairs"),
    )
}

// ---------------------------------------------------------------- 9

fn eq1_consistency(dir: &Path, runs: &ConvergenceRuns) -> Outcome {
    let mut rows = 0;
    for row in &runs.reports {
        for report in row {
            for profile in DeviceProfile::builtin() {
                let s = Summary::from_report(report, &profile).unwrap();
                if s.recomputed_total() != s.total_time {
                    return outcome(false, format!("{} on {} disagrees", s.strategy, s.device));
                }
                rows += 1;
            }
        }
    }

    // the emitted file, parsed back
    let path = dir.join("eq1.shfd");
    generate_synthetic(&path, &SyntheticSpec::dense(4000, 50, 0.05, 11)).unwrap();
    let train = TrainConfig {
        overlap: OverlapMode::Prefetch,
        max_epochs: 20,
        ..convergence_train()
    };
    // a device fast enough that every epoch's computing outlasts its loading
    let fast = DeviceProfile {
        name: "ramdisk".into(),
        seq_read_iops: 1e8,
        seq_write_iops: 1e8,
        rand_read_iops: 1e8,
        rand_write_iops: 1e8,
    };
    std::fs::write(dir.join("ramdisk.profile"), fast.to_text()).unwrap();
    let spec = RunSpec {
        dataset: path,
        strategy: StrategyConfig::new(Strategy::LirsPage, 10, 11),
        train,
        device: "ramdisk.profile".into(),
        cache_pages: 32,
        output: dir.join("eq1-report.csv"),
        trace: None,
    };
    let out = bench::run(&spec, dir).unwrap();
    let text = std::fs::read_to_string(bench::summary_path_for(&spec.output)).unwrap();
    let parsed = Summary::parse_csv(&text).unwrap();
    for s in &parsed {
        if s.recomputed_total() != s.total_time {
            return outcome(false, "emitted summary disagrees with its columns");
        }
        rows += 1;
    }

    let tm = out.report.time_model(&fast);
    if tm.t_comp <= tm.t_load {
        return outcome(
            false,
            format!(
                "prefetch run had T_comp {} <= T_load {}",
                tm.t_comp, tm.t_load
            ),
        );
    }
    let hidden = tm.t_preprocess + tm.t_comp * tm.epochs as f64;
    let total = out.report.total_time(&fast).unwrap();
    let rel = (total - hidden).abs() / hidden;
    outcome(
        rel < 1e-9,
        format!("{rows} summaries exact; prefetch total {total:.6}s vs T_pre + T_comp*epochs {hidden:.6}s"),
    )
}

// ---------------------------------------------------------------- 10

/// Most recently used at the back.
struct ReferenceLru {
    capacity: usize,
    order: Vec<u32>,
}

impl ReferenceLru {
    fn access(&mut self, key: u32) -> (bool, Option<u32>) {
        if let Some(i) = self.order.iter().position(|&k| k == key) {
            self.order.remove(i);
            self.order.push(key);
            return (true, None);
        }
        let evicted = if self.order.len() == self.capacity {
            Some(self.order.remove(0))
        } else {
            None
        };
        self.order.push(key);
        (false, evicted)
    }
}

fn lru_oracle() -> Outcome {
    let mut rng = rng_from_seed(0x10);
    for capacity in [1usize, 2, 8, 64] {
        let mut cache = PageCache::new(capacity);
        let mut oracle = ReferenceLru {
            capacity,
            order: Vec::new(),
        };
        let universe = (capacity as u32 * 3).max(4);
        for step in 0..10_000 {
            let key = rng.random_range(0..universe);
            let got = match cache.access(key) {
                CacheOutcome::Hit => (true, None),
                CacheOutcome::Miss { evicted } => (false, evicted),
            };
            if got != oracle.access(key) {
                return outcome(
                    false,
                    format!("capacity {capacity} diverged at access {step}"),
                );
            }
        }
        if cache.resident_lru_order() != oracle.order {
            return outcome(
                false,
                format!("capacity {capacity}: final residency differs"),
            );
        }
    }
    outcome(true, "10^4-access traces match for capacities 1, 2, 8, 64")
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let mut ledger = Ledger { lines: Vec::new() };
    let secs = Duration::from_secs;

    ledger.record(1, "permutation coverage", secs(10), coverage);
    ledger.record(2, "page-transfer halving", secs(30), || page_halving(dir));
    ledger.record(3, "boundary double-load bound", secs(30), || {
        boundary_bound(dir)
    });

    let mut runs = None;
    ledger.record(4, "convergence ordering", secs(300), || {
        let r = convergence_runs(dir);
        let o = convergence_ordering(&r);
        runs = Some(r);
        o
    });
    let runs = runs.unwrap();
    ledger.record(5, "cost-model device ordering", secs(10), || {
        device_ordering(&runs)
    });
    ledger.record(6, "memory-accounting formulas", secs(1), memory_formulas);
    ledger.record(7, "bounded-queue properties", secs(30), queue_properties);
    ledger.record(8, "gradient correctness", secs(30), gradient_check);
    ledger.record(9, "time-model consistency", secs(5), || {
        eq1_consistency(dir, &runs)
    });
    ledger.record(10, "LRU cache oracle", secs(10), lru_oracle);

    let failed: Vec<usize> = ledger
        .lines
        .iter()
        .filter(|(_, p)| !p)
        .map(|(i, _)| *i)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
