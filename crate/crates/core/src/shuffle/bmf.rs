use std::path::{Path, PathBuf};

use rand::Rng;

use super::fisher_yates::fisher_yates;
use super::plan::{EpochPlan, Strategy};
use crate::dataset::{DatasetFile, RecordStream};
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, epoch_rng, rng_from_seed, stream};
use crate::storage::{AccessKind, IoContext};

/// The fixed instance-to-batch mapping produced by the initial split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BmfAssignment {
    /// Instance ids of each batch, in batch-file order.
    pub members: Vec<Vec<u64>>,
}

impl BmfAssignment {
    /// Each instance goes to a uniformly chosen batch.
    pub fn random(n: u64, b: usize, seed: u64) -> Result<BmfAssignment> {
        if b == 0 {
            return Err(invalid("batch count must be at least 1"));
        }
        let mut rng = rng_from_seed(derive_seed(seed, stream::BMF_SPLIT));
        let mut members = vec![Vec::new(); b];
        for id in 0..n {
            members[rng.random_range(0..b)].push(id);
        }
        Ok(BmfAssignment { members })
    }

    pub fn batches(&self) -> usize {
        self.members.len()
    }

    /// `instance_id -> (batch, position within batch)`.
    pub fn location_of(&self, n: u64) -> Vec<(u32, u64)> {
        let mut loc = vec![(u32::MAX, u64::MAX); n as usize];
        for (b, ids) in self.members.iter().enumerate() {
            for (pos, &id) in ids.iter().enumerate() {
                loc[id as usize] = (b as u32, pos as u64);
            }
        }
        loc
    }
}

/// Result of the one-time split: the mapping and one file per batch.
#[derive(Debug, Clone)]
pub struct BmfSplit {
    pub assignment: BmfAssignment,
    pub files: Vec<PathBuf>,
}

pub fn batch_file_name(dir: &Path, batch: usize) -> PathBuf {
    dir.join(format!("batch-{batch:04}.shfb"))
}

/// Read the dataset sequentially and append each record to the batch file
/// its random assignment names. Batch files hold bare records, no header.
///
/// Reads are charged to `ctx` as a sequential scan; each append is charged
/// as random writes, since consecutive appends rotate across files.
pub fn bmf_initial_split(
    ctx: &mut IoContext,
    dataset_path: &Path,
    scratch_dir: &Path,
    b: usize,
    seed: u64,
) -> Result<BmfSplit> {
    let dataset = DatasetFile::open(ctx, dataset_path)?;
    let n = dataset.num_instances();
    let assignment = BmfAssignment::random(n, b, seed)?;
    let location = assignment.location_of(n);
    std::fs::create_dir_all(scratch_dir)?;

    let paths: Vec<PathBuf> = (0..b).map(|k| batch_file_name(scratch_dir, k)).collect();
    let mut outputs = Vec::with_capacity(b);
    for p in &paths {
        outputs.push(ctx.create(p)?);
    }
    let mut cursors = vec![0u64; b];

    let mut records = RecordStream::dataset(ctx, &dataset);
    let mut buf = Vec::new();
    while let Some(item) = records.next_record(ctx) {
        let (record, _) = item?;
        let (batch, _) = location[record.instance_id as usize];
        let batch = batch as usize;
        buf.clear();
        record.encode_into(&mut buf);
        ctx.write_at(
            &mut outputs[batch],
            cursors[batch],
            &buf,
            AccessKind::Random,
        )?;
        cursors[batch] += buf.len() as u64;
    }
    for f in &outputs {
        f.sync()?;
    }
    Ok(BmfSplit {
        assignment,
        files: paths,
    })
}

/// Same batches every epoch; only their order is reshuffled.
pub fn plan_bmf(assignment: &BmfAssignment, epoch: usize, seed: u64) -> EpochPlan {
    let mut rng = epoch_rng(seed, epoch);
    let order = fisher_yates(assignment.batches(), &mut rng);
    EpochPlan {
        epoch,
        strategy: Strategy::BlockMinimization,
        seed,
        batches: order
            .into_iter()
            .map(|k| assignment.members[k as usize].clone())
            .collect(),
    }
}
