//! Executes an epoch plan against storage and hands out batches.
//!
//! Three access paths exist, one per family of strategies:
//!
//! * direct positioned reads located by the offset table or the dense
//!   arithmetic (LIRS, instance and page),
//! * a single forward scan of the dataset feeding a bounded buffer (no
//!   shuffle, bounded queue),
//! * a forward scan of each batch file in plan order (block minimization).

use std::collections::HashMap;

use crate::dataset::{
    dense_offset, read_record_at, DatasetFile, DatasetFormat, OffsetEntry, OffsetTable, Record,
    RecordStream, HEADER_SIZE,
};
use crate::error::{invalid, Error, Result};
use crate::shuffle::{BmfSplit, EpochPlan};
use crate::storage::{IoContext, StreamStart, TrackedFile};

/// Where a record lives: computed for dense data, looked up for sparse.
#[derive(Debug, Clone)]
pub enum Locator {
    Dense {
        record_size: u32,
        num_instances: u64,
    },
    Table(OffsetTable),
}

impl Locator {
    pub fn for_dataset(dataset: &DatasetFile, table: Option<OffsetTable>) -> Result<Locator> {
        match (dataset.header.dense_record_size(), table) {
            (_, Some(t)) => {
                if t.len() as u64 != dataset.num_instances() {
                    return Err(invalid(format!(
                        "offset table has {} entries, dataset has {}",
                        t.len(),
                        dataset.num_instances()
                    )));
                }
                Ok(Locator::Table(t))
            }
            (Some(record_size), None) => Ok(Locator::Dense {
                record_size,
                num_instances: dataset.num_instances(),
            }),
            (None, None) => Err(invalid("sparse datasets need an offset table")),
        }
    }

    pub fn entry(&self, instance_id: u64) -> Result<OffsetEntry> {
        match self {
            Locator::Dense {
                record_size,
                num_instances,
            } => {
                if instance_id >= *num_instances {
                    return Err(invalid(format!("instance {instance_id} out of range")));
                }
                Ok(OffsetEntry {
                    offset: dense_offset(instance_id, HEADER_SIZE as u64, *record_size as u64),
                    length: *record_size,
                })
            }
            Locator::Table(t) => t
                .get(instance_id)
                .ok_or_else(|| invalid(format!("instance {instance_id} out of range"))),
        }
    }

    /// Materialised table, for page-unit construction.
    pub fn to_table(&self) -> OffsetTable {
        match self {
            Locator::Dense {
                record_size,
                num_instances,
            } => OffsetTable::dense(*num_instances, *record_size),
            Locator::Table(t) => t.clone(),
        }
    }
}

#[derive(Debug)]
pub enum DataSource {
    Direct {
        dataset: DatasetFile,
        locator: Locator,
    },
    Sequential {
        dataset: DatasetFile,
    },
    BatchFiles {
        files: Vec<TrackedFile>,
        counts: Vec<u64>,
        location: Vec<(u32, u64)>,
        format: DatasetFormat,
        num_features: u32,
    },
}

impl DataSource {
    pub fn batch_files(
        ctx: &mut IoContext,
        split: &BmfSplit,
        format: DatasetFormat,
        num_features: u32,
    ) -> Result<DataSource> {
        let files = split
            .files
            .iter()
            .map(|p| ctx.open(p, 0))
            .collect::<Result<Vec<_>>>()?;
        let n: usize = split.assignment.members.iter().map(Vec::len).sum();
        Ok(DataSource::BatchFiles {
            files,
            counts: split
                .assignment
                .members
                .iter()
                .map(|m| m.len() as u64)
                .collect(),
            location: split.assignment.location_of(n as u64),
            format,
            num_features,
        })
    }

    /// Begin reading `plan`. Starts a new accounting epoch on `ctx`.
    pub fn epoch<'s>(&'s self, ctx: &mut IoContext, plan: &'s EpochPlan) -> EpochReader<'s> {
        ctx.begin_epoch();
        let sequential = match self {
            DataSource::Sequential { dataset } => Some(SequentialState {
                stream: RecordStream::dataset(ctx, dataset),
                buffer: HashMap::new(),
                peak: 0,
            }),
            _ => None,
        };
        EpochReader {
            source: self,
            plan,
            next_batch: 0,
            sequential,
        }
    }
}

struct SequentialState<'s> {
    stream: RecordStream<'s>,
    buffer: HashMap<u64, Record>,
    peak: usize,
}

/// Batch-by-batch reader for one epoch.
pub struct EpochReader<'s> {
    source: &'s DataSource,
    plan: &'s EpochPlan,
    next_batch: usize,
    sequential: Option<SequentialState<'s>>,
}

impl EpochReader<'_> {
    /// Largest number of records held by the scan buffer so far.
    pub fn peak_buffered(&self) -> usize {
        self.sequential.as_ref().map_or(0, |s| s.peak)
    }

    pub fn next_batch(&mut self, ctx: &mut IoContext) -> Option<Result<Vec<Record>>> {
        let ids = self.plan.batches.get(self.next_batch)?;
        self.next_batch += 1;
        Some(self.read_batch(ctx, ids))
    }

    fn read_batch(&mut self, ctx: &mut IoContext, ids: &[u64]) -> Result<Vec<Record>> {
        match self.source {
            DataSource::Direct { dataset, locator } => ids
                .iter()
                .map(|&id| read_record_at(ctx, dataset, id, locator.entry(id)?))
                .collect(),
            DataSource::Sequential { .. } => {
                let state = self.sequential.as_mut().expect("sequential state");
                ids.iter().map(|&id| state.take(ctx, id)).collect()
            }
            DataSource::BatchFiles {
                files,
                counts,
                location,
                format,
                num_features,
            } => {
                let Some(&first) = ids.first() else {
                    return Ok(Vec::new());
                };
                let (batch, _) = *location
                    .get(first as usize)
                    .ok_or_else(|| invalid(format!("instance {first} out of range")))?;
                let batch = batch as usize;
                if counts[batch] != ids.len() as u64 {
                    return Err(invalid("plan batch does not match its batch file"));
                }
                let mut stream = RecordStream::over(
                    ctx,
                    &files[batch],
                    0,
                    StreamStart::Seek,
                    *format,
                    *num_features,
                    0,
                    counts[batch],
                );
                let mut out = Vec::with_capacity(ids.len());
                for &id in ids {
                    let (mut record, _) = stream
                        .next_record(ctx)
                        .ok_or(Error::TruncatedRecord { instance_id: id })??;
                    record.instance_id = id;
                    out.push(record);
                }
                Ok(out)
            }
        }
    }
}

impl SequentialState<'_> {
    /// Scan forward until `id` has been read, buffering everything passed.
    fn take(&mut self, ctx: &mut IoContext, id: u64) -> Result<Record> {
        loop {
            if let Some(r) = self.buffer.remove(&id) {
                return Ok(r);
            }
            match self.stream.next_record(ctx) {
                Some(item) => {
                    let (record, _) = item?;
                    self.buffer.insert(record.instance_id, record);
                    self.peak = self.peak.max(self.buffer.len());
                }
                None => return Err(invalid(format!("instance {id} not found in scan"))),
            }
        }
    }
}

/// Read every batch of `plan`, keeping the records.
pub fn load_epoch(
    ctx: &mut IoContext,
    source: &DataSource,
    plan: &EpochPlan,
) -> Result<Vec<Vec<Record>>> {
    let mut reader = source.epoch(ctx, plan);
    let mut out = Vec::with_capacity(plan.batches.len());
    while let Some(batch) = reader.next_batch(ctx) {
        out.push(batch?);
    }
    Ok(out)
}

/// Read every batch of `plan` for its I/O side effects only.
pub fn drain_epoch(ctx: &mut IoContext, source: &DataSource, plan: &EpochPlan) -> Result<()> {
    let mut reader = source.epoch(ctx, plan);
    while let Some(batch) = reader.next_batch(ctx) {
        batch?;
    }
    Ok(())
}
