use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::format::{DatasetHeader, HEADER_SIZE};
use super::reader::{DatasetFile, RecordStream};
use crate::error::{Error, Result};
use crate::storage::IoContext;

/// Bytes per sidecar entry: u64 offset + u32 length.
pub const SIDECAR_ENTRY: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OffsetEntry {
    pub offset: u64,
    pub length: u32,
}

impl OffsetEntry {
    pub fn end(&self) -> u64 {
        self.offset + self.length as u64
    }
}

/// Byte position and length of every record, indexed by instance id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OffsetTable {
    pub entries: Vec<OffsetEntry>,
}

impl OffsetTable {
    /// Table for a dense dataset, computed without touching the file.
    pub fn dense(num_instances: u64, record_size: u32) -> OffsetTable {
        let entries = (0..num_instances)
            .map(|i| OffsetEntry {
                offset: dense_offset(i, HEADER_SIZE as u64, record_size as u64),
                length: record_size,
            })
            .collect();
        OffsetTable { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, instance_id: u64) -> Option<OffsetEntry> {
        self.entries.get(instance_id as usize).copied()
    }

    /// Check contiguity from the header onwards.
    pub fn validate(&self) -> Result<()> {
        let mut expected = HEADER_SIZE as u64;
        for (i, e) in self.entries.iter().enumerate() {
            if e.offset != expected {
                return Err(Error::CorruptRecord {
                    instance_id: i as u64,
                    reason: format!(
                        "offset {} but previous record ended at {expected}",
                        e.offset
                    ),
                });
            }
            expected = e.end();
        }
        Ok(())
    }

    /// In-memory footprint at `offset_width` bytes per stored offset.
    pub fn memory_bytes(&self, offset_width: u64) -> u64 {
        self.entries.len() as u64 * offset_width
    }

    pub fn write_sidecar(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        for e in &self.entries {
            w.write_all(&e.offset.to_le_bytes())?;
            w.write_all(&e.length.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_sidecar(path: &Path) -> Result<OffsetTable> {
        let mut bytes = Vec::new();
        BufReader::new(std::fs::File::open(path)?).read_to_end(&mut bytes)?;
        if bytes.len() % SIDECAR_ENTRY != 0 {
            return Err(Error::InvalidArgument(format!(
                "offset sidecar length {} is not a multiple of {SIDECAR_ENTRY}",
                bytes.len()
            )));
        }
        let entries = bytes
            .chunks_exact(SIDECAR_ENTRY)
            .map(|c| OffsetEntry {
                offset: u64::from_le_bytes(c[0..8].try_into().unwrap()),
                length: u32::from_le_bytes(c[8..12].try_into().unwrap()),
            })
            .collect();
        let table = OffsetTable { entries };
        table.validate()?;
        Ok(table)
    }
}

/// Offset of record `instance_id` in a dense file.
pub fn dense_offset(instance_id: u64, header_size: u64, record_size: u64) -> u64 {
    header_size + instance_id * record_size
}

/// Scan the whole dataset once, front to back, recording where each
/// record lives. The scan's page reads are charged to `ctx`.
pub fn build_offset_table(
    ctx: &mut IoContext,
    path: &Path,
) -> Result<(DatasetHeader, OffsetTable)> {
    let dataset = DatasetFile::open(ctx, path)?;
    let mut entries = Vec::with_capacity(dataset.header.num_instances as usize);
    let mut stream = RecordStream::dataset(ctx, &dataset).with(ctx);
    for item in stream.by_ref() {
        let (_, entry) = item?;
        entries.push(entry);
    }
    let trailing = stream.remaining_bytes();
    if trailing != 0 {
        return Err(Error::CorruptRecord {
            instance_id: dataset.header.num_instances,
            reason: format!("{trailing} trailing bytes after the last record"),
        });
    }
    Ok((dataset.header, OffsetTable { entries }))
}

/// Sidecar path for a dataset: same stem, `.shfo` extension.
pub fn sidecar_path(dataset: &Path) -> std::path::PathBuf {
    dataset.with_extension("shfo")
}
