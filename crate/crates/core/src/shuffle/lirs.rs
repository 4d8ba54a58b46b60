use super::fisher_yates::{fisher_yates, shuffle_in_place};
use super::plan::{split_contiguous, EpochPlan, Strategy};
use crate::dataset::{OffsetTable, HEADER_SIZE};
use crate::error::{invalid, Result};
use crate::rng::epoch_rng;

/// Fresh permutation of all instances for `epoch`, cut into `b` batches.
pub fn plan_lirs_instance(n: u64, b: usize, epoch: usize, seed: u64) -> Result<EpochPlan> {
    if b == 0 {
        return Err(invalid("batch count must be at least 1"));
    }
    if b as u64 > n {
        return Err(invalid(format!("{b} batches exceed {n} instances")));
    }
    let mut rng = epoch_rng(seed, epoch);
    let order = fisher_yates(n as usize, &mut rng);
    Ok(EpochPlan {
        epoch,
        strategy: Strategy::LirsInstance,
        seed,
        batches: split_contiguous(&order, b),
    })
}

/// The instances whose records start inside one page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageUnit {
    pub page: u64,
    /// Ascending, nonempty.
    pub members: Vec<u64>,
}

/// Group instances by the page holding their first byte. Pages are
/// numbered from the end of the file header.
pub fn page_units(table: &OffsetTable, page_size: u64) -> Vec<PageUnit> {
    let mut units: Vec<PageUnit> = Vec::new();
    for (id, entry) in table.entries.iter().enumerate() {
        let page = (entry.offset - HEADER_SIZE as u64) / page_size;
        match units.last_mut() {
            Some(u) if u.page == page => u.members.push(id as u64),
            _ => units.push(PageUnit {
                page,
                members: vec![id as u64],
            }),
        }
    }
    units
}

/// True when records are, on average, at least a page long, in which case
/// page grouping degenerates and instances are shuffled individually.
pub fn records_fill_pages(table: &OffsetTable, page_size: u64) -> bool {
    if table.is_empty() {
        return false;
    }
    let total: u64 = table.entries.iter().map(|e| e.length as u64).sum();
    total / table.len() as u64 >= page_size
}

/// Page-aware plan: permute page units and deal them round-robin into
/// `b` batches, so co-paged instances always share a batch.
pub fn plan_lirs_page(
    table: &OffsetTable,
    page_size: u64,
    b: usize,
    epoch: usize,
    seed: u64,
) -> Result<EpochPlan> {
    if page_size == 0 || !page_size.is_power_of_two() {
        return Err(invalid(format!(
            "page size {page_size} is not a power of two"
        )));
    }
    if b == 0 {
        return Err(invalid("batch count must be at least 1"));
    }
    if records_fill_pages(table, page_size) {
        let mut plan = plan_lirs_instance(table.len() as u64, b, epoch, seed)?;
        plan.strategy = Strategy::LirsPage;
        return Ok(plan);
    }
    let mut units = page_units(table, page_size);
    if b > units.len() {
        return Err(invalid(format!(
            "{b} batches exceed {} page units",
            units.len()
        )));
    }
    let mut rng = epoch_rng(seed, epoch);
    shuffle_in_place(&mut units, &mut rng);
    let mut batches = vec![Vec::new(); b];
    for (k, unit) in units.into_iter().enumerate() {
        batches[k % b].extend(unit.members);
    }
    Ok(EpochPlan {
        epoch,
        strategy: Strategy::LirsPage,
        seed,
        batches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{OffsetEntry, OffsetTable};
    use std::collections::HashMap;

    fn dense_table(n: u64, record: u32) -> OffsetTable {
        OffsetTable::dense(n, record)
    }

    #[test]
    fn four_singletons() {
        let plan = plan_lirs_instance(4, 4, 0, 11).unwrap();
        assert!(plan.batches.iter().all(|b| b.len() == 1));
        assert!(plan.covers_exactly(4));
    }

    #[test]
    fn sixteen_into_four() {
        for seed in 0..20 {
            let plan = plan_lirs_instance(16, 4, 0, seed).unwrap();
            assert!(plan.batches.iter().all(|b| b.len() == 4));
            assert!(plan.covers_exactly(16));
        }
    }

    #[test]
    fn epochs_differ() {
        for seed in 0..100 {
            let a = plan_lirs_instance(16, 4, 0, seed).unwrap();
            let b = plan_lirs_instance(16, 4, 1, seed).unwrap();
            assert_ne!(a.batches, b.batches, "seed {seed}");
        }
    }

    #[test]
    fn too_many_batches() {
        assert!(plan_lirs_instance(3, 4, 0, 0).is_err());
        assert!(plan_lirs_instance(3, 0, 0, 0).is_err());
    }

    #[test]
    fn half_page_pairs_share_batches() {
        // 16 records of 2048 bytes with 4096-byte pages: 8 units of 2.
        let table = dense_table(16, 2048);
        for seed in 0..50 {
            let plan = plan_lirs_page(&table, 4096, 4, 0, seed).unwrap();
            assert!(plan.covers_exactly(16));
            let mut batch_of = HashMap::new();
            for (b, batch) in plan.batches.iter().enumerate() {
                for &id in batch {
                    batch_of.insert(id, b);
                }
            }
            for k in 0..8 {
                assert_eq!(batch_of[&(2 * k)], batch_of[&(2 * k + 1)]);
            }
            // Each pair is adjacent within its batch.
            for batch in &plan.batches {
                for pair in batch.chunks(2) {
                    assert_eq!(pair[0] / 2, pair[1] / 2);
                }
            }
        }
    }

    #[test]
    fn page_sized_records_degenerate_to_instance_plan() {
        let table = dense_table(16, 4096);
        let units = page_units(&table, 4096);
        assert!(units.iter().all(|u| u.members.len() == 1));
        let page = plan_lirs_page(&table, 4096, 4, 2, 9).unwrap();
        let inst = plan_lirs_instance(16, 4, 2, 9).unwrap();
        assert_eq!(page.batches, inst.batches);
    }

    #[test]
    fn unaligned_units_follow_first_byte() {
        let record = 3072u32;
        let table = dense_table(40, record);
        let units = page_units(&table, 4096);
        for unit in &units {
            for &id in &unit.members {
                let rel = table.entries[id as usize].offset - HEADER_SIZE as u64;
                assert_eq!(rel / 4096, unit.page);
            }
        }
        let total: usize = units.iter().map(|u| u.members.len()).sum();
        assert_eq!(total, 40);
    }

    #[test]
    fn variable_length_units() {
        let mut entries = Vec::new();
        let mut off = HEADER_SIZE as u64;
        for len in [1000u32, 3000, 200, 5000, 10, 10] {
            entries.push(OffsetEntry {
                offset: off,
                length: len,
            });
            off += len as u64;
        }
        let table = OffsetTable { entries };
        let units = page_units(&table, 4096);
        let members: Vec<Vec<u64>> = units.iter().map(|u| u.members.clone()).collect();
        // starts: 0, 1000, 4000, 4200, 9200, 9210
        assert_eq!(members, vec![vec![0, 1, 2], vec![3], vec![4, 5]]);
        assert!(plan_lirs_page(&table, 4096, 4, 0, 0).is_err());
    }
}
