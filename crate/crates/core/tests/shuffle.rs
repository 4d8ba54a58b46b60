use std::collections::BTreeSet;
use std::fs;

use proptest::prelude::*;
use shufbench::dataset::{
    generate_synthetic, load_all, OffsetEntry, OffsetTable, SyntheticSpec, HEADER_SIZE,
};
use shufbench::loader::{load_epoch, DataSource};
use shufbench::shuffle::{
    bmf_initial_split, page_units, plan_bmf, plan_lirs_instance, plan_lirs_page, plan_no_shuffle,
    plan_queue, read_trace, split_sizes, BmfAssignment, Planner, Strategy, StrategyConfig,
};
use shufbench::storage::{IoContext, IoStats};

fn variable_table(lengths: &[u32]) -> OffsetTable {
    let mut offset = HEADER_SIZE as u64;
    let entries = lengths
        .iter()
        .map(|&length| {
            let e = OffsetEntry { offset, length };
            offset += length as u64;
            e
        })
        .collect();
    OffsetTable { entries }
}

fn planner_for(
    strategy: Strategy,
    table: &OffsetTable,
    b: usize,
    q: usize,
    p: u64,
    seed: u64,
) -> Planner {
    let n = table.len() as u64;
    match strategy {
        Strategy::BlockMinimization => {
            Planner::bmf(BmfAssignment::random(n, b, seed).unwrap(), seed)
        }
        _ => {
            let config = StrategyConfig::new(strategy, b, seed)
                .with_queue_size(q)
                .with_page_size(p);
            Planner::new(&config, n, Some(table)).unwrap()
        }
    }
}

fn arb_strategy() -> impl proptest::strategy::Strategy<Value = Strategy> {
    prop::sample::select(Strategy::ALL.to_vec())
}

proptest! {
    #[test]
    fn every_epoch_is_a_permutation(
        strategy in arb_strategy(),
        lengths in prop::collection::vec(1u32..700, 1..400),
        b in 1usize..40,
        q in 1usize..100,
        page_shift in 8u32..13,
        seed in any::<u64>(),
        epoch in 0usize..20,
    ) {
        let table = variable_table(&lengths);
        let p = 1u64 << page_shift;
        let units = page_units(&table, p).len();
        let limit = if strategy == Strategy::LirsPage { units.min(lengths.len()) } else { lengths.len() };
        let b = b.min(limit).max(1);
        let planner = planner_for(strategy, &table, b, q, p, seed);
        let plan = planner.plan(epoch).unwrap();
        prop_assert!(plan.covers_exactly(lengths.len() as u64));
        prop_assert_eq!(plan.batches.len(), b);
        prop_assert_eq!(&planner.plan(epoch).unwrap(), &plan);
    }

    #[test]
    fn co_paged_instances_share_a_batch(
        lengths in prop::collection::vec(1u32..3000, 2..400),
        b in 1usize..20,
        seed in any::<u64>(),
    ) {
        let table = variable_table(&lengths);
        let units = page_units(&table, 4096);
        prop_assume!(b <= units.len());
        let plan = plan_lirs_page(&table, 4096, b, 1, seed).unwrap();
        let mut batch_of = vec![usize::MAX; lengths.len()];
        for (k, batch) in plan.batches.iter().enumerate() {
            for &id in batch {
                batch_of[id as usize] = k;
            }
        }
        for (id, e) in table.entries.iter().enumerate() {
            let first = table.entries.iter().position(|o| (o.offset - HEADER_SIZE as u64) / 4096 == (e.offset - HEADER_SIZE as u64) / 4096).unwrap();
            prop_assert_eq!(batch_of[id], batch_of[first]);
        }
    }

    #[test]
    fn bmf_membership_is_stable(n in 1u64..500, b in 1usize..30, seed in any::<u64>()) {
        let b = b.min(n as usize);
        let a = BmfAssignment::random(n, b, seed).unwrap();
        let sets = |e: usize| -> BTreeSet<Vec<u64>> {
            plan_bmf(&a, e, seed).batches.into_iter().collect()
        };
        let first = sets(0);
        for e in 1..5 {
            prop_assert_eq!(&sets(e), &first);
        }
    }

    #[test]
    fn remainder_goes_to_leading_batches(n in 1usize..1000, b in 1usize..50) {
        let b = b.min(n);
        let sizes = split_sizes(n, b);
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        for (i, s) in sizes.iter().enumerate() {
            prop_assert_eq!(*s, n / b + usize::from(i < n % b));
        }
    }
}

#[test]
fn lirs_plans_vary_across_epochs() {
    for seed in 0..100 {
        let a = plan_lirs_instance(16, 4, 0, seed).unwrap();
        let b = plan_lirs_instance(16, 4, 1, seed).unwrap();
        assert_ne!(a.batches, b.batches, "seed {seed}");
    }
}

#[test]
fn lirs_instance_examples() {
    let plan = plan_lirs_instance(4, 4, 0, 1).unwrap();
    assert!(plan.batches.iter().all(|b| b.len() == 1));
    assert!(plan.covers_exactly(4));
    let plan = plan_lirs_instance(16, 4, 0, 9).unwrap();
    assert!(plan.batches.iter().all(|b| b.len() == 4));
    assert!(plan_lirs_instance(3, 4, 0, 1).is_err());
}

#[test]
fn page_plan_rejects_too_many_batches() {
    let table = OffsetTable::dense(16, 2048);
    assert!(plan_lirs_page(&table, 4096, 9, 0, 0).is_err());
    assert!(plan_lirs_page(&table, 4096, 8, 0, 0).is_ok());
}

#[test]
fn no_shuffle_is_disk_order() {
    let plan = plan_no_shuffle(10, 3, 4).unwrap();
    assert_eq!(
        plan.batches,
        vec![vec![0, 1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]
    );
}

#[test]
fn queue_of_one_is_disk_order() {
    let plan = plan_queue(50, 5, 1, 3, 77).unwrap();
    assert_eq!(plan.flatten(), (0..50).collect::<Vec<_>>());
}

#[test]
fn trace_round_trip() {
    let plan = plan_lirs_instance(20, 3, 2, 5).unwrap();
    let mut buf = Vec::new();
    plan.write_trace(&mut buf).unwrap();
    let rows = read_trace(&buf[..]).unwrap();
    assert_eq!(rows.len(), 20);
    let ids: Vec<u64> = rows.iter().map(|r| r.2).collect();
    assert_eq!(ids, plan.flatten());
    assert!(rows.iter().all(|r| r.0 == 2));
    assert!(read_trace(&b"1,2\n"[..]).is_err());
}

#[test]
fn split_with_one_batch_copies_records_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.shfd");
    generate_synthetic(&path, &SyntheticSpec::sparse(300, 40, 7, 0.05, 2)).unwrap();
    let mut ctx = IoContext::new(4096, 8).unwrap();
    let split = bmf_initial_split(&mut ctx, &path, &dir.path().join("scratch"), 1, 4).unwrap();
    assert_eq!(split.files.len(), 1);
    let body = fs::read(&path).unwrap()[HEADER_SIZE..].to_vec();
    assert_eq!(fs::read(&split.files[0]).unwrap(), body);
}

#[test]
fn split_covers_all_ids_and_is_charged() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.shfd");
    let n = 2000u64;
    generate_synthetic(&path, &SyntheticSpec::dense(n, 20, 0.05, 8)).unwrap();
    let (header, records) = load_all(&path).unwrap();
    let mut ctx = IoContext::new(4096, 8).unwrap();
    let split = bmf_initial_split(&mut ctx, &path, &dir.path().join("scratch"), 7, 4).unwrap();
    let ids: BTreeSet<u64> = split.assignment.members.iter().flatten().copied().collect();
    assert_eq!(ids, (0..n).collect());

    let stats = ctx.stats();
    let body = n * header.dense_record_size().unwrap() as u64;
    assert_eq!(stats.pages_read_seq, body.div_ceil(4096));
    assert_eq!(stats.pages_read_rand, 0);
    assert!(stats.pages_written_rand >= n);
    assert_eq!(stats.pages_written_seq, 0);

    // reading the batch files returns the original records
    let source =
        DataSource::batch_files(&mut ctx, &split, header.format, header.num_features).unwrap();
    let plan = plan_bmf(&split.assignment, 0, 4);
    let before = ctx.stats();
    let batches = load_epoch(&mut ctx, &source, &plan).unwrap();
    for (batch, ids) in batches.iter().zip(&plan.batches) {
        for (r, id) in batch.iter().zip(ids) {
            assert_eq!(r, &records[*id as usize]);
        }
    }
    let d: IoStats = ctx.stats().since(&before);
    let nonempty = split
        .assignment
        .members
        .iter()
        .filter(|m| !m.is_empty())
        .count() as u64;
    assert_eq!(d.pages_read_rand, nonempty);
}
