use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use super::format::{DatasetFormat, DatasetHeader, Features, Record};
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, rng_from_seed, stream};

const MAX_RESAMPLES: usize = 100_000;

/// Order in which generated instances are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Layout {
    /// Generation order, i.e. already randomly ordered on disk.
    #[default]
    Random,
    /// All `-1` instances first, then all `+1` instances.
    SortedByLabel,
}

impl std::str::FromStr for Layout {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Layout::Random),
            "sorted" => Ok(Layout::SortedByLabel),
            other => Err(invalid(format!("unknown layout '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub num_instances: u64,
    pub num_features: u32,
    pub format: DatasetFormat,
    /// Upper bound of the per-record nonzero count (sparse only). Each
    /// record draws its count uniformly from `1..=nnz`; `None` means F.
    pub nnz_per_record: Option<u32>,
    pub margin: f64,
    pub seed: u64,
    pub layout: Layout,
}

impl SyntheticSpec {
    pub fn dense(n: u64, f: u32, margin: f64, seed: u64) -> Self {
        SyntheticSpec {
            num_instances: n,
            num_features: f,
            format: DatasetFormat::Dense,
            nnz_per_record: None,
            margin,
            seed,
            layout: Layout::Random,
        }
    }

    pub fn sparse(n: u64, f: u32, nnz: u32, margin: f64, seed: u64) -> Self {
        SyntheticSpec {
            format: DatasetFormat::Sparse,
            nnz_per_record: Some(nnz),
            ..Self::dense(n, f, margin, seed)
        }
    }

    pub fn with_layout(mut self, layout: Layout) -> Self {
        self.layout = layout;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_instances == 0 || self.num_features == 0 {
            return Err(invalid("n and f must be at least 1"));
        }
        if !(self.margin.is_finite() && self.margin > 0.0) {
            return Err(invalid(format!(
                "margin must be positive, got {}",
                self.margin
            )));
        }
        match (self.format, self.nnz_per_record) {
            (DatasetFormat::Sparse, Some(0)) => Err(invalid("nnz must be at least 1")),
            (DatasetFormat::Sparse, Some(k)) if k > self.num_features => Err(invalid(format!(
                "nnz {k} exceeds the feature count {}",
                self.num_features
            ))),
            _ => Ok(()),
        }
    }
}

/// Draw the instances of a linearly separable two-class problem.
///
/// A random unit vector `w*` defines the labels `sign(w* . x)`; points with
/// `|w* . x| < margin` are redrawn. Feature values are rounded to f32
/// before the margin test so the stored data honour it exactly.
pub fn synthesize(spec: &SyntheticSpec) -> Result<Vec<Record>> {
    spec.validate()?;
    let mut rng = rng_from_seed(derive_seed(spec.seed, stream::GENERATOR));
    let f = spec.num_features as usize;
    let mut w: Vec<f64> = (0..f).map(|_| rng.sample(StandardNormal)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        w.iter_mut().for_each(|v| *v /= norm);
    } else {
        w[0] = 1.0;
    }

    let mut records = Vec::with_capacity(spec.num_instances as usize);
    for id in 0..spec.num_instances {
        let mut attempts = 0;
        let (features, score) = loop {
            attempts += 1;
            if attempts > MAX_RESAMPLES {
                return Err(invalid(format!(
                    "margin {} unreachable after {MAX_RESAMPLES} draws",
                    spec.margin
                )));
            }
            let features = draw_features(&mut rng, spec, f);
            let score = features.dot(&w);
            if score.abs() >= spec.margin {
                break (features, score);
            }
        };
        records.push(Record {
            instance_id: id,
            label: if score > 0.0 { 1 } else { -1 },
            features,
        });
    }

    if spec.layout == Layout::SortedByLabel {
        records.sort_by_key(|r| r.label);
        for (i, r) in records.iter_mut().enumerate() {
            r.instance_id = i as u64;
        }
    }
    Ok(records)
}

fn draw_features<R: Rng>(rng: &mut R, spec: &SyntheticSpec, f: usize) -> Features {
    let normal = |rng: &mut R| rng.sample::<f64, _>(StandardNormal) as f32;
    match spec.format {
        DatasetFormat::Dense => Features::Dense((0..f).map(|_| normal(rng)).collect()),
        DatasetFormat::Sparse => {
            let max_nnz = spec.nnz_per_record.unwrap_or(spec.num_features) as usize;
            let nnz = rng.random_range(1..=max_nnz);
            let mut idx = index::sample(rng, f, nnz).into_vec();
            idx.sort_unstable();
            Features::Sparse(idx.into_iter().map(|j| (j as u32, normal(rng))).collect())
        }
    }
}

/// Write `records` as a dataset file.
pub fn write_dataset(
    path: &Path,
    format: DatasetFormat,
    num_features: u32,
    seed: u64,
    records: &[Record],
) -> Result<DatasetHeader> {
    if records.is_empty() {
        return Err(invalid("a dataset needs at least one record"));
    }
    let header = DatasetHeader::new(format, records.len() as u64, num_features, seed);
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(&header.encode())?;
    let mut buf = Vec::new();
    for r in records {
        buf.clear();
        r.encode_into(&mut buf);
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(header)
}

/// Generate a synthetic dataset and write it to `path`.
pub fn generate_synthetic(path: &Path, spec: &SyntheticSpec) -> Result<DatasetHeader> {
    let records = synthesize(spec)?;
    write_dataset(path, spec.format, spec.num_features, spec.seed, &records)
}
