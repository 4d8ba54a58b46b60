use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SHFBNCH1";
pub const HEADER_SIZE: usize = 32;
pub const LABEL_WIDTH: u8 = 4;

/// Bytes of a sparse record before its (index, value) pairs: label + nnz.
pub const SPARSE_PREFIX: usize = 8;
pub const SPARSE_PAIR: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetFormat {
    Dense,
    Sparse,
}

impl DatasetFormat {
    fn tag(self) -> u8 {
        match self {
            DatasetFormat::Dense => 0,
            DatasetFormat::Sparse => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(DatasetFormat::Dense),
            1 => Ok(DatasetFormat::Sparse),
            other => Err(Error::CorruptHeader(format!("unknown format tag {other}"))),
        }
    }
}

impl std::fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DatasetFormat::Dense => "dense",
            DatasetFormat::Sparse => "sparse",
        })
    }
}

impl std::str::FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(DatasetFormat::Dense),
            "sparse" => Ok(DatasetFormat::Sparse),
            other => Err(Error::InvalidArgument(format!("unknown format '{other}'"))),
        }
    }
}

/// Fixed 32-byte file header.
///
/// Layout (little endian): magic `SHFBNCH1`, format tag (u8), N (u64),
/// F (u32), label width (u8), generator seed (u64), two zero pad bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetHeader {
    pub format: DatasetFormat,
    pub num_instances: u64,
    pub num_features: u32,
    pub label_width: u8,
    pub created_seed: u64,
}

impl DatasetHeader {
    pub fn new(format: DatasetFormat, num_instances: u64, num_features: u32, seed: u64) -> Self {
        DatasetHeader {
            format,
            num_instances,
            num_features,
            label_width: LABEL_WIDTH,
            created_seed: seed,
        }
    }

    pub fn encode(&self) -> [u8; HEADER_SIZE] {
        let mut out = [0u8; HEADER_SIZE];
        out[0..8].copy_from_slice(MAGIC);
        out[8] = self.format.tag();
        out[9..17].copy_from_slice(&self.num_instances.to_le_bytes());
        out[17..21].copy_from_slice(&self.num_features.to_le_bytes());
        out[21] = self.label_width;
        out[22..30].copy_from_slice(&self.created_seed.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_SIZE {
            return Err(Error::TruncatedHeader);
        }
        if &bytes[0..8] != MAGIC {
            return Err(Error::BadMagic);
        }
        let format = DatasetFormat::from_tag(bytes[8])?;
        let num_instances = u64::from_le_bytes(bytes[9..17].try_into().unwrap());
        let num_features = u32::from_le_bytes(bytes[17..21].try_into().unwrap());
        let label_width = bytes[21];
        let created_seed = u64::from_le_bytes(bytes[22..30].try_into().unwrap());
        if num_instances == 0 || num_features == 0 {
            return Err(Error::CorruptHeader("N and F must be at least 1".into()));
        }
        if label_width != LABEL_WIDTH {
            return Err(Error::CorruptHeader(format!(
                "label width {label_width}, expected {LABEL_WIDTH}"
            )));
        }
        Ok(DatasetHeader {
            format,
            num_instances,
            num_features,
            label_width,
            created_seed,
        })
    }

    /// Serialized length of every record, for dense datasets.
    pub fn dense_record_size(&self) -> Option<u32> {
        match self.format {
            DatasetFormat::Dense => Some(dense_record_size(self.num_features)),
            DatasetFormat::Sparse => None,
        }
    }
}

pub fn dense_record_size(num_features: u32) -> u32 {
    LABEL_WIDTH as u32 + 4 * num_features
}

pub fn sparse_record_size(nnz: usize) -> usize {
    SPARSE_PREFIX + SPARSE_PAIR * nnz
}

#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Dense(Vec<f32>),
    /// `(feature_index, value)` pairs, strictly increasing in index.
    Sparse(Vec<(u32, f32)>),
}

impl Features {
    pub fn dot(&self, weights: &[f64]) -> f64 {
        match self {
            Features::Dense(values) => values
                .iter()
                .zip(weights)
                .map(|(&x, &w)| x as f64 * w)
                .sum(),
            Features::Sparse(pairs) => pairs
                .iter()
                .map(|&(j, x)| x as f64 * weights[j as usize])
                .sum(),
        }
    }

    /// `target += scale * x`
    pub fn axpy_into(&self, scale: f64, target: &mut [f64]) {
        match self {
            Features::Dense(values) => {
                for (t, &x) in target.iter_mut().zip(values) {
                    *t += scale * x as f64;
                }
            }
            Features::Sparse(pairs) => {
                for &(j, x) in pairs {
                    target[j as usize] += scale * x as f64;
                }
            }
        }
    }

    /// Smallest dimension able to hold these features.
    pub fn min_dimension(&self) -> usize {
        match self {
            Features::Dense(values) => values.len(),
            Features::Sparse(pairs) => pairs.last().map_or(0, |&(j, _)| j as usize + 1),
        }
    }

    pub fn all_finite(&self) -> bool {
        match self {
            Features::Dense(values) => values.iter().all(|v| v.is_finite()),
            Features::Sparse(pairs) => pairs.iter().all(|(_, v)| v.is_finite()),
        }
    }
}

/// One labeled training instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub instance_id: u64,
    pub label: i32,
    pub features: Features,
}

impl Record {
    pub fn serialized_len(&self) -> usize {
        match &self.features {
            Features::Dense(values) => LABEL_WIDTH as usize + 4 * values.len(),
            Features::Sparse(pairs) => sparse_record_size(pairs.len()),
        }
    }

    /// Append the on-disk form of this record. The instance id is implied
    /// by position and is not stored.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.label.to_le_bytes());
        match &self.features {
            Features::Dense(values) => {
                for v in values {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            Features::Sparse(pairs) => {
                out.extend_from_slice(&(pairs.len() as u32).to_le_bytes());
                for (j, v) in pairs {
                    out.extend_from_slice(&j.to_le_bytes());
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_len());
        self.encode_into(&mut out);
        out
    }

    /// Decode exactly one record occupying all of `bytes`.
    pub fn decode(
        bytes: &[u8],
        format: DatasetFormat,
        num_features: u32,
        instance_id: u64,
    ) -> Result<Record> {
        let corrupt = |reason: String| Error::CorruptRecord {
            instance_id,
            reason,
        };
        if bytes.len() < LABEL_WIDTH as usize {
            return Err(Error::TruncatedRecord { instance_id });
        }
        let label = i32::from_le_bytes(bytes[0..4].try_into().unwrap());
        if label != 1 && label != -1 {
            return Err(corrupt(format!("label {label} is not +1 or -1")));
        }
        let features = match format {
            DatasetFormat::Dense => {
                let expected = dense_record_size(num_features) as usize;
                if bytes.len() != expected {
                    return Err(corrupt(format!(
                        "length {} but dense records are {expected} bytes",
                        bytes.len()
                    )));
                }
                Features::Dense(
                    bytes[4..]
                        .chunks_exact(4)
                        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                )
            }
            DatasetFormat::Sparse => {
                let nnz = sparse_nnz(bytes, num_features, instance_id)?;
                if bytes.len() != sparse_record_size(nnz) {
                    return Err(corrupt(format!(
                        "length {} does not match nnz {nnz}",
                        bytes.len()
                    )));
                }
                let mut pairs = Vec::with_capacity(nnz);
                let mut previous: Option<u32> = None;
                for c in bytes[SPARSE_PREFIX..].chunks_exact(SPARSE_PAIR) {
                    let j = u32::from_le_bytes(c[0..4].try_into().unwrap());
                    let v = f32::from_le_bytes(c[4..8].try_into().unwrap());
                    if j >= num_features {
                        return Err(corrupt(format!("feature index {j} >= F={num_features}")));
                    }
                    if previous.is_some_and(|p| j <= p) {
                        return Err(corrupt("feature indices not strictly increasing".into()));
                    }
                    previous = Some(j);
                    pairs.push((j, v));
                }
                Features::Sparse(pairs)
            }
        };
        Ok(Record {
            instance_id,
            label,
            features,
        })
    }
}

/// Read the nnz field from a sparse record prefix and check it against F.
pub fn sparse_nnz(prefix: &[u8], num_features: u32, instance_id: u64) -> Result<usize> {
    if prefix.len() < SPARSE_PREFIX {
        return Err(Error::TruncatedRecord { instance_id });
    }
    let nnz = u32::from_le_bytes(prefix[4..8].try_into().unwrap());
    if nnz > num_features {
        return Err(Error::CorruptRecord {
            instance_id,
            reason: format!("nnz {nnz} exceeds F={num_features}"),
        });
    }
    Ok(nnz as usize)
}
