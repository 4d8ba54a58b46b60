use std::path::Path;

use super::IoStats;
use crate::error::{Error, Result};

/// Throughput figures of a storage device, in page operations per second.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceProfile {
    pub name: String,
    pub seq_read_iops: f64,
    pub seq_write_iops: f64,
    pub rand_read_iops: f64,
    pub rand_write_iops: f64,
}

impl DeviceProfile {
    /// WD 10EZEX class hard disk.
    pub fn hdd() -> Self {
        Self::from_rates("hdd", 40_000.0, 36_000.0, 600.0, 300.0)
    }

    /// Intel 750 class NAND flash SSD.
    pub fn ssd() -> Self {
        Self::from_rates("ssd", 563_000.0, 230_000.0, 430_000.0, 230_000.0)
    }

    /// Optane DC P4800X class 3D XPoint SSD.
    pub fn optane() -> Self {
        Self::from_rates("optane", 614_000.0, 512_000.0, 550_000.0, 500_000.0)
    }

    pub fn builtin() -> Vec<DeviceProfile> {
        vec![Self::hdd(), Self::ssd(), Self::optane()]
    }

    fn from_rates(name: &str, sr: f64, sw: f64, rr: f64, rw: f64) -> Self {
        DeviceProfile {
            name: name.to_string(),
            seq_read_iops: sr,
            seq_write_iops: sw,
            rand_read_iops: rr,
            rand_write_iops: rw,
        }
    }

    pub fn builtin_by_name(name: &str) -> Option<DeviceProfile> {
        match name {
            "hdd" => Some(Self::hdd()),
            "ssd" => Some(Self::ssd()),
            "optane" => Some(Self::optane()),
            _ => None,
        }
    }

    /// Built-in profile name, or else a path to a key=value profile file.
    pub fn resolve(name_or_path: &str, base_dir: &Path) -> Result<DeviceProfile> {
        if let Some(p) = Self::builtin_by_name(name_or_path) {
            return Ok(p);
        }
        let path = base_dir.join(name_or_path);
        let text = std::fs::read_to_string(&path).map_err(|e| {
            Error::Profile(format!(
                "'{name_or_path}' is not a built-in profile and cannot be read: {e}"
            ))
        })?;
        Self::parse(&text)
    }

    /// Parse a plain-text profile: one `key=value` per line, `#` comments.
    pub fn parse(text: &str) -> Result<DeviceProfile> {
        let mut name = None;
        let mut rates: [Option<f64>; 4] = [None; 4];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Profile(format!("line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let slot = match key {
                "name" => {
                    name = Some(value.to_string());
                    continue;
                }
                "seq_read_iops" => 0,
                "seq_write_iops" => 1,
                "rand_read_iops" => 2,
                "rand_write_iops" => 3,
                other => return Err(Error::Profile(format!("unknown key '{other}'"))),
            };
            let v: f64 = value
                .parse()
                .map_err(|_| Error::Profile(format!("{key}: '{value}' is not a number")))?;
            rates[slot] = Some(v);
        }
        let missing = |k: &str| Error::Profile(format!("missing key '{k}'"));
        let profile = DeviceProfile {
            name: name.ok_or_else(|| missing("name"))?,
            seq_read_iops: rates[0].ok_or_else(|| missing("seq_read_iops"))?,
            seq_write_iops: rates[1].ok_or_else(|| missing("seq_write_iops"))?,
            rand_read_iops: rates[2].ok_or_else(|| missing("rand_read_iops"))?,
            rand_write_iops: rates[3].ok_or_else(|| missing("rand_write_iops"))?,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.seq_read_iops,
            self.seq_write_iops,
            self.rand_read_iops,
            self.rand_write_iops,
        ];
        if all.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::Profile(format!(
                "{}: rates must be positive",
                self.name
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        format!(
            "name={}\nseq_read_iops={}\nseq_write_iops={}\nrand_read_iops={}\nrand_write_iops={}\n",
            self.name,
            self.seq_read_iops,
            self.seq_write_iops,
            self.rand_read_iops,
            self.rand_write_iops
        )
    }
}

/// Simulated seconds spent transferring the pages counted in `stats`.
pub fn estimate_time(stats: &IoStats, profile: &DeviceProfile) -> f64 {
    stats.pages_read_seq as f64 / profile.seq_read_iops
        + stats.pages_read_rand as f64 / profile.rand_read_iops
        + stats.pages_written_seq as f64 / profile.seq_write_iops
        + stats.pages_written_rand as f64 / profile.rand_write_iops
}
