use crate::error::{invalid, Error, Result};

/// `|f - f_star| / |f_star|`
pub fn relative_fvd(f: f64, f_star: f64) -> Result<f64> {
    if f_star == 0.0 {
        return Err(invalid("reference objective is zero"));
    }
    if !f.is_finite() || !f_star.is_finite() {
        return Err(Error::NonFinite("objective"));
    }
    Ok((f - f_star).abs() / f_star.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverlapMode {
    #[default]
    None,
    /// The next batch is loaded while the current one is computed.
    Prefetch,
}

impl std::str::FromStr for OverlapMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(OverlapMode::None),
            "prefetch" => Ok(OverlapMode::Prefetch),
            other => Err(invalid(format!("unknown overlap mode '{other}'"))),
        }
    }
}

/// Portion of loading hidden behind computation.
pub fn overlap_time(t_load: f64, t_comp: f64, mode: OverlapMode) -> f64 {
    match mode {
        OverlapMode::None => 0.0,
        OverlapMode::Prefetch => t_load.min(t_comp),
    }
}

/// Per-epoch phase times plus the one-off pre-processing cost.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TimeModel {
    pub t_preprocess: f64,
    pub t_load: f64,
    pub t_comp: f64,
    pub t_overlapping: f64,
    pub epochs: usize,
}

impl TimeModel {
    pub fn validate(&self) -> Result<()> {
        let parts = [
            self.t_preprocess,
            self.t_load,
            self.t_comp,
            self.t_overlapping,
        ];
        if parts.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(invalid("phase times must be finite and non-negative"));
        }
        if self.t_overlapping > self.t_load.min(self.t_comp) {
            return Err(invalid(format!(
                "overlap {} exceeds min(load {}, comp {})",
                self.t_overlapping, self.t_load, self.t_comp
            )));
        }
        Ok(())
    }
}

/// `T_preprocess + (T_load + T_comp - T_overlapping) * epochs`
pub fn total_time(tm: &TimeModel) -> Result<f64> {
    tm.validate()?;
    Ok(tm.t_preprocess + (tm.t_load + tm.t_comp - tm.t_overlapping) * tm.epochs as f64)
}
