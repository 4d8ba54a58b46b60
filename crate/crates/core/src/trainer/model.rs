use std::str::FromStr;

use crate::dataset::{Features, Record};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// `ln(1 + exp(-y z))`
    Logistic,
    /// `max(0, 1 - y z)^2`
    SquaredHinge,
}

impl Loss {
    pub fn value(self, y: f64, z: f64) -> f64 {
        match self {
            Loss::Logistic => softplus(-y * z),
            Loss::SquaredHinge => {
                let m = (1.0 - y * z).max(0.0);
                m * m
            }
        }
    }

    /// Derivative with respect to the score `z`.
    pub fn derivative(self, y: f64, z: f64) -> f64 {
        match self {
            Loss::Logistic => -y * sigmoid(-y * z),
            Loss::SquaredHinge => -2.0 * y * (1.0 - y * z).max(0.0),
        }
    }

    /// Second derivative with respect to `z` (generalized for the hinge).
    pub fn curvature(self, y: f64, z: f64) -> f64 {
        match self {
            Loss::Logistic => {
                let s = sigmoid(y * z);
                s * (1.0 - s)
            }
            Loss::SquaredHinge => {
                if y * z < 1.0 {
                    2.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(Loss::Logistic),
            "squared-hinge" => Ok(Loss::SquaredHinge),
            other => Err(invalid(format!("unknown loss '{other}'"))),
        }
    }
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Hyperplane `w . x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn zeros(num_features: usize) -> Self {
        LinearModel {
            weights: vec![0.0; num_features],
            bias: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn score(&self, features: &Features) -> f64 {
        features.dot(&self.weights) + self.bias
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }

    pub fn predict(&self, features: &Features) -> i32 {
        if self.score(features) >= 0.0 {
            1
        } else {
            -1
        }
    }
}

/// Averaged batch gradient plus the batch objective at the same point.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
}

fn check_record(model: &LinearModel, r: &Record) -> Result<()> {
    let dim = model.dim();
    let ok = match &r.features {
        Features::Dense(v) => v.len() == dim,
        Features::Sparse(_) => r.features.min_dimension() <= dim,
    };
    if !ok {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: r.features.min_dimension(),
        });
    }
    if !r.features.all_finite() {
        return Err(Error::NonFinite("features"));
    }
    Ok(())
}

/// Gradient of `(1/|B|) sum loss(y_i, w.x_i + b) + lambda |w|^2` over `batch`.
pub fn batch_gradient(
    model: &LinearModel,
    batch: &[Record],
    loss: Loss,
    lambda: f64,
) -> Result<Gradient> {
    if batch.is_empty() {
        return Err(invalid("empty batch"));
    }
    if !model.is_finite() {
        return Err(Error::NonFinite("model"));
    }
    let mut gw = vec![0.0; model.dim()];
    let mut gb = 0.0;
    let mut total = 0.0;
    for r in batch {
        check_record(model, r)?;
        let y = r.label as f64;
        let z = model.score(&r.features);
        total += loss.value(y, z);
        let d = loss.derivative(y, z);
        r.features.axpy_into(d, &mut gw);
        gb += d;
    }
    let inv = 1.0 / batch.len() as f64;
    let mut reg = 0.0;
    for (g, &w) in gw.iter_mut().zip(&model.weights) {
        *g = *g * inv + 2.0 * lambda * w;
        reg += w * w;
    }
    let grad = Gradient {
        weights: gw,
        bias: gb * inv,
        objective: total * inv + lambda * reg,
    };
    if !(grad.bias.is_finite()
        && grad.objective.is_finite()
        && grad.weights.iter().all(|g| g.is_finite()))
    {
        return Err(Error::NonFinite("gradient"));
    }
    Ok(grad)
}

/// Regularized objective over `records`.
pub fn objective(model: &LinearModel, records: &[Record], loss: Loss, lambda: f64) -> f64 {
    let data: f64 = records
        .iter()
        .map(|r| loss.value(r.label as f64, model.score(&r.features)))
        .sum::<f64>()
        / records.len().max(1) as f64;
    data + lambda * model.weights.iter().map(|w| w * w).sum::<f64>()
}

/// One mini-batch step: `theta -= lr * grad`.
pub fn apply_step(model: &mut LinearModel, grad: &Gradient, learning_rate: f64) {
    for (w, g) in model.weights.iter_mut().zip(&grad.weights) {
        *w -= learning_rate * g;
    }
    model.bias -= learning_rate * grad.bias;
}
