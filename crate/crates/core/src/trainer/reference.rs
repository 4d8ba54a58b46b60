//! Reference minimum of the training objective.
//!
//! Full-batch damped Newton iterations on the in-memory dataset. The
//! objective is strongly convex in `w` for `lambda > 0`, so a handful of
//! iterations reach machine precision; the result serves as `f_star` for
//! the relative function value difference.

use nalgebra::{DMatrix, DVector};

use super::model::{objective, LinearModel, Loss};
use crate::dataset::{Features, Record};
use crate::error::{invalid, Result};

const MAX_ITERS: usize = 100;
const BLOCK_ROWS: usize = 256;

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub model: LinearModel,
    pub objective: f64,
    pub iterations: usize,
}

/// Augmented feature vector `[x, 1]` as (index, value) pairs.
fn for_each_augmented(features: &Features, dim: usize, mut f: impl FnMut(usize, f64)) {
    match features {
        Features::Dense(v) => v.iter().enumerate().for_each(|(j, &x)| f(j, x as f64)),
        Features::Sparse(p) => p.iter().for_each(|&(j, x)| f(j as usize, x as f64)),
    }
    f(dim, 1.0);
}

pub fn reference_minimum(
    records: &[Record],
    num_features: usize,
    loss: Loss,
    lambda: f64,
) -> Result<ReferenceSolution> {
    if records.is_empty() {
        return Err(invalid("no records"));
    }
    let d = num_features + 1;
    let n = records.len() as f64;
    let mut model = LinearModel::zeros(num_features);
    let mut f = objective(&model, records, loss, lambda);
    let mut iterations = 0;
    // Rows of sqrt(curvature) * [x, 1], multiplied out in blocks.
    let mut block = DMatrix::<f64>::zeros(BLOCK_ROWS, d);

    for _ in 0..MAX_ITERS {
        iterations += 1;
        let mut grad = DVector::<f64>::zeros(d);
        let mut hess = DMatrix::<f64>::zeros(d, d);
        for chunk in records.chunks(BLOCK_ROWS) {
            block.fill(0.0);
            for (row, r) in chunk.iter().enumerate() {
                let y = r.label as f64;
                let z = model.score(&r.features);
                let g = loss.derivative(y, z) / n;
                let h = (loss.curvature(y, z) / n).sqrt();
                for_each_augmented(&r.features, num_features, |j, x| {
                    grad[j] += g * x;
                    block[(row, j)] = h * x;
                });
            }
            let rows = block.rows(0, chunk.len());
            hess.gemm_tr(1.0, &rows, &rows, 1.0);
        }
        for j in 0..num_features {
            grad[j] += 2.0 * lambda * model.weights[j];
            hess[(j, j)] += 2.0 * lambda;
        }
        hess[(num_features, num_features)] += 1e-12;
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => grad.clone(),
        };
        let decrement = grad.dot(&step);
        // f - f_star is about half the decrement; stop well below what
        // relative differences are ever compared at.
        if decrement <= 1e-12 * f.abs().max(1e-300) {
            break;
        }
        // Backtracking line search on the exact objective.
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..60 {
            let candidate = LinearModel {
                weights: (0..num_features)
                    .map(|j| model.weights[j] - t * step[j])
                    .collect(),
                bias: model.bias - t * step[num_features],
            };
            let fc = objective(&candidate, records, loss, lambda);
            if fc < f && fc <= f - 0.25 * t * decrement {
                model = candidate;
                f = fc;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok(ReferenceSolution {
        model,
        objective: f,
        iterations,
    })
}
