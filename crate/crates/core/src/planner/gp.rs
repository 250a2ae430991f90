//! Exact Gaussian-process regression with a Matérn 5/2 kernel.
//!
//! Outputs are standardized before fitting (zero mean, unit sample variance),
//! so the kernel's signal variance is 1 in standardized space and equals the
//! sample variance of the observations once predictions are mapped back.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const LENGTH_SCALE_GRID: [f64; 4] = [0.05, 0.1, 0.2, 0.4];
pub const DEFAULT_JITTER: f64 = 1e-6;
/// Number of times the jitter is multiplied by 10 before giving up.
pub const JITTER_ESCALATIONS: usize = 3;

const SQRT5: f64 = 2.236_067_977_499_79;

pub fn matern52(r: f64, length_scale: f64) -> f64 {
    let s = SQRT5 * r / length_scale;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Lower-triangular Cholesky factor of a row-major `n × n` SPD matrix.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > 0.0) {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L x = b` in place.
fn forward_sub(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves `Lᵀ x = b` in place.
fn backward_sub(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

#[derive(Debug, Clone)]
pub struct GpModel {
    inputs: Vec<Vec<f64>>,
    y_mean: f64,
    y_std: f64,
    length_scale: f64,
    jitter: f64,
    chol: Vec<f64>,
    /// `(K + λI)⁻¹ y_std` in standardized space.
    weights: Vec<f64>,
    y_standardized: Vec<f64>,
}

impl GpModel {
    /// Fits the GP to `(inputs, outputs)`. Jitter escalates ×10 up to three
    /// times if the kernel matrix is not numerically positive definite.
    pub fn fit(
        inputs: &[Vec<f64>],
        outputs: &[f64],
        length_scale: f64,
        jitter: f64,
    ) -> Result<Self> {
        let n = inputs.len();
        if n == 0 || outputs.len() != n {
            return Err(Error::Argument(format!(
                "GP needs matching non-empty inputs/outputs, got {n} and {}",
                outputs.len()
            )));
        }
        if !(length_scale > 0.0) || !(jitter > 0.0) {
            return Err(Error::Argument(
                "GP length scale and jitter must be > 0".into(),
            ));
        }
        let y_mean = outputs.iter().sum::<f64>() / n as f64;
        let y_std = if n > 1 {
            let var = outputs.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        } else {
            1.0
        };
        let y_standardized: Vec<f64> = outputs.iter().map(|y| (y - y_mean) / y_std).collect();

        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = matern52(dist(&inputs[i], &inputs[j]), length_scale);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }

        let mut lambda = jitter;
        for attempt in 0..=JITTER_ESCALATIONS {
            let mut kj = k.clone();
            for i in 0..n {
                kj[i * n + i] += lambda;
            }
            if let Some(chol) = cholesky(&kj, n) {
                let mut weights = y_standardized.clone();
                forward_sub(&chol, n, &mut weights);
                backward_sub(&chol, n, &mut weights);
                return Ok(Self {
                    inputs: inputs.to_vec(),
                    y_mean,
                    y_std,
                    length_scale,
                    jitter: lambda,
                    chol,
                    weights,
                    y_standardized,
                });
            }
            if attempt < JITTER_ESCALATIONS {
                lambda *= 10.0;
            }
        }
        Err(Error::Numerical(format!(
            "kernel matrix not positive definite even with jitter {lambda:e}"
        )))
    }

    /// Fits one model per candidate length scale and keeps the one with the
    /// highest log marginal likelihood (first on ties).
    pub fn fit_best_length_scale(
        inputs: &[Vec<f64>],
        outputs: &[f64],
        grid: &[f64],
        jitter: f64,
    ) -> Result<Self> {
        let mut best: Option<(f64, GpModel)> = None;
        let mut last_err = None;
        for &ls in grid {
            match Self::fit(inputs, outputs, ls, jitter) {
                Ok(m) => {
                    let lml = m.log_marginal_likelihood();
                    if best.as_ref().is_none_or(|(b, _)| lml > *b) {
                        best = Some((lml, m));
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        best.map(|(_, m)| m).ok_or_else(|| {
            last_err.unwrap_or_else(|| Error::Argument("empty length-scale grid".into()))
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    /// Jitter actually used after escalation.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Prior variance in original output units.
    pub fn signal_variance(&self) -> f64 {
        self.y_std * self.y_std
    }

    pub fn output_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn output_std(&self) -> f64 {
        self.y_std
    }

    /// Log marginal likelihood of the standardized outputs.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.len();
        let fit: f64 = self
            .y_standardized
            .iter()
            .zip(&self.weights)
            .map(|(y, w)| y * w)
            .sum();
        let log_det: f64 = (0..n).map(|i| self.chol[i * n + i].ln()).sum();
        -0.5 * fit - log_det - 0.5 * n as f64 * (2.0 * PI).ln()
    }

    /// Posterior mean and variance in standardized units.
    pub fn predict_standardized(&self, x: &[f64]) -> (f64, f64) {
        let n = self.len();
        let mut kx: Vec<f64> = self
            .inputs
            .iter()
            .map(|xi| matern52(dist(x, xi), self.length_scale))
            .collect();
        let mean: f64 = kx.iter().zip(&self.weights).map(|(k, w)| k * w).sum();
        forward_sub(&self.chol, n, &mut kx);
        let explained: f64 = kx.iter().map(|v| v * v).sum();
        (mean, (1.0 - explained).max(0.0))
    }

    /// Posterior mean and variance in original output units.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let (m, v) = self.predict_standardized(x);
        (self.y_mean + self.y_std * m, v * self.y_std * self.y_std)
    }

    /// Expected improvement over `t_best` (original units) with exploration
    /// offset `xi` in standardized units.
    pub fn expected_improvement(&self, x: &[f64], t_best: f64, xi: f64) -> f64 {
        let (m, v) = self.predict_standardized(x);
        let best_std = (t_best - self.y_mean) / self.y_std;
        super::acquisition::expected_improvement(m, v.sqrt(), best_std, xi)
    }
}
