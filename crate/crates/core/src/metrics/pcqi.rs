//! Patch-based contrast quality index.
//!
//! Each 11×11 Gaussian patch contributes the product of a mean-intensity
//! term `exp(-|μ₁-μ₂|/L)`, a contrast-change term
//! `(4/π)·atan((σ₁₂+C)/(σ₁²+C))` and a structure term
//! `(σ₁₂+C)/(σ₁σ₂+C)`. Values above 1 indicate contrast gain.

use std::f64::consts::PI;

use super::check_dims;
use super::filter::{filter_valid, gaussian_1d, mean};
use crate::error::Result;
use crate::Plane;

const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const LEVELS: f64 = 256.0;
const C: f64 = 3.0;

fn patch_score(mu_a: f64, mu_b: f64, var_a: f64, var_b: f64, cov: f64) -> f64 {
    let var_a = var_a.max(0.0);
    let var_b = var_b.max(0.0);
    let contrast = 4.0 / PI * ((cov + C) / (var_a + C)).atan();
    let structure = (cov + C) / (var_a.sqrt() * var_b.sqrt() + C);
    let intensity = (-(mu_a - mu_b).abs() / LEVELS).exp();
    contrast * structure * intensity
}

/// Mean PCQI of `b` relative to reference `a`. Images smaller than the patch
/// are scored as one patch with population statistics.
pub fn pcqi(a: &Plane, b: &Plane) -> Result<f64> {
    check_dims(a, b)?;
    let (rows, cols) = a.dim();
    if rows < WINDOW || cols < WINDOW {
        let (ma, mb) = (mean(a), mean(b));
        let n = a.len() as f64;
        let (mut va, mut vb, mut cv) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b.iter()) {
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
            cv += (x - ma) * (y - mb);
        }
        return Ok(patch_score(ma, mb, va / n, vb / n, cv / n));
    }
    let k = gaussian_1d(WINDOW, SIGMA);
    let mu_a = filter_valid(a, &k);
    let mu_b = filter_valid(b, &k);
    let aa = filter_valid(&(a * a), &k);
    let bb = filter_valid(&(b * b), &k);
    let ab = filter_valid(&(a * b), &k);
    let mut total = 0.0;
    for (idx, &ma) in mu_a.indexed_iter() {
        let mb = mu_b[idx];
        total += patch_score(ma, mb, aa[idx] - ma * ma, bb[idx] - mb * mb, ab[idx] - ma * mb);
    }
    Ok(total / mu_a.len() as f64)
}
