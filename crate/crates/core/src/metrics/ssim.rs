//! Structural similarity on the 8-bit scale.

use super::filter::{filter_valid, gaussian_1d, mean};
use super::{check_dims, PEAK};
use crate::error::Result;
use crate::Plane;

const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const C1: f64 = (0.01 * PEAK) * (0.01 * PEAK);
const C2: f64 = (0.03 * PEAK) * (0.03 * PEAK);

fn ssim_term(mu_a: f64, mu_b: f64, var_a: f64, var_b: f64, cov: f64) -> f64 {
    ((2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2)) / ((mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2))
}

/// Mean SSIM over an 11×11 Gaussian (σ = 1.5) window.
///
/// Images smaller than the window in either direction fall back to
/// [`ssim_global`].
pub fn ssim(a: &Plane, b: &Plane) -> Result<f64> {
    check_dims(a, b)?;
    let (rows, cols) = a.dim();
    if rows < WINDOW || cols < WINDOW {
        return ssim_global(a, b);
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
        total += ssim_term(ma, mb, aa[idx] - ma * ma, bb[idx] - mb * mb, ab[idx] - ma * mb);
    }
    Ok(total / mu_a.len() as f64)
}

/// Single-window SSIM over the whole image with population statistics.
pub fn ssim_global(a: &Plane, b: &Plane) -> Result<f64> {
    check_dims(a, b)?;
    let mu_a = mean(a);
    let mu_b = mean(b);
    let n = a.len() as f64;
    let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        var_a += (x - mu_a) * (x - mu_a);
        var_b += (y - mu_b) * (y - mu_b);
        cov += (x - mu_a) * (y - mu_b);
    }
    Ok(ssim_term(mu_a, mu_b, var_a / n, var_b / n, cov / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(seed: u64, dim: (usize, usize)) -> Plane {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn(dim, |_| rng.random_range(0.0..255.0))
    }

    #[test]
    fn identity_and_symmetry() {
        let a = random(1, (24, 20));
        let b = random(2, (24, 20));
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-12);
        let s = ssim(&a, &b).unwrap();
        assert!((-1.0..=1.0).contains(&s));
    }

    #[test]
    fn windowed_agrees_with_global_on_stationary_field() {
        // flat reference against a zero-mean checkerboard: every window sees
        // the same mean and variance up to the Gaussian's alternating sum
        let a = Array2::from_elem((40, 40), 128.0);
        let b = Array2::from_shape_fn((40, 40), |(r, c)| if (r + c) % 2 == 0 { 168.0 } else { 88.0 });
        let w = ssim(&a, &b).unwrap();
        let g = ssim_global(&a, &b).unwrap();
        assert!((w - g).abs() < 1e-6, "{w} vs {g}");
        let flat = Array2::from_elem((20, 20), 180.0);
        assert!((ssim(&a.slice(ndarray::s![..20, ..20]).to_owned(), &flat).unwrap() - ssim_global(&a.slice(ndarray::s![..20, ..20]).to_owned(), &flat).unwrap()).abs() < 1e-12);
    }
}
