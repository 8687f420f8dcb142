//! Feature similarity (FSIM) on luminance.
//!
//! Phase congruency follows Kovesi's log-Gabor construction with the
//! parameters of the reference FSIM implementation: 4 scales, 4 orientations,
//! minimum wavelength 6, scale factor 2, `σ_f/f₀ = 0.55`, angular spread
//! ratio 1.2, noise threshold `k = 2` rescaled by 1/1.7. Gradients use the
//! Scharr operator.

use std::f64::consts::PI;

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::check_dims;
use super::filter::correlate3_same;
use crate::error::Result;
use crate::Plane;

const NSCALE: usize = 4;
const NORIENT: usize = 4;
const MIN_WAVELENGTH: f64 = 6.0;
const MULT: f64 = 2.0;
const SIGMA_ON_F: f64 = 0.55;
const D_THETA_ON_SIGMA: f64 = 1.2;
const NOISE_K: f64 = 2.0;
const EPSILON: f64 = 1e-4;
const T1: f64 = 0.85;
const T2: f64 = 160.0;

const SCHARR_X: [[f64; 3]; 3] = [
    [3.0 / 16.0, 0.0, -3.0 / 16.0],
    [10.0 / 16.0, 0.0, -10.0 / 16.0],
    [3.0 / 16.0, 0.0, -3.0 / 16.0],
];
const SCHARR_Y: [[f64; 3]; 3] = [
    [3.0 / 16.0, 10.0 / 16.0, 3.0 / 16.0],
    [0.0, 0.0, 0.0],
    [-3.0 / 16.0, -10.0 / 16.0, -3.0 / 16.0],
];

/// Normalised frequency coordinate of FFT bin `i` out of `n`, in `[-0.5, 0.5]`.
fn freq_coord(i: usize, n: usize) -> f64 {
    if n == 1 {
        return 0.0;
    }
    let idx = (i + n / 2) % n;
    if n % 2 == 1 {
        (idx as f64 - (n - 1) as f64 / 2.0) / (n - 1) as f64
    } else {
        (idx as f64 - (n / 2) as f64) / n as f64
    }
}

/// Row-major 2D FFT helper.
struct Fft2 {
    rows: usize,
    cols: usize,
    row_fft: std::sync::Arc<dyn Fft<f64>>,
    col_fft: std::sync::Arc<dyn Fft<f64>>,
    row_ifft: std::sync::Arc<dyn Fft<f64>>,
    col_ifft: std::sync::Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            row_fft: planner.plan_fft_forward(cols),
            col_fft: planner.plan_fft_forward(rows),
            row_ifft: planner.plan_fft_inverse(cols),
            col_ifft: planner.plan_fft_inverse(rows),
        }
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let (row_fft, col_fft) = if inverse {
            (&self.row_ifft, &self.col_ifft)
        } else {
            (&self.row_fft, &self.col_fft)
        };
        for row in data.chunks_exact_mut(self.cols) {
            row_fft.process(row);
        }
        let mut column = vec![Complex64::default(); self.rows];
        for c in 0..self.cols {
            for r in 0..self.rows {
                column[r] = data[r * self.cols + c];
            }
            col_fft.process(&mut column);
            for r in 0..self.rows {
                data[r * self.cols + c] = column[r];
            }
        }
        if inverse {
            let scale = 1.0 / (self.rows * self.cols) as f64;
            for v in data.iter_mut() {
                *v *= scale;
            }
        }
    }
}

/// MATLAB-style median: even counts average the two middle values.
fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Phase congruency map with values in `[0, 1]`. Pixels with no filter
/// response get 0.
pub fn phase_congruency(image: &Plane) -> Plane {
    let (rows, cols) = image.dim();
    let n = rows * cols;
    let fft = Fft2::new(rows, cols);
    let mut spectrum: Vec<Complex64> = image.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.run(&mut spectrum, false);

    let mut radius = vec![0.0; n];
    let mut sin_t = vec![0.0; n];
    let mut cos_t = vec![0.0; n];
    let mut lowpass = vec![0.0; n];
    for r in 0..rows {
        let y = freq_coord(r, rows);
        for c in 0..cols {
            let x = freq_coord(c, cols);
            let idx = r * cols + c;
            let rad = (x * x + y * y).sqrt();
            lowpass[idx] = 1.0 / (1.0 + (rad / 0.45).powi(30));
            radius[idx] = rad;
            let theta = (-y).atan2(x);
            sin_t[idx] = theta.sin();
            cos_t[idx] = theta.cos();
        }
    }
    radius[0] = 1.0;

    let log_gabor: Vec<Vec<f64>> = (0..NSCALE)
        .map(|s| {
            let fo = 1.0 / (MIN_WAVELENGTH * MULT.powi(s as i32));
            let denom = 2.0 * SIGMA_ON_F.ln().powi(2);
            let mut g: Vec<f64> = radius
                .iter()
                .zip(&lowpass)
                .map(|(&rad, &lp)| (-(rad / fo).ln().powi(2) / denom).exp() * lp)
                .collect();
            g[0] = 0.0;
            g
        })
        .collect();

    let theta_sigma = PI / NORIENT as f64 / D_THETA_ON_SIGMA;
    let mut energy_all = vec![0.0; n];
    let mut an_all = vec![0.0; n];
    for o in 0..NORIENT {
        let angle = o as f64 * PI / NORIENT as f64;
        let (sa, ca) = angle.sin_cos();
        let spread: Vec<f64> = (0..n)
            .map(|i| {
                let ds = sin_t[i] * ca - cos_t[i] * sa;
                let dc = cos_t[i] * ca + sin_t[i] * sa;
                let d = ds.atan2(dc).abs();
                (-d * d / (2.0 * theta_sigma * theta_sigma)).exp()
            })
            .collect();

        let mut sum_e = vec![0.0; n];
        let mut sum_o = vec![0.0; n];
        let mut responses = Vec::with_capacity(NSCALE);
        let mut spatial_filters = Vec::with_capacity(NSCALE);
        let mut em_n = 0.0;
        for (s, gabor) in log_gabor.iter().enumerate() {
            let filter: Vec<f64> = gabor.iter().zip(&spread).map(|(g, sp)| g * sp).collect();
            if s == 0 {
                em_n = filter.iter().map(|f| f * f).sum();
            }
            let mut spatial: Vec<Complex64> = filter.iter().map(|&f| Complex64::new(f, 0.0)).collect();
            fft.run(&mut spatial, true);
            let root = (n as f64).sqrt();
            spatial_filters.push(spatial.iter().map(|v| v.re * root).collect::<Vec<f64>>());

            let mut eo: Vec<Complex64> = spectrum.iter().zip(&filter).map(|(v, &f)| v * f).collect();
            fft.run(&mut eo, true);
            for i in 0..n {
                sum_e[i] += eo[i].re;
                sum_o[i] += eo[i].im;
                an_all[i] += eo[i].norm();
            }
            responses.push(eo);
        }

        let mut energy = vec![0.0; n];
        for i in 0..n {
            let x_energy = (sum_e[i] * sum_e[i] + sum_o[i] * sum_o[i]).sqrt() + EPSILON;
            let mean_e = sum_e[i] / x_energy;
            let mean_o = sum_o[i] / x_energy;
            for eo in &responses {
                let (e, od) = (eo[i].re, eo[i].im);
                energy[i] += e * mean_e + od * mean_o - (e * mean_o - od * mean_e).abs();
            }
        }

        let median_e2n = median(responses[0].iter().map(|v| v.norm_sqr()).collect());
        let mean_e2n = -median_e2n / 0.5f64.ln();
        let noise_power = mean_e2n / em_n;
        let mut sum_an2 = 0.0;
        let mut sum_aiaj = 0.0;
        for i in 0..n {
            for si in 0..NSCALE {
                let a = spatial_filters[si][i];
                sum_an2 += a * a;
                for f in &spatial_filters[si + 1..] {
                    sum_aiaj += a * f[i];
                }
            }
        }
        let noise_energy2 = 2.0 * noise_power * sum_an2 + 4.0 * noise_power * sum_aiaj;
        let tau = (noise_energy2 / 2.0).sqrt();
        let noise_mean = tau * (PI / 2.0).sqrt();
        let noise_sigma = ((2.0 - PI / 2.0) * tau * tau).sqrt();
        let threshold = (noise_mean + NOISE_K * noise_sigma) / 1.7;
        for i in 0..n {
            energy_all[i] += (energy[i] - threshold).max(0.0);
        }
    }

    Array2::from_shape_fn((rows, cols), |(r, c)| {
        let i = r * cols + c;
        if an_all[i] > 0.0 {
            energy_all[i] / an_all[i]
        } else {
            0.0
        }
    })
}

/// Box-average then decimate by `factor`, matching `conv2(.., 'same')`
/// followed by taking every `factor`-th sample.
fn downsample(plane: &Plane, factor: usize) -> Plane {
    if factor == 1 {
        return plane.clone();
    }
    let (rows, cols) = plane.dim();
    let half = factor / 2;
    let out_dim = (rows.div_ceil(factor), cols.div_ceil(factor));
    let norm = (factor * factor) as f64;
    Array2::from_shape_fn(out_dim, |(r, c)| {
        let (r0, c0) = (r * factor + half, c * factor + half);
        let mut acc = 0.0;
        for dr in 0..factor {
            for dc in 0..factor {
                if let (Some(rr), Some(cc)) = (r0.checked_sub(dr), c0.checked_sub(dc)) {
                    if rr < rows && cc < cols {
                        acc += plane[(rr, cc)];
                    }
                }
            }
        }
        acc / norm
    })
}

fn gradient_magnitude(p: &Plane) -> Plane {
    let gx = correlate3_same(p, &SCHARR_X);
    let gy = correlate3_same(p, &SCHARR_Y);
    ndarray::Zip::from(&gx).and(&gy).map_collect(|x, y| (x * x + y * y).sqrt())
}

/// FSIM of `b` against `a`, both luminance planes on the 8-bit scale.
///
/// Images whose shorter side exceeds 384 pixels are first reduced by the
/// factor `round(min_dim / 256)`. If neither image has any phase congruency
/// the similarity map is averaged uniformly.
pub fn fsim(a: &Plane, b: &Plane) -> Result<f64> {
    check_dims(a, b)?;
    let (rows, cols) = a.dim();
    let factor = ((rows.min(cols) as f64 / 256.0).round() as usize).max(1);
    let ya = downsample(a, factor);
    let yb = downsample(b, factor);

    let pc_a = phase_congruency(&ya);
    let pc_b = phase_congruency(&yb);
    let g_a = gradient_magnitude(&ya);
    let g_b = gradient_magnitude(&yb);

    let mut weighted = 0.0;
    let mut weights = 0.0;
    let mut plain = 0.0;
    for (idx, &p1) in pc_a.indexed_iter() {
        let p2 = pc_b[idx];
        let (g1, g2) = (g_a[idx], g_b[idx]);
        let pc_sim = (2.0 * p1 * p2 + T1) / (p1 * p1 + p2 * p2 + T1);
        let g_sim = (2.0 * g1 * g2 + T2) / (g1 * g1 + g2 * g2 + T2);
        let pcm = p1.max(p2);
        weighted += g_sim * pc_sim * pcm;
        weights += pcm;
        plain += g_sim * pc_sim;
    }
    if weights > 0.0 {
        Ok(weighted / weights)
    } else {
        Ok(plain / pc_a.len() as f64)
    }
}
