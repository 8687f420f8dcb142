//! Small convolution helpers shared by the windowed metrics.

use ndarray::Array2;

use crate::Plane;

/// Normalised 1D Gaussian; the 2D window is its outer product.
pub(crate) fn gaussian_1d(size: usize, sigma: f64) -> Vec<f64> {
    let mid = (size as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..size)
        .map(|i| {
            let x = i as f64 - mid;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable filtering keeping only positions where the window fits.
pub(crate) fn filter_valid(plane: &Plane, kernel: &[f64]) -> Plane {
    let (rows, cols) = plane.dim();
    let n = kernel.len();
    let out_cols = cols + 1 - n;
    let out_rows = rows + 1 - n;
    let mut horiz = Array2::<f64>::zeros((rows, out_cols));
    for r in 0..rows {
        for c in 0..out_cols {
            horiz[(r, c)] = (0..n).map(|t| kernel[t] * plane[(r, c + t)]).sum();
        }
    }
    let mut out = Array2::<f64>::zeros((out_rows, out_cols));
    for r in 0..out_rows {
        for c in 0..out_cols {
            out[(r, c)] = (0..n).map(|t| kernel[t] * horiz[(r + t, c)]).sum();
        }
    }
    out
}

/// 3×3 correlation with zero padding, output the same size as the input.
pub(crate) fn correlate3_same(plane: &Plane, kernel: &[[f64; 3]; 3]) -> Plane {
    let (rows, cols) = plane.dim();
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        let mut acc = 0.0;
        for (dr, krow) in kernel.iter().enumerate() {
            for (dc, &w) in krow.iter().enumerate() {
                let rr = r as isize + dr as isize - 1;
                let cc = c as isize + dc as isize - 1;
                if rr >= 0 && cc >= 0 && (rr as usize) < rows && (cc as usize) < cols {
                    acc += w * plane[(rr as usize, cc as usize)];
                }
            }
        }
        acc
    })
}

pub(crate) fn mean(plane: &Plane) -> f64 {
    plane.iter().sum::<f64>() / plane.len() as f64
}
