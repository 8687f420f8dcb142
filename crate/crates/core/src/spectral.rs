//! Fourier pseudospectral discretization and the per-line Schrödinger
//! eigenproblems.
//!
//! Every image row and column is treated as a periodic signal sampled on a
//! uniform grid over `[0, 2π)`. For a line with potential `p` the discrete
//! operator is `-h² D₂ - diag(p / 2)`; only its strictly negative eigenvalues
//! (bound states) and their eigenvectors are retained.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::error::{invalid, Result, ScsaError};

/// Uniform periodic grid of `q` samples over `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    q: usize,
    delta: f64,
}

impl Grid {
    pub fn new(q: usize) -> Result<Self> {
        if q < 2 {
            return Err(invalid(format!("grid needs at least 2 samples, got {q}")));
        }
        Ok(Self {
            q,
            delta: 2.0 * PI / q as f64,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Grid step `2π / q`.
    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Periodic Fourier second-derivative matrix.
#[derive(Debug, Clone)]
pub struct DiffMatrix {
    grid: Grid,
    entries: DMatrix<f64>,
}

impl DiffMatrix {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Applies the matrix to a sampled function.
    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.grid.q {
            return Err(invalid(format!(
                "vector of length {} does not match grid of {} samples",
                values.len(),
                self.grid.q
            )));
        }
        let v = nalgebra::DVector::from_column_slice(values);
        Ok((&self.entries * v).as_slice().to_vec())
    }
}

/// Builds the `q × q` Fourier second-derivative matrix on `[0, 2π)`.
///
/// Entries depend only on the offset `k = |i - j|`; the closed forms below are
/// the second derivative of the periodic band-limited interpolant, so the
/// eigenvalues are `-k²` for the wavenumbers resolvable at `q` samples.
pub fn fourier_d2(q: usize) -> Result<DiffMatrix> {
    let grid = Grid::new(q)?;
    let dx = grid.delta;
    let mut offsets = vec![0.0; q];
    if q % 2 == 0 {
        offsets[0] = -PI * PI / (3.0 * dx * dx) - 1.0 / 6.0;
        for (k, c) in offsets.iter_mut().enumerate().skip(1) {
            let s = (k as f64 * dx / 2.0).sin();
            *c = -alternating(k) / (2.0 * s * s);
        }
    } else {
        offsets[0] = -PI * PI / (3.0 * dx * dx) + 1.0 / 12.0;
        for (k, c) in offsets.iter_mut().enumerate().skip(1) {
            let half = k as f64 * dx / 2.0;
            let s = half.sin();
            *c = -alternating(k) * half.cos() / (2.0 * s * s);
        }
    }
    let entries = DMatrix::from_fn(q, q, |i, j| offsets[i.abs_diff(j)]);
    Ok(DiffMatrix { grid, entries })
}

fn alternating(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Bound states of one 1D Schrödinger operator.
///
/// Eigenvalues are ascending and strictly negative. Eigenfunctions are stored
/// column-wise, normalised so that `delta · Σ ψᵢ² = 1`, with the first
/// nonzero component positive.
#[derive(Debug, Clone)]
pub struct LineSpectrum {
    h: f64,
    delta: f64,
    eigenvalues: Vec<f64>,
    eigenfunctions: DMatrix<f64>,
    // ψ_k[idx]² laid out as density[idx * m + k]
    density: Vec<f64>,
}

impl LineSpectrum {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of samples on the line.
    pub fn q(&self) -> usize {
        self.eigenfunctions.nrows()
    }

    /// Number of retained (negative) eigenvalues.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `q × m` matrix, one eigenfunction per column.
    pub fn eigenfunctions(&self) -> &DMatrix<f64> {
        &self.eigenfunctions
    }

    /// Squared eigenfunction values `ψ_k[idx]²` for every `k`, at sample `idx`.
    pub fn squared_at(&self, idx: usize) -> &[f64] {
        let m = self.len();
        &self.density[idx * m..(idx + 1) * m]
    }
}

/// Solves `(-h² D₂ - diag(potential / 2)) ψ = λ ψ` and keeps the bound states.
pub fn line_spectrum(potential: &[f64], h: f64) -> Result<LineSpectrum> {
    let d2 = fourier_d2(potential.len())?;
    solve_line(&d2, potential, h)
}

fn validate_h(h: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(invalid(format!("semi-classical parameter must be positive and finite, got {h}")));
    }
    Ok(())
}

/// Eigenvalue cutoff below which a mode counts as bound.
fn negative_cutoff(potential: &[f64]) -> f64 {
    let peak = potential.iter().fold(0.0_f64, |m, &p| m.max(p.abs()));
    1e-10 * peak.max(1.0)
}

pub(crate) fn solve_line(d2: &DiffMatrix, potential: &[f64], h: f64) -> Result<LineSpectrum> {
    validate_h(h)?;
    let q = d2.grid.q;
    if potential.len() != q {
        return Err(invalid(format!(
            "potential of length {} does not match grid of {q} samples",
            potential.len()
        )));
    }
    if let Some(bad) = potential.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(invalid(format!("potential entries must be finite and non-negative, found {bad}")));
    }

    let h2 = h * h;
    let mut op = d2.entries.map(|d| -h2 * d);
    for (i, p) in potential.iter().enumerate() {
        op[(i, i)] -= 0.5 * p;
    }

    let eig = SymmetricEigen::try_new(op, f64::EPSILON, 0)
        .ok_or_else(|| ScsaError::Numerical("symmetric eigensolver did not converge".into()))?;

    let cutoff = negative_cutoff(potential);
    let mut bound: Vec<usize> = (0..q).filter(|&k| eig.eigenvalues[k] < -cutoff).collect();
    bound.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let delta = d2.grid.delta;
    let m = bound.len();
    let mut eigenfunctions = DMatrix::zeros(q, m);
    let mut eigenvalues = Vec::with_capacity(m);
    for (col, &k) in bound.iter().enumerate() {
        eigenvalues.push(eig.eigenvalues[k]);
        let v = eig.eigenvectors.column(k);
        let norm = (v.norm_squared() * delta).sqrt();
        let tiny = v.amax() * 1e-12;
        let sign = match v.iter().find(|x| x.abs() > tiny) {
            Some(&first) if first < 0.0 => -1.0,
            _ => 1.0,
        };
        eigenfunctions.set_column(col, &(v * (sign / norm)));
    }

    let mut density = vec![0.0; q * m];
    for idx in 0..q {
        for k in 0..m {
            let psi = eigenfunctions[(idx, k)];
            density[idx * m + k] = psi * psi;
        }
    }

    Ok(LineSpectrum {
        h,
        delta,
        eigenvalues,
        eigenfunctions,
        density,
    })
}

/// Row and column spectra of an image at one semi-classical parameter.
#[derive(Debug, Clone)]
pub struct ImageSpectra {
    h: f64,
    rows: Vec<LineSpectrum>,
    cols: Vec<LineSpectrum>,
}

impl ImageSpectra {
    pub fn h(&self) -> f64 {
        self.h
    }

    /// One spectrum per image row (potential `I[i, :]`).
    pub fn rows(&self) -> &[LineSpectrum] {
        &self.rows
    }

    /// One spectrum per image column (potential `I[:, j]`).
    pub fn cols(&self) -> &[LineSpectrum] {
        &self.cols
    }

    /// `(height, width)` of the decomposed image.
    pub fn dim(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }
}

/// Decomposes a square image. Non-square input is rejected; see
/// [`decompose_lines`] for the general case.
pub fn decompose_image(image: ArrayView2<'_, f64>, h: f64) -> Result<ImageSpectra> {
    let (rows, cols) = image.dim();
    if rows != cols {
        return Err(invalid(format!("expected a square image, got {rows}×{cols}")));
    }
    decompose_lines(image, h)
}

/// Decomposes every row and column at its natural length.
///
/// Each line gets its own grid over `[0, 2π)`, so rectangular images are
/// handled without padding. The `2 × lines` eigenproblems run in parallel;
/// the result does not depend on scheduling.
pub fn decompose_lines(image: ArrayView2<'_, f64>, h: f64) -> Result<ImageSpectra> {
    validate_h(h)?;
    let (height, width) = image.dim();
    let d2_row = fourier_d2(width)?;
    let d2_col = if height == width {
        d2_row.clone()
    } else {
        fourier_d2(height)?
    };

    let rows = (0..height)
        .into_par_iter()
        .map(|i| solve_line(&d2_row, &image.row(i).to_vec(), h))
        .collect::<Result<Vec<_>>>()?;
    let cols = (0..width)
        .into_par_iter()
        .map(|j| solve_line(&d2_col, &image.column(j).to_vec(), h))
        .collect::<Result<Vec<_>>>()?;

    Ok(ImageSpectra { h, rows, cols })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Entry `(i, j)` from the Fourier symbol directly:
    /// `(1/q) Σ_k (-k²) cos(k (i - j) δ)` over the resolvable wavenumbers.
    fn symbol_entry(q: usize, i: usize, j: usize) -> f64 {
        let dx = 2.0 * PI / q as f64;
        let (lo, hi) = if q % 2 == 0 {
            (-(q as i64) / 2 + 1, q as i64 / 2)
        } else {
            (-((q as i64 - 1) / 2), (q as i64 - 1) / 2)
        };
        let offset = i as f64 - j as f64;
        (lo..=hi)
            .map(|k| {
                let k = k as f64;
                -k * k * (k * offset * dx).cos()
            })
            .sum::<f64>()
            / q as f64
    }

    /// Cyclic Jacobi eigenvalues, independent of the library eigensolver.
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off < 1e-24 {
                break;
            }
            for p in 0..n {
                for r in p + 1..n {
                    if a[p][r].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[r][r] - a[p][p]) / (2.0 * a[p][r]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akr = a[k][r];
                        a[k][p] = c * akp - s * akr;
                        a[k][r] = s * akp + c * akr;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let ark = a[r][k];
                        a[p][k] = c * apk - s * ark;
                        a[r][k] = s * apk + c * ark;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    #[test]
    fn rejects_tiny_grid() {
        assert!(matches!(fourier_d2(1), Err(ScsaError::InvalidArgument(_))));
        assert!(fourier_d2(0).is_err());
    }

    #[test]
    fn closed_form_matches_symbol_both_parities() {
        for q in [2, 3, 4, 5, 8, 9, 16, 17, 32] {
            let d2 = fourier_d2(q).unwrap();
            for i in 0..q {
                for j in 0..q {
                    let want = symbol_entry(q, i, j);
                    let got = d2.entries()[(i, j)];
                    assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "q={q} ({i},{j}) {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn matrix_invariants() {
        for q in [2, 3, 7, 8, 31, 64, 128] {
            let d = fourier_d2(q).unwrap();
            let e = d.entries();
            for i in 0..q {
                for j in 0..q {
                    assert!((e[(i, j)] - e[(j, i)]).abs() <= 1e-12);
                }
                let row_sum: f64 = e.row(i).iter().sum();
                assert!(row_sum.abs() <= 1e-9, "q={q} row {i} sums to {row_sum}");
            }
            let ev = SymmetricEigen::new(e.clone()).eigenvalues;
            assert!(ev.iter().all(|&l| l <= 1e-9));
        }
    }

    #[test]
    fn constants_are_annihilated() {
        let out = fourier_d2(8).unwrap().apply(&[1.0; 8]).unwrap();
        assert!(out.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn eigenvalues_of_q4_are_integer_squares() {
        let d = fourier_d2(4).unwrap();
        let a: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| d.entries()[(i, j)]).collect()).collect();
        let ev = jacobi_eigenvalues(a);
        let want = [-4.0, -1.0, -1.0, 0.0];
        for (g, w) in ev.iter().zip(want) {
            assert!((g - w).abs() < 1e-10, "{ev:?}");
        }
    }

    #[test]
    fn differentiates_cosine_exactly() {
        let q = 16;
        let grid = Grid::new(q).unwrap();
        let x: Vec<f64> = (0..q).map(|i| i as f64 * grid.delta()).collect();
        let out = fourier_d2(q).unwrap().apply(&x.iter().map(|t| t.cos()).collect::<Vec<_>>()).unwrap();
        for (o, t) in out.iter().zip(&x) {
            assert!((o + t.cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_potential_has_no_bound_states() {
        let s = line_spectrum(&[0.0; 16], 1.0).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn constant_potential_ground_state() {
        let s = line_spectrum(&[100.0; 16], 1.0).unwrap();
        assert!((s.eigenvalues()[0] + 50.0).abs() < 1e-9);
        let expected = 1.0 / (2.0 * PI).sqrt();
        for v in s.eigenfunctions().column(0).iter() {
            assert!((v - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_potentials() {
        assert!(line_spectrum(&[1.0, -1.0, 2.0], 1.0).is_err());
        assert!(line_spectrum(&[1.0, f64::NAN, 2.0], 1.0).is_err());
        assert!(line_spectrum(&[1.0, 2.0], 0.0).is_err());
        assert!(line_spectrum(&[1.0, 2.0], f64::INFINITY).is_err());
    }

    fn random_potential(rng: &mut ChaCha8Rng, q: usize) -> Vec<f64> {
        (0..q).map(|_| rng.random_range(0.0..255.0)).collect()
    }

    #[test]
    fn residual_normalization_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &q in &[15, 16, 33] {
            let p = random_potential(&mut rng, q);
            let h = 1.0;
            let s = line_spectrum(&p, h).unwrap();
            let d2 = fourier_d2(q).unwrap();
            let mut op = d2.entries().map(|d| -h * h * d);
            for i in 0..q {
                op[(i, i)] -= p[i] / 2.0;
            }
            for (k, &lambda) in s.eigenvalues().iter().enumerate() {
                assert!(lambda < 0.0);
                let psi = s.eigenfunctions().column(k).into_owned();
                let resid = (&op * &psi - &psi * lambda).norm();
                assert!(resid <= 1e-8 * psi.norm(), "residual {resid}");
                assert!((s.delta() * psi.norm_squared() - 1.0).abs() < 1e-9);
                for l in 0..k {
                    if (s.eigenvalues()[l] - lambda).abs() > 1e-8 {
                        let dot = s.delta() * psi.dot(&s.eigenfunctions().column(l));
                        assert!(dot.abs() < 1e-8);
                    }
                }
            }
            assert!(s.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn bound_state_count_shrinks_with_h() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let p = random_potential(&mut rng, 32);
            let counts: Vec<usize> = [0.25, 0.5, 1.0, 2.0, 4.0]
                .iter()
                .map(|&h| line_spectrum(&p, h).unwrap().len())
                .collect();
            assert!(counts.windows(2).all(|w| w[0] >= w[1]), "{counts:?}");
        }
    }

    #[test]
    fn decompose_zero_and_constant_images() {
        let zero = Array2::<f64>::zeros((8, 8));
        let s = decompose_image(zero.view(), 1.0).unwrap();
        assert!(s.rows().iter().chain(s.cols()).all(|l| l.is_empty()));
        assert_eq!(s.rows().len() + s.cols().len(), 16);

        let flat = Array2::<f64>::from_elem((8, 8), 100.0);
        let s = decompose_image(flat.view(), 1.0).unwrap();
        assert!(s.rows().iter().chain(s.cols()).all(|l| (l.eigenvalues()[0] + 50.0).abs() < 1e-9));
    }

    #[test]
    fn decompose_rejects_non_square() {
        let img = Array2::<f64>::zeros((4, 6));
        assert!(decompose_image(img.view(), 1.0).is_err());
        let s = decompose_lines(img.view(), 1.0).unwrap();
        assert_eq!(s.dim(), (4, 6));
    }

    #[test]
    fn transpose_swaps_rows_and_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = Array2::from_shape_fn((6, 6), |_| rng.random_range(0.0..255.0));
        let a = decompose_image(img.view(), 0.7).unwrap();
        let b = decompose_image(img.t(), 0.7).unwrap();
        for (r, c) in b.rows().iter().zip(a.cols()) {
            assert_eq!(r.eigenvalues(), c.eigenvalues());
            assert_eq!(r.eigenfunctions(), c.eigenfunctions());
        }
    }
}
