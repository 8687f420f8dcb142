//! Full-reference quality metrics.
//!
//! Binary metrics take `(reference, test)` planes of equal shape on the 8-bit
//! scale `[0, 255]`. Color images are reduced to Rec. 601 luma except where
//! noted: MSE/PSNR average over all three channels and entropy sums the
//! per-channel entropies.

mod filter;
mod fsim;
mod gmsd;
mod pcqi;
mod ssim;

use serde::{Deserialize, Serialize};

use crate::color::ColorImage;
use crate::error::{Result, ScsaError};
use crate::Plane;

pub use fsim::{fsim, phase_congruency};
pub use gmsd::{gmsd, gms_map};
pub use pcqi::pcqi;
pub use ssim::{ssim, ssim_global};

/// Peak intensity of the 8-bit scale.
pub const PEAK: f64 = 255.0;

pub(crate) fn check_dims(a: &Plane, b: &Plane) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(ScsaError::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    if a.is_empty() {
        return Err(ScsaError::InvalidArgument("cannot score empty images".into()));
    }
    Ok(())
}

pub fn mse(a: &Plane, b: &Plane) -> Result<f64> {
    check_dims(a, b)?;
    let total: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum();
    Ok(total / a.len() as f64)
}

/// MSE over every pixel and channel, on the 8-bit scale.
pub fn mse_rgb(a: &ColorImage, b: &ColorImage) -> Result<f64> {
    a.check_same_dim(b)?;
    let total: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .flat_map(|(p, q)| (0..3).map(move |c| ((p[c] - q[c]) * PEAK).powi(2)))
        .sum();
    Ok(total / (3 * a.pixels().len()) as f64)
}

/// `10 log₁₀(255² / mse)`; identical images give `+∞`.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

pub fn psnr(a: &Plane, b: &Plane) -> Result<f64> {
    mse(a, b).map(psnr_from_mse)
}

/// Absolute mean brightness error.
pub fn ambe(a: &Plane, b: &Plane) -> Result<f64> {
    check_dims(a, b)?;
    Ok((filter::mean(a) - filter::mean(b)).abs())
}

fn histogram(values: impl Iterator<Item = f64>) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for v in values {
        hist[quantize(v)] += 1;
    }
    hist
}

/// 8-bit bin of a value on the `[0, 255]` scale.
pub fn quantize(v: f64) -> usize {
    v.round().clamp(0.0, 255.0) as usize
}

fn shannon(hist: &[u64; 256]) -> f64 {
    let n: u64 = hist.iter().sum();
    if n == 0 {
        return 0.0;
    }
    hist.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

/// Shannon entropy (bits) of the 256-bin histogram of one plane.
pub fn entropy(plane: &Plane) -> f64 {
    shannon(&histogram(plane.iter().copied()))
}

/// Sum of the per-channel entropies of an RGB image.
pub fn entropy_rgb(image: &ColorImage) -> f64 {
    (0..3)
        .map(|c| shannon(&histogram(image.pixels().iter().map(|p| p[c] * PEAK))))
        .sum()
}

/// 256-bin histogram of the value channel, `V ∈ [0, 1]`.
pub fn value_histogram(value: &Plane) -> [u64; 256] {
    histogram(value.iter().map(|v| v * PEAK))
}

/// The eight-metric evaluation record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mse: f64,
    #[serde(with = "lenient_f64")]
    pub psnr: f64,
    pub ambe: f64,
    pub entropy: f64,
    pub ssim: f64,
    pub gmsd: f64,
    pub fsim: f64,
    pub pcqi: f64,
}

impl MetricsReport {
    /// Scores `test` against `reference`; `entropy` describes `test`.
    pub fn compute(reference: &ColorImage, test: &ColorImage) -> Result<Self> {
        reference.check_same_dim(test)?;
        let mse = mse_rgb(reference, test)?;
        let a = reference.luma(PEAK);
        let b = test.luma(PEAK);
        Ok(Self {
            mse,
            psnr: psnr_from_mse(mse),
            ambe: ambe(&a, &b)?,
            entropy: entropy_rgb(test),
            ssim: ssim(&a, &b)?,
            gmsd: gmsd(&a, &b)?,
            fsim: fsim(&a, &b)?,
            pcqi: pcqi(&a, &b)?,
        })
    }

    /// Column-wise arithmetic mean.
    pub fn mean(rows: &[MetricsReport]) -> Option<MetricsReport> {
        if rows.is_empty() {
            return None;
        }
        let n = rows.len() as f64;
        let avg = |f: fn(&MetricsReport) -> f64| rows.iter().map(f).sum::<f64>() / n;
        Some(Self {
            mse: avg(|r| r.mse),
            psnr: avg(|r| r.psnr),
            ambe: avg(|r| r.ambe),
            entropy: avg(|r| r.entropy),
            ssim: avg(|r| r.ssim),
            gmsd: avg(|r| r.gmsd),
            fsim: avg(|r| r.fsim),
            pcqi: avg(|r| r.pcqi),
        })
    }
}

/// Serializes non-finite floats as the strings `"inf"`, `"-inf"`, `"nan"`.
pub mod lenient_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr2, Array2};

    #[test]
    fn mse_psnr_basics() {
        let a = arr2(&[[0.0]]);
        let b = arr2(&[[255.0]]);
        assert_eq!(mse(&a, &b).unwrap(), 65025.0);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(psnr_from_mse(65.025), 30.0);
        assert!((psnr_from_mse(14.60) - 36.49).abs() < 0.005);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        assert!(mse(&a, &Array2::zeros((1, 2))).is_err());
    }

    #[test]
    fn ambe_basics() {
        let z = Array2::zeros((3, 3));
        let w = Array2::from_elem((3, 3), 255.0);
        assert_eq!(ambe(&z, &w).unwrap(), 255.0);
        assert_eq!(ambe(&w, &w).unwrap(), 0.0);
    }

    #[test]
    fn entropy_basics() {
        let uniform = Array2::from_shape_fn((16, 16), |(r, c)| (r * 16 + c) as f64);
        assert!((entropy(&uniform) - 8.0).abs() < 1e-12);
        assert_eq!(entropy(&Array2::from_elem((4, 4), 7.0)), 0.0);
    }

    #[test]
    fn report_mean_and_json() {
        let a = MetricsReport { mse: 1.0, psnr: f64::INFINITY, ambe: 2.0, entropy: 3.0, ssim: 1.0, gmsd: 0.0, fsim: 1.0, pcqi: 1.0 };
        let b = MetricsReport { mse: 3.0, psnr: 10.0, ..a };
        let m = MetricsReport::mean(&[a, b]).unwrap();
        assert_eq!(m.mse, 2.0);
        assert_eq!(m.psnr, f64::INFINITY);
        assert!(MetricsReport::mean(&[]).is_none());

        let text = serde_json::to_string(&a).unwrap();
        assert!(text.contains("\"psnr\":\"inf\""));
        let back: MetricsReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
    }
}
