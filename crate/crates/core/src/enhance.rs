//! The γ-SCSA enhancement pipeline and the gamma-correction baseline.
//!
//! Only the value channel is modified: it is min-max normalised, rescaled to
//! the 8-bit range, clustered by intensity, reconstructed with one exponent
//! per cluster and normalised back to `[0, 1]`. Hue and saturation are
//! carried through untouched.

use ndarray::{Array2, ArrayView2};
use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::cluster::{kmeans_pp, silhouette_select, ClusterModel, SilhouetteReport, SILHOUETTE_SAMPLE};
use crate::color::{hsv_to_rgb, rgb_to_hsv, ColorImage, HsvImage};
use crate::error::{invalid, Result};
use crate::metrics::MetricsReport;
use crate::optimize::{asf_select, run_nsga2, GaConfig, ImageEvaluator, ParetoFront};
use crate::reconstruct::{GammaField, SpectraCache};
use crate::Plane;

/// Per-cluster exponents, or `"auto"` to search them with NSGA-II.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaChoice {
    Fixed(Vec<f64>),
    Auto,
}

/// Cluster count, or `"auto"` to pick it by silhouette.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterChoice {
    Fixed(usize),
    Auto,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ChoiceRepr<T> {
    Value(T),
    Text(String),
}

fn parse_auto<'de, D: Deserializer<'de>, T: Deserialize<'de>>(d: D) -> std::result::Result<Option<T>, D::Error> {
    match ChoiceRepr::<T>::deserialize(d)? {
        ChoiceRepr::Value(v) => Ok(Some(v)),
        ChoiceRepr::Text(t) if t == "auto" => Ok(None),
        ChoiceRepr::Text(t) => Err(serde::de::Error::custom(format!("expected a value or \"auto\", got {t:?}"))),
    }
}

impl Serialize for GammaChoice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Fixed(g) => g.serialize(s),
            Self::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for GammaChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(parse_auto::<D, Vec<f64>>(d)?.map_or(Self::Auto, Self::Fixed))
    }
}

impl Serialize for ClusterChoice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Fixed(k) => s.serialize_u64(*k as u64),
            Self::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for ClusterChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(parse_auto::<D, usize>(d)?.map_or(Self::Auto, Self::Fixed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnhanceConfig {
    /// Semi-classical parameter; ignored when `gammas` is `Auto`.
    pub h: f64,
    pub gammas: GammaChoice,
    pub k: ClusterChoice,
    pub seed: u64,
    /// Scale applied to the normalised value channel before decomposition.
    pub intensity_scale: f64,
    /// Inclusive search range for `k = "auto"`.
    pub k_range: (usize, usize),
    pub silhouette_sample: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub ga: GaConfig,
    /// ASF weights for `(j1, j2)`.
    pub asf_weights: [f64; 2],
    pub cache_capacity: usize,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        Self {
            h: 1.0,
            gammas: GammaChoice::Auto,
            k: ClusterChoice::Auto,
            seed: 0,
            intensity_scale: 255.0,
            k_range: (2, 6),
            silhouette_sample: SILHOUETTE_SAMPLE,
            kmeans_max_iter: 300,
            kmeans_tol: 1e-6,
            ga: GaConfig::default(),
            asf_weights: [0.5, 0.5],
            cache_capacity: 16,
        }
    }
}

impl EnhanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(invalid(format!("h must be positive and finite, got {}", self.h)));
        }
        if let GammaChoice::Fixed(g) = &self.gammas {
            if g.is_empty() {
                return Err(invalid("gamma list is empty"));
            }
            if let Some(bad) = g.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(invalid(format!("gammas must be positive and finite, found {bad}")));
            }
        }
        if self.k == ClusterChoice::Fixed(0) {
            return Err(invalid("k must be positive"));
        }
        if !(self.intensity_scale.is_finite() && self.intensity_scale > 0.0) {
            return Err(invalid("intensity_scale must be positive"));
        }
        if self.asf_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(invalid("ASF weights must be positive"));
        }
        self.ga.validate()
    }
}

/// Parameters actually used for an enhancement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedParams {
    pub h: f64,
    pub gammas: Vec<f64>,
    pub k: usize,
}

#[derive(Debug, Clone)]
pub struct EnhancedResult {
    pub image: ColorImage,
    /// HSV planes of the output; hue and saturation are the input's.
    pub hsv: HsvImage,
    pub cluster_model: ClusterModel,
    pub params: AppliedParams,
    pub metrics: MetricsReport,
    /// Set when the value channel was constant and the input was returned.
    pub degenerate: bool,
    pub silhouette: Option<SilhouetteReport>,
    pub front: Option<ParetoFront>,
}

/// `(x - min) / (max - min)`. A constant plane maps to zeros and sets the flag.
pub fn min_max_normalize(plane: ArrayView2<'_, f64>) -> (Plane, bool) {
    let (lo, hi) = plane
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return (Array2::zeros(plane.dim()), true);
    }
    let span = hi - lo;
    (plane.mapv(|v| (v - lo) / span), false)
}

/// `c̄ · x^γ̄`, clipped to `[0, 1]`.
pub fn gamma_correction(plane: ArrayView2<'_, f64>, c_bar: f64, gamma_bar: f64) -> Result<Plane> {
    check_gamma_args(c_bar, gamma_bar)?;
    Ok(plane.mapv(|v| (c_bar * v.powf(gamma_bar)).clamp(0.0, 1.0)))
}

/// Channel-wise [`gamma_correction`] of an RGB image.
pub fn gamma_correction_rgb(image: &ColorImage, c_bar: f64, gamma_bar: f64) -> Result<ColorImage> {
    check_gamma_args(c_bar, gamma_bar)?;
    let pixels = image
        .pixels()
        .iter()
        .map(|p| p.map(|v| (c_bar * v.powf(gamma_bar)).clamp(0.0, 1.0)))
        .collect();
    ColorImage::new(image.width(), image.height(), pixels)
}

fn check_gamma_args(c_bar: f64, gamma_bar: f64) -> Result<()> {
    if !(gamma_bar.is_finite() && gamma_bar > 0.0) {
        return Err(invalid(format!("gamma must be positive, got {gamma_bar}")));
    }
    if !(c_bar.is_finite() && c_bar > 0.0) {
        return Err(invalid(format!("scaling constant must be positive, got {c_bar}")));
    }
    Ok(())
}

/// An image after the stages that do not depend on `(h, γ)`.
#[derive(Debug, Clone)]
pub struct PreparedImage {
    original: ColorImage,
    hsv: HsvImage,
    potential: Plane,
    model: ClusterModel,
    labels: Array2<usize>,
    silhouette: Option<SilhouetteReport>,
}

impl PreparedImage {
    /// Converts, normalises and clusters. Returns `None` for a constant
    /// value channel.
    pub fn new(image: &ColorImage, config: &EnhanceConfig) -> Result<Option<Self>> {
        let Some((hsv, potential)) = Self::scaled_value(image, config)? else {
            return Ok(None);
        };
        let values: Vec<f64> = potential.iter().copied().collect();
        let (model, silhouette) = match config.k {
            ClusterChoice::Fixed(k) => (kmeans_pp(&values, k, config.seed, config.kmeans_max_iter, config.kmeans_tol)?, None),
            ClusterChoice::Auto => {
                let (k_min, k_max) = config.k_range;
                let report = silhouette_select(&values, k_min, k_max, config.seed, config.silhouette_sample)?;
                let model = kmeans_pp(&values, report.selected_k, config.seed, config.kmeans_max_iter, config.kmeans_tol)?;
                (model, Some(report))
            }
        };
        Self::assemble(image, hsv, potential, model, silhouette).map(Some)
    }

    /// Like [`PreparedImage::new`] but with a caller-supplied clustering of
    /// the scaled value channel (row-major labels).
    pub fn with_model(image: &ColorImage, config: &EnhanceConfig, model: ClusterModel) -> Result<Option<Self>> {
        let Some((hsv, potential)) = Self::scaled_value(image, config)? else {
            return Ok(None);
        };
        Self::assemble(image, hsv, potential, model, None).map(Some)
    }

    fn scaled_value(image: &ColorImage, config: &EnhanceConfig) -> Result<Option<(HsvImage, Plane)>> {
        config.validate()?;
        let hsv = rgb_to_hsv(image);
        let (normalized, degenerate) = min_max_normalize(hsv.value.view());
        if degenerate {
            return Ok(None);
        }
        let potential = normalized * config.intensity_scale;
        Ok(Some((hsv, potential)))
    }

    fn assemble(
        image: &ColorImage,
        hsv: HsvImage,
        potential: Plane,
        model: ClusterModel,
        silhouette: Option<SilhouetteReport>,
    ) -> Result<Self> {
        let labels = Array2::from_shape_vec(potential.dim(), model.labels().to_vec())
            .map_err(|_| invalid("cluster labels do not cover the image"))?;
        Ok(Self {
            original: image.clone(),
            hsv,
            potential,
            model,
            labels,
            silhouette,
        })
    }

    pub fn original(&self) -> &ColorImage {
        &self.original
    }

    pub fn hsv(&self) -> &HsvImage {
        &self.hsv
    }

    /// Normalised value channel times the intensity scale.
    pub fn potential(&self) -> &Plane {
        &self.potential
    }

    pub fn model(&self) -> &ClusterModel {
        &self.model
    }

    /// Reconstruction before the final normalisation.
    pub fn reconstruct(&self, h: f64, gammas: &[f64], cache: &SpectraCache) -> Result<Plane> {
        if gammas.len() != self.model.k() {
            return Err(invalid(format!(
                "{} gammas given for {} clusters",
                gammas.len(),
                self.model.k()
            )));
        }
        let field = GammaField::from_labels(self.labels.view(), gammas)?;
        cache.reconstruct_with_field(self.potential.view(), h, &field)
    }

    /// Enhanced HSV planes for one parameter set.
    pub fn render_hsv(&self, h: f64, gammas: &[f64], cache: &SpectraCache) -> Result<HsvImage> {
        let raw = self.reconstruct(h, gammas, cache)?;
        let (value, _) = min_max_normalize(raw.view());
        Ok(HsvImage {
            hue: self.hsv.hue.clone(),
            saturation: self.hsv.saturation.clone(),
            value,
        })
    }

    pub fn render(&self, h: f64, gammas: &[f64], cache: &SpectraCache) -> Result<ColorImage> {
        hsv_to_rgb(&self.render_hsv(h, gammas, cache)?)
    }
}

/// Runs the full pipeline on one image.
pub fn enhance(image: &ColorImage, config: &EnhanceConfig) -> Result<EnhancedResult> {
    let Some(prepared) = PreparedImage::new(image, config)? else {
        return passthrough(image, config);
    };
    let cache = SpectraCache::new(config.cache_capacity);
    let k = prepared.model().k();

    let (h, gammas, front) = match &config.gammas {
        GammaChoice::Fixed(g) => {
            if g.len() != k {
                return Err(invalid(format!("{} gammas given for {k} clusters", g.len())));
            }
            (config.h, g.clone(), None)
        }
        GammaChoice::Auto => {
            let mut ga = config.ga.clone();
            ga.seed = config.seed;
            let evaluator = ImageEvaluator::new(&prepared, &cache, ga.global_ssim);
            let run = run_nsga2(&evaluator, k, &ga)?;
            let chosen = asf_select(&run.front, config.asf_weights, None)?;
            let gammas = evaluator.expand(&chosen.chromosome.gammas);
            (chosen.chromosome.h, gammas, Some(run.front))
        }
    };

    let hsv = prepared.render_hsv(h, &gammas, &cache)?;
    let out = hsv_to_rgb(&hsv)?;
    let metrics = MetricsReport::compute(image, &out)?;
    Ok(EnhancedResult {
        image: out,
        hsv,
        cluster_model: prepared.model().clone(),
        params: AppliedParams { h, gammas, k },
        metrics,
        degenerate: false,
        silhouette: prepared.silhouette.clone(),
        front,
    })
}

fn passthrough(image: &ColorImage, config: &EnhanceConfig) -> Result<EnhancedResult> {
    let hsv = rgb_to_hsv(image);
    let level = hsv.value.first().copied().unwrap_or(0.0) * config.intensity_scale;
    let model = ClusterModel::from_parts(vec![level], vec![0; image.pixels().len()])?;
    let gammas = match &config.gammas {
        GammaChoice::Fixed(g) => g.clone(),
        GammaChoice::Auto => Vec::new(),
    };
    Ok(EnhancedResult {
        image: image.clone(),
        hsv,
        cluster_model: model,
        params: AppliedParams { h: config.h, gammas, k: 1 },
        metrics: MetricsReport::compute(image, image)?,
        degenerate: true,
        silhouette: None,
        front: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::entropy_rgb;
    use crate::reconstruct::{reconstruct_lines, ScsaParams};
    use ndarray::arr2;

    /// Smooth color image whose value channel spans `[lo, hi] / 255`.
    fn low_contrast(size: usize, lo: f64, hi: f64) -> ColorImage {
        ColorImage::from_fn(size, size, |r, c| {
            let t = 0.5 + 0.25 * ((r as f64) * 0.2).sin() + 0.25 * ((c as f64) * 0.15).cos();
            let v = (lo + (hi - lo) * t) / 255.0;
            [v, v * 0.8, v * 0.6]
        })
        .unwrap()
    }

    #[test]
    fn min_max_examples() {
        let (out, flag) = min_max_normalize(arr2(&[[2.0, 4.0, 6.0]]).view());
        assert_eq!(out, arr2(&[[0.0, 0.5, 1.0]]));
        assert!(!flag);
        let unit = arr2(&[[0.0, 0.3], [1.0, 0.7]]);
        assert_eq!(min_max_normalize(unit.view()).0, unit);
        let (out, flag) = min_max_normalize(Array2::from_elem((2, 2), 5.0).view());
        assert!(flag && out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gamma_correction_examples() {
        let p = arr2(&[[0.5, 0.2], [0.9, 1.0]]);
        assert_eq!(gamma_correction(p.view(), 1.0, 1.0).unwrap(), p);
        assert_eq!(gamma_correction(arr2(&[[0.5]]).view(), 1.0, 2.0).unwrap()[(0, 0)], 0.25);
        let light = gamma_correction(p.view(), 1.0, 0.5).unwrap();
        assert!(light.mean().unwrap() >= p.mean().unwrap());
        assert!(gamma_correction(p.view(), 1.0, 0.0).is_err());
        let img = ColorImage::from_gray(&p).unwrap();
        assert_eq!(gamma_correction_rgb(&img, 2.0, 1.0).unwrap().pixel(1, 0), [1.0; 3]);
    }

    #[test]
    fn config_json_accepts_auto_and_lists() {
        let cfg: EnhanceConfig = serde_json::from_str(r#"{"gammas": [2.0, 5.0], "k": 2, "h": 0.5}"#).unwrap();
        assert_eq!(cfg.gammas, GammaChoice::Fixed(vec![2.0, 5.0]));
        assert_eq!(cfg.k, ClusterChoice::Fixed(2));
        let cfg: EnhanceConfig = serde_json::from_str(r#"{"gammas": "auto", "k": "auto"}"#).unwrap();
        assert_eq!(cfg.gammas, GammaChoice::Auto);
        let back: EnhanceConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<EnhanceConfig>(r#"{"k": "many"}"#).is_err());
    }

    #[test]
    fn constant_image_passes_through() {
        let img = ColorImage::from_fn(6, 5, |_, _| [0.2, 0.4, 0.6]).unwrap();
        let cfg = EnhanceConfig {
            gammas: GammaChoice::Fixed(vec![3.0]),
            k: ClusterChoice::Fixed(1),
            ..Default::default()
        };
        let out = enhance(&img, &cfg).unwrap();
        assert!(out.degenerate);
        assert_eq!(out.image, img);
    }

    #[test]
    fn gamma_count_must_match_clusters() {
        let img = low_contrast(12, 100.0, 156.0);
        let cfg = EnhanceConfig {
            gammas: GammaChoice::Fixed(vec![3.0, 4.0]),
            k: ClusterChoice::Fixed(3),
            ..Default::default()
        };
        assert!(enhance(&img, &cfg).is_err());
    }

    #[test]
    fn fixed_pipeline_spans_value_and_keeps_hue_saturation() {
        let img = low_contrast(24, 100.0, 156.0);
        let cfg = EnhanceConfig {
            h: 1.0,
            gammas: GammaChoice::Fixed(vec![2.0, 4.0]),
            k: ClusterChoice::Fixed(2),
            ..Default::default()
        };
        let out = enhance(&img, &cfg).unwrap();
        let input = rgb_to_hsv(&img);
        assert_eq!(out.hsv.hue, input.hue);
        assert_eq!(out.hsv.saturation, input.saturation);
        let (lo, hi) = out.hsv.value.iter().fold((1.0f64, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        assert_eq!((lo, hi), (0.0, 1.0));
        assert!(entropy_rgb(&out.image) >= entropy_rgb(&img));
        let again = enhance(&img, &cfg).unwrap();
        assert_eq!(again.image, out.image);
    }

    #[test]
    fn single_cluster_equals_uniform_reconstruction() {
        let img = low_contrast(16, 90.0, 170.0);
        let cfg = EnhanceConfig {
            h: 0.8,
            gammas: GammaChoice::Fixed(vec![4.0]),
            k: ClusterChoice::Fixed(1),
            ..Default::default()
        };
        let out = enhance(&img, &cfg).unwrap();
        let (v, _) = min_max_normalize(rgb_to_hsv(&img).value.view());
        let raw = reconstruct_lines((v * 255.0).view(), ScsaParams::new(0.8, 4.0).unwrap()).unwrap();
        let (want, _) = min_max_normalize(raw.view());
        assert_eq!(out.hsv.value, want);
    }

    #[test]
    fn changing_one_gamma_leaves_other_clusters_alone() {
        let img = low_contrast(16, 60.0, 200.0);
        let cfg = EnhanceConfig {
            k: ClusterChoice::Fixed(2),
            ..Default::default()
        };
        let prepared = PreparedImage::new(&img, &cfg).unwrap().unwrap();
        let cache = SpectraCache::default();
        let a = prepared.reconstruct(1.0, &[2.0, 3.0], &cache).unwrap();
        let b = prepared.reconstruct(1.0, &[2.0, 9.0], &cache).unwrap();
        for (idx, &l) in prepared.labels.indexed_iter() {
            if l == 0 {
                assert_eq!(a[idx], b[idx]);
            }
        }
        assert_eq!(cache.stats(), (1, 1));
    }
}
