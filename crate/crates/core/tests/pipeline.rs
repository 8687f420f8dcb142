//! Public-API runs through the whole enhancement stack.

use scsa_core::enhance::{gamma_correction_rgb, PreparedImage};
use scsa_core::metrics::entropy_rgb;
use scsa_core::{decompose_image, enhance, ColorImage, EnhanceConfig, MetricsReport, SpectraCache};

fn card(size: usize) -> ColorImage {
    ColorImage::from_fn(size, size, |r, c| {
        let v = (110.0 + ((r * 5 + c * 3) % 30) as f64 + if (r / 3 + c / 3) % 2 == 0 { 8.0 } else { 0.0 }) / 255.0;
        [v, 0.85 * v, 0.7 * v]
    })
    .unwrap()
}

#[test]
fn json_config_drives_a_fixed_run() {
    let cfg: EnhanceConfig = serde_json::from_str(r#"{"h": 0.7, "gammas": [2.0, 5.0], "k": 2, "seed": 3}"#).unwrap();
    let img = card(20);
    let out = enhance(&img, &cfg).unwrap();
    assert_eq!(out.params.gammas, vec![2.0, 5.0]);
    assert_eq!(out.cluster_model.k(), 2);
    assert!(out.front.is_none());
    assert_eq!(out.metrics, MetricsReport::compute(&img, &out.image).unwrap());
    assert!(out.metrics.entropy >= entropy_rgb(&img));
}

#[test]
fn auto_run_reports_front_and_silhouette() {
    let cfg = EnhanceConfig {
        seed: 8,
        ..Default::default()
    };
    let img = card(16);
    let a = enhance(&img, &cfg).unwrap();
    let b = enhance(&img, &cfg).unwrap();
    assert_eq!(a.image, b.image);
    let front = a.front.as_ref().unwrap();
    assert!(front.members.iter().any(|m| m.chromosome.h == a.params.h));
    let report = a.silhouette.as_ref().unwrap();
    assert_eq!(report.selected_k, a.params.k);
}

#[test]
fn prepared_image_reuses_one_decomposition() {
    let cfg = EnhanceConfig {
        k: scsa_core::enhance::ClusterChoice::Fixed(3),
        ..Default::default()
    };
    let prepared = PreparedImage::new(&card(16), &cfg).unwrap().unwrap();
    let cache = SpectraCache::new(4);
    for g in [1.0, 3.0, 9.0] {
        prepared.render(1.5, &[g, 2.0, 4.0], &cache).unwrap();
    }
    assert_eq!(cache.stats(), (2, 1));
}

#[test]
fn constant_image_spectra_and_baseline() {
    let flat = ndarray::Array2::from_elem((8, 8), 100.0);
    let spectra = decompose_image(flat.view(), 1.0).unwrap();
    for line in spectra.rows().iter().chain(spectra.cols()) {
        assert!((line.eigenvalues()[0] + 50.0).abs() < 1e-9);
    }
    let img = card(8);
    let dark = gamma_correction_rgb(&img, 1.0, 2.0).unwrap();
    assert!(dark.pixels().iter().zip(img.pixels()).all(|(d, o)| d[0] <= o[0]));
}
