//! 8-bit PNG / PNM reading and writing, plus box downsampling.

use std::path::Path;

use image::{GrayImage, ImageFormat, RgbImage};
use ndarray::Array2;
use serde::Serialize;

use scsa_core::{ColorImage, Plane};

use crate::error::{CliError, CliResult};

const EXTENSIONS: [&str; 4] = ["png", "ppm", "pgm", "pnm"];

pub fn is_supported(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn format_for(path: &Path) -> CliResult<ImageFormat> {
    if !is_supported(path) {
        return Err(CliError::Usage(format!(
            "{}: unsupported image type (expected png, ppm, pgm or pnm)",
            path.display()
        )));
    }
    ImageFormat::from_path(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Reads an image as RGB in `[0, 1]`. Gray inputs get `r = g = b`.
pub fn read_color(path: &Path) -> CliResult<ColorImage> {
    format_for(path)?;
    let img = image::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let rgb = img.to_rgb8();
    let pixels = rgb.pixels().map(|p| p.0.map(|c| f64::from(c) / 255.0)).collect();
    Ok(ColorImage::new(rgb.width() as usize, rgb.height() as usize, pixels)?)
}

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn save(result: image::ImageResult<()>, path: &Path) -> CliResult<()> {
    result.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes RGB, or luma when the target is a `.pgm`.
pub fn write_color(path: &Path, image: &ColorImage) -> CliResult<()> {
    let format = format_for(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        return write_gray(path, &image.luma(255.0));
    }
    let (w, h) = (image.width() as u32, image.height() as u32);
    let buf = RgbImage::from_fn(w, h, |x, y| {
        let p = image.pixel(y as usize, x as usize);
        image::Rgb(p.map(|c| to_u8(c * 255.0)))
    });
    save(buf.save_with_format(path, format), path)
}

/// Writes a plane on the 8-bit scale as a gray image, clamping to `[0, 255]`.
pub fn write_gray(path: &Path, plane: &Plane) -> CliResult<()> {
    let format = format_for(path)?;
    let (h, w) = plane.dim();
    let buf = GrayImage::from_fn(w as u32, h as u32, |x, y| image::Luma([to_u8(plane[(y as usize, x as usize)])]));
    save(buf.save_with_format(path, format), path)
}

/// Record of any size reduction applied before processing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preprocessing {
    pub original_dim: (usize, usize),
    pub processed_dim: (usize, usize),
    pub downsample_factor: usize,
}

/// Box-filters by the smallest integer factor that brings the longer side
/// to at most `max_dim`. `max_dim = 0` disables the reduction.
pub fn limit_size(image: ColorImage, max_dim: usize) -> (ColorImage, Preprocessing) {
    let dim = image.dim();
    let longest = dim.0.max(dim.1);
    if max_dim == 0 || longest <= max_dim {
        return (
            image,
            Preprocessing {
                original_dim: dim,
                processed_dim: dim,
                downsample_factor: 1,
            },
        );
    }
    let f = longest.div_ceil(max_dim);
    let out_dim = (dim.0.div_ceil(f), dim.1.div_ceil(f));
    let mut sums = Array2::<[f64; 4]>::from_elem(out_dim, [0.0; 4]);
    for r in 0..dim.0 {
        for c in 0..dim.1 {
            let p = image.pixel(r, c);
            let cell = &mut sums[(r / f, c / f)];
            for ch in 0..3 {
                cell[ch] += p[ch];
            }
            cell[3] += 1.0;
        }
    }
    let small = ColorImage::from_fn(out_dim.1, out_dim.0, |r, c| {
        let s = sums[(r, c)];
        [s[0] / s[3], s[1] / s[3], s[2] / s[3]].map(|v| v.clamp(0.0, 1.0))
    })
    .expect("box averages stay in range");
    (
        small,
        Preprocessing {
            original_dim: dim,
            processed_dim: out_dim,
            downsample_factor: f,
        },
    )
}
