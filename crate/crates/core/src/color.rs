//! RGB images and the HSV transform.

use ndarray::Array2;

use crate::error::{invalid, Result, ScsaError};
use crate::Plane;

/// RGB image with channels in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid("image dimensions must be positive"));
        }
        if pixels.len() != width * height {
            return Err(invalid(format!(
                "{} pixels do not fill a {width}×{height} image",
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().flatten().find(|c| !(c.is_finite() && (0.0..=1.0).contains(*c))) {
            return Err(invalid(format!("channel values must lie in [0, 1], found {bad}")));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> Result<Self> {
        let pixels = (0..height).flat_map(|r| (0..width).map(move |c| (r, c))).map(|(r, c)| f(r, c)).collect();
        Self::new(width, height, pixels)
    }

    /// Gray image with `r = g = b = values[(row, col)]`.
    pub fn from_gray(values: &Plane) -> Result<Self> {
        let (height, width) = values.dim();
        Self::new(width, height, values.iter().map(|&v| [v, v, v]).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `(height, width)`, matching plane shapes.
    pub fn dim(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        self.pixels[row * self.width + col]
    }

    /// One channel as a plane scaled by `scale`.
    pub fn channel(&self, c: usize, scale: f64) -> Plane {
        Array2::from_shape_fn(self.dim(), |(r, col)| self.pixel(r, col)[c] * scale)
    }

    /// Rec. 601 luma `0.299 R + 0.587 G + 0.114 B`, scaled by `scale`.
    pub fn luma(&self, scale: f64) -> Plane {
        Array2::from_shape_fn(self.dim(), |(r, c)| {
            let [red, green, blue] = self.pixel(r, c);
            (0.299 * red + 0.587 * green + 0.114 * blue) * scale
        })
    }

    pub(crate) fn check_same_dim(&self, other: &ColorImage) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(ScsaError::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(())
    }
}

/// HSV planes: hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HsvImage {
    pub hue: Plane,
    pub saturation: Plane,
    pub value: Plane,
}

impl HsvImage {
    pub fn dim(&self) -> (usize, usize) {
        self.value.dim()
    }
}

/// Converts one pixel. Gray pixels get hue 0.
pub fn rgb_to_hsv_pixel([r, g, b]: [f64; 3]) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let chroma = max - min;
    let s = if max > 0.0 { chroma / max } else { 0.0 };
    let h = if chroma == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / chroma).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / chroma + 2.0)
    } else {
        60.0 * ((r - g) / chroma + 4.0)
    };
    // rem_euclid can return 6.0 for tiny negative inputs
    let h = if h >= 360.0 { 0.0 } else { h };
    [h, s, max]
}

pub fn hsv_to_rgb_pixel([h, s, v]: [f64; 3]) -> [f64; 3] {
    let c = v * s;
    let sector = (h / 60.0).rem_euclid(6.0);
    let x = c * (1.0 - (sector % 2.0 - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match sector as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [(r + m).clamp(0.0, 1.0), (g + m).clamp(0.0, 1.0), (b + m).clamp(0.0, 1.0)]
}

pub fn rgb_to_hsv(image: &ColorImage) -> HsvImage {
    let dim = image.dim();
    let mut hue = Array2::zeros(dim);
    let mut saturation = Array2::zeros(dim);
    let mut value = Array2::zeros(dim);
    for r in 0..image.height {
        for c in 0..image.width {
            let [h, s, v] = rgb_to_hsv_pixel(image.pixel(r, c));
            hue[(r, c)] = h;
            saturation[(r, c)] = s;
            value[(r, c)] = v;
        }
    }
    HsvImage { hue, saturation, value }
}

pub fn hsv_to_rgb(image: &HsvImage) -> Result<ColorImage> {
    let (height, width) = image.dim();
    if image.hue.dim() != (height, width) || image.saturation.dim() != (height, width) {
        return Err(invalid("HSV planes must share one shape"));
    }
    let mut pixels = Vec::with_capacity(height * width);
    for r in 0..height {
        for c in 0..width {
            let (h, s, v) = (image.hue[(r, c)], image.saturation[(r, c)], image.value[(r, c)]);
            if !(h.is_finite() && (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&v)) {
                return Err(invalid(format!("HSV triple out of range at ({r}, {c}): ({h}, {s}, {v})")));
            }
            pixels.push(hsv_to_rgb_pixel([h, s, v]));
        }
    }
    ColorImage::new(width, height, pixels)
}
