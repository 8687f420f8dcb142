//! Gradient magnitude similarity deviation.

use super::check_dims;
use super::filter::{correlate3_same, mean};
use crate::error::Result;
use crate::Plane;

const PREWITT_X: [[f64; 3]; 3] = [
    [1.0 / 3.0, 0.0, -1.0 / 3.0],
    [1.0 / 3.0, 0.0, -1.0 / 3.0],
    [1.0 / 3.0, 0.0, -1.0 / 3.0],
];
const PREWITT_Y: [[f64; 3]; 3] = [
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    [0.0, 0.0, 0.0],
    [-1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0],
];
/// Stability constant for the 8-bit scale.
const C: f64 = 170.0;

fn gradient_magnitude(p: &Plane) -> Plane {
    let gx = correlate3_same(p, &PREWITT_X);
    let gy = correlate3_same(p, &PREWITT_Y);
    ndarray::Zip::from(&gx).and(&gy).map_collect(|x, y| (x * x + y * y).sqrt())
}

/// Pixelwise gradient magnitude similarity, values in `(0, 1]`.
pub fn gms_map(a: &Plane, b: &Plane) -> Result<Plane> {
    check_dims(a, b)?;
    let ga = gradient_magnitude(a);
    let gb = gradient_magnitude(b);
    Ok(ndarray::Zip::from(&ga)
        .and(&gb)
        .map_collect(|x, y| (2.0 * x * y + C) / (x * x + y * y + C)))
}

/// Population standard deviation of the GMS map.
pub fn gmsd(a: &Plane, b: &Plane) -> Result<f64> {
    let map = gms_map(a, b)?;
    let mu = mean(&map);
    let var = map.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / map.len() as f64;
    Ok(var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_range_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = Array2::from_shape_fn((16, 16), |_| rng.random_range(0.0..255.0));
        let b = Array2::from_shape_fn((16, 16), |_| rng.random_range(0.0..255.0));
        assert_eq!(gmsd(&a, &a).unwrap(), 0.0);
        assert!(gms_map(&a, &b).unwrap().iter().all(|&v| v > 0.0 && v <= 1.0));
        assert!((gmsd(&a, &b).unwrap() - gmsd(&b, &a).unwrap()).abs() < 1e-12);
    }
}
