//! Grid containers, error metrics and Gaussian smoothing.
//!
//! Images are dense row-major grids of real grey values in [0, 255]; 1D
//! signals are height-1 images so every 2D operation degenerates correctly.
//! Masks are binary indicators over the same grid; the set of indices with a
//! set bit is the stored-pixel set `K`. All types are immutable values after
//! construction and every operation here is a pure function.

use crate::error::{Error, Result};
use crate::par;

/// Seed for the crate's deterministic random number generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Seed(pub u64);

/// Dense 2D grid of real grey values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("image dimensions must be positive".into()));
        }
        if values.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values for {}x{}, got {}",
                width * height,
                width,
                height,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("image contains non-finite values".into()));
        }
        Ok(Image { width, height, values })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Image::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of pixels |J|.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // dimensions are positive by construction
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.values[y * self.width + x]
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Rebuilds an image of this shape around a raw value vector.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Image> {
        Image::new(self.width, self.height, values)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Binary pixel mask; set bits form the stored-pixel set `K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("mask dimensions must be positive".into()));
        }
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "expected {} bits for {}x{}, got {}",
                width * height,
                width,
                height,
                bits.len()
            )));
        }
        Ok(Mask { width, height, bits })
    }

    pub fn full(width: usize, height: usize) -> Result<Self> {
        Mask::new(width, height, vec![true; width * height])
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Mask::new(width, height, vec![false; width * height])
    }

    pub fn from_indices(width: usize, height: usize, indices: &[usize]) -> Result<Self> {
        let mut bits = vec![false; width * height];
        for &i in indices {
            if i >= bits.len() {
                return Err(Error::InvalidInput(format!("mask index {} out of range", i)));
            }
            bits[i] = true;
        }
        Mask::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_set(&self, i: usize) -> bool {
        self.bits[i]
    }

    /// |K|, the number of stored pixels.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn density(&self) -> f64 {
        self.count() as f64 / self.len() as f64
    }

    /// Indices of K in ascending order.
    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| if b { Some(i) } else { None })
            .collect()
    }

    /// Indices of J \ K in ascending order.
    pub fn complement_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| if b { None } else { Some(i) })
            .collect()
    }

    pub fn same_shape_as_image(&self, image: &Image) -> bool {
        self.width == image.width() && self.height == image.height()
    }

    pub fn with_bit(&self, i: usize, value: bool) -> Mask {
        let mut bits = self.bits.clone();
        bits[i] = value;
        Mask { width: self.width, height: self.height, bits }
    }
}

/// Mean squared error (1/|J|) Σ (f_i − u_i)².
pub fn mse(u: &Image, f: &Image) -> Result<f64> {
    if !u.same_shape(f) {
        return Err(Error::DimensionMismatch(format!(
            "mse over {}x{} vs {}x{}",
            u.width(),
            u.height(),
            f.width(),
            f.height()
        )));
    }
    let sum: f64 = u
        .values()
        .iter()
        .zip(f.values())
        .map(|(a, b)| (b - a) * (b - a))
        .sum();
    Ok(sum / u.len() as f64)
}

/// Folds an out-of-range index back into `[0, n)` by half-sample reflection
/// (`-1 -> 0`, `-2 -> 1`, `n -> n-1`, ...). This mirroring makes smoothing
/// mass-preserving.
fn reflect(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Sampled, truncated, renormalised Gaussian kernel of radius ⌈3σ⌉.
fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    for t in -(radius as isize)..=(radius as isize) {
        let x = t as f64;
        kernel.push((-x * x / (2.0 * sigma * sigma)).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }
    kernel
}

/// Convolves with a truncated Gaussian, mirrored boundary handling.
///
/// `sigma = 0` returns the input unchanged. The kernel is a convex
/// combination, so output values stay inside the input range and the image
/// mean is preserved up to rounding.
pub fn gaussian_smooth(f: &Image, sigma: f64) -> Result<Image> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidInput(format!("negative or non-finite sigma {}", sigma)));
    }
    if sigma == 0.0 {
        return Ok(f.clone());
    }
    let kernel = gaussian_kernel(sigma);
    let radius = kernel.len() / 2;
    let (w, h) = (f.width(), f.height());

    // Horizontal pass, one row per task.
    let rows = par::map_indexed(h, |y| {
        let mut row = vec![0.0; w];
        let src = &f.values()[y * w..(y + 1) * w];
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (t, k) in kernel.iter().enumerate() {
                let xi = reflect(x as isize + t as isize - radius as isize, w);
                acc += k * src[xi];
            }
            *out = acc;
        }
        row
    });
    let horizontal: Vec<f64> = rows.into_iter().flatten().collect();

    // Vertical pass, one column per task, written back in column order.
    let cols = par::map_indexed(w, |x| {
        let mut col = vec![0.0; h];
        for (y, out) in col.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (t, k) in kernel.iter().enumerate() {
                let yi = reflect(y as isize + t as isize - radius as isize, h);
                acc += k * horizontal[yi * w + x];
            }
            *out = acc;
        }
        col
    });
    let mut values = vec![0.0; w * h];
    for (x, col) in cols.iter().enumerate() {
        for (y, v) in col.iter().enumerate() {
            values[y * w + x] = *v;
        }
    }
    f.with_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mse_identity_is_zero() {
        let f = Image::new(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(mse(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn mse_constant_offset() {
        let f = Image::new(2, 1, vec![0.0, 0.0]).unwrap();
        let u = Image::new(2, 1, vec![1.0, 1.0]).unwrap();
        assert_eq!(mse(&u, &f).unwrap(), 1.0);
    }

    #[test]
    fn mse_hand_example() {
        let f = Image::new(3, 1, vec![0.0, 2.0, 4.0]).unwrap();
        let u = Image::new(3, 1, vec![0.0, 3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(mse(&u, &f).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn mse_dimension_mismatch() {
        let f = Image::new(2, 1, vec![0.0, 0.0]).unwrap();
        let u = Image::new(1, 2, vec![0.0, 0.0]).unwrap();
        assert!(mse(&u, &f).is_err());
    }

    #[test]
    fn smooth_sigma_zero_is_identity() {
        let f = Image::new(4, 3, (0..12).map(|i| i as f64).collect()).unwrap();
        let g = gaussian_smooth(&f, 0.0).unwrap();
        assert_eq!(f.values(), g.values());
    }

    #[test]
    fn smooth_keeps_constant_images() {
        let f = Image::constant(7, 5, 42.25).unwrap();
        for sigma in [0.5, 1.0, 2.3] {
            let g = gaussian_smooth(&f, sigma).unwrap();
            for v in g.values() {
                assert_abs_diff_eq!(*v, 42.25, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn smooth_preserves_mean() {
        // Direct-summation oracle: mirrored boundaries keep the total mass.
        let vals: Vec<f64> = (0..64).map(|i| ((i * 37 + 11) % 256) as f64).collect();
        let f = Image::new(8, 8, vals).unwrap();
        for sigma in [0.4, 1.0, 3.0, 9.0] {
            let g = gaussian_smooth(&f, sigma).unwrap();
            assert_abs_diff_eq!(g.mean(), f.mean(), epsilon = 1e-12);
        }
    }

    #[test]
    fn smooth_respects_range() {
        let vals: Vec<f64> = (0..35).map(|i| ((i * 97 + 3) % 251) as f64).collect();
        let f = Image::new(7, 5, vals).unwrap();
        let g = gaussian_smooth(&f, 1.7).unwrap();
        assert!(g.min_value() >= f.min_value() - 1e-12);
        assert!(g.max_value() <= f.max_value() + 1e-12);
    }

    #[test]
    fn smooth_rejects_negative_sigma() {
        let f = Image::constant(2, 2, 0.0).unwrap();
        assert!(gaussian_smooth(&f, -1.0).is_err());
    }

    #[test]
    fn mask_counts_and_indices() {
        let m = Mask::from_indices(3, 2, &[0, 4]).unwrap();
        assert_eq!(m.count(), 2);
        assert_eq!(m.indices(), vec![0, 4]);
        assert_eq!(m.complement_indices(), vec![1, 2, 3, 5]);
    }

    #[test]
    fn reflect_folds_correctly() {
        assert_eq!(reflect(-1, 5), 0);
        assert_eq!(reflect(-2, 5), 1);
        assert_eq!(reflect(5, 5), 4);
        assert_eq!(reflect(6, 5), 3);
        // Radius larger than the signal keeps folding (period 2n).
        assert_eq!(reflect(-6, 3), 0);
        assert_eq!(reflect(-4, 3), 2);
        assert_eq!(reflect(11, 3), 0);
        assert_eq!(reflect(7, 3), 1);
    }
}
