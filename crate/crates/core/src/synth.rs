//! Deterministic synthetic test images.
//!
//! Stand-ins for the usual photographic test material: a hard-edged disk,
//! smooth quadratic and affine ramps, piecewise-constant steps, and a smooth
//! multi-blob scene. All generators are analytic in the pixel coordinates.

use crate::error::{Error, Result};
use crate::grid::Image;

pub const NAMES: [&str; 5] = ["disk", "quadratic", "affine", "steps", "gauss-blobs"];

/// Generates the named test image.
pub fn synth_image(name: &str, width: usize, height: usize) -> Result<Image> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput("image dimensions must be positive".into()));
    }
    let (w, h) = (width as f64, height as f64);
    let cx = (w - 1.0) / 2.0;
    let cy = (h - 1.0) / 2.0;
    let values: Vec<f64> = match name {
        // Binary disk, radius 20 at 64x64, membership by centre distance.
        "disk" => {
            let radius = 20.0 * w.min(h) / 64.0;
            pixel_map(width, height, |x, y| {
                let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                if d2 <= radius * radius {
                    255.0
                } else {
                    0.0
                }
            })
        }
        // Paraboloid: the Laplacian is constant.
        "quadratic" => {
            let max_r2 = cx * cx + cy * cy;
            pixel_map(width, height, |x, y| {
                255.0 * ((x - cx).powi(2) + (y - cy).powi(2)) / max_r2
            })
        }
        // Plane x + y scaled into [0, 255]: zero Laplacian in the interior.
        "affine" => {
            let span = (w - 1.0) + (h - 1.0);
            pixel_map(width, height, |x, y| 255.0 * (x + y) / span.max(1.0))
        }
        // Five vertical bands.
        "steps" => pixel_map(width, height, |x, _| {
            let band = ((x / w) * 5.0).floor().min(4.0);
            band * 255.0 / 4.0
        }),
        // Three fixed Gaussian bumps.
        "gauss-blobs" => {
            let blobs = [
                (0.3 * w, 0.3 * h, 0.15 * w.min(h), 200.0),
                (0.7 * w, 0.4 * h, 0.10 * w.min(h), 180.0),
                (0.45 * w, 0.75 * h, 0.20 * w.min(h), 150.0),
            ];
            pixel_map(width, height, |x, y| {
                let v: f64 = blobs
                    .iter()
                    .map(|&(bx, by, s, amp)| {
                        let d2 = (x - bx).powi(2) + (y - by).powi(2);
                        amp * (-d2 / (2.0 * s * s)).exp()
                    })
                    .sum();
                v.min(255.0)
            })
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown synthetic image {:?} (expected one of {:?})",
                other, NAMES
            )))
        }
    };
    Image::new(width, height, values)
}

fn pixel_map(width: usize, height: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    (0..width * height)
        .map(|i| f((i % width) as f64, (i / width) as f64))
        .collect()
}
