//! First-order noise residuals.
//!
//! The image is reduced to Rec.601 gray, filtered with the forward
//! differences `[-1, 1]` (horizontal) and `[-1, 1]^T` (vertical), the two
//! signed residuals are summed per pixel, and the sum is min-max normalized
//! to `[0, 1]`. Difference kernels remove constant offsets, so the result
//! reflects local noise and texture rather than color.

use crate::error::{Error, Result};
use crate::imagekit::{to_gray, ImageBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `r(x, y) = g(x + 1, y) - g(x, y)`
    Horizontal,
    /// `r(x, y) = g(x, y + 1) - g(x, y)`
    Vertical,
}

/// How the two directional residuals are combined before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumMode {
    /// Plain per-pixel sum of the signed residuals.
    #[default]
    Signed,
    /// Sum of absolute values.
    Magnitude,
}

/// Single-channel raster of unconstrained real values.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedRaster {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

/// Normalized residual, values in `[0, 1]`, same size as the source.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl ResidualImage {
    pub fn to_image(&self) -> ImageBuf {
        ImageBuf::new(self.width, self.height, 1, self.data.clone())
            .expect("normalized residuals are always in range")
    }
}

/// Forward difference along `direction`. The neighbor past the last row or
/// column is edge-clamped, so border residuals are zero.
pub fn directional_residual(gray: &ImageBuf, direction: Direction) -> Result<SignedRaster> {
    if gray.channels() != 1 {
        return Err(Error::Shape(format!(
            "residual filtering needs a single-channel image, got {} channels",
            gray.channels()
        )));
    }
    let (w, h) = (gray.width(), gray.height());
    let g = gray.data();
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let next = match direction {
                Direction::Horizontal => g[y * w + (x + 1).min(w - 1)],
                Direction::Vertical => g[(y + 1).min(h - 1) * w + x],
            };
            data.push(next - g[y * w + x]);
        }
    }
    Ok(SignedRaster {
        width: w,
        height: h,
        data,
    })
}

/// Horizontal plus vertical residual of the gray image, before normalization.
/// Values lie in `[-2, 2]` for signed sums.
pub fn summed_residual(img: &ImageBuf, mode: SumMode) -> SignedRaster {
    let gray = to_gray(img);
    let horizontal = directional_residual(&gray, Direction::Horizontal).expect("gray is single channel");
    let vertical = directional_residual(&gray, Direction::Vertical).expect("gray is single channel");
    let data = horizontal
        .data
        .iter()
        .zip(&vertical.data)
        .map(|(&a, &b)| match mode {
            SumMode::Signed => a + b,
            SumMode::Magnitude => a.abs() + b.abs(),
        })
        .collect();
    SignedRaster {
        width: gray.width(),
        height: gray.height(),
        data,
    }
}

/// Per-image min-max normalization to `[0, 1]`; a constant raster maps to
/// all zeros.
pub fn normalize(raster: &SignedRaster) -> ResidualImage {
    let (lo, hi) = raster
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let data = if raster.data.is_empty() || hi == lo {
        vec![0.0; raster.data.len()]
    } else {
        let range = hi - lo;
        raster.data.iter().map(|&v| ((v - lo) / range).clamp(0.0, 1.0)).collect()
    };
    ResidualImage {
        width: raster.width,
        height: raster.height,
        data,
    }
}

pub fn noise_residual(img: &ImageBuf) -> ResidualImage {
    noise_residual_with(img, SumMode::Signed)
}

pub fn noise_residual_with(img: &ImageBuf, mode: SumMode) -> ResidualImage {
    normalize(&summed_residual(img, mode))
}
