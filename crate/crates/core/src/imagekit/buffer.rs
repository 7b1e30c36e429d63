use crate::error::{Error, Result};

/// Row-major raster with 1 or 3 real-valued channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuf {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

/// Row-major single-channel raster in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMask {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

fn check_range(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(i) => Err(Error::Parameter(format!(
            "sample {} = {} is outside [0, 1]",
            i, data[i]
        ))),
        None => Ok(()),
    }
}

impl ImageBuf {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Shape(format!("{channels} channels, expected 1 or 3")));
        }
        if data.len() != width * height * channels {
            return Err(Error::Shape(format!(
                "{} samples for a {width}x{height}x{channels} image",
                data.len()
            )));
        }
        check_range(&data)?;
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds an image from a per-pixel closure returning the channel values.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    /// Clamps into range instead of rejecting. Used by every operation that
    /// produces new samples.
    pub(crate) fn from_raw_clamped(
        width: usize,
        height: usize,
        channels: usize,
        mut data: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        clamp_unit(&mut data);
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn same_dims(&self, width: usize, height: usize) -> bool {
        self.width == width && self.height == height
    }
}

impl SoftMask {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "{} samples for a {width}x{height} mask",
                data.len()
            )));
        }
        check_range(&data)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub(crate) fn from_raw_clamped(width: usize, height: usize, mut data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        clamp_unit(&mut data);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Fraction of the area covered, i.e. the mean mask value.
    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// True when every value is exactly 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|&m| m == 0.0 || m == 1.0)
    }

    /// Multiplies every value by `factor` (clamped to `[0, 1]`).
    pub fn scaled(&self, factor: f64) -> SoftMask {
        SoftMask::from_raw_clamped(
            self.width,
            self.height,
            self.data.iter().map(|m| m * factor).collect(),
        )
    }

    /// Treats a single-channel image as a mask.
    pub fn from_gray(img: &ImageBuf) -> Result<Self> {
        if img.channels() != 1 {
            return Err(Error::Shape("mask images must be single channel".into()));
        }
        Ok(Self {
            width: img.width(),
            height: img.height(),
            data: img.data().to_vec(),
        })
    }

    pub fn to_image(&self) -> ImageBuf {
        ImageBuf {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.data.clone(),
        }
    }
}

fn clamp_unit(data: &mut [f64]) {
    for v in data {
        // NaN cannot arise from in-range inputs; map it to 0 regardless.
        *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    }
}

/// Common view over [`ImageBuf`] and [`SoftMask`] so geometric operations
/// can be written once.
pub trait Raster: Sized {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn channels(&self) -> usize;
    fn samples(&self) -> &[f64];
    /// Same geometry, new samples (clamped into range).
    fn rebuild(&self, width: usize, height: usize, samples: Vec<f64>) -> Self;
}

impl Raster for ImageBuf {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn channels(&self) -> usize {
        self.channels
    }
    fn samples(&self) -> &[f64] {
        &self.data
    }
    fn rebuild(&self, width: usize, height: usize, samples: Vec<f64>) -> Self {
        ImageBuf::from_raw_clamped(width, height, self.channels, samples)
    }
}

impl Raster for SoftMask {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn channels(&self) -> usize {
        1
    }
    fn samples(&self) -> &[f64] {
        &self.data
    }
    fn rebuild(&self, width: usize, height: usize, samples: Vec<f64>) -> Self {
        SoftMask::from_raw_clamped(width, height, samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_ranges() {
        assert!(matches!(ImageBuf::new(2, 2, 2, vec![0.0; 8]), Err(Error::Shape(_))));
        assert!(matches!(ImageBuf::new(2, 2, 1, vec![0.0; 3]), Err(Error::Shape(_))));
        assert!(matches!(ImageBuf::new(1, 1, 1, vec![1.5]), Err(Error::Parameter(_))));
        assert!(matches!(SoftMask::new(1, 1, vec![-0.1]), Err(Error::Parameter(_))));
        assert!(SoftMask::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn indexing_is_row_major() {
        let img = ImageBuf::from_fn(3, 2, 3, |x, y, c| (x + 3 * y + 6 * c) as f64 / 32.0).unwrap();
        assert_eq!(img.get(2, 1, 1), 11.0 / 32.0);
        assert_eq!(img.pixel(1, 0), &[1.0 / 32.0, 7.0 / 32.0, 13.0 / 32.0]);
    }
}
