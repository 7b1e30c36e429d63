//! Bilinear sampling with edge clamp, and the resize built on it.

use super::buffer::Raster;

#[inline]
pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // Exact when a == b or t == 0.
    a + t * (b - a)
}

/// Samples channel `c` of a planar-interleaved buffer at real coordinates.
/// Coordinates outside the image are clamped to the border.
#[inline]
pub(crate) fn bilinear(
    samples: &[f64],
    width: usize,
    height: usize,
    channels: usize,
    x: f64,
    y: f64,
    c: usize,
) -> f64 {
    let x = x.clamp(0.0, (width - 1) as f64);
    let y = y.clamp(0.0, (height - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let at = |xx: usize, yy: usize| samples[(yy * width + xx) * channels + c];
    let top = lerp(at(x0, y0), at(x1, y0), fx);
    let bottom = lerp(at(x0, y1), at(x1, y1), fx);
    lerp(top, bottom, fy)
}

/// Backward warp: each output pixel `(x, y)` samples the source at
/// `source_of(x, y)`. Output has the source's dimensions.
pub(crate) fn remap<R: Raster>(src: &R, mut source_of: impl FnMut(usize, usize) -> (f64, f64)) -> R {
    let (w, h, ch) = (src.width(), src.height(), src.channels());
    let samples = src.samples();
    let mut out = Vec::with_capacity(w * h * ch);
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = source_of(x, y);
            for c in 0..ch {
                out.push(bilinear(samples, w, h, ch, sx, sy, c));
            }
        }
    }
    src.rebuild(w, h, out)
}

/// Bilinear resize using pixel-center alignment. Same-size resize is an
/// exact copy.
pub fn resize<R: Raster + Clone>(src: &R, width: usize, height: usize) -> R {
    let (sw, sh, ch) = (src.width(), src.height(), src.channels());
    if sw == width && sh == height {
        return src.clone();
    }
    let width = width.max(1);
    let height = height.max(1);
    let kx = sw as f64 / width as f64;
    let ky = sh as f64 / height as f64;
    let samples = src.samples();
    let mut out = Vec::with_capacity(width * height * ch);
    for y in 0..height {
        let sy = (y as f64 + 0.5) * ky - 0.5;
        for x in 0..width {
            let sx = (x as f64 + 0.5) * kx - 0.5;
            for c in 0..ch {
                out.push(bilinear(samples, sw, sh, ch, sx, sy, c));
            }
        }
    }
    src.rebuild(width, height, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagekit::ImageBuf;

    #[test]
    fn integer_coordinates_pick_exact_samples() {
        let img = ImageBuf::from_fn(4, 3, 1, |x, y, _| (x * 3 + y) as f64 / 20.0).unwrap();
        for y in 0..3 {
            for x in 0..4 {
                let v = bilinear(img.data(), 4, 3, 1, x as f64, y as f64, 0);
                assert_eq!(v, img.get(x, y, 0));
            }
        }
    }

    #[test]
    fn edge_clamp_and_midpoints() {
        let img = ImageBuf::new(2, 1, 1, vec![0.2, 0.6]).unwrap();
        assert_eq!(bilinear(img.data(), 2, 1, 1, -3.0, 0.0, 0), 0.2);
        assert_eq!(bilinear(img.data(), 2, 1, 1, 9.0, 4.0, 0), 0.6);
        assert!((bilinear(img.data(), 2, 1, 1, 0.5, 0.0, 0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn resize_preserves_constants_and_dims() {
        let img = ImageBuf::filled(10, 7, 3, 0.37).unwrap();
        let small = resize(&img, 4, 3);
        assert_eq!((small.width(), small.height()), (4, 3));
        assert!(small.data().iter().all(|&v| v == 0.37));
        assert_eq!(resize(&img, 10, 7), img);
    }
}
