//! Convolution-style filters and grayscale morphology.
//!
//! All kernels are normalized and accumulated relative to the center sample,
//! `out = v + sum_k w_k (v_k - v)`, which equals `sum_k w_k v_k` when the
//! weights sum to one and reproduces constant regions bit-exactly.

use super::buffer::{Raster, SoftMask};
use super::sample::bilinear;

/// Normalized 1-D Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as i64;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

fn convolve_axis(samples: &[f64], w: usize, h: usize, ch: usize, taps: &[f64], horizontal: bool) -> Vec<f64> {
    let r = (taps.len() / 2) as i64;
    let mut out = vec![0.0; samples.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let center = samples[(y * w + x) * ch + c];
                let mut acc = 0.0;
                for (i, &t) in taps.iter().enumerate() {
                    let k = i as i64 - r;
                    let (xx, yy) = if horizontal {
                        ((x as i64 + k).clamp(0, w as i64 - 1) as usize, y)
                    } else {
                        (x, (y as i64 + k).clamp(0, h as i64 - 1) as usize)
                    };
                    acc += t * (samples[(yy * w + xx) * ch + c] - center);
                }
                out[(y * w + x) * ch + c] = center + acc;
            }
        }
    }
    out
}

/// Gaussian blur of an unconstrained single-channel plane.
pub(crate) fn blur_plane(plane: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    if !(sigma > 0.0) {
        return plane.to_vec();
    }
    let taps = gaussian_kernel(sigma);
    let pass = convolve_axis(plane, w, h, 1, &taps, true);
    convolve_axis(&pass, w, h, 1, &taps, false)
}

/// Separable Gaussian blur with edge clamp. `sigma <= 0` is the identity.
pub fn gaussian_blur<R: Raster + Clone>(src: &R, sigma: f64) -> R {
    if !(sigma > 0.0) {
        return src.clone();
    }
    let taps = gaussian_kernel(sigma);
    let (w, h, ch) = (src.width(), src.height(), src.channels());
    let pass = convolve_axis(src.samples(), w, h, ch, &taps, true);
    let pass = convolve_axis(&pass, w, h, ch, &taps, false);
    src.rebuild(w, h, pass)
}

/// Line blur: the mean of `length` bilinear samples spaced one pixel apart
/// along direction `angle_deg`, centered on each pixel.
pub fn motion_blur<R: Raster + Clone>(src: &R, length: usize, angle_deg: f64) -> R {
    if length <= 1 {
        return src.clone();
    }
    let (w, h, ch) = (src.width(), src.height(), src.channels());
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let half = (length - 1) as f64 / 2.0;
    let offsets: Vec<(f64, f64)> = (0..length)
        .map(|i| {
            let t = i as f64 - half;
            (t * cos, t * sin)
        })
        .collect();
    let weight = 1.0 / length as f64;
    let samples = src.samples();
    let mut out = Vec::with_capacity(samples.len());
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let center = samples[(y * w + x) * ch + c];
                let mut acc = 0.0;
                for &(dx, dy) in &offsets {
                    let v = bilinear(samples, w, h, ch, x as f64 + dx, y as f64 + dy, c);
                    acc += weight * (v - center);
                }
                out.push(center + acc);
            }
        }
    }
    src.rebuild(w, h, out)
}

/// Unsharp masking: `v + amount * (v - blur(v))` with a sigma-1 Gaussian.
pub fn sharpen<R: Raster + Clone>(src: &R, amount: f64) -> R {
    if amount == 0.0 {
        return src.clone();
    }
    let blurred = gaussian_blur(src, 1.0);
    let out = src
        .samples()
        .iter()
        .zip(blurred.samples())
        .map(|(&v, &b)| v + amount * (v - b))
        .collect();
    src.rebuild(src.width(), src.height(), out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorphKind {
    Erode,
    Dilate,
}

/// Sliding-window extremum over `[x - half, x + half]` of one row, ignoring
/// samples outside the row.
fn row_extremum(row: &[f64], half: usize, take_min: bool, out: &mut [f64]) {
    use std::collections::VecDeque;
    let n = row.len();
    let better = |a: f64, b: f64| if take_min { a <= b } else { a >= b };
    let mut window: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for x in 0..n {
        let hi = (x + half).min(n - 1);
        while next <= hi {
            while let Some(&back) = window.back() {
                if better(row[next], row[back]) {
                    window.pop_back();
                } else {
                    break;
                }
            }
            window.push_back(next);
            next += 1;
        }
        let lo = x.saturating_sub(half);
        while let Some(&front) = window.front() {
            if front < lo {
                window.pop_front();
            } else {
                break;
            }
        }
        out[x] = row[*window.front().expect("window is never empty")];
    }
}

/// Grayscale erosion (min) or dilation (max) over a disk of `radius` pixels.
/// Neighbors outside the mask are ignored.
pub fn morphology(mask: &SoftMask, kind: MorphKind, radius: usize) -> SoftMask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width(), mask.height());
    let take_min = kind == MorphKind::Erode;
    let src = mask.data();
    let mut out: Vec<f64> = vec![if take_min { 1.0 } else { 0.0 }; w * h];
    let mut row_buf = vec![0.0; w];
    let r = radius as i64;
    for dy in -r..=r {
        let half = ((r * r - dy * dy) as f64).sqrt().floor() as usize;
        for y in 0..h {
            let sy = y as i64 + dy;
            if sy < 0 || sy >= h as i64 {
                continue;
            }
            let sy = sy as usize;
            row_extremum(&src[sy * w..(sy + 1) * w], half, take_min, &mut row_buf);
            let dst = &mut out[y * w..(y + 1) * w];
            for (d, &v) in dst.iter_mut().zip(&row_buf) {
                *d = if take_min { d.min(v) } else { d.max(v) };
            }
        }
    }
    SoftMask::from_raw_clamped(w, h, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagekit::ImageBuf;
    use rand::{Rng, SeedableRng};

    fn brute_morph(mask: &SoftMask, kind: MorphKind, radius: usize) -> Vec<f64> {
        let (w, h) = (mask.width() as i64, mask.height() as i64);
        let r = radius as i64;
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let mut acc = if kind == MorphKind::Erode { 1.0f64 } else { 0.0f64 };
                for dy in -r..=r {
                    for dx in -r..=r {
                        if dx * dx + dy * dy > r * r {
                            continue;
                        }
                        let (xx, yy) = (x + dx, y + dy);
                        if xx < 0 || yy < 0 || xx >= w || yy >= h {
                            continue;
                        }
                        let v = mask.get(xx as usize, yy as usize);
                        acc = if kind == MorphKind::Erode { acc.min(v) } else { acc.max(v) };
                    }
                }
                out.push(acc);
            }
        }
        out
    }

    fn random_binary(seed: u64, w: usize, h: usize) -> SoftMask {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        SoftMask::from_fn(w, h, |_, _| if rng.random_bool(0.6) { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn kernels_are_normalized() {
        for sigma in [0.5, 1.0, 3.3, 8.0] {
            let total: f64 = gaussian_kernel(sigma).iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn blurs_keep_constants_exactly() {
        let img = ImageBuf::filled(9, 7, 3, 0.3).unwrap();
        assert_eq!(gaussian_blur(&img, 2.0), img);
        assert_eq!(motion_blur(&img, 7, 33.0), img);
        assert_eq!(sharpen(&img, 1.5), img);
    }

    #[test]
    fn morphology_matches_brute_force_disk() {
        for seed in 0..20 {
            let mask = random_binary(seed, 16, 13);
            for radius in [1, 2, 3, 5] {
                for kind in [MorphKind::Erode, MorphKind::Dilate] {
                    assert_eq!(morphology(&mask, kind, radius).data(), &brute_morph(&mask, kind, radius)[..]);
                }
            }
        }
    }

    #[test]
    fn morphology_identities() {
        let mask = random_binary(3, 8, 8);
        assert_eq!(morphology(&mask, MorphKind::Dilate, 0), mask);
        let flat = SoftMask::filled(8, 8, 0.4).unwrap();
        assert_eq!(morphology(&flat, MorphKind::Erode, 3), flat);
        assert_eq!(morphology(&flat, MorphKind::Dilate, 3), flat);
    }

    #[test]
    fn opening_never_grows_a_binary_mask() {
        for seed in 0..50 {
            let mask = random_binary(seed + 100, 16, 16);
            for radius in 1..=3 {
                let opened = morphology(&morphology(&mask, MorphKind::Erode, radius), MorphKind::Dilate, radius);
                for (o, m) in opened.data().iter().zip(mask.data()) {
                    assert!(o <= m);
                }
            }
        }
    }
}
