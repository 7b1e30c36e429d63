//! Parameterized transforms. Every spec type here holds fully resolved
//! numbers; randomness enters only through an explicit [`SeedContext`].

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::buffer::{ImageBuf, Raster, SoftMask};
use super::filter;
use super::io::jpeg_round_trip;
use super::sample::{remap, resize};
use crate::error::{Error, Result};
use crate::seed::SeedContext;

const REC601: [f64; 3] = [0.299, 0.587, 0.114];

/// Rec.601 luma. Single-channel input is returned unchanged.
pub fn to_gray(img: &ImageBuf) -> ImageBuf {
    if img.channels() == 1 {
        return img.clone();
    }
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| REC601[0] * p[0] + REC601[1] * p[1] + REC601[2] * p[2])
        .collect();
    ImageBuf::from_raw_clamped(img.width(), img.height(), 1, data)
}

/// `out = mask * overlay + (1 - mask) * base`, per pixel and channel.
///
/// Evaluated as `base + mask * (overlay - base)` so that mask 0, mask 1 and
/// `overlay == base` are all exact, and the result stays between base and
/// overlay.
pub fn masked_blend(base: &ImageBuf, overlay: &ImageBuf, mask: &SoftMask) -> Result<ImageBuf> {
    let (w, h) = (base.width(), base.height());
    if !overlay.same_dims(w, h) || !(mask.width() == w && mask.height() == h) {
        return Err(Error::Shape(format!(
            "blend of {}x{} base, {}x{} overlay, {}x{} mask",
            w,
            h,
            overlay.width(),
            overlay.height(),
            mask.width(),
            mask.height()
        )));
    }
    if base.channels() != overlay.channels() {
        return Err(Error::Shape(format!(
            "base has {} channels, overlay {}",
            base.channels(),
            overlay.channels()
        )));
    }
    let ch = base.channels();
    let mut out = Vec::with_capacity(base.data().len());
    for (i, &m) in mask.data().iter().enumerate() {
        for c in 0..ch {
            let b = base.data()[i * ch + c];
            let o = overlay.data()[i * ch + c];
            let v = if m == 0.0 {
                b
            } else if m == 1.0 {
                o
            } else {
                (b + m * (o - b)).clamp(b.min(o), b.max(o))
            };
            out.push(v);
        }
    }
    Ok(ImageBuf::from_raw_clamped(w, h, ch, out))
}

/// Similarity transform about the image center, plus optional horizontal
/// flip. Shifts are in pixels, rotation in degrees (counter-clockwise on
/// screen).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AffineParams {
    pub scale: f64,
    pub rotation_deg: f64,
    pub shift_x: f64,
    pub shift_y: f64,
    pub flip_horizontal: bool,
}

impl Default for AffineParams {
    fn default() -> Self {
        Self {
            scale: 1.0,
            rotation_deg: 0.0,
            shift_x: 0.0,
            shift_y: 0.0,
            flip_horizontal: false,
        }
    }
}

impl AffineParams {
    pub fn flip() -> Self {
        Self {
            flip_horizontal: true,
            ..Self::default()
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::default()
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.scale, self.rotation_deg, self.shift_x, self.shift_y]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Parameter("affine parameters must be finite".into()));
        }
        if self.scale <= 0.0 {
            return Err(Error::Parameter(format!("affine scale {} must be > 0", self.scale)));
        }
        Ok(())
    }

    /// Maps an output pixel coordinate to the source coordinate it samples.
    pub(crate) fn inverse_map(&self, width: usize, height: usize) -> impl Fn(f64, f64) -> (f64, f64) {
        let cx = (width as f64 - 1.0) / 2.0;
        let cy = (height as f64 - 1.0) / 2.0;
        let (sin, cos) = (-self.rotation_deg).to_radians().sin_cos();
        let inv_scale = 1.0 / self.scale;
        let (tx, ty, flip) = (self.shift_x, self.shift_y, self.flip_horizontal);
        let last_x = width as f64 - 1.0;
        move |x, y| {
            let dx = x - cx - tx;
            let dy = y - cy - ty;
            let rx = (cos * dx + sin * dy) * inv_scale;
            let ry = (-sin * dx + cos * dy) * inv_scale;
            let sx = rx + cx;
            let sy = ry + cy;
            if flip {
                (last_x - sx, sy)
            } else {
                (sx, sy)
            }
        }
    }
}

/// Bilinear affine resampling with edge clamp; output keeps the input size.
pub fn affine_warp<R: Raster + Clone>(src: &R, params: &AffineParams) -> Result<R> {
    params.validate()?;
    if params.is_identity() {
        return Ok(src.clone());
    }
    let map = params.inverse_map(src.width(), src.height());
    Ok(remap(src, |x, y| map(x as f64, y as f64)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticParams {
    /// Displacement scale in pixels applied to the smoothed noise field.
    pub alpha: f64,
    /// Gaussian smoothing of the noise field, in pixels.
    pub sigma: f64,
}

/// Random elastic deformation: per-pixel uniform noise in `[-1, 1]` for each
/// axis, Gaussian-smoothed with `sigma`, scaled by `alpha`, then used as a
/// backward displacement with bilinear edge-clamped sampling.
pub fn elastic_warp<R: Raster + Clone>(src: &R, params: &ElasticParams, seed: &SeedContext) -> Result<R> {
    if !(params.alpha >= 0.0) || !(params.sigma > 0.0) || !params.alpha.is_finite() {
        return Err(Error::Parameter(format!(
            "elastic alpha {} must be >= 0 and sigma {} > 0",
            params.alpha, params.sigma
        )));
    }
    if params.alpha == 0.0 {
        return Ok(src.clone());
    }
    let (w, h) = (src.width(), src.height());
    let mut rng = seed.rng();
    let noise = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        (0..w * h).map(|_| rng.random_range(-1.0..=1.0)).collect()
    };
    let dx = filter::blur_plane(&noise(&mut rng), w, h, params.sigma);
    let dy = filter::blur_plane(&noise(&mut rng), w, h, params.sigma);
    let alpha = params.alpha;
    Ok(remap(src, |x, y| {
        let i = y * w + x;
        (x as f64 + alpha * dx[i], y as f64 + alpha * dy[i])
    }))
}

/// Color adjustments, applied in the order brightness, contrast, saturation,
/// hue, RGB shift, gray. The neutral value of each is its `Default`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhotometricParams {
    /// Added to every sample.
    pub brightness: f64,
    /// Multiplier about the midpoint 0.5.
    pub contrast: f64,
    /// Multiplier of the distance from the Rec.601 gray value.
    pub saturation: f64,
    /// Hue rotation in degrees.
    pub hue_shift: f64,
    /// Per-channel additive offsets.
    pub rgb_shift: [f64; 3],
    /// Replace every channel with the Rec.601 gray value.
    pub to_gray: bool,
}

impl Default for PhotometricParams {
    fn default() -> Self {
        Self {
            brightness: 0.0,
            contrast: 1.0,
            saturation: 1.0,
            hue_shift: 0.0,
            rgb_shift: [0.0; 3],
            to_gray: false,
        }
    }
}

fn rgb_to_hsv(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let hue = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let sat = if max == 0.0 { 0.0 } else { delta / max };
    (hue, sat, max)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
    let c = v * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    (r + m, g + m, b + m)
}

pub fn photometric(img: &ImageBuf, params: &PhotometricParams) -> ImageBuf {
    let ch = img.channels();
    let mut data = img.data().to_vec();
    let clamp = |d: &mut Vec<f64>| d.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    if params.brightness != 0.0 {
        data.iter_mut().for_each(|v| *v += params.brightness);
        clamp(&mut data);
    }
    if params.contrast != 1.0 {
        data.iter_mut().for_each(|v| *v = 0.5 + params.contrast * (*v - 0.5));
        clamp(&mut data);
    }
    if ch == 3 {
        if params.saturation != 1.0 {
            for p in data.chunks_exact_mut(3) {
                let g = REC601[0] * p[0] + REC601[1] * p[1] + REC601[2] * p[2];
                p.iter_mut().for_each(|v| *v = g + params.saturation * (*v - g));
            }
            clamp(&mut data);
        }
        if params.hue_shift != 0.0 {
            for p in data.chunks_exact_mut(3) {
                let (h, s, v) = rgb_to_hsv(p[0], p[1], p[2]);
                let (r, g, b) = hsv_to_rgb(h + params.hue_shift, s, v);
                p.copy_from_slice(&[r, g, b]);
            }
            clamp(&mut data);
        }
        if params.rgb_shift != [0.0; 3] {
            for p in data.chunks_exact_mut(3) {
                for (v, s) in p.iter_mut().zip(params.rgb_shift) {
                    *v += s;
                }
            }
            clamp(&mut data);
        }
        if params.to_gray {
            for p in data.chunks_exact_mut(3) {
                let g = REC601[0] * p[0] + REC601[1] * p[1] + REC601[2] * p[2];
                p.fill(g);
            }
        }
    }
    ImageBuf::from_raw_clamped(img.width(), img.height(), ch, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Codec {
    Jpeg,
    Webp,
}

/// Quality-degrading operations. Each variant carries its own strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Degradation {
    /// Additive zero-mean Gaussian noise with standard deviation `sigma`.
    GaussianNoise { sigma: f64 },
    GaussianBlur { sigma: f64 },
    Sharpen { amount: f64 },
    /// Line blur of `length` pixels at `angle_deg`.
    MotionBlur { length: usize, angle_deg: f64 },
    /// Downscale by `factor` in `(0, 1]`, then back to the original size.
    DownUpSample { factor: f64 },
    /// Lossy encode/decode round trip at `quality` in `1..=100`.
    Recompress { codec: Codec, quality: u8 },
}

pub fn degrade(img: &ImageBuf, spec: &Degradation, seed: &SeedContext) -> Result<ImageBuf> {
    let bad = |what: String| Err(Error::Parameter(what));
    match *spec {
        Degradation::GaussianNoise { sigma } => {
            if !(sigma >= 0.0) {
                return bad(format!("noise sigma {sigma} must be >= 0"));
            }
            if sigma == 0.0 {
                return Ok(img.clone());
            }
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::Parameter(e.to_string()))?;
            let mut rng = seed.rng();
            let data = img.data().iter().map(|v| v + normal.sample(&mut rng)).collect();
            Ok(ImageBuf::from_raw_clamped(img.width(), img.height(), img.channels(), data))
        }
        Degradation::GaussianBlur { sigma } => {
            if !(sigma >= 0.0) {
                return bad(format!("blur sigma {sigma} must be >= 0"));
            }
            Ok(filter::gaussian_blur(img, sigma))
        }
        Degradation::Sharpen { amount } => {
            if !(amount >= 0.0) {
                return bad(format!("sharpen amount {amount} must be >= 0"));
            }
            Ok(filter::sharpen(img, amount))
        }
        Degradation::MotionBlur { length, angle_deg } => {
            if !angle_deg.is_finite() {
                return bad("motion blur angle must be finite".into());
            }
            Ok(filter::motion_blur(img, length, angle_deg))
        }
        Degradation::DownUpSample { factor } => {
            if !(factor > 0.0 && factor <= 1.0) {
                return bad(format!("down/up factor {factor} must be in (0, 1]"));
            }
            let (w, h) = (img.width(), img.height());
            let sw = ((w as f64 * factor).round() as usize).max(1);
            let sh = ((h as f64 * factor).round() as usize).max(1);
            Ok(resize(&resize(img, sw, sh), w, h))
        }
        Degradation::Recompress { codec, quality } => match codec {
            Codec::Jpeg => {
                if !(1..=100).contains(&quality) {
                    return bad(format!("jpeg quality {quality} must be in 1..=100"));
                }
                jpeg_round_trip(img, quality)
            }
            Codec::Webp => Err(Error::Capability(
                "lossy WEBP encoding is not available in this build".into(),
            )),
        },
    }
}

/// Axis-aligned rectangle in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelBox {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

/// Replaces each listed rectangle with `fill` in every channel.
pub fn cutout(img: &ImageBuf, boxes: &[PixelBox], fill: f64) -> Result<ImageBuf> {
    if !(0.0..=1.0).contains(&fill) {
        return Err(Error::Parameter(format!("fill {fill} outside [0, 1]")));
    }
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    for b in boxes {
        if b.x + b.width > w || b.y + b.height > h {
            return Err(Error::Parameter(format!("{b:?} exceeds a {w}x{h} image")));
        }
    }
    let mut data = img.data().to_vec();
    for b in boxes {
        for y in b.y..b.y + b.height {
            let start = (y * w + b.x) * ch;
            data[start..start + b.width * ch].fill(fill);
        }
    }
    Ok(ImageBuf::from_raw_clamped(w, h, ch, data))
}

/// A single fully resolved transform, as stored in configs and pipelines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transform", rename_all = "snake_case")]
pub enum TransformSpec {
    Affine(AffineParams),
    Elastic(ElasticParams),
    Photometric(PhotometricParams),
    Degrade(Degradation),
    Cutout { boxes: Vec<PixelBox>, fill: f64 },
}

impl TransformSpec {
    /// Applies the transform; `seed` is consumed only by the stochastic kinds.
    pub fn apply(&self, img: &ImageBuf, seed: &SeedContext) -> Result<ImageBuf> {
        match self {
            TransformSpec::Affine(p) => affine_warp(img, p),
            TransformSpec::Elastic(p) => elastic_warp(img, p, seed),
            TransformSpec::Photometric(p) => Ok(photometric(img, p)),
            TransformSpec::Degrade(d) => degrade(img, d, seed),
            TransformSpec::Cutout { boxes, fill } => cutout(img, boxes, *fill),
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize, ch: usize) -> ImageBuf {
        ImageBuf::from_fn(w, h, ch, |x, y, c| ((x * 5 + y * 3 + c * 7) % 17) as f64 / 16.0).unwrap()
    }

    fn seed() -> SeedContext {
        SeedContext::new(42, "t")
    }

    #[test]
    fn gray_examples() {
        let img = ImageBuf::filled(3, 2, 3, 0.4).unwrap();
        assert!(to_gray(&img).data().iter().all(|&v| (v - 0.4).abs() < 1e-15));
        let red = ImageBuf::new(1, 1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(to_gray(&red).data(), &[0.299]);
        let gray = ramp(4, 4, 1);
        assert_eq!(to_gray(&gray), gray);
        let once = to_gray(&ramp(5, 5, 3));
        assert_eq!(to_gray(&once), once);
    }

    #[test]
    fn blend_examples() {
        let base = ImageBuf::filled(2, 2, 3, 0.2).unwrap();
        let over = ImageBuf::filled(2, 2, 3, 0.8).unwrap();
        let zero = SoftMask::filled(2, 2, 0.0).unwrap();
        let one = SoftMask::filled(2, 2, 1.0).unwrap();
        let half = SoftMask::filled(2, 2, 0.5).unwrap();
        assert_eq!(masked_blend(&base, &over, &zero).unwrap(), base);
        assert_eq!(masked_blend(&base, &over, &one).unwrap(), over);
        let mid = masked_blend(&base, &over, &half).unwrap();
        assert!(mid.data().iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn blend_shape_errors() {
        let a = ImageBuf::filled(2, 2, 3, 0.2).unwrap();
        let b = ImageBuf::filled(2, 3, 3, 0.2).unwrap();
        let g = ImageBuf::filled(2, 2, 1, 0.2).unwrap();
        let m = SoftMask::filled(2, 2, 0.5).unwrap();
        assert!(matches!(masked_blend(&a, &b, &m), Err(Error::Shape(_))));
        assert!(matches!(masked_blend(&a, &g, &m), Err(Error::Shape(_))));
        let m3 = SoftMask::filled(3, 2, 0.5).unwrap();
        assert!(matches!(masked_blend(&a, &a, &m3), Err(Error::Shape(_))));
    }

    #[test]
    fn affine_identities() {
        let img = ramp(7, 5, 3);
        assert_eq!(affine_warp(&img, &AffineParams::default()).unwrap(), img);
        let flipped = affine_warp(&img, &AffineParams::flip()).unwrap();
        assert_eq!(flipped.get(0, 2, 1), img.get(6, 2, 1));
        assert_eq!(affine_warp(&flipped, &AffineParams::flip()).unwrap(), img);
    }

    #[test]
    fn affine_on_constant_is_constant() {
        let img = ImageBuf::filled(9, 9, 3, 0.61).unwrap();
        let params = AffineParams {
            scale: 1.3,
            rotation_deg: 17.0,
            shift_x: 2.5,
            shift_y: -1.25,
            flip_horizontal: true,
        };
        assert_eq!(affine_warp(&img, &params).unwrap(), img);
    }

    #[test]
    fn affine_integer_shift_moves_pixels() {
        let img = ramp(8, 6, 1);
        let params = AffineParams {
            shift_x: 2.0,
            ..AffineParams::default()
        };
        let out = affine_warp(&img, &params).unwrap();
        assert_eq!(out.get(5, 3, 0), img.get(3, 3, 0));
        assert_eq!(out.get(0, 3, 0), img.get(0, 3, 0));
    }

    #[test]
    fn affine_rejects_bad_parameters() {
        let img = ramp(4, 4, 1);
        for p in [
            AffineParams { scale: 0.0, ..AffineParams::default() },
            AffineParams { rotation_deg: f64::NAN, ..AffineParams::default() },
            AffineParams { shift_x: f64::INFINITY, ..AffineParams::default() },
        ] {
            assert!(matches!(affine_warp(&img, &p), Err(Error::Parameter(_))));
        }
    }

    #[test]
    fn elastic_examples() {
        let img = ramp(16, 12, 3);
        let none = ElasticParams { alpha: 0.0, sigma: 3.0 };
        assert_eq!(elastic_warp(&img, &none, &seed()).unwrap(), img);
        let p = ElasticParams { alpha: 30.0, sigma: 3.0 };
        let a = elastic_warp(&img, &p, &seed()).unwrap();
        assert_eq!(a, elastic_warp(&img, &p, &seed()).unwrap());
        assert_ne!(a, img);
        let flat = SoftMask::filled(16, 12, 0.3).unwrap();
        assert_eq!(elastic_warp(&flat, &p, &seed()).unwrap(), flat);
        assert!(elastic_warp(&img, &ElasticParams { alpha: 1.0, sigma: 0.0 }, &seed()).is_err());
    }

    #[test]
    fn photometric_examples() {
        let img = ramp(6, 4, 3);
        assert_eq!(photometric(&img, &PhotometricParams::default()), img);

        let bright = ImageBuf::filled(1, 1, 3, 0.95).unwrap();
        let out = photometric(&bright, &PhotometricParams { brightness: 0.1, ..Default::default() });
        assert!(out.data().iter().all(|&v| v == 1.0));

        let mid = ImageBuf::filled(1, 1, 3, 0.6).unwrap();
        let out = photometric(&mid, &PhotometricParams { contrast: 2.0, ..Default::default() });
        assert!(out.data().iter().all(|&v| (v - 0.7).abs() < 1e-12));
    }

    #[test]
    fn hue_round_trip_and_gray_flag() {
        let img = ramp(5, 5, 3);
        let there = photometric(&img, &PhotometricParams { hue_shift: 120.0, ..Default::default() });
        let back = photometric(&there, &PhotometricParams { hue_shift: -120.0, ..Default::default() });
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-12);
        }
        let gray = photometric(&img, &PhotometricParams { to_gray: true, ..Default::default() });
        for p in gray.data().chunks_exact(3) {
            assert!(p[0] == p[1] && p[1] == p[2]);
        }
    }

    #[test]
    fn degrade_examples() {
        let flat = ImageBuf::filled(12, 12, 3, 0.45).unwrap();
        let blurred = degrade(&flat, &Degradation::GaussianBlur { sigma: 2.0 }, &seed()).unwrap();
        assert_eq!(blurred, flat);
        let img = ramp(12, 12, 3);
        assert_eq!(degrade(&img, &Degradation::GaussianNoise { sigma: 0.0 }, &seed()).unwrap(), img);
        let noisy = degrade(&img, &Degradation::GaussianNoise { sigma: 0.05 }, &seed()).unwrap();
        assert_ne!(noisy, img);
        assert_eq!(noisy, degrade(&img, &Degradation::GaussianNoise { sigma: 0.05 }, &seed()).unwrap());
        let du = degrade(&img, &Degradation::DownUpSample { factor: 0.5 }, &seed()).unwrap();
        assert_eq!((du.width(), du.height()), (12, 12));
    }

    #[test]
    fn recompress_quality_100_is_close() {
        let img = ImageBuf::from_fn(32, 32, 3, |x, y, c| ((x + 2 * y + 5 * c) % 32) as f64 / 31.0).unwrap();
        let spec = Degradation::Recompress { codec: Codec::Jpeg, quality: 100 };
        let out = degrade(&img, &spec, &seed()).unwrap();
        let mae = img.data().iter().zip(out.data()).map(|(a, b)| (a - b).abs()).sum::<f64>()
            / img.data().len() as f64;
        assert!(mae < 0.02, "mae {mae}");
        let low = Degradation::Recompress { codec: Codec::Jpeg, quality: 5 };
        assert_ne!(degrade(&img, &low, &seed()).unwrap(), img);
    }

    #[test]
    fn webp_is_a_capability_error() {
        let img = ramp(4, 4, 3);
        let spec = Degradation::Recompress { codec: Codec::Webp, quality: 80 };
        assert!(matches!(degrade(&img, &spec, &seed()), Err(Error::Capability(_))));
    }

    #[test]
    fn cutout_examples() {
        let img = ramp(6, 5, 3);
        assert_eq!(cutout(&img, &[], 0.0).unwrap(), img);
        let full = PixelBox { x: 0, y: 0, width: 6, height: 5 };
        assert!(cutout(&img, &[full], 0.0).unwrap().data().iter().all(|&v| v == 0.0));

        let bright = ImageBuf::filled(6, 5, 3, 0.9).unwrap();
        let out = cutout(&bright, &[PixelBox { x: 2, y: 1, width: 2, height: 2 }], 0.0).unwrap();
        let changed = out.data().iter().zip(bright.data()).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 4 * 3);

        let oob = PixelBox { x: 5, y: 0, width: 2, height: 1 };
        assert!(matches!(cutout(&img, &[oob], 0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn transform_spec_serde_round_trip() {
        let spec = TransformSpec::Degrade(Degradation::MotionBlur { length: 9, angle_deg: 30.0 });
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<TransformSpec>(&text).unwrap(), spec);
    }
}
