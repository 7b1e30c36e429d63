//! Augmentation Inside Mask (AIM).
//!
//! A real image is rescaled by a random factor, degraded with a random
//! subset of an augmentation menu, scaled back to the canvas, and composited
//! into the original through a soft face mask:
//!
//! ```text
//! I_aim = M * I_a + (1 - M) * I
//! ```
//!
//! Pixels where `M == 0` keep the original bytes, so the result carries a
//! noise-pattern mismatch between face and background. These samples get
//! class label 2.
//!
//! The shadow variant additionally blurs the band where the mask crosses
//! 0.5, selected by the jitter mask `M' = 4 M (1 - M)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagekit::{
    self, degrade, elastic_warp, gaussian_blur, masked_blend, morphology, photometric, resize, Codec,
    Degradation, ElasticParams, ImageBuf, MorphKind, PhotometricParams, SoftMask,
};
use crate::seed::SeedContext;

/// Class label assigned to every AIM sample.
pub const AIM_LABEL: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugKind {
    /// JPEG quality.
    Jpeg,
    /// WEBP quality. Lossy WEBP is unavailable, so this entry fails when it fires.
    Webp,
    /// Down-sampling factor in `(0, 1]`.
    DownUpSample,
    /// Noise standard deviation.
    GaussianNoise,
    /// Blur sigma in pixels.
    GaussianBlur,
    /// Unsharp amount.
    Sharpen,
    /// Maximum absolute per-channel offset.
    RgbShift,
    /// Jitter strength: brightness and hue offsets, contrast and saturation factors.
    ColorJitter,
    /// Elastic alpha; sigma comes from `AimConfig::augment_elastic_sigma`.
    Elastic,
}

/// One menu item: fires with `probability`, its strength drawn uniformly
/// from `range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MenuEntry {
    pub kind: AugKind,
    pub probability: f64,
    pub range: [f64; 2],
}

impl MenuEntry {
    pub fn new(kind: AugKind, probability: f64, range: [f64; 2]) -> Self {
        Self { kind, probability, range }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AimConfig {
    pub canvas_size: usize,
    /// Range of the random resize applied before augmentation.
    pub pre_scale_range: [f64; 2],
    pub augmentation_menu: Vec<MenuEntry>,
    pub augment_elastic_sigma: f64,
    /// Area fraction of the base ellipse.
    pub mask_area_range: [f64; 2],
    /// Vertical over horizontal semi-axis of the base ellipse.
    pub mask_aspect: f64,
    pub mask_blur_sigma: f64,
    pub mask_morph_radius_range: [usize; 2],
    pub mask_elastic_params: ElasticParams,
    /// Probability that the shadow mode actually adds the boundary blur.
    pub shadow_artifact_probability: f64,
    pub shadow_length_range: [usize; 2],
}

impl Default for AimConfig {
    fn default() -> Self {
        use AugKind::*;
        Self {
            canvas_size: 512,
            pre_scale_range: [0.5, 1.5],
            augmentation_menu: vec![
                MenuEntry::new(Jpeg, 0.5, [30.0, 90.0]),
                MenuEntry::new(DownUpSample, 0.3, [0.3, 0.8]),
                MenuEntry::new(GaussianNoise, 0.3, [0.005, 0.03]),
                MenuEntry::new(GaussianBlur, 0.3, [0.5, 2.0]),
                MenuEntry::new(Sharpen, 0.2, [0.3, 1.5]),
                MenuEntry::new(RgbShift, 0.3, [0.02, 0.08]),
                MenuEntry::new(ColorJitter, 0.3, [0.05, 0.2]),
                MenuEntry::new(Elastic, 0.2, [100.0, 300.0]),
            ],
            augment_elastic_sigma: 12.0,
            mask_area_range: [0.5, 0.7],
            mask_aspect: 1.1,
            mask_blur_sigma: 8.0,
            mask_morph_radius_range: [0, 12],
            mask_elastic_params: ElasticParams { alpha: 400.0, sigma: 16.0 },
            shadow_artifact_probability: 1.0,
            shadow_length_range: [5, 21],
        }
    }
}

fn check_range(name: &str, r: [f64; 2]) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
        return Err(Error::Parameter(format!("{name} {r:?} is not a valid interval")));
    }
    Ok(())
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("{name} probability {p} outside [0, 1]")));
    }
    Ok(())
}

impl AimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.canvas_size == 0 {
            return Err(Error::Parameter("canvas_size must be > 0".into()));
        }
        check_range("pre_scale_range", self.pre_scale_range)?;
        if self.pre_scale_range[0] <= 0.0 {
            return Err(Error::Parameter("pre_scale_range must be positive".into()));
        }
        for e in &self.augmentation_menu {
            check_probability(&format!("{:?}", e.kind), e.probability)?;
            check_range(&format!("{:?} range", e.kind), e.range)?;
        }
        if !self.augmentation_menu.is_empty() && self.augmentation_menu.iter().all(|e| e.probability == 0.0) {
            return Err(Error::Parameter("augmentation menu has no entry that can fire".into()));
        }
        check_range("mask_area_range", self.mask_area_range)?;
        if !(self.mask_area_range[0] > 0.0 && self.mask_area_range[1] <= 1.0) {
            return Err(Error::Parameter("mask_area_range must lie in (0, 1]".into()));
        }
        if !(self.mask_aspect > 0.0) || !(self.mask_blur_sigma >= 0.0) || !(self.augment_elastic_sigma > 0.0) {
            return Err(Error::Parameter("mask_aspect, mask_blur_sigma or augment_elastic_sigma out of range".into()));
        }
        if self.mask_morph_radius_range[0] > self.mask_morph_radius_range[1] {
            return Err(Error::Parameter("mask_morph_radius_range is empty".into()));
        }
        if self.shadow_length_range[0] > self.shadow_length_range[1] {
            return Err(Error::Parameter("shadow_length_range is empty".into()));
        }
        check_probability("shadow_artifact", self.shadow_artifact_probability)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AimSample {
    pub image: ImageBuf,
    pub mask: SoftMask,
    pub label: u8,
}

fn draw(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..=range[1])
    }
}

fn draw_usize(rng: &mut ChaCha8Rng, range: [usize; 2]) -> usize {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..=range[1])
    }
}

/// Centered binary ellipse covering `area_fraction` of a `size`x`size`
/// canvas (before clipping at the border).
pub fn ellipse_mask(size: usize, area_fraction: f64, aspect: f64) -> SoftMask {
    let area = area_fraction * (size * size) as f64;
    let a = (area / (std::f64::consts::PI * aspect)).sqrt();
    let b = aspect * a;
    let c = (size as f64 - 1.0) / 2.0;
    SoftMask::from_fn(size, size, |x, y| {
        let u = (x as f64 - c) / a;
        let v = (y as f64 - c) / b;
        if u * u + v * v <= 1.0 {
            1.0
        } else {
            0.0
        }
    })
    .expect("ellipse samples are binary")
}

/// Randomized universal face mask: a centered ellipse, then a random erode
/// or dilate, an elastic warp, and a Gaussian blur.
pub fn universal_mask(size: usize, seed: &SeedContext, config: &AimConfig) -> Result<SoftMask> {
    if size == 0 {
        return Err(Error::Parameter("mask size must be > 0".into()));
    }
    let mut rng = seed.child("mask").rng();
    let fraction = draw(&mut rng, config.mask_area_range);
    let mut mask = ellipse_mask(size, fraction, config.mask_aspect);
    let radius = draw_usize(&mut rng, config.mask_morph_radius_range);
    let kind = if rng.random_bool(0.5) { MorphKind::Erode } else { MorphKind::Dilate };
    mask = morphology(&mask, kind, radius);
    mask = elastic_warp(&mask, &config.mask_elastic_params, &seed.child("mask/elastic"))?;
    Ok(gaussian_blur(&mask, config.mask_blur_sigma))
}

/// `clamp(4 m (1 - m), 0, 1)`: zero on binary regions, one where `m == 0.5`.
pub fn jitter_mask(mask: &SoftMask) -> SoftMask {
    SoftMask::from_raw_clamped(
        mask.width(),
        mask.height(),
        mask.data().iter().map(|&m| 4.0 * m * (1.0 - m)).collect(),
    )
}

/// Blends a motion-blurred copy of `img` into itself through the jitter mask
/// of `mask`, producing shadow-like smearing along the mask boundary.
///
/// A strictly binary mask has an all-zero jitter mask; the image is then
/// returned unchanged and a warning is logged.
pub fn shadow_artifact(img: &ImageBuf, mask: &SoftMask, length: usize, angle_deg: f64) -> Result<ImageBuf> {
    if mask.is_binary() {
        log::warn!("shadow artifact requested with a binary mask; jitter mask is empty, image unchanged");
        return Ok(img.clone());
    }
    let band = jitter_mask(mask);
    let blurred = degrade(
        img,
        &Degradation::MotionBlur { length, angle_deg },
        &SeedContext::new(0, ""),
    )?;
    masked_blend(img, &blurred, &band)
}

fn resolve(entry: &MenuEntry, rng: &mut ChaCha8Rng, config: &AimConfig) -> Result<Step> {
    let s = draw(rng, entry.range);
    let a = s.abs();
    let step = match entry.kind {
        AugKind::Jpeg => Step::Degrade(Degradation::Recompress {
            codec: Codec::Jpeg,
            quality: s.round().clamp(1.0, 100.0) as u8,
        }),
        AugKind::Webp => Step::Degrade(Degradation::Recompress {
            codec: Codec::Webp,
            quality: s.round().clamp(1.0, 100.0) as u8,
        }),
        AugKind::DownUpSample => Step::Degrade(Degradation::DownUpSample { factor: s.clamp(1e-3, 1.0) }),
        AugKind::GaussianNoise => Step::Degrade(Degradation::GaussianNoise { sigma: s }),
        AugKind::GaussianBlur => Step::Degrade(Degradation::GaussianBlur { sigma: s }),
        AugKind::Sharpen => Step::Degrade(Degradation::Sharpen { amount: s }),
        AugKind::RgbShift => {
            let mut shift = [0.0; 3];
            for v in &mut shift {
                *v = rng.random_range(-a..=a);
            }
            Step::Color(PhotometricParams { rgb_shift: shift, ..Default::default() })
        }
        AugKind::ColorJitter => Step::Color(PhotometricParams {
            brightness: rng.random_range(-a..=a),
            contrast: 1.0 + rng.random_range(-a..=a),
            saturation: 1.0 + rng.random_range(-a..=a),
            hue_shift: 180.0 * rng.random_range(-a..=a),
            ..Default::default()
        }),
        AugKind::Elastic => Step::Elastic(ElasticParams { alpha: s, sigma: config.augment_elastic_sigma }),
    };
    Ok(step)
}

enum Step {
    Degrade(Degradation),
    Color(PhotometricParams),
    Elastic(ElasticParams),
}

/// Indices of the menu entries that fire. Each entry fires independently;
/// an empty draw is repeated so that a non-empty menu always changes the
/// image.
fn pick_entries(menu: &[MenuEntry], rng: &mut ChaCha8Rng) -> Vec<usize> {
    if menu.is_empty() {
        return Vec::new();
    }
    loop {
        let fired: Vec<usize> = menu
            .iter()
            .enumerate()
            .filter(|(_, e)| rng.random_bool(e.probability))
            .map(|(i, _)| i)
            .collect();
        if !fired.is_empty() {
            return fired;
        }
    }
}

/// The augmented image `I_a` before compositing.
pub fn augment_full(real_image: &ImageBuf, config: &AimConfig, seed: &SeedContext) -> Result<ImageBuf> {
    let canvas = config.canvas_size;
    let mut rng = seed.child("aim").rng();
    let scale = draw(&mut rng, config.pre_scale_range);
    let side = ((canvas as f64 * scale).round() as usize).max(1);
    let mut work = resize(real_image, side, side);
    for (n, i) in pick_entries(&config.augmentation_menu, &mut rng).into_iter().enumerate() {
        let step_seed = seed.child(&format!("aim/step{n}"));
        work = match resolve(&config.augmentation_menu[i], &mut rng, config)? {
            Step::Degrade(d) => degrade(&work, &d, &step_seed)?,
            Step::Color(p) => photometric(&work, &p),
            Step::Elastic(p) => elastic_warp(&work, &p, &step_seed)?,
        };
    }
    Ok(resize(&work, canvas, canvas))
}

/// One AIM sample. A real image that is not canvas-sized is resized first;
/// the mask must already be canvas-sized.
pub fn aim_sample(real_image: &ImageBuf, mask: &SoftMask, config: &AimConfig, seed: &SeedContext) -> Result<AimSample> {
    config.validate()?;
    let canvas = config.canvas_size;
    if mask.width() != canvas || mask.height() != canvas {
        return Err(Error::Shape(format!(
            "mask is {}x{}, canvas is {canvas}x{canvas}",
            mask.width(),
            mask.height()
        )));
    }
    let base = imagekit::resize(real_image, canvas, canvas);
    let augmented = augment_full(&base, config, seed)?;
    let image = masked_blend(&base, &augmented, mask)?;
    Ok(AimSample { image, mask: mask.clone(), label: AIM_LABEL })
}

/// AIM followed, with `shadow_artifact_probability`, by a boundary motion blur.
pub fn aim_shadow_sample(
    real_image: &ImageBuf,
    mask: &SoftMask,
    config: &AimConfig,
    seed: &SeedContext,
) -> Result<AimSample> {
    let mut sample = aim_sample(real_image, mask, config, seed)?;
    let mut rng = seed.child("shadow").rng();
    if rng.random_bool(config.shadow_artifact_probability) {
        let length = draw_usize(&mut rng, config.shadow_length_range);
        let angle = rng.random_range(0.0..180.0);
        sample.image = shadow_artifact(&sample.image, mask, length, angle)?;
    }
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> AimConfig {
        AimConfig {
            canvas_size: 48,
            pre_scale_range: [0.6, 1.4],
            augment_elastic_sigma: 3.0,
            mask_blur_sigma: 2.0,
            mask_morph_radius_range: [0, 3],
            mask_elastic_params: ElasticParams { alpha: 60.0, sigma: 4.0 },
            shadow_length_range: [3, 7],
            ..AimConfig::default()
        }
    }

    fn textured(size: usize) -> ImageBuf {
        ImageBuf::from_fn(size, size, 3, |x, y, c| ((x * 7 + y * 13 + c * 29) % 31) as f64 / 30.0).unwrap()
    }

    #[test]
    fn jitter_examples() {
        let binary = SoftMask::from_fn(4, 4, |x, _| if x < 2 { 1.0 } else { 0.0 }).unwrap();
        assert!(jitter_mask(&binary).data().iter().all(|&v| v == 0.0));
        let half = SoftMask::filled(3, 3, 0.5).unwrap();
        assert!(jitter_mask(&half).data().iter().all(|&v| v == 1.0));
        let quarter = SoftMask::filled(1, 1, 0.25).unwrap();
        assert_eq!(jitter_mask(&quarter).data(), &[0.75]);
    }

    #[test]
    fn jitter_peaks_only_at_half() {
        let values: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).collect();
        let mask = SoftMask::new(values.len(), 1, values.clone()).unwrap();
        for (m, j) in values.iter().zip(jitter_mask(&mask).data()) {
            assert_eq!(*j == 1.0, *m == 0.5, "m = {m}");
            assert_eq!(*j == 0.0, *m == 0.0 || *m == 1.0, "m = {m}");
        }
    }

    #[test]
    fn degenerate_universal_mask_is_the_ellipse() {
        let config = AimConfig {
            mask_blur_sigma: 0.0,
            mask_morph_radius_range: [0, 0],
            mask_elastic_params: ElasticParams { alpha: 0.0, sigma: 1.0 },
            mask_area_range: [0.6, 0.6],
            ..AimConfig::default()
        };
        let mask = universal_mask(64, &SeedContext::new(1, "m"), &config).unwrap();
        assert!(mask.is_binary());
        assert_eq!(mask, ellipse_mask(64, 0.6, config.mask_aspect));
        assert!((mask.mean() - 0.6).abs() < 0.02, "{}", mask.mean());
    }

    #[test]
    fn universal_mask_is_deterministic_and_soft() {
        let config = small_config();
        let a = universal_mask(48, &SeedContext::new(9, "s"), &config).unwrap();
        let b = universal_mask(48, &SeedContext::new(9, "s"), &config).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_binary());
        assert_eq!(a.get(24, 24), 1.0);
        assert_eq!(a.get(0, 0), 0.0);
    }

    #[test]
    fn universal_mask_area_over_seeds() {
        let config = small_config();
        let n = 100;
        let mean: f64 = (0..n)
            .map(|i| universal_mask(48, &SeedContext::new(3, format!("m{i}")), &config).unwrap().mean())
            .sum::<f64>()
            / n as f64;
        assert!((0.35..=0.8).contains(&mean), "mean area {mean}");
    }

    #[test]
    fn zero_mask_returns_the_real_image() {
        let config = small_config();
        let img = textured(48);
        let zero = SoftMask::filled(48, 48, 0.0).unwrap();
        let out = aim_sample(&img, &zero, &config, &SeedContext::new(5, "a")).unwrap();
        assert_eq!(out.image, img);
        assert_eq!(out.label, AIM_LABEL);
    }

    #[test]
    fn full_mask_returns_the_augmented_image() {
        let config = small_config();
        let img = textured(48);
        let seed = SeedContext::new(5, "a");
        let one = SoftMask::filled(48, 48, 1.0).unwrap();
        let out = aim_sample(&img, &one, &config, &seed).unwrap();
        assert_eq!(out.image, augment_full(&img, &config, &seed).unwrap());
        assert_ne!(out.image, img);
    }

    #[test]
    fn empty_menu_unit_scale_is_identity() {
        let config = AimConfig {
            augmentation_menu: vec![],
            pre_scale_range: [1.0, 1.0],
            ..small_config()
        };
        let img = textured(48);
        let mask = universal_mask(48, &SeedContext::new(2, "m"), &config).unwrap();
        let out = aim_sample(&img, &mask, &config, &SeedContext::new(2, "x")).unwrap();
        assert_eq!(out.image, img);
    }

    #[test]
    fn aim_is_deterministic_and_local() {
        let config = small_config();
        let img = textured(48);
        let mask = universal_mask(48, &SeedContext::new(4, "m"), &config).unwrap();
        let seed = SeedContext::new(4, "s");
        let a = aim_shadow_sample(&img, &mask, &config, &seed).unwrap();
        let b = aim_shadow_sample(&img, &mask, &config, &seed).unwrap();
        assert_eq!(a, b);
        for (i, &m) in mask.data().iter().enumerate() {
            if m == 0.0 {
                assert_eq!(a.image.data()[i * 3..i * 3 + 3], img.data()[i * 3..i * 3 + 3]);
            }
        }
    }

    #[test]
    fn shadow_examples() {
        let img = textured(32);
        let binary = ellipse_mask(32, 0.5, 1.0);
        assert_eq!(shadow_artifact(&img, &binary, 9, 30.0).unwrap(), img);

        let soft = gaussian_blur(&binary, 2.0);
        let flat = ImageBuf::filled(32, 32, 3, 0.4).unwrap();
        assert_eq!(shadow_artifact(&flat, &soft, 9, 30.0).unwrap(), flat);

        let out = shadow_artifact(&img, &soft, 9, 30.0).unwrap();
        assert_ne!(out, img);
        let band = jitter_mask(&soft);
        for (i, &j) in band.data().iter().enumerate() {
            if j == 0.0 {
                assert_eq!(out.data()[i * 3..i * 3 + 3], img.data()[i * 3..i * 3 + 3]);
            }
        }
    }

    #[test]
    fn mask_size_mismatch_is_a_shape_error() {
        let config = small_config();
        let mask = SoftMask::filled(40, 40, 0.0).unwrap();
        assert!(matches!(
            aim_sample(&textured(48), &mask, &config, &SeedContext::new(1, "x")),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(AimConfig::default().validate().is_ok());
        let bad = AimConfig { canvas_size: 0, ..AimConfig::default() };
        assert!(bad.validate().is_err());
        let bad = AimConfig {
            augmentation_menu: vec![MenuEntry::new(AugKind::Jpeg, 1.5, [10.0, 20.0])],
            ..AimConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = AimConfig {
            augmentation_menu: vec![MenuEntry::new(AugKind::Jpeg, 0.0, [10.0, 20.0])],
            ..AimConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
