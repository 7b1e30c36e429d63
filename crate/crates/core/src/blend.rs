//! Self-blending and face-parsing blend/cut.
//!
//! Self-blending copies a real image into `I1` and `I2`, perturbs colors on
//! one of them, shifts and rescales `I2` into `O2`, derives a soft mask from
//! the face-parsing map warped by the same affine, and blends
//! `M * O2 + (1 - M) * I1`. Parsing blend/cut replace one or two parsing
//! regions with a donor image or a solid color.
//!
//! Parsing maps come from an external face parser as 8-bit single-channel
//! PNG sidecars (`<image stem>.parsing.png`).

use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagekit::{
    affine_warp, remap, degrade, elastic_warp, gaussian_blur, masked_blend, photometric, AffineParams, Degradation,
    ElasticParams, ImageBuf, PhotometricParams, SoftMask,
};
use crate::seed::SeedContext;

/// Label assigned to blended forgeries.
pub const BLEND_LABEL: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum Region {
    Background = 0,
    Skin = 1,
    Brows = 2,
    Eyes = 3,
    Nose = 4,
    Mouth = 5,
    Hair = 6,
}

impl Region {
    pub const ALL: [Region; 7] = [
        Region::Background,
        Region::Skin,
        Region::Brows,
        Region::Eyes,
        Region::Nose,
        Region::Mouth,
        Region::Hair,
    ];

    pub fn from_label(label: u8) -> Option<Region> {
        Self::ALL.get(label as usize).copied()
    }

    pub fn label(self) -> u8 {
        self as u8
    }

    /// Regions that make up the filled face used by self-blending.
    pub fn is_face(self) -> bool {
        !matches!(self, Region::Background | Region::Hair)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsingMap {
    width: usize,
    height: usize,
    labels: Vec<Region>,
}

impl ParsingMap {
    pub fn new(width: usize, height: usize, labels: Vec<Region>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::Shape(format!(
                "{} labels for a {width}x{height} parsing map",
                labels.len()
            )));
        }
        Ok(Self { width, height, labels })
    }

    pub fn from_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        let labels = bytes
            .iter()
            .map(|&b| Region::from_label(b).ok_or_else(|| Error::Validation(format!("parsing label {b} is not in 0..=6"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(width, height, labels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[Region] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> Region {
        self.labels[y * self.width + x]
    }

    pub fn matches(&self, img: &ImageBuf) -> bool {
        img.width() == self.width && img.height() == self.height
    }

    pub fn region_area(&self, region: Region) -> usize {
        self.labels.iter().filter(|&&r| r == region).count()
    }

    /// Binary mask of the union of `regions`.
    pub fn region_mask(&self, regions: &[Region]) -> SoftMask {
        let data = self
            .labels
            .iter()
            .map(|r| if regions.contains(r) { 1.0 } else { 0.0 })
            .collect();
        SoftMask::new(self.width, self.height, data).expect("binary mask")
    }

    /// Binary face mask (every region except background and hair) with
    /// interior holes filled.
    pub fn face_mask(&self) -> SoftMask {
        let face: Vec<Region> = Region::ALL.into_iter().filter(|r| r.is_face()).collect();
        fill_holes(&self.region_mask(&face))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if decoded.color() != image::ColorType::L8 {
            return Err(Error::Format(format!(
                "{}: parsing maps must be 8-bit single-channel PNG, got {:?}",
                path.display(),
                decoded.color()
            )));
        }
        let gray = decoded.to_luma8();
        Self::from_bytes(gray.width() as usize, gray.height() as usize, gray.as_raw())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes: Vec<u8> = self.labels.iter().map(|r| r.label()).collect();
        let img = image::GrayImage::from_raw(self.width as u32, self.height as u32, bytes)
            .expect("label buffer matches dimensions");
        img.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

/// `<dir>/<stem>.parsing.png` for an image at `<dir>/<stem>.<ext>`.
pub fn sidecar_path(image_path: &Path) -> PathBuf {
    let stem = image_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    image_path.with_file_name(format!("{stem}.parsing.png"))
}

/// Sets to 1 every 0-pixel that is not 4-connected to the border through
/// other 0-pixels.
pub fn fill_holes(mask: &SoftMask) -> SoftMask {
    let (w, h) = (mask.width(), mask.height());
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    let open = |i: usize| mask.data()[i] == 0.0;
    for x in 0..w {
        for y in [0, h - 1] {
            let i = y * w + x;
            if open(i) && !outside[i] {
                outside[i] = true;
                queue.push_back(i);
            }
        }
    }
    for y in 0..h {
        for x in [0, w - 1] {
            let i = y * w + x;
            if open(i) && !outside[i] {
                outside[i] = true;
                queue.push_back(i);
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        let mut visit = |j: usize| {
            if open(j) && !outside[j] {
                outside[j] = true;
                queue.push_back(j);
            }
        };
        if x > 0 {
            visit(i - 1);
        }
        if x + 1 < w {
            visit(i + 1);
        }
        if y > 0 {
            visit(i - w);
        }
        if y + 1 < h {
            visit(i + w);
        }
    }
    let data = mask
        .data()
        .iter()
        .zip(&outside)
        .map(|(&m, &out)| if out { m } else { m.max(1.0) })
        .collect();
    SoftMask::new(w, h, data).expect("filled mask stays in range")
}

/// Piecewise-affine jitter on a 4x4 control grid. Border control points
/// stay fixed; interior points move by up to `magnitude` cell widths. Each
/// grid cell is split into two triangles and the displacement is linear
/// inside each triangle.
pub fn grid_deform(mask: &SoftMask, magnitude: f64, seed: &SeedContext) -> SoftMask {
    const N: usize = 4;
    let (w, h) = (mask.width(), mask.height());
    if magnitude == 0.0 || w < 2 || h < 2 {
        return mask.clone();
    }
    let cell_w = (w - 1) as f64 / (N - 1) as f64;
    let cell_h = (h - 1) as f64 / (N - 1) as f64;
    let mut rng = seed.rng();
    let mut disp = [[(0.0f64, 0.0f64); N]; N];
    for (gy, row) in disp.iter_mut().enumerate() {
        for (gx, d) in row.iter_mut().enumerate() {
            if gx == 0 || gy == 0 || gx == N - 1 || gy == N - 1 {
                continue;
            }
            *d = (
                rng.random_range(-magnitude..=magnitude) * cell_w,
                rng.random_range(-magnitude..=magnitude) * cell_h,
            );
        }
    }
    let field = |x: f64, y: f64| -> (f64, f64) {
        let gx = ((x / cell_w).floor() as usize).min(N - 2);
        let gy = ((y / cell_h).floor() as usize).min(N - 2);
        let u = x / cell_w - gx as f64;
        let v = y / cell_h - gy as f64;
        let (d00, d10, d01, d11) = (disp[gy][gx], disp[gy][gx + 1], disp[gy + 1][gx], disp[gy + 1][gx + 1]);
        let comb = |a: (f64, f64), b: (f64, f64), c: (f64, f64), s: f64, t: f64| {
            (a.0 + s * (b.0 - a.0) + t * (c.0 - a.0), a.1 + s * (b.1 - a.1) + t * (c.1 - a.1))
        };
        if u + v <= 1.0 {
            comb(d00, d10, d01, u, v)
        } else {
            comb(d11, d01, d10, 1.0 - u, 1.0 - v)
        }
    };
    remap(mask, |x, y| {
        let (dx, dy) = field(x as f64, y as f64);
        (x as f64 + dx, y as f64 + dy)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorKind {
    /// Per-channel offsets up to the drawn strength.
    Channel,
    /// Saturation factor `1 +/- strength`.
    Saturation,
    /// Brightness offset `+/- strength`.
    Brightness,
    /// Contrast factor `1 +/- strength`.
    Contrast,
    /// Hue rotation `+/- strength` degrees.
    Hue,
    /// Down-sampling factor.
    DownUpSample,
    /// Unsharp amount.
    Sharpen,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorEntry {
    pub kind: ColorKind,
    pub probability: f64,
    pub range: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpatialRange {
    pub scale_range: [f64; 2],
    /// Shift as a fraction of the image width/height.
    pub shift_range: [f64; 2],
}

impl Default for SpatialRange {
    fn default() -> Self {
        Self {
            scale_range: [0.95, 1.05],
            shift_range: [-0.03, 0.03],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskPipeline {
    pub deform_probability: f64,
    /// Interior control-point jitter in cell widths.
    pub deform_magnitude: f64,
    pub elastic_probability: f64,
    pub elastic: ElasticParams,
    pub blur_sigma_range: [f64; 2],
    /// Scalar multiplier on the final mask, within `(0, 1]`.
    pub transparency_range: [f64; 2],
}

impl Default for MaskPipeline {
    fn default() -> Self {
        Self {
            deform_probability: 0.5,
            deform_magnitude: 0.15,
            elastic_probability: 0.5,
            elastic: ElasticParams { alpha: 200.0, sigma: 12.0 },
            blur_sigma_range: [2.0, 8.0],
            transparency_range: [0.3, 1.0],
        }
    }
}

/// Which copy receives the color transforms. The spatial transform always
/// goes to `I2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    /// Color and spatial transforms both on `I2`.
    SameImage,
    /// Color on `I1`, spatial on `I2`.
    DifferentImages,
    /// Coin flip per sample.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelfBlendConfig {
    pub color_menu: Vec<ColorEntry>,
    pub spatial: SpatialRange,
    pub mask_pipeline: MaskPipeline,
    pub assignment_mode: Assignment,
}

impl Default for SelfBlendConfig {
    fn default() -> Self {
        use ColorKind::*;
        let entry = |kind, probability, range| ColorEntry { kind, probability, range };
        Self {
            color_menu: vec![
                entry(Channel, 0.3, [0.02, 0.08]),
                entry(Saturation, 0.3, [0.05, 0.3]),
                entry(Brightness, 0.3, [0.02, 0.1]),
                entry(Contrast, 0.3, [0.05, 0.3]),
                entry(Hue, 0.3, [2.0, 15.0]),
                entry(DownUpSample, 0.2, [0.4, 0.8]),
                entry(Sharpen, 0.2, [0.3, 1.0]),
            ],
            spatial: SpatialRange::default(),
            mask_pipeline: MaskPipeline::default(),
            assignment_mode: Assignment::Random,
        }
    }
}

impl SelfBlendConfig {
    /// No color change, no spatial change, unblurred opaque mask.
    pub fn neutral() -> Self {
        Self {
            color_menu: Vec::new(),
            spatial: SpatialRange {
                scale_range: [1.0, 1.0],
                shift_range: [0.0, 0.0],
            },
            mask_pipeline: MaskPipeline {
                deform_probability: 0.0,
                elastic_probability: 0.0,
                blur_sigma_range: [0.0, 0.0],
                transparency_range: [1.0, 1.0],
                ..MaskPipeline::default()
            },
            assignment_mode: Assignment::SameImage,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let interval = |name: &str, r: [f64; 2]| {
            if r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} {r:?} is not a valid interval")))
            }
        };
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} probability {p} outside [0, 1]")))
            }
        };
        for e in &self.color_menu {
            prob(&format!("{:?}", e.kind), e.probability)?;
            interval(&format!("{:?} range", e.kind), e.range)?;
        }
        interval("scale_range", self.spatial.scale_range)?;
        if self.spatial.scale_range[0] <= 0.0 {
            return Err(Error::Parameter("scale_range must be positive".into()));
        }
        interval("shift_range", self.spatial.shift_range)?;
        let m = &self.mask_pipeline;
        prob("deform", m.deform_probability)?;
        prob("elastic", m.elastic_probability)?;
        interval("blur_sigma_range", m.blur_sigma_range)?;
        interval("transparency_range", m.transparency_range)?;
        if !(m.transparency_range[0] > 0.0 && m.transparency_range[1] <= 1.0) {
            return Err(Error::Parameter("transparency_range must lie within (0, 1]".into()));
        }
        Ok(())
    }
}

/// Generator output: the forged image and the soft mask used to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct Blended {
    pub image: ImageBuf,
    pub mask: SoftMask,
    /// Parsing regions that were replaced (empty for self-blending).
    pub regions: Vec<Region>,
}

fn draw(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

fn color_step(img: &ImageBuf, entry: &ColorEntry, rng: &mut ChaCha8Rng, seed: &SeedContext) -> Result<ImageBuf> {
    let s = draw(rng, entry.range).abs();
    let mut signed = || if rng.random_bool(0.5) { s } else { -s };
    let p = match entry.kind {
        ColorKind::Channel => {
            let shift = [signed() * 0.5 + signed() * 0.5, signed(), signed()];
            PhotometricParams { rgb_shift: shift, ..Default::default() }
        }
        ColorKind::Saturation => PhotometricParams { saturation: 1.0 + signed(), ..Default::default() },
        ColorKind::Brightness => PhotometricParams { brightness: signed(), ..Default::default() },
        ColorKind::Contrast => PhotometricParams { contrast: 1.0 + signed(), ..Default::default() },
        ColorKind::Hue => PhotometricParams { hue_shift: signed(), ..Default::default() },
        ColorKind::DownUpSample => {
            return degrade(img, &Degradation::DownUpSample { factor: s.clamp(1e-3, 1.0) }, seed);
        }
        ColorKind::Sharpen => return degrade(img, &Degradation::Sharpen { amount: s }, seed),
    };
    Ok(photometric(img, &p))
}

/// Self-blending of a real image with a transformed copy of itself.
pub fn self_blend(img: &ImageBuf, parsing: &ParsingMap, config: &SelfBlendConfig, seed: &SeedContext) -> Result<Blended> {
    config.validate()?;
    if !parsing.matches(img) {
        return Err(Error::Shape("parsing map and image differ in size".into()));
    }
    let face = parsing.face_mask();
    if face.data().iter().all(|&m| m == 0.0) {
        return Err(Error::DegenerateInput("parsing map has no face region".into()));
    }
    let mut rng = seed.child("self_blend").rng();
    let color_on_i2 = match config.assignment_mode {
        Assignment::SameImage => true,
        Assignment::DifferentImages => false,
        Assignment::Random => rng.random_bool(0.5),
    };

    let mut colored = img.clone();
    for (n, entry) in config.color_menu.iter().enumerate() {
        if rng.random_bool(entry.probability) {
            colored = color_step(&colored, entry, &mut rng, &seed.child(&format!("color{n}")))?;
        }
    }
    let (i1, i2) = if color_on_i2 { (img.clone(), colored) } else { (colored, img.clone()) };

    let affine = AffineParams {
        scale: draw(&mut rng, config.spatial.scale_range),
        shift_x: draw(&mut rng, config.spatial.shift_range) * img.width() as f64,
        shift_y: draw(&mut rng, config.spatial.shift_range) * img.height() as f64,
        ..AffineParams::default()
    };
    let o2 = affine_warp(&i2, &affine)?;

    let pipeline = &config.mask_pipeline;
    let mut mask = affine_warp(&face, &affine)?;
    if rng.random_bool(pipeline.deform_probability) {
        mask = grid_deform(&mask, pipeline.deform_magnitude, &seed.child("deform"));
    }
    if rng.random_bool(pipeline.elastic_probability) {
        mask = elastic_warp(&mask, &pipeline.elastic, &seed.child("elastic"))?;
    }
    mask = gaussian_blur(&mask, draw(&mut rng, pipeline.blur_sigma_range));
    let transparency = draw(&mut rng, pipeline.transparency_range);
    if transparency != 1.0 {
        mask = mask.scaled(transparency);
    }

    let image = masked_blend(&i1, &o2, &mask)?;
    Ok(Blended { image, mask, regions: Vec::new() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PartBlendConfig {
    /// Regions eligible for replacement.
    pub candidates: Vec<Region>,
    /// Upper bound on how many regions are combined (1 or 2).
    pub max_components: usize,
    /// Softening of the region mask; 0 keeps it binary.
    pub blur_sigma: f64,
}

impl Default for PartBlendConfig {
    fn default() -> Self {
        Self {
            candidates: vec![Region::Skin, Region::Brows, Region::Eyes, Region::Nose, Region::Mouth, Region::Hair],
            max_components: 2,
            blur_sigma: 3.0,
        }
    }
}

/// Picks one or two distinct non-empty candidate regions, uniformly.
fn pick_regions(parsing: &ParsingMap, config: &PartBlendConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Region>> {
    let mut available: Vec<Region> = config
        .candidates
        .iter()
        .copied()
        .filter(|&r| parsing.region_area(r) > 0)
        .collect();
    available.sort();
    available.dedup();
    if available.is_empty() {
        return Err(Error::DegenerateInput("no candidate parsing region is present".into()));
    }
    let max = config.max_components.clamp(1, 2).min(available.len());
    let count = if max == 1 { 1 } else { rng.random_range(1..=max) };
    available.shuffle(rng);
    available.truncate(count);
    available.sort();
    Ok(available)
}

/// Replaces one or two parsing regions of `img` with the same pixels of `donor`.
pub fn parsing_blend(
    img: &ImageBuf,
    parsing: &ParsingMap,
    donor: &ImageBuf,
    config: &PartBlendConfig,
    seed: &SeedContext,
) -> Result<Blended> {
    if !parsing.matches(img) {
        return Err(Error::Shape("parsing map and image differ in size".into()));
    }
    if !donor.same_dims(img.width(), img.height()) || donor.channels() != img.channels() {
        return Err(Error::Shape("donor must match the image's size and channels".into()));
    }
    let mut rng = seed.child("parsing").rng();
    let regions = pick_regions(parsing, config, &mut rng)?;
    let mask = gaussian_blur(&parsing.region_mask(&regions), config.blur_sigma);
    let image = masked_blend(img, donor, &mask)?;
    Ok(Blended { image, mask, regions })
}

/// Parsing blend with a solid-color donor. `color` has one value per
/// channel, or a single value used for all channels.
pub fn parsing_cut(
    img: &ImageBuf,
    parsing: &ParsingMap,
    color: &[f64],
    config: &PartBlendConfig,
    seed: &SeedContext,
) -> Result<Blended> {
    let ch = img.channels();
    if color.len() != ch && color.len() != 1 {
        return Err(Error::Parameter(format!("{} color components for a {ch}-channel image", color.len())));
    }
    let donor = ImageBuf::from_fn(img.width(), img.height(), ch, |_, _, c| color[c.min(color.len() - 1)])?;
    parsing_blend(img, parsing, &donor, config, seed)
}

struct Ellipse {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
}

/// Canonical aligned-face layout (normalized coordinates), painted in order.
fn layout() -> Vec<(Region, Vec<Ellipse>, bool)> {
    let e = |cx, cy, rx, ry| Ellipse { cx, cy, rx, ry };
    vec![
        (Region::Skin, vec![e(0.5, 0.5, 0.40, 0.49)], false),
        // Rectangles stored as center/half-size.
        (Region::Brows, vec![e(0.36, 0.355, 0.08, 0.025), e(0.64, 0.355, 0.08, 0.025)], true),
        (Region::Eyes, vec![e(0.36, 0.43, 0.075, 0.04), e(0.64, 0.43, 0.075, 0.04)], false),
        (Region::Nose, vec![e(0.5, 0.55, 0.06, 0.10)], false),
        (Region::Mouth, vec![e(0.5, 0.73, 0.12, 0.05)], false),
    ]
}

/// Geometric stand-in for a face parser on aligned crops: canonical
/// ellipses and rectangles for skin, brows, eyes, nose and mouth, jittered
/// by a seeded similarity transform (shift up to 1%, scale up to 2%).
/// Everything outside the face ellipse is background; hair is not drawn.
pub fn geometric_fallback_parsing(size: usize, seed: &SeedContext) -> Result<ParsingMap> {
    if size == 0 {
        return Err(Error::Parameter("size must be > 0".into()));
    }
    let mut rng = seed.child("fallback").rng();
    let scale = 1.0 + rng.random_range(-0.02..=0.02);
    let dx = rng.random_range(-0.01..=0.01);
    let dy = rng.random_range(-0.01..=0.01);
    let shapes = layout();
    let n = size as f64;
    let mut labels = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            // Undo the jitter so shapes can be tested in canonical coordinates.
            let u = ((x as f64 + 0.5) / n - 0.5 - dx) / scale + 0.5;
            let v = ((y as f64 + 0.5) / n - 0.5 - dy) / scale + 0.5;
            let mut label = Region::Background;
            for (region, parts, rect) in &shapes {
                let inside = parts.iter().any(|p| {
                    let a = (u - p.cx) / p.rx;
                    let b = (v - p.cy) / p.ry;
                    if *rect {
                        a.abs() <= 1.0 && b.abs() <= 1.0
                    } else {
                        a * a + b * b <= 1.0
                    }
                });
                if inside {
                    label = *region;
                }
            }
            labels.push(label);
        }
    }
    ParsingMap::new(size, size, labels)
}

/// Binary mask of one region of [`geometric_fallback_parsing`].
pub fn geometric_fallback_mask(size: usize, region: Region, seed: &SeedContext) -> Result<SoftMask> {
    Ok(geometric_fallback_parsing(size, seed)?.region_mask(&[region]))
}
