//! `forge`: run one generator over every eligible record of a manifest.
//!
//! Output layout under `--out`: `images/<id>.png`, `masks/<id>.png` for
//! generators that produce a mask, `manifest.jsonl` and `run.json`. Each
//! sample draws from its own seed stream, so outputs do not depend on the
//! worker count or scheduling.

use std::path::{Path, PathBuf};

use forgekit::aim::{aim_sample, aim_shadow_sample, universal_mask, AimConfig};
use forgekit::blend::{
    geometric_fallback_parsing, parsing_blend, parsing_cut, self_blend, sidecar_path, Blended, ParsingMap,
    PartBlendConfig, SelfBlendConfig,
};
use forgekit::corpus::{Group, Label, Manifest, SampleRecord, Split};
use forgekit::imagekit::{load_image, resize, save_image, to_gray, ImageBuf, SoftMask};
use forgekit::srm::{noise_residual_with, SumMode};
use forgekit::{Error, SeedContext};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::run::{load_config, require, usage, write_run_metadata, CmdResult, Failure};
use crate::{Common, ForgeMode};

#[derive(clap::Args)]
pub struct ForgeArgs {
    #[command(flatten)]
    common: Common,
    /// Generator to run.
    #[arg(long, value_enum)]
    mode: ForgeMode,
    /// Directory that record paths are relative to (default: the manifest's directory).
    #[arg(long)]
    root: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ForgeConfig {
    pub aim: AimConfig,
    pub self_blend: SelfBlendConfig,
    pub parsing: PartBlendConfig,
    /// Solid color for parsing-cut; random per sample when absent.
    pub cut_color: Option<Vec<f64>>,
    /// Use the geometric face layout when a parsing sidecar is missing.
    pub fallback_parsing: bool,
    pub srm_sum: SumMode,
}

impl ForgeConfig {
    fn validate(&self, mode: ForgeMode) -> forgekit::Result<()> {
        match mode {
            ForgeMode::Aim | ForgeMode::AimShadow => self.aim.validate(),
            ForgeMode::SelfBlend => self.self_blend.validate(),
            ForgeMode::ParsingCut => match &self.cut_color {
                Some(c) if c.is_empty() || c.iter().any(|v| !(0.0..=1.0).contains(v)) => {
                    Err(Error::Parameter(format!("cut_color {c:?} must hold values in [0, 1]")))
                }
                _ => Ok(()),
            },
            ForgeMode::ParsingBlend | ForgeMode::Srm => Ok(()),
        }
    }
}

fn mode_name(mode: ForgeMode) -> &'static str {
    match mode {
        ForgeMode::Aim => "aim",
        ForgeMode::AimShadow => "aim-shadow",
        ForgeMode::SelfBlend => "self-blend",
        ForgeMode::ParsingBlend => "parsing-blend",
        ForgeMode::ParsingCut => "parsing-cut",
        ForgeMode::Srm => "srm",
    }
}

/// AIM modes take real train records (only the AIM-tagged ones when the
/// manifest carries tags); blend modes take every real record; srm takes
/// everything.
fn select_sources(m: &Manifest, mode: ForgeMode) -> Vec<SampleRecord> {
    let records = m.records();
    match mode {
        ForgeMode::Srm => records.to_vec(),
        ForgeMode::Aim | ForgeMode::AimShadow => {
            let any_tagged = records.iter().any(|r| r.aim);
            records
                .iter()
                .filter(|r| r.label == Label::Real && r.split == Split::Train && (r.aim || !any_tagged))
                .cloned()
                .collect()
        }
        _ => records.iter().filter(|r| r.label == Label::Real).cloned().collect(),
    }
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

fn match_channels(img: ImageBuf, channels: usize) -> forgekit::Result<ImageBuf> {
    match (img.channels(), channels) {
        (a, b) if a == b => Ok(img),
        (3, 1) => Ok(to_gray(&img)),
        _ => ImageBuf::from_fn(img.width(), img.height(), 3, |x, y, _| img.get(x, y, 0)),
    }
}

struct Job<'a> {
    mode: ForgeMode,
    config: &'a ForgeConfig,
    root: &'a Path,
    out: &'a Path,
    seed: u64,
    sources: &'a [SampleRecord],
}

impl Job<'_> {
    fn parsing_for(&self, image_path: &Path, img: &ImageBuf, seed: &SeedContext) -> forgekit::Result<ParsingMap> {
        let sidecar = sidecar_path(image_path);
        if sidecar.exists() {
            let map = ParsingMap::load(&sidecar)?;
            if !map.matches(img) {
                return Err(Error::Shape(format!("{} does not match the image size", sidecar.display())));
            }
            return Ok(map);
        }
        if !self.config.fallback_parsing {
            return Err(Error::Validation(format!("missing parsing sidecar {}", sidecar.display())));
        }
        if img.width() != img.height() {
            return Err(Error::Shape("the geometric fallback layout needs a square image".into()));
        }
        geometric_fallback_parsing(img.width(), &seed.child("parsing"))
    }

    fn donor(&self, index: usize, img: &ImageBuf, seed: &SeedContext) -> forgekit::Result<ImageBuf> {
        let n = self.sources.len();
        if n < 2 {
            return Err(Error::Validation("parsing-blend needs at least two real images".into()));
        }
        let mut k = seed.child("donor").rng().random_range(0..n - 1);
        if k >= index {
            k += 1;
        }
        let donor = load_image(self.root.join(&self.sources[k].path))?;
        let donor = resize(&donor, img.width(), img.height());
        match_channels(donor, img.channels())
    }

    fn save(&self, dir: &str, stem: &str, img: &ImageBuf) -> forgekit::Result<String> {
        let rel = format!("{dir}/{stem}.png");
        save_image(img, self.out.join(&rel))?;
        Ok(rel)
    }

    fn one(&self, index: usize) -> forgekit::Result<SampleRecord> {
        let record = &self.sources[index];
        let seed = SeedContext::new(self.seed, record.id.clone());
        let image_path = self.root.join(&record.path);
        let img = load_image(&image_path)?;

        if self.mode == ForgeMode::Srm {
            let residual = noise_residual_with(&img, self.config.srm_sum).to_image();
            let mut out = record.clone();
            out.path = self.save("images", &file_stem(&record.id), &residual)?;
            return Ok(out);
        }

        let name = mode_name(self.mode);
        let id = format!("{}-{name}", record.id);
        let (image, mask, label, regions): (ImageBuf, SoftMask, Label, Vec<String>) = match self.mode {
            ForgeMode::Aim | ForgeMode::AimShadow => {
                let aim = &self.config.aim;
                let mask = universal_mask(aim.canvas_size, &seed, aim)?;
                let sample = if self.mode == ForgeMode::Aim {
                    aim_sample(&img, &mask, aim, &seed)?
                } else {
                    aim_shadow_sample(&img, &mask, aim, &seed)?
                };
                (sample.image, sample.mask, Label::AimFake, Vec::new())
            }
            _ => {
                let parsing = self.parsing_for(&image_path, &img, &seed)?;
                let Blended { image, mask, regions } = match self.mode {
                    ForgeMode::SelfBlend => self_blend(&img, &parsing, &self.config.self_blend, &seed)?,
                    ForgeMode::ParsingBlend => {
                        let donor = self.donor(index, &img, &seed)?;
                        parsing_blend(&img, &parsing, &donor, &self.config.parsing, &seed)?
                    }
                    _ => {
                        let color = match &self.config.cut_color {
                            Some(c) => c.clone(),
                            None => {
                                let mut rng = seed.child("cut_color").rng();
                                (0..img.channels()).map(|_| rng.random::<f64>()).collect()
                            }
                        };
                        parsing_cut(&img, &parsing, &color, &self.config.parsing, &seed)?
                    }
                };
                let names = regions
                    .iter()
                    .map(|r| serde_json::to_value(r).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default())
                    .collect();
                (image, mask, Label::Fake, names)
            }
        };
        let stem = file_stem(&id);
        let path = self.save("images", &stem, &image)?;
        let mask_path = self.save("masks", &stem, &mask.to_image())?;
        let split = if label == Label::AimFake { Split::Train } else { record.split };
        let mut out = SampleRecord::new(id, path, label, name.replace('-', "_"), split).with_group(Group::NotApplicable);
        out.extra.insert("source".into(), Value::from(record.id.clone()));
        out.extra.insert("mask".into(), Value::from(mask_path));
        if !regions.is_empty() {
            out.extra.insert("regions".into(), Value::from(regions));
        }
        Ok(out)
    }
}

pub fn run(args: ForgeArgs) -> CmdResult {
    let manifest_path = require(&args.common.manifest, "manifest")?;
    let out = require(&args.common.out, "out")?;
    let config: ForgeConfig = load_config(args.common.config.as_deref())?;
    config.validate(args.mode)?;
    let manifest = Manifest::load(manifest_path)?;
    let root = args
        .root
        .clone()
        .unwrap_or_else(|| manifest_path.parent().map(Path::to_path_buf).unwrap_or_default());
    let sources = select_sources(&manifest, args.mode);
    for dir in ["images", "masks"] {
        if dir == "masks" && args.mode == ForgeMode::Srm {
            continue;
        }
        std::fs::create_dir_all(out.join(dir)).map_err(|e| Failure::Data(format!("{}: {e}", out.display())))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.common.workers)
        .build()
        .map_err(|e| usage(format!("cannot start {} workers: {e}", args.common.workers)))?;
    let job = Job {
        mode: args.mode,
        config: &config,
        root: &root,
        out,
        seed: args.common.seed,
        sources: &sources,
    };
    let outcomes: Vec<forgekit::Result<SampleRecord>> =
        pool.install(|| (0..sources.len()).into_par_iter().map(|i| job.one(i)).collect());

    let mut records = Vec::with_capacity(outcomes.len());
    let mut skipped = 0usize;
    for (source, outcome) in sources.iter().zip(outcomes) {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => {
                skipped += 1;
                log::warn!("skipping '{}': {e}", source.id);
            }
        }
    }
    let mut metadata = std::collections::BTreeMap::new();
    metadata.insert("generator".to_string(), Value::from(mode_name(args.mode)));
    let generated = Manifest::new(records, metadata)?;
    generated.save(out.join("manifest.jsonl"))?;

    #[derive(Serialize)]
    struct Recorded<'a> {
        mode: &'a str,
        written: usize,
        skipped: usize,
        parameters: &'a ForgeConfig,
    }
    let recorded = Recorded {
        mode: mode_name(args.mode),
        written: generated.len(),
        skipped,
        parameters: &config,
    };
    write_run_metadata(&out.join("run.json"), "forge", args.common.seed, &[manifest_path], &recorded)?;
    println!("{}: wrote {} samples, skipped {skipped}", mode_name(args.mode), generated.len());
    if skipped > 0 {
        return Err(Failure::Data(format!("{skipped} samples were skipped")));
    }
    Ok(())
}
