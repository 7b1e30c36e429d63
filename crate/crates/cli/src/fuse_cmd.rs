//! `fuse`: mean, flip-TTA, PSO weight fitting and weighted application.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use forgekit::corpus::Manifest;
use forgekit::fusion::{
    flip_tta_fuse, mean_fuse, pso_fit, refine_weights, weighted_fuse, EnsembleWeights, PsoConfig, ScoreMatrix,
};
use forgekit::metrics::Truth;
use forgekit::scores::ScoreSet;
use forgekit::SeedContext;
use serde::Serialize;

use crate::run::{load_config, require, sidecar_metadata_path, usage, write, write_run_metadata, CmdResult};
use crate::Common;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FuseMode {
    Mean,
    FlipTta,
    PsoFit,
    Apply,
}

#[derive(clap::Args)]
pub struct FuseArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    mode: FuseMode,
    /// Per-model score CSVs (repeat the flag). For flip-tta: original, then flipped.
    #[arg(long = "scores", required = true)]
    scores: Vec<PathBuf>,
    /// Weights JSON: read by `apply`.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// After PSO, hill-climb the weights with this step.
    #[arg(long)]
    refine_step: Option<f64>,
}

/// File stems, made unique with a numeric suffix.
fn model_names(paths: &[PathBuf]) -> Vec<String> {
    let mut seen = HashSet::new();
    paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| format!("model{i}"));
            let mut name = stem.clone();
            let mut k = 2;
            while !seen.insert(name.clone()) {
                name = format!("{stem}_{k}");
                k += 1;
            }
            name
        })
        .collect()
}

fn matrix(paths: &[PathBuf]) -> CmdResult<ScoreMatrix> {
    let sets = model_names(paths)
        .into_iter()
        .zip(paths)
        .map(|(name, p)| ScoreSet::load(p).map(|s| (name, s)))
        .collect::<forgekit::Result<Vec<_>>>()?;
    Ok(ScoreMatrix::from_score_sets(&sets)?)
}

fn truth_map(manifest: &Manifest) -> HashMap<String, Truth> {
    manifest
        .records()
        .iter()
        .map(|r| (r.id.clone(), if r.label.is_fake() { Truth::Fake } else { Truth::Real }))
        .collect()
}

pub fn run(args: FuseArgs) -> CmdResult {
    let out = require(&args.common.out, "out")?;
    let inputs: Vec<&Path> = args.scores.iter().map(PathBuf::as_path).collect();

    #[derive(Serialize)]
    struct Recorded<'a> {
        mode: FuseMode,
        models: Vec<String>,
        pso: Option<&'a PsoConfig>,
        refine_step: Option<f64>,
        fit_auc: Option<f64>,
    }
    let mut recorded = Recorded {
        mode: args.mode,
        models: model_names(&args.scores),
        pso: None,
        refine_step: args.refine_step,
        fit_auc: None,
    };
    let pso_config: PsoConfig;

    match args.mode {
        FuseMode::Mean => {
            let fused = mean_fuse(&matrix(&args.scores)?)?;
            fused.save(out)?;
        }
        FuseMode::FlipTta => {
            let [orig, flipped] = args.scores.as_slice() else {
                return Err(usage("flip-tta takes exactly two --scores files (original, flipped)"));
            };
            flip_tta_fuse(&ScoreSet::load(orig)?, &ScoreSet::load(flipped)?)?.save(out)?;
        }
        FuseMode::Apply => {
            let weights_path = require(&args.weights, "weights")?;
            let m = matrix(&args.scores)?;
            let w = EnsembleWeights::load(weights_path, m.models())?;
            weighted_fuse(&m, &w)?.save(out)?;
        }
        FuseMode::PsoFit => {
            let manifest_path = require(&args.common.manifest, "manifest")?;
            let m = matrix(&args.scores)?;
            let labels = truth_map(&Manifest::load(manifest_path)?);
            let mut config: PsoConfig = load_config(args.common.config.as_deref())?;
            config.seed = SeedContext::new(args.common.seed, "pso");
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(args.common.workers)
                .build()
                .map_err(|e| usage(e.to_string()))?;
            let fit = pool.install(|| pso_fit(&m, &labels, &config))?;
            let (weights, auc) = match args.refine_step {
                Some(step) => {
                    let r = refine_weights(&m, &labels, &fit.weights, step)?;
                    log::info!("refinement accepted {} moves", r.moves);
                    (r.weights, r.fitness)
                }
                None => (fit.weights, fit.fitness),
            };
            write(out, weights.to_json(m.models())?)?;
            println!("fit AUC {auc:.6} after {} iterations", fit.trace.len() - 1);
            recorded.fit_auc = Some(auc);
            pso_config = config;
            recorded.pso = Some(&pso_config);
        }
    }
    let seed = args.common.seed;
    write_run_metadata(&sidecar_metadata_path(out), "fuse", seed, &inputs, &recorded)
}
