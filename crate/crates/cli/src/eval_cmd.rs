//! `eval`: join a score file with manifest labels and write the report.

use std::path::PathBuf;

use forgekit::corpus::{Manifest, Split};
use forgekit::metrics::{curves_csv, evaluate, grouped_eval, roc_svg, LabeledScores, DEFAULT_FPR_TARGETS};
use forgekit::scores::ScoreSet;
use serde::Serialize;

use crate::run::{require, usage, write, write_run_metadata, CmdResult};
use crate::Common;

#[derive(clap::Args)]
pub struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Score CSV with header `id,score`.
    #[arg(long)]
    scores: PathBuf,
    /// Comma-separated FPR budgets.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_FPR_TARGETS.to_vec())]
    fpr_targets: Vec<f64>,
    /// Add per-group (seen/unseen) curves.
    #[arg(long)]
    grouped: bool,
    /// Evaluate only this split.
    #[arg(long)]
    split: Option<String>,
}

pub fn run(args: EvalArgs) -> CmdResult {
    let manifest_path = require(&args.common.manifest, "manifest")?;
    let out = require(&args.common.out, "out")?;
    if let Some(t) = args.fpr_targets.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(usage(format!("FPR target {t} outside [0, 1]")));
    }
    let split: Option<Split> = args.split.as_deref().map(str::parse).transpose()?;
    let manifest = Manifest::load(manifest_path)?;
    let scores = ScoreSet::load(&args.scores)?;
    let labeled = LabeledScores::join(&scores, &manifest, split)?;
    let report = if args.grouped {
        grouped_eval(&labeled, &args.fpr_targets)?
    } else {
        evaluate(&labeled, &args.fpr_targets)?
    };

    write(&out.join("report.json"), serde_json::to_string_pretty(&report).expect("report serializes") + "\n")?;
    write(&out.join("roc.csv"), curves_csv(&report))?;
    let mut curves = vec![("overall", &report.curve)];
    curves.extend(report.per_group.iter().map(|(name, g)| (name.as_str(), &g.curve)));
    write(&out.join("roc.svg"), roc_svg(&curves))?;

    #[derive(Serialize)]
    struct Recorded<'a> {
        fpr_targets: &'a [f64],
        grouped: bool,
        split: Option<&'a str>,
    }
    let recorded = Recorded {
        fpr_targets: &args.fpr_targets,
        grouped: args.grouped,
        split: args.split.as_deref(),
    };
    write_run_metadata(&out.join("run.json"), "eval", args.common.seed, &[manifest_path, &args.scores], &recorded)?;

    println!("samples  {} real / {} fake", report.real, report.fake);
    println!("AUC      {:.6}", report.auc);
    for t in &report.tpr_at {
        println!("TPR@FPR={:<8} {:.6}  (interpolated {:.6})", t.fpr, t.tpr, t.tpr_interpolated);
    }
    for (name, g) in &report.per_group {
        println!("[{name}] AUC {:.6} ({} fake)", g.auc, g.fake);
    }
    Ok(())
}
