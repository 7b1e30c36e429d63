//! `corpus`: manifest statistics and manifest-to-manifest operations.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Subcommand;
use forgekit::corpus::{
    balance_repeat, hard_select, mark_aim_share, stats, BalanceFactor, Manifest, Split, DEFAULT_HARD_THRESHOLD,
};
use forgekit::scores::ScoreSet;
use forgekit::SeedContext;
use serde::Serialize;

use crate::run::{require, sidecar_metadata_path, usage, write, write_run_metadata, CmdResult};
use crate::Common;

#[derive(clap::Args)]
pub struct CorpusArgs {
    #[command(subcommand)]
    op: CorpusOp,
}

#[derive(Subcommand)]
enum CorpusOp {
    /// Counts by split, label, forgery type and group.
    Stats {
        #[command(flatten)]
        common: Common,
    },
    /// Repeat real records to offset class imbalance.
    Balance {
        #[command(flatten)]
        common: Common,
        /// Positive integer or `auto` (= round(fake / real)).
        #[arg(long, default_value = "auto")]
        factor: String,
        /// Only count and repeat records of this split.
        #[arg(long)]
        split: Option<String>,
    },
    /// Keep fake records a baseline detector finds hard.
    HardSelect {
        #[command(flatten)]
        common: Common,
        /// Baseline score CSV.
        #[arg(long)]
        scores: PathBuf,
        /// Keep fakes with score <= threshold.
        #[arg(long, default_value_t = DEFAULT_HARD_THRESHOLD)]
        threshold: f64,
        /// Per-type override, `type=threshold` (repeatable).
        #[arg(long = "type-threshold", value_parser = parse_type_threshold)]
        type_threshold: Vec<(String, f64)>,
    },
    /// Tag a fraction of real train records for AIM generation.
    MarkAim {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.8)]
        fraction: f64,
    },
}

fn parse_type_threshold(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected type=threshold")?;
    let t: f64 = value.parse().map_err(|_| format!("'{value}' is not a number"))?;
    Ok((name.to_owned(), t))
}

#[derive(Serialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
enum Recorded {
    Stats,
    Balance { factor: usize, split: Option<String> },
    HardSelect { threshold: f64, per_type: BTreeMap<String, f64>, selected: usize },
    MarkAim { fraction: f64, tagged: usize },
}

pub fn run(args: CorpusArgs) -> CmdResult {
    match args.op {
        CorpusOp::Stats { common } => {
            let manifest_path = require(&common.manifest, "manifest")?;
            let s = stats(&Manifest::load(manifest_path)?);
            print!("{}", s.table());
            if let Some(out) = &common.out {
                write(out, s.to_csv())?;
                write_run_metadata(&sidecar_metadata_path(out), "corpus", common.seed, &[manifest_path], &Recorded::Stats)?;
            }
            Ok(())
        }
        CorpusOp::Balance { common, factor, split } => {
            let manifest_path = require(&common.manifest, "manifest")?;
            let out = require(&common.out, "out")?;
            let factor: BalanceFactor = factor.parse()?;
            let scope: Option<Split> = split.as_deref().map(str::parse).transpose()?;
            let (balanced, k) = balance_repeat(&Manifest::load(manifest_path)?, factor, scope)?;
            log::info!("balance factor {k}");
            println!("balance factor {k}: {} records", balanced.len());
            balanced.save(out)?;
            let recorded = Recorded::Balance { factor: k, split };
            write_run_metadata(&sidecar_metadata_path(out), "corpus", common.seed, &[manifest_path], &recorded)
        }
        CorpusOp::HardSelect { common, scores, threshold, type_threshold } => {
            let manifest_path = require(&common.manifest, "manifest")?;
            let out = require(&common.out, "out")?;
            if !threshold.is_finite() {
                return Err(usage("threshold must be finite"));
            }
            let per_type: BTreeMap<String, f64> = type_threshold.into_iter().collect();
            let baseline = ScoreSet::load(&scores)?;
            let selected = hard_select(&Manifest::load(manifest_path)?, &baseline, threshold, &per_type)?;
            log::info!("hard-select threshold {threshold}");
            println!("hard-select threshold {threshold}: {} records", selected.len());
            selected.save(out)?;
            let recorded = Recorded::HardSelect { threshold, per_type, selected: selected.len() };
            write_run_metadata(&sidecar_metadata_path(out), "corpus", common.seed, &[manifest_path, &scores], &recorded)
        }
        CorpusOp::MarkAim { common, fraction } => {
            let manifest_path = require(&common.manifest, "manifest")?;
            let out = require(&common.out, "out")?;
            let seed = SeedContext::new(common.seed, "corpus");
            let marked = mark_aim_share(&Manifest::load(manifest_path)?, fraction, &seed)?;
            let tagged = marked.records().iter().filter(|r| r.aim).count();
            println!("tagged {tagged} records for AIM");
            marked.save(out)?;
            let recorded = Recorded::MarkAim { fraction, tagged };
            write_run_metadata(&sidecar_metadata_path(out), "corpus", common.seed, &[manifest_path], &recorded)
        }
    }
}
