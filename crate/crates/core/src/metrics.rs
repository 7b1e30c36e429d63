//! Detector evaluation: confusion counts, TPR/FPR, ROC curves, AUC, TPR at
//! low FPR, seen/unseen grouped evaluation and the weighted final score.
//!
//! A sample is predicted forged when `score >= threshold`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{Manifest, Split};
use crate::error::{Error, Result};
use crate::scores::ScoreSet;

/// FPR budgets reported by default.
pub const DEFAULT_FPR_TARGETS: [f64; 3] = [1e-2, 5e-3, 1e-3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    Real,
    Fake,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub id: String,
    pub score: f64,
    pub truth: Truth,
    pub group: Option<String>,
}

/// Scores with ground truth. Scores are finite and in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledScores {
    entries: Vec<ScoredSample>,
}

impl LabeledScores {
    pub fn new(entries: Vec<ScoredSample>) -> Result<Self> {
        if let Some(e) = entries.iter().find(|e| !(0.0..=1.0).contains(&e.score)) {
            return Err(Error::Validation(format!("score {} for '{}' is outside [0, 1]", e.score, e.id)));
        }
        Ok(Self { entries })
    }

    /// Anonymous entries (`s0, s1, ...`) without groups.
    pub fn from_slices(scores: &[f64], is_fake: &[bool]) -> Result<Self> {
        if scores.len() != is_fake.len() {
            return Err(Error::Shape(format!("{} scores but {} labels", scores.len(), is_fake.len())));
        }
        Self::new(
            scores
                .iter()
                .zip(is_fake)
                .enumerate()
                .map(|(i, (&score, &fake))| ScoredSample {
                    id: format!("s{i}"),
                    score,
                    truth: if fake { Truth::Fake } else { Truth::Real },
                    group: None,
                })
                .collect(),
        )
    }

    /// Joins a score file with the records of a manifest (optionally one
    /// split). Every selected record needs a score and every score id must
    /// belong to the manifest. Labels 1 and 2 count as fake; the record's
    /// seen/unseen group is carried over.
    pub fn join(scores: &ScoreSet, manifest: &Manifest, split: Option<Split>) -> Result<Self> {
        let unknown: Vec<&str> = scores.ids().filter(|id| manifest.get(id).is_none()).collect();
        if !unknown.is_empty() {
            return Err(Error::Validation(format!(
                "{} score ids are not in the manifest: {}",
                unknown.len(),
                first_ten(&unknown)
            )));
        }
        let selected: Vec<_> = manifest
            .records()
            .iter()
            .filter(|r| split.is_none_or(|s| r.split == s))
            .collect();
        let missing: Vec<&str> = selected
            .iter()
            .filter(|r| !scores.contains(&r.id))
            .map(|r| r.id.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Validation(format!(
                "{} records have no score: {}",
                missing.len(),
                first_ten(&missing)
            )));
        }
        Self::new(
            selected
                .into_iter()
                .map(|r| ScoredSample {
                    id: r.id.clone(),
                    score: scores.get(&r.id).expect("checked above"),
                    truth: if r.label.is_fake() { Truth::Fake } else { Truth::Real },
                    group: r.group.name().map(str::to_owned),
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[ScoredSample] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn real_count(&self) -> usize {
        self.entries.iter().filter(|e| e.truth == Truth::Real).count()
    }

    pub fn fake_count(&self) -> usize {
        self.len() - self.real_count()
    }

    fn require_both_classes(&self) -> Result<()> {
        if self.real_count() == 0 || self.fake_count() == 0 {
            return Err(Error::Validation(format!(
                "ROC needs both classes, got {} real and {} fake",
                self.real_count(),
                self.fake_count()
            )));
        }
        Ok(())
    }

    fn columns(&self) -> (Vec<f64>, Vec<bool>) {
        self.entries.iter().map(|e| (e.score, e.truth == Truth::Fake)).unzip()
    }
}

fn first_ten(ids: &[&str]) -> String {
    let head = ids.iter().take(10).copied().collect::<Vec<_>>().join(", ");
    if ids.len() > 10 { format!("{head}, ...") } else { head }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

pub fn confusion_at(s: &LabeledScores, threshold: f64) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for e in &s.entries {
        match (e.truth, e.score >= threshold) {
            (Truth::Fake, true) => c.tp += 1,
            (Truth::Fake, false) => c.fn_ += 1,
            (Truth::Real, true) => c.fp += 1,
            (Truth::Real, false) => c.tn += 1,
        }
    }
    c
}

/// `TP / (TP + FN)`.
pub fn tpr(c: &ConfusionCounts) -> Result<f64> {
    match c.tp + c.fn_ {
        0 => Err(Error::UndefinedRate("TPR has no fake samples")),
        d => Ok(c.tp as f64 / d as f64),
    }
}

/// `FP / (FP + TN)`.
pub fn fpr(c: &ConfusionCounts) -> Result<f64> {
    match c.fp + c.tn {
        0 => Err(Error::UndefinedRate("FPR has no real samples")),
        d => Ok(c.fp as f64 / d as f64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Lowest score predicted forged at this point; `None` for the origin.
    pub threshold: Option<f64>,
}

/// Operating points from `(0, 0)` to `(1, 1)`, both coordinates
/// non-decreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

/// One point per distinct score, visited in descending order. Tied real
/// and fake scores move both coordinates at once, giving a diagonal step.
pub fn roc_curve(s: &LabeledScores) -> Result<RocCurve> {
    s.require_both_classes()?;
    let (n_real, n_fake) = (s.real_count() as f64, s.fake_count() as f64);
    let mut sorted: Vec<(f64, bool)> = s.entries.iter().map(|e| (e.score, e.truth == Truth::Fake)).collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0, threshold: None }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let score = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == score {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n_real,
            tpr: tp as f64 / n_fake,
            threshold: Some(score),
        });
    }
    Ok(RocCurve { points })
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

/// Probability that a random fake outscores a random real, ties counting
/// one half. Computed from the rank sum of the fakes with mid-ranks for
/// ties, in integer arithmetic (ranks are doubled to stay integral).
pub fn pairwise_auc(scores: &[f64], is_fake: &[bool]) -> Result<f64> {
    if scores.len() != is_fake.len() {
        return Err(Error::Shape(format!("{} scores but {} labels", scores.len(), is_fake.len())));
    }
    let n_fake = is_fake.iter().filter(|&&f| f).count() as u128;
    let n_real = scores.len() as u128 - n_fake;
    if n_fake == 0 || n_real == 0 {
        return Err(Error::Validation(format!("AUC needs both classes, got {n_real} real and {n_fake} fake")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j share the mid-rank (i + 1 + j) / 2.
        let fakes_in_tie = order[i..j].iter().filter(|&&k| is_fake[k]).count() as u128;
        twice_rank_sum += fakes_in_tie * (i as u128 + 1 + j as u128);
        i = j;
    }
    let twice_u = twice_rank_sum - n_fake * (n_fake + 1);
    Ok(twice_u as f64 / (2 * n_fake * n_real) as f64)
}

pub fn auc_pairwise(s: &LabeledScores) -> Result<f64> {
    let (scores, fake) = s.columns();
    pairwise_auc(&scores, &fake)
}

/// Highest TPR among achieved points with `fpr <= target`.
pub fn tpr_at_fpr(curve: &RocCurve, target: f64) -> f64 {
    curve
        .points
        .iter()
        .filter(|p| p.fpr <= target)
        .map(|p| p.tpr)
        .fold(0.0, f64::max)
}

/// TPR read off the piecewise-linear curve at exactly `target`.
pub fn tpr_at_fpr_interpolated(curve: &RocCurve, target: f64) -> f64 {
    let conservative = tpr_at_fpr(curve, target);
    let Some(j) = curve.points.iter().position(|p| p.fpr > target) else {
        return conservative;
    };
    let (a, b) = (&curve.points[j - 1], &curve.points[j]);
    let t = (target - a.fpr) / (b.fpr - a.fpr);
    (a.tpr + t * (b.tpr - a.tpr)).max(conservative)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TprAt {
    pub fpr: f64,
    pub tpr: f64,
    pub tpr_interpolated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub real: usize,
    pub fake: usize,
    pub auc: f64,
    pub tpr_at: Vec<TprAt>,
    pub curve: RocCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub real: usize,
    pub fake: usize,
    pub auc: f64,
    pub tpr_at: Vec<TprAt>,
    pub per_group: BTreeMap<String, GroupReport>,
    pub curve: RocCurve,
}

fn group_report(s: &LabeledScores, targets: &[f64]) -> Result<GroupReport> {
    for &t in targets {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Parameter(format!("FPR target {t} outside [0, 1]")));
        }
    }
    let curve = roc_curve(s)?;
    let tpr_at = targets
        .iter()
        .map(|&t| TprAt {
            fpr: t,
            tpr: tpr_at_fpr(&curve, t),
            tpr_interpolated: tpr_at_fpr_interpolated(&curve, t),
        })
        .collect();
    Ok(GroupReport {
        real: s.real_count(),
        fake: s.fake_count(),
        auc: auc(&curve),
        tpr_at,
        curve,
    })
}

/// Overall metrics without a group breakdown.
pub fn evaluate(s: &LabeledScores, targets: &[f64]) -> Result<EvalReport> {
    let g = group_report(s, targets)?;
    Ok(EvalReport {
        real: g.real,
        fake: g.fake,
        auc: g.auc,
        tpr_at: g.tpr_at,
        per_group: BTreeMap::new(),
        curve: g.curve,
    })
}

/// Overall metrics plus one report per fake group, each computed over all
/// reals and that group's fakes. Fakes without a group count only toward
/// the overall figures.
pub fn grouped_eval(s: &LabeledScores, targets: &[f64]) -> Result<EvalReport> {
    let mut report = evaluate(s, targets)?;
    let groups: BTreeSet<&str> = s
        .entries
        .iter()
        .filter(|e| e.truth == Truth::Fake)
        .filter_map(|e| e.group.as_deref())
        .collect();
    let ungrouped = s.entries.iter().filter(|e| e.truth == Truth::Fake && e.group.is_none()).count();
    if ungrouped > 0 {
        log::warn!("{ungrouped} fake samples have no group and only count toward overall metrics");
    }
    for group in groups {
        let subset = LabeledScores {
            entries: s
                .entries
                .iter()
                .filter(|e| e.truth == Truth::Real || e.group.as_deref() == Some(group))
                .cloned()
                .collect(),
        };
        report.per_group.insert(group.to_owned(), group_report(&subset, targets)?);
    }
    for g in s.entries.iter().filter(|e| e.truth == Truth::Real).filter_map(|e| e.group.as_deref()) {
        if !report.per_group.contains_key(g) {
            log::warn!("group '{g}' has no fake samples and is omitted");
            break;
        }
    }
    Ok(report)
}

/// `0.4 * auc_public + 0.4 * auc_hidden + 0.2 * report_score`, evaluated
/// with integer weights and one final division.
pub fn challenge_score(auc_public: f64, auc_hidden: f64, report_score: f64) -> Result<f64> {
    for (name, v) in [("auc_public", auc_public), ("auc_hidden", auc_hidden), ("report_score", report_score)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Validation(format!("{name} = {v} outside [0, 1]")));
        }
    }
    Ok((4.0 * auc_public + 4.0 * auc_hidden + 2.0 * report_score) / 10.0)
}

/// `curve,fpr,tpr,threshold` rows for the overall curve and each group.
pub fn curves_csv(report: &EvalReport) -> String {
    let mut out = String::from("curve,fpr,tpr,threshold\n");
    let mut dump = |name: &str, curve: &RocCurve| {
        for p in &curve.points {
            let threshold = p.threshold.map(|t| t.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{name},{},{},{threshold}", p.fpr, p.tpr);
        }
    };
    dump("overall", &report.curve);
    for (name, g) in &report.per_group {
        dump(name, &g.curve);
    }
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Standalone SVG with one polyline per named curve and a chance diagonal.
pub fn roc_svg(curves: &[(&str, &RocCurve)]) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 50.0;
    let px = |fpr: f64| PAD + fpr * SIZE;
    let py = |tpr: f64| PAD + (1.0 - tpr) * SIZE;
    let total = SIZE + 2.0 * PAD;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total}\" height=\"{total}\" viewBox=\"0 0 {total} {total}\">\n"
    );
    let _ = writeln!(svg, "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\" stroke=\"black\"/>");
    let _ = writeln!(
        svg,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>",
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        let _ = writeln!(svg, "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{v:.1}</text>", px(v), py(0.0) + 16.0);
        let _ = writeln!(svg, "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{v:.1}</text>", px(0.0) - 6.0, py(v) + 4.0);
    }
    let _ = writeln!(svg, "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">FPR</text>", px(0.5), total - 10.0);
    let _ = writeln!(
        svg,
        "<text x=\"14\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">TPR</text>",
        py(0.5),
        py(0.5)
    );
    for (k, (name, curve)) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = curve.points.iter().map(|p| format!("{:.3},{:.3}", px(p.fpr), py(p.tpr))).collect();
        let _ = writeln!(svg, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>", pts.join(" "));
        let y = PAD + 20.0 + 16.0 * k as f64;
        let _ = writeln!(svg, "<text x=\"{}\" y=\"{y}\" font-size=\"12\" fill=\"{color}\">{}</text>", px(0.55), xml_escape(name));
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
