//! Corpus manifests: labels, splits, forgery types and seen/unseen groups,
//! plus the manifest-to-manifest operations used to prepare training data.
//!
//! A manifest is a JSONL file with one [`SampleRecord`] per line. An
//! optional first line of the form `{"metadata": {...}}` carries free-form
//! metadata.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::scores::ScoreSet;
use crate::seed::SeedContext;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    Real = 0,
    Fake = 1,
    AimFake = 2,
}

impl Label {
    pub fn is_fake(self) -> bool {
        self != Label::Real
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l as u8
    }
}

impl TryFrom<u8> for Label {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Label::Real),
            1 => Ok(Label::Fake),
            2 => Ok(Label::AimFake),
            _ => Err(format!("label {v} is not 0, 1 or 2")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    /// Public test set.
    Test,
    /// Hidden test set scored only in the final phase.
    Hidden,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Val, Split::Test, Split::Hidden];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Hidden => "hidden",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|sp| sp.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown split '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub enum Group {
    #[serde(rename = "seen")]
    Seen,
    #[serde(rename = "unseen")]
    Unseen,
    #[default]
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl Group {
    pub fn name(self) -> Option<&'static str> {
        match self {
            Group::Seen => Some("seen"),
            Group::Unseen => Some("unseen"),
            Group::NotApplicable => None,
        }
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub path: String,
    pub label: Label,
    pub forgery_type: String,
    pub split: Split,
    #[serde(default)]
    pub group: Group,
    /// Tagged for AIM generation.
    #[serde(default, skip_serializing_if = "is_false")]
    pub aim: bool,
    /// Extra fields are kept and written back in key order.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl SampleRecord {
    pub fn new(id: impl Into<String>, path: impl Into<String>, label: Label, forgery_type: impl Into<String>, split: Split) -> Self {
        Self {
            id: id.into(),
            path: path.into(),
            label,
            forgery_type: forgery_type.into(),
            split,
            group: Group::NotApplicable,
            aim: false,
            extra: BTreeMap::new(),
        }
    }

    pub fn with_group(mut self, group: Group) -> Self {
        self.group = group;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Validation("record with empty id".into()));
        }
        if (self.label == Label::Real) != (self.forgery_type == "real") {
            return Err(Error::Validation(format!(
                "'{}': label {} does not agree with forgery_type '{}'",
                self.id, self.label as u8, self.forgery_type
            )));
        }
        if self.label == Label::AimFake && self.split != Split::Train {
            return Err(Error::Validation(format!("'{}': label 2 outside the train split", self.id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    records: Vec<SampleRecord>,
    pub metadata: BTreeMap<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct MetadataLine {
    metadata: BTreeMap<String, Value>,
}

impl Manifest {
    pub fn new(records: Vec<SampleRecord>, metadata: BTreeMap<String, Value>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            r.validate()?;
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Validation(format!("duplicate id '{}'", r.id)));
            }
        }
        Ok(Self { records, metadata })
    }

    pub fn from_records(records: Vec<SampleRecord>) -> Result<Self> {
        Self::new(records, BTreeMap::new())
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<SampleRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&SampleRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Same metadata, records filtered by `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&SampleRecord) -> bool) -> Manifest {
        Manifest {
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
            metadata: self.metadata.clone(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        let mut metadata = BTreeMap::new();
        let mut ids: HashMap<String, usize> = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            if line.trim().is_empty() {
                continue;
            }
            if records.is_empty() && metadata.is_empty() {
                let value: Value =
                    serde_json::from_str(line).map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
                if value.as_object().is_some_and(|o| o.len() == 1 && o.contains_key("metadata")) {
                    let m: MetadataLine = serde_json::from_value(value)
                        .map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
                    metadata = m.metadata;
                    continue;
                }
            }
            let record: SampleRecord =
                serde_json::from_str(line).map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
            record
                .validate()
                .map_err(|e| Error::Validation(format!("line {line_no}: {e}")))?;
            if let Some(first) = ids.insert(record.id.clone(), line_no) {
                return Err(Error::Validation(format!(
                    "line {line_no}: id '{}' already used on line {first}",
                    record.id
                )));
            }
            records.push(record);
        }
        Ok(Self { records, metadata })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        if !self.metadata.is_empty() {
            let line = MetadataLine { metadata: self.metadata.clone() };
            out.push_str(&serde_json::to_string(&line).expect("metadata serializes"));
            out.push('\n');
        }
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    Manifest::load(path)
}

pub fn save_manifest(m: &Manifest, path: impl AsRef<Path>) -> Result<()> {
    m.save(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BalanceFactor {
    Fixed(usize),
    /// `round(fake / real)`, at least 1.
    Auto,
}

impl std::str::FromStr for BalanceFactor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(BalanceFactor::Auto);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(BalanceFactor::Fixed(k)),
            _ => Err(Error::Parameter(format!("balance factor '{s}' is neither 'auto' nor a positive integer"))),
        }
    }
}

/// Repeats every real record in `scope` (all splits when `None`) so it
/// appears `factor` times. Copies follow their original and carry ids
/// `id#1 .. id#(factor-1)`. Returns the new manifest and the factor used.
pub fn balance_repeat(m: &Manifest, factor: BalanceFactor, scope: Option<Split>) -> Result<(Manifest, usize)> {
    let in_scope = |r: &SampleRecord| scope.is_none_or(|s| r.split == s);
    let real = m.records.iter().filter(|r| in_scope(r) && r.label == Label::Real).count();
    let fake = m.records.iter().filter(|r| in_scope(r) && r.label.is_fake()).count();
    if real == 0 {
        return Err(Error::Validation("no real records to repeat".into()));
    }
    let k = match factor {
        BalanceFactor::Fixed(0) => return Err(Error::Parameter("balance factor must be at least 1".into())),
        BalanceFactor::Fixed(k) => k,
        BalanceFactor::Auto => ((fake as f64 / real as f64).round() as usize).max(1),
    };
    let mut records = Vec::with_capacity(m.len() + real * (k - 1));
    for r in &m.records {
        records.push(r.clone());
        if in_scope(r) && r.label == Label::Real {
            for copy in 1..k {
                let mut dup = r.clone();
                dup.id = format!("{}#{copy}", r.id);
                records.push(dup);
            }
        }
    }
    Ok((Manifest::new(records, m.metadata.clone())?, k))
}

pub const DEFAULT_HARD_THRESHOLD: f64 = 0.98;

/// Fake records whose baseline score is at most the threshold for their
/// forgery type (`per_type` overrides, else `threshold`).
pub fn hard_select(m: &Manifest, baseline: &ScoreSet, threshold: f64, per_type: &BTreeMap<String, f64>) -> Result<Manifest> {
    let missing: Vec<&str> = m
        .records
        .iter()
        .filter(|r| r.label.is_fake() && !baseline.contains(&r.id))
        .map(|r| r.id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Validation(format!(
            "{} fake records have no baseline score: {}{}",
            missing.len(),
            missing.iter().take(10).copied().collect::<Vec<_>>().join(", "),
            if missing.len() > 10 { ", ..." } else { "" }
        )));
    }
    Ok(m.filtered(|r| {
        let t = per_type.get(&r.forgery_type).copied().unwrap_or(threshold);
        r.label.is_fake() && baseline.get(&r.id).is_some_and(|s| s <= t)
    }))
}

/// Tags exactly `floor(fraction * n)` of the `n` real train records for AIM
/// generation, chosen by a seeded shuffle. Existing tags are cleared.
pub fn mark_aim_share(m: &Manifest, fraction: f64, seed: &SeedContext) -> Result<Manifest> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Parameter(format!("AIM fraction {fraction} outside [0, 1]")));
    }
    let mut candidates: Vec<usize> = m
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.label == Label::Real && r.split == Split::Train)
        .map(|(i, _)| i)
        .collect();
    let count = (fraction * candidates.len() as f64).floor() as usize;
    let mut rng = seed.child("aim_share").rng();
    candidates.shuffle(&mut rng);
    let mut out = m.clone();
    for r in &mut out.records {
        r.aim = false;
    }
    for &i in &candidates[..count] {
        out.records[i].aim = true;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StatsKey {
    pub split: Split,
    pub label: Label,
    pub forgery_type: String,
    pub group: Group,
}

/// Record counts by split, label, forgery type and group.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Stats {
    pub cells: BTreeMap<StatsKey, usize>,
}

impl Stats {
    pub fn total(&self) -> usize {
        self.cells.values().sum()
    }

    pub fn count(&self, split: Split, label: Label) -> usize {
        self.cells
            .iter()
            .filter(|(k, _)| k.split == split && k.label == label)
            .map(|(_, v)| v)
            .sum()
    }

    /// Real count and forged (label 1 or 2) count for a split.
    pub fn real_and_forged(&self, split: Split) -> (usize, usize) {
        let real = self.count(split, Label::Real);
        (real, self.count(split, Label::Fake) + self.count(split, Label::AimFake))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("split,label,forgery_type,group,count\n");
        for (k, v) in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                k.split.name(),
                k.label as u8,
                k.forgery_type,
                k.group.name().unwrap_or("n/a"),
                v
            );
        }
        out
    }

    /// Per-split real/forged summary followed by the full breakdown.
    pub fn table(&self) -> String {
        let mut out = format!("{:<8} {:>12} {:>12}\n", "split", "real", "forged");
        for split in Split::ALL {
            let (real, forged) = self.real_and_forged(split);
            let _ = writeln!(out, "{:<8} {:>12} {:>12}", split.name(), real, forged);
        }
        if !self.cells.is_empty() {
            let _ = writeln!(out, "\n{:<8} {:>5} {:<24} {:<7} {:>12}", "split", "label", "forgery_type", "group", "count");
            for (k, v) in &self.cells {
                let _ = writeln!(
                    out,
                    "{:<8} {:>5} {:<24} {:<7} {:>12}",
                    k.split.name(),
                    k.label as u8,
                    k.forgery_type,
                    k.group.name().unwrap_or("n/a"),
                    v
                );
            }
        }
        out
    }
}

pub fn stats(m: &Manifest) -> Stats {
    let mut cells: BTreeMap<StatsKey, usize> = BTreeMap::new();
    for r in &m.records {
        let key = StatsKey {
            split: r.split,
            label: r.label,
            forgery_type: r.forgery_type.clone(),
            group: r.group,
        };
        *cells.entry(key).or_default() += 1;
    }
    Stats { cells }
}
