//! Multi-model score fusion: plain mean, flip test-time averaging, and
//! weighted fusion with weights searched by particle swarm optimization and
//! then refined by coordinate-wise hill climbing.
//!
//! Weights live on the probability simplex, so every fused score is a
//! convex combination of the model scores for that sample.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{pairwise_auc, Truth};
use crate::scores::ScoreSet;
use crate::seed::SeedContext;

/// `n x m` scores, one row per sample and one column per model.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    ids: Vec<String>,
    models: Vec<String>,
    values: Vec<f64>,
}

impl ScoreMatrix {
    /// Joins per-model score sets by id. All sets must have the same ids;
    /// rows follow the first set's order.
    pub fn from_score_sets(sets: &[(String, ScoreSet)]) -> Result<Self> {
        let Some((_, first)) = sets.first() else {
            return Err(Error::Validation("no score sets to combine".into()));
        };
        for (name, set) in &sets[1..] {
            let diff = first.id_difference(set);
            if !diff.is_empty() {
                return Err(Error::Validation(format!(
                    "model '{name}' differs from '{}' in {} ids: {}",
                    sets[0].0,
                    diff.len(),
                    diff.iter().take(10).cloned().collect::<Vec<_>>().join(", ")
                )));
            }
        }
        let ids: Vec<String> = first.ids().map(str::to_owned).collect();
        let mut values = Vec::with_capacity(ids.len() * sets.len());
        for id in &ids {
            for (_, set) in sets {
                values.push(set.get(id).expect("id sets are equal"));
            }
        }
        Ok(Self {
            ids,
            models: sets.iter().map(|(n, _)| n.clone()).collect(),
            values,
        })
    }

    pub fn new(ids: Vec<String>, models: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != ids.len() * models.len() {
            return Err(Error::Shape(format!(
                "{} values for {} samples x {} models",
                values.len(),
                ids.len(),
                models.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Validation("matrix scores must lie in [0, 1]".into()));
        }
        let mut unique: Vec<&String> = ids.iter().collect();
        unique.sort();
        unique.dedup();
        if unique.len() != ids.len() {
            return Err(Error::Validation("duplicate sample ids".into()));
        }
        Ok(Self { ids, models, values })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn models(&self) -> &[String] {
        &self.models
    }

    pub fn n_samples(&self) -> usize {
        self.ids.len()
    }

    pub fn n_models(&self) -> usize {
        self.models.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.n_models();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn column(&self, k: usize) -> ScoreSet {
        let entries = (0..self.n_samples()).map(|i| (self.ids[i].clone(), self.row(i)[k])).collect();
        ScoreSet::new(entries).expect("matrix ids are unique and scores in range")
    }
}

/// Non-negative weights summing to 1, one per model.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleWeights {
    weights: Vec<f64>,
}

impl EnsembleWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Validation(format!("weights {weights:?} are not non-negative and finite")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(m: usize) -> Self {
        Self { weights: vec![1.0 / m as f64; m] }
    }

    pub fn one_hot(m: usize, k: usize) -> Self {
        let mut weights = vec![0.0; m];
        weights[k] = 1.0;
        Self { weights }
    }

    /// Clamps negatives (and non-finite values) to 0 and renormalizes; an
    /// all-zero vector becomes uniform.
    pub fn project(raw: &[f64]) -> Self {
        let clamped: Vec<f64> = raw.iter().map(|&w| if w.is_finite() && w > 0.0 { w } else { 0.0 }).collect();
        let sum: f64 = clamped.iter().sum();
        if sum == 0.0 || !sum.is_finite() {
            return Self::uniform(raw.len());
        }
        Self { weights: clamped.iter().map(|w| w / sum).collect() }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// JSON object mapping model name to weight.
    pub fn to_json(&self, models: &[String]) -> Result<String> {
        if models.len() != self.len() {
            return Err(Error::Validation(format!("{} model names for {} weights", models.len(), self.len())));
        }
        let map: BTreeMap<&str, f64> = models.iter().map(String::as_str).zip(self.weights.iter().copied()).collect();
        Ok(serde_json::to_string_pretty(&map).expect("weights serialize") + "\n")
    }

    /// Reads a name-to-weight object, ordering weights as `models`.
    pub fn from_json(text: &str, models: &[String]) -> Result<Self> {
        let map: HashMap<String, f64> =
            serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
        if map.len() != models.len() {
            return Err(Error::Validation(format!("{} weights for {} models", map.len(), models.len())));
        }
        let weights = models
            .iter()
            .map(|m| map.get(m).copied().ok_or_else(|| Error::Validation(format!("no weight for model '{m}'"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(weights)
    }

    pub fn load(path: impl AsRef<Path>, models: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, models)
    }
}

fn fused_row(row: &[f64], w: &[f64]) -> f64 {
    let dot: f64 = row.iter().zip(w).map(|(s, w)| s * w).sum();
    let (lo, hi) = row.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    // Rounding can push a convex combination a hair outside its hull.
    dot.clamp(lo, hi)
}

fn fused_scores(matrix: &ScoreMatrix, w: &[f64]) -> Vec<f64> {
    (0..matrix.n_samples()).map(|i| fused_row(matrix.row(i), w)).collect()
}

pub fn weighted_fuse(matrix: &ScoreMatrix, w: &EnsembleWeights) -> Result<ScoreSet> {
    if w.len() != matrix.n_models() {
        return Err(Error::Validation(format!("{} weights for {} models", w.len(), matrix.n_models())));
    }
    let fused = fused_scores(matrix, w.as_slice());
    ScoreSet::new(matrix.ids.iter().cloned().zip(fused).collect())
}

/// Per-sample mean across models, i.e. uniform weights.
pub fn mean_fuse(matrix: &ScoreMatrix) -> Result<ScoreSet> {
    if matrix.n_models() == 0 || matrix.n_samples() == 0 {
        return Err(Error::Validation("cannot fuse an empty score matrix".into()));
    }
    weighted_fuse(matrix, &EnsembleWeights::uniform(matrix.n_models()))
}

/// Per-id mean of the scores with and without horizontal flip. Output
/// follows the order of `orig`.
pub fn flip_tta_fuse(orig: &ScoreSet, flipped: &ScoreSet) -> Result<ScoreSet> {
    let diff = orig.id_difference(flipped);
    if !diff.is_empty() {
        return Err(Error::Validation(format!(
            "flip scores differ in {} ids: {}",
            diff.len(),
            diff.iter().take(10).cloned().collect::<Vec<_>>().join(", ")
        )));
    }
    let entries = orig
        .entries()
        .iter()
        .map(|(id, a)| (id.clone(), (a + flipped.get(id).expect("same ids")) / 2.0))
        .collect();
    ScoreSet::new(entries)
}

/// Ground truth aligned with the matrix rows.
fn truth_column(matrix: &ScoreMatrix, labels: &HashMap<String, Truth>) -> Result<Vec<bool>> {
    let missing: Vec<&str> = matrix.ids.iter().filter(|id| !labels.contains_key(*id)).map(String::as_str).collect();
    if !missing.is_empty() {
        return Err(Error::Validation(format!(
            "{} samples have no label: {}",
            missing.len(),
            missing.iter().take(10).copied().collect::<Vec<_>>().join(", ")
        )));
    }
    let fake: Vec<bool> = matrix.ids.iter().map(|id| labels[id] == Truth::Fake).collect();
    if fake.iter().all(|&f| f) || fake.iter().all(|&f| !f) {
        return Err(Error::Validation("labels cover only one class".into()));
    }
    Ok(fake)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub seed: SeedContext,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            particles: 40,
            iterations: 200,
            inertia: 0.72,
            cognitive: 1.49,
            social: 1.49,
            seed: SeedContext::new(0, "pso"),
        }
    }
}

impl PsoConfig {
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.particles < m + 2 {
            return Err(Error::Parameter(format!("{} particles, need at least {} for {m} models", self.particles, m + 2)));
        }
        if self.iterations == 0 {
            return Err(Error::Parameter("iterations must be at least 1".into()));
        }
        if ![self.inertia, self.cognitive, self.social].iter().all(|v| v.is_finite()) {
            return Err(Error::Parameter("PSO coefficients must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoResult {
    pub weights: EnsembleWeights,
    /// Fit-set pairwise AUC of `weights`.
    pub fitness: f64,
    /// Global-best fitness after initialization and after each iteration.
    pub trace: Vec<f64>,
}

/// Swarm search over the weight simplex maximizing fit-set AUC. The swarm
/// starts with every simplex vertex and the uniform point, so the result
/// is never worse than the best single model or the plain mean. Stops early
/// once AUC reaches 1.
pub fn pso_fit(matrix: &ScoreMatrix, labels: &HashMap<String, Truth>, config: &PsoConfig) -> Result<PsoResult> {
    let m = matrix.n_models();
    if m < 2 {
        return Err(Error::Validation("PSO needs at least two models".into()));
    }
    config.validate(m)?;
    let fake = truth_column(matrix, labels)?;
    let fitness = |w: &[f64]| pairwise_auc(&fused_scores(matrix, w), &fake).expect("both classes present");

    let mut init_rng = config.seed.child("pso/init").rng();
    let mut positions: Vec<Vec<f64>> = (0..m).map(|k| EnsembleWeights::one_hot(m, k).weights).collect();
    positions.push(EnsembleWeights::uniform(m).weights);
    while positions.len() < config.particles {
        let raw: Vec<f64> = (0..m).map(|_| Exp1.sample(&mut init_rng)).collect();
        positions.push(EnsembleWeights::project(&raw).weights);
    }
    let mut velocities = vec![vec![0.0; m]; config.particles];
    let mut scores: Vec<f64> = positions.par_iter().map(|p| fitness(p)).collect();
    let mut best_pos = positions.clone();
    let mut best_fit = scores.clone();
    let mut g = argmax(&best_fit);
    let mut global = (best_pos[g].clone(), best_fit[g]);
    let mut trace = vec![global.1];

    for iter in 0..config.iterations {
        if global.1 >= 1.0 {
            break;
        }
        let gbest = &global.0;
        positions
            .par_iter_mut()
            .zip(velocities.par_iter_mut())
            .zip(best_pos.par_iter())
            .enumerate()
            .for_each(|(p, ((x, v), pbest))| {
                let mut rng = config.seed.child(&format!("pso/{iter}/{p}")).rng();
                for d in 0..m {
                    let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                    v[d] = config.inertia * v[d]
                        + config.cognitive * r1 * (pbest[d] - x[d])
                        + config.social * r2 * (gbest[d] - x[d]);
                    x[d] += v[d];
                }
                *x = EnsembleWeights::project(x).weights;
            });
        scores = positions.par_iter().map(|p| fitness(p)).collect();
        for p in 0..config.particles {
            if scores[p] > best_fit[p] {
                best_fit[p] = scores[p];
                best_pos[p] = positions[p].clone();
            }
        }
        g = argmax(&best_fit);
        if best_fit[g] > global.1 {
            global = (best_pos[g].clone(), best_fit[g]);
        }
        trace.push(global.1);
    }
    Ok(PsoResult {
        weights: EnsembleWeights { weights: global.0 },
        fitness: global.1,
        trace,
    })
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold(0, |best, (i, &x)| if x > v[best] { i } else { best })
}

/// Fit-set AUC of weighted fusion.
pub fn fitness(matrix: &ScoreMatrix, labels: &HashMap<String, Truth>, w: &EnsembleWeights) -> Result<f64> {
    if w.len() != matrix.n_models() {
        return Err(Error::Validation(format!("{} weights for {} models", w.len(), matrix.n_models())));
    }
    let fake = truth_column(matrix, labels)?;
    pairwise_auc(&fused_scores(matrix, w.as_slice()), &fake)
}

/// AUC first, then the weaker of TPR and TNR at threshold 0.5.
fn bias_objective(scores: &[f64], fake: &[bool]) -> (f64, f64) {
    let auc = pairwise_auc(scores, fake).expect("both classes present");
    let (mut tp, mut nf, mut tn, mut nr) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &f) in scores.iter().zip(fake) {
        if f {
            nf += 1;
            tp += usize::from(s >= 0.5);
        } else {
            nr += 1;
            tn += usize::from(s < 0.5);
        }
    }
    (auc, (tp as f64 / nf as f64).min(tn as f64 / nr as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineResult {
    pub weights: EnsembleWeights,
    pub fitness: f64,
    /// Accepted moves.
    pub moves: usize,
}

/// Coordinate-wise hill climbing from `w`: for each model try `w_k + step`
/// and `w_k - step` (projected back to the simplex) and accept a move when
/// it raises AUC, or keeps AUC and raises `min(TPR, TNR)` at threshold 0.5.
/// Sweeps repeat until no move is accepted. The objective takes finitely
/// many values and rises with every move, so the loop terminates.
pub fn refine_weights(
    matrix: &ScoreMatrix,
    labels: &HashMap<String, Truth>,
    w: &EnsembleWeights,
    step: f64,
) -> Result<RefineResult> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Parameter(format!("step {step} must be positive")));
    }
    if w.len() != matrix.n_models() {
        return Err(Error::Validation(format!("{} weights for {} models", w.len(), matrix.n_models())));
    }
    let fake = truth_column(matrix, labels)?;
    let objective = |w: &[f64]| bias_objective(&fused_scores(matrix, w), &fake);
    let mut current = w.weights.clone();
    let mut best = objective(&current);
    let mut moves = 0;
    loop {
        let mut improved = false;
        for k in 0..current.len() {
            for delta in [step, -step] {
                let mut raw = current.clone();
                raw[k] += delta;
                let candidate = EnsembleWeights::project(&raw).weights;
                if candidate == current {
                    continue;
                }
                let score = objective(&candidate);
                if score.0 > best.0 || (score.0 == best.0 && score.1 > best.1) {
                    current = candidate;
                    best = score;
                    moves += 1;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(RefineResult {
        weights: EnsembleWeights { weights: current },
        fitness: best.0,
        moves,
    })
}
