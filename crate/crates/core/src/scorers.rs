//! Cheap confidence scorers g: O -> [0,1] approximating the expensive
//! predicate: k-NN trained on labeled samples, a dummy random scorer, an
//! externally supplied score table, plus uncertainty-sampling augmentation
//! and k-fold error-rate estimation.

use std::collections::HashMap;
use std::sync::Arc;

use crate::core::{DataPoint, Dataset};
use crate::error::{Error, Result};
use crate::rng::{mix, Rng};

/// A labeled training example: object position in the dataset plus its
/// oracle label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledSample {
    pub index: usize,
    pub label: bool,
}

impl LabeledSample {
    pub fn new(index: usize, label: bool) -> Self {
        LabeledSample { index, label }
    }
}

/// Confidence scorer. Scores are deterministic for a trained scorer and lie
/// in [0,1]; 0.5 means a toss-up. `predict` thresholds at 0.5.
pub trait Scorer {
    fn score(&self, o: &DataPoint) -> f64;

    fn predict(&self, o: &DataPoint) -> bool {
        self.score(o) >= 0.5
    }
}

/// Brute-force k-nearest-neighbors scorer. Score is the fraction of
/// positive labels among the k nearest training points; distance ties break
/// toward the lower training index.
pub struct KnnScorer {
    k: usize,
    features: Vec<Vec<f64>>,
    labels: Vec<bool>,
}

impl KnnScorer {
    pub fn k(&self) -> usize {
        self.k
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Scorer for KnnScorer {
    fn score(&self, o: &DataPoint) -> f64 {
        let mut nearest: Vec<(f64, usize)> = Vec::with_capacity(self.k + 1);
        for (i, f) in self.features.iter().enumerate() {
            let d = sq_dist(f, &o.features);
            let pos = nearest.partition_point(|&(nd, ni)| (nd, ni) < (d, i));
            if pos < self.k {
                nearest.insert(pos, (d, i));
                nearest.truncate(self.k);
            }
        }
        let positives = nearest.iter().filter(|&&(_, i)| self.labels[i]).count();
        positives as f64 / self.k as f64
    }
}

/// Trains a k-NN scorer from labeled samples.
pub fn train_knn(train: &[LabeledSample], dataset: &Dataset, k: usize) -> Result<KnnScorer> {
    if k == 0 {
        return Err(Error::InvalidInput("knn: k must be positive".into()));
    }
    if train.len() < k {
        return Err(Error::InsufficientTraining { need: k, got: train.len() });
    }
    Ok(KnnScorer {
        k,
        features: train.iter().map(|s| dataset.point(s.index).features.clone()).collect(),
        labels: train.iter().map(|s| s.label).collect(),
    })
}

/// Dummy scorer assigning an arbitrary but deterministic score per object:
/// a hash of (seed, id) mapped uniformly to [0,1].
pub struct RandomScorer {
    seed: u64,
}

impl Scorer for RandomScorer {
    fn score(&self, o: &DataPoint) -> f64 {
        (mix(mix(self.seed) ^ o.id.wrapping_mul(0x9E37_79B9_7F4A_7C15)) >> 11) as f64
            * (1.0 / (1u64 << 53) as f64)
    }
}

pub fn random_scorer(seed: u64) -> RandomScorer {
    RandomScorer { seed }
}

/// Scorer backed by an external id -> score table.
pub struct TableScorer {
    scores: Arc<HashMap<u64, f64>>,
}

impl TableScorer {
    pub fn new(scores: Arc<HashMap<u64, f64>>, dataset: &Dataset) -> Result<Self> {
        for p in dataset.points() {
            match scores.get(&p.id) {
                None => {
                    return Err(Error::InvalidInput(format!("score table missing id {}", p.id)))
                }
                Some(&s) if !(0.0..=1.0).contains(&s) => {
                    return Err(Error::InvalidInput(format!(
                        "score {s} for id {} outside [0,1]",
                        p.id
                    )))
                }
                _ => {}
            }
        }
        Ok(TableScorer { scores })
    }
}

impl Scorer for TableScorer {
    fn score(&self, o: &DataPoint) -> f64 {
        self.scores[&o.id]
    }
}

/// Picks the `b` pool members the scorer is least certain about (smallest
/// |score - 0.5|), ties broken by lower index. The caller labels them and
/// retrains; one augmentation round is the recommended protocol.
pub fn augment_uncertain(
    scorer: &dyn Scorer,
    pool: &[usize],
    dataset: &Dataset,
    b: usize,
) -> Vec<usize> {
    let mut ranked: Vec<(f64, usize)> = pool
        .iter()
        .map(|&i| ((scorer.score(dataset.point(i)) - 0.5).abs(), i))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranked.truncate(b.min(pool.len()));
    ranked.into_iter().map(|(_, i)| i).collect()
}

/// Scorer factory used by cross validation: trains a scorer on a subset of
/// the labeled samples.
pub type ScorerFactory<'a> = dyn Fn(&[LabeledSample]) -> Result<Box<dyn Scorer>> + 'a;

/// Pooled k-fold cross-validation estimates of the true and false positive
/// rates. Fold assignment is a seeded shuffle followed by round-robin.
pub fn kfold_error_rates(
    train: &[LabeledSample],
    dataset: &Dataset,
    folds: usize,
    factory: &ScorerFactory,
    seed: u64,
) -> Result<(f64, f64)> {
    if folds < 2 {
        return Err(Error::InvalidInput("kfold: need at least 2 folds".into()));
    }
    if train.len() < folds {
        return Err(Error::InsufficientTraining { need: folds, got: train.len() });
    }
    let positives = train.iter().filter(|s| s.label).count();
    if positives == 0 || positives == train.len() {
        return Err(Error::DegenerateClassBalance(format!(
            "{positives} positives among {} samples",
            train.len()
        )));
    }

    let mut order: Vec<usize> = (0..train.len()).collect();
    Rng::new(seed).stream("kfold-shuffle").shuffle(&mut order);
    let fold_of: Vec<usize> = {
        let mut f = vec![0usize; train.len()];
        for (pos, &sample) in order.iter().enumerate() {
            f[sample] = pos % folds;
        }
        f
    };

    let (mut tp, mut fn_, mut fp, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for fold in 0..folds {
        let fit: Vec<LabeledSample> =
            train.iter().enumerate().filter(|(i, _)| fold_of[*i] != fold).map(|(_, &s)| s).collect();
        let scorer = factory(&fit)?;
        for (i, s) in train.iter().enumerate() {
            if fold_of[i] != fold {
                continue;
            }
            let predicted = scorer.predict(dataset.point(s.index));
            match (s.label, predicted) {
                (true, true) => tp += 1,
                (true, false) => fn_ += 1,
                (false, true) => fp += 1,
                (false, false) => tn += 1,
            }
        }
    }
    Ok((tp as f64 / (tp + fn_) as f64, fp as f64 / (fp + tn) as f64))
}

/// Scorer configuration used by the estimators.
#[derive(Debug, Clone)]
pub enum ScorerSpec {
    Knn { k: usize },
    Random,
    External { scores: Arc<HashMap<u64, f64>> },
}

impl Default for ScorerSpec {
    fn default() -> Self {
        ScorerSpec::Knn { k: 3 }
    }
}

impl ScorerSpec {
    /// Trains a scorer according to the spec. `seed` feeds scorer variants
    /// that need randomness.
    pub fn train(
        &self,
        train: &[LabeledSample],
        dataset: &Dataset,
        seed: u64,
    ) -> Result<Box<dyn Scorer>> {
        match self {
            ScorerSpec::Knn { k } => Ok(Box::new(train_knn(train, dataset, *k)?)),
            ScorerSpec::Random => Ok(Box::new(random_scorer(seed))),
            ScorerSpec::External { scores } => {
                Ok(Box::new(TableScorer::new(scores.clone(), dataset)?))
            }
        }
    }
}
