//! Learning-based estimators: Classify-and-Count, Adjusted Count, and the
//! SampleClean-style corrected count.

use std::time::Instant;

use crate::core::{z_quantile, Budget, Dataset, Estimate, PhaseOverhead};
use crate::error::{Error, Result};
use crate::predicates::CountingOracle;
use crate::rng::Rng;
use crate::scorers::{augment_uncertain, kfold_error_rates, LabeledSample, ScorerSpec};

/// Configuration shared by the quantification estimators.
#[derive(Debug, Clone)]
pub struct QuantifyConfig {
    pub budget: Budget,
    pub scorer: ScorerSpec,
    /// Cross-validation folds for the adjusted count.
    pub folds: usize,
    /// Share of the budget the corrected count spends on the fresh
    /// error-assessment sample S'.
    pub correction_fraction: f64,
    /// Reject the adjustment when tpr - fpr falls at or below this.
    pub delta: f64,
    /// Share of the training budget spent on one uncertainty-sampling
    /// augmentation round (0 disables it).
    pub augment_fraction: f64,
    /// Candidate pool for uncertainty sampling, as a multiple of the
    /// augmentation batch; the pool is capped at the frame size.
    pub augment_pool_factor: usize,
}

impl QuantifyConfig {
    pub fn new(budget: Budget, scorer: ScorerSpec) -> Self {
        QuantifyConfig {
            budget,
            scorer,
            folds: 5,
            correction_fraction: 0.75,
            delta: 0.05,
            augment_fraction: 0.0,
            augment_pool_factor: 20,
        }
    }
}

/// Draws a uniform training set of `n` objects, optionally augmented by one
/// uncertainty-sampling round, and returns the labeled samples.
fn draw_training(
    oracle: &CountingOracle,
    dataset: &Dataset,
    cfg: &QuantifyConfig,
    n: usize,
    rng: &Rng,
    learn_ms: &mut f64,
) -> Result<Vec<LabeledSample>> {
    let total = dataset.len();
    let n_augment = (n as f64 * cfg.augment_fraction).floor() as usize;
    let n_initial = n - n_augment;
    let mut r = rng.stream("train-draw");
    let initial = r.sample_indices(total, n_initial);
    let mut train: Vec<LabeledSample> =
        initial.iter().map(|&i| LabeledSample::new(i, oracle.eval(i))).collect();
    if n_augment > 0 {
        let start = Instant::now();
        let scorer =
            cfg.scorer.train(&train, dataset, rng.stream("scorer-initial").next_u64())?;
        let in_train: std::collections::HashSet<usize> =
            train.iter().map(|s| s.index).collect();
        let rest: Vec<usize> = (0..total).filter(|i| !in_train.contains(i)).collect();
        let pool_size = (cfg.augment_pool_factor * n_augment).min(rest.len());
        let pool = rng.stream("augment-pool").choose(&rest, pool_size);
        let picked = augment_uncertain(scorer.as_ref(), &pool, dataset, n_augment);
        *learn_ms += start.elapsed().as_secs_f64() * 1e3;
        for i in picked {
            train.push(LabeledSample::new(i, oracle.eval(i)));
        }
    }
    Ok(train)
}

struct ClassifyRun {
    train: Vec<LabeledSample>,
    /// Predicted labels over the test frame O \ S, aligned with `frame`.
    predictions: Vec<bool>,
    frame: Vec<usize>,
    c_train: usize,
    c_obs: usize,
    learn_ms: f64,
}

fn classify_and_count(
    oracle: &CountingOracle,
    dataset: &Dataset,
    cfg: &QuantifyConfig,
    n_train: usize,
    seed: u64,
) -> Result<ClassifyRun> {
    let total = dataset.len();
    if n_train == 0 || n_train > total {
        return Err(Error::InvalidBudget(format!("training size {n_train} outside 1..={total}")));
    }
    let rng = Rng::new(seed);
    let mut learn_ms = 0.0;
    let train = draw_training(oracle, dataset, cfg, n_train, &rng, &mut learn_ms)?;
    let start = Instant::now();
    let scorer = cfg.scorer.train(&train, dataset, rng.stream("scorer").next_u64())?;
    let in_train: std::collections::HashSet<usize> = train.iter().map(|s| s.index).collect();
    let frame: Vec<usize> = (0..total).filter(|i| !in_train.contains(i)).collect();
    let predictions: Vec<bool> = frame.iter().map(|&i| scorer.predict(dataset.point(i))).collect();
    learn_ms += start.elapsed().as_secs_f64() * 1e3;
    let c_train = train.iter().filter(|s| s.label).count();
    let c_obs = predictions.iter().filter(|&&p| p).count();
    Ok(ClassifyRun { train, predictions, frame, c_train, c_obs, learn_ms })
}

/// Classify-and-Count: label a uniform sample, train, and add the observed
/// predicted-positive count over the rest to the known training positives.
/// Point estimate only; no interval.
pub fn qlcc_estimate(
    oracle: &CountingOracle,
    dataset: &Dataset,
    cfg: &QuantifyConfig,
    seed: u64,
) -> Result<Estimate> {
    let before = oracle.calls();
    let run = classify_and_count(oracle, dataset, cfg, cfg.budget.total_samples, seed)?;
    let count = (run.c_obs + run.c_train) as f64;
    Ok(Estimate {
        count,
        proportion: Estimate::proportion_of(count, dataset.len()),
        variance: None,
        ci: None,
        oracle_calls: oracle.calls() - before,
        method: "qlcc".into(),
        seed,
        overhead: PhaseOverhead { learn_ms: run.learn_ms, ..Default::default() },
    })
}

/// The adjusted-count inversion: (C_obs - fpr * |test|) / (tpr - fpr),
/// clamped to the feasible range [0, |test|]. Errors out when the estimated
/// rates say the classifier is no better than chance.
pub fn adjusted_count(
    c_obs: usize,
    test_size: usize,
    tpr: f64,
    fpr: f64,
    delta: f64,
) -> Result<f64> {
    let spread = tpr - fpr;
    if spread <= delta {
        return Err(Error::DegenerateAdjustment(spread));
    }
    let adj = (c_obs as f64 - fpr * test_size as f64) / spread;
    Ok(adj.clamp(0.0, test_size as f64))
}

/// Adjusted Count: Classify-and-Count corrected by k-fold estimates of the
/// true and false positive rates.
pub fn qlac_estimate(
    oracle: &CountingOracle,
    dataset: &Dataset,
    cfg: &QuantifyConfig,
    seed: u64,
) -> Result<Estimate> {
    let before = oracle.calls();
    let run = classify_and_count(oracle, dataset, cfg, cfg.budget.total_samples, seed)?;
    let start = Instant::now();
    let spec = cfg.scorer.clone();
    let ds = dataset;
    let factory = move |fit: &[LabeledSample]| spec.train(fit, ds, 0);
    let (tpr, fpr) = kfold_error_rates(
        &run.train,
        dataset,
        cfg.folds,
        &factory,
        Rng::new(seed).stream("kfold").next_u64(),
    )?;
    let adjusted = adjusted_count(run.c_obs, run.frame.len(), tpr, fpr, cfg.delta)?;
    let learn_ms = run.learn_ms + start.elapsed().as_secs_f64() * 1e3;
    let count = adjusted + run.c_train as f64;
    Ok(Estimate {
        count,
        proportion: Estimate::proportion_of(count, dataset.len()),
        variance: None,
        ci: None,
        oracle_calls: oracle.calls() - before,
        method: "qlac".into(),
        seed,
        overhead: PhaseOverhead { learn_ms, ..Default::default() },
    })
}

/// Sample-corrected count: Classify-and-Count on the learning share of the
/// budget, then a fresh uniform sample from the test frame estimates the
/// mean prediction error, which corrects the observed count. The interval
/// comes from the simple-random-sampling variance of the per-object errors.
pub fn qlsc_estimate(
    oracle: &CountingOracle,
    dataset: &Dataset,
    cfg: &QuantifyConfig,
    alpha: f64,
    seed: u64,
) -> Result<Estimate> {
    let total = dataset.len();
    let budget = cfg.budget.total_samples;
    let n_correct = (budget as f64 * cfg.correction_fraction).floor() as usize;
    let n_train = budget - n_correct;
    if n_correct < 2 {
        return Err(Error::InvalidBudget(format!(
            "correction share of {n_correct} samples is below 2"
        )));
    }
    if n_train == 0 {
        return Err(Error::InvalidBudget("no samples left for training".into()));
    }
    let before = oracle.calls();
    let run = classify_and_count(oracle, dataset, cfg, n_train, seed)?;
    let frame_size = run.frame.len();
    let n_prime = n_correct.min(frame_size);
    let mut rng = Rng::new(seed).stream("correction");
    let picked = rng.sample_indices(frame_size, n_prime);
    let mut err_sum = 0i64;
    let mut err_sq_sum = 0i64;
    for &slot in &picked {
        let obj = run.frame[slot];
        let f = i64::from(run.predictions[slot]);
        let q = i64::from(oracle.eval(obj));
        let e = f - q;
        err_sum += e;
        err_sq_sum += e * e;
    }
    let eps_hat = err_sum as f64 / n_prime as f64;
    let count = run.c_obs as f64 - eps_hat * frame_size as f64 + run.c_train as f64;

    // unbiased sample variance of the per-object errors, with the
    // finite-population correction for sampling without replacement
    let var_eps = if n_prime >= 2 {
        let mean = eps_hat;
        let ss = err_sq_sum as f64 - n_prime as f64 * mean * mean;
        let s2 = (ss / (n_prime as f64 - 1.0)).max(0.0);
        s2 / n_prime as f64 * (frame_size - n_prime) as f64 / frame_size as f64
    } else {
        0.0
    };
    let var_count = var_eps * (frame_size as f64).powi(2);
    let z = z_quantile(alpha);
    let half = z * var_count.sqrt();
    Ok(Estimate {
        count,
        proportion: Estimate::proportion_of(count, total),
        variance: Some(var_count),
        ci: Some((count - half, count + half)),
        oracle_calls: oracle.calls() - before,
        method: "qlsc".into(),
        seed,
        overhead: PhaseOverhead { learn_ms: run.learn_ms, ..Default::default() },
    })
}
