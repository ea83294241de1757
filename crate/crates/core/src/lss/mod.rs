//! Learned stratified sampling: score-ordered stratification design and the
//! two-stage estimator built on it.

pub mod brute;
pub mod dirsol;
pub mod dynpgm;
pub mod index;
pub mod layouts;
pub mod logbdr;

pub use brute::brute_force_design;
pub use dirsol::dirsol;
pub use dynpgm::{dynpgm, dynpgmp, merged_candidate_boundaries};
pub use index::{
    build_prefix_index, evaluate_sizes, locate_sample_ranks, neyman_objective,
    proportional_objective, stratum_sample_stats, stratum_variance, AllocationMode,
    DesignConstraints, DesignResult, PrefixSumIndex, SampleRanks,
};
pub use layouts::{fixed_height_sizes, fixed_width_sizes, tick_design};
pub use logbdr::{log_boundaries, logbdr};

use std::collections::HashSet;
use std::time::Instant;

use log::warn;

use crate::baseline::bernoulli_sample_variance;
use crate::core::{stratified_variance, z_quantile, Budget, Dataset, Estimate, PhaseOverhead};
use crate::error::{Error, Result};
use crate::predicates::CountingOracle;
use crate::rng::Rng;
use crate::scorers::{LabeledSample, ScorerSpec};

/// Stratification search strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    DirSol,
    LogBdr { base: f64 },
    DynPgm { eps: f64 },
    DynPgmP { base: f64 },
    FixedWidth,
    FixedHeight,
    Ticks { spacing: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::LogBdr { base: 2.0 }
    }
}

/// Learned stratified sampling configuration. Defaults: four strata, a 25%
/// learning split with a quarter of the remainder on first-stage design,
/// minimum stratum size equal to the second-stage sample count, five
/// first-stage samples per stratum, and Neyman allocation.
#[derive(Debug, Clone)]
pub struct LssConfig {
    pub scorer: ScorerSpec,
    pub budget: Budget,
    pub strata: usize,
    /// Minimum objects per stratum; defaults to the second-stage total.
    pub min_stratum_size: Option<usize>,
    pub min_samples_per_stratum: usize,
    pub optimizer: Optimizer,
    pub allocation: AllocationMode,
}

impl LssConfig {
    pub fn new(total_samples: usize) -> Result<Self> {
        Ok(LssConfig {
            scorer: ScorerSpec::default(),
            budget: Budget::new(total_samples, 0.25, 0.1875)?,
            strata: 4,
            min_stratum_size: None,
            min_samples_per_stratum: 5,
            optimizer: Optimizer::default(),
            allocation: AllocationMode::Neyman,
        })
    }
}

/// Evaluates the objective at arbitrary sizes, treating strata with fewer
/// than two first-stage samples as zero-spread. Used for layout baselines
/// whose boundaries ignore the sample positions.
pub fn evaluate_sizes_lenient(
    ranks: &SampleRanks,
    gamma: &PrefixSumIndex,
    sizes: &[usize],
    n: usize,
    total: usize,
    mode: AllocationMode,
) -> f64 {
    let boundaries: Vec<usize> = sizes
        .iter()
        .scan(0usize, |acc, &s| {
            *acc += s;
            Some(*acc)
        })
        .collect();
    let stats = stratum_sample_stats(ranks, gamma, &boundaries);
    let s: Vec<f64> =
        stats.iter().map(|&(m_h, c_h)| bernoulli_sample_variance(c_h, m_h).sqrt()).collect();
    match mode {
        AllocationMode::Neyman => neyman_objective(sizes, &s, n),
        AllocationMode::Proportional => proportional_objective(sizes, &s, n, total),
    }
}

fn run_optimizer(
    optimizer: Optimizer,
    sorted_scores: &[f64],
    ranks: &SampleRanks,
    gamma: &PrefixSumIndex,
    total: usize,
    constraints: &DesignConstraints,
) -> Result<DesignResult> {
    match optimizer {
        Optimizer::DirSol => dirsol(ranks, gamma, total, constraints),
        Optimizer::LogBdr { base } => logbdr(ranks, gamma, total, constraints, base),
        Optimizer::DynPgm { eps } => dynpgm(ranks, gamma, total, constraints, eps),
        Optimizer::DynPgmP { base } => dynpgmp(ranks, gamma, total, constraints, base),
        Optimizer::Ticks { spacing } => {
            tick_design(sorted_scores, ranks, gamma, constraints, spacing, AllocationMode::Neyman)
        }
        Optimizer::FixedWidth => {
            let sizes = fixed_width_sizes(sorted_scores, constraints.strata);
            if sizes.len() < 2 {
                return Err(Error::NoFeasibleStratification(
                    "fixed-width layout collapsed to one stratum".into(),
                ));
            }
            let objective = evaluate_sizes_lenient(
                ranks,
                gamma,
                &sizes,
                constraints.second_stage,
                total,
                AllocationMode::Neyman,
            );
            Ok(DesignResult { sizes, objective, mode: AllocationMode::Neyman })
        }
        Optimizer::FixedHeight => {
            let sizes = fixed_height_sizes(total, constraints.strata);
            let objective = evaluate_sizes_lenient(
                ranks,
                gamma,
                &sizes,
                constraints.second_stage,
                total,
                AllocationMode::Neyman,
            );
            Ok(DesignResult { sizes, objective, mode: AllocationMode::Neyman })
        }
    }
}

/// Learned stratified sampling estimate.
///
/// Phase 1 trains the scorer on a uniform learning sample and orders the
/// remaining frame by (score, id). Stage 1 draws a uniform design sample,
/// builds the rank/prefix index, and optimizes the stratification. Stage 2
/// draws the allotted samples per stratum from the frame minus the design
/// sample and estimates with stage-2 labels only; learning-sample positives
/// are added exactly.
pub fn lss_estimate(
    oracle: &CountingOracle,
    dataset: &Dataset,
    cfg: &LssConfig,
    alpha: f64,
    seed: u64,
) -> Result<Estimate> {
    let total = dataset.len();
    let before = oracle.calls();
    if cfg.budget.total_samples >= total {
        let c = crate::core::exact_count(oracle, dataset) as f64;
        return Ok(Estimate {
            count: c,
            proportion: Estimate::proportion_of(c, total),
            variance: Some(0.0),
            ci: Some((c, c)),
            oracle_calls: oracle.calls() - before,
            method: "lss".into(),
            seed,
            overhead: Default::default(),
        });
    }
    let h = cfg.strata;
    let n_learn = cfg.budget.learn_samples();
    let n_design = cfg.budget.design_samples();
    let n_stage2 = cfg.budget.estimation_samples();
    if n_design < 2 * h {
        return Err(Error::InvalidBudget(format!(
            "design share of {n_design} cannot give {h} strata 2 first-stage samples each"
        )));
    }
    if n_stage2 < 2 * h {
        return Err(Error::InvalidBudget(format!(
            "second stage of {n_stage2} cannot give {h} strata 2 samples each"
        )));
    }
    let rng = Rng::new(seed);

    // phase 1: learn
    let mut learn_rng = rng.stream("learn-draw");
    let learn_idx = learn_rng.sample_indices(total, n_learn);
    let train: Vec<LabeledSample> =
        learn_idx.iter().map(|&i| LabeledSample::new(i, oracle.eval(i))).collect();
    let c_learn = train.iter().filter(|s| s.label).count() as f64;
    let t_learn = Instant::now();
    let scorer = cfg.scorer.train(&train, dataset, rng.stream("scorer").next_u64())?;
    let learn_ms = t_learn.elapsed().as_secs_f64() * 1e3;

    // order the frame by (score, id)
    let t_apply = Instant::now();
    let in_learn: HashSet<usize> = learn_idx.iter().copied().collect();
    let mut keyed: Vec<(f64, u64, usize)> = (0..total)
        .filter(|i| !in_learn.contains(i))
        .map(|i| {
            let p = dataset.point(i);
            (scorer.score(p), p.id, i)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let frame_size = keyed.len();
    let sorted_scores: Vec<f64> = keyed.iter().map(|k| k.0).collect();
    let mut apply_ms = t_apply.elapsed().as_secs_f64() * 1e3;

    // stage 1: design sample, ranks, prefix index, optimization
    let mut design_rng = rng.stream("design-draw");
    let design_slots: Vec<usize> = design_rng.sample_indices(frame_size, n_design);
    let design_set: HashSet<usize> = design_slots.iter().copied().collect();
    let mut design_samples: Vec<(f64, u64, bool)> = design_slots
        .iter()
        .map(|&slot| {
            let (score, id, obj) = keyed[slot];
            (score, id, oracle.eval(obj))
        })
        .collect();
    let t_design = Instant::now();
    design_samples.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let sample_ids: HashSet<u64> = design_samples.iter().map(|s| s.1).collect();
    let universe_keys: Vec<(f64, u64)> = keyed.iter().map(|k| (k.0, k.1)).collect();
    let ranks = locate_sample_ranks(&universe_keys, &sample_ids)?;
    let gamma = build_prefix_index(&design_samples.iter().map(|s| s.2).collect::<Vec<_>>());
    let constraints = DesignConstraints {
        strata: h,
        min_stratum_size: cfg.min_stratum_size.unwrap_or(n_stage2),
        min_samples: cfg.min_samples_per_stratum,
        second_stage: n_stage2,
    };
    let design =
        match run_optimizer(cfg.optimizer, &sorted_scores, &ranks, &gamma, frame_size, &constraints)
        {
            Ok(d) => d,
            Err(e) => {
                warn!("lss: optimizer infeasible ({e}); falling back to fixed-height strata");
                let sizes = fixed_height_sizes(frame_size, h);
                let objective = evaluate_sizes_lenient(
                    &ranks,
                    &gamma,
                    &sizes,
                    n_stage2,
                    frame_size,
                    AllocationMode::Neyman,
                );
                DesignResult { sizes, objective, mode: AllocationMode::Neyman }
            }
        };
    let boundaries: Vec<usize> = design
        .sizes
        .iter()
        .scan(0usize, |acc, &s| {
            *acc += s;
            Some(*acc)
        })
        .collect();
    let stats = stratum_sample_stats(&ranks, &gamma, &boundaries);
    let s_first: Vec<f64> = stats
        .iter()
        .map(|&(m_h, c_h)| {
            if m_h < 2 {
                warn!("lss: a stratum holds {m_h} first-stage samples; treating spread as 0");
            }
            bernoulli_sample_variance(c_h, m_h).sqrt()
        })
        .collect();

    // allocation of the second stage over the frame minus the design sample
    let strata_count = design.sizes.len();
    let caps: Vec<usize> =
        design.sizes.iter().zip(&stats).map(|(&nh, &(m_h, _))| nh - m_h).collect();
    let weights: Vec<f64> = match cfg.allocation {
        AllocationMode::Neyman => {
            let w: Vec<f64> =
                design.sizes.iter().zip(&s_first).map(|(&nh, &s)| nh as f64 * s).collect();
            if w.iter().sum::<f64>() > 0.0 {
                w
            } else {
                design.sizes.iter().map(|&nh| nh as f64).collect()
            }
        }
        AllocationMode::Proportional => design.sizes.iter().map(|&nh| nh as f64).collect(),
    };
    let n2_actual = n_stage2.min(caps.iter().sum());
    let alloc_counts = match crate::baseline::allocate_weighted(&weights, n2_actual, &caps, 2) {
        Ok(a) => a,
        Err(Error::InfeasibleAllocation(_)) => {
            warn!("lss: per-stratum floor of 2 infeasible in stage 2; dropping the floor");
            crate::baseline::allocate_weighted(&weights, n2_actual, &caps, 0)?
        }
        Err(e) => return Err(e),
    };
    let design_ms = t_design.elapsed().as_secs_f64() * 1e3;

    // stage 2: draw and estimate
    let t_members = Instant::now();
    let mut members: Vec<Vec<u32>> = Vec::with_capacity(strata_count);
    let mut lo = 0usize;
    for &b in &boundaries {
        members.push(
            (lo..b).filter(|slot| !design_set.contains(slot)).map(|s| s as u32).collect(),
        );
        lo = b;
    }
    apply_ms += t_members.elapsed().as_secs_f64() * 1e3;

    let mut count_frame = 0.0;
    let mut weights_var = Vec::with_capacity(strata_count);
    let mut stddevs_var = Vec::with_capacity(strata_count);
    let mut alloc_var = Vec::with_capacity(strata_count);
    for i in 0..strata_count {
        let size_h = design.sizes[i] as f64;
        let w_h = size_h / frame_size as f64;
        let n_h = alloc_counts[i];
        let (m_h, c_first) = stats[i];
        if n_h == 0 {
            if caps[i] == 0 {
                // stratum fully covered by the design sample: exact
                count_frame += c_first as f64;
                weights_var.push(w_h);
                stddevs_var.push(0.0);
                alloc_var.push(m_h.max(1));
            } else {
                warn!("lss: stratum {i} unsampled in stage 2; using its first-stage proportion");
                count_frame += size_h * (c_first as f64 / m_h.max(1) as f64);
                weights_var.push(w_h);
                stddevs_var.push(s_first[i]);
                alloc_var.push(m_h.max(1));
            }
            continue;
        }
        let t_draw = Instant::now();
        let mut r = rng.stream_idx("stage2", i as u64);
        let drawn = r.choose(&members[i], n_h);
        apply_ms += t_draw.elapsed().as_secs_f64() * 1e3;
        let c = drawn.iter().filter(|&&slot| oracle.eval(keyed[slot as usize].2)).count();
        let p_h = c as f64 / n_h as f64;
        count_frame += size_h * p_h;
        weights_var.push(w_h);
        stddevs_var.push(bernoulli_sample_variance(c, n_h).sqrt());
        alloc_var.push(n_h);
    }

    let var_p = stratified_variance(&weights_var, &stddevs_var, &alloc_var, frame_size)?.max(0.0);
    let var_count = var_p * (frame_size as f64).powi(2);
    let count = c_learn + count_frame;
    let z = z_quantile(alpha);
    let half = z * var_count.sqrt();
    Ok(Estimate {
        count,
        proportion: Estimate::proportion_of(count, total),
        variance: Some(var_count),
        ci: Some((count - half, count + half)),
        oracle_calls: oracle.calls() - before,
        method: "lss".into(),
        seed,
        overhead: PhaseOverhead { learn_ms, design_ms, apply_ms },
    })
}
