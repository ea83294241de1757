//! Prefix-sum index over score-ordered first-stage samples and the variance
//! objectives the stratification optimizers minimize.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Ranks (1-based, strictly increasing) of the first-stage samples within
/// the score-ordered universe.
#[derive(Debug, Clone)]
pub struct SampleRanks {
    ranks: Vec<usize>,
}

impl SampleRanks {
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::InvalidInput("no sample ranks".into()));
        }
        if ranks[0] == 0 {
            return Err(Error::InvalidInput("ranks are 1-based".into()));
        }
        if ranks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("ranks must be strictly increasing".into()));
        }
        Ok(SampleRanks { ranks })
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Rank of the k-th sample, 1-based k.
    pub fn rank(&self, k: usize) -> usize {
        self.ranks[k - 1]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// Number of samples at rank <= `boundary`.
    pub fn samples_up_to(&self, boundary: usize) -> usize {
        self.ranks.partition_point(|&r| r <= boundary)
    }
}

/// Prefix sums of positives over the score-sorted first-stage samples:
/// gamma[k] = positives among the first k samples.
#[derive(Debug, Clone)]
pub struct PrefixSumIndex {
    gamma: Vec<usize>,
}

impl PrefixSumIndex {
    pub fn len(&self) -> usize {
        self.gamma.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn gamma(&self, k: usize) -> usize {
        self.gamma[k]
    }

    /// Positives among samples lo+1..=hi (sorted order).
    pub fn positives(&self, lo: usize, hi: usize) -> usize {
        self.gamma[hi] - self.gamma[lo]
    }
}

/// Builds the prefix-sum index from sample labels in score-sorted order.
pub fn build_prefix_index(sorted_sample_labels: &[bool]) -> PrefixSumIndex {
    let mut gamma = Vec::with_capacity(sorted_sample_labels.len() + 1);
    gamma.push(0usize);
    for &l in sorted_sample_labels {
        gamma.push(gamma.last().unwrap() + usize::from(l));
    }
    PrefixSumIndex { gamma }
}

fn key_cmp(a: &(f64, u64), b: &(f64, u64)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Ranks of the sampled objects within the universe ordered by (score, id).
/// One bucket-counting pass over the universe; the universe itself is never
/// fully sorted.
pub fn locate_sample_ranks(
    universe: &[(f64, u64)],
    sample_ids: &HashSet<u64>,
) -> Result<SampleRanks> {
    let mut keys: Vec<(f64, u64)> =
        universe.iter().copied().filter(|(_, id)| sample_ids.contains(id)).collect();
    if keys.len() != sample_ids.len() {
        return Err(Error::InvalidInput(format!(
            "{} sample ids missing from the universe",
            sample_ids.len() - keys.len()
        )));
    }
    keys.sort_by(key_cmp);
    let m = keys.len();
    // hist[b] = objects whose key is above exactly b sample keys
    let mut hist = vec![0usize; m + 1];
    for u in universe {
        let b = keys.partition_point(|k| key_cmp(k, u) != std::cmp::Ordering::Greater);
        hist[b] += 1;
    }
    // objects with at most j sample keys not above them sit strictly before
    // sample j+1 in the total order, so their cumulative count plus one is
    // that sample's rank
    let mut ranks = Vec::with_capacity(m);
    let mut cum = 0usize;
    for h in hist.iter().take(m) {
        cum += h;
        ranks.push(cum + 1);
    }
    SampleRanks::new(ranks)
}

/// Unbiased Bernoulli sample variance of the samples lo+1..=hi:
/// c(m-c)/(m(m-1)) with m = hi-lo and c the positive count.
pub fn stratum_variance(gamma: &PrefixSumIndex, lo: usize, hi: usize) -> Result<f64> {
    if hi <= lo || hi - lo < 2 {
        return Err(Error::TooFewStratumSamples(hi.saturating_sub(lo)));
    }
    let m = (hi - lo) as f64;
    let c = gamma.positives(lo, hi) as f64;
    Ok(c * (m - c) / (m * (m - 1.0)))
}

/// Estimated variance of the stratified count under Neyman allocation:
/// (1/n)(sum N_h s_h)^2 - sum N_h s_h^2. Reported raw, without clamping.
pub fn neyman_objective(sizes: &[usize], s: &[f64], n: usize) -> f64 {
    let sum_ns: f64 = sizes.iter().zip(s).map(|(&nh, &sh)| nh as f64 * sh).sum();
    let sum_ns2: f64 = sizes.iter().zip(s).map(|(&nh, &sh)| nh as f64 * sh * sh).sum();
    sum_ns * sum_ns / n as f64 - sum_ns2
}

/// Estimated variance of the stratified count under proportional
/// allocation: ((N-n)/n) sum N_h s_h^2.
pub fn proportional_objective(sizes: &[usize], s: &[f64], n: usize, total: usize) -> f64 {
    let sum_ns2: f64 = sizes.iter().zip(s).map(|(&nh, &sh)| nh as f64 * sh * sh).sum();
    (total - n) as f64 / n as f64 * sum_ns2
}

/// Allocation strategy the design optimizes for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocationMode {
    Neyman,
    Proportional,
}

/// Constraints on an admissible stratification.
#[derive(Debug, Clone, Copy)]
pub struct DesignConstraints {
    /// Number of strata H.
    pub strata: usize,
    /// Minimum objects per stratum.
    pub min_stratum_size: usize,
    /// Minimum first-stage samples per stratum.
    pub min_samples: usize,
    /// Second-stage sample total n.
    pub second_stage: usize,
}

impl DesignConstraints {
    pub fn validate(&self, total: usize, samples: usize) -> Result<()> {
        if self.strata < 2 {
            return Err(Error::InvalidInput("need at least 2 strata".into()));
        }
        if self.min_samples < 2 {
            return Err(Error::InvalidInput(
                "need at least 2 first-stage samples per stratum for a variance estimate".into(),
            ));
        }
        if self.second_stage == 0 {
            return Err(Error::InvalidInput("second stage needs samples".into()));
        }
        if self.strata * self.min_stratum_size > total {
            return Err(Error::NoFeasibleStratification(format!(
                "{} strata of at least {} objects exceed N={total}",
                self.strata, self.min_stratum_size
            )));
        }
        if self.strata * self.min_samples > samples {
            return Err(Error::NoFeasibleStratification(format!(
                "{} strata of at least {} samples exceed m={samples}",
                self.strata, self.min_samples
            )));
        }
        Ok(())
    }

    pub fn effective_min_samples(&self) -> usize {
        self.min_samples.max(2)
    }
}

/// A stratification found by an optimizer, with its objective value.
#[derive(Debug, Clone)]
pub struct DesignResult {
    pub sizes: Vec<usize>,
    pub objective: f64,
    pub mode: AllocationMode,
}

/// Per-stratum first-stage sample counts and positives for the given
/// cumulative boundaries (last boundary must equal the universe size).
pub fn stratum_sample_stats(
    ranks: &SampleRanks,
    gamma: &PrefixSumIndex,
    boundaries: &[usize],
) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(boundaries.len());
    let mut prev_ell = 0usize;
    for &b in boundaries {
        let ell = ranks.samples_up_to(b);
        out.push((ell - prev_ell, gamma.positives(prev_ell, ell)));
        prev_ell = ell;
    }
    out
}

/// Re-evaluates the chosen objective for arbitrary stratum sizes using the
/// first-stage index. Errors when any stratum holds fewer than two samples.
pub fn evaluate_sizes(
    ranks: &SampleRanks,
    gamma: &PrefixSumIndex,
    sizes: &[usize],
    n: usize,
    total: usize,
    mode: AllocationMode,
) -> Result<f64> {
    let boundaries: Vec<usize> = sizes
        .iter()
        .scan(0usize, |acc, &s| {
            *acc += s;
            Some(*acc)
        })
        .collect();
    if boundaries.last() != Some(&total) {
        return Err(Error::InvalidInput(format!(
            "sizes sum to {:?}, expected {total}",
            boundaries.last()
        )));
    }
    let stats = stratum_sample_stats(ranks, gamma, &boundaries);
    let mut s = Vec::with_capacity(sizes.len());
    for &(m_h, c_h) in &stats {
        if m_h < 2 {
            return Err(Error::TooFewStratumSamples(m_h));
        }
        let m = m_h as f64;
        let c = c_h as f64;
        s.push((c * (m - c) / (m * (m - 1.0))).sqrt());
    }
    Ok(match mode {
        AllocationMode::Neyman => neyman_objective(sizes, &s, n),
        AllocationMode::Proportional => proportional_objective(sizes, &s, n, total),
    })
}

/// Ordering used to merge optimizer candidates deterministically: smaller
/// objective wins, exact ties go to the lexicographically smallest sizes.
pub fn better(candidate: (f64, &[usize]), best: (f64, &[usize])) -> bool {
    candidate.0 < best.0 || (candidate.0 == best.0 && candidate.1 < best.1)
}
