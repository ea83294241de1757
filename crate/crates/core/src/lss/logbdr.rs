//! Any-H stratification search over all sample partitions, with candidate
//! boundaries spaced geometrically between consecutive samples.

use crate::error::{Error, Result};
use crate::lss::index::{
    better, evaluate_sizes, neyman_objective, stratum_variance, AllocationMode,
    DesignConstraints, DesignResult, PrefixSumIndex, SampleRanks,
};

/// Candidate boundary indices between consecutive sample ranks `lo` and
/// `hi`: lo itself, lo plus floor(base^t) while below hi, and hi - 1.
pub fn log_boundaries(lo: usize, hi: usize, base: f64) -> Vec<usize> {
    debug_assert!(lo < hi);
    debug_assert!(base >= 1.0 + 1e-6);
    let mut out = std::collections::BTreeSet::new();
    out.insert(lo);
    let mut power = 1.0f64;
    loop {
        let offset = power.floor() as usize;
        if lo + offset >= hi {
            break;
        }
        out.insert(lo + offset);
        power *= base;
        if power > usize::MAX as f64 / 2.0 {
            break;
        }
    }
    out.insert(hi - 1);
    out.into_iter().collect()
}

/// Enumerates partitions of the m samples into H contiguous groups with at
/// least `m_floor` samples each; `ends` receives the last sample index of
/// each of the first H-1 groups.
fn for_each_partition(
    m: usize,
    h: usize,
    m_floor: usize,
    ends: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    let depth = ends.len();
    if depth == h - 1 {
        visit(ends);
        return;
    }
    let prev = if depth == 0 { 0 } else { ends[depth - 1] };
    let remaining_groups = h - 1 - depth;
    let lo = prev + m_floor;
    let hi = m - m_floor * remaining_groups;
    let mut k = lo;
    while k <= hi {
        ends.push(k);
        for_each_partition(m, h, m_floor, ends, visit);
        ends.pop();
        k += 1;
    }
}

/// LogBdr: for each sample partition, pick one boundary from each
/// geometric candidate set and keep the feasible global best.
pub fn logbdr(
    ranks: &SampleRanks,
    gamma: &PrefixSumIndex,
    total: usize,
    constraints: &DesignConstraints,
    base: f64,
) -> Result<DesignResult> {
    if base < 1.0 + 1e-6 {
        return Err(Error::InvalidInput("log boundary base must exceed 1".into()));
    }
    constraints.validate(total, ranks.len())?;
    let m = ranks.len();
    let h = constraints.strata;
    let m_floor = constraints.effective_min_samples();
    let n_floor = constraints.min_stratum_size;
    let n = constraints.second_stage;

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut ends = Vec::with_capacity(h - 1);
    for_each_partition(m, h, m_floor, &mut ends, &mut |ends: &[usize]| {
        // spreads are fixed by the sample partition alone
        let mut s = Vec::with_capacity(h);
        let mut prev = 0usize;
        for &e in ends {
            match stratum_variance(gamma, prev, e) {
                Ok(v) => s.push(v.sqrt()),
                Err(_) => return,
            }
            prev = e;
        }
        match stratum_variance(gamma, prev, m) {
            Ok(v) => s.push(v.sqrt()),
            Err(_) => return,
        }

        let candidate_sets: Vec<Vec<usize>> = ends
            .iter()
            .map(|&e| log_boundaries(ranks.rank(e), ranks.rank(e + 1), base))
            .collect();

        // depth-first over one boundary choice per gap
        let mut chosen = Vec::with_capacity(h - 1);
        fn descend(
            sets: &[Vec<usize>],
            depth: usize,
            total: usize,
            n_floor: usize,
            n: usize,
            s: &[f64],
            chosen: &mut Vec<usize>,
            best: &mut Option<(f64, Vec<usize>)>,
        ) {
            if depth == sets.len() {
                let last = *chosen.last().unwrap();
                if total < last + n_floor {
                    return;
                }
                let mut sizes = Vec::with_capacity(chosen.len() + 1);
                let mut prev = 0usize;
                for &b in chosen.iter() {
                    sizes.push(b - prev);
                    prev = b;
                }
                sizes.push(total - prev);
                let obj = neyman_objective(&sizes, s, n);
                if best.is_none()
                    || better((obj, &sizes), (best.as_ref().unwrap().0, &best.as_ref().unwrap().1))
                {
                    *best = Some((obj, sizes));
                }
                return;
            }
            let prev = if depth == 0 { 0 } else { *chosen.last().unwrap() };
            for &b in &sets[depth] {
                if b < prev + n_floor.max(1) {
                    continue;
                }
                chosen.push(b);
                descend(sets, depth + 1, total, n_floor, n, s, chosen, best);
                chosen.pop();
            }
        }
        descend(&candidate_sets, 0, total, n_floor, n, &s, &mut chosen, &mut best);
    });

    match best {
        Some((_, sizes)) => {
            let objective =
                evaluate_sizes(ranks, gamma, &sizes, n, total, AllocationMode::Neyman)?;
            Ok(DesignResult { sizes, objective, mode: AllocationMode::Neyman })
        }
        None => Err(Error::NoFeasibleStratification(
            "no candidate boundary combination satisfies the size floors".into(),
        )),
    }
}
