//! Simple strata layout baselines over the score order: fixed-width cuts of
//! the score range, fixed-height (equal-count) strata, and the tick variant
//! that picks the best boundaries from an equally spaced score grid.

use crate::error::{Error, Result};
use crate::lss::index::{
    better, evaluate_sizes, AllocationMode, DesignConstraints, DesignResult, PrefixSumIndex,
    SampleRanks,
};

/// Equal-count strata; stratum sizes differ by at most one, remainder going
/// to the earliest strata.
pub fn fixed_height_sizes(total: usize, h: usize) -> Vec<usize> {
    let h = h.min(total).max(1);
    let base = total / h;
    let rem = total % h;
    (0..h).map(|i| base + usize::from(i < rem)).collect()
}

/// Cuts the score range [0,1] into `h` equal intervals and counts objects
/// per interval; scores exactly on a boundary go to the higher interval.
/// Empty strata are dropped. `sorted_scores` must be ascending.
pub fn fixed_width_sizes(sorted_scores: &[f64], h: usize) -> Vec<usize> {
    let n = sorted_scores.len();
    let mut cums = Vec::with_capacity(h);
    for j in 1..h {
        let cut = j as f64 / h as f64;
        cums.push(sorted_scores.partition_point(|&s| s < cut));
    }
    cums.push(n);
    let mut sizes = Vec::with_capacity(h);
    let mut prev = 0;
    for c in cums {
        if c > prev {
            sizes.push(c - prev);
        }
        prev = c;
    }
    sizes
}

/// Chooses the best H-1 boundaries from equally spaced score ticks,
/// evaluating the objective of the requested allocation mode with the
/// first-stage estimates. The experiments' simplified optimal-width layout.
pub fn tick_design(
    sorted_scores: &[f64],
    ranks: &SampleRanks,
    gamma: &PrefixSumIndex,
    constraints: &DesignConstraints,
    spacing: f64,
    mode: AllocationMode,
) -> Result<DesignResult> {
    if !(0.0..1.0).contains(&spacing) || spacing <= 0.0 {
        return Err(Error::InvalidInput("tick spacing must lie in (0,1)".into()));
    }
    constraints.validate(sorted_scores.len(), ranks.len())?;
    let total = sorted_scores.len();
    let h = constraints.strata;
    // convert tick values to boundary ranks; dedup interior ones
    let mut cuts: Vec<usize> = Vec::new();
    let mut t = spacing;
    while t < 1.0 {
        let r = sorted_scores.partition_point(|&s| s < t);
        if r > 0 && r < total && cuts.last() != Some(&r) {
            cuts.push(r);
        }
        t += spacing;
    }
    if cuts.len() < h - 1 {
        return Err(Error::NoFeasibleStratification(format!(
            "only {} distinct tick boundaries for {} strata",
            cuts.len(),
            h
        )));
    }
    let combos = choose_count(cuts.len(), h - 1);
    if combos > 2_000_000 {
        return Err(Error::InvalidInput(format!(
            "tick search space too large ({combos} combinations)"
        )));
    }

    let n_floor = constraints.min_stratum_size.max(1);
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut chosen: Vec<usize> = Vec::with_capacity(h - 1);
    fn descend(
        cuts: &[usize],
        start: usize,
        depth: usize,
        h: usize,
        total: usize,
        n_floor: usize,
        constraints: &DesignConstraints,
        ranks: &SampleRanks,
        gamma: &PrefixSumIndex,
        mode: AllocationMode,
        chosen: &mut Vec<usize>,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        if depth == h - 1 {
            let mut sizes = Vec::with_capacity(h);
            let mut prev = 0usize;
            for &b in chosen.iter() {
                sizes.push(b - prev);
                prev = b;
            }
            sizes.push(total - prev);
            if sizes.iter().any(|&s| s < n_floor) {
                return;
            }
            if let Ok(obj) =
                evaluate_sizes(ranks, gamma, &sizes, constraints.second_stage, total, mode)
            {
                if best.is_none()
                    || better((obj, &sizes), (best.as_ref().unwrap().0, &best.as_ref().unwrap().1))
                {
                    *best = Some((obj, sizes));
                }
            }
        } else {
            for i in start..cuts.len() {
                chosen.push(cuts[i]);
                descend(
                    cuts, i + 1, depth + 1, h, total, n_floor, constraints, ranks, gamma, mode,
                    chosen, best,
                );
                chosen.pop();
            }
        }
    }
    descend(
        &cuts, 0, 0, h, total, n_floor, constraints, ranks, gamma, mode, &mut chosen, &mut best,
    );
    match best {
        Some((objective, sizes)) => Ok(DesignResult { sizes, objective, mode }),
        None => Err(Error::NoFeasibleStratification(
            "no tick boundary subset satisfies the constraints".into(),
        )),
    }
}

fn choose_count(n: usize, k: usize) -> u64 {
    let mut acc = 1u64;
    for i in 0..k.min(n) {
        acc = acc.saturating_mul((n - i) as u64) / (i as u64 + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lss::index::build_prefix_index;

    #[test]
    fn fixed_height_even_split() {
        assert_eq!(fixed_height_sizes(100, 4), vec![25, 25, 25, 25]);
    }

    #[test]
    fn fixed_height_remainder_to_front() {
        assert_eq!(fixed_height_sizes(10, 4), vec![3, 3, 2, 2]);
    }

    #[test]
    fn fixed_width_concentrated_scores() {
        let scores = vec![0.01, 0.05, 0.1, 0.15, 0.19];
        assert_eq!(fixed_width_sizes(&scores, 4), vec![5]);
    }

    #[test]
    fn fixed_width_boundary_goes_up() {
        let scores = vec![0.1, 0.25, 0.6];
        // cuts at 0.25, 0.5, 0.75: 0.25 sits in the second interval
        assert_eq!(fixed_width_sizes(&scores, 4), vec![1, 1, 1]);
    }

    #[test]
    fn tick_design_finds_separating_cut() {
        // scores cleanly separated around 0.5 with labels split the same way
        let mut scores = Vec::new();
        for i in 0..40 {
            scores.push(if i < 20 { 0.1 + i as f64 * 0.001 } else { 0.8 + i as f64 * 0.001 });
        }
        let ranks = SampleRanks::new((1..=40).collect()).unwrap();
        let labels: Vec<bool> = (0..40).map(|i| i >= 20).collect();
        let gamma = build_prefix_index(&labels);
        let c = DesignConstraints {
            strata: 2,
            min_stratum_size: 5,
            min_samples: 2,
            second_stage: 4,
        };
        let r = tick_design(&scores, &ranks, &gamma, &c, 0.05, AllocationMode::Neyman).unwrap();
        assert_eq!(r.objective, 0.0);
        assert_eq!(r.sizes, vec![20, 20]);
    }
}
