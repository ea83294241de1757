//! Sampling-only estimators: simple random sampling, proportional stratified
//! sampling over a surrogate-attribute grid, and two-stage Neyman stratified
//! sampling.

use log::warn;

use crate::core::{
    exact_count, stratified_variance, wald_interval, z_quantile, Dataset, Estimate,
};
use crate::error::{Error, Result};
use crate::predicates::CountingOracle;
use crate::rng::Rng;

/// A partition of the dataset into strata.
#[derive(Debug, Clone)]
pub struct Stratification {
    sizes: Vec<usize>,
    assignment: Vec<u32>,
    members: Vec<Vec<u32>>,
}

impl Stratification {
    /// Builds a stratification from a per-object stratum assignment. Ids are
    /// renumbered so that only non-empty strata remain, preserving order.
    pub fn from_assignment(raw: &[u32]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidInput("empty assignment".into()));
        }
        let max_id = *raw.iter().max().unwrap() as usize;
        let mut counts = vec![0usize; max_id + 1];
        for &a in raw {
            counts[a as usize] += 1;
        }
        let mut renumber = vec![u32::MAX; max_id + 1];
        let mut next = 0u32;
        for (old, &c) in counts.iter().enumerate() {
            if c > 0 {
                renumber[old] = next;
                next += 1;
            }
        }
        let h = next as usize;
        let mut members = vec![Vec::new(); h];
        let mut assignment = Vec::with_capacity(raw.len());
        for (obj, &a) in raw.iter().enumerate() {
            let s = renumber[a as usize];
            assignment.push(s);
            members[s as usize].push(obj as u32);
        }
        let sizes = members.iter().map(Vec::len).collect();
        Ok(Stratification { sizes, assignment, members })
    }

    pub fn strata(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn members(&self, h: usize) -> &[u32] {
        &self.members[h]
    }

    pub fn stratum_of(&self, object: usize) -> u32 {
        self.assignment[object]
    }

    pub fn total(&self) -> usize {
        self.assignment.len()
    }
}

/// Per-stratum sample counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    pub counts: Vec<usize>,
}

/// Largest-remainder apportionment of `n` units across strata proportional
/// to `weights`, honoring per-stratum floors and capacities. Strata that hit
/// their cap are fixed and the remainder is re-proportioned over the rest.
pub(crate) fn allocate_weighted(
    weights: &[f64],
    n: usize,
    caps: &[usize],
    floor: usize,
) -> Result<Vec<usize>> {
    let h = weights.len();
    let mut alloc: Vec<usize> = caps.iter().map(|&c| floor.min(c)).collect();
    let assigned: usize = alloc.iter().sum();
    if assigned > n {
        return Err(Error::InfeasibleAllocation(format!(
            "floors require {assigned} samples but only {n} available"
        )));
    }
    if caps.iter().sum::<usize>() < n {
        return Err(Error::InfeasibleAllocation(format!(
            "capacity {} below requested {n}",
            caps.iter().sum::<usize>()
        )));
    }
    let mut remaining = n - assigned;
    let mut active: Vec<usize> = (0..h).filter(|&i| alloc[i] < caps[i]).collect();
    while remaining > 0 {
        if active.is_empty() {
            return Err(Error::InfeasibleAllocation("no capacity left".into()));
        }
        let mut w: Vec<f64> = active.iter().map(|&i| weights[i]).collect();
        if w.iter().sum::<f64>() <= 0.0 {
            // nothing informative to weight by; spread over residual capacity
            w = active.iter().map(|&i| (caps[i] - alloc[i]) as f64).collect();
        }
        let total_w: f64 = w.iter().sum();
        let quotas: Vec<f64> = w.iter().map(|&wi| remaining as f64 * wi / total_w).collect();
        let mut grant: Vec<usize> = quotas.iter().map(|&q| q.floor() as usize).collect();
        let mut leftover = remaining - grant.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..active.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - quotas[a].floor();
            let rb = quotas[b] - quotas[b].floor();
            rb.total_cmp(&ra).then(active[a].cmp(&active[b]))
        });
        for &i in &order {
            if leftover == 0 {
                break;
            }
            grant[i] += 1;
            leftover -= 1;
        }
        remaining = 0;
        let mut still_active = Vec::new();
        for (slot, &i) in active.iter().enumerate() {
            let want = alloc[i] + grant[slot];
            if want >= caps[i] {
                remaining += want - caps[i];
                alloc[i] = caps[i];
            } else {
                alloc[i] = want;
                still_active.push(i);
            }
        }
        active = still_active;
    }
    Ok(alloc)
}

/// Samples per stratum proportional to stratum size, largest-remainder
/// rounded, capped at stratum size with excess redistributed.
pub fn proportional_allocation(sizes: &[usize], n: usize) -> Result<Allocation> {
    let total: usize = sizes.iter().sum();
    if n > total {
        return Err(Error::InfeasibleAllocation(format!("n={n} exceeds population {total}")));
    }
    let weights: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    Ok(Allocation { counts: allocate_weighted(&weights, n, sizes, 0)? })
}

/// Neyman allocation n_h proportional to N_h * s_h, constrained to
/// [min_per_stratum, N_h] with rebalancing. Falls back to proportional
/// weights when every N_h * s_h is zero.
pub fn neyman_allocation(
    sizes: &[usize],
    stddevs: &[f64],
    n: usize,
    min_per_stratum: usize,
) -> Result<Allocation> {
    if sizes.len() != stddevs.len() {
        return Err(Error::InvalidInput("neyman_allocation: length mismatch".into()));
    }
    if stddevs.iter().any(|&s| s < 0.0) {
        return Err(Error::InvalidInput("negative standard deviation".into()));
    }
    let total: usize = sizes.iter().sum();
    if n > total {
        return Err(Error::InfeasibleAllocation(format!("n={n} exceeds population {total}")));
    }
    let mut weights: Vec<f64> =
        sizes.iter().zip(stddevs).map(|(&nh, &s)| nh as f64 * s).collect();
    if weights.iter().sum::<f64>() <= 0.0 {
        weights = sizes.iter().map(|&s| s as f64).collect();
    }
    Ok(Allocation { counts: allocate_weighted(&weights, n, sizes, min_per_stratum)? })
}

/// Uniform grid stratification of 2-d feature space into sqrt(H) x sqrt(H)
/// cells. Objects on interior boundaries go to the higher cell; maxima go to
/// the last cell. Empty cells are dropped.
pub fn grid_stratify(dataset: &Dataset, h: usize) -> Result<Stratification> {
    if dataset.dimension() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: dataset.dimension() });
    }
    let side = (h as f64).sqrt().round() as usize;
    if side == 0 || side * side != h {
        return Err(Error::InvalidInput(format!("H={h} is not a perfect square")));
    }
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in dataset.points() {
        min_x = min_x.min(p.x());
        max_x = max_x.max(p.x());
        min_y = min_y.min(p.y());
        max_y = max_y.max(p.y());
    }
    let cell = |v: f64, lo: f64, hi: f64| -> usize {
        if hi <= lo {
            return 0;
        }
        let t = (v - lo) / (hi - lo) * side as f64;
        (t.floor() as usize).min(side - 1)
    };
    let raw: Vec<u32> = dataset
        .points()
        .iter()
        .map(|p| {
            let col = cell(p.x(), min_x, max_x);
            let row = cell(p.y(), min_y, max_y);
            (row * side + col) as u32
        })
        .collect();
    Stratification::from_assignment(&raw)
}

fn estimate_from_census(
    oracle: &CountingOracle,
    dataset: &Dataset,
    method: &str,
    seed: u64,
) -> Estimate {
    let c = exact_count(oracle, dataset) as f64;
    Estimate {
        count: c,
        proportion: Estimate::proportion_of(c, dataset.len()),
        variance: Some(0.0),
        ci: Some((c, c)),
        oracle_calls: dataset.len(),
        method: method.into(),
        seed,
        overhead: Default::default(),
    }
}

/// Simple random sampling estimate with a Wald interval.
pub fn srs_estimate(
    oracle: &CountingOracle,
    dataset: &Dataset,
    n: usize,
    alpha: f64,
    seed: u64,
) -> Result<Estimate> {
    let total = dataset.len();
    if n == 0 || n > total {
        return Err(Error::InvalidBudget(format!("srs: n={n} outside 1..={total}")));
    }
    let before = oracle.calls();
    let mut rng = Rng::new(seed).stream("srs");
    let drawn = rng.sample_indices(total, n);
    let positives = drawn.iter().filter(|&&i| oracle.eval(i)).count();
    let p_hat = positives as f64 / n as f64;
    let count = p_hat * total as f64;
    let (lo, hi) = wald_interval(p_hat, n, total, alpha);
    let fpc = if total > 1 { (total - n) as f64 / (total - 1) as f64 } else { 0.0 };
    let var_count = p_hat * (1.0 - p_hat) / n as f64 * fpc * (total as f64).powi(2);
    Ok(Estimate {
        count,
        proportion: Some(p_hat),
        variance: Some(var_count),
        ci: Some((lo * total as f64, hi * total as f64)),
        oracle_calls: oracle.calls() - before,
        method: "srs".into(),
        seed,
        overhead: Default::default(),
    })
}

/// Unbiased Bernoulli sample variance c(n-c)/(n(n-1)).
pub(crate) fn bernoulli_sample_variance(positives: usize, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let c = positives as f64;
    let nf = n as f64;
    c * (nf - c) / (nf * (nf - 1.0))
}

/// Stratified estimate over a fixed stratification and allocation, with the
/// variance from the stratified variance formula and a normal-quantile CI.
pub fn stratified_estimate(
    oracle: &CountingOracle,
    dataset: &Dataset,
    strat: &Stratification,
    alloc: &Allocation,
    alpha: f64,
    seed: u64,
) -> Result<Estimate> {
    if alloc.counts.len() != strat.strata() {
        return Err(Error::InvalidInput("allocation does not match stratification".into()));
    }
    let total = strat.total();
    if total != dataset.len() {
        return Err(Error::InvalidInput("stratification does not cover the dataset".into()));
    }
    let before = oracle.calls();
    let rng = Rng::new(seed);
    let mut weights = Vec::with_capacity(strat.strata());
    let mut stddevs = Vec::with_capacity(strat.strata());
    let mut p_hat = 0.0;
    for h in 0..strat.strata() {
        let n_h = alloc.counts[h];
        let size_h = strat.sizes()[h];
        if n_h == 0 {
            return Err(Error::EmptyAllocation(h));
        }
        if n_h > size_h {
            return Err(Error::InfeasibleAllocation(format!(
                "stratum {h}: n_h={n_h} exceeds N_h={size_h}"
            )));
        }
        let mut r = rng.stream_idx("stratum", h as u64);
        let drawn = r.choose(strat.members(h), n_h);
        let c = drawn.iter().filter(|&&i| oracle.eval(i as usize)).count();
        let p_h = c as f64 / n_h as f64;
        let w_h = size_h as f64 / total as f64;
        p_hat += w_h * p_h;
        if n_h < 2 && size_h > 1 {
            warn!("stratum {h} sampled with n_h={n_h}; variance contribution set to 0");
        }
        weights.push(w_h);
        stddevs.push(bernoulli_sample_variance(c, n_h).sqrt());
    }
    let var_p = stratified_variance(&weights, &stddevs, &alloc.counts, total)?.max(0.0);
    let count = p_hat * total as f64;
    let z = z_quantile(alpha);
    let half = z * var_p.sqrt() * total as f64;
    Ok(Estimate {
        count,
        proportion: Some(p_hat),
        variance: Some(var_p * (total as f64).powi(2)),
        ci: Some((count - half, count + half)),
        oracle_calls: oracle.calls() - before,
        method: "ssp".into(),
        seed,
        overhead: Default::default(),
    })
}

/// Two-stage Neyman stratified sampling. A proportional pilot estimates
/// per-stratum spreads; the remainder is Neyman-allocated. Pilot objects are
/// removed from the stage-2 frame and their exact labels added to the count.
pub fn ssn_estimate(
    oracle: &CountingOracle,
    dataset: &Dataset,
    strat: &Stratification,
    n_total: usize,
    pilot_fraction: f64,
    alpha: f64,
    seed: u64,
) -> Result<Estimate> {
    let total = dataset.len();
    let h = strat.strata();
    if n_total >= total {
        return Ok(Estimate { method: "ssn".into(), ..estimate_from_census(oracle, dataset, "ssn", seed) });
    }
    if !(0.0..1.0).contains(&pilot_fraction) {
        return Err(Error::InvalidBudget("pilot_fraction must lie in [0,1)".into()));
    }
    let m = (n_total as f64 * pilot_fraction).floor() as usize;
    if m < 2 * h {
        return Err(Error::InvalidBudget(format!(
            "pilot of {m} samples cannot cover {h} strata with 2 each"
        )));
    }
    let before = oracle.calls();
    let rng = Rng::new(seed);

    // stage 1: proportional pilot with at least 2 per stratum
    let pilot_alloc = neyman_allocation(strat.sizes(), &vec![1.0; h], m, 2)?;
    let mut pilot_pos = vec![0usize; h];
    let mut pilot_counts = vec![0usize; h];
    let mut stage2_members: Vec<Vec<u32>> = Vec::with_capacity(h);
    let mut s_hat = vec![0.0f64; h];
    for i in 0..h {
        let mut r = rng.stream_idx("pilot", i as u64);
        let n_i = pilot_alloc.counts[i];
        let drawn = r.choose(strat.members(i), n_i);
        let c = drawn.iter().filter(|&&obj| oracle.eval(obj as usize)).count();
        pilot_pos[i] = c;
        pilot_counts[i] = n_i;
        s_hat[i] = bernoulli_sample_variance(c, n_i).sqrt();
        let drawn_set: std::collections::HashSet<u32> = drawn.into_iter().collect();
        stage2_members
            .push(strat.members(i).iter().copied().filter(|x| !drawn_set.contains(x)).collect());
    }

    // stage 2: Neyman allocation of the remainder over the reduced frame
    let n2 = n_total - m;
    let remaining_sizes: Vec<usize> = stage2_members.iter().map(Vec::len).collect();
    let alloc = match neyman_allocation(&remaining_sizes, &s_hat, n2, 2) {
        Ok(a) => a,
        Err(Error::InfeasibleAllocation(_)) => {
            warn!("ssn: stage-2 floor of 2 infeasible, dropping the floor");
            neyman_allocation(&remaining_sizes, &s_hat, n2, 0)?
        }
        Err(e) => return Err(e),
    };

    let mut count = 0.0;
    let mut var_weights = Vec::new();
    let mut var_stddevs = Vec::new();
    let mut var_alloc = Vec::new();
    let frame: usize = remaining_sizes.iter().sum();
    for i in 0..h {
        count += pilot_pos[i] as f64;
        let n_i = alloc.counts[i];
        let size_i = remaining_sizes[i];
        if size_i == 0 {
            continue;
        }
        if n_i == 0 {
            // zero-spread stratum left unsampled in stage 2; fall back to
            // the pilot proportion for both the point estimate and variance
            warn!("ssn: stratum {i} unsampled in stage 2, using pilot proportion");
            let p_i = pilot_pos[i] as f64 / pilot_counts[i] as f64;
            count += size_i as f64 * p_i;
            var_weights.push(size_i as f64 / frame as f64);
            var_stddevs.push(s_hat[i]);
            var_alloc.push(pilot_counts[i]);
            continue;
        }
        let mut r = rng.stream_idx("stage2", i as u64);
        let drawn = r.choose(&stage2_members[i], n_i);
        let c = drawn.iter().filter(|&&obj| oracle.eval(obj as usize)).count();
        let p_i = c as f64 / n_i as f64;
        count += size_i as f64 * p_i;
        var_weights.push(size_i as f64 / frame as f64);
        var_stddevs.push(bernoulli_sample_variance(c, n_i).sqrt());
        var_alloc.push(n_i);
    }

    let var_count = if frame > 0 {
        let wsum: f64 = var_weights.iter().sum();
        // weights over the reduced frame sum to 1 by construction
        debug_assert!((wsum - 1.0).abs() < 1e-9);
        stratified_variance(&var_weights, &var_stddevs, &var_alloc, frame)?.max(0.0)
            * (frame as f64).powi(2)
    } else {
        0.0
    };
    let z = z_quantile(alpha);
    let half = z * var_count.sqrt();
    Ok(Estimate {
        count,
        proportion: Estimate::proportion_of(count, total),
        variance: Some(var_count),
        ci: Some((count - half, count + half)),
        oracle_calls: oracle.calls() - before,
        method: "ssn".into(),
        seed,
        overhead: Default::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::DataPoint;
    use crate::predicates::Predicate;
    use crate::rng::Rng;
    use proptest::prelude::*;

    fn labeled_dataset(labels: &[bool]) -> Dataset {
        let pts = labels
            .iter()
            .enumerate()
            .map(|(i, _)| DataPoint::new(i as u64, vec![i as f64, (i * 7 % 13) as f64]))
            .collect();
        Dataset::new(pts, 2).unwrap()
    }

    #[test]
    fn proportional_symmetric() {
        assert_eq!(proportional_allocation(&[50, 50], 10).unwrap().counts, vec![5, 5]);
    }

    #[test]
    fn proportional_largest_remainder() {
        assert_eq!(proportional_allocation(&[30, 70], 10).unwrap().counts, vec![3, 7]);
    }

    #[test]
    fn proportional_caps_and_redistributes() {
        assert_eq!(proportional_allocation(&[1, 99], 50).unwrap().counts, vec![1, 49]);
    }

    #[test]
    fn neyman_zero_variance_stratum_gets_nothing() {
        let a = neyman_allocation(&[50, 50], &[0.0, 0.5], 10, 0).unwrap();
        assert_eq!(a.counts, vec![0, 10]);
    }

    #[test]
    fn neyman_direct_proportionality() {
        let a = neyman_allocation(&[30, 70], &[0.1, 0.4], 31, 0).unwrap();
        assert_eq!(a.counts, vec![3, 28]);
    }

    #[test]
    fn neyman_all_zero_falls_back_to_proportional() {
        let a = neyman_allocation(&[50, 50], &[0.0, 0.0], 10, 2).unwrap();
        assert_eq!(a.counts, vec![5, 5]);
    }

    #[test]
    fn neyman_infeasible_floor() {
        assert!(matches!(
            neyman_allocation(&[50, 50], &[0.1, 0.1], 3, 2),
            Err(Error::InfeasibleAllocation(_))
        ));
    }

    #[test]
    fn grid_identical_points_single_stratum() {
        let pts = (0..5).map(|i| DataPoint::new(i, vec![2.0, 3.0])).collect();
        let ds = Dataset::new(pts, 2).unwrap();
        let s = grid_stratify(&ds, 9).unwrap();
        assert_eq!(s.strata(), 1);
        assert_eq!(s.sizes(), &[5]);
    }

    #[test]
    fn grid_four_corners() {
        let pts = vec![
            DataPoint::new(0, vec![0.0, 0.0]),
            DataPoint::new(1, vec![1.0, 0.0]),
            DataPoint::new(2, vec![0.0, 1.0]),
            DataPoint::new(3, vec![1.0, 1.0]),
        ];
        let ds = Dataset::new(pts, 2).unwrap();
        let s = grid_stratify(&ds, 4).unwrap();
        assert_eq!(s.strata(), 4);
        assert_eq!(s.sizes(), &[1, 1, 1, 1]);
    }

    #[test]
    fn grid_midpoint_goes_right() {
        let pts = vec![
            DataPoint::new(0, vec![0.0, 0.0]),
            DataPoint::new(1, vec![0.5, 0.0]),
            DataPoint::new(2, vec![1.0, 0.0]),
        ];
        let ds = Dataset::new(pts, 2).unwrap();
        let s = grid_stratify(&ds, 4).unwrap();
        // midpoint shares the right column with the max point
        assert_eq!(s.stratum_of(1), s.stratum_of(2));
        assert_ne!(s.stratum_of(0), s.stratum_of(1));
    }

    #[test]
    fn grid_rejects_non_square() {
        let ds = labeled_dataset(&[true, false]);
        assert!(grid_stratify(&ds, 8).is_err());
    }

    #[test]
    fn srs_census_is_exact() {
        let labels = vec![true, false, true, true, false];
        let ds = labeled_dataset(&labels);
        let oracle = CountingOracle::new(&ds, Predicate::Labels(labels.clone())).unwrap();
        let e = srs_estimate(&oracle, &ds, 5, 0.05, 1).unwrap();
        assert_eq!(e.count, 3.0);
        let (lo, hi) = e.ci.unwrap();
        assert_eq!(lo, hi);
    }

    #[test]
    fn srs_all_negative() {
        let labels = vec![false; 10];
        let ds = labeled_dataset(&labels);
        let oracle = CountingOracle::new(&ds, Predicate::Labels(labels.clone())).unwrap();
        let e = srs_estimate(&oracle, &ds, 4, 0.05, 3).unwrap();
        assert_eq!(e.count, 0.0);
        assert_eq!(e.ci.unwrap(), (0.0, 0.0));
        assert_eq!(e.oracle_calls, 4);
    }

    #[test]
    fn srs_seeded_replay() {
        let labels: Vec<bool> = (0..20).map(|i| i % 3 == 0).collect();
        let ds = labeled_dataset(&labels);
        let oracle = CountingOracle::new(&ds, Predicate::Labels(labels.clone())).unwrap();
        let e = srs_estimate(&oracle, &ds, 8, 0.05, 1234).unwrap();
        // replay the identical seeded draw independently
        let drawn = Rng::new(1234).stream("srs").sample_indices(20, 8);
        let pos = drawn.iter().filter(|&&i| labels[i]).count();
        let expect = pos as f64 / 8.0 * 20.0;
        assert_eq!(e.count, expect);
    }

    #[test]
    fn stratified_full_sampling_exact() {
        let labels: Vec<bool> = (0..12).map(|i| i < 5).collect();
        let ds = labeled_dataset(&labels);
        let oracle = CountingOracle::new(&ds, Predicate::Labels(labels.clone())).unwrap();
        let assignment: Vec<u32> = (0..12).map(|i| (i % 3) as u32).collect();
        let strat = Stratification::from_assignment(&assignment).unwrap();
        let alloc = Allocation { counts: strat.sizes().to_vec() };
        let e = stratified_estimate(&oracle, &ds, &strat, &alloc, 0.05, 7).unwrap();
        assert!((e.count - 5.0).abs() < 1e-9);
        assert!(e.variance.unwrap().abs() < 1e-12);
    }

    #[test]
    fn stratified_homogeneous_strata_exact() {
        // labels constant within each stratum
        let labels: Vec<bool> = (0..20).map(|i| i < 10).collect();
        let ds = labeled_dataset(&labels);
        let oracle = CountingOracle::new(&ds, Predicate::Labels(labels.clone())).unwrap();
        let assignment: Vec<u32> = (0..20).map(|i| u32::from(i >= 10)).collect();
        let strat = Stratification::from_assignment(&assignment).unwrap();
        let alloc = Allocation { counts: vec![4, 4] };
        let e = stratified_estimate(&oracle, &ds, &strat, &alloc, 0.05, 5).unwrap();
        assert!((e.count - 10.0).abs() < 1e-9);
        assert!(e.variance.unwrap().abs() < 1e-12);
    }

    #[test]
    fn stratified_seeded_replay_matches_formula() {
        let labels: Vec<bool> = vec![
            true, false, true, false, true, false, false, false, true, true,
        ];
        let ds = labeled_dataset(&labels);
        let oracle = CountingOracle::new(&ds, Predicate::Labels(labels.clone())).unwrap();
        let assignment: Vec<u32> = (0..10).map(|i| u32::from(i >= 6)).collect();
        let strat = Stratification::from_assignment(&assignment).unwrap();
        let alloc = Allocation { counts: vec![3, 2] };
        let seed = 99;
        let e = stratified_estimate(&oracle, &ds, &strat, &alloc, 0.05, seed).unwrap();

        // independent replay of the same seeded draws plus direct Eq. (1)
        let rng = Rng::new(seed);
        let mut p_hat = 0.0;
        let mut weights = Vec::new();
        let mut sds = Vec::new();
        for h in 0..2 {
            let mut r = rng.stream_idx("stratum", h as u64);
            let drawn = r.choose(strat.members(h), alloc.counts[h]);
            let c = drawn.iter().filter(|&&i| labels[i as usize]).count();
            let n_h = alloc.counts[h] as f64;
            p_hat += strat.sizes()[h] as f64 / 10.0 * (c as f64 / n_h);
            weights.push(strat.sizes()[h] as f64 / 10.0);
            sds.push(bernoulli_sample_variance(c, alloc.counts[h]).sqrt());
        }
        let var = stratified_variance(&weights, &sds, &alloc.counts, 10).unwrap();
        assert!((e.count - p_hat * 10.0).abs() < 1e-12);
        assert!((e.variance.unwrap() - var.max(0.0) * 100.0).abs() < 1e-9);
    }

    #[test]
    fn stratified_rejects_empty_allocation() {
        let labels = vec![true; 8];
        let ds = labeled_dataset(&labels);
        let oracle = CountingOracle::new(&ds, Predicate::Labels(labels.clone())).unwrap();
        let assignment: Vec<u32> = (0..8).map(|i| (i % 2) as u32).collect();
        let strat = Stratification::from_assignment(&assignment).unwrap();
        let alloc = Allocation { counts: vec![2, 0] };
        assert!(matches!(
            stratified_estimate(&oracle, &ds, &strat, &alloc, 0.05, 1),
            Err(Error::EmptyAllocation(1))
        ));
    }

    #[test]
    fn ssn_census_is_exact() {
        let labels: Vec<bool> = (0..15).map(|i| i % 4 == 0).collect();
        let ds = labeled_dataset(&labels);
        let oracle = CountingOracle::new(&ds, Predicate::Labels(labels.clone())).unwrap();
        let assignment: Vec<u32> = (0..15).map(|i| (i % 2) as u32).collect();
        let strat = Stratification::from_assignment(&assignment).unwrap();
        let e = ssn_estimate(&oracle, &ds, &strat, 15, 0.25, 0.05, 3).unwrap();
        assert_eq!(e.count, 4.0);
    }

    #[test]
    fn ssn_homogeneous_strata() {
        let labels: Vec<bool> = (0..40).map(|i| i < 20).collect();
        let ds = labeled_dataset(&labels);
        let oracle = CountingOracle::new(&ds, Predicate::Labels(labels.clone())).unwrap();
        let assignment: Vec<u32> = (0..40).map(|i| u32::from(i >= 20)).collect();
        let strat = Stratification::from_assignment(&assignment).unwrap();
        let e = ssn_estimate(&oracle, &ds, &strat, 20, 0.5, 0.05, 11).unwrap();
        // pilot sees constant labels per stratum; stage 2 proportional;
        // all sampled labels match the stratum constant, so exact
        assert!((e.count - 20.0).abs() < 1e-9);
        assert!(e.oracle_calls <= 20);
    }

    #[test]
    fn ssn_beats_ssp_on_separable_strata() {
        // Neyman optimality shows up as lower empirical variance at equal
        // budget when one stratum is homogeneous and the other mixed.
        let mut labels = vec![false; 100];
        for (i, l) in labels.iter_mut().enumerate() {
            // stratum 0 (indices < 50): all negative. stratum 1: half positive.
            if i >= 50 && i % 2 == 0 {
                *l = true;
            }
        }
        let ds = labeled_dataset(&labels);
        let assignment: Vec<u32> = (0..100).map(|i| u32::from(i >= 50)).collect();
        let strat = Stratification::from_assignment(&assignment).unwrap();
        let truth = 25.0;
        let trials = 500;
        let budget = 30;
        let (mut var_ssn, mut var_ssp) = (0.0, 0.0);
        for t in 0..trials {
            let oracle = CountingOracle::new(&ds, Predicate::Labels(labels.clone())).unwrap();
            let e = ssn_estimate(&oracle, &ds, &strat, budget, 0.4, 0.05, t as u64).unwrap();
            var_ssn += (e.count - truth) * (e.count - truth);
            let oracle = CountingOracle::new(&ds, Predicate::Labels(labels.clone())).unwrap();
            let alloc = proportional_allocation(strat.sizes(), budget).unwrap();
            let e = stratified_estimate(&oracle, &ds, &strat, &alloc, 0.05, t as u64).unwrap();
            var_ssp += (e.count - truth) * (e.count - truth);
        }
        assert!(
            var_ssn <= var_ssp,
            "ssn mse {} vs ssp mse {}",
            var_ssn / trials as f64,
            var_ssp / trials as f64
        );
    }

    proptest! {
        #[test]
        fn allocations_sum_and_respect_caps(
            sizes in proptest::collection::vec(1usize..200, 2..6),
            frac in 0.05f64..0.95,
            s in proptest::collection::vec(0.0f64..1.0, 2..6),
        ) {
            let h = sizes.len().min(s.len());
            let sizes = &sizes[..h];
            let s = &s[..h];
            let total: usize = sizes.iter().sum();
            let n = ((total as f64 * frac) as usize).max(1);
            let a = proportional_allocation(sizes, n).unwrap();
            prop_assert_eq!(a.counts.iter().sum::<usize>(), n);
            prop_assert!(a.counts.iter().zip(sizes).all(|(&c, &cap)| c <= cap));
            let b = neyman_allocation(sizes, s, n, 0).unwrap();
            prop_assert_eq!(b.counts.iter().sum::<usize>(), n);
            prop_assert!(b.counts.iter().zip(sizes).all(|(&c, &cap)| c <= cap));
        }
    }
}
