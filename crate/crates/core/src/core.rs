//! Shared domain types, ground-truth counting, and confidence-interval
//! arithmetic used by every estimator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predicates::CountingOracle;

/// A single object: a stable id plus a fixed-length feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    pub id: u64,
    pub features: Vec<f64>,
}

impl DataPoint {
    pub fn new(id: u64, features: Vec<f64>) -> Self {
        DataPoint { id, features }
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.features[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.features[1]
    }
}

/// The universe of objects. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Dataset {
    points: Vec<DataPoint>,
    dimension: usize,
}

impl Dataset {
    pub fn new(points: Vec<DataPoint>, dimension: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("dataset must contain at least one point".into()));
        }
        if dimension == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let mut ids: Vec<u64> = points.iter().map(|p| p.id).collect();
        ids.sort_unstable();
        for w in ids.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateId(w[0]));
            }
        }
        for p in &points {
            if p.features.len() != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, got: p.features.len() });
            }
        }
        Ok(Dataset { points, dimension })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // construction requires at least one point
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    #[inline]
    pub fn point(&self, index: usize) -> &DataPoint {
        &self.points[index]
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }
}

/// Wall-clock overhead of an estimator broken down by phase, in
/// milliseconds. Oracle-call time is excluded; this tracks only the
/// machinery added on top of labeling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseOverhead {
    pub learn_ms: f64,
    pub design_ms: f64,
    pub apply_ms: f64,
}

impl PhaseOverhead {
    pub fn total_ms(&self) -> f64 {
        self.learn_ms + self.design_ms + self.apply_ms
    }
}

/// Result of an estimation run.
///
/// `ci` when present always satisfies lo <= hi; it brackets the estimator,
/// not necessarily the point estimate. Counts are real-valued and never
/// rounded, so error metrics stay unbiased.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Estimate {
    pub count: f64,
    pub proportion: Option<f64>,
    pub variance: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub oracle_calls: usize,
    pub method: String,
    pub seed: u64,
    #[serde(default)]
    pub overhead: PhaseOverhead,
}

impl Estimate {
    /// Proportion field helper: defined only when count/N lands in [0,1].
    pub fn proportion_of(count: f64, universe: usize) -> Option<f64> {
        let p = count / universe as f64;
        if (0.0..=1.0).contains(&p) {
            Some(p)
        } else {
            None
        }
    }
}

/// Sampling budget shared by the learning, design, and estimation phases.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Budget {
    pub total_samples: usize,
    pub learn_fraction: f64,
    pub design_fraction: f64,
}

impl Budget {
    pub fn new(total_samples: usize, learn_fraction: f64, design_fraction: f64) -> Result<Self> {
        if total_samples == 0 {
            return Err(Error::InvalidBudget("total_samples must be positive".into()));
        }
        if !(0.0..1.0).contains(&learn_fraction) || !(0.0..1.0).contains(&design_fraction) {
            return Err(Error::InvalidBudget("fractions must lie in [0, 1)".into()));
        }
        if learn_fraction + design_fraction >= 1.0 {
            return Err(Error::InvalidBudget(
                "learn_fraction + design_fraction must be below 1".into(),
            ));
        }
        Ok(Budget { total_samples, learn_fraction, design_fraction })
    }

    pub fn learn_samples(&self) -> usize {
        (self.total_samples as f64 * self.learn_fraction).floor() as usize
    }

    pub fn design_samples(&self) -> usize {
        (self.total_samples as f64 * self.design_fraction).floor() as usize
    }

    pub fn estimation_samples(&self) -> usize {
        self.total_samples - self.learn_samples() - self.design_samples()
    }
}

/// Counts positives exactly by evaluating the predicate on every object.
/// Costs exactly N oracle calls.
pub fn exact_count(oracle: &CountingOracle, dataset: &Dataset) -> usize {
    (0..dataset.len()).filter(|&i| oracle.eval(i)).count()
}

/// Horner evaluation with coefficients ordered low to high degree.
fn horner(r: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c)
}

/// Inverse of the standard normal CDF (Wichura's AS 241, PPND16 variant).
/// Accurate to well below 1e-8 over (0, 1).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "inverse_normal_cdf domain is (0,1), got {p}");
    const A: [f64; 8] = [
        3.387_132_872_796_366_5,
        1.331_416_678_917_843_8e2,
        1.971_590_950_306_551_3e3,
        1.373_169_376_550_946e4,
        4.592_195_393_154_987e4,
        6.726_577_092_700_87e4,
        3.343_057_558_358_813e4,
        2.509_080_928_730_122_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091e1,
        6.871_870_074_920_579e2,
        5.394_196_021_424_751e3,
        2.121_379_430_158_659_7e4,
        3.930_789_580_009_271e4,
        2.872_908_573_572_194_3e4,
        5.226_495_278_852_545_5e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_5,
        4.630_337_846_156_545,
        5.769_497_221_460_691,
        3.647_848_324_763_204_5,
        1.270_458_252_452_368_4,
        2.417_807_251_774_506e-1,
        2.272_384_498_926_918_4e-2,
        7.745_450_142_783_414e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_8,
        1.676_384_830_183_803_8,
        6.897_673_349_851e-1,
        1.481_039_764_274_8e-1,
        1.519_866_656_361_645_7e-2,
        5.475_938_084_995_345e-4,
        1.050_750_071_644_416_9e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103,
        5.463_784_911_164_114,
        1.784_826_539_917_291_3,
        2.965_605_718_285_048_7e-1,
        2.653_218_952_657_612_4e-2,
        1.242_660_947_388_078_4e-3,
        2.711_555_568_743_487_6e-5,
        2.010_334_399_292_288_1e-7,
    ];
    const F: [f64; 7] = [
        1.0,
        5.998_322_065_558_88e-1,
        1.369_298_809_227_358e-1,
        1.487_536_129_085_061_5e-2,
        7.868_691_311_456_133e-4,
        1.846_318_317_510_054_8e-6,
        1.421_511_758_316_445_9e-15,
    ];
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * horner(r, &A) / horner(r, &B);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        horner(r, &C) / horner(r, &D)
    } else {
        r -= 5.0;
        horner(r, &E) / horner(r, &F)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Two-sided normal quantile for a (1 - alpha) confidence level.
pub fn z_quantile(alpha: f64) -> f64 {
    inverse_normal_cdf(1.0 - alpha / 2.0)
}

fn fpc(n: usize, total: usize) -> f64 {
    if total > 1 {
        (total - n) as f64 / (total - 1) as f64
    } else {
        0.0
    }
}

/// Wald interval for a proportion under sampling without replacement,
/// with the finite-population correction. Clamped to [0, 1].
pub fn wald_interval(p_hat: f64, n: usize, total: usize, alpha: f64) -> (f64, f64) {
    let z = z_quantile(alpha);
    let se = (p_hat * (1.0 - p_hat) / n as f64 * fpc(n, total)).sqrt();
    ((p_hat - z * se).max(0.0), (p_hat + z * se).min(1.0))
}

/// Wilson score interval with the finite-population correction applied to
/// the variance term. Non-degenerate at p_hat in {0, 1} whenever n < N.
pub fn wilson_interval(p_hat: f64, n: usize, total: usize, alpha: f64) -> (f64, f64) {
    let z = z_quantile(alpha);
    let t = z * z * fpc(n, total) / n as f64;
    let center = (p_hat + t / 2.0) / (1.0 + t);
    let half = (t * p_hat * (1.0 - p_hat) + t * t / 4.0).sqrt() / (1.0 + t);
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Variance of the stratified proportion estimator:
/// sum W_h^2 S_h^2 / n_h - (1/N) sum W_h S_h^2.
pub fn stratified_variance(
    weights: &[f64],
    stddevs: &[f64],
    alloc: &[usize],
    total: usize,
) -> Result<f64> {
    if weights.len() != stddevs.len() || weights.len() != alloc.len() {
        return Err(Error::InvalidInput("stratified_variance: length mismatch".into()));
    }
    let wsum: f64 = weights.iter().sum();
    if (wsum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "stratified_variance: weights sum to {wsum}, expected 1"
        )));
    }
    let mut first = 0.0;
    let mut second = 0.0;
    for (h, ((&w, &s), &n_h)) in weights.iter().zip(stddevs).zip(alloc).enumerate() {
        if n_h == 0 {
            return Err(Error::EmptyAllocation(h));
        }
        first += w * w * s * s / n_h as f64;
        second += w * s * s;
    }
    Ok(first - second / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicates::Predicate;
    use proptest::prelude::*;

    fn tiny_dataset(n: usize) -> Dataset {
        let pts = (0..n).map(|i| DataPoint::new(i as u64, vec![i as f64, i as f64])).collect();
        Dataset::new(pts, 2).unwrap()
    }

    #[test]
    fn exact_count_all_negative() {
        let ds = tiny_dataset(5);
        let oracle = CountingOracle::new(&ds, Predicate::Labels(vec![false; 5])).unwrap();
        assert_eq!(exact_count(&oracle, &ds), 0);
        assert_eq!(oracle.calls(), 5);
    }

    #[test]
    fn exact_count_all_positive() {
        let ds = tiny_dataset(5);
        let oracle = CountingOracle::new(&ds, Predicate::Labels(vec![true; 5])).unwrap();
        assert_eq!(exact_count(&oracle, &ds), 5);
        assert_eq!(oracle.calls(), 5);
    }

    #[test]
    fn exact_count_skyband_diagonal() {
        // (1,1),(2,2),(3,3): only (3,3) is undominated, so k=1 keeps one.
        let pts = vec![
            DataPoint::new(0, vec![1.0, 1.0]),
            DataPoint::new(1, vec![2.0, 2.0]),
            DataPoint::new(2, vec![3.0, 3.0]),
        ];
        let ds = Dataset::new(pts, 2).unwrap();
        let oracle = CountingOracle::new(&ds, Predicate::skyband(1)).unwrap();
        assert_eq!(exact_count(&oracle, &ds), 1);
        assert_eq!(oracle.calls(), 3);
    }

    #[test]
    fn exact_count_sums_over_partitions() {
        let labels = [true, false, true, true, false, false, true];
        let ds = tiny_dataset(labels.len());
        let oracle = CountingOracle::new(&ds, Predicate::Labels(labels.to_vec())).unwrap();
        let total = exact_count(&oracle, &ds);
        let part_a: usize = (0..3).filter(|&i| labels[i]).count();
        let part_b: usize = (3..7).filter(|&i| labels[i]).count();
        assert_eq!(total, part_a + part_b);
    }

    #[test]
    fn z_quantile_reference_values() {
        assert!((z_quantile(0.05) - 1.959_963_985).abs() < 1e-8);
        assert!((z_quantile(0.10) - 1.644_853_627).abs() < 1e-8);
        assert!((z_quantile(0.01) - 2.575_829_304).abs() < 1e-8);
    }

    #[test]
    fn inverse_normal_cdf_matches_statrs() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let n = Normal::new(0.0, 1.0).unwrap();
        for &p in &[1e-8, 1e-4, 0.01, 0.3, 0.5, 0.77, 0.975, 0.9999, 1.0 - 1e-9] {
            let ours = inverse_normal_cdf(p);
            let reference = n.inverse_cdf(p);
            assert!((ours - reference).abs() < 1e-7, "p={p}: {ours} vs {reference}");
        }
    }

    #[test]
    fn wald_zero_proportion_is_degenerate() {
        assert_eq!(wald_interval(0.0, 50, 1000, 0.05), (0.0, 0.0));
    }

    #[test]
    fn wald_census_is_degenerate() {
        let (lo, hi) = wald_interval(0.5, 100, 100, 0.05);
        assert_eq!((lo, hi), (0.5, 0.5));
    }

    #[test]
    fn wald_direct_formula() {
        let (lo, hi) = wald_interval(0.5, 100, 10_000, 0.05);
        assert!((lo - 0.40249).abs() < 1e-4, "lo {lo}");
        assert!((hi - 0.59751).abs() < 1e-4, "hi {hi}");
    }

    #[test]
    fn wilson_census_is_degenerate() {
        assert_eq!(wilson_interval(0.5, 100, 100, 0.05), (0.5, 0.5));
    }

    #[test]
    fn wilson_nonzero_width_at_boundary() {
        let (lo, hi) = wilson_interval(0.0, 10, 1_000_000, 0.05);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
    }

    #[test]
    fn wilson_against_independent_root_solve() {
        // The Wilson bounds solve |p_hat - p| = z * sqrt(p(1-p) * fpc / n).
        // Bisect that equation directly as an independent reference.
        let (p_hat, n, total, alpha) = (0.3, 100usize, 1_000_000usize, 0.05);
        let z = z_quantile(alpha);
        let f = (total - n) as f64 / (total - 1) as f64;
        let g = |p: f64| (p - p_hat).abs() - z * (p * (1.0 - p) * f / n as f64).sqrt();
        let bisect = |mut lo: f64, mut hi: f64| {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let expect_lo = bisect(0.0, p_hat);
        let expect_hi = {
            let mut lo = p_hat;
            let mut hi = 1.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let (lo, hi) = wilson_interval(p_hat, n, total, alpha);
        assert!((lo - expect_lo).abs() < 1e-9, "{lo} vs {expect_lo}");
        assert!((hi - expect_hi).abs() < 1e-9, "{hi} vs {expect_hi}");
    }

    #[test]
    fn stratified_variance_homogeneous_strata() {
        let v = stratified_variance(&[0.5, 0.5], &[0.0, 0.0], &[3, 3], 100).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn stratified_variance_single_stratum() {
        let v = stratified_variance(&[1.0], &[0.5], &[10], 100).unwrap();
        assert!((v - 0.0225).abs() < 1e-12);
    }

    #[test]
    fn stratified_variance_two_strata() {
        let v = stratified_variance(&[0.5, 0.5], &[0.0, 0.5], &[5, 5], 100).unwrap();
        assert!((v - 0.01125).abs() < 1e-12);
    }

    #[test]
    fn stratified_variance_rejects_empty_allocation() {
        let err = stratified_variance(&[0.5, 0.5], &[0.1, 0.1], &[5, 0], 100).unwrap_err();
        assert!(matches!(err, Error::EmptyAllocation(1)));
    }

    #[test]
    fn stratified_variance_reduces_to_srs() {
        // Single stratum with the finite-population Bernoulli variance
        // matches the SRS Wald variance term.
        for &(p, n, total) in &[(0.3, 20usize, 200usize), (0.5, 50, 100), (0.9, 10, 1000)] {
            let s2 = p * (1.0 - p) * total as f64 / (total - 1) as f64;
            let v = stratified_variance(&[1.0], &[s2.sqrt()], &[n], total).unwrap();
            let srs = p * (1.0 - p) / n as f64 * (total - n) as f64 / (total - 1) as f64;
            assert!((v - srs).abs() < 1e-9, "{v} vs {srs}");
        }
    }

    proptest! {
        #[test]
        fn wald_width_shrinks_with_n(p in 0.0f64..=1.0, total in 100usize..5000, frac in 0.05f64..0.9) {
            let n1 = ((total as f64) * frac * 0.5).max(1.0) as usize;
            let n2 = ((total as f64) * frac).max(2.0) as usize;
            prop_assume!(n1 < n2 && n2 <= total);
            let w1 = {
                let (lo, hi) = wald_interval(p, n1, total, 0.05);
                hi - lo
            };
            let w2 = {
                let (lo, hi) = wald_interval(p, n2, total, 0.05);
                hi - lo
            };
            prop_assert!(w2 <= w1 + 1e-12);
        }

        #[test]
        fn intervals_are_ordered_and_bounded(p in 0.0f64..=1.0, n in 1usize..500, extra in 0usize..5000) {
            let total = n + extra;
            for (lo, hi) in [wald_interval(p, n, total, 0.05), wilson_interval(p, n, total, 0.05)] {
                prop_assert!(lo <= hi);
                prop_assert!((0.0..=1.0).contains(&lo));
                prop_assert!((0.0..=1.0).contains(&hi));
            }
        }
    }
}
