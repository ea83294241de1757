//! Synthetic dataset and noise-table generators for controlled-difficulty
//! experiments. Everything is driven by the crate's portable RNG so outputs
//! are identical across platforms for a given seed.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::core::{DataPoint, Dataset};
use crate::error::{Error, Result};
use crate::predicates::NoiseTable;
use crate::rng::Rng;

/// Point-cloud flavors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    /// Uniform over the unit square.
    Uniform2d,
    /// Two Gaussian blobs five standard deviations apart with distinct
    /// densities, so proximity-based predicates correlate with position.
    Clustered2d,
}

/// Noise-table flavors for the mixing protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseSpec {
    Gaussian { seed: u64 },
    Zipf { s: f64, seed: u64 },
}

/// Generates a seeded 2-d dataset with ids 0..n-1.
pub fn generate_points(kind: PointKind, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one point".into()));
    }
    let mut rng = Rng::new(seed).stream("generate-points");
    let points: Vec<DataPoint> = match kind {
        PointKind::Uniform2d => (0..n)
            .map(|i| DataPoint::new(i as u64, vec![rng.next_f64(), rng.next_f64()]))
            .collect(),
        PointKind::Clustered2d => {
            // dense blob at the origin, a sparse one 5 sigma away; roughly
            // 70/30 membership
            (0..n)
                .map(|i| {
                    let dense = rng.next_f64() < 0.7;
                    let (cx, cy, sd) = if dense { (0.0, 0.0, 1.0) } else { (5.0, 5.0, 1.0) };
                    let x = cx + sd * rng.normal();
                    let y = cy + sd * rng.normal();
                    DataPoint::new(i as u64, vec![x, y])
                })
                .collect()
        }
    };
    Dataset::new(points, 2)
}

/// Noise counts c' = max(0, round(c + z)) with z standard normal, one draw
/// per id, fixed for a given seed.
pub fn gaussian_noise_table(base_counts: &HashMap<u64, u32>, seed: u64) -> NoiseTable {
    let root = Rng::new(seed);
    let counts = base_counts
        .iter()
        .map(|(&id, &c)| {
            let z = root.stream_idx("gaussian-noise", id).normal();
            let v = (c as f64 + z).round().max(0.0) as u32;
            (id, v)
        })
        .collect();
    NoiseTable::new(counts)
}

/// Zipf-ranked noise: the distinct observed count values are randomly
/// permuted, and each id independently draws a rank r with probability
/// proportional to r^-s to pick its noise count from that array.
pub fn zipf_noise_table(base_counts: &HashMap<u64, u32>, s: f64, seed: u64) -> Result<NoiseTable> {
    if s <= 0.0 {
        return Err(Error::InvalidInput("zipf parameter must be positive".into()));
    }
    let mut values: Vec<u32> = {
        let mut v: Vec<u32> = base_counts.values().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let root = Rng::new(seed);
    root.stream("zipf-permutation").shuffle(&mut values);
    // inverse-CDF table over ranks 1..=len
    let mass: Vec<f64> = (1..=values.len()).map(|r| (r as f64).powf(-s)).collect();
    let total: f64 = mass.iter().sum();
    let mut cdf = Vec::with_capacity(mass.len());
    let mut acc = 0.0;
    for m in &mass {
        acc += m / total;
        cdf.push(acc);
    }
    let counts = base_counts
        .keys()
        .map(|&id| {
            let u = root.stream_idx("zipf-draw", id).next_f64();
            let r = cdf.partition_point(|&c| c <= u).min(values.len() - 1);
            (id, values[r])
        })
        .collect();
    Ok(NoiseTable::new(counts))
}

/// Dominance counts for every object, keyed by id; the base counts the
/// noise-mixing protocol perturbs.
pub fn dominance_counts(dataset: &Dataset) -> HashMap<u64, u32> {
    dataset
        .points()
        .iter()
        .map(|p| (p.id, crate::predicates::dominance_count(p, dataset) as u32))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        for kind in [PointKind::Uniform2d, PointKind::Clustered2d] {
            let a = generate_points(kind, 200, 9).unwrap();
            let b = generate_points(kind, 200, 9).unwrap();
            for i in 0..200 {
                assert_eq!(a.point(i).features, b.point(i).features);
            }
        }
    }

    #[test]
    fn uniform_coordinates_in_unit_square() {
        let ds = generate_points(PointKind::Uniform2d, 500, 3).unwrap();
        for p in ds.points() {
            assert!((0.0..1.0).contains(&p.x()) && (0.0..1.0).contains(&p.y()));
        }
    }

    #[test]
    fn clustered_blobs_are_separated() {
        let ds = generate_points(PointKind::Clustered2d, 1000, 5).unwrap();
        let (mut near, mut far) = (0usize, 0usize);
        for p in ds.points() {
            let d0 = p.x() * p.x() + p.y() * p.y();
            let d1 = (p.x() - 5.0).powi(2) + (p.y() - 5.0).powi(2);
            if d0 < d1 {
                near += 1;
            } else {
                far += 1;
            }
        }
        assert!(near > 550 && near < 850, "near {near}");
        assert!(far > 150, "far {far}");
    }

    #[test]
    fn gaussian_noise_zero_base_truncates() {
        let base: HashMap<u64, u32> = (0..2000u64).map(|id| (id, 0)).collect();
        let t = gaussian_noise_table(&base, 4);
        // about half the draws would go negative and get clamped to zero
        let zeros = (0..2000).filter(|&id| t.get(id).unwrap() == 0).count();
        assert!(zeros > 1000, "zeros {zeros}");
    }

    #[test]
    fn gaussian_noise_mean_absolute_deviation() {
        // for large base counts truncation never binds and |c' - c| has the
        // half-normal mean 0.7979 (discretization shifts it slightly)
        let base: HashMap<u64, u32> = (0..100_000u64).map(|id| (id, 1000)).collect();
        let t = gaussian_noise_table(&base, 11);
        let mad: f64 = base
            .iter()
            .map(|(&id, &c)| (t.get(id).unwrap() as f64 - c as f64).abs())
            .sum::<f64>()
            / base.len() as f64;
        assert!((mad - 0.7979).abs() < 0.05, "mad {mad}");
    }

    #[test]
    fn gaussian_noise_fixed_per_seed() {
        let base: HashMap<u64, u32> = (0..100u64).map(|id| (id, id as u32)).collect();
        let a = gaussian_noise_table(&base, 7);
        let b = gaussian_noise_table(&base, 7);
        for id in 0..100 {
            assert_eq!(a.get(id).unwrap(), b.get(id).unwrap());
        }
    }

    #[test]
    fn zipf_extreme_parameter_concentrates() {
        let base: HashMap<u64, u32> = (0..5000u64).map(|id| (id, (id % 17) as u32)).collect();
        let t = zipf_noise_table(&base, 20.0, 13).unwrap();
        let mut freq: HashMap<u32, usize> = HashMap::new();
        for id in 0..5000 {
            *freq.entry(t.get(id).unwrap()).or_default() += 1;
        }
        let top = freq.values().max().unwrap();
        assert!(*top as f64 >= 0.99 * 5000.0, "top {top}");
    }

    #[test]
    fn zipf_rank_probabilities_with_three_values() {
        // P(rank) = (1, 1/2, 1/3)/H_3 = (6/11, 3/11, 2/11)
        let base: HashMap<u64, u32> = (0..60_000u64).map(|id| (id, (id % 3) as u32)).collect();
        let t = zipf_noise_table(&base, 1.0, 21).unwrap();
        let mut freq: HashMap<u32, f64> = HashMap::new();
        for id in 0..60_000 {
            *freq.entry(t.get(id).unwrap()).or_default() += 1.0 / 60_000.0;
        }
        let mut shares: Vec<f64> = freq.values().copied().collect();
        shares.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let expect = [6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0];
        for (got, want) in shares.iter().zip(expect) {
            assert!((got - want).abs() < 0.01, "{got} vs {want}");
        }
    }

    #[test]
    fn zipf_single_value_array() {
        let base: HashMap<u64, u32> = (0..100u64).map(|id| (id, 42)).collect();
        let t = zipf_noise_table(&base, 2.0, 1).unwrap();
        assert!((0..100).all(|id| t.get(id).unwrap() == 42));
    }

    #[test]
    fn mixing_monotone_when_noise_dominates() {
        // noise counts forced above base counts: the mixed value rises with
        // alpha, so the strict-below-k result set shrinks
        use crate::predicates::{noisy_skyband_predicate, NoiseTable};
        let ds = generate_points(PointKind::Uniform2d, 300, 17).unwrap();
        let base = dominance_counts(&ds);
        let noise =
            NoiseTable::new(base.iter().map(|(&id, &c)| (id, c + 5)).collect());
        let size = |alpha: f64| -> usize {
            (0..ds.len())
                .filter(|&i| {
                    noisy_skyband_predicate(ds.point(i), &ds, 12, alpha, &noise).unwrap()
                })
                .count()
        };
        let mut prev = usize::MAX;
        for step in 0..=5 {
            let cur = size(step as f64 * 0.2);
            assert!(cur <= prev, "alpha step {step}: {cur} > {prev}");
            prev = cur;
        }
    }
}
