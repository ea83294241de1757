//! Expensive predicate oracles: k-skyband and few-neighbors tests from the
//! query scenarios, the synthetic noise-mixing wrapper, and the call-counting
//! oracle that makes sampling budgets auditable.

use std::cell::Cell;
use std::collections::HashMap;
use std::time::{Duration, Instant};

use crate::core::{DataPoint, Dataset};
use crate::error::{Error, Result};

/// Number of points in the dataset that dominate `o` (2-d).
pub fn dominance_count(o: &DataPoint, dataset: &Dataset) -> usize {
    let (ox, oy) = (o.x(), o.y());
    dataset
        .points()
        .iter()
        .filter(|p| {
            let (px, py) = (p.x(), p.y());
            px >= ox && py >= oy && (px > ox || py > oy)
        })
        .count()
}

/// k-skyband membership: true iff `o` is dominated by fewer than `k` points.
pub fn skyband_predicate(o: &DataPoint, dataset: &Dataset, k: usize) -> Result<bool> {
    if dataset.dimension() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: dataset.dimension() });
    }
    Ok(dominance_count(o, dataset) < k)
}

/// Number of points within Euclidean distance `d` of `o`.
pub fn neighbor_count(o: &DataPoint, dataset: &Dataset, d: f64, include_self: bool) -> usize {
    let d2 = d * d;
    dataset
        .points()
        .iter()
        .filter(|p| {
            if !include_self && p.id == o.id {
                return false;
            }
            let dx = p.x() - o.x();
            let dy = p.y() - o.y();
            dx * dx + dy * dy <= d2
        })
        .count()
}

/// Few-neighbors test: true iff `o` has at most `k` other points within
/// distance `d`.
pub fn neighbors_predicate(o: &DataPoint, dataset: &Dataset, k: usize, d: f64) -> bool {
    neighbor_count(o, dataset, d, false) <= k
}

/// Per-id noise counts used by the synthetic mixing protocol. Generated once
/// per seed and reused across trials.
#[derive(Debug, Clone)]
pub struct NoiseTable {
    counts: HashMap<u64, u32>,
}

impl NoiseTable {
    pub fn new(counts: HashMap<u64, u32>) -> Self {
        NoiseTable { counts }
    }

    pub fn get(&self, id: u64) -> Result<u32> {
        self.counts.get(&id).copied().ok_or(Error::MissingNoiseEntry(id))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// True when every dataset id has an entry.
    pub fn covers(&self, dataset: &Dataset) -> bool {
        dataset.points().iter().all(|p| self.counts.contains_key(&p.id))
    }
}

/// Skyband test on the noise-mixed count (1-alpha) * c + alpha * c'.
pub fn noisy_skyband_predicate(
    o: &DataPoint,
    dataset: &Dataset,
    k: usize,
    alpha: f64,
    noise: &NoiseTable,
) -> Result<bool> {
    if dataset.dimension() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: dataset.dimension() });
    }
    let c = dominance_count(o, dataset) as f64;
    let c_noise = noise.get(o.id)? as f64;
    Ok((1.0 - alpha) * c + alpha * c_noise < k as f64)
}

/// Predicate configuration. Skyband uses a strict `< k` comparator and
/// neighbors a non-strict `<= k` by default; both are parameters.
/// `include_self` restores the SQL self-join semantics that count the
/// object's own zero-distance pair.
#[derive(Debug, Clone)]
pub enum Predicate {
    Skyband { k: usize, strict: bool },
    Neighbors { k: usize, d: f64, include_self: bool, strict: bool },
    NoisySkyband { k: usize, alpha: f64, noise: NoiseTable, strict: bool },
    /// Precomputed truth labels indexed by object position. Stands in for a
    /// predicate whose evaluations were materialized up front.
    Labels(Vec<bool>),
}

impl Predicate {
    pub fn skyband(k: usize) -> Self {
        Predicate::Skyband { k, strict: true }
    }

    pub fn neighbors(k: usize, d: f64) -> Self {
        Predicate::Neighbors { k, d, include_self: false, strict: false }
    }

    pub fn noisy_skyband(k: usize, alpha: f64, noise: NoiseTable) -> Self {
        Predicate::NoisySkyband { k, alpha, noise, strict: true }
    }

    fn needs_2d(&self) -> bool {
        matches!(
            self,
            Predicate::Skyband { .. } | Predicate::Neighbors { .. } | Predicate::NoisySkyband { .. }
        )
    }
}

fn compare(count: f64, k: f64, strict: bool) -> bool {
    if strict {
        count < k
    } else {
        count <= k
    }
}

/// Wraps a predicate and counts every evaluation. One oracle per trial; the
/// counter is the unit of sampling cost regardless of how much internal work
/// a single evaluation does.
pub struct CountingOracle<'d> {
    dataset: &'d Dataset,
    predicate: Predicate,
    calls: Cell<usize>,
    simulated_cost: Option<Duration>,
    oracle_time: Cell<Duration>,
}

impl<'d> CountingOracle<'d> {
    pub fn new(dataset: &'d Dataset, predicate: Predicate) -> Result<Self> {
        if predicate.needs_2d() && dataset.dimension() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: dataset.dimension() });
        }
        if let Predicate::NoisySkyband { noise, alpha, .. } = &predicate {
            if !noise.covers(dataset) {
                let missing = dataset
                    .points()
                    .iter()
                    .find(|p| noise.get(p.id).is_err())
                    .map(|p| p.id)
                    .unwrap_or_default();
                return Err(Error::MissingNoiseEntry(missing));
            }
            if !(0.0..=1.0).contains(alpha) {
                return Err(Error::InvalidInput(format!("alpha {alpha} outside [0,1]")));
            }
        }
        if let Predicate::Labels(labels) = &predicate {
            if labels.len() != dataset.len() {
                return Err(Error::InvalidInput(format!(
                    "label table has {} entries for {} objects",
                    labels.len(),
                    dataset.len()
                )));
            }
        }
        Ok(CountingOracle {
            dataset,
            predicate,
            calls: Cell::new(0),
            simulated_cost: None,
            oracle_time: Cell::new(Duration::ZERO),
        })
    }

    /// Adds a fixed artificial delay to every call, for overhead studies.
    pub fn with_simulated_cost(mut self, cost: Duration) -> Self {
        self.simulated_cost = Some(cost);
        self
    }

    pub fn dataset(&self) -> &Dataset {
        self.dataset
    }

    /// Evaluates the predicate on the object at `index`, charging one call.
    pub fn eval(&self, index: usize) -> bool {
        let start = Instant::now();
        self.calls.set(self.calls.get() + 1);
        let o = self.dataset.point(index);
        let res = match &self.predicate {
            Predicate::Skyband { k, strict } => {
                compare(dominance_count(o, self.dataset) as f64, *k as f64, *strict)
            }
            Predicate::Neighbors { k, d, include_self, strict } => compare(
                neighbor_count(o, self.dataset, *d, *include_self) as f64,
                *k as f64,
                *strict,
            ),
            Predicate::NoisySkyband { k, alpha, noise, strict } => {
                let c = dominance_count(o, self.dataset) as f64;
                let c_noise = noise.get(o.id).expect("coverage checked at construction") as f64;
                compare((1.0 - alpha) * c + alpha * c_noise, *k as f64, *strict)
            }
            Predicate::Labels(labels) => labels[index],
        };
        if let Some(cost) = self.simulated_cost {
            std::thread::sleep(cost);
        }
        self.oracle_time.set(self.oracle_time.get() + start.elapsed());
        res
    }

    pub fn calls(&self) -> usize {
        self.calls.get()
    }

    /// Total wall time spent inside predicate evaluations.
    pub fn oracle_time(&self) -> Duration {
        self.oracle_time.get()
    }
}
