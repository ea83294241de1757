//! Exhaustive stratification search over every integer boundary placement.
//! Test oracle for the approximation guarantees of the fast optimizers;
//! guarded to small instances.

use crate::error::{Error, Result};
use crate::lss::index::{
    better, AllocationMode, DesignConstraints, DesignResult, PrefixSumIndex, SampleRanks,
};

struct Search<'a> {
    ranks: &'a SampleRanks,
    gamma: &'a PrefixSumIndex,
    total: usize,
    h: usize,
    n_floor: usize,
    m_floor: usize,
    n: f64,
    mode: AllocationMode,
    best: Option<(f64, Vec<usize>)>,
    boundaries: Vec<usize>,
}

impl Search<'_> {
    /// Extends the partial boundary list with stratum `depth + 1`'s end.
    fn descend(&mut self, depth: usize, prev_b: usize, prev_ell: usize, sum_ns: f64, sum_ns2: f64) {
        if depth == self.h - 1 {
            self.close(prev_b, prev_ell, sum_ns, sum_ns2);
            return;
        }
        let remaining = self.h - 1 - depth;
        let lo = prev_b + self.n_floor;
        if lo + remaining * self.n_floor > self.total {
            return;
        }
        let hi = self.total - remaining * self.n_floor;
        for b in lo..=hi {
            let ell = self.ranks.samples_up_to(b);
            let m_h = ell - prev_ell;
            if m_h < self.m_floor {
                continue;
            }
            let (ns, ns2) = self.stratum_terms(prev_ell, ell, b - prev_b);
            self.boundaries.push(b);
            self.descend(depth + 1, b, ell, sum_ns + ns, sum_ns2 + ns2);
            self.boundaries.pop();
        }
    }

    fn close(&mut self, prev_b: usize, prev_ell: usize, sum_ns: f64, sum_ns2: f64) {
        let size = self.total - prev_b;
        if size < self.n_floor {
            return;
        }
        let ell = self.ranks.len();
        if ell - prev_ell < self.m_floor {
            return;
        }
        let (ns, ns2) = self.stratum_terms(prev_ell, ell, size);
        let sum_ns = sum_ns + ns;
        let sum_ns2 = sum_ns2 + ns2;
        let obj = match self.mode {
            AllocationMode::Neyman => sum_ns * sum_ns / self.n - sum_ns2,
            AllocationMode::Proportional => (self.total as f64 - self.n) / self.n * sum_ns2,
        };
        let mut sizes = Vec::with_capacity(self.h);
        let mut prev = 0usize;
        for &b in &self.boundaries {
            sizes.push(b - prev);
            prev = b;
        }
        sizes.push(self.total - prev);
        if self.best.is_none()
            || better((obj, &sizes), (self.best.as_ref().unwrap().0, &self.best.as_ref().unwrap().1))
        {
            self.best = Some((obj, sizes));
        }
    }

    fn stratum_terms(&self, ell_lo: usize, ell_hi: usize, size: usize) -> (f64, f64) {
        let m = (ell_hi - ell_lo) as f64;
        let c = self.gamma.positives(ell_lo, ell_hi) as f64;
        let s2 = c * (m - c) / (m * (m - 1.0));
        (size as f64 * s2.sqrt(), size as f64 * s2)
    }
}

/// Exact optimum over all integer stratifications meeting the constraints.
pub fn brute_force_design(
    ranks: &SampleRanks,
    gamma: &PrefixSumIndex,
    total: usize,
    constraints: &DesignConstraints,
    mode: AllocationMode,
) -> Result<DesignResult> {
    if total > 400 || constraints.strata > 4 {
        return Err(Error::InvalidInput(format!(
            "brute force guarded to N <= 400 and H <= 4 (got N={total}, H={})",
            constraints.strata
        )));
    }
    constraints.validate(total, ranks.len())?;
    let mut search = Search {
        ranks,
        gamma,
        total,
        h: constraints.strata,
        n_floor: constraints.min_stratum_size.max(1),
        m_floor: constraints.effective_min_samples(),
        n: constraints.second_stage as f64,
        mode,
        best: None,
        boundaries: Vec::new(),
    };
    search.descend(0, 0, 0, 0.0, 0.0);
    match search.best {
        Some((objective, sizes)) => Ok(DesignResult { sizes, objective, mode }),
        None => Err(Error::NoFeasibleStratification(
            "no integer stratification satisfies the constraints".into(),
        )),
    }
}
