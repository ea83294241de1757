//! Near-optimal three-stratum design: for every admissible pair of sample
//! positions acting as rough boundaries, minimize the induced bivariate
//! quadratic in (N_1, N_3) over the constraint polygon, then round to
//! feasible integer boundaries.

use crate::error::{Error, Result};
use crate::lss::index::{
    better, evaluate_sizes, stratum_variance, AllocationMode, DesignConstraints, DesignResult,
    PrefixSumIndex, SampleRanks,
};

struct Quadratic {
    a1: f64,
    a2: f64,
    a3: f64,
    a4: f64,
    a5: f64,
}

#[derive(Clone, Copy)]
struct Polygon {
    lo1: usize,
    hi1: usize,
    lo3: usize,
    hi3: usize,
    /// N_1 + N_3 <= diag
    diag: usize,
}

impl Polygon {
    fn feasible(&self) -> bool {
        self.lo1 <= self.hi1 && self.lo3 <= self.hi3 && self.lo1 + self.lo3 <= self.diag
    }

    fn contains(&self, n1: usize, n3: usize) -> bool {
        (self.lo1..=self.hi1).contains(&n1)
            && (self.lo3..=self.hi3).contains(&n3)
            && n1 + n3 <= self.diag
    }

    fn contains_real(&self, x1: f64, x3: f64) -> bool {
        let eps = 1e-9;
        x1 >= self.lo1 as f64 - eps
            && x1 <= self.hi1 as f64 + eps
            && x3 >= self.lo3 as f64 - eps
            && x3 <= self.hi3 as f64 + eps
            && x1 + x3 <= self.diag as f64 + eps
    }
}

/// Minimizer candidates of a univariate quadratic a t^2 + b t over [lo, hi]
/// (the constant is irrelevant): both endpoints plus the interior vertex.
fn segment_candidates(a: f64, b: f64, lo: f64, hi: f64, out: &mut Vec<f64>) {
    if lo > hi {
        return;
    }
    out.push(lo);
    out.push(hi);
    if a > 0.0 {
        let v = -b / (2.0 * a);
        if v > lo && v < hi {
            out.push(v);
        }
    }
}

fn real_candidates(f: &Quadratic, poly: &Polygon) -> Vec<(f64, f64)> {
    let mut cands: Vec<(f64, f64)> = Vec::new();
    let (lo1, hi1) = (poly.lo1 as f64, poly.hi1 as f64);
    let (lo3, hi3) = (poly.lo3 as f64, poly.hi3 as f64);
    let diag = poly.diag as f64;

    // interior critical point of the full quadratic
    let det = 4.0 * f.a1 * f.a2 - f.a3 * f.a3;
    if det.abs() > 1e-30 {
        let x1 = (f.a3 * f.a5 - 2.0 * f.a2 * f.a4) / det;
        let x3 = (f.a3 * f.a4 - 2.0 * f.a1 * f.a5) / det;
        if poly.contains_real(x1, x3) {
            cands.push((x1, x3));
        }
    }

    // vertical edges N_1 = c: minimize over N_3
    for c in [lo1, hi1] {
        let upper = hi3.min(diag - c);
        let mut ts = Vec::new();
        segment_candidates(f.a2, f.a3 * c + f.a5, lo3, upper, &mut ts);
        cands.extend(ts.into_iter().map(|t| (c, t)));
    }
    // horizontal edges N_3 = c: minimize over N_1
    for c in [lo3, hi3] {
        let upper = hi1.min(diag - c);
        let mut ts = Vec::new();
        segment_candidates(f.a1, f.a3 * c + f.a4, lo1, upper, &mut ts);
        cands.extend(ts.into_iter().map(|t| (t, c)));
    }
    // diagonal edge N_1 + N_3 = diag, parameterized by N_1
    {
        let t_lo = lo1.max(diag - hi3);
        let t_hi = hi1.min(diag - lo3);
        let a = f.a1 + f.a2 - f.a3;
        let b = -2.0 * f.a2 * diag + f.a3 * diag + f.a4 - f.a5;
        let mut ts = Vec::new();
        segment_candidates(a, b, t_lo, t_hi, &mut ts);
        cands.extend(ts.into_iter().map(|t| (t, diag - t)));
    }
    cands.retain(|&(x1, x3)| poly.contains_real(x1, x3));
    cands
}

/// Integer points of the polygon adjacent to a real candidate. The
/// floor/floor corner always stays feasible because the polygon's bounds are
/// integers, so rounding never leaves the approximation guarantee behind.
fn integer_neighbors(x1: f64, x3: f64, poly: &Polygon) -> Vec<(usize, usize)> {
    let mut pts = Vec::new();
    for c1 in [x1.floor(), x1.ceil()] {
        for c3 in [x3.floor(), x3.ceil()] {
            if c1 < 0.0 || c3 < 0.0 {
                continue;
            }
            let (n1, n3) = (c1 as usize, c3 as usize);
            if poly.contains(n1, n3) {
                pts.push((n1, n3));
            }
        }
    }
    pts
}

/// DirSol: exhaustive over sample-position pairs, near-exact within each.
pub fn dirsol(
    ranks: &SampleRanks,
    gamma: &PrefixSumIndex,
    total: usize,
    constraints: &DesignConstraints,
) -> Result<DesignResult> {
    if constraints.strata != 3 {
        return Err(Error::InvalidInput(format!(
            "dirsol is specific to H=3, got H={}",
            constraints.strata
        )));
    }
    constraints.validate(total, ranks.len())?;
    let m = ranks.len();
    let m_floor = constraints.effective_min_samples();
    let n_floor = constraints.min_stratum_size;
    let n = constraints.second_stage;
    let mut best: Option<(f64, Vec<usize>)> = None;

    for i in m_floor..m {
        for j in (i + m_floor + 1)..=(m - m_floor + 1) {
            let s1 = stratum_variance(gamma, 0, i)?.sqrt();
            let s2 = stratum_variance(gamma, i, j - 1)?.sqrt();
            let s3 = stratum_variance(gamma, j - 1, m)?.sqrt();
            let poly = Polygon {
                lo1: n_floor.max(ranks.rank(i)),
                hi1: ranks.rank(i + 1) - 1,
                lo3: n_floor.max(total - ranks.rank(j) + 1),
                hi3: total - ranks.rank(j - 1),
                diag: total - n_floor,
            };
            if !poly.feasible() {
                continue;
            }
            let nf = n as f64;
            let total_f = total as f64;
            let f = Quadratic {
                a1: (s1 - s2) * (s1 - s2) / nf,
                a2: (s3 - s2) * (s3 - s2) / nf,
                a3: 2.0 * (s1 - s2) * (s3 - s2) / nf,
                a4: 2.0 * (s1 - s2) * total_f * s2 / nf - (s1 * s1 - s2 * s2),
                a5: 2.0 * (s3 - s2) * total_f * s2 / nf - (s3 * s3 - s2 * s2),
            };
            for (x1, x3) in real_candidates(&f, &poly) {
                for (n1, n3) in integer_neighbors(x1, x3, &poly) {
                    let sizes = vec![n1, total - n1 - n3, n3];
                    let obj =
                        evaluate_sizes(ranks, gamma, &sizes, n, total, AllocationMode::Neyman)?;
                    if best.is_none()
                        || better((obj, &sizes), (best.as_ref().unwrap().0, &best.as_ref().unwrap().1))
                    {
                        best = Some((obj, sizes));
                    }
                }
            }
        }
    }

    match best {
        Some((objective, sizes)) => {
            Ok(DesignResult { sizes, objective, mode: AllocationMode::Neyman })
        }
        None => Err(Error::NoFeasibleStratification(
            "no sample-position pair admits the size constraints".into(),
        )),
    }
}
