//! Correlation measures between prediction and ground-truth vectors:
//! Pearson's r, Spearman's rho (Pearson on mid-ranks), and tie-adjusted
//! Kendall's tau-b.
//!
//! A correlation against a constant vector is undefined; all functions
//! return `None` in that case rather than a fabricated value, and callers
//! decide policy.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CorrelationKind {
    PearsonR,
    SpearmanRho,
    KendallTau,
}

impl CorrelationKind {
    pub const ALL: [CorrelationKind; 3] = [
        CorrelationKind::PearsonR,
        CorrelationKind::SpearmanRho,
        CorrelationKind::KendallTau,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Self::PearsonR => "r",
            Self::SpearmanRho => "rho",
            Self::KendallTau => "tau",
        }
    }
}

impl fmt::Display for CorrelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for CorrelationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "r" | "pearson" => Ok(Self::PearsonR),
            "rho" | "spearman" => Ok(Self::SpearmanRho),
            "tau" | "kendall" => Ok(Self::KendallTau),
            _ => Err(Error::InvalidConfig(vec![format!(
                "unrecognized correlation kind: {s:?}"
            )])),
        }
    }
}

/// Computes the requested correlation; `None` when undefined (constant
/// input). Panics if the vectors differ in length or have fewer than two
/// elements, which is a caller bug.
pub fn correlate(kind: CorrelationKind, x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "correlation inputs must align");
    assert!(x.len() >= 2, "correlation needs at least two points");
    match kind {
        CorrelationKind::PearsonR => pearson(x, y),
        CorrelationKind::SpearmanRho => spearman(x, y),
        CorrelationKind::KendallTau => kendall_tau_b(x, y),
    }
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

/// Pearson's r with population moments, clamped to [-1, 1].
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if is_constant(x) || is_constant(y) {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson's r over mid-rank transforms.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&rank_transform(x), &rank_transform(y))
}

/// Fractional (mid-) ranks, 1-based: ties receive the mean of the ranks
/// they span, so the output always sums to n(n+1)/2.
pub fn rank_transform(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        // positions i..=j hold tied values; mean of ranks i+1 ..= j+1
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mid;
        }
        i = j + 1;
    }
    ranks
}

fn tied_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let run = (j - i + 1) as u64;
        total += run * (run - 1) / 2;
        i = j + 1;
    }
    total
}

/// Counts strict inversions via merge sort, sorting `v` in place.
fn count_inversions(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mut buf = v.to_vec();
    let mut inversions = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo + width < n {
            let mid = lo + width;
            let hi = (lo + 2 * width).min(n);
            let (mut i, mut j, mut k) = (lo, mid, lo);
            while i < mid || j < hi {
                if j >= hi || (i < mid && v[i] <= v[j]) {
                    buf[k] = v[i];
                    i += 1;
                } else {
                    buf[k] = v[j];
                    j += 1;
                    inversions += (mid - i) as u64;
                }
                k += 1;
            }
            v[lo..hi].copy_from_slice(&buf[lo..hi]);
            lo = hi;
        }
        width *= 2;
    }
    inversions
}

/// Kendall's tau-b: (C - D) / sqrt((n0 - Tx)(n0 - Ty)), which reduces to
/// (C - D)/n0 on tie-free input. Computed in O(n log n) by sorting on x and
/// merge-counting discordant pairs in y.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let x_sorted: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let mut y_by_x: Vec<f64> = order.iter().map(|&i| y[i]).collect();

    let x_ties = tied_pairs(&x_sorted);
    // pairs tied in both x and y: runs of identical (x, y)
    let mut xy_ties = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x_sorted[j + 1] == x_sorted[i] && y_by_x[j + 1] == y_by_x[i] {
            j += 1;
        }
        let run = (j - i + 1) as u64;
        xy_ties += run * (run - 1) / 2;
        i = j + 1;
    }

    let discordant = count_inversions(&mut y_by_x);
    let y_ties = tied_pairs(&y_by_x);

    let total = (n as u64) * (n as u64 - 1) / 2;
    if total == x_ties || total == y_ties {
        return None; // constant vector
    }
    let c_minus_d =
        total as f64 - x_ties as f64 - y_ties as f64 + xy_ties as f64 - 2.0 * discordant as f64;
    let denom = ((total - x_ties) as f64 * (total - y_ties) as f64).sqrt();
    Some((c_minus_d / denom).clamp(-1.0, 1.0))
}
