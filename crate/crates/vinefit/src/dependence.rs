//! Rank correlation statistics: Kendall's tau and Spearman's rho.

use crate::data::average_ranks;
use crate::error::{Result, VinefitError};

/// Pairwise dependence summary used by knot rules and structure selection.
#[derive(Debug, Clone, Copy)]
pub struct DependenceStats {
    pub tau: f64,
    pub rho: f64,
}

impl DependenceStats {
    pub fn from_samples(u: &[f64], v: &[f64]) -> Result<Self> {
        Ok(Self {
            tau: kendalls_tau(u, v)?,
            rho: spearmans_rho(u, v)?,
        })
    }
}

/// Tie-adjusted Kendall's tau (tau-b) in O(n log n) via Knight's algorithm:
/// sort by x, count exchanges with a merge sort over y, and correct the
/// numerator for ties in x, y and joint ties.
pub fn kendalls_tau(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(VinefitError::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let n = u.len();
    if n < 2 {
        return Err(VinefitError::TooFewObservations { need: 2, got: n });
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        u[a].partial_cmp(&u[b])
            .unwrap()
            .then(v[a].partial_cmp(&v[b]).unwrap())
    });
    let y: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
    let x: Vec<f64> = idx.iter().map(|&i| u[i]).collect();

    let pair = |t: u64| (t * t.saturating_sub(1) / 2) as f64;

    // ties in x and joint ties, counted over the (x, y)-sorted order
    let mut n1 = 0.0; // sum over x-tie groups of t(t-1)/2
    let mut n3 = 0.0; // same for joint (x, y) ties
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[j + 1] == x[i] {
            j += 1;
        }
        n1 += pair((j - i + 1) as u64);
        let mut k = i;
        while k <= j {
            let mut l = k;
            while l + 1 <= j && y[l + 1] == y[k] {
                l += 1;
            }
            n3 += pair((l - k + 1) as u64);
            k = l + 1;
        }
        i = j + 1;
    }

    // exchanges needed to sort y: merge sort counting inversions
    let mut buf = y.clone();
    let mut tmp = vec![0.0; n];
    let swaps = merge_count(&mut buf, &mut tmp) as f64;

    // ties in y
    buf.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut n2 = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && buf[j + 1] == buf[i] {
            j += 1;
        }
        n2 += pair((j - i + 1) as u64);
        i = j + 1;
    }

    let n0 = pair(n as u64);
    let numerator = n0 - n1 - n2 + n3 - 2.0 * swaps;
    let denom = ((n0 - n1) * (n0 - n2)).sqrt();
    if denom == 0.0 {
        return Err(VinefitError::ZeroRankVariance);
    }
    Ok((numerator / denom).clamp(-1.0, 1.0))
}

fn merge_count(a: &mut [f64], tmp: &mut [f64]) -> u64 {
    let n = a.len();
    if n <= 1 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = a.split_at_mut(mid);
    let mut swaps = merge_count(left, &mut tmp[..mid]) + merge_count(right, &mut tmp[mid..]);
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < left.len() && j < right.len() {
        if right[j] < left[i] {
            swaps += (left.len() - i) as u64;
            tmp[k] = right[j];
            j += 1;
        } else {
            tmp[k] = left[i];
            i += 1;
        }
        k += 1;
    }
    while i < left.len() {
        tmp[k] = left[i];
        i += 1;
        k += 1;
    }
    while j < right.len() {
        tmp[k] = right[j];
        j += 1;
        k += 1;
    }
    a.copy_from_slice(&tmp[..n]);
    swaps
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearmans_rho(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(VinefitError::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    if u.len() < 2 {
        return Err(VinefitError::TooFewObservations {
            need: 2,
            got: u.len(),
        });
    }
    let ru = average_ranks(u);
    let rv = average_ranks(v);
    let n = u.len() as f64;
    let mu = ru.iter().sum::<f64>() / n;
    let mv = rv.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..u.len() {
        let dx = ru[i] - mu;
        let dy = rv[i] - mv;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(VinefitError::ZeroRankVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
