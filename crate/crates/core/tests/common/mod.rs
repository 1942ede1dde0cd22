//! Shared oracles for the integration suites: exhaustive set-partition and
//! integer-partition enumeration, fingerprint multiplicities, and distance
//! helpers. Everything here is independent of the library's coefficient
//! machinery.
#![allow(dead_code)] // each integration target uses its own subset

use std::collections::BTreeMap;

use ssp_core::special::ln_gamma;

/// Block-size vectors of every set partition of {1..n}, one entry per set
/// partition (sizes follow block-creation order).
pub fn set_partitions(n: usize) -> Vec<Vec<u64>> {
    fn rec(i: usize, n: usize, sizes: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if i == n {
            out.push(sizes.clone());
            return;
        }
        for b in 0..sizes.len() {
            sizes[b] += 1;
            rec(i + 1, n, sizes, out);
            sizes[b] -= 1;
        }
        sizes.push(1);
        rec(i + 1, n, sizes, out);
        sizes.pop();
    }
    let mut out = Vec::new();
    rec(0, n, &mut Vec::new(), &mut out);
    out
}

/// All integer partitions of n as non-increasing size vectors.
pub fn integer_partitions(n: u64) -> Vec<Vec<u64>> {
    fn rec(remaining: u64, cap: u64, acc: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if remaining == 0 {
            out.push(acc.clone());
            return;
        }
        let hi = remaining.min(cap);
        for next in (1..=hi).rev() {
            acc.push(next);
            rec(remaining - next, next, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

pub fn fingerprint_of(sizes: &[u64]) -> BTreeMap<u64, u64> {
    let mut fp = BTreeMap::new();
    for &s in sizes {
        *fp.entry(s).or_insert(0) += 1;
    }
    fp
}

/// Number of set partitions of {1..n} sharing a fingerprint:
/// n! / prod_r (r!)^{m_r} m_r!.
pub fn log_multiplicity(n: u64, fingerprint: &BTreeMap<u64, u64>) -> f64 {
    let mut ln = ln_gamma(n as f64 + 1.0);
    for (&r, &m) in fingerprint {
        ln -= m as f64 * ln_gamma(r as f64 + 1.0) + ln_gamma(m as f64 + 1.0);
    }
    ln
}

/// Total variation distance; the shorter vector is zero-padded.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..len).map(|i| (at(p, i) - at(q, i)).abs()).sum::<f64>()
}

/// Empirical pmf of draws returned by `draw` over `reps` replicates.
pub fn empirical_pmf<F: FnMut(u64) -> u64>(reps: u64, mut draw: F) -> Vec<f64> {
    let mut counts: Vec<u64> = Vec::new();
    for rep in 0..reps {
        let x = draw(rep) as usize;
        if x >= counts.len() {
            counts.resize(x + 1, 0);
        }
        counts[x] += 1;
    }
    counts.into_iter().map(|c| c as f64 / reps as f64).collect()
}

/// Ordinary least-squares slope of y on x.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let num: f64 = x.iter().zip(y).map(|(&a, &b)| (a - xm) * (b - ym)).sum();
    let den: f64 = x.iter().map(|&a| (a - xm) * (a - xm)).sum();
    num / den
}

pub fn mean_and_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
