//! The unseen-species problem: exact posterior of the number of new species
//! in m further draws, the closed-form posterior-mean estimator, compound
//! Binomial Monte Carlo samplers (order 0 and order r), and the frequentist
//! Good-Toulmin baselines.

use std::collections::HashMap;

use crate::combinatorics::{gen_factorial_row_checked, ln_binomial, log_rising_factorial, stirling_noncentered_row};
use crate::data::SampleSummary;
use crate::error::{Error, Result};
use crate::pyp::{sample_k_star, sample_m_star, PypParams};
use crate::rng::RngStream;
use crate::special::{ln_gamma, log_sum_exp};

/// Exact computations keep the full coefficient row in memory; beyond this
/// the compound Monte Carlo representation is the intended path.
pub const EXACT_M_LIMIT: u64 = 10_000;

/// How a posterior law was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McPath {
    /// Compound representation (Binomial or Hypergeometric mixture).
    Compound,
    /// Forward simulation of the predictive urn.
    ForwardUrn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    MonteCarlo(McPath),
    Approximation,
}

/// A posterior law on {0, 1, ..., len-1} held in log scale together with its
/// mean. Exact laws store the closed-form mean; Monte Carlo laws store the
/// empirical one.
#[derive(Clone, Debug)]
pub struct DiscretePosterior {
    log_pmf: Vec<f64>,
    mean: f64,
    provenance: Provenance,
}

impl DiscretePosterior {
    pub(crate) fn new(log_pmf: Vec<f64>, mean: f64, provenance: Provenance) -> DiscretePosterior {
        DiscretePosterior { log_pmf, mean, provenance }
    }

    pub(crate) fn from_counts(counts: &[u64], replicates: u64, path: McPath) -> DiscretePosterior {
        let n = replicates as f64;
        let log_pmf: Vec<f64> = counts.iter().map(|&c| (c as f64 / n).ln()).collect();
        let mut weighted = 0.0;
        for (x, &c) in counts.iter().enumerate() {
            weighted += x as f64 * c as f64;
        }
        DiscretePosterior { log_pmf, mean: weighted / n, provenance: Provenance::MonteCarlo(path) }
    }

    pub fn log_pmf(&self) -> &[f64] {
        &self.log_pmf
    }

    pub fn pmf(&self) -> Vec<f64> {
        self.log_pmf.iter().map(|&l| l.exp()).collect()
    }

    pub fn prob(&self, x: u64) -> f64 {
        self.log_pmf.get(x as usize).map_or(0.0, |&l| l.exp())
    }

    /// Largest support point carried (atoms above are exactly zero).
    pub fn support_max(&self) -> u64 {
        (self.log_pmf.len() - 1) as u64
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn mean_from_pmf(&self) -> f64 {
        self.log_pmf.iter().enumerate().map(|(x, &l)| x as f64 * l.exp()).sum()
    }

    pub fn moment_from_pmf(&self, d: u32) -> f64 {
        self.log_pmf.iter().enumerate().map(|(x, &l)| (x as f64).powi(d as i32) * l.exp()).sum()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn log_normalizer(&self) -> f64 {
        log_sum_exp(&self.log_pmf)
    }

    /// Shortest contiguous interval holding at least `level` probability;
    /// ties between equally short windows go to the smaller left endpoint.
    pub fn credible_interval(&self, level: f64) -> Result<(u64, u64)> {
        if !(0.0 < level && level < 1.0) {
            return Err(Error::domain("credible_interval", format!("level must lie in (0,1), got {level}")));
        }
        let pmf = self.pmf();
        let len = pmf.len();
        let mut prefix = Vec::with_capacity(len + 1);
        prefix.push(0.0);
        for &p in &pmf {
            prefix.push(prefix.last().unwrap() + p);
        }
        let window_mass = |lo: usize, hi: usize| prefix[hi + 1] - prefix[lo];
        let mut best: Option<(usize, usize)> = None;
        for width in 1..=len {
            for lo in 0..=(len - width) {
                if window_mass(lo, lo + width - 1) >= level {
                    best = Some((lo, lo + width - 1));
                    break;
                }
            }
            if best.is_some() {
                break;
            }
        }
        let (lo, hi) = best.ok_or_else(|| Error::Numerical {
            context: "credible_interval",
            message: format!("pmf mass {} never reaches level {level}", window_mass(0, len - 1)),
        })?;
        Ok((lo as u64, hi as u64))
    }
}

/// A frequentist series estimate with its extrapolation ratio lambda = m/n.
/// `unstable` flags the lambda >= 1 regime where the alternating series
/// oscillates; the value is still reported.
#[derive(Clone, Copy, Debug)]
pub struct FrequentistEstimate {
    pub value: f64,
    pub lambda: f64,
    pub unstable: bool,
}

/// Good-Toulmin estimator sum_i (-1)^{i+1} lambda^i m_i.
pub fn good_toulmin(summary: &SampleSummary, m: u64) -> FrequentistEstimate {
    let n = summary.n() as f64;
    let lambda = m as f64 / n;
    let mut value = 0.0;
    for (&i, &m_i) in summary.fingerprint() {
        if m_i == 0 {
            continue;
        }
        let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
        value += sign * (i as f64 * lambda.ln() + (m_i as f64).ln()).exp();
    }
    FrequentistEstimate { value, lambda, unstable: lambda >= 1.0 }
}

/// Order-r Good-Toulmin variant
/// sum_i (-1)^{i+1} lambda^{i+r-1} binom(r+i-1, i-1) m_{i+r-1}.
pub fn good_toulmin_order_r(summary: &SampleSummary, m: u64, r: u64) -> FrequentistEstimate {
    assert!(r >= 1, "good_toulmin_order_r requires r >= 1");
    let n = summary.n() as f64;
    let lambda = m as f64 / n;
    let mut value = 0.0;
    for (&j, &m_j) in summary.fingerprint() {
        // j = i + r - 1 ranges over frequencies >= r.
        if j < r || m_j == 0 {
            continue;
        }
        let i = j - r + 1;
        let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
        let ln_term = (j as f64) * lambda.ln() + ln_binomial(j, r) + (m_j as f64).ln();
        value += sign * ln_term.exp();
    }
    FrequentistEstimate { value, lambda, unstable: lambda >= 1.0 }
}

/// `(base + delta)_(m) / (base)_(m) - 1`, accumulated through log1p so that
/// the m = 1 reductions hold to machine precision.
pub(crate) fn rising_ratio_minus_one(base: f64, delta: f64, m: u64) -> f64 {
    if m <= 100_000 {
        let mut ln_ratio = 0.0;
        for i in 0..m {
            ln_ratio += (delta / (base + i as f64)).ln_1p();
        }
        ln_ratio.exp_m1()
    } else {
        let ln_ratio = ln_gamma(base + delta + m as f64) - ln_gamma(base + delta)
            - ln_gamma(base + m as f64)
            + ln_gamma(base);
        ln_ratio.exp_m1()
    }
}

/// Posterior-mean estimate of the number of unseen species:
/// (k + theta/alpha) ((theta+n+alpha)_(m) / (theta+n)_(m) - 1), with the
/// Dirichlet limit sum_{i=1}^m theta/(theta+n+i-1).
pub fn estimator(params: &PypParams, summary: &SampleSummary, m: u64) -> f64 {
    assert!(m >= 1, "estimator requires m >= 1");
    let (alpha, theta) = (params.alpha(), params.theta());
    let n = summary.n() as f64;
    if params.is_dirichlet() {
        if m <= 1_000_000 {
            return (0..m).map(|i| theta / (theta + n + i as f64)).sum();
        }
        let d1 = crate::combinatorics::digamma(theta + n + m as f64).expect("positive");
        let d0 = crate::combinatorics::digamma(theta + n).expect("positive");
        return theta * (d1 - d0);
    }
    let k = summary.k() as f64;
    (k + theta / alpha) * rising_ratio_minus_one(theta + n, alpha, m)
}

/// Exact posterior of the number of unseen species on {0, ..., m}.
///
/// The coefficient row costs O(m^2); beyond [`EXACT_M_LIMIT`] a size-guard
/// error points the caller to `posterior_mc`.
pub fn posterior_exact(params: &PypParams, summary: &SampleSummary, m: u64) -> Result<DiscretePosterior> {
    if m < 1 {
        return Err(Error::Constraint("posterior_exact requires m >= 1".into()));
    }
    if m > EXACT_M_LIMIT {
        return Err(Error::SizeGuard {
            context: "unseen::posterior_exact",
            message: format!("m={m} exceeds the exact-path limit {EXACT_M_LIMIT}; use posterior_mc"),
        });
    }
    let (alpha, theta) = (params.alpha(), params.theta());
    let n = summary.n() as f64;
    let k = summary.k() as f64;
    let ln_denom = log_rising_factorial(theta + n, m)?;
    let mut log_pmf = Vec::with_capacity(m as usize + 1);
    if params.is_dirichlet() {
        // theta^x |s(m, x; n)| / (theta+n)_(m)
        let stirling = stirling_noncentered_row(m as usize, n)?;
        for (x, ln_s) in stirling.iter().enumerate() {
            log_pmf.push(x as f64 * theta.ln() + ln_s - ln_denom);
        }
    } else {
        // (k + theta/alpha)_(x) C(m, x; alpha, k alpha - n) / (theta+n)_(m)
        let row = gen_factorial_row_checked(m as usize, alpha, k * alpha - n);
        let base = k + theta / alpha;
        let mut ln_rising = 0.0;
        for (x, coeff) in row.iter().enumerate() {
            if x > 0 {
                ln_rising += (base + (x - 1) as f64).ln();
            }
            log_pmf.push(ln_rising + coeff.ln_abs - ln_denom);
        }
    }
    Ok(DiscretePosterior::new(log_pmf, estimator(params, summary, m), Provenance::Exact))
}

fn mc_counts<F>(replicates: u64, threads: usize, rng: &RngStream, draw: F) -> Vec<u64>
where
    F: Fn(&mut RngStream) -> u64 + Sync,
{
    let threads = threads.max(1).min(replicates.max(1) as usize);
    let run_chunk = |lo: u64, hi: u64| {
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for rep in lo..hi {
            let mut stream = rng.derive(rep);
            *counts.entry(draw(&mut stream)).or_insert(0) += 1;
        }
        counts
    };
    let merged: HashMap<u64, u64> = if threads == 1 {
        run_chunk(0, replicates)
    } else {
        let chunk = replicates.div_ceil(threads as u64);
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for t in 0..threads as u64 {
                let lo = t * chunk;
                let hi = ((t + 1) * chunk).min(replicates);
                if lo >= hi {
                    break;
                }
                let run_chunk = &run_chunk;
                handles.push(scope.spawn(move || run_chunk(lo, hi)));
            }
            let mut total: HashMap<u64, u64> = HashMap::new();
            for h in handles {
                for (x, c) in h.join().expect("worker panicked") {
                    *total.entry(x).or_insert(0) += c;
                }
            }
            total
        })
    };
    let max = merged.keys().max().copied().unwrap_or(0);
    let mut counts = vec![0u64; max as usize + 1];
    for (x, c) in merged {
        counts[x as usize] = c;
    }
    counts
}

/// Monte Carlo posterior of the unseen count via the compound-Binomial
/// representation: draw K*_m for PYP(alpha, theta+n), an independent
/// Beta(theta/alpha + k, n/alpha - k) success probability (constant
/// theta/(theta+n) in the Dirichlet case), then a Binomial. Replicate `i`
/// uses the derived stream `rng.derive(i)`, so the result is independent of
/// the number of worker threads.
pub fn posterior_mc(
    params: &PypParams,
    summary: &SampleSummary,
    m: u64,
    replicates: u64,
    rng: &RngStream,
) -> DiscretePosterior {
    posterior_mc_threaded(params, summary, m, replicates, rng, 1)
}

pub fn posterior_mc_threaded(
    params: &PypParams,
    summary: &SampleSummary,
    m: u64,
    replicates: u64,
    rng: &RngStream,
    threads: usize,
) -> DiscretePosterior {
    assert!(m >= 1 && replicates >= 1);
    let (alpha, theta) = (params.alpha(), params.theta());
    let n = summary.n() as f64;
    let k = summary.k() as f64;
    let dirichlet_p = theta / (theta + n);
    let counts = mc_counts(replicates, threads, rng, |stream| {
        let p = if params.is_dirichlet() {
            dirichlet_p
        } else {
            stream.beta(theta / alpha + k, n / alpha - k)
        };
        let k_star = sample_k_star(params, summary.n(), m, stream);
        stream.binomial(k_star, p)
    });
    DiscretePosterior::from_counts(&counts, replicates, McPath::Compound)
}

/// Monte Carlo posterior of the order-r unseen prevalence (new species that
/// appear exactly r times among the m additional draws), using M*_{r,m} in
/// place of K*_m.
pub fn posterior_mc_order_r(
    params: &PypParams,
    summary: &SampleSummary,
    m: u64,
    r: u64,
    replicates: u64,
    rng: &RngStream,
) -> DiscretePosterior {
    posterior_mc_order_r_threaded(params, summary, m, r, replicates, rng, 1)
}

pub fn posterior_mc_order_r_threaded(
    params: &PypParams,
    summary: &SampleSummary,
    m: u64,
    r: u64,
    replicates: u64,
    rng: &RngStream,
    threads: usize,
) -> DiscretePosterior {
    assert!(m >= 1 && r >= 1 && r <= m && replicates >= 1);
    let (alpha, theta) = (params.alpha(), params.theta());
    let n = summary.n() as f64;
    let k = summary.k() as f64;
    let dirichlet_p = theta / (theta + n);
    let counts = mc_counts(replicates, threads, rng, |stream| {
        let p = if params.is_dirichlet() {
            dirichlet_p
        } else {
            stream.beta(theta / alpha + k, n / alpha - k)
        };
        let m_star = sample_m_star(params, summary.n(), m, r, stream);
        stream.binomial(m_star, p)
    });
    DiscretePosterior::from_counts(&counts, replicates, McPath::Compound)
}

/// Growth-trend diagnostic for the estimate: u_hat / m^alpha under the
/// Pitman-Yor prior, u_hat / log m under the Dirichlet process. Reported
/// alongside estimates; never used as an estimation path.
pub fn growth_diagnostic(params: &PypParams, summary: &SampleSummary, m: u64) -> f64 {
    let u_hat = estimator(params, summary, m);
    if params.is_dirichlet() {
        u_hat / (m as f64).ln()
    } else {
        u_hat / (m as f64).powf(params.alpha())
    }
}
