//! The Pitman-Yor partition model: exchangeable partition probabilities,
//! the predictive rule, and seeded samplers for partitions and the counting
//! statistics of additional samples.

use std::collections::BTreeMap;

use crate::combinatorics::{gen_factorial_row_checked, log_rising_factorial, signless_stirling_noncentered};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::special::ln_gamma;

/// log of (theta/alpha)_(k) / (theta)_(n) for alpha in (0,1), theta > -alpha.
///
/// Rewritten through Gamma(theta+1) and Gamma(theta/alpha+1) so that the
/// theta <= 0 part of the domain (where both rising factorials change sign
/// or vanish) is evaluated without cancellation:
///   (theta/alpha)_(k) / (theta)_(n)
///     = Gamma(theta+1) Gamma(theta/alpha+k) / (alpha Gamma(theta/alpha+1) Gamma(theta+n)).
fn ln_block_count_ratio(alpha: f64, theta: f64, k: u64, n: u64) -> f64 {
    debug_assert!(k >= 1 && n >= 1);
    ln_gamma(theta + 1.0) - alpha.ln() - ln_gamma(theta / alpha + 1.0)
        + ln_gamma(theta / alpha + k as f64)
        - ln_gamma(theta + n as f64)
}

/// Prior parameter pair: discount `alpha` in [0, 1) and scale
/// `theta > -alpha`. `alpha = 0` is the Dirichlet-process case and is always
/// handled by dedicated limit branches rather than by small-alpha
/// evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PypParams {
    alpha: f64,
    theta: f64,
}

impl PypParams {
    pub fn new(alpha: f64, theta: f64) -> Result<PypParams> {
        if !(0.0..1.0).contains(&alpha) || !alpha.is_finite() {
            return Err(Error::domain("PypParams", format!("discount must lie in [0,1), got {alpha}")));
        }
        if !(theta > -alpha) || !theta.is_finite() {
            return Err(Error::domain("PypParams", format!("scale must exceed -discount, got theta={theta}, alpha={alpha}")));
        }
        Ok(PypParams { alpha, theta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn is_dirichlet(&self) -> bool {
        self.alpha == 0.0
    }

    /// Same discount with the scale shifted by an observed sample size,
    /// giving the law of the additional-sample statistics.
    pub(crate) fn shifted(&self, n_offset: u64) -> PypParams {
        PypParams { alpha: self.alpha, theta: self.theta + n_offset as f64 }
    }
}

/// Running state of a sequentially sampled partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionState {
    block_sizes: Vec<u64>,
    n: u64,
}

impl PartitionState {
    pub fn empty() -> PartitionState {
        PartitionState { block_sizes: Vec::new(), n: 0 }
    }

    pub fn from_block_sizes(block_sizes: Vec<u64>) -> Result<PartitionState> {
        if block_sizes.contains(&0) {
            return Err(Error::Constraint("block sizes must be positive".into()));
        }
        let n = block_sizes.iter().sum();
        Ok(PartitionState { block_sizes, n })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.block_sizes.len() as u64
    }

    pub fn block_sizes(&self) -> &[u64] {
        &self.block_sizes
    }

    /// Fingerprint (frequency of frequencies) of the current blocks.
    pub fn fingerprint(&self) -> BTreeMap<u64, u64> {
        let mut fp = BTreeMap::new();
        for &s in &self.block_sizes {
            *fp.entry(s).or_insert(0) += 1;
        }
        fp
    }
}

/// log EPPF: probability of a specific partition of {1..n} whose block
/// sizes are `block_sizes`.
pub fn eppf_log(params: &PypParams, block_sizes: &[u64]) -> Result<f64> {
    if block_sizes.is_empty() {
        return Err(Error::Constraint("eppf_log requires at least one block".into()));
    }
    if block_sizes.contains(&0) {
        return Err(Error::Constraint("block sizes must be positive".into()));
    }
    let n: u64 = block_sizes.iter().sum();
    let k = block_sizes.len() as u64;
    let (alpha, theta) = (params.alpha, params.theta);
    if params.is_dirichlet() {
        // theta^k * prod (n_i - 1)! / (theta)_(n)
        let mut ln = k as f64 * theta.ln() - log_rising_factorial(theta, n)?;
        for &s in block_sizes {
            ln += ln_gamma(s as f64);
        }
        return Ok(ln);
    }
    let mut ln = ln_block_count_ratio(alpha, theta, k, n);
    for &s in block_sizes {
        ln += alpha.ln() + log_rising_factorial(1.0 - alpha, s - 1)?;
    }
    Ok(ln)
}

/// log EPSF: probability that the fingerprint of an n-sample equals the
/// given (r -> m_r) map.
pub fn epsf_log(params: &PypParams, fingerprint: &BTreeMap<u64, u64>, n: u64) -> Result<f64> {
    let mass: u64 = fingerprint.iter().map(|(&r, &m)| r * m).sum();
    if mass != n || n == 0 {
        return Err(Error::Constraint(format!(
            "fingerprint mass {mass} does not match sample size {n}"
        )));
    }
    if fingerprint.iter().any(|(&r, _)| r == 0) {
        return Err(Error::Constraint("fingerprint frequencies must be positive".into()));
    }
    let k: u64 = fingerprint.values().sum();
    let (alpha, theta) = (params.alpha, params.theta);
    if params.is_dirichlet() {
        let mut ln = ln_gamma(n as f64 + 1.0) - log_rising_factorial(theta, n)?
            + k as f64 * theta.ln();
        for (&r, &m) in fingerprint {
            if m == 0 {
                continue;
            }
            ln += -(m as f64) * (r as f64).ln() - ln_gamma(m as f64 + 1.0);
        }
        return Ok(ln);
    }
    let mut ln = ln_gamma(n as f64 + 1.0) + ln_block_count_ratio(alpha, theta, k, n);
    for (&r, &m) in fingerprint {
        if m == 0 {
            continue;
        }
        let per_block = alpha.ln() + log_rising_factorial(1.0 - alpha, r - 1)? - ln_gamma(r as f64 + 1.0);
        ln += m as f64 * per_block - ln_gamma(m as f64 + 1.0);
    }
    Ok(ln)
}

/// Probability that the next draw opens a new block: (theta + k alpha) / (theta + n).
pub fn predictive_new_prob(params: &PypParams, state: &PartitionState) -> f64 {
    if state.n == 0 {
        return 1.0;
    }
    (params.theta + state.k() as f64 * params.alpha) / (params.theta + state.n as f64)
}

/// Probability that the next draw joins block `index`: (n_i - alpha) / (theta + n).
pub fn predictive_block_prob(params: &PypParams, state: &PartitionState, index: usize) -> f64 {
    (state.block_sizes[index] as f64 - params.alpha) / (params.theta + state.n as f64)
}

/// Urn with per-observation seats so that a predictive step costs O(1)
/// expected time (uniform seat proposal, accept with (size - alpha)/size).
struct Urn {
    sizes: Vec<u64>,
    seats: Vec<u32>,
    n: u64,
}

impl Urn {
    fn from_sizes(sizes: &[u64], extra_capacity: usize) -> Urn {
        let n: u64 = sizes.iter().sum();
        let mut seats = Vec::with_capacity(n as usize + extra_capacity);
        for (b, &s) in sizes.iter().enumerate() {
            for _ in 0..s {
                seats.push(b as u32);
            }
        }
        Urn { sizes: sizes.to_vec(), seats, n }
    }

    /// One predictive draw; returns the block index, growing the urn.
    fn step(&mut self, params: &PypParams, rng: &mut RngStream) -> usize {
        let k = self.sizes.len() as f64;
        let total = params.theta + self.n as f64;
        let new_prob = if self.n == 0 { 1.0 } else { (params.theta + k * params.alpha) / total };
        if rng.bernoulli(new_prob) {
            self.sizes.push(1);
            let b = (self.sizes.len() - 1) as u32;
            self.seats.push(b);
            self.n += 1;
            return b as usize;
        }
        loop {
            let seat = rng.index(self.seats.len());
            let b = self.seats[seat] as usize;
            let size = self.sizes[b] as f64;
            if rng.uniform() <= (size - params.alpha) / size {
                self.sizes[b] += 1;
                self.seats.push(b as u32);
                self.n += 1;
                return b;
            }
        }
    }
}

/// Draw a partition of {1..n} from the EPPF by sequential predictive
/// simulation. Deterministic given the stream.
pub fn sample_partition(params: &PypParams, n: u64, rng: &mut RngStream) -> PartitionState {
    assert!(n >= 1, "sample_partition requires n >= 1");
    let mut urn = Urn::from_sizes(&[], n as usize);
    for _ in 0..n {
        urn.step(params, rng);
    }
    PartitionState { n: urn.n, block_sizes: urn.sizes }
}

/// The species index (block label in order of first appearance) of each of
/// n sequential draws; the labelled view of [`sample_partition`].
pub fn sample_label_sequence(params: &PypParams, n: u64, rng: &mut RngStream) -> Vec<u32> {
    assert!(n >= 1, "sample_label_sequence requires n >= 1");
    let mut urn = Urn::from_sizes(&[], n as usize);
    (0..n).map(|_| urn.step(params, rng) as u32).collect()
}

/// Number of distinct species K*_m in m draws from PYP(alpha, theta + n_offset),
/// sampled as a chain of m-1 Bernoulli steps.
pub fn sample_k_star(params: &PypParams, n_offset: u64, m: u64, rng: &mut RngStream) -> u64 {
    assert!(m >= 1, "sample_k_star requires m >= 1");
    let shifted = params.shifted(n_offset);
    let mut k = 1u64;
    for i in 1..m {
        let p = (shifted.theta + params.alpha * k as f64) / (shifted.theta + i as f64);
        if rng.bernoulli(p) {
            k += 1;
        }
    }
    k
}

/// Number of species with frequency exactly r in m draws from
/// PYP(alpha, theta + n_offset). Maintains the size -> block-count map of the
/// growing partition, O(k) memory.
pub fn sample_m_star(params: &PypParams, n_offset: u64, m: u64, r: u64, rng: &mut RngStream) -> u64 {
    assert!(m >= 1 && r >= 1 && r <= m, "sample_m_star requires 1 <= r <= m");
    let shifted = params.shifted(n_offset);
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    counts.insert(1, 1);
    let mut k = 1u64;
    for i in 1..m {
        let total = shifted.theta + i as f64;
        let new_mass = shifted.theta + params.alpha * k as f64;
        let u = rng.uniform() * total;
        if u < new_mass {
            *counts.entry(1).or_insert(0) += 1;
            k += 1;
            continue;
        }
        // Walk the size classes: class s has mass count_s * (s - alpha).
        let mut target = u - new_mass;
        let mut chosen = 0u64;
        for (&s, &c) in &counts {
            let mass = c as f64 * (s as f64 - params.alpha);
            if target < mass {
                chosen = s;
                break;
            }
            target -= mass;
        }
        if chosen == 0 {
            // Roundoff pushed the target past the end; take the largest class.
            chosen = *counts.keys().last().unwrap();
        }
        let c = counts.get_mut(&chosen).unwrap();
        *c -= 1;
        if *c == 0 {
            counts.remove(&chosen);
        }
        *counts.entry(chosen + 1).or_insert(0) += 1;
    }
    counts.get(&r).copied().unwrap_or(0)
}

/// log Pr[K_n = x] under PYP(alpha, theta).
pub fn k_n_log_pmf(params: &PypParams, n: u64, x: u64) -> Result<f64> {
    if x == 0 || x > n {
        return Err(Error::Constraint(format!("k_n_log_pmf requires 1 <= x <= n, got x={x}, n={n}")));
    }
    let (alpha, theta) = (params.alpha, params.theta);
    if params.is_dirichlet() {
        let ln_stirling = signless_stirling_noncentered(n, x, 0.0)?;
        return Ok(x as f64 * theta.ln() + ln_stirling - log_rising_factorial(theta, n)?);
    }
    let row = gen_factorial_row_checked(n as usize, alpha, 0.0);
    Ok(ln_block_count_ratio(alpha, theta, x, n) + row[x as usize].ln_abs)
}

/// Outcome of extending an observed sample by m predictive draws.
#[derive(Clone, Debug, Default)]
pub struct PredictiveExtension {
    /// Number of new species among the m additional draws.
    pub new_species: u64,
    /// Fingerprint of the new species' frequencies within the m draws.
    pub new_fingerprint: BTreeMap<u64, u64>,
    /// For each original block, whether it received at least one new draw.
    pub original_grew: Vec<bool>,
}

/// Forward-simulate m further draws of the predictive urn conditioned on the
/// observed block sizes. This is the closed-form-free oracle for all
/// posterior laws of counting functionals.
pub fn extend_sample(
    params: &PypParams,
    base_sizes: &[u64],
    m: u64,
    rng: &mut RngStream,
) -> PredictiveExtension {
    let base_k = base_sizes.len();
    let mut urn = Urn::from_sizes(base_sizes, m as usize);
    for _ in 0..m {
        urn.step(params, rng);
    }
    let mut ext = PredictiveExtension {
        new_species: (urn.sizes.len() - base_k) as u64,
        new_fingerprint: BTreeMap::new(),
        original_grew: Vec::with_capacity(base_k),
    };
    for (b, &s) in urn.sizes.iter().enumerate() {
        if b < base_k {
            ext.original_grew.push(s > base_sizes[b]);
        } else {
            *ext.new_fingerprint.entry(s).or_insert(0) += 1;
        }
    }
    ext
}
