//! Coverage probabilities: the probability mass of species observed exactly
//! r times in the sample (missing mass at r = 0). Exact Beta posteriors
//! under the Pitman-Yor prior, point estimates, equal-tailed credible
//! intervals, the Good-Turing baseline, and the prior-induced smoothed
//! Good-Turing diagnostic.

use crate::combinatorics::log_rising_factorial;
use crate::data::SampleSummary;
use crate::error::{Error, Result};
use crate::pyp::PypParams;
use crate::special::{beta_quantile, ln_gamma};

/// Beta(shape1, shape2) posterior for a coverage probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaPosterior {
    pub shape1: f64,
    pub shape2: f64,
}

impl BetaPosterior {
    pub fn mean(&self) -> f64 {
        self.shape1 / (self.shape1 + self.shape2)
    }
}

/// Posterior law of a coverage probability. The order-r posterior
/// degenerates to a point mass at zero when no species has frequency r;
/// that limit of the Beta law is tagged explicitly rather than erroring so
/// that downstream reports still carry a value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoveragePosterior {
    Beta(BetaPosterior),
    PointMassAtZero,
}

impl CoveragePosterior {
    pub fn mean(&self) -> f64 {
        match self {
            CoveragePosterior::Beta(b) => b.mean(),
            CoveragePosterior::PointMassAtZero => 0.0,
        }
    }

    /// Equal-tailed credible interval from the Beta quantiles.
    pub fn credible_interval(&self, level: f64) -> Result<(f64, f64)> {
        match self {
            CoveragePosterior::PointMassAtZero => Ok((0.0, 0.0)),
            CoveragePosterior::Beta(b) => credible_interval(b, level),
        }
    }
}

/// Good-Turing estimate (r+1) m_{r+1} / n.
///
/// Returns 0 when m_{r+1} = 0: the documented pathology of the baseline,
/// not an error.
pub fn good_turing(summary: &SampleSummary, r: u64) -> f64 {
    let m_next = summary.count_with_frequency(r + 1) as f64;
    (r as f64 + 1.0) * m_next / summary.n() as f64
}

/// Exact posterior of the order-r coverage probability.
pub fn posterior(params: &PypParams, summary: &SampleSummary, r: u64) -> CoveragePosterior {
    let (alpha, theta) = (params.alpha(), params.theta());
    let n = summary.n() as f64;
    if r == 0 {
        let k = summary.k() as f64;
        return CoveragePosterior::Beta(BetaPosterior {
            shape1: theta + alpha * k,
            shape2: n - alpha * k,
        });
    }
    let m_r = summary.count_with_frequency(r) as f64;
    if m_r == 0.0 {
        return CoveragePosterior::PointMassAtZero;
    }
    let shape1 = (r as f64 - alpha) * m_r;
    CoveragePosterior::Beta(BetaPosterior { shape1, shape2: theta + n - shape1 })
}

/// Posterior-mean estimate of the order-r coverage probability:
/// (theta + k alpha)/(theta + n) at r = 0, (r - alpha) m_r / (theta + n) for r >= 1.
pub fn estimate(params: &PypParams, summary: &SampleSummary, r: u64) -> f64 {
    let (alpha, theta) = (params.alpha(), params.theta());
    let n = summary.n() as f64;
    if r == 0 {
        (theta + summary.k() as f64 * alpha) / (theta + n)
    } else {
        (r as f64 - alpha) * summary.count_with_frequency(r) as f64 / (theta + n)
    }
}

/// Equal-tailed interval of a Beta posterior at the given credibility level.
pub fn credible_interval(post: &BetaPosterior, level: f64) -> Result<(f64, f64)> {
    if !(0.0 < level && level < 1.0) {
        return Err(Error::domain("credible_interval", format!("level must lie in (0,1), got {level}")));
    }
    let tail = 0.5 * (1.0 - level);
    let lo = beta_quantile(post.shape1, post.shape2, tail)?;
    let hi = beta_quantile(post.shape1, post.shape2, 1.0 - tail)?;
    Ok((lo, hi))
}

/// The prior-induced smoothed count m'_{r+1} = alpha (1-alpha)_(r) k / (r+1)!.
///
/// Undefined in the Dirichlet limit (the smoothing mass degenerates as
/// alpha -> 0), which is reported as a domain error.
pub fn smoothed_count(params: &PypParams, k: u64, r: u64) -> Result<f64> {
    let alpha = params.alpha();
    if alpha == 0.0 {
        return Err(Error::domain("smoothed_count", "smoothed Good-Turing counts require alpha > 0".to_string()));
    }
    let ln = alpha.ln() + log_rising_factorial(1.0 - alpha, r)? - ln_gamma(r as f64 + 2.0)
        + (k as f64).ln();
    Ok(ln.exp())
}

/// Smoothed-Good-Turing diagnostic: the smoothed plug-in (r+1) m'_{r+1} / n
/// next to the exact posterior-mean estimate, and their relative gap.
#[derive(Clone, Copy, Debug)]
pub struct SmoothedGtDiagnostic {
    pub smoothed_estimate: f64,
    pub bnp_estimate: f64,
    pub relative_gap: f64,
}

pub fn smoothed_gt_diagnostic(
    params: &PypParams,
    summary: &SampleSummary,
    r: u64,
) -> Result<SmoothedGtDiagnostic> {
    let smoothed = (r as f64 + 1.0) * smoothed_count(params, summary.k(), r)? / summary.n() as f64;
    let exact = estimate(params, summary, r);
    let scale = exact.abs().max(f64::MIN_POSITIVE);
    Ok(SmoothedGtDiagnostic {
        smoothed_estimate: smoothed,
        bnp_estimate: exact,
        relative_gap: (smoothed - exact).abs() / scale,
    })
}
