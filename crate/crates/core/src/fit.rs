//! Estimation of the prior parameters (alpha, theta): concave profile
//! maximum likelihood for the discount, the auxiliary scale estimator, the
//! exact joint likelihood and its nested maximization, tail-index
//! functionals, and a grid hierarchical-Bayes posterior over
//! (alpha, gamma = theta + alpha).

use crate::combinatorics::{digamma, trigamma};
use crate::data::SampleSummary;
use crate::error::{Error, Result};
use crate::special::{ln_gamma, log_sum_exp};

const SCORE_TOL: f64 = 1e-9;
const PARAM_TOL: f64 = 1e-8;
const MAX_ITER: usize = 200;
const ALPHA_EDGE: f64 = 1e-12;

/// Cumulative fingerprint tails c_i = #{species with frequency > i},
/// bucketed between consecutive distinct frequencies so that profile
/// log-likelihood, score and curvature all cost O(#distinct frequencies).
///
/// Within a bucket [from, to) the tail count is constant and
/// sum_{i=from}^{to-1} f(i - alpha) collapses to a difference of log-gamma
/// (or digamma/trigamma) evaluations.
#[derive(Clone, Debug)]
pub struct FrequencyTails {
    n: u64,
    k: u64,
    /// (from, to, tail) with 1 <= from < to and tail = c_i on [from, to).
    buckets: Vec<(f64, f64, f64)>,
}

impl FrequencyTails {
    pub fn new(summary: &SampleSummary) -> FrequencyTails {
        let mut buckets = Vec::with_capacity(summary.fingerprint().len() + 1);
        let mut edge = 1u64;
        let mut tail = summary.k();
        for (&size, &mult) in summary.fingerprint() {
            if size > edge && tail > 0 {
                buckets.push((edge as f64, size as f64, tail as f64));
            }
            tail -= mult;
            edge = size;
        }
        FrequencyTails { n: summary.n(), k: summary.k(), buckets }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    fn check_alpha(alpha: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain("fit", format!("alpha must lie in (0,1), got {alpha}")));
        }
        Ok(())
    }

    /// Profile log-likelihood (K_n - 1) log alpha + sum_i c_i log(i - alpha).
    pub fn log_lik(&self, alpha: f64) -> Result<f64> {
        Self::check_alpha(alpha)?;
        let mut ll = (self.k as f64 - 1.0) * alpha.ln();
        for &(from, to, tail) in &self.buckets {
            ll += tail * (ln_gamma(to - alpha) - ln_gamma(from - alpha));
        }
        Ok(ll)
    }

    /// d/dalpha of the profile log-likelihood.
    pub fn score(&self, alpha: f64) -> Result<f64> {
        Self::check_alpha(alpha)?;
        let mut s = (self.k as f64 - 1.0) / alpha;
        for &(from, to, tail) in &self.buckets {
            s -= tail * (digamma(to - alpha)? - digamma(from - alpha)?);
        }
        Ok(s)
    }

    /// Negated second derivative (K_n - 1)/alpha^2 + sum_i c_i/(i - alpha)^2.
    pub fn observed_info(&self, alpha: f64) -> Result<f64> {
        Self::check_alpha(alpha)?;
        let mut v = (self.k as f64 - 1.0) / (alpha * alpha);
        for &(from, to, tail) in &self.buckets {
            v += tail * (trigamma(from - alpha)? - trigamma(to - alpha)?);
        }
        Ok(v)
    }
}

/// Profile log-likelihood of the discount at theta = 0 structure,
/// ell_n(alpha, 0) = (K_n-1) log alpha + sum_i c_i log(i - alpha).
pub fn log_lik_profile(summary: &SampleSummary, alpha: f64) -> Result<f64> {
    FrequencyTails::new(summary).log_lik(alpha)
}

/// Observed information -d^2/dalpha^2 of the profile log-likelihood.
pub fn observed_info(summary: &SampleSummary, alpha: f64) -> Result<f64> {
    FrequencyTails::new(summary).observed_info(alpha)
}

fn check_pathology(summary: &SampleSummary) -> Result<()> {
    if summary.k() == summary.n() {
        return Err(Error::Pathology(
            "K_n = n (all species distinct): the profile likelihood increases toward alpha = 1".into(),
        ));
    }
    if summary.k() == 1 {
        return Err(Error::Pathology(
            "K_n = 1 (a single species): the profile likelihood decreases from alpha = 0".into(),
        ));
    }
    Ok(())
}

/// Unique maximizer of the profile log-likelihood over (0,1).
///
/// The score is strictly decreasing (concavity), so a bisection bracket on
/// (1e-12, 1-1e-12) followed by a Newton polish to |score| <= 1e-9 is exact.
pub fn mle_alpha(summary: &SampleSummary) -> Result<f64> {
    check_pathology(summary)?;
    let tails = FrequencyTails::new(summary);
    mle_alpha_from_tails(&tails)
}

pub fn mle_alpha_from_tails(tails: &FrequencyTails) -> Result<f64> {
    let mut lo = ALPHA_EDGE;
    let mut hi = 1.0 - ALPHA_EDGE;
    if tails.score(lo)? <= 0.0 || tails.score(hi)? >= 0.0 {
        return Err(Error::Pathology("profile score does not change sign inside (0,1)".into()));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if tails.score(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut alpha = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        let s = tails.score(alpha)?;
        if s.abs() <= SCORE_TOL {
            return Ok(alpha);
        }
        let v = tails.observed_info(alpha)?;
        let next = alpha + s / v;
        if !(next > lo && next < hi) {
            break;
        }
        alpha = next;
    }
    let s = tails.score(alpha)?;
    if s.abs() <= SCORE_TOL {
        Ok(alpha)
    } else {
        Err(Error::Numerical {
            context: "mle_alpha",
            message: format!("score {s} above tolerance at alpha={alpha}"),
        })
    }
}

/// Exact joint log-likelihood of the observed partition:
/// log Gamma(theta+1) - log Gamma(theta/alpha+1) + log Gamma(theta/alpha+K_n)
/// - log Gamma(theta+n) + ell_n(alpha, 0). Equals the log EPPF of the data.
pub fn log_lik_joint(summary: &SampleSummary, alpha: f64, theta: f64) -> Result<f64> {
    let tails = FrequencyTails::new(summary);
    log_lik_joint_from_tails(&tails, alpha, theta)
}

pub fn log_lik_joint_from_tails(tails: &FrequencyTails, alpha: f64, theta: f64) -> Result<f64> {
    if !(theta > -alpha) {
        return Err(Error::domain("log_lik_joint", format!("theta must exceed -alpha, got theta={theta}, alpha={alpha}")));
    }
    let ratio = theta_prefactor(tails.k(), tails.n(), alpha, theta);
    Ok(ratio + tails.log_lik(alpha)?)
}

/// log Gamma(theta+1) - log Gamma(theta/alpha+1) + log Gamma(theta/alpha+K_n)
/// - log Gamma(theta+n); the theta-dependent factor of the likelihood.
fn theta_prefactor(k: u64, n: u64, alpha: f64, theta: f64) -> f64 {
    // theta/alpha + c evaluated as (theta + c alpha)/alpha to survive
    // theta -> -alpha.
    let ta1 = (theta + alpha) / alpha;
    let tak = (theta + k as f64 * alpha) / alpha;
    ln_gamma(theta + 1.0) - ln_gamma(ta1) + ln_gamma(tak) - ln_gamma(theta + n as f64)
}

/// d/dtheta of the joint log-likelihood:
/// psi(theta+1) + psi(theta/alpha+K_n)/alpha - psi(theta/alpha+1)/alpha - psi(theta+n).
fn theta_score(k: u64, n: u64, alpha: f64, theta: f64) -> Result<f64> {
    let ta1 = (theta + alpha) / alpha;
    let tak = (theta + k as f64 * alpha) / alpha;
    Ok(digamma(theta + 1.0)? + (digamma(tak)? - digamma(ta1)?) / alpha - digamma(theta + n as f64)?)
}

/// Root of a strictly decreasing score on (lower, infinity), by expanding
/// bracket and bisection; the score diverges to +inf at the lower edge.
fn decreasing_score_root<F>(lower: f64, score: F, context: &'static str) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    // Find a starting point with positive score just above the boundary.
    let mut lo = lower + 0.25;
    let mut gap = 0.25;
    for _ in 0..60 {
        if score(lo)? > 0.0 {
            break;
        }
        gap *= 0.5;
        lo = lower + gap;
    }
    if score(lo)? <= 0.0 {
        // Score is already nonpositive arbitrarily close to the boundary.
        return Ok(lo);
    }
    let mut hi = lo.max(lower + 1.0);
    let mut iter = 0;
    while score(hi)? > 0.0 {
        hi = lower + 2.0 * (hi - lower);
        iter += 1;
        if iter > 60 {
            return Err(Error::Numerical { context, message: format!("no sign change up to {hi}") });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s = score(mid)?;
        if s.abs() <= SCORE_TOL {
            return Ok(mid);
        }
        if s > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * (1.0 + hi.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Maximizer over theta of the joint log-likelihood at fixed alpha,
/// safeguarded by golden-section when the score bracket fails.
pub fn theta_max_given_alpha(summary: &SampleSummary, alpha: f64) -> Result<f64> {
    let tails = FrequencyTails::new(summary);
    theta_max_from_tails(&tails, alpha)
}

fn theta_max_from_tails(tails: &FrequencyTails, alpha: f64) -> Result<f64> {
    let (k, n) = (tails.k(), tails.n());
    match decreasing_score_root(-alpha, |t| theta_score(k, n, alpha, t), "theta_max_given_alpha") {
        Ok(t) => Ok(t),
        Err(_) => {
            // Golden-section fallback on a wide bracket.
            let f = |t: f64| theta_prefactor(k, n, alpha, t);
            Ok(golden_section_max(f, -alpha + 1e-10, (n as f64).max(10.0) * 10.0, PARAM_TOL))
        }
    }
}

fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.6180339887498949;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..MAX_ITER {
        if (b - a).abs() < tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// The auxiliary scale estimator: maximizer over theta of
/// Psi_n(alpha, theta) = log Gamma(theta+1) - log Gamma(theta/alpha+1)
///                       + theta log(K_n^{1/alpha} / n).
/// The score psi(theta+1) - psi(theta/alpha+1)/alpha + log(K_n^{1/alpha}/n)
/// is strictly decreasing on (-alpha, inf), so the root is unique.
pub fn aux_theta(summary: &SampleSummary, alpha: f64) -> Result<f64> {
    FrequencyTails::check_alpha(alpha)?;
    let k = summary.k() as f64;
    let n = summary.n() as f64;
    let drift = k.ln() / alpha - n.ln();
    decreasing_score_root(
        -alpha,
        |t| Ok(digamma(t + 1.0)? - digamma((t + alpha) / alpha)? / alpha + drift),
        "aux_theta",
    )
}

/// Which fitting route produced a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitMethod {
    ProfileMle,
    JointMle,
    Hierarchical,
}

impl FitMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitMethod::ProfileMle => "profile-mle",
            FitMethod::JointMle => "joint-mle",
            FitMethod::Hierarchical => "hierarchical",
        }
    }
}

/// Fitted prior parameters with the diagnostics the asymptotic theory
/// attaches to them.
#[derive(Clone, Debug)]
pub struct FitReport {
    pub alpha_hat: f64,
    pub theta_hat: f64,
    pub log_lik_at_max: f64,
    /// Observed information of the profile likelihood at the profile
    /// maximizer (the BvM scaling).
    pub observed_info: f64,
    pub method: FitMethod,
    /// Tail-mass estimate K_n / (Gamma(1 - alpha_hat) n^{alpha_hat}).
    pub l_hat: f64,
    /// Profile maximizer, kept alongside the joint one for the proximity
    /// diagnostic |alpha_hat - profile_alpha|.
    pub profile_alpha: f64,
    /// Auxiliary scale estimator at the profile maximizer.
    pub aux_theta: f64,
    /// Tail functional theta_star implied by (l_hat, alpha_hat).
    pub theta_star_hat: f64,
    pub gamma_hat: f64,
    pub alpha_proximity: f64,
}

/// Empirical-Bayes fit with the profile route: alpha from the concave
/// profile likelihood, theta from the auxiliary estimator.
pub fn fit_profile(summary: &SampleSummary) -> Result<FitReport> {
    let tails = FrequencyTails::new(summary);
    check_pathology(summary)?;
    let alpha0 = mle_alpha_from_tails(&tails)?;
    let t_hat = aux_theta(summary, alpha0)?;
    let (l_hat, theta_star) = tail_functionals(summary, alpha0)?;
    Ok(FitReport {
        alpha_hat: alpha0,
        theta_hat: t_hat,
        log_lik_at_max: log_lik_joint_from_tails(&tails, alpha0, t_hat)?,
        observed_info: tails.observed_info(alpha0)?,
        method: FitMethod::ProfileMle,
        l_hat,
        profile_alpha: alpha0,
        aux_theta: t_hat,
        theta_star_hat: theta_star,
        gamma_hat: t_hat + alpha0,
        alpha_proximity: 0.0,
    })
}

/// Joint maximum likelihood: nested optimization with the inner theta
/// maximization by safeguarded root-finding and an outer golden-section over
/// alpha initialized at the profile maximizer.
pub fn mle_joint(summary: &SampleSummary) -> Result<FitReport> {
    check_pathology(summary)?;
    let tails = FrequencyTails::new(summary);
    let alpha0 = mle_alpha_from_tails(&tails)?;
    let v_hat = tails.observed_info(alpha0)?;

    let profiled = |alpha: f64| -> Result<(f64, f64)> {
        let theta = theta_max_from_tails(&tails, alpha)?;
        Ok((log_lik_joint_from_tails(&tails, alpha, theta)?, theta))
    };

    // Expand the bracket around the profile maximizer until the best value
    // sits strictly inside.
    let mut lo = (alpha0 - 0.2).max(ALPHA_EDGE);
    let mut hi = (alpha0 + 0.2).min(1.0 - ALPHA_EDGE);
    for _ in 0..20 {
        let at_lo = profiled(lo)?.0;
        let at_hi = profiled(hi)?.0;
        let inside = profiled(0.5 * (lo + hi))?.0;
        if at_lo > inside && lo > ALPHA_EDGE * 2.0 {
            lo = (lo - 0.2).max(ALPHA_EDGE);
        } else if at_hi > inside && hi < 1.0 - ALPHA_EDGE * 2.0 {
            hi = (hi + 0.2).min(1.0 - ALPHA_EDGE);
        } else {
            break;
        }
    }
    let g = |alpha: f64| profiled(alpha).map(|p| p.0).unwrap_or(f64::NEG_INFINITY);
    let alpha_hat = golden_section_max(g, lo, hi, PARAM_TOL);
    let (log_lik_at_max, theta_hat) = profiled(alpha_hat)?;
    let t_aux = aux_theta(summary, alpha0)?;
    let (l_hat, theta_star) = tail_functionals(summary, alpha_hat)?;
    Ok(FitReport {
        alpha_hat,
        theta_hat,
        log_lik_at_max,
        observed_info: v_hat,
        method: FitMethod::JointMle,
        l_hat,
        profile_alpha: alpha0,
        aux_theta: t_aux,
        theta_star_hat: theta_star,
        gamma_hat: theta_hat + alpha_hat,
        alpha_proximity: (alpha_hat - alpha0).abs(),
    })
}

/// Tail functionals implied by a fitted discount: the tail-mass estimate
/// L_hat = K_n / (Gamma(1-alpha) n^alpha) and the scale theta_star solving
/// L = exp{psi(theta/alpha + 1) - alpha psi(theta + 1)} / Gamma(1-alpha).
///
/// The map theta -> psi(theta/alpha+1) - alpha psi(theta+1) is strictly
/// increasing on (-alpha, inf), so the inverse is a bisection.
pub fn tail_functionals(summary: &SampleSummary, alpha_hat: f64) -> Result<(f64, f64)> {
    FrequencyTails::check_alpha(alpha_hat)?;
    let k = summary.k() as f64;
    let n = summary.n() as f64;
    let ln_l = k.ln() - ln_gamma(1.0 - alpha_hat) - alpha_hat * n.ln();
    let theta_star = theta_star_from_tail_mass(ln_l.exp(), alpha_hat)?;
    Ok((ln_l.exp(), theta_star))
}

/// Invert L = exp{psi(theta/alpha+1) - alpha psi(theta+1)}/Gamma(1-alpha)
/// for theta on (-alpha, inf).
pub fn theta_star_from_tail_mass(tail_mass: f64, alpha: f64) -> Result<f64> {
    if !(tail_mass > 0.0) {
        return Err(Error::domain("theta_star_from_tail_mass", format!("tail mass must be positive, got {tail_mass}")));
    }
    FrequencyTails::check_alpha(alpha)?;
    let target = tail_mass.ln() + ln_gamma(1.0 - alpha);
    // Negated increasing map gives a decreasing score with a +inf limit at
    // the left edge.
    decreasing_score_root(
        -alpha,
        |t| Ok(target - (digamma((t + alpha) / alpha)? - alpha * digamma(t + 1.0)?)),
        "theta_star_from_tail_mass",
    )
}

/// Forward relation of [`theta_star_from_tail_mass`].
pub fn tail_mass_from_theta_star(theta_star: f64, alpha: f64) -> Result<f64> {
    FrequencyTails::check_alpha(alpha)?;
    let e = digamma((theta_star + alpha) / alpha)? - alpha * digamma(theta_star + 1.0)?;
    Ok((e - ln_gamma(1.0 - alpha)).exp())
}

/// Unnormalized log-weight of the limiting scale posterior H_star at
/// gamma = z: (z/alpha) log[L Gamma(1-alpha)] + log Gamma(1-alpha+z)
/// - log Gamma(z/alpha).
pub fn hstar_log_weight(z: f64, tail_mass: f64, alpha_star: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::domain("hstar_log_weight", format!("z must be positive, got {z}")));
    }
    if !(tail_mass > 0.0) {
        return Err(Error::domain("hstar_log_weight", format!("tail mass must be positive, got {tail_mass}")));
    }
    FrequencyTails::check_alpha(alpha_star)?;
    let ln_lg = tail_mass.ln() + ln_gamma(1.0 - alpha_star);
    Ok(z / alpha_star * ln_lg + ln_gamma(1.0 - alpha_star + z) - ln_gamma(z / alpha_star))
}

/// Prior on the discount parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaPrior {
    Uniform,
    Beta { shape1: f64, shape2: f64 },
}

impl AlphaPrior {
    fn log_density(&self, alpha: f64) -> f64 {
        match *self {
            AlphaPrior::Uniform => 0.0,
            AlphaPrior::Beta { shape1, shape2 } => {
                (shape1 - 1.0) * alpha.ln() + (shape2 - 1.0) * (-alpha).ln_1p()
            }
        }
    }
}

/// Prior on the shifted scale gamma = theta + alpha.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GammaPrior {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Flat,
}

impl GammaPrior {
    pub fn log_density(&self, gamma: f64) -> f64 {
        match *self {
            GammaPrior::Exponential { rate } => -rate * gamma,
            GammaPrior::Gamma { shape, rate } => (shape - 1.0) * gamma.ln() - rate * gamma,
            GammaPrior::Flat => 0.0,
        }
    }
}

/// Prior specification for the hierarchical posterior. Defaults: uniform on
/// the discount, unit-rate exponential on gamma, grid extent gamma_max = 20.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorSpec {
    pub alpha: AlphaPrior,
    pub gamma: GammaPrior,
    pub gamma_max: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec { alpha: AlphaPrior::Uniform, gamma: GammaPrior::Exponential { rate: 1.0 }, gamma_max: 20.0 }
    }
}

/// Normalized grid posterior over (alpha, gamma).
#[derive(Clone, Debug)]
pub struct GridPosterior {
    prior: PriorSpec,
    alpha_grid: Vec<f64>,
    gamma_grid: Vec<f64>,
    /// Row-major (alpha x gamma) normalized log posterior.
    log_post: Vec<f64>,
    /// Profile maximizer and its observed information when the data admits
    /// them (the BvM standardization diagnostic).
    profile_alpha: Option<f64>,
    observed_info: Option<f64>,
}

impl GridPosterior {
    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn alpha_grid(&self) -> &[f64] {
        &self.alpha_grid
    }

    pub fn gamma_grid(&self) -> &[f64] {
        &self.gamma_grid
    }

    pub fn log_post(&self) -> &[f64] {
        &self.log_post
    }

    pub fn profile_alpha(&self) -> Option<f64> {
        self.profile_alpha
    }

    pub fn observed_info(&self) -> Option<f64> {
        self.observed_info
    }

    pub fn alpha_marginal(&self) -> Vec<f64> {
        let g = self.gamma_grid.len();
        self.alpha_grid
            .iter()
            .enumerate()
            .map(|(i, _)| log_sum_exp(&self.log_post[i * g..(i + 1) * g]).exp())
            .collect()
    }

    pub fn gamma_marginal(&self) -> Vec<f64> {
        let g = self.gamma_grid.len();
        let mut out = vec![f64::NEG_INFINITY; g];
        for row in self.log_post.chunks_exact(g) {
            for (acc, &cell) in out.iter_mut().zip(row) {
                *acc = crate::special::log_add(*acc, cell);
            }
        }
        out.into_iter().map(f64::exp).collect()
    }

    pub fn alpha_mean_sd(&self) -> (f64, f64) {
        moments(&self.alpha_grid, &self.alpha_marginal())
    }

    pub fn gamma_mean_sd(&self) -> (f64, f64) {
        moments(&self.gamma_grid, &self.gamma_marginal())
    }

    /// The alpha marginal on the standardized scale
    /// (alpha - profile_alpha) * sqrt(observed_info); under the weak
    /// Bernstein-von Mises behaviour this approaches a standard normal.
    pub fn standardized_alpha_marginal(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let a0 = self.profile_alpha?;
        let scale = self.observed_info?.sqrt();
        let z = self.alpha_grid.iter().map(|&a| (a - a0) * scale).collect();
        Some((z, self.alpha_marginal()))
    }
}

fn moments(grid: &[f64], probs: &[f64]) -> (f64, f64) {
    let mean: f64 = grid.iter().zip(probs).map(|(&x, &p)| x * p).sum();
    let var: f64 = grid.iter().zip(probs).map(|(&x, &p)| (x - mean) * (x - mean) * p).sum();
    (mean, var.max(0.0).sqrt())
}

/// Quantile of a discrete marginal (step-CDF inversion).
pub fn marginal_quantile(grid: &[f64], probs: &[f64], q: f64) -> f64 {
    let mut acc = 0.0;
    for (&x, &p) in grid.iter().zip(probs) {
        acc += p;
        if acc >= q {
            return x;
        }
    }
    *grid.last().expect("nonempty grid")
}

/// Total variation distance between two discrete laws on the same grid.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(&a, &b)| (a - b).abs()).sum::<f64>()
}

/// Grid hierarchical-Bayes posterior over (alpha, gamma): cell-midpoint
/// grids on (0,1) x (0, gamma_max], log posterior
/// ell_n(alpha, gamma - alpha) + log g_alpha + log g_gamma, normalized by
/// log-sum-exp in a fixed reduction order.
pub fn hierarchical_posterior(
    summary: &SampleSummary,
    prior: &PriorSpec,
    alpha_cells: usize,
    gamma_cells: usize,
) -> Result<GridPosterior> {
    if alpha_cells < 2 || gamma_cells < 2 {
        return Err(Error::Constraint("grids need at least two cells per axis".into()));
    }
    if !(prior.gamma_max > 0.0) {
        return Err(Error::domain("hierarchical_posterior", "gamma_max must be positive".to_string()));
    }
    let tails = FrequencyTails::new(summary);
    let alpha_grid: Vec<f64> = (0..alpha_cells).map(|i| (i as f64 + 0.5) / alpha_cells as f64).collect();
    let gamma_grid: Vec<f64> =
        (0..gamma_cells).map(|j| prior.gamma_max * (j as f64 + 0.5) / gamma_cells as f64).collect();
    let mut log_post = vec![f64::NEG_INFINITY; alpha_cells * gamma_cells];
    for (i, &alpha) in alpha_grid.iter().enumerate() {
        let profile = tails.log_lik(alpha)?;
        let a_prior = prior.alpha.log_density(alpha);
        for (j, &gamma) in gamma_grid.iter().enumerate() {
            let theta = gamma - alpha;
            let ll = theta_prefactor(tails.k(), tails.n(), alpha, theta) + profile;
            log_post[i * gamma_cells + j] = ll + a_prior + prior.gamma.log_density(gamma);
        }
    }
    let norm = log_sum_exp(&log_post);
    if norm == f64::NEG_INFINITY || norm.is_nan() {
        return Err(Error::Numerical {
            context: "hierarchical_posterior",
            message: "posterior mass vanished on the whole grid".into(),
        });
    }
    for v in &mut log_post {
        *v -= norm;
    }
    let (profile_alpha, observed_info) = match mle_alpha_from_tails(&tails) {
        Ok(a0) => (Some(a0), tails.observed_info(a0).ok()),
        Err(_) => (None, None),
    };
    Ok(GridPosterior { prior: *prior, alpha_grid, gamma_grid, log_post, profile_alpha, observed_info })
}

/// The limiting scale posterior H_star discretized on a gamma grid under the
/// given prior, normalized to a probability vector.
pub fn hstar_on_grid(gamma_grid: &[f64], tail_mass: f64, alpha_star: f64, prior: &GammaPrior) -> Result<Vec<f64>> {
    let mut logs = Vec::with_capacity(gamma_grid.len());
    for &z in gamma_grid {
        logs.push(hstar_log_weight(z, tail_mass, alpha_star)? + prior.log_density(z));
    }
    let norm = log_sum_exp(&logs);
    Ok(logs.into_iter().map(|l| (l - norm).exp()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pyp::{eppf_log, sample_partition, PypParams};
    use crate::rng::RngStream;

    const EULER_GAMMA: f64 = 0.5772156649015329;

    #[test]
    fn profile_log_lik_small_example() {
        // fingerprint {1:1, 2:1}: c_1 = 1, c_2 = 0, so ell = log a + log(1-a).
        let s = SampleSummary::from_fingerprint(&[(1, 1), (2, 1)]).unwrap();
        for &a in &[0.1_f64, 0.5, 0.9] {
            let want = a.ln() + (1.0 - a).ln();
            assert!((log_lik_profile(&s, a).unwrap() - want).abs() < 1e-12, "a={a}");
        }
        assert!(log_lik_profile(&s, 0.0).is_err());
        assert!(log_lik_profile(&s, 1.0).is_err());
    }

    #[test]
    fn profile_log_lik_monotone_pathologies() {
        // All singletons: (n-1) log alpha, increasing.
        let s = SampleSummary::from_fingerprint(&[(1, 5)]).unwrap();
        for &a in &[0.2_f64, 0.5, 0.8] {
            let want = 4.0 * a.ln();
            assert!((log_lik_profile(&s, a).unwrap() - want).abs() < 1e-12);
        }
        assert!(mle_alpha(&s).is_err());

        // A single block: sum_i log(i - alpha), decreasing.
        let s = SampleSummary::from_fingerprint(&[(4, 1)]).unwrap();
        for &a in &[0.2_f64, 0.7] {
            let want = (1.0 - a).ln() + (2.0 - a).ln() + (3.0 - a).ln();
            assert!((log_lik_profile(&s, a).unwrap() - want).abs() < 1e-12);
        }
        let err = mle_alpha(&s).unwrap_err();
        assert!(err.to_string().contains("K_n = 1"), "{err}");
    }

    #[test]
    fn mle_alpha_closed_form_case() {
        // ell = log a + log(1-a) peaks at 1/2.
        let s = SampleSummary::from_fingerprint(&[(1, 1), (2, 1)]).unwrap();
        let a = mle_alpha(&s).unwrap();
        assert!((a - 0.5).abs() < 1e-9);
        let tails = FrequencyTails::new(&s);
        assert!(tails.score(a).unwrap().abs() <= 1e-9);
        assert!(tails.observed_info(a).unwrap() > 0.0);
    }

    #[test]
    fn observed_info_example_and_finite_difference() {
        let s = SampleSummary::from_fingerprint(&[(1, 1), (2, 1)]).unwrap();
        // (K-1)/a^2 + c_1/(1-a)^2 = 4 + 4 at a = 1/2.
        assert!((observed_info(&s, 0.5).unwrap() - 8.0).abs() < 1e-9);

        let s = SampleSummary::from_frequencies(&[9, 4, 4, 2, 1, 1, 1]).unwrap();
        let tails = FrequencyTails::new(&s);
        let h = 1e-4;
        for &a in &[0.25, 0.5, 0.75] {
            let f = |x: f64| tails.log_lik(x).unwrap();
            let second = (f(a + h) - 2.0 * f(a) + f(a - h)) / (h * h);
            let got = tails.observed_info(a).unwrap();
            let rel = (got + second).abs() / got.abs();
            assert!(rel < 1e-6, "a={a}: info {got}, fd {second}");
        }
    }

    #[test]
    fn bucketed_profile_matches_direct_sum() {
        // The bucketed log-gamma evaluation against the literal
        // sum_{i} c_i log(i - alpha) with c_i = #{species with frequency > i}.
        let s = SampleSummary::from_frequencies(&[12, 12, 7, 3, 3, 3, 2, 1, 1]).unwrap();
        let tails = FrequencyTails::new(&s);
        let maxf = s.max_frequency();
        for &alpha in &[0.05f64, 0.4, 0.93] {
            let mut direct = (s.k() as f64 - 1.0) * alpha.ln();
            for i in 1..maxf {
                let c_i: u64 = s.fingerprint().iter().filter(|(&r, _)| r > i).map(|(_, &m)| m).sum();
                direct += c_i as f64 * (i as f64 - alpha).ln();
            }
            let got = tails.log_lik(alpha).unwrap();
            assert!((got - direct).abs() < 1e-10, "alpha={alpha}: {got} vs {direct}");
        }
    }

    #[test]
    fn score_matches_finite_difference() {
        let s = SampleSummary::from_frequencies(&[6, 3, 2, 2, 1, 1]).unwrap();
        let tails = FrequencyTails::new(&s);
        let h = 1e-6;
        for &a in &[0.15, 0.5, 0.85] {
            let f = |x: f64| tails.log_lik(x).unwrap();
            let fd = (f(a + h) - f(a - h)) / (2.0 * h);
            let got = tails.score(a).unwrap();
            assert!((got - fd).abs() / got.abs().max(1.0) < 1e-6, "a={a}: {got} vs {fd}");
        }
    }

    #[test]
    fn aux_theta_sign_change_example() {
        // K_n = n^alpha exactly: n = 16, K = 4, alpha = 1/2. The score at 0
        // is gamma(1/alpha - 1) > 0 and negative at 1.
        let mut pairs = vec![(13u64, 1u64)];
        pairs.push((1, 3));
        let s = SampleSummary::from_fingerprint(&pairs).unwrap();
        assert_eq!((s.n(), s.k()), (16, 4));
        let drift = (4.0_f64).ln() / 0.5 - 16.0_f64.ln();
        assert!(drift.abs() < 1e-12);
        let g0 = digamma(1.0).unwrap() - digamma(1.0).unwrap() / 0.5;
        assert!((g0 - EULER_GAMMA).abs() < 1e-10, "{g0}");
        let g1 = digamma(2.0).unwrap() - digamma(3.0).unwrap() / 0.5;
        assert!(g1 < 0.0);
        let root = aux_theta(&s, 0.5).unwrap();
        assert!(root > 0.0 && root < 1.0, "root {root}");
    }

    #[test]
    fn aux_theta_decreasing_in_n() {
        // At fixed K_n, a larger n lowers the drift and hence the root.
        let mut last = f64::INFINITY;
        for &extra in &[10u64, 30, 100, 300] {
            let s = SampleSummary::from_fingerprint(&[(1, 3), (extra, 1)]).unwrap();
            let root = aux_theta(&s, 0.5).unwrap();
            assert!(root < last, "n={}: {root} !< {last}", s.n());
            last = root;
        }
    }

    #[test]
    fn joint_log_lik_equals_eppf() {
        let mut rng = RngStream::new(314, 0);
        for &(a, t) in &[(0.5, 1.0), (0.25, -0.2), (0.7, 0.0), (0.4, 3.0)] {
            let p = PypParams::new(a, t).unwrap();
            for n in 2..=8u64 {
                let part = sample_partition(&p, n, &mut rng);
                let s = SampleSummary::from_frequencies(part.block_sizes()).unwrap();
                let want = eppf_log(&p, part.block_sizes()).unwrap();
                let got = log_lik_joint(&s, a, t).unwrap();
                assert!((got - want).abs() < 1e-10, "a={a} t={t} n={n}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn joint_log_lik_depends_only_on_fingerprint() {
        let s1 = SampleSummary::from_frequencies(&[4, 2, 1, 1]).unwrap();
        let s2 = SampleSummary::from_frequencies(&[1, 2, 1, 4]).unwrap();
        let a = log_lik_joint(&s1, 0.33, 0.77).unwrap();
        let b = log_lik_joint(&s2, 0.33, 0.77).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(log_lik_joint(&s1, 0.33, -0.5).is_err());
    }

    #[test]
    fn joint_mle_recovers_on_simulated_data() {
        let p = PypParams::new(0.5, 1.0).unwrap();
        let mut rng = RngStream::new(999, 0);
        let part = sample_partition(&p, 50_000, &mut rng);
        let s = SampleSummary::from_frequencies(part.block_sizes()).unwrap();
        let report = mle_joint(&s).unwrap();
        assert!((report.alpha_hat - 0.5).abs() < 0.07, "alpha {}", report.alpha_hat);
        assert!(report.theta_hat > -report.alpha_hat);
        assert!(report.observed_info > 0.0);
        // The joint discount stays near the profile one at the log(n)/n^alpha rate.
        let rate = 10.0 * (50_000.0_f64).ln() / (50_000.0_f64).powf(report.alpha_hat);
        assert!(report.alpha_proximity < rate, "proximity {}", report.alpha_proximity);
        // And the joint likelihood dominates both single-route fits.
        let profile = fit_profile(&s).unwrap();
        assert!(report.log_lik_at_max >= profile.log_lik_at_max - 1e-6);
    }

    #[test]
    fn theta_inner_max_is_a_maximum() {
        let s = SampleSummary::from_frequencies(&[9, 5, 3, 2, 1, 1, 1, 1]).unwrap();
        for &a in &[0.3, 0.6] {
            let t = theta_max_given_alpha(&s, a).unwrap();
            let f = |x: f64| log_lik_joint(&s, a, x).unwrap();
            assert!(f(t) >= f(t + 0.05) && f(t) >= f((t - 0.05).max(-a + 1e-6)), "a={a} t={t}");
        }
    }

    #[test]
    fn tail_functionals_anchor() {
        // alpha = 1/2, L = exp(-gamma/2)/sqrt(pi) corresponds to theta_star = 0.
        let l = (-EULER_GAMMA / 2.0).exp() / std::f64::consts::PI.sqrt();
        let theta = theta_star_from_tail_mass(l, 0.5).unwrap();
        assert!(theta.abs() < 1e-7, "theta {theta}");

        // Monotonicity in L.
        let mut last = f64::NEG_INFINITY;
        for &scale in &[0.5, 1.0, 2.0, 4.0] {
            let t = theta_star_from_tail_mass(l * scale, 0.5).unwrap();
            assert!(t > last);
            last = t;
        }

        // Round trip through the forward relation.
        let s = SampleSummary::from_frequencies(&[5, 3, 2, 1, 1, 1]).unwrap();
        let (l_hat, theta_star) = tail_functionals(&s, 0.4).unwrap();
        let back = tail_mass_from_theta_star(theta_star, 0.4).unwrap();
        assert!((back - l_hat).abs() < 1e-9 * l_hat.max(1.0), "{back} vs {l_hat}");
    }

    #[test]
    fn hstar_weight_properties() {
        // z -> 0+: Gamma(z/alpha) blows up, so the weight sinks to -inf.
        let w_small = hstar_log_weight(1e-12, 0.5, 0.5).unwrap();
        let w_mid = hstar_log_weight(1.0, 0.5, 0.5).unwrap();
        assert!(w_small < w_mid - 20.0);

        // Adding a constant to the prior log-density leaves the normalized
        // law unchanged.
        let grid: Vec<f64> = (1..=50).map(|j| j as f64 * 0.2).collect();
        let a = hstar_on_grid(&grid, 0.7, 0.5, &GammaPrior::Exponential { rate: 1.0 }).unwrap();
        let shifted: Vec<f64> = grid
            .iter()
            .map(|&z| {
                hstar_log_weight(z, 0.7, 0.5).unwrap() + GammaPrior::Exponential { rate: 1.0 }.log_density(z) + 5.0
            })
            .collect();
        let norm = log_sum_exp(&shifted);
        for (x, y) in a.iter().zip(shifted.iter().map(|l| (l - norm).exp())) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn hierarchical_posterior_normalizes_and_is_label_free() {
        let s = SampleSummary::from_frequencies(&[6, 3, 2, 1, 1, 1]).unwrap();
        let prior = PriorSpec::default();
        let grid = hierarchical_posterior(&s, &prior, 40, 40).unwrap();
        assert!(log_sum_exp(grid.log_post()).abs() < 1e-10);
        let am = grid.alpha_marginal();
        let gm = grid.gamma_marginal();
        assert!((am.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!((gm.iter().sum::<f64>() - 1.0).abs() < 1e-10);

        // Identical data with shuffled frequencies: identical posterior.
        let s2 = SampleSummary::from_frequencies(&[1, 2, 6, 1, 3, 1]).unwrap();
        let grid2 = hierarchical_posterior(&s2, &prior, 40, 40).unwrap();
        for (a, b) in grid.log_post().iter().zip(grid2.log_post()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn marginal_helpers() {
        let grid = [0.0, 1.0, 2.0, 3.0];
        let probs = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(marginal_quantile(&grid, &probs, 0.05), 0.0);
        assert_eq!(marginal_quantile(&grid, &probs, 0.99), 3.0);
        let (mean, sd) = moments(&grid, &probs);
        assert!((mean - 2.0).abs() < 1e-12);
        assert!(sd > 0.0);
        assert!((total_variation(&probs, &probs) - 0.0).abs() < 1e-15);
        assert!((total_variation(&[1.0, 0.0], &[0.0, 1.0]) - 1.0).abs() < 1e-15);
    }
}
