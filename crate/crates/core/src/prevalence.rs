//! Coverages of prevalences: how many of the species observed exactly r
//! times will be seen again among m further draws. Exact posterior by
//! inclusion-exclusion over the unseen-set probabilities, a compound
//! (general) hypergeometric Monte Carlo sampler with a forward-urn fallback,
//! the closed-form posterior mean, the large-sample Binomial approximation,
//! and the Thisted-Efron baseline.

use crate::combinatorics::{gen_factorial_row_checked, ln_binomial, log_rising_factorial, SignedLog};
use crate::data::SampleSummary;
use crate::error::{Error, Result};
use crate::pyp::{extend_sample, PypParams};
use crate::rng::RngStream;
use crate::special::{ln_gamma, DoubleDouble};
use crate::unseen::{rising_ratio_minus_one, DiscretePosterior, FrequentistEstimate, McPath, Provenance};

/// Inclusion-exclusion over subsets is limited to m_r of this size; the
/// alternating sum stays numerically benign here.
pub const EXACT_MR_LIMIT: u64 = 64;

/// Atoms more negative than this are treated as a defect rather than
/// roundoff.
const NEGATIVE_ATOM_TOLERANCE: f64 = -1e-9;

/// Thisted-Efron estimator sum_i (-1)^{i+1} lambda^i binom(r+i, i) m_{r+i}.
pub fn thisted_efron(summary: &SampleSummary, m: u64, r: u64) -> FrequentistEstimate {
    assert!(r >= 1, "thisted_efron requires r >= 1");
    let n = summary.n() as f64;
    let lambda = m as f64 / n;
    let mut value = 0.0;
    for (&j, &m_j) in summary.fingerprint() {
        // j = r + i ranges over frequencies strictly above r.
        if j <= r || m_j == 0 {
            continue;
        }
        let i = j - r;
        let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
        let ln_term = (i as f64) * lambda.ln() + ln_binomial(j, r) + (m_j as f64).ln();
        value += sign * ln_term.exp();
    }
    FrequentistEstimate { value, lambda, unstable: lambda >= 1.0 }
}

/// Posterior-mean estimate m_r (1 - (theta+n-r+alpha)_(m) / (theta+n)_(m));
/// zero when no species has frequency r.
pub fn estimator(params: &PypParams, summary: &SampleSummary, m: u64, r: u64) -> f64 {
    assert!(m >= 1 && r >= 1, "estimator requires m >= 1 and r >= 1");
    let m_r = summary.count_with_frequency(r);
    if m_r == 0 {
        return 0.0;
    }
    let base = params.theta() + summary.n() as f64;
    let delta = -(r as f64 - params.alpha());
    m_r as f64 * (-rising_ratio_minus_one(base, delta, m))
}

/// Probability that a fixed set of x frequency-r species receives no draw
/// among the next m: q_x = (theta+n-x(r-alpha))_(m) / (theta+n)_(m).
fn unseen_set_log_prob(params: &PypParams, n: u64, m: u64, r: u64, x: u64) -> f64 {
    let base = params.theta() + n as f64;
    let drop = x as f64 * (r as f64 - params.alpha());
    if m <= 100_000 {
        (0..m).map(|i| (-drop / (base + i as f64)).ln_1p()).sum()
    } else {
        let shifted = base - drop;
        ln_gamma(shifted + m as f64) - ln_gamma(shifted) - ln_gamma(base + m as f64) + ln_gamma(base)
    }
}

/// q_x as a double-double product of per-draw factors. The inclusion-
/// exclusion sums amplify the relative error of the q's by binomial-sized
/// factors, so plain f64 products are not accurate enough for m_r near the
/// guard.
fn unseen_set_prob_dd(params: &PypParams, n: u64, m: u64, r: u64, x: u64) -> DoubleDouble {
    let base = DoubleDouble::from_sum(params.theta(), n as f64);
    let drop = DoubleDouble::from_prod(x as f64, r as f64 - params.alpha());
    let mut q = DoubleDouble::from_f64(1.0);
    for i in 0..m {
        let denom = base.add(DoubleDouble::from_f64(i as f64));
        let numer = denom.sub(drop);
        q = q.mul(numer.div(denom));
    }
    q
}

/// Exact binomial coefficients binom(n, 0..=n) for n <= 64, via u128
/// integer arithmetic (binom(64, 32) fits in 61 bits).
fn exact_binomial_row(n: u64) -> Vec<u128> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c: u128 = 1;
    row.push(1u128);
    for j in 0..n {
        c = c * (n - j) as u128 / (j + 1) as u128;
        row.push(c);
    }
    row
}

/// Exact posterior of the coverage of prevalence on {0, ..., m_r}, by
/// inclusion-exclusion over the unseen-set probabilities q_x: with
/// D = m_r - f the number of frequency-r species left unseen,
/// Pr[D = d] = binom(m_r, d) sum_j (-1)^j binom(m_r-d, j) q_{d+j}.
pub fn posterior_exact(params: &PypParams, summary: &SampleSummary, m: u64, r: u64) -> Result<DiscretePosterior> {
    if m < 1 || r < 1 {
        return Err(Error::Constraint("posterior_exact requires m >= 1 and r >= 1".into()));
    }
    let m_r = summary.count_with_frequency(r);
    if m_r == 0 {
        return Err(Error::Constraint(format!("no species has frequency r={r}")));
    }
    if m_r > EXACT_MR_LIMIT {
        return Err(Error::SizeGuard {
            context: "prevalence::posterior_exact",
            message: format!("m_r={m_r} exceeds the inclusion-exclusion limit {EXACT_MR_LIMIT}; use posterior_mc"),
        });
    }
    // The alternating sums cancel down to atoms that can be binomially many
    // orders below the largest term; everything is carried in double-double
    // precision (q's included) so that the clamping tolerance is meaningful
    // over the whole m_r <= 64 regime.
    let exact_products = m <= 100_000;
    let q: Vec<DoubleDouble> = (0..=m_r)
        .map(|x| {
            if exact_products {
                unseen_set_prob_dd(params, summary.n(), m, r, x)
            } else {
                DoubleDouble::from_f64(unseen_set_log_prob(params, summary.n(), m, r, x).exp())
            }
        })
        .collect();
    let outer = exact_binomial_row(m_r);
    let mut pmf = vec![0.0f64; m_r as usize + 1];
    // Atoms with f > m are structural zeros (no more than m of the marked
    // species can reappear); computing them would run the alternating sum
    // through its worst cancellation for nothing.
    for f in 0..=m_r.min(m) {
        let d = m_r - f;
        let inner = exact_binomial_row(f);
        let mut sum = DoubleDouble::ZERO;
        for j in 0..=f {
            let term = DoubleDouble::from_u128(inner[j as usize]).mul(q[(d + j) as usize]);
            if j % 2 == 0 {
                sum = sum.add(term);
            } else {
                sum = sum.sub(term);
            }
        }
        let atom = DoubleDouble::from_u128(outer[d as usize]).mul(sum).to_f64();
        if atom < NEGATIVE_ATOM_TOLERANCE {
            return Err(Error::Numerical {
                context: "prevalence::posterior_exact",
                message: format!(
                    "inclusion-exclusion produced atom {atom} at d={d}; cancellation too severe, use posterior_mc"
                ),
            });
        }
        pmf[f as usize] = atom.max(0.0);
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Numerical {
            context: "prevalence::posterior_exact",
            message: format!("pmf mass {total} too far from one; use posterior_mc"),
        });
    }
    let log_pmf = pmf.iter().map(|&p| (p / total).ln()).collect();
    Ok(DiscretePosterior::new(log_pmf, estimator(params, summary, m, r), Provenance::Exact))
}

/// The generalized factorial law U_{b,c,u} on {1, ..., u} with
/// Pr[U = x] proportional to C(u,x;b,0) (c)_(x); the weights sum to (bc)_(u).
///
/// For b > 1 some weights can be negative, in which case the family is not a
/// probability distribution; `new` reports that as a numerical error and the
/// compound sampler falls back to forward simulation.
#[derive(Clone, Debug)]
pub struct GenFactorialLaw {
    b: f64,
    c: f64,
    u: u64,
    log_pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl GenFactorialLaw {
    pub fn new(b: f64, c: f64, u: u64) -> Result<GenFactorialLaw> {
        if !(b > 0.0) || !(c > 0.0) || u == 0 {
            return Err(Error::domain("GenFactorialLaw", format!("requires b > 0, c > 0, u >= 1; got ({b}, {c}, {u})")));
        }
        let row = gen_factorial_row_checked(u as usize, b, 0.0);
        let ln_denom = log_rising_factorial(b * c, u)?;
        let mut log_pmf = Vec::with_capacity(u as usize + 1);
        log_pmf.push(f64::NEG_INFINITY);
        let mut mass = 0.0;
        for x in 1..=u {
            let w = row[x as usize].mul(SignedLog { sign: 1, ln_abs: log_rising_factorial(c, x)? });
            if w.sign < 0 {
                return Err(Error::Numerical {
                    context: "GenFactorialLaw",
                    message: format!("negative weight at x={x} for (b={b}, c={c}, u={u})"),
                });
            }
            let lp = w.ln_abs - ln_denom;
            mass += lp.exp();
            log_pmf.push(lp);
        }
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::Numerical {
                context: "GenFactorialLaw",
                message: format!("weights sum to {mass}, not 1, for (b={b}, c={c}, u={u})"),
            });
        }
        let mut acc = 0.0;
        let cdf = log_pmf
            .iter()
            .map(|&lp| {
                acc += lp.exp();
                acc
            })
            .collect();
        Ok(GenFactorialLaw { b, c, u, log_pmf, cdf })
    }

    pub fn params(&self) -> (f64, f64, u64) {
        (self.b, self.c, self.u)
    }

    pub fn log_pmf(&self) -> &[f64] {
        &self.log_pmf
    }

    pub fn sample(&self, rng: &mut RngStream) -> u64 {
        let u = rng.uniform();
        match self.cdf.iter().position(|&c| u <= c) {
            Some(idx) => idx as u64,
            None => self.u,
        }
    }
}

/// The (general) hypergeometric law H_{a,u,v} on {0, ..., u} with
/// Pr[H = x] = binom(a, x) binom(v, u-x) / binom(a+v, u), defined for real
/// a > u so that every generalized binomial stays positive.
#[derive(Clone, Debug)]
pub struct GeneralHypergeometricLaw {
    a: f64,
    u: u64,
    v: u64,
    pmf: Vec<f64>,
}

fn ln_real_binomial(a: f64, x: u64) -> f64 {
    ln_gamma(a + 1.0) - ln_gamma(x as f64 + 1.0) - ln_gamma(a - x as f64 + 1.0)
}

impl GeneralHypergeometricLaw {
    pub fn new(a: f64, u: u64, v: u64) -> Result<GeneralHypergeometricLaw> {
        if !(a > u as f64) {
            return Err(Error::domain(
                "GeneralHypergeometricLaw",
                format!("requires a > u for a valid law, got a={a}, u={u}"),
            ));
        }
        let ln_denom = ln_real_binomial(a + v as f64, u);
        let pmf = (0..=u)
            .map(|x| {
                if u - x > v {
                    0.0
                } else {
                    (ln_real_binomial(a, x) + ln_binomial(v, u - x) - ln_denom).exp()
                }
            })
            .collect();
        Ok(GeneralHypergeometricLaw { a, u, v, pmf })
    }

    pub fn params(&self) -> (f64, u64, u64) {
        (self.a, self.u, self.v)
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn sample(&self, rng: &mut RngStream) -> u64 {
        let mut u = rng.uniform();
        for (x, &p) in self.pmf.iter().enumerate() {
            if u <= p {
                return x as u64;
            }
            u -= p;
        }
        self.u
    }
}

/// Monte Carlo posterior of the coverage of prevalence.
///
/// Path A (compound): f | X = m_r - Hypergeometric((theta+n)/(r-alpha) - 1,
/// m_r, U_{r-alpha, (theta+n)/(r-alpha), m}), used when the U-law weights
/// are nonnegative (always at r = 1) and the hypergeometric parameter
/// dominates m_r. Path B: forward simulation of the predictive urn, always
/// available. The path taken is recorded in the provenance.
pub fn posterior_mc(
    params: &PypParams,
    summary: &SampleSummary,
    m: u64,
    r: u64,
    replicates: u64,
    rng: &RngStream,
) -> Result<DiscretePosterior> {
    posterior_mc_threaded(params, summary, m, r, replicates, rng, 1)
}

pub fn posterior_mc_threaded(
    params: &PypParams,
    summary: &SampleSummary,
    m: u64,
    r: u64,
    replicates: u64,
    rng: &RngStream,
    threads: usize,
) -> Result<DiscretePosterior> {
    if m < 1 || r < 1 {
        return Err(Error::Constraint("posterior_mc requires m >= 1 and r >= 1".into()));
    }
    let m_r = summary.count_with_frequency(r);
    if m_r == 0 {
        return Err(Error::Constraint(format!("no species has frequency r={r}")));
    }
    let b = r as f64 - params.alpha();
    let c = (params.theta() + summary.n() as f64) / b;
    let table_cells = (m + 1).saturating_mul(m_r + 1);
    let compound = if m <= crate::unseen::EXACT_M_LIMIT && c - 1.0 > m_r as f64 && table_cells <= 20_000_000
    {
        // Coefficient row is O(m^2); pre-build the hypergeometric law for
        // each reachable U value.
        GenFactorialLaw::new(b, c, m).and_then(|u_law| {
            let laws = (0..=m)
                .map(|v| GeneralHypergeometricLaw::new(c - 1.0, m_r, v))
                .collect::<Result<Vec<_>>>()?;
            Ok((u_law, laws))
        })
    } else {
        Err(Error::SizeGuard {
            context: "prevalence::posterior_mc",
            message: "compound path unavailable; forward simulation".into(),
        })
    };
    let counts = match &compound {
        Ok((u_law, h_laws)) => mc_counts_prevalence(replicates, threads, rng, m_r, |stream| {
            let v = u_law.sample(stream);
            m_r - h_laws[v as usize].sample(stream)
        }),
        Err(_) => {
            let base = summary.frequencies();
            mc_counts_prevalence(replicates, threads, rng, m_r, |stream| {
                let ext = extend_sample(params, &base, m, stream);
                base.iter()
                    .zip(&ext.original_grew)
                    .filter(|(&size, &grew)| size == r && grew)
                    .count() as u64
            })
        }
    };
    let path = if compound.is_ok() { McPath::Compound } else { McPath::ForwardUrn };
    Ok(DiscretePosterior::from_counts(&counts, replicates, path))
}

/// Forward-urn Monte Carlo regardless of whether the compound path is
/// available; this is the closed-form-free oracle.
pub fn posterior_mc_urn(
    params: &PypParams,
    summary: &SampleSummary,
    m: u64,
    r: u64,
    replicates: u64,
    rng: &RngStream,
) -> Result<DiscretePosterior> {
    let m_r = summary.count_with_frequency(r);
    if m_r == 0 {
        return Err(Error::Constraint(format!("no species has frequency r={r}")));
    }
    let base = summary.frequencies();
    let counts = mc_counts_prevalence(replicates, 1, rng, m_r, |stream| {
        let ext = extend_sample(params, &base, m, stream);
        base.iter()
            .zip(&ext.original_grew)
            .filter(|(&size, &grew)| size == r && grew)
            .count() as u64
    });
    Ok(DiscretePosterior::from_counts(&counts, replicates, McPath::ForwardUrn))
}

fn mc_counts_prevalence<F>(replicates: u64, threads: usize, rng: &RngStream, m_r: u64, draw: F) -> Vec<u64>
where
    F: Fn(&mut RngStream) -> u64 + Sync,
{
    let threads = threads.max(1).min(replicates.max(1) as usize);
    let run_chunk = |lo: u64, hi: u64| {
        let mut counts = vec![0u64; m_r as usize + 1];
        for rep in lo..hi {
            let mut stream = rng.derive(rep);
            counts[draw(&mut stream) as usize] += 1;
        }
        counts
    };
    if threads == 1 {
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
            let mut total = vec![0u64; m_r as usize + 1];
            for h in handles {
                for (x, c) in h.join().expect("worker panicked").into_iter().enumerate() {
                    total[x] += c;
                }
            }
            total
        })
    }
}

/// First-order Binomial approximation of the posterior:
/// Binomial(m_r, 1 - (n/(n+m))^{r-alpha}).
pub fn posterior_binomial_approx(
    params: &PypParams,
    summary: &SampleSummary,
    m: u64,
    r: u64,
) -> Result<DiscretePosterior> {
    if m < 1 || r < 1 {
        return Err(Error::Constraint("posterior_binomial_approx requires m >= 1 and r >= 1".into()));
    }
    let m_r = summary.count_with_frequency(r);
    if m_r == 0 {
        return Err(Error::Constraint(format!("no species has frequency r={r}")));
    }
    let n = summary.n() as f64;
    let ln_keep = (r as f64 - params.alpha()) * (n / (n + m as f64)).ln();
    let p = -ln_keep.exp_m1(); // success probability
    let ln_p = p.ln();
    let log_pmf = (0..=m_r)
        .map(|x| ln_binomial(m_r, x) + x as f64 * ln_p + (m_r - x) as f64 * ln_keep)
        .collect();
    Ok(DiscretePosterior::new(log_pmf, m_r as f64 * p, Provenance::Approximation))
}
