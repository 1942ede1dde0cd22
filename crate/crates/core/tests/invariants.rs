//! Cross-module invariants: exhaustive likelihood identities, approximation
//! quality trends, and baseline-versus-posterior statistical checks.

mod common;

use common::tv_distance;
use ssp_core::pyp::{eppf_log, sample_partition};
use ssp_core::{coverage, fit, prevalence, unseen};
use ssp_core::{PypParams, RngStream, SampleSummary};

#[test]
fn joint_log_lik_equals_eppf_exhaustively() {
    // Every integer partition of every n <= 8, against the partition law.
    for &(a, t) in &[(0.5, 1.0), (0.35, -0.2), (0.75, 2.0)] {
        for n in 2..=8u64 {
            for sizes in common::integer_partitions(n) {
                let s = SampleSummary::from_frequencies(&sizes).unwrap();
                let want = eppf_log(&PypParams::new(a, t).unwrap(), &sizes).unwrap();
                let got = fit::log_lik_joint(&s, a, t).unwrap();
                assert!((got - want).abs() < 1e-10, "a={a} t={t} sizes={sizes:?}");
            }
        }
    }
}

#[test]
fn unseen_posterior_normalizes_up_to_m_100() {
    let s = SampleSummary::from_frequencies(&[9, 4, 3, 2, 1, 1]).unwrap();
    for &(a, t) in &[(0.25, 0.5), (0.5, 1.0), (0.9, -0.5), (0.0, 2.0)] {
        let p = PypParams::new(a, t).unwrap();
        for m in [10u64, 40, 100] {
            let post = unseen::posterior_exact(&p, &s, m).unwrap();
            assert!(post.log_normalizer().abs() < 1e-10, "a={a} t={t} m={m}");
            let diff = (post.mean_from_pmf() - post.mean()).abs();
            assert!(diff < 1e-10, "a={a} t={t} m={m}: {diff}");
        }
    }
}

#[test]
fn prevalence_posterior_normalizes_on_grid() {
    // m_r up to 20, m up to 50.
    let s = SampleSummary::from_fingerprint(&[(1, 20), (2, 5), (6, 2)]).unwrap();
    for &(a, t) in &[(0.2, 0.5), (0.5, 1.0), (0.85, -0.4), (0.0, 1.0)] {
        let p = PypParams::new(a, t).unwrap();
        for (m, r) in [(1u64, 1u64), (7, 1), (50, 1), (13, 2), (50, 6)] {
            let post = prevalence::posterior_exact(&p, &s, m, r).unwrap();
            assert!(post.log_normalizer().abs() < 1e-9, "a={a} t={t} m={m} r={r}");
            let diff = (post.mean_from_pmf() - post.mean()).abs();
            assert!(diff < 1e-9, "a={a} t={t} m={m} r={r}: mean gap {diff}");
        }
    }
}

#[test]
fn binomial_approximation_improves_with_scale() {
    // TV(exact, Binomial approximation) decreases along n = 1e2, 1e3, 1e4
    // with m = n/5 and the frequency-r head held fixed.
    let p = PypParams::new(0.5, 1.0).unwrap();
    let mut last_tv = f64::INFINITY;
    for &n_bulk in &[90u64, 990, 9990] {
        let s = SampleSummary::from_fingerprint(&[(1, 10), (n_bulk, 1)]).unwrap();
        let n = s.n();
        let m = n / 5;
        let exact = prevalence::posterior_exact(&p, &s, m, 1).unwrap();
        let approx = prevalence::posterior_binomial_approx(&p, &s, m, 1).unwrap();
        let tv = tv_distance(&exact.pmf(), &approx.pmf());
        assert!(tv < last_tv, "n={n}: TV {tv} did not drop below {last_tv}");
        last_tv = tv;
    }
}

#[test]
fn good_turing_approaches_posterior_mean() {
    // |BNP estimate - Good-Turing| shrinks in the mean as n grows, under
    // data simulated from the prior with the true parameters plugged in.
    let p = PypParams::new(0.5, 1.0).unwrap();
    let reps = 200u64;
    let mut gaps = Vec::new();
    for (idx, &n) in [1_000u64, 10_000].iter().enumerate() {
        let mut total = 0.0;
        for rep in 0..reps {
            let mut rng = RngStream::new(1_000 + idx as u64, rep);
            let part = sample_partition(&p, n, &mut rng);
            let s = SampleSummary::from_frequencies(part.block_sizes()).unwrap();
            total += (coverage::estimate(&p, &s, 0) - coverage::good_turing(&s, 0)).abs();
        }
        gaps.push(total / reps as f64);
    }
    assert!(gaps[1] < gaps[0], "mean gaps {gaps:?} must decrease with n");
    assert!(gaps[1] < 5e-3, "gap at n=10^4 is {:.2e}", gaps[1]);
}

#[test]
fn hstar_limit_matches_hierarchical_gamma_marginal() {
    // With the tail functionals estimated from one large simulated sample
    // and a flat scale prior, the discretized limiting law H_star stays
    // within TV 0.1 of the hierarchical gamma-marginal.
    let truth = PypParams::new(0.5, 1.0).unwrap();
    let mut rng = RngStream::new(123_321, 0);
    let part = sample_partition(&truth, 100_000, &mut rng);
    let s = SampleSummary::from_frequencies(part.block_sizes()).unwrap();

    let prior = fit::PriorSpec { gamma: fit::GammaPrior::Flat, ..fit::PriorSpec::default() };
    let grid = fit::hierarchical_posterior(&s, &prior, 400, 400).unwrap();
    let alpha0 = grid.profile_alpha().expect("regular data");
    let (l_hat, _) = fit::tail_functionals(&s, alpha0).unwrap();
    let hstar = fit::hstar_on_grid(grid.gamma_grid(), l_hat, alpha0, &fit::GammaPrior::Flat).unwrap();
    let tv = fit::total_variation(&grid.gamma_marginal(), &hstar);
    assert!(tv <= 0.1, "TV(H_star, gamma marginal) = {tv}");
}

#[test]
fn joint_theta_stays_near_auxiliary_estimator() {
    // |theta_hat - T_hat| < 0.5 in at least 90% of replicates at n = 10^5.
    let truth = PypParams::new(0.5, 1.0).unwrap();
    let reps = 20u64;
    let mut close = 0u32;
    for rep in 0..reps {
        let mut rng = RngStream::new(54_321, rep);
        let part = sample_partition(&truth, 100_000, &mut rng);
        let s = SampleSummary::from_frequencies(part.block_sizes()).unwrap();
        let fitted = fit::mle_joint(&s).unwrap();
        if (fitted.theta_hat - fitted.aux_theta).abs() < 0.5 {
            close += 1;
        }
    }
    assert!(close * 10 >= reps as u32 * 9, "only {close}/{reps} replicates within 0.5");
}

#[test]
fn smoothed_counts_follow_observed_fingerprint_shape() {
    // The prior-induced smoothed counts track the simulated m_r on average.
    let p = PypParams::new(0.5, 1.0).unwrap();
    let n = 20_000u64;
    let reps = 40u64;
    let mut observed = [0.0f64; 3];
    let mut smoothed = [0.0f64; 3];
    for rep in 0..reps {
        let mut rng = RngStream::new(77_777, rep);
        let part = sample_partition(&p, n, &mut rng);
        let s = SampleSummary::from_frequencies(part.block_sizes()).unwrap();
        for r in 0..3u64 {
            observed[r as usize] += s.count_with_frequency(r + 1) as f64;
            smoothed[r as usize] += coverage::smoothed_count(&p, s.k(), r).unwrap();
        }
    }
    for r in 0..3 {
        let rel = (observed[r] - smoothed[r]).abs() / observed[r];
        assert!(rel < 0.05, "r={}: observed {} vs smoothed {}", r + 1, observed[r], smoothed[r]);
    }
}
