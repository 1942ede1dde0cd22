//! `ssp`: species-sampling inference under the Pitman-Yor process from the
//! command line. Reads label, count or fingerprint data, fits the prior
//! parameters, produces estimates with credible intervals as JSON, and
//! simulates synthetic datasets.
//!
//! Exit codes: 0 success, 2 parse/usage, 3 model pathology or invalid
//! parameter domain, 4 exact-path size guard, 5 numerical failure.

mod report;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use report::{PosteriorBlock, ReportEnvelope};
use ssp_core::fit::{self, AlphaPrior, FitMethod, GammaPrior, PriorSpec};
use ssp_core::pyp::{sample_label_sequence, sample_partition};
use ssp_core::unseen::DiscretePosterior;
use ssp_core::{coverage, data, prevalence, unseen};
use ssp_core::{Error as CoreError, PypParams, RngStream, SampleSummary};

#[derive(Parser)]
#[command(name = "ssp", version, about = "Bayesian nonparametric species-sampling inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce an input file to its sufficient statistics (n, K_n, fingerprint).
    Summarize(SummarizeArgs),
    /// Fit the prior parameters (alpha, theta) from data.
    Fit(FitArgs),
    /// Estimate a species-sampling target with uncertainty.
    Estimate(EstimateArgs),
    /// Draw a synthetic dataset from the prior.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    /// One species label per line.
    Labels,
    /// CSV `label,count`.
    Counts,
    /// CSV `r,m_r` (optional header).
    Fingerprint,
}

#[derive(Args)]
struct InputArgs {
    /// Input data file.
    #[arg(long)]
    input: PathBuf,
    /// How to parse the input file.
    #[arg(long, value_enum, default_value = "labels")]
    format: InputFormat,
}

#[derive(Args)]
struct SummarizeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitMethodArg {
    /// Profile MLE for alpha plus the auxiliary theta estimator.
    Mle,
    /// Joint maximum likelihood over (alpha, theta).
    Joint,
    /// Grid hierarchical-Bayes posterior over (alpha, gamma).
    Hb,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "joint")]
    method: FitMethodArg,
    /// Prior on alpha: `uniform` or `beta:a,b`.
    #[arg(long, default_value = "uniform")]
    prior_alpha: String,
    /// Prior on gamma = theta + alpha: `exp:rate`, `gamma:shape,rate` or `flat`.
    #[arg(long, default_value = "exp:1")]
    prior_gamma: String,
    /// Upper edge of the gamma grid.
    #[arg(long, default_value_t = 20.0)]
    gamma_max: f64,
    #[arg(long, default_value_t = 400)]
    alpha_grid: usize,
    #[arg(long, default_value_t = 400)]
    gamma_grid: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Coverage,
    Unseen,
    Prevalence,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimateMethod {
    Exact,
    Mc,
    Approx,
    Gt,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum)]
    target: Target,
    /// Frequency order r (coverage and prevalence targets).
    #[arg(long)]
    r: Option<u64>,
    /// Number of additional samples m (unseen and prevalence targets).
    #[arg(long)]
    m: Option<u64>,
    /// Prior discount (with --theta); mutually exclusive with --fit.
    #[arg(long, conflicts_with = "fit")]
    alpha: Option<f64>,
    /// Prior scale (with --alpha); mutually exclusive with --fit.
    #[arg(long, conflicts_with = "fit")]
    theta: Option<f64>,
    /// Fit (alpha, theta) by joint maximum likelihood before estimating.
    #[arg(long)]
    fit: bool,
    #[arg(long, value_enum, default_value = "exact")]
    method: EstimateMethod,
    #[arg(long, default_value_t = 100_000)]
    mc_samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for Monte Carlo; the result is thread-count invariant.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Credibility level for intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitFormat {
    Labels,
    Fingerprint,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    theta: f64,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "labels")]
    emit: EmitFormat,
    /// Write the dataset here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Command failure carrying its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }
}

impl From<CoreError> for Failure {
    fn from(err: CoreError) -> Failure {
        let (code, hint) = match &err {
            CoreError::Parse { .. } | CoreError::Constraint(_) => (2, ""),
            CoreError::Domain { .. } | CoreError::Pathology(_) => (3, ""),
            CoreError::SizeGuard { .. } => (4, " (retry with --method mc)"),
            CoreError::Numerical { .. } => (5, ""),
        };
        Failure { code, message: format!("{err}{hint}") }
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Failure {
        Failure { code: 2, message: format!("i/o error: {err}") }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Summarize(args) => cmd_summarize(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn read_summary(input: &InputArgs) -> Result<SampleSummary, Failure> {
    let text = fs::read_to_string(&input.input)?;
    let summary = match input.format {
        InputFormat::Labels => data::parse_labels(&text)?,
        InputFormat::Counts => data::parse_label_counts(&text)?,
        InputFormat::Fingerprint => data::parse_fingerprint(&text)?,
    };
    Ok(summary)
}

fn emit(output: &Option<PathBuf>, contents: &str) -> Result<(), Failure> {
    match output {
        Some(path) => {
            let mut file = fs::File::create(path)?;
            file.write_all(contents.as_bytes())?;
            file.write_all(b"\n")?;
        }
        None => println!("{contents}"),
    }
    Ok(())
}

fn cmd_summarize(args: SummarizeArgs) -> Result<(), Failure> {
    let summary = read_summary(&args.input)?;
    let mut envelope = ReportEnvelope::new("summarize", &summary);
    let fingerprint: BTreeMap<String, u64> =
        summary.fingerprint().iter().map(|(&r, &m)| (r.to_string(), m)).collect();
    envelope.diag("fingerprint", serde_json::json!(fingerprint));
    envelope.diag("max_frequency", serde_json::json!(summary.max_frequency()));
    emit(&args.output, &envelope.to_json())
}

fn parse_alpha_prior(text: &str) -> Result<AlphaPrior, Failure> {
    if text == "uniform" {
        return Ok(AlphaPrior::Uniform);
    }
    if let Some(rest) = text.strip_prefix("beta:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() == 2 {
            let a: f64 = parts[0].parse().map_err(|_| Failure::usage(format!("bad beta shape {:?}", parts[0])))?;
            let b: f64 = parts[1].parse().map_err(|_| Failure::usage(format!("bad beta shape {:?}", parts[1])))?;
            if a > 0.0 && b > 0.0 {
                return Ok(AlphaPrior::Beta { shape1: a, shape2: b });
            }
        }
    }
    Err(Failure::usage(format!("--prior-alpha must be `uniform` or `beta:a,b`, got {text:?}")))
}

fn parse_gamma_prior(text: &str) -> Result<GammaPrior, Failure> {
    if text == "flat" {
        return Ok(GammaPrior::Flat);
    }
    if let Some(rest) = text.strip_prefix("exp:") {
        let rate: f64 = rest.parse().map_err(|_| Failure::usage(format!("bad exponential rate {rest:?}")))?;
        if rate > 0.0 {
            return Ok(GammaPrior::Exponential { rate });
        }
    }
    if let Some(rest) = text.strip_prefix("gamma:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() == 2 {
            let shape: f64 = parts[0].parse().map_err(|_| Failure::usage(format!("bad gamma shape {:?}", parts[0])))?;
            let rate: f64 = parts[1].parse().map_err(|_| Failure::usage(format!("bad gamma rate {:?}", parts[1])))?;
            if shape > 0.0 && rate > 0.0 {
                return Ok(GammaPrior::Gamma { shape, rate });
            }
        }
    }
    Err(Failure::usage(format!("--prior-gamma must be `exp:rate`, `gamma:shape,rate` or `flat`, got {text:?}")))
}

fn cmd_fit(args: FitArgs) -> Result<(), Failure> {
    let summary = read_summary(&args.input)?;
    let mut envelope = ReportEnvelope::new("fit", &summary);
    match args.method {
        FitMethodArg::Mle | FitMethodArg::Joint => {
            let fitted = match args.method {
                FitMethodArg::Mle => fit::fit_profile(&summary)?,
                _ => fit::mle_joint(&summary)?,
            };
            envelope.set_params(fitted.alpha_hat, fitted.theta_hat, Some(fitted.method.as_str()));
            envelope.diag_num("log_lik_at_max", fitted.log_lik_at_max);
            envelope.diag_num("observed_info", fitted.observed_info);
            envelope.diag_num("l_hat", fitted.l_hat);
            envelope.diag_num("profile_alpha", fitted.profile_alpha);
            envelope.diag_num("aux_theta", fitted.aux_theta);
            envelope.diag_num("theta_star_hat", fitted.theta_star_hat);
            envelope.diag_num("gamma_hat", fitted.gamma_hat);
            envelope.diag_num("alpha_proximity", fitted.alpha_proximity);
        }
        FitMethodArg::Hb => {
            let prior = PriorSpec {
                alpha: parse_alpha_prior(&args.prior_alpha)?,
                gamma: parse_gamma_prior(&args.prior_gamma)?,
                gamma_max: args.gamma_max,
            };
            let grid = fit::hierarchical_posterior(&summary, &prior, args.alpha_grid, args.gamma_grid)?;
            let (alpha_mean, alpha_sd) = grid.alpha_mean_sd();
            let (gamma_mean, gamma_sd) = grid.gamma_mean_sd();
            envelope.set_params(alpha_mean, gamma_mean - alpha_mean, Some(FitMethod::Hierarchical.as_str()));
            envelope.diag_num("alpha_mean", alpha_mean);
            envelope.diag_num("alpha_sd", alpha_sd);
            envelope.diag_num("gamma_mean", gamma_mean);
            envelope.diag_num("gamma_sd", gamma_sd);
            let am = grid.alpha_marginal();
            let gm = grid.gamma_marginal();
            for (tag, q) in [("q025", 0.025), ("q50", 0.5), ("q975", 0.975)] {
                envelope.diag_num(&format!("alpha_{tag}"), fit::marginal_quantile(grid.alpha_grid(), &am, q));
                envelope.diag_num(&format!("gamma_{tag}"), fit::marginal_quantile(grid.gamma_grid(), &gm, q));
            }
            if let (Some(a0), Some(v)) = (grid.profile_alpha(), grid.observed_info()) {
                envelope.diag_num("profile_alpha", a0);
                envelope.diag_num("observed_info", v);
                envelope.diag_num("bvm_sd_ratio", alpha_sd * v.sqrt());
            }
            if let Ok((l_hat, theta_star)) = fit::tail_functionals(&summary, alpha_mean) {
                envelope.diag_num("l_hat", l_hat);
                envelope.diag_num("theta_star_hat", theta_star);
            }
        }
    }
    emit(&args.output, &envelope.to_json())
}

fn resolve_params(
    args: &EstimateArgs,
    summary: &SampleSummary,
    envelope: &mut ReportEnvelope,
) -> Result<PypParams, Failure> {
    if args.fit {
        let fitted = fit::mle_joint(summary)?;
        envelope.set_params(fitted.alpha_hat, fitted.theta_hat, Some(fitted.method.as_str()));
        return Ok(PypParams::new(fitted.alpha_hat, fitted.theta_hat)?);
    }
    match (args.alpha, args.theta) {
        (Some(alpha), Some(theta)) => {
            envelope.set_params(alpha, theta, None);
            Ok(PypParams::new(alpha, theta)?)
        }
        _ => Err(Failure::usage("estimate needs either --fit or both --alpha and --theta (except --method gt)")),
    }
}

fn attach_posterior(
    envelope: &mut ReportEnvelope,
    post: &DiscretePosterior,
    level: f64,
) -> Result<(), Failure> {
    let (lo, hi) = post.credible_interval(level)?;
    envelope.set_estimate(post.mean());
    envelope.set_ci(lo as f64, hi as f64, level);
    envelope.posterior = Some(PosteriorBlock::of(post));
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), Failure> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(Failure::usage(format!("--level must lie in (0,1), got {}", args.level)));
    }
    let summary = read_summary(&args.input)?;
    let mut envelope = ReportEnvelope::new("estimate", &summary);
    let stochastic = matches!(args.method, EstimateMethod::Mc);
    if stochastic {
        envelope.seed = Some(args.seed);
        envelope.diag("mc_samples", serde_json::json!(args.mc_samples));
    }

    match args.target {
        Target::Coverage => {
            let r = args.r.unwrap_or(0);
            envelope.diag("target", serde_json::json!(format!("coverage:r={r}")));
            match args.method {
                EstimateMethod::Gt => {
                    envelope.set_estimate(coverage::good_turing(&summary, r));
                }
                EstimateMethod::Exact => {
                    let params = resolve_params(&args, &summary, &mut envelope)?;
                    let post = coverage::posterior(&params, &summary, r);
                    let (lo, hi) = post.credible_interval(args.level)?;
                    envelope.set_estimate(post.mean());
                    envelope.set_ci(lo, hi, args.level);
                    match post {
                        coverage::CoveragePosterior::Beta(beta) => {
                            envelope.diag_num("beta_shape1", beta.shape1);
                            envelope.diag_num("beta_shape2", beta.shape2);
                        }
                        coverage::CoveragePosterior::PointMassAtZero => {
                            envelope.diag("degenerate_at_zero", serde_json::json!(true));
                        }
                    }
                    if params.alpha() > 0.0 {
                        let diag = coverage::smoothed_gt_diagnostic(&params, &summary, r)?;
                        envelope.diag_num("smoothed_gt_estimate", diag.smoothed_estimate);
                        envelope.diag_num("smoothed_gt_relative_gap", diag.relative_gap);
                    }
                }
                _ => return Err(Failure::usage("coverage supports --method exact or gt")),
            }
        }
        Target::Unseen => {
            let m = args.m.ok_or_else(|| Failure::usage("--target unseen requires --m"))?;
            envelope.diag("target", serde_json::json!(format!("unseen:m={m}")));
            match args.method {
                EstimateMethod::Gt => {
                    let est = unseen::good_toulmin(&summary, m);
                    envelope.set_estimate(est.value);
                    envelope.diag_num("lambda", est.lambda);
                    envelope.diag("lambda_warning", serde_json::json!(est.unstable));
                }
                EstimateMethod::Exact => {
                    let params = resolve_params(&args, &summary, &mut envelope)?;
                    let post = unseen::posterior_exact(&params, &summary, m)?;
                    attach_posterior(&mut envelope, &post, args.level)?;
                    envelope.diag_num("growth_diagnostic", unseen::growth_diagnostic(&params, &summary, m));
                }
                EstimateMethod::Mc => {
                    let params = resolve_params(&args, &summary, &mut envelope)?;
                    let rng = RngStream::new(args.seed, 0);
                    let post = unseen::posterior_mc_threaded(&params, &summary, m, args.mc_samples, &rng, args.threads);
                    attach_posterior(&mut envelope, &post, args.level)?;
                    envelope.diag_num("growth_diagnostic", unseen::growth_diagnostic(&params, &summary, m));
                }
                EstimateMethod::Approx => {
                    return Err(Failure::usage("unseen supports --method exact, mc or gt"));
                }
            }
        }
        Target::Prevalence => {
            let m = args.m.ok_or_else(|| Failure::usage("--target prevalence requires --m"))?;
            let r = args.r.ok_or_else(|| Failure::usage("--target prevalence requires --r"))?;
            if r == 0 {
                return Err(Failure::usage("prevalence requires r >= 1 (r = 0 is the unseen target)"));
            }
            envelope.diag("target", serde_json::json!(format!("prevalence:r={r},m={m}")));
            match args.method {
                EstimateMethod::Gt => {
                    let est = prevalence::thisted_efron(&summary, m, r);
                    envelope.set_estimate(est.value);
                    envelope.diag_num("lambda", est.lambda);
                    envelope.diag("lambda_warning", serde_json::json!(est.unstable));
                }
                EstimateMethod::Exact => {
                    let params = resolve_params(&args, &summary, &mut envelope)?;
                    let post = prevalence::posterior_exact(&params, &summary, m, r)?;
                    attach_posterior(&mut envelope, &post, args.level)?;
                }
                EstimateMethod::Mc => {
                    let params = resolve_params(&args, &summary, &mut envelope)?;
                    let rng = RngStream::new(args.seed, 0);
                    let post =
                        prevalence::posterior_mc_threaded(&params, &summary, m, r, args.mc_samples, &rng, args.threads)?;
                    attach_posterior(&mut envelope, &post, args.level)?;
                }
                EstimateMethod::Approx => {
                    let params = resolve_params(&args, &summary, &mut envelope)?;
                    let post = prevalence::posterior_binomial_approx(&params, &summary, m, r)?;
                    attach_posterior(&mut envelope, &post, args.level)?;
                }
            }
        }
    }
    emit(&args.output, &envelope.to_json())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let params = PypParams::new(args.alpha, args.theta)?;
    if args.n < 1 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    let mut rng = RngStream::new(args.seed, 0);
    let contents = match args.emit {
        EmitFormat::Labels => {
            let sequence = sample_label_sequence(&params, args.n, &mut rng);
            let mut out = String::with_capacity(sequence.len() * 6);
            for label in sequence {
                out.push('s');
                out.push_str(&(label + 1).to_string());
                out.push('\n');
            }
            out.pop();
            out
        }
        EmitFormat::Fingerprint => {
            let part = sample_partition(&params, args.n, &mut rng);
            let mut out = String::from("r,m_r");
            for (&r, &m) in part.fingerprint().iter() {
                out.push('\n');
                out.push_str(&format!("{r},{m}"));
            }
            out
        }
    };
    emit(&args.output, &contents)
}
