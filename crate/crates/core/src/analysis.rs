//! Asymptotic lower bound, finite-time upper bounds on `E[N_a(T)]`, and
//! Monte-Carlo verifiers for the self-normalized deviation inequality and
//! the empirical-likelihood coverage bound.

use std::f64::consts::{E, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, Normal, Poisson};

use crate::divergence::{Divergence, Family};
use crate::empirical::{kinf_atoms, EmpiricalDistribution};
use crate::environment::ArmModel;
use crate::error::{domain, invalid, Result};
use crate::par::{map_indexed, Execution};

/// Simpson panels used to discretize continuous arms for `K_inf`.
pub const KINF_PANELS: usize = 4096;

/// Samples per independently seeded chunk in the verifiers.
const CHUNK: u64 = 4096;

/// `t ↦ C log t`, the asymptotic lower bound on the regret of any uniformly
/// good policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundLine {
    pub constant: f64,
}

impl LowerBoundLine {
    pub fn at(&self, t: u64) -> f64 {
        self.constant * (t.max(1) as f64).ln()
    }
}

/// `C = Σ_{a : μ_a < μ★} (μ★ − μ_a) / K_inf(ν_a, μ★)`; `kinf(a, μ★)` supplies
/// the divergence of arm `a`. All-optimal arms give `C = 0`.
pub fn lower_bound_line<F>(means: &[f64], mut kinf: F) -> Result<LowerBoundLine>
where
    F: FnMut(usize, f64) -> Result<f64>,
{
    if means.is_empty() {
        return Err(invalid("no arms"));
    }
    let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut constant = 0.0;
    for (a, &m) in means.iter().enumerate() {
        if m < best {
            let k = kinf(a, best)?;
            if !(k > 0.0 && k.is_finite()) {
                return Err(domain(format!("K_inf of arm {a} at {best} is {k}")));
            }
            constant += (best - m) / k;
        }
    }
    Ok(LowerBoundLine { constant })
}

/// Lower-bound line for a scenario's arms.
///
/// Gaussian arms use the Gaussian divergence with their own variance. Arms
/// bounded by `rescale_bound` use `K_inf` over all distributions on
/// `[0, rescale_bound]`, with continuous laws discretized by Simpson's rule.
pub fn scenario_lower_bound(arms: &[ArmModel], rescale_bound: f64) -> Result<LowerBoundLine> {
    let means: Vec<f64> = arms.iter().map(ArmModel::true_mean).collect();
    if arms.iter().all(|a| matches!(a, ArmModel::Gaussian { .. })) {
        return lower_bound_line(&means, |a, best| match arms[a] {
            ArmModel::Gaussian { mu, sigma2 } => Ok((best - mu).powi(2) / (2.0 * sigma2)),
            _ => unreachable!(),
        });
    }
    for (a, arm) in arms.iter().enumerate() {
        let (lo, hi) = arm.range();
        if lo < 0.0 || hi > rescale_bound {
            return Err(invalid(format!(
                "arm {a} ({arm}) is not supported on [0, {rescale_bound}]; no lower bound for this mix"
            )));
        }
    }
    lower_bound_line(&means, |a, best| {
        let (values, weights) = arms[a].atoms(rescale_bound, KINF_PANELS).expect("bounded arm");
        Ok(kinf_atoms(&values, &weights, best / rescale_bound)?.value)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerm {
    pub label: &'static str,
    pub value: f64,
}

/// Finite-time bound on `E[N_a(T)]` for one suboptimal arm.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub leading: f64,
    pub remainder: Vec<BoundTerm>,
    /// `leading + Σ remainder`.
    pub total: f64,
    /// `(μ★ − μ_a) · total`.
    pub regret_contribution: f64,
}

impl BoundReport {
    /// All terms including the leading one, labeled.
    pub fn terms(&self) -> Vec<BoundTerm> {
        let mut out = vec![BoundTerm { label: "leading", value: self.leading }];
        out.extend(self.remainder.iter().copied());
        out
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon >= 3.0 {
        Ok(())
    } else {
        Err(domain(format!("horizon must be >= 3, got {horizon}")))
    }
}

/// The five terms, from `d(μ_a, μ★)`, `d′(μ_a, μ★)` and the variance bound.
fn assemble(horizon: f64, gap: f64, d: f64, d_prime: f64, sigma2: f64) -> BoundReport {
    let log_t = horizon.ln();
    let f = log_t + 3.0 * log_t.ln();
    let leading = log_t / d;
    let remainder = vec![
        BoundTerm {
            label: "sqrt_log",
            value: 2.0 * (2.0 * PI * sigma2 * d_prime * d_prime / d.powi(3)).sqrt() * f.sqrt(),
        },
        BoundTerm { label: "loglog", value: (4.0 * E + 3.0 / d) * log_t.ln() },
        BoundTerm { label: "variance", value: 8.0 * sigma2 * (d_prime / d).powi(2) },
        BoundTerm { label: "constant", value: 6.0 },
    ];
    let total = leading + remainder.iter().map(|t| t.value).sum::<f64>();
    BoundReport { leading, remainder, total, regret_contribution: gap * total }
}

/// Bound on the expected pulls of a suboptimal arm under kl-UCB with
/// `f(t) = log t + 3 log log t`, for a horizon `T ≥ 3` (given as a real so
/// that very large horizons can be evaluated).
pub fn klucb_pull_bound(horizon: f64, mu_a: f64, mu_star: f64, d: &Divergence) -> Result<BoundReport> {
    check_horizon(horizon)?;
    if !(mu_a < mu_star) {
        return Err(domain(format!("need mu_a < mu_star, got {mu_a} and {mu_star}")));
    }
    let sigma2 = d.variance_envelope(mu_a, mu_star)?;
    let d_prime = d.d_prime_first(mu_a, mu_star)?;
    let div = d.eval(mu_a, mu_star)?;
    Ok(assemble(horizon, mu_star - mu_a, div, d_prime, sigma2))
}

fn check_unit_pair(mu_a: f64, mu_star: f64) -> Result<()> {
    if 0.0 < mu_a && mu_a < mu_star && mu_star < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("need 0 < mu_a < mu_star < 1, got {mu_a} and {mu_star}")))
    }
}

/// Bernoulli kl-UCB on `[0, 1]` rewards: the general bound with the
/// variance bounded by 1/4.
pub fn bernoulli_pull_bound(horizon: f64, mu_a: f64, mu_star: f64) -> Result<BoundReport> {
    check_horizon(horizon)?;
    check_unit_pair(mu_a, mu_star)?;
    let d = Divergence::bernoulli();
    let d_prime = d.d_prime_first(mu_a, mu_star)?;
    let div = d.eval(mu_a, mu_star)?;
    Ok(assemble(horizon, mu_star - mu_a, div, d_prime, 0.25))
}

/// UCB with `f(t) = log t + 3 log log t` on `[0, 1]` rewards, i.e. kl-UCB
/// with `d(μ, μ′) = 2 (μ − μ′)²`.
pub fn hoeffding_pull_bound(horizon: f64, mu_a: f64, mu_star: f64) -> Result<BoundReport> {
    check_unit_pair(mu_a, mu_star)?;
    klucb_pull_bound(horizon, mu_a, mu_star, &Divergence::hoeffding())
}

/// `log T / K_inf(ν_a, μ★)`, the leading term of the empirical KL-UCB bound.
pub fn empirical_leading_term(horizon: f64, kinf: f64) -> Result<f64> {
    check_horizon(horizon)?;
    if !(kinf > 0.0) {
        return Err(domain(format!("K_inf must be positive, got {kinf}")));
    }
    Ok(horizon.ln() / kinf)
}

/// Outcome of a Monte-Carlo verifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckReport {
    pub violations: u64,
    pub samples: u64,
    /// `violations / samples`.
    pub empirical: f64,
    pub bound: f64,
}

impl CheckReport {
    fn new(violations: u64, samples: u64, bound: f64) -> Self {
        Self { violations, samples, empirical: violations as f64 / samples as f64, bound }
    }

    /// The bound is at least 1, so it says nothing.
    pub fn vacuous(&self) -> bool {
        self.bound >= 1.0
    }

    /// Binomial standard error of a frequency whose true value is the bound.
    pub fn std_error(&self) -> f64 {
        let p = self.bound.min(1.0);
        (p * (1.0 - p) / self.samples as f64).sqrt()
    }

    /// `empirical ≤ bound + k · std_error`.
    pub fn holds(&self, k: f64) -> bool {
        self.empirical <= self.bound + k * self.std_error()
    }
}

/// `e ⌈ε log t⌉ e^{−ε}`.
pub fn deviation_bound(t: u64, epsilon: f64) -> f64 {
    E * (epsilon * (t as f64).ln()).ceil() * (-epsilon).exp()
}

/// `e (n + 2) e^{−nε}`.
pub fn coverage_bound(n: u64, epsilon: f64) -> f64 {
    E * (n as f64 + 2.0) * (-(n as f64) * epsilon).exp()
}

/// Draws from the family member with a given mean.
enum FamilyLaw {
    Bernoulli(f64),
    Binomial(Binomial),
    Poisson(Poisson<f64>),
    NegBinomial(Gamma<f64>),
    Gaussian(Normal<f64>),
    Gamma(Gamma<f64>),
}

impl FamilyLaw {
    fn new(d: &Divergence, mean: f64) -> Result<Self> {
        let bad = |e: &dyn std::fmt::Display| invalid(format!("cannot sample {d} with mean {mean}: {e}"));
        Ok(match d.family() {
            Family::Bernoulli => Self::Bernoulli(mean),
            Family::Binomial { n } => Self::Binomial(Binomial::new(u64::from(n), mean / f64::from(n)).map_err(|e| bad(&e))?),
            Family::Poisson => Self::Poisson(Poisson::new(mean).map_err(|e| bad(&e))?),
            Family::NegBinomial { r } => Self::NegBinomial(Gamma::new(r, mean / r).map_err(|e| bad(&e))?),
            Family::Gaussian { sigma2 } => Self::Gaussian(Normal::new(mean, sigma2.sqrt()).map_err(|e| bad(&e))?),
            Family::Gamma { alpha } => Self::Gamma(Gamma::new(alpha, mean / alpha).map_err(|e| bad(&e))?),
            Family::Quadratic { .. } => return Err(invalid("the quadratic divergence has no sampling law")),
        })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Bernoulli(p) => f64::from(u8::from(rng.random::<f64>() < *p)),
            Self::Binomial(b) => b.sample(rng) as f64,
            Self::Poisson(p) => p.sample(rng),
            // gamma–Poisson mixture
            Self::NegBinomial(g) => {
                let lambda = g.sample(rng);
                if lambda > 0.0 {
                    Poisson::new(lambda).map(|p| p.sample(rng)).unwrap_or(0.0)
                } else {
                    0.0
                }
            }
            Self::Gaussian(n) => n.sample(rng),
            Self::Gamma(g) => g.sample(rng),
        }
    }
}

/// Runs `samples` independent trials in fixed-size chunks, chunk `c` on
/// ChaCha8 stream `c`, and counts the trials returning `true`.
fn count_violations<F>(samples: u64, seed: u64, exec: Execution, trial: F) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync + Send,
{
    let chunks = samples.div_ceil(CHUNK);
    map_indexed(chunks, exec, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c);
        let len = CHUNK.min(samples - c * CHUNK);
        (0..len).filter(|_| trial(&mut rng)).count() as u64
    })
    .into_iter()
    .sum()
}

/// Frequency of `{∃ n ≤ t : μ̂_n < μ★ and n d(μ̂_n, μ★) ≥ ε}` over i.i.d.
/// streams from the family member with mean `μ★`, against
/// `e ⌈ε log t⌉ e^{−ε}`. The union over deterministic `n` contains the event
/// with a random number of summands.
pub fn deviation_check(
    d: &Divergence,
    mu_star: f64,
    t: u64,
    epsilon: f64,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<CheckReport> {
    if !(epsilon > 1.0 && epsilon.is_finite()) {
        return Err(invalid(format!("epsilon must be finite and > 1, got {epsilon}")));
    }
    if t < 2 {
        return Err(invalid(format!("t must be >= 2, got {t}")));
    }
    if samples == 0 {
        return Err(invalid("samples must be positive"));
    }
    if !d.in_interior(mu_star) {
        return Err(domain(format!("mu_star = {mu_star} outside the open interval of {d}")));
    }
    let law = FamilyLaw::new(d, mu_star)?;
    let violations = count_violations(samples, seed, exec, |rng| {
        let mut sum = 0.0;
        for n in 1..=t {
            sum += law.sample(rng);
            let nf = n as f64;
            let mu_hat = (sum / nf).clamp(d.mu_lo(), d.mu_hi());
            if mu_hat < mu_star && nf * d.eval_unchecked(mu_hat, mu_star) >= epsilon {
                return true;
            }
        }
        false
    });
    Ok(CheckReport::new(violations, samples, deviation_bound(t, epsilon)))
}

/// Frequency of `{U(ν̂_n, ε) ≤ E(ν₀)}` for `n` i.i.d. draws from `ν₀` on
/// `[0, 1]`, against `e (n + 2) e^{−nε}`.
pub fn coverage_check(
    nu0: &ArmModel,
    n: u64,
    epsilon: f64,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<CheckReport> {
    let (lo, hi) = nu0.range();
    if lo < 0.0 || hi > 1.0 {
        return Err(invalid(format!("{nu0} is not supported on [0, 1]")));
    }
    let mean = nu0.true_mean();
    if !(mean > 0.0 && mean < 1.0) {
        return Err(domain(format!("mean of {nu0} must lie in (0, 1), got {mean}")));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    if n == 0 || samples == 0 {
        return Err(invalid("n and samples must be positive"));
    }
    let sampler = nu0.sampler();
    let violations = count_violations(samples, seed, exec, |rng| {
        let mut dist = EmpiricalDistribution::new();
        for _ in 0..n {
            dist.add_observation(sampler.sample(rng)).expect("sample in [0, 1]");
        }
        dist.el_upper_bound_unchecked(epsilon) <= mean
    });
    Ok(CheckReport::new(violations, samples, coverage_bound(n, epsilon)))
}
