//! Reward models for the experiments.
//!
//! Truncated kinds are censored: a raw draw `X` is mapped to `min(X, cap)`,
//! so the excess mass piles up at the cap.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ArmModel {
    Bernoulli { p: f64 },
    TruncatedPoisson { lambda: f64, cap: u32 },
    TruncatedExponential { rate: f64, cap: f64 },
    Gaussian { mu: f64, sigma2: f64 },
    FiniteSupport { values: Vec<f64>, probs: Vec<f64> },
}

/// Prebuilt sampler for an [`ArmModel`].
#[derive(Debug, Clone)]
pub enum ArmSampler {
    Bernoulli(f64),
    TruncatedPoisson(Poisson<f64>, f64),
    TruncatedExponential(Exp<f64>, f64),
    Gaussian(Normal<f64>),
    FiniteSupport(WeightedIndex<f64>, Vec<f64>),
}

impl ArmSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Bernoulli(p) => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            Self::TruncatedPoisson(d, cap) => d.sample(rng).min(*cap),
            Self::TruncatedExponential(d, cap) => d.sample(rng).min(*cap),
            Self::Gaussian(d) => d.sample(rng),
            Self::FiniteSupport(idx, values) => values[idx.sample(rng)],
        }
    }
}

fn positive(v: f64, name: &str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite and positive, got {v}")))
    }
}

impl ArmModel {
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::Bernoulli { p }.validated()
    }

    pub fn truncated_poisson(lambda: f64, cap: u32) -> Result<Self> {
        Self::TruncatedPoisson { lambda, cap }.validated()
    }

    pub fn truncated_exponential(rate: f64, cap: f64) -> Result<Self> {
        Self::TruncatedExponential { rate, cap }.validated()
    }

    pub fn gaussian(mu: f64, sigma2: f64) -> Result<Self> {
        Self::Gaussian { mu, sigma2 }.validated()
    }

    pub fn finite(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        Self::FiniteSupport { values, probs }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match &self {
            Self::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(invalid(format!("bernoulli p must be in [0, 1], got {p}")));
                }
            }
            Self::TruncatedPoisson { lambda, cap } => {
                positive(*lambda, "poisson lambda")?;
                if *cap == 0 {
                    return Err(invalid("poisson cap must be positive"));
                }
            }
            Self::TruncatedExponential { rate, cap } => {
                positive(*rate, "exponential rate")?;
                positive(*cap, "exponential cap")?;
            }
            Self::Gaussian { mu, sigma2 } => {
                if !mu.is_finite() {
                    return Err(invalid(format!("gaussian mean must be finite, got {mu}")));
                }
                positive(*sigma2, "gaussian variance")?;
            }
            Self::FiniteSupport { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(invalid("finite support needs matching non-empty values and probabilities"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("finite support values must be finite"));
                }
                if probs.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
                    return Err(invalid("finite support probabilities must be nonnegative"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(invalid(format!("finite support probabilities sum to {total}, not 1")));
                }
            }
        }
        Ok(self)
    }

    pub fn sampler(&self) -> ArmSampler {
        match self {
            Self::Bernoulli { p } => ArmSampler::Bernoulli(*p),
            Self::TruncatedPoisson { lambda, cap } => {
                ArmSampler::TruncatedPoisson(Poisson::new(*lambda).expect("validated lambda"), f64::from(*cap))
            }
            Self::TruncatedExponential { rate, cap } => {
                ArmSampler::TruncatedExponential(Exp::new(*rate).expect("validated rate"), *cap)
            }
            Self::Gaussian { mu, sigma2 } => {
                ArmSampler::Gaussian(Normal::new(*mu, sigma2.sqrt()).expect("validated variance"))
            }
            Self::FiniteSupport { values, probs } => ArmSampler::FiniteSupport(
                WeightedIndex::new(probs.iter().copied()).expect("validated probabilities"),
                values.clone(),
            ),
        }
    }

    /// One draw. Builds a sampler each call; use [`sampler`](Self::sampler)
    /// in loops.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().sample(rng)
    }

    /// Exact expectation of the sampled law.
    pub fn true_mean(&self) -> f64 {
        match self {
            Self::Bernoulli { p } => *p,
            Self::TruncatedPoisson { lambda, cap } => {
                let pmf = poisson_pmf(*lambda, *cap);
                let body: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
                body + f64::from(*cap) * poisson_upper_tail(*lambda, *cap)
            }
            Self::TruncatedExponential { rate, cap } => -(-rate * cap).exp_m1() / rate,
            Self::Gaussian { mu, .. } => *mu,
            Self::FiniteSupport { values, probs } => values.iter().zip(probs).map(|(v, p)| v * p).sum(),
        }
    }

    /// Smallest and largest values the arm can produce.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Self::Bernoulli { .. } => (0.0, 1.0),
            Self::TruncatedPoisson { cap, .. } => (0.0, f64::from(*cap)),
            Self::TruncatedExponential { cap, .. } => (0.0, *cap),
            Self::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::FiniteSupport { values, .. } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))),
        }
    }

    /// The law of `X / scale` as weighted atoms, for bounded arms. The
    /// continuous part of the truncated exponential is discretized with
    /// composite Simpson weights on `panels` intervals.
    pub fn atoms(&self, scale: f64, panels: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Self::Bernoulli { p } => Some((vec![0.0, 1.0 / scale], vec![1.0 - p, *p])),
            Self::TruncatedPoisson { lambda, cap } => {
                let mut weights = poisson_pmf(*lambda, *cap);
                weights.push(poisson_upper_tail(*lambda, *cap));
                let values = (0..=*cap).map(|k| f64::from(k) / scale).collect();
                Some((values, weights))
            }
            Self::TruncatedExponential { rate, cap } => {
                let panels = panels.max(2) & !1;
                let h = cap / panels as f64;
                let mut values = Vec::with_capacity(panels + 1);
                let mut weights = Vec::with_capacity(panels + 1);
                for j in 0..=panels {
                    let x = h * j as f64;
                    let simpson = if j == 0 || j == panels {
                        1.0
                    } else if j % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    values.push(x / scale);
                    weights.push(simpson * h / 3.0 * rate * (-rate * x).exp());
                }
                // censored mass at the cap
                weights[panels] += (-rate * cap).exp();
                Some((values, weights))
            }
            Self::Gaussian { .. } => None,
            Self::FiniteSupport { values, probs } => {
                Some((values.iter().map(|v| v / scale).collect(), probs.clone()))
            }
        }
    }
}

/// `P(X = k)` for `k < cap`.
fn poisson_pmf(lambda: f64, cap: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(cap as usize);
    let mut p = (-lambda).exp();
    for k in 0..cap {
        out.push(p);
        p *= lambda / f64::from(k + 1);
    }
    out
}

/// `P(X ≥ cap)`, summed upward so that small tails keep full precision.
fn poisson_upper_tail(lambda: f64, cap: u32) -> f64 {
    let mut log_p = -lambda + f64::from(cap) * lambda.ln() - ln_factorial(cap);
    let mut total = 0.0;
    let mut k = cap;
    loop {
        let p = log_p.exp();
        total += p;
        k += 1;
        if (p < 1e-18 * total && f64::from(k) > lambda) || k > cap + 10_000 {
            break;
        }
        log_p += lambda.ln() - f64::from(k).ln();
    }
    total.min(1.0)
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| f64::from(k).ln()).sum()
}

impl fmt::Display for ArmModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bernoulli { p } => write!(f, "bernoulli {p}"),
            Self::TruncatedPoisson { lambda, cap } => write!(f, "tpoisson {lambda} {cap}"),
            Self::TruncatedExponential { rate, cap } => write!(f, "texponential {rate} {cap}"),
            Self::Gaussian { mu, sigma2 } => write!(f, "gaussian {mu} {sigma2}"),
            Self::FiniteSupport { values, probs } => {
                f.write_str("finite ")?;
                for (i, (v, p)) in values.iter().zip(probs).enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}:{p}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ArmModel {
    type Err = Error;

    /// Parses `bernoulli p`, `tpoisson lambda cap`, `texponential rate cap`,
    /// `gaussian mu sigma2` or `finite v1:p1,v2:p2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let kind = parts.next().ok_or_else(|| invalid("empty arm specification"))?;
        let args: Vec<&str> = parts.collect();
        let num = |i: usize, name: &str| -> Result<f64> {
            args.get(i)
                .ok_or_else(|| invalid(format!("{kind}: missing {name}")))?
                .parse::<f64>()
                .map_err(|_| invalid(format!("{kind}: {name} '{}' is not a number", args[i])))
        };
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(invalid(format!("{kind} takes {n} argument(s), got {}", args.len())))
            }
        };
        match kind {
            "bernoulli" => {
                arity(1)?;
                Self::bernoulli(num(0, "p")?)
            }
            "tpoisson" => {
                arity(2)?;
                let cap: u32 = args[1]
                    .parse()
                    .map_err(|_| invalid(format!("tpoisson: cap '{}' must be a positive integer", args[1])))?;
                Self::truncated_poisson(num(0, "lambda")?, cap)
            }
            "texponential" => {
                arity(2)?;
                Self::truncated_exponential(num(0, "rate")?, num(1, "cap")?)
            }
            "gaussian" => {
                arity(2)?;
                Self::gaussian(num(0, "mu")?, num(1, "sigma2")?)
            }
            "finite" => {
                arity(1)?;
                let mut values = Vec::new();
                let mut probs = Vec::new();
                for pair in args[0].split(',') {
                    let (v, p) = pair
                        .split_once(':')
                        .ok_or_else(|| invalid(format!("finite: expected value:prob, got '{pair}'")))?;
                    values.push(v.parse().map_err(|_| invalid(format!("finite: bad value '{v}'")))?);
                    probs.push(p.parse().map_err(|_| invalid(format!("finite: bad probability '{p}'")))?);
                }
                Self::finite(values, probs)
            }
            other => Err(invalid(format!(
                "unknown arm kind '{other}' (expected bernoulli, tpoisson, texponential, gaussian or finite)"
            ))),
        }
    }
}
