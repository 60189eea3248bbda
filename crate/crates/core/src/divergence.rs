//! Reparameterized KL divergences `d(μ, μ′)` of canonical one-parameter
//! exponential families.
//!
//! Every family is parameterized by its expectation `μ` on an open interval
//! `I = (μ₋, μ₊)`. [`Divergence::eval`] accepts arguments in the closure `Ī`
//! and returns the continuity extension there, which may be `+∞`. By
//! convention `d(μ₋, μ₋) = d(μ₊, μ₊) = 0`.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, invalid, Error, Result};

/// One-parameter family, with its fixed nuisance parameter where it has one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Bernoulli,
    /// Binomial with a known number of trials `n`; `I = (0, n)`.
    Binomial { n: u32 },
    Poisson,
    /// Negative binomial with known shape `r`; `r = 1` is geometric.
    NegBinomial { r: f64 },
    /// Gaussian with known variance.
    Gaussian { sigma2: f64 },
    /// Gamma with known shape `alpha`; `alpha = 1` is exponential.
    Gamma { alpha: f64 },
    /// `scale · (μ − μ′)²` on the whole real line. `scale = 2` is the
    /// Hoeffding surrogate for `[0, 1]` rewards, the divergence behind UCB.
    Quadratic { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Divergence {
    family: Family,
    mu_lo: f64,
    mu_hi: f64,
}

impl Divergence {
    pub fn new(family: Family) -> Result<Self> {
        let positive = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be finite and positive, got {v}")))
            }
        };
        let (mu_lo, mu_hi) = match family {
            Family::Bernoulli => (0.0, 1.0),
            Family::Binomial { n } => {
                if n == 0 {
                    return Err(invalid("binomial n must be at least 1"));
                }
                (0.0, f64::from(n))
            }
            Family::Poisson => (0.0, f64::INFINITY),
            Family::NegBinomial { r } => {
                positive(r, "negative binomial shape r")?;
                (0.0, f64::INFINITY)
            }
            Family::Gaussian { sigma2 } => {
                positive(sigma2, "gaussian variance")?;
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            Family::Gamma { alpha } => {
                positive(alpha, "gamma shape alpha")?;
                (0.0, f64::INFINITY)
            }
            Family::Quadratic { scale } => {
                positive(scale, "quadratic scale")?;
                (f64::NEG_INFINITY, f64::INFINITY)
            }
        };
        Ok(Self { family, mu_lo, mu_hi })
    }

    pub fn bernoulli() -> Self {
        Self::new(Family::Bernoulli).expect("valid family")
    }

    pub fn poisson() -> Self {
        Self::new(Family::Poisson).expect("valid family")
    }

    /// Gamma family with shape 1.
    pub fn exponential() -> Self {
        Self::new(Family::Gamma { alpha: 1.0 }).expect("valid family")
    }

    /// `2 (μ − μ′)²`, the divergence that turns kl-UCB into UCB.
    pub fn hoeffding() -> Self {
        Self::new(Family::Quadratic { scale: 2.0 }).expect("valid family")
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Left end of the expectation interval (may be `-∞`).
    pub fn mu_lo(&self) -> f64 {
        self.mu_lo
    }

    /// Right end of the expectation interval (may be `+∞`).
    pub fn mu_hi(&self) -> f64 {
        self.mu_hi
    }

    /// Whether `mu` lies in the open interval `I`.
    pub fn in_interior(&self, mu: f64) -> bool {
        mu > self.mu_lo && mu < self.mu_hi
    }

    /// Whether `mu` lies in the closure `Ī` (infinite ends included).
    pub fn in_closure(&self, mu: f64) -> bool {
        mu >= self.mu_lo && mu <= self.mu_hi
    }

    fn check_closure(&self, mu: f64, what: &str) -> Result<()> {
        if self.in_closure(mu) {
            Ok(())
        } else {
            Err(domain(format!(
                "{what} = {mu} outside [{}, {}]",
                self.mu_lo, self.mu_hi
            )))
        }
    }

    fn check_interior(&self, mu: f64, what: &str) -> Result<()> {
        if self.in_interior(mu) {
            Ok(())
        } else {
            Err(domain(format!(
                "{what} = {mu} outside ({}, {})",
                self.mu_lo, self.mu_hi
            )))
        }
    }

    /// `d(mu, mu_prime)`, extended by continuity to the closure of `I`.
    pub fn eval(&self, mu: f64, mu_prime: f64) -> Result<f64> {
        self.check_closure(mu, "mu")?;
        self.check_closure(mu_prime, "mu_prime")?;
        Ok(self.eval_unchecked(mu, mu_prime))
    }

    /// [`eval`](Self::eval) without the domain check; callers guarantee both
    /// arguments are in `Ī`.
    pub(crate) fn eval_unchecked(&self, mu: f64, mu_prime: f64) -> f64 {
        if mu == mu_prime {
            return 0.0;
        }
        let value = match self.family {
            Family::Bernoulli => xlogx_over(mu, mu_prime) + xlogx_over(1.0 - mu, 1.0 - mu_prime),
            Family::Binomial { n } => {
                let n = f64::from(n);
                xlogx_over(mu, mu_prime) + xlogx_over(n - mu, n - mu_prime)
            }
            Family::Poisson => {
                if mu.is_infinite() || mu_prime.is_infinite() {
                    f64::INFINITY
                } else {
                    mu_prime - mu + xlogx_over(mu, mu_prime)
                }
            }
            Family::NegBinomial { r } => {
                if mu.is_infinite() || mu_prime.is_infinite() {
                    f64::INFINITY
                } else {
                    let tail = if mu == 0.0 {
                        0.0
                    } else if mu_prime == 0.0 {
                        f64::INFINITY
                    } else {
                        mu * ((mu * (r + mu_prime)) / (mu_prime * (r + mu))).ln()
                    };
                    r * ((r + mu_prime) / (r + mu)).ln() + tail
                }
            }
            Family::Gaussian { sigma2 } => {
                let diff = mu - mu_prime;
                diff * diff / (2.0 * sigma2)
            }
            Family::Gamma { alpha } => {
                if mu == 0.0 || mu_prime == 0.0 || mu.is_infinite() || mu_prime.is_infinite() {
                    f64::INFINITY
                } else {
                    // r − 1 − ln r, written to keep precision when r ≈ 1
                    let excess = mu / mu_prime - 1.0;
                    alpha * (excess - excess.ln_1p())
                }
            }
            Family::Quadratic { scale } => {
                let diff = mu - mu_prime;
                scale * diff * diff
            }
        };
        if value.is_nan() {
            f64::INFINITY
        } else {
            value.max(0.0)
        }
    }

    /// Derivative of `d(·, mu_star)` at `mu`.
    pub fn d_prime_first(&self, mu: f64, mu_star: f64) -> Result<f64> {
        self.check_interior(mu, "mu")?;
        self.check_interior(mu_star, "mu_star")?;
        if mu >= mu_star {
            return Err(domain(format!("need mu < mu_star, got {mu} >= {mu_star}")));
        }
        Ok(match self.family {
            Family::Bernoulli => (mu / mu_star).ln() - ((1.0 - mu) / (1.0 - mu_star)).ln(),
            Family::Binomial { n } => {
                let n = f64::from(n);
                (mu / mu_star).ln() - ((n - mu) / (n - mu_star)).ln()
            }
            Family::Poisson => (mu / mu_star).ln(),
            Family::NegBinomial { r } => ((mu * (r + mu_star)) / (mu_star * (r + mu))).ln(),
            Family::Gaussian { sigma2 } => (mu - mu_star) / sigma2,
            Family::Gamma { alpha } => alpha * (1.0 / mu_star - 1.0 / mu),
            Family::Quadratic { scale } => 2.0 * scale * (mu - mu_star),
        })
    }

    /// Derivative of `d(mu, ·)` at `mu_prime`, equal to `(μ′ − μ) / V(μ′)`.
    pub(crate) fn d_prime_second(&self, mu: f64, mu_prime: f64) -> f64 {
        (mu_prime - mu) / self.variance(mu_prime)
    }

    /// Variance function `V(μ)` of the family member with expectation `μ`.
    pub fn variance(&self, mu: f64) -> f64 {
        match self.family {
            Family::Bernoulli => mu * (1.0 - mu),
            Family::Binomial { n } => mu * (1.0 - mu / f64::from(n)),
            Family::Poisson => mu,
            Family::NegBinomial { r } => mu * (1.0 + mu / r),
            Family::Gaussian { sigma2 } => sigma2,
            Family::Gamma { alpha } => mu * mu / alpha,
            Family::Quadratic { scale } => 1.0 / (2.0 * scale),
        }
    }

    /// `max{V(μ) : mu_a ≤ μ ≤ mu_star}`.
    pub fn variance_envelope(&self, mu_a: f64, mu_star: f64) -> Result<f64> {
        self.check_interior(mu_a, "mu_a")?;
        self.check_interior(mu_star, "mu_star")?;
        if mu_a > mu_star {
            return Err(domain(format!("need mu_a <= mu_star, got {mu_a} > {mu_star}")));
        }
        Ok(match self.family {
            // concave parabolas peaking at the middle of I
            Family::Bernoulli => {
                let peak = 0.5_f64.clamp(mu_a, mu_star);
                self.variance(peak)
            }
            Family::Binomial { n } => {
                let peak = (f64::from(n) / 2.0).clamp(mu_a, mu_star);
                self.variance(peak)
            }
            // increasing on I
            Family::Poisson | Family::NegBinomial { .. } | Family::Gamma { .. } => {
                self.variance(mu_star)
            }
            Family::Gaussian { .. } | Family::Quadratic { .. } => self.variance(mu_a),
        })
    }

    /// Largest value of `V` over the whole of `I` when it is finite. Gives the
    /// quadratic minorant `d(μ, μ′) ≥ (μ − μ′)² / (2 sup V)`.
    pub(crate) fn variance_sup(&self) -> Option<f64> {
        match self.family {
            Family::Bernoulli => Some(0.25),
            Family::Binomial { n } => Some(f64::from(n) / 4.0),
            Family::Gaussian { sigma2 } => Some(sigma2),
            Family::Quadratic { scale } => Some(1.0 / (2.0 * scale)),
            Family::Poisson | Family::NegBinomial { .. } | Family::Gamma { .. } => None,
        }
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Bernoulli => f.write_str("bernoulli"),
            Family::Binomial { n } => write!(f, "binomial:{n}"),
            Family::Poisson => f.write_str("poisson"),
            Family::NegBinomial { r } => write!(f, "negbin:{r}"),
            Family::Gaussian { sigma2 } => write!(f, "gaussian:{sigma2}"),
            Family::Gamma { alpha } if alpha == 1.0 => f.write_str("exponential"),
            Family::Gamma { alpha } => write!(f, "gamma:{alpha}"),
            Family::Quadratic { scale } => write!(f, "quadratic:{scale}"),
        }
    }
}

impl FromStr for Divergence {
    type Err = Error;

    /// Parses `bernoulli`, `binomial:n`, `poisson`, `negbin:r`,
    /// `gaussian:sigma2`, `gamma:alpha`, `exponential` or `quadratic:scale`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let real = |what: &str| -> Result<f64> {
            let p = param.ok_or_else(|| invalid(format!("{name} needs a parameter ({name}:{what})")))?;
            p.parse().map_err(|_| invalid(format!("{name}: bad {what} '{p}'")))
        };
        let bare = || match param {
            None => Ok(()),
            Some(_) => Err(invalid(format!("{name} takes no parameter"))),
        };
        let family = match name {
            "bernoulli" => bare().map(|_| Family::Bernoulli)?,
            "poisson" => bare().map(|_| Family::Poisson)?,
            "exponential" => bare().map(|_| Family::Gamma { alpha: 1.0 })?,
            "binomial" => {
                let p = param.ok_or_else(|| invalid("binomial needs a parameter (binomial:n)"))?;
                let n = p.parse().map_err(|_| invalid(format!("binomial: bad n '{p}'")))?;
                Family::Binomial { n }
            }
            "negbin" => Family::NegBinomial { r: real("r")? },
            "gaussian" => Family::Gaussian { sigma2: real("sigma2")? },
            "gamma" => Family::Gamma { alpha: real("alpha")? },
            "quadratic" => Family::Quadratic { scale: real("scale")? },
            other => {
                return Err(invalid(format!(
                    "unknown divergence '{other}' (expected bernoulli, binomial:n, poisson, negbin:r, \
                     gaussian:sigma2, gamma:alpha, exponential or quadratic:scale)"
                )))
            }
        };
        Self::new(family)
    }
}

/// `x · ln(x / y)` with the conventions `0 · ln(0 / y) = 0` and
/// `x · ln(x / 0) = +∞` for `x > 0`.
fn xlogx_over(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::INFINITY
    } else {
        x * (x / y).ln()
    }
}
