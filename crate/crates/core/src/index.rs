//! The kl-UCB index `U = sup{μ ∈ Ī : d(μ̂, μ) ≤ ε}`.
//!
//! `d(μ̂, ·)` is convex and nondecreasing on `[μ̂, μ₊]`, so Newton iterates
//! started to the right of the root decrease monotonically onto it. The solver
//! keeps a bracket `[lo, hi]` with `d(μ̂, lo) ≤ ε < d(μ̂, hi)` and falls back to
//! bisection whenever a Newton step is unusable (infinite divergence,
//! vanishing slope, step leaving the bracket). The returned value is the left
//! end of the final bracket, so `d(μ̂, U) ≤ ε` always holds.

use crate::divergence::{Divergence, Family};
use crate::error::{domain, Result};

const MAX_ITER: usize = 200;

/// Upper confidence index for a divergence, mean estimate and KL radius.
pub fn kl_index(d: &Divergence, mu_hat: f64, epsilon: f64) -> Result<f64> {
    if !d.in_closure(mu_hat) {
        return Err(domain(format!(
            "mu_hat = {mu_hat} outside [{}, {}]",
            d.mu_lo(),
            d.mu_hi()
        )));
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(domain(format!("epsilon must be >= 0, got {epsilon}")));
    }
    Ok(kl_index_unchecked(d, mu_hat, epsilon))
}

pub(crate) fn kl_index_unchecked(d: &Divergence, mu_hat: f64, epsilon: f64) -> f64 {
    if epsilon == 0.0 || mu_hat == d.mu_hi() || mu_hat.is_infinite() {
        return mu_hat;
    }
    if epsilon.is_infinite() {
        return d.mu_hi();
    }
    match d.family() {
        Family::Gaussian { sigma2 } => return mu_hat + (2.0 * sigma2 * epsilon).sqrt(),
        Family::Quadratic { scale } => return mu_hat + (epsilon / scale).sqrt(),
        _ => {}
    }

    let excess = |x: f64| d.eval_unchecked(mu_hat, x) - epsilon;
    let mut lo = mu_hat;

    // Right end of the search bracket.
    let hi = match d.variance_sup() {
        Some(v) => (mu_hat + (2.0 * v * epsilon).sqrt()).min(d.mu_hi()),
        None => {
            let mut step = mu_hat.abs().max(1.0);
            let mut x = mu_hat + step;
            while excess(x) <= 0.0 {
                lo = x;
                step *= 2.0;
                x = mu_hat + step;
                if x.is_infinite() {
                    return d.mu_hi();
                }
            }
            x
        }
    };
    let mut g_hi = excess(hi);
    if g_hi <= 0.0 {
        // only possible when the bracket was clipped at the right end of I
        return hi;
    }
    let mut hi = hi;

    for _ in 0..MAX_ITER {
        let tol = 4.0 * f64::EPSILON * hi.abs().max(1.0);
        if hi - lo <= tol {
            break;
        }
        let slope = d.d_prime_second(mu_hat, hi);
        let newton = hi - g_hi / slope;
        let mut x = if g_hi.is_finite() && slope.is_finite() && slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - x <= tol {
            // converged from the right; probe just past the root to close the bracket
            let probe = x - (hi - x) - tol;
            x = if probe > lo { probe } else { 0.5 * (lo + hi) };
        }
        let gx = excess(x);
        if gx <= 0.0 {
            lo = x;
        } else {
            hi = x;
            g_hi = gx;
        }
    }
    lo
}
