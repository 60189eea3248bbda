//! Empirical distributions on `[0, 1]`, the `K_inf` functional and the
//! empirical-likelihood upper confidence bound.
//!
//! `K_inf(ν, μ) = inf{KL(ν, ν′) : ν′ on [0, 1], E(ν′) > μ}` is evaluated through
//! its dual
//!
//! ```text
//! K_inf(ν, μ) = max_{0 ≤ λ ≤ 1/(1−μ)} E_ν[ log(1 − λ (X − μ)) ]
//! ```
//!
//! a concave one-dimensional program solved by safeguarded Newton.
//!
//! The upper bound `U(ν̂, ε) = sup{E(ν′) : ν′ on Supp(ν̂) ∪ {1}, KL(ν̂, ν′) ≤ ε}`
//! is solved from the Lagrangian of the primal instead. At the optimum the
//! reweighted atoms are `q_i ∝ w_i / (1 − τ x_i)` for some `τ ∈ [0, 1)`, and
//! `KL(ν̂, q_τ) = Σ w log(1 − τx) + log Σ w / (1 − τx)` is increasing in `τ`.
//! When the constraint is still slack at `τ = 1` and `ν̂` has no atom at 1,
//! the extra mass goes to the augmented point 1 and
//! `U = 1 − exp(Σ w log(1 − x) − ε)` in closed form.

use crate::divergence::Divergence;
use crate::error::{domain, Error, Result};
use crate::index::kl_index_unchecked;

const MAX_ITER: usize = 200;

/// Number of running power sums `Σ xᵏ`, `k = 1..=POWER_TERMS`, kept per
/// distribution for the series enclosure of the upper bound.
const POWER_TERMS: usize = 16;

/// Finitely supported distribution on `[0, 1]` kept as sorted atoms with
/// integer counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmpiricalDistribution {
    support: Vec<f64>,
    counts: Vec<u64>,
    n: u64,
    power_sums: [f64; POWER_TERMS],
}

/// Maximizer of the `K_inf` dual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualSolution {
    pub value: f64,
    pub lambda: f64,
    /// `λ` sits at `1 / (1 − μ)`, the right end of the dual domain.
    pub at_boundary: bool,
    /// Derivative of the dual objective at `lambda`.
    pub gradient: f64,
}

impl EmpiricalDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples<I: IntoIterator<Item = f64>>(samples: I) -> Result<Self> {
        let mut dist = Self::new();
        for x in samples {
            dist.add_observation(x)?;
        }
        Ok(dist)
    }

    /// Builds a distribution from `(value, count)` pairs; repeated values are
    /// merged and zero counts ignored.
    pub fn from_counts(pairs: &[(f64, u64)]) -> Result<Self> {
        let mut dist = Self::new();
        for &(x, c) in pairs {
            check_unit(x)?;
            if c == 0 {
                continue;
            }
            dist.insert(x, c);
        }
        Ok(dist)
    }

    pub fn add_observation(&mut self, x: f64) -> Result<()> {
        check_unit(x)?;
        self.insert(x, 1);
        Ok(())
    }

    fn insert(&mut self, x: f64, count: u64) {
        match self.support.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(pos) => self.counts[pos] += count,
            Err(pos) => {
                self.support.insert(pos, x);
                self.counts.insert(pos, count);
            }
        }
        self.n += count;
        let c = count as f64;
        let mut p = x;
        for s in &mut self.power_sums {
            *s += c * p;
            p *= x;
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Atom weights `counts / n`.
    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n as f64;
        self.counts.iter().map(move |&c| c as f64 / n)
    }

    fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + Clone + '_ {
        let n = self.n as f64;
        self.support
            .iter()
            .zip(&self.counts)
            .map(move |(&x, &c)| (x, c as f64 / n))
    }

    /// Weighted mean of the support; `NaN` when empty.
    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        let s: f64 = self
            .support
            .iter()
            .zip(&self.counts)
            .map(|(&x, &c)| c as f64 * x)
            .sum();
        (s / self.n as f64).clamp(0.0, 1.0)
    }

    /// Mean and biased variance from running sums, in O(1).
    pub(crate) fn running_moments(&self) -> (f64, f64) {
        let n = self.n as f64;
        let m = self.power_sums[0] / n;
        (m, (self.power_sums[1] / n - m * m).max(0.0))
    }

    /// Enclosure `[lo, hi]` of `el_upper_bound(epsilon)` in O(1) from the
    /// running power sums, or `None` when the truncated series is too coarse.
    ///
    /// With moments `M_k = E xᵏ`, the profile functions expand as
    /// `Σ w log(1 − τx) = −Σ τᵏ M_k / k`, `Σ w / (1 − τx) = Σ τᵏ M_k` and
    /// `Σ w x / (1 − τx) = Σ τᵏ M_{k+1}`. Since `x ∈ [0, 1]` the moments are
    /// nonincreasing, so each tail is bounded by a geometric series in `τ`.
    /// `KL(ν̂, q_τ)` and the mean of `q_τ` are increasing in `τ`, so a pair
    /// `τ_lo ≤ τ* ≤ τ_hi` certified by the error bounds brackets the answer.
    pub(crate) fn el_series_bounds(&self, epsilon: f64) -> Option<(f64, f64)> {
        if self.n == 0 || !(epsilon > 0.0 && epsilon.is_finite()) {
            return None;
        }
        let n = self.n as f64;
        let mut moments = [0.0; POWER_TERMS + 1];
        moments[0] = 1.0;
        for (m, s) in moments[1..].iter_mut().zip(&self.power_sums) {
            *m = (s / n).clamp(0.0, 1.0);
        }
        let (_, v) = self.running_moments();
        if v <= 0.0 {
            return None;
        }
        let tail = moments[POWER_TERMS];
        let last = POWER_TERMS - 1;

        // truncated G, A, B and the tail bounds of each, at τ
        let eval = |tau: f64| {
            let (mut g, mut a, mut b, mut dg, mut da) = (0.0, 0.0, 0.0, 0.0, 0.0);
            let mut pw = 1.0;
            for k in 0..=last {
                if k > 0 {
                    g -= pw * moments[k] / k as f64;
                    a += pw * moments[k];
                    dg -= pw * moments[k] / tau;
                    da += k as f64 * pw * moments[k] / tau;
                } else {
                    a += 1.0;
                }
                b += pw * moments[k + 1];
                pw *= tau;
            }
            // pw = τ^POWER_TERMS here
            let geom = tail / (1.0 - tau);
            let t_a = geom * pw;
            let t_b = geom * pw;
            let t_g = geom * pw / POWER_TERMS as f64;
            (g, a, b, dg, da, t_g, t_a, t_b)
        };
        // allowance for rounding in the running sums
        let rel = 4.0 * f64::EPSILON * n.max(16.0);
        let f_bounds = |tau: f64| {
            let (g, a, _, _, _, t_g, t_a, _) = eval(tau);
            let slack = rel * (g.abs() + a.ln().abs());
            (g - t_g + a.ln() - slack, g + (a + t_a).ln() + slack)
        };
        let u_bounds = |tau: f64| {
            let (_, a, b, _, _, _, t_a, t_b) = eval(tau);
            let lo = b / (a + t_a);
            let hi = (b + t_b) / a;
            (lo * (1.0 - rel), hi * (1.0 + rel))
        };

        const TAU_MAX: f64 = 0.5;
        let mut tau = (2.0 * epsilon / v).sqrt().min(0.5 * TAU_MAX);
        for _ in 0..40 {
            let (g, a, _, dg, da, ..) = eval(tau);
            let excess = g + a.ln() - epsilon;
            let slope = dg + da / a;
            if !(slope > 0.0) {
                return None;
            }
            let next = (tau - excess / slope).clamp(0.5 * tau, TAU_MAX);
            let done = (next - tau).abs() <= 1e-15 * tau;
            tau = next;
            if done {
                break;
            }
        }
        if !(tau > 0.0 && tau < TAU_MAX) {
            return None;
        }
        let mut delta = 1e-12 * tau;
        for _ in 0..20 {
            let lo_tau = (tau - delta).max(0.0);
            let hi_tau = tau + delta;
            if hi_tau >= TAU_MAX {
                return None;
            }
            if f_bounds(lo_tau).1 <= epsilon && f_bounds(hi_tau).0 >= epsilon {
                let lo = u_bounds(lo_tau).0;
                let hi = u_bounds(hi_tau).1;
                return Some((lo, hi.min(1.0)));
            }
            delta *= 4.0;
        }
        None
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.n == 0 {
            Err(Error::Precondition("empirical distribution is empty".into()))
        } else {
            Ok(())
        }
    }

    /// `K_inf(ν̂, mu)` for `mu ∈ (0, 1)`.
    pub fn kinf(&self, mu: f64) -> Result<f64> {
        Ok(self.kinf_solution(mu)?.value)
    }

    /// Full dual solution behind [`kinf`](Self::kinf).
    pub fn kinf_solution(&self, mu: f64) -> Result<DualSolution> {
        self.require_nonempty()?;
        check_open_unit(mu)?;
        Ok(solve_kinf_dual(self.atoms(), mu))
    }

    /// Empirical-likelihood upper bound with the support augmented by 1.
    pub fn el_upper_bound(&self, epsilon: f64) -> Result<f64> {
        self.require_nonempty()?;
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(domain(format!("epsilon must be >= 0, got {epsilon}")));
        }
        Ok(el_upper_bound_atoms(self.atoms(), epsilon))
    }

    /// [`el_upper_bound`](Self::el_upper_bound) for a non-empty distribution
    /// and `epsilon ≥ 0`.
    pub(crate) fn el_upper_bound_unchecked(&self, epsilon: f64) -> f64 {
        el_upper_bound_atoms(self.atoms(), epsilon)
    }
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(domain(format!("observation {x} outside [0, 1]")))
    }
}

fn check_open_unit(mu: f64) -> Result<()> {
    if mu > 0.0 && mu < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("mu = {mu} outside (0, 1)")))
    }
}

/// `K_inf` of a weighted atom list on `[0, 1]` (weights summing to one).
pub fn kinf_atoms(values: &[f64], weights: &[f64], mu: f64) -> Result<DualSolution> {
    if values.len() != weights.len() || values.is_empty() {
        return Err(Error::InvalidParameter("values and weights must be non-empty and aligned".into()));
    }
    for (&x, &w) in values.iter().zip(weights) {
        check_unit(x)?;
        if !(w >= 0.0 && w.is_finite()) {
            return Err(domain(format!("weight {w} is not a probability")));
        }
    }
    check_open_unit(mu)?;
    Ok(solve_kinf_dual(values.iter().copied().zip(weights.iter().copied()), mu))
}

fn solve_kinf_dual<I>(atoms: I, mu: f64) -> DualSolution
where
    I: Iterator<Item = (f64, f64)> + Clone,
{
    let mean: f64 = atoms.clone().map(|(x, w)| w * x).sum();
    if mean >= mu {
        return DualSolution { value: 0.0, lambda: 0.0, at_boundary: false, gradient: mu - mean };
    }
    let lam_max = 1.0 / (1.0 - mu);
    let has_top = atoms.clone().any(|(x, w)| x >= 1.0 && w > 0.0);

    if !has_top {
        // slope at the right end is −(1−μ) Σ w (x−μ)/(1−x); nonnegative means
        // the maximum sits on the boundary
        let s: f64 = atoms.clone().map(|(x, w)| w * (x - mu) / (1.0 - x)).sum();
        if s <= 0.0 {
            let value: f64 = atoms.clone().map(|(x, w)| w * ((1.0 - x) / (1.0 - mu)).ln()).sum();
            return DualSolution {
                value: value.max(0.0),
                lambda: lam_max,
                at_boundary: true,
                gradient: -(1.0 - mu) * s,
            };
        }
    }

    let derivatives = |lam: f64| {
        let mut g = 0.0;
        let mut h = 0.0;
        for (x, w) in atoms.clone() {
            let a = x - mu;
            let r = a / (1.0 - lam * a);
            g -= w * r;
            h -= w * r * r;
        }
        (g, h)
    };

    let second_moment: f64 = atoms.clone().map(|(x, w)| w * (x - mu) * (x - mu)).sum();
    let (mut lo, mut hi) = (0.0, lam_max);
    let mut lam = (mu - mean) / second_moment;
    if !(lam > lo && lam < hi) {
        lam = 0.5 * (lo + hi);
    }
    let mut grad = 0.0;
    for _ in 0..MAX_ITER {
        let (g, h) = derivatives(lam);
        grad = g;
        if g > 0.0 {
            lo = lam;
        } else {
            hi = lam;
        }
        let step = g / h;
        if g == 0.0 || hi - lo <= 4.0 * f64::EPSILON * lam_max || step.abs() <= 1e-15 * lam_max {
            break;
        }
        let newton = lam - step;
        lam = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    let value: f64 = atoms.map(|(x, w)| w * (1.0 - lam * (x - mu)).ln()).sum();
    DualSolution { value: value.max(0.0), lambda: lam, at_boundary: false, gradient: grad }
}

fn el_upper_bound_atoms<I>(atoms: I, epsilon: f64) -> f64
where
    I: Iterator<Item = (f64, f64)> + Clone,
{
    let mean: f64 = atoms.clone().map(|(x, w)| w * x).sum::<f64>().clamp(0.0, 1.0);
    if epsilon == 0.0 || mean >= 1.0 {
        return mean;
    }
    if epsilon.is_infinite() {
        return 1.0;
    }
    let has_top = atoms.clone().any(|(x, w)| x >= 1.0 && w > 0.0);
    if !has_top {
        let log_mass: f64 = atoms.clone().map(|(x, w)| w * (1.0 - x).ln()).sum();
        let tilt: f64 = atoms.clone().map(|(x, w)| w / (1.0 - x)).sum();
        if epsilon >= log_mass + tilt.ln() {
            return 1.0 - (log_mass - epsilon).exp();
        }
    }

    // KL(ν̂, q_τ) and its τ-derivative, plus the mean of q_τ
    let profile = |tau: f64| {
        let (mut lg, mut a, mut b, mut c) = (0.0, 0.0, 0.0, 0.0);
        for (x, w) in atoms.clone() {
            let inv = 1.0 / (1.0 - tau * x);
            lg += w * (1.0 - tau * x).ln();
            a += w * inv;
            b += w * x * inv;
            c += w * x * inv * inv;
        }
        (lg + a.ln(), c / a - b, b / a)
    };

    let variance: f64 = atoms.clone().map(|(x, w)| w * (x - mean) * (x - mean)).sum();
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut tau = (2.0 * epsilon / variance).sqrt();
    if !(tau > lo && tau < hi) {
        tau = 0.5;
    }
    let mut upper = mean;
    for _ in 0..MAX_ITER {
        let (kl, slope, m) = profile(tau);
        let excess = kl - epsilon;
        if excess <= 0.0 {
            lo = tau;
            upper = m;
        } else {
            hi = tau;
        }
        if excess.abs() <= 1e-15 * epsilon || hi - lo <= 2.0 * f64::EPSILON {
            upper = m;
            break;
        }
        let newton = tau - excess / slope;
        tau = if slope > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    upper.clamp(mean, 1.0)
}

/// Cheap enclosure of `el_upper_bound` from the mean `m` and biased variance
/// `v` of `ν̂`.
///
/// Lower end: the tilted law `q_i = w_i (1 + s (x_i − m))` with
/// `s = r / (1 + r m)`, `r = sqrt(2ε / v)` is feasible, because
/// `−log(1+u) ≤ −u + u² / (2 (1 − s m)²)` for `u ≥ −s m`; its mean is `m + s v`.
/// Upper end: `K_inf ≥ d_ber`, so the Bernoulli kl index dominates.
pub(crate) fn el_moment_bounds(m: f64, v: f64, epsilon: f64) -> (f64, f64) {
    let m = m.clamp(0.0, 1.0);
    let lower = if v > 0.0 && epsilon > 0.0 {
        let r = (2.0 * epsilon / v).sqrt();
        m + r * v / (1.0 + r * m)
    } else {
        m
    };
    let upper = kl_index_unchecked(&Divergence::bernoulli(), m, epsilon);
    (lower, upper)
}
