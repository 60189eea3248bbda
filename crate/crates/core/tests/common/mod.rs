//! Checks shared by the property tests and the acceptance runner.
//!
//! Each check returns `Err(description)` on the first violation so that the
//! proptest suite and the acceptance summary report the same thing.

#![allow(dead_code)]

use klucb::divergence::{Divergence, Family};
use klucb::empirical::EmpiricalDistribution;
use klucb::environment::ArmModel;
use klucb::policy::{ArmSelector, PolicySpec, PolicyState};
use klucb::schedule::ExplorationSchedule;
use klucb::{kl_index, Result as KlResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = std::result::Result<(), String>;

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every family with a representative nuisance parameter.
pub fn families() -> Vec<Divergence> {
    [
        Family::Bernoulli,
        Family::Binomial { n: 5 },
        Family::Poisson,
        Family::NegBinomial { r: 2.0 },
        Family::Gaussian { sigma2: 0.7 },
        Family::Gamma { alpha: 1.0 },
        Family::Gamma { alpha: 3.0 },
        Family::Quadratic { scale: 2.0 },
    ]
    .into_iter()
    .map(|f| Divergence::new(f).unwrap())
    .collect()
}

/// A point of the open interval, spread over a sensible range: `u ∈ (0, 1)`
/// maps onto bounded intervals linearly and onto half-lines through `x/(1−x)`.
pub fn interior_point(d: &Divergence, u: f64) -> f64 {
    let u = u.clamp(1e-3, 1.0 - 1e-3);
    let (lo, hi) = (d.mu_lo(), d.mu_hi());
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => lo + u * (hi - lo),
        (true, false) => lo + 4.0 * u / (1.0 - u),
        (false, false) => 8.0 * (u - 0.5),
        (false, true) => unreachable!(),
    }
}

// ---------------------------------------------------------------- divergence

pub fn positivity(d: &Divergence, mu: f64, mu_prime: f64) -> Check {
    let v = d.eval(mu, mu_prime).map_err(|e| e.to_string())?;
    ensure(v >= 0.0, || format!("{d}: d({mu}, {mu_prime}) = {v} < 0"))?;
    if mu == mu_prime {
        ensure(v.abs() <= 1e-12, || format!("{d}: d({mu}, {mu}) = {v} != 0"))
    } else if (mu - mu_prime).abs() > 1e-6 {
        ensure(v > 0.0, || format!("{d}: d({mu}, {mu_prime}) = 0 for distinct arguments"))
    } else {
        Ok(())
    }
}

/// `d_ber ≥ d_qua(2)` on the 200 × 200 grid of `[0, 1]²`.
pub fn pinsker_grid() -> Check {
    let ber = Divergence::bernoulli();
    let qua = Divergence::hoeffding();
    for i in 0..200 {
        for j in 0..200 {
            let (p, q) = (i as f64 / 199.0, j as f64 / 199.0);
            let b = ber.eval(p, q).unwrap();
            let h = qua.eval(p, q).unwrap();
            ensure(b >= h - 1e-15, || format!("d_ber({p}, {q}) = {b} < {h}"))?;
        }
    }
    Ok(())
}

/// Checked for `mu < mu_star`, the side the bounds use; the arguments are
/// swapped otherwise.
pub fn derivative_consistency(d: &Divergence, mu: f64, mu_star: f64) -> Check {
    let (mu, mu_star) = (mu.min(mu_star), mu.max(mu_star));
    if mu == mu_star {
        return Ok(());
    }
    let step = 1e-6 * mu.abs().max(1.0);
    if !(d.in_interior(mu - step) && d.in_interior(mu + step)) {
        return Ok(());
    }
    let exact = d.d_prime_first(mu, mu_star).map_err(|e| e.to_string())?;
    let fd = (d.eval(mu + step, mu_star).unwrap() - d.eval(mu - step, mu_star).unwrap()) / (2.0 * step);
    let scale = exact.abs().max(1e-3);
    ensure((exact - fd).abs() <= 1e-5 * scale, || {
        format!("{d}: d'({mu}, {mu_star}) = {exact}, finite difference {fd}")
    })
}

/// Convex in `μ′ ≥ μ` for the Bernoulli, binomial, Poisson, Gaussian and
/// quadratic families. The gamma divergence has second derivative
/// `α (2μ − μ′) / μ′³` and the negative binomial one
/// `r (2μμ′ + rμ − μ′²) / (μ′² (μ′ + r)²)`, so for those only the convex
/// stretch up to the sign change is checked. Monotonicity on `μ′ ≥ μ` is
/// checked for every family.
pub fn convexity_second_argument(d: &Divergence, mu: f64, a: f64, b: f64) -> Check {
    let (a, b) = (a.min(b), a.max(b));
    if a < mu {
        return Ok(());
    }
    let (da, db) = (d.eval(mu, a).unwrap(), d.eval(mu, b).unwrap());
    ensure(da <= db + 1e-12, || format!("{d}: d({mu}, ·) decreases on [{a}, {b}]"))?;
    let limit = match d.family() {
        Family::Gamma { .. } => 2.0 * mu,
        Family::NegBinomial { r } => mu + (mu * mu + r * mu).sqrt(),
        _ => f64::INFINITY,
    };
    if b > limit {
        return Ok(());
    }
    let mid = d.eval(mu, 0.5 * (a + b)).unwrap();
    let chord = 0.5 * (d.eval(mu, a).unwrap() + d.eval(mu, b).unwrap());
    ensure(mid <= chord + 1e-12, || format!("{d}: d({mu}, ·) not convex on [{a}, {b}]"))
}

// --------------------------------------------------------------------- index

pub fn index_monotone_in_radius(d: &Divergence, mu_hat: f64, e1: f64, e2: f64) -> Check {
    let (e1, e2) = (e1.min(e2), e1.max(e2));
    let u1 = kl_index(d, mu_hat, e1).map_err(|e| e.to_string())?;
    let u2 = kl_index(d, mu_hat, e2).map_err(|e| e.to_string())?;
    ensure(u1 <= u2 + 1e-9, || format!("{d}: U({mu_hat}, {e1}) = {u1} > U({mu_hat}, {e2}) = {u2}"))?;
    ensure(u1 >= mu_hat, || format!("{d}: U({mu_hat}, {e1}) = {u1} below the mean"))
}

pub fn index_inverse_consistency(d: &Divergence, mu_hat: f64, eps: f64) -> Check {
    let u = kl_index(d, mu_hat, eps).map_err(|e| e.to_string())?;
    if !d.in_interior(u) || u == mu_hat {
        return Ok(());
    }
    let back = d.eval(mu_hat, u).unwrap();
    if (back - eps).abs() <= 1e-8 {
        return Ok(());
    }
    // Near the end of a bounded interval d(μ̂, ·) is too steep for f64 to pin
    // the divergence down to 1e-8; the root must then be bracketed within
    // 1e-10 in mean units instead.
    let past = d.eval(mu_hat, (u + 1e-10 * u.abs().max(1.0)).min(d.mu_hi())).unwrap();
    ensure(back <= eps && past >= eps, || {
        format!("{d}: d({mu_hat}, U) = {back}, radius {eps}, d just past U = {past}")
    })
}

pub fn pinsker_index_ordering(mu_hat: f64, eps: f64) -> Check {
    let ber = kl_index(&Divergence::bernoulli(), mu_hat, eps).unwrap();
    let qua = kl_index(&Divergence::hoeffding(), mu_hat, eps).unwrap().min(1.0);
    ensure(ber <= qua + 1e-12, || format!("bernoulli index {ber} above quadratic {qua} at ({mu_hat}, {eps})"))
}

/// Gaussian index against the closed form and against a plain bisection on
/// the divergence.
pub fn gaussian_closed_form(sigma2: f64, mu_hat: f64, eps: f64) -> Check {
    let d = Divergence::new(Family::Gaussian { sigma2 }).unwrap();
    let u = kl_index(&d, mu_hat, eps).unwrap();
    let formula = mu_hat + (2.0 * sigma2 * eps).sqrt();
    ensure((u - formula).abs() <= 1e-10 * formula.abs().max(1.0), || {
        format!("gaussian index {u} vs closed form {formula}")
    })?;
    let (mut lo, mut hi) = (mu_hat, mu_hat + 1.0);
    while d.eval(mu_hat, hi).unwrap() <= eps {
        hi = mu_hat + 2.0 * (hi - mu_hat);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if d.eval(mu_hat, mid).unwrap() <= eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ensure((u - lo).abs() <= 1e-10 * lo.abs().max(1.0), || format!("gaussian index {u} vs bisection {lo}"))
}

// ----------------------------------------------------------------- empirical

/// Random distribution with at most `max_points` atoms in `[0, 1]`, integer
/// counts, sometimes with atoms exactly at 0 or 1, and mean below 1.
pub fn random_small_distribution<R: Rng>(rng: &mut R, max_points: usize) -> EmpiricalDistribution {
    loop {
        let k = rng.random_range(1..=max_points);
        let mut pairs: Vec<(f64, u64)> = Vec::with_capacity(k);
        for _ in 0..k {
            let r: f64 = rng.random();
            let x = if r < 0.12 {
                0.0
            } else if r < 0.24 {
                1.0
            } else {
                rng.random::<f64>()
            };
            if pairs.iter().all(|(v, _)| *v != x) {
                pairs.push((x, rng.random_range(1..=9)));
            }
        }
        let dist = EmpiricalDistribution::from_counts(&pairs).unwrap();
        if dist.mean() < 0.99 {
            return dist;
        }
    }
}

fn weights_of(dist: &EmpiricalDistribution) -> Vec<f64> {
    dist.weights().collect()
}

/// `K_inf` by grid search over the distributions on `Supp ∪ {1}` whose mean
/// equals `mu`. The lowest atom and the largest atom below 1 both carry
/// empirical mass, so their weights stay positive at the optimum; they absorb
/// the normalization and mean constraints. The other weights, including the
/// one at 1, are gridded over `[0, 1]` at mesh 0.01, then refined by a local
/// pattern search whose mesh shrinks fourfold each time the incumbent stops
/// moving.
pub fn kinf_grid(dist: &EmpiricalDistribution, mu: f64) -> f64 {
    if mu <= dist.mean() {
        return 0.0;
    }
    let mut xs: Vec<f64> = dist.support().to_vec();
    let mut ps = weights_of(dist);
    if *xs.last().unwrap() < 1.0 {
        xs.push(1.0);
        ps.push(0.0);
    }
    let m = xs.len();
    let j = if m == 2 { 1 } else { (1..m).rev().find(|&k| ps[k] > 0.0).unwrap() };
    let i = 0;
    let free_idx: Vec<usize> = (0..m).filter(|&k| k != i && k != j).collect();
    let free = free_idx.len();
    let term = |p: f64, q: f64| {
        if p == 0.0 {
            0.0
        } else if q <= 0.0 {
            f64::INFINITY
        } else {
            p * (p / q).ln()
        }
    };
    let objective = |q: &[f64]| -> f64 {
        let s: f64 = q.iter().sum();
        let sx: f64 = q.iter().zip(&free_idx).map(|(q, &k)| q * xs[k]).sum();
        let (r0, r1) = (1.0 - s, mu - sx);
        let qj = (r1 - xs[i] * r0) / (xs[j] - xs[i]);
        let qi = r0 - qj;
        if q.iter().any(|&v| v < 0.0) || qi <= 0.0 || qj <= 0.0 {
            return f64::INFINITY;
        }
        q.iter().zip(&free_idx).map(|(&q, &k)| term(ps[k], q)).sum::<f64>() + term(ps[i], qi) + term(ps[j], qj)
    };
    if free == 0 {
        return objective(&[]);
    }
    // the mixture of the empirical law with the atom at 1 that has mean `mu`
    // is always feasible
    let alpha = (mu - dist.mean()) / (1.0 - dist.mean());
    let mut best: Vec<f64> = free_idx
        .iter()
        .map(|&k| (1.0 - alpha) * ps[k] + if k == m - 1 { alpha } else { 0.0 })
        .collect();
    let mut best_val = objective(&best);
    let scan = |center: &[f64], mesh: f64, half: i64, best: &mut Vec<f64>, best_val: &mut f64| {
        let mut q = vec![0.0; free];
        let coord = |d: usize, n: i64| (center[d] + n as f64 * mesh).clamp(0.0, 1.0);
        for a in -half..=half {
            q[0] = coord(0, a);
            let inner = if free == 1 { 0..=0 } else { -half..=half };
            for b in inner {
                if free == 2 {
                    q[1] = coord(1, b);
                }
                let v = objective(&q);
                if v < *best_val {
                    *best_val = v;
                    best.copy_from_slice(&q);
                }
            }
        }
    };
    scan(&vec![0.5; free], 0.01, 50, &mut best, &mut best_val);
    let mut mesh = 0.01;
    while mesh > 1e-8 {
        for _ in 0..1_000 {
            let before = best.clone();
            scan(&before, mesh, 4, &mut best, &mut best_val);
            if best == before {
                break;
            }
        }
        mesh /= 4.0;
    }
    best_val
}

/// EL bound by bisection on `mu` with the grid `K_inf`.
pub fn el_grid(dist: &EmpiricalDistribution, eps: f64) -> f64 {
    let (mut lo, mut hi) = (dist.mean(), 1.0);
    if kinf_grid(dist, 1.0) <= eps {
        return 1.0;
    }
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if kinf_grid(dist, mid) <= eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Library `K_inf` and EL bound against the grid oracles, within `tol`.
pub fn oracle_agreement(dist: &EmpiricalDistribution, mu: f64, eps: f64, tol: f64) -> Check {
    let k = dist.kinf(mu).map_err(|e| e.to_string())?;
    let kg = kinf_grid(dist, mu);
    ensure((k - kg).abs() <= tol, || format!("kinf {k} vs grid {kg} at mu {mu} for {dist:?}"))?;
    let u = dist.el_upper_bound(eps).map_err(|e| e.to_string())?;
    let ug = el_grid(dist, eps);
    ensure((u - ug).abs() <= tol, || format!("EL bound {u} vs grid {ug} at eps {eps} for {dist:?}"))
}

pub fn kinf_monotone(dist: &EmpiricalDistribution, mu1: f64, mu2: f64) -> Check {
    let (a, b) = (mu1.min(mu2), mu1.max(mu2));
    let ka = dist.kinf(a).map_err(|e| e.to_string())?;
    let kb = dist.kinf(b).map_err(|e| e.to_string())?;
    ensure(ka <= kb + 1e-12, || format!("kinf({a}) = {ka} > kinf({b}) = {kb}"))
}

pub fn el_monotone(dist: &EmpiricalDistribution, e1: f64, e2: f64) -> Check {
    let (a, b) = (e1.min(e2), e1.max(e2));
    let ua = dist.el_upper_bound(a).map_err(|e| e.to_string())?;
    let ub = dist.el_upper_bound(b).map_err(|e| e.to_string())?;
    ensure(ua <= ub + 1e-12, || format!("U({a}) = {ua} > U({b}) = {ub}"))?;
    ensure(ua >= dist.mean() - 1e-12, || format!("U({a}) = {ua} below the mean"))
}

fn dual_objective(dist: &EmpiricalDistribution, mu: f64, lambda: f64) -> f64 {
    dist.support()
        .iter()
        .zip(dist.weights())
        .map(|(&x, w)| w * (1.0 - lambda * (x - mu)).ln())
        .sum()
}

/// The dual maximizer is stationary or on the boundary, and the dual is
/// concave along a few chords of its domain.
pub fn dual_stationarity(dist: &EmpiricalDistribution, mu: f64) -> Check {
    let sol = dist.kinf_solution(mu).map_err(|e| e.to_string())?;
    let top = 1.0 / (1.0 - mu);
    ensure(sol.lambda >= 0.0 && sol.lambda <= top * (1.0 + 1e-12), || {
        format!("lambda {} outside [0, {top}]", sol.lambda)
    })?;
    ensure(sol.at_boundary || sol.gradient.abs() <= 1e-8, || {
        format!("interior dual maximizer with gradient {}", sol.gradient)
    })?;
    let value = dual_objective(dist, mu, sol.lambda);
    ensure(!sol.at_boundary || sol.value >= value - 1e-9 || !value.is_finite(), || {
        format!("boundary value {} below the objective {value}", sol.value)
    })?;
    for i in 1..8 {
        let (a, b) = (top * (i - 1) as f64 / 8.0, top * (i + 1) as f64 / 8.0 * 0.999);
        let mid = dual_objective(dist, mu, 0.5 * (a + b));
        let chord = 0.5 * (dual_objective(dist, mu, a) + dual_objective(dist, mu, b));
        ensure(!chord.is_finite() || mid >= chord - 1e-12, || format!("dual not concave on [{a}, {b}]"))?;
    }
    Ok(())
}

/// On `{0, 1}` data the EL bound is the Bernoulli kl-UCB index.
pub fn bernoulli_reduction(zeros: u64, ones: u64, eps: f64) -> Check {
    let mut pairs = Vec::new();
    if zeros > 0 {
        pairs.push((0.0, zeros));
    }
    if ones > 0 {
        pairs.push((1.0, ones));
    }
    let dist = EmpiricalDistribution::from_counts(&pairs).unwrap();
    let el = dist.el_upper_bound(eps).unwrap();
    let kl = kl_index(&Divergence::bernoulli(), dist.mean(), eps).unwrap();
    ensure((el - kl).abs() <= 1e-9, || format!("{zeros} zeros, {ones} ones, eps {eps}: EL {el}, kl {kl}"))
}

pub fn el_below_quadratic(dist: &EmpiricalDistribution, eps: f64) -> Check {
    let el = dist.el_upper_bound(eps).unwrap();
    let qua = kl_index(&Divergence::hoeffding(), dist.mean(), eps).unwrap().min(1.0);
    ensure(el <= qua + 1e-12, || format!("EL bound {el} above quadratic {qua}"))
}

// -------------------------------------------------------------------- policy

/// Rewards `streams[a][n]` for the n-th pull of arm `a`.
pub struct RewardStreams {
    pub streams: Vec<Vec<f64>>,
}

impl RewardStreams {
    /// `k` arms of uniform `[0, scale]` rewards.
    pub fn uniform<R: Rng>(rng: &mut R, k: usize, len: usize, scale: f64) -> Self {
        let streams = (0..k)
            .map(|_| {
                let shape: f64 = rng.random_range(0.3..3.0);
                (0..len).map(|_| scale * rng.random::<f64>().powf(shape)).collect()
            })
            .collect();
        Self { streams }
    }

    /// `k` arms of `{0, scale}` rewards with random success probabilities.
    pub fn binary<R: Rng>(rng: &mut R, k: usize, len: usize, scale: f64) -> Self {
        let streams = (0..k)
            .map(|_| {
                let p: f64 = rng.random();
                (0..len).map(|_| if rng.random::<f64>() < p { scale } else { 0.0 }).collect()
            })
            .collect();
        Self { streams }
    }
}

/// Runs a selector for `rounds` rounds, calling `inspect` before each
/// selection once every arm has been pulled.
pub fn drive<S, F>(selector: &mut S, rewards: &RewardStreams, rounds: usize, mut inspect: F) -> KlResult<Vec<usize>>
where
    S: ArmSelector,
    F: FnMut(&S) -> Check,
{
    let k = rewards.streams.len();
    let mut used = vec![0usize; k];
    let mut actions = Vec::with_capacity(rounds);
    for t in 0..rounds {
        if t >= k {
            if let Err(msg) = inspect(selector) {
                panic!("round {t}: {msg}");
            }
        }
        let a = selector.select_arm();
        selector.update(a, rewards.streams[a][used[a]])?;
        used[a] += 1;
        actions.push(a);
    }
    Ok(actions)
}

/// Compares two policies' action sequences and, optionally, their indices.
pub fn same_actions(
    first: PolicySpec,
    second: PolicySpec,
    rewards: &RewardStreams,
    rounds: usize,
    scale: f64,
    index_tol: Option<f64>,
) -> Check {
    let k = rewards.streams.len();
    let mut a = PolicyState::new(first, k, scale).unwrap();
    let mut b = PolicyState::new(second, k, scale).unwrap();
    let mut used = vec![0usize; k];
    for t in 0..rounds {
        if let (Some(tol), true) = (index_tol, t >= k) {
            for arm in 0..k {
                let (ia, ib) = (a.index(arm).unwrap(), b.index(arm).unwrap());
                ensure((ia - ib).abs() <= tol, || format!("round {t}, arm {arm}: indices {ia} vs {ib}"))?;
            }
        }
        let (x, y) = (a.select_arm(), b.select_arm());
        ensure(x == y, || format!("round {t}: {first} chose {x}, {second} chose {y}"))?;
        let r = rewards.streams[x][used[x]];
        used[x] += 1;
        a.update(x, r).unwrap();
        b.update(y, r).unwrap();
    }
    Ok(())
}

/// Every index dominates its arm's mean, the pruned and exhaustive argmax
/// agree, and a rerun reproduces the actions.
pub fn policy_invariants(spec: PolicySpec, rewards: &RewardStreams, rounds: usize, scale: f64) -> Check {
    let k = rewards.streams.len();
    let run = || {
        let mut state = PolicyState::new(spec, k, scale).unwrap();
        let mut failure = None;
        let actions = drive(&mut state, rewards, rounds, |s: &PolicyState| {
            for arm in 0..k {
                let idx = s.index(arm).map_err(|e| e.to_string())?;
                let mean = s.mean(arm).unwrap();
                ensure(idx >= mean - 1e-12 * scale, || format!("{spec}: arm {arm} index {idx} < mean {mean}"))?;
            }
            let (fast, slow) = (s.select_arm(), s.select_arm_exhaustive());
            if fast != slow && failure.is_none() {
                failure = Some(format!("{spec}: pruned argmax {fast}, exhaustive {slow}"));
            }
            Ok(())
        })
        .map_err(|e| e.to_string());
        (actions, failure)
    };
    let (first, failure) = run();
    if let Some(f) = failure {
        return Err(f);
    }
    let (second, _) = run();
    ensure(first? == second?, || format!("{spec}: rerun changed the actions"))
}

pub fn all_policies() -> Vec<PolicySpec> {
    vec![
        PolicySpec::kl_ucb(Divergence::bernoulli(), ExplorationSchedule::LogT),
        PolicySpec::kl_ucb(Divergence::hoeffding(), ExplorationSchedule::LogPlus3LogLog),
        PolicySpec::EmpiricalKlUcb { schedule: ExplorationSchedule::LogT },
        PolicySpec::Ucb { schedule: ExplorationSchedule::LogT },
        PolicySpec::UcbV,
        PolicySpec::UcbTuned,
    ]
}

// --------------------------------------------------------------- environment

/// Sample mean of `n` draws within four standard errors of the true mean.
pub fn sample_mean_matches(arm: &ArmModel, n: usize, seed: u64) -> Check {
    let sampler = arm.sampler();
    let mut rng = rng(seed);
    let (lo, hi) = arm.range();
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let x = sampler.sample(&mut rng);
        ensure(x >= lo && x <= hi, || format!("{arm}: sample {x} outside [{lo}, {hi}]"))?;
        s += x;
        s2 += x * x;
    }
    let m = s / n as f64;
    let sd = ((s2 / n as f64 - m * m).max(0.0) / n as f64).sqrt();
    let truth = arm.true_mean();
    ensure((m - truth).abs() <= 4.0 * sd + 1e-12, || format!("{arm}: sample mean {m}, true mean {truth}, se {sd}"))
}

pub fn arm_zoo() -> Vec<ArmModel> {
    vec![
        ArmModel::bernoulli(0.3).unwrap(),
        ArmModel::truncated_poisson(1.25, 10).unwrap(),
        ArmModel::truncated_poisson(6.0, 5).unwrap(),
        ArmModel::truncated_exponential(0.2, 10.0).unwrap(),
        ArmModel::gaussian(-0.4, 2.0).unwrap(),
        ArmModel::finite(vec![0.0, 0.25, 1.0], vec![0.2, 0.5, 0.3]).unwrap(),
    ]
}

// ----------------------------------------------------------------- simulator

use klucb::analysis;
use klucb::config::ScenarioConfig;
use klucb::simulator::{run_monte_carlo_with, run_single, run_single_with, Scenario};
use klucb::Execution;

pub fn bernoulli_scenario(means: &[f64], horizon: u64, replications: u64, seed: u64) -> Scenario {
    let arms = means.iter().map(|&p| ArmModel::bernoulli(p).unwrap()).collect();
    Scenario::new(arms, horizon, replications, seed, 1.0).unwrap()
}

/// Sequential, parallel and repeated runs give bit-identical summaries.
pub fn reproducible(spec: &PolicySpec, scenario: &Scenario) -> Check {
    let seq = run_monte_carlo_with(spec, scenario, Execution::Sequential).map_err(|e| e.to_string())?;
    let par = run_monte_carlo_with(spec, scenario, Execution::Parallel).map_err(|e| e.to_string())?;
    let again = run_monte_carlo_with(spec, scenario, Execution::Parallel).map_err(|e| e.to_string())?;
    let bits = |s: &klucb::RegretSummary| -> Vec<u64> {
        s.mean.iter().chain(&s.q0005).chain(&s.q0995).chain(&s.q09995).chain(&s.mean_pulls).map(|x| x.to_bits()).collect()
    };
    ensure(bits(&seq) == bits(&par), || format!("{spec}: sequential and parallel summaries differ"))?;
    ensure(bits(&par) == bits(&again), || format!("{spec}: rerun changed the summary"))
}

pub fn monotone_traces(spec: &PolicySpec, scenario: &Scenario) -> Check {
    for r in 0..scenario.replications {
        let trace = run_single(spec, scenario, r).map_err(|e| e.to_string())?;
        ensure(trace.regret.windows(2).all(|w| w[0] <= w[1]), || format!("{spec}: replication {r} regret decreases"))?;
        let total: u64 = trace.pulls.iter().sum();
        ensure(total == scenario.horizon, || format!("{spec}: {total} pulls over horizon {}", scenario.horizon))?;
    }
    Ok(())
}

/// Final regret of every replication is zero.
pub fn zero_regret(spec: &PolicySpec, scenario: &Scenario) -> Check {
    let s = run_monte_carlo_with(spec, scenario, Execution::default()).map_err(|e| e.to_string())?;
    ensure(s.q09995.iter().all(|&x| x == 0.0), || format!("{spec}: nonzero regret with no suboptimal arm"))
}

/// Always pulls one arm.
pub struct FixedArm(pub usize);

impl ArmSelector for FixedArm {
    fn select_arm(&mut self) -> usize {
        self.0
    }

    fn update(&mut self, _arm: usize, _reward: f64) -> KlResult<()> {
        Ok(())
    }
}

/// Pulling arm `a` throughout costs exactly `Δ_a t` at each checkpoint.
pub fn fixed_arm_regret(scenario: &Scenario) -> Check {
    let gaps = scenario.gaps();
    for (a, gap) in gaps.iter().enumerate() {
        let trace = run_single_with(FixedArm(a), scenario, 0).map_err(|e| e.to_string())?;
        for (&t, &r) in trace.checkpoints.iter().zip(&trace.regret) {
            let want = gap * t as f64;
            ensure((r - want).abs() <= 1e-9 * want.max(1.0), || format!("arm {a} at {t}: regret {r}, expected {want}"))?;
        }
    }
    Ok(())
}

/// kl-UCB on Bernoulli (0.6, 0.5): regret gained between 1000 and 10000
/// rounds is within a factor two of `Δ log 10 / d(0.5, 0.6)`.
pub fn log_growth(replications: u64, seed: u64) -> Check {
    let scenario = bernoulli_scenario(&[0.6, 0.5], 10_000, replications, seed)
        .with_checkpoints(vec![1_000, 10_000])
        .unwrap();
    let spec = PolicySpec::kl_ucb(Divergence::bernoulli(), ExplorationSchedule::LogT);
    let s = run_monte_carlo_with(&spec, &scenario, Execution::default()).map_err(|e| e.to_string())?;
    let grown = s.mean[1] - s.mean[0];
    let predicted = 0.1 * 10f64.ln() / Divergence::bernoulli().eval(0.5, 0.6).unwrap();
    let ratio = grown / predicted;
    ensure((0.5..=2.0).contains(&ratio), || format!("regret grew {grown} over a decade, predicted {predicted}"))
}

/// The kl-UCB pull bound is nondecreasing in the horizon.
pub fn bound_monotone_in_horizon(d: &Divergence, mu_a: f64, mu_star: f64) -> Check {
    let mut last = 0.0;
    for i in 0..60 {
        let horizon = 20.0 * 1.25f64.powi(i);
        let total = analysis::klucb_pull_bound(horizon, mu_a, mu_star, d).map_err(|e| e.to_string())?.total;
        ensure(total >= last, || format!("{d}: bound {total} at T = {horizon} below {last}"))?;
        last = total;
    }
    Ok(())
}

pub fn config_round_trip(config: &ScenarioConfig) -> Check {
    let text = config.to_string();
    let back: ScenarioConfig = text.parse().map_err(|e: klucb::config::ConfigError| e.to_string())?;
    ensure(&back == config, || format!("round trip changed the config:\n{text}"))?;
    ensure(back.fingerprint() == config.fingerprint(), || "fingerprint changed".into())
}
