//! Monte-Carlo pseudo-regret harness.
//!
//! A trajectory's pseudo-regret after `t` rounds is `Σ_a Δ_a N_a(t)`, computed
//! from the true means. Replication `r` draws arm `a`'s rewards from its own
//! ChaCha8 stream (seeded by the master seed, stream `r·K + a`), so the n-th
//! reward of an arm is the same for every policy and every thread schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::environment::{ArmModel, ArmSampler};
use crate::error::{invalid, Result};
use crate::par::{map_indexed, Execution};
use crate::policy::{ArmSelector, PolicySpec, PolicyState};

/// Number of default checkpoints.
const DEFAULT_CHECKPOINTS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub arms: Vec<ArmModel>,
    pub horizon: u64,
    pub replications: u64,
    pub seed: u64,
    pub rescale_bound: f64,
    /// Strictly increasing rounds in `[1, horizon]`.
    pub checkpoints: Vec<u64>,
}

impl Scenario {
    /// Scenario with log-spaced default checkpoints.
    pub fn new(arms: Vec<ArmModel>, horizon: u64, replications: u64, seed: u64, rescale_bound: f64) -> Result<Self> {
        let checkpoints = log_checkpoints(horizon, DEFAULT_CHECKPOINTS);
        let s = Self { arms, horizon, replications, seed, rescale_bound, checkpoints };
        s.validate()?;
        Ok(s)
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<u64>) -> Result<Self> {
        self.checkpoints = checkpoints;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms.is_empty() {
            return Err(invalid("scenario has no arms"));
        }
        for arm in &self.arms {
            arm.clone().validated()?;
        }
        if self.horizon < self.arms.len() as u64 {
            return Err(invalid(format!(
                "horizon {} is shorter than the {} initialization rounds",
                self.horizon,
                self.arms.len()
            )));
        }
        if self.replications == 0 {
            return Err(invalid("replications must be positive"));
        }
        if !(self.rescale_bound.is_finite() && self.rescale_bound > 0.0) {
            return Err(invalid(format!("rescale_bound must be finite and positive, got {}", self.rescale_bound)));
        }
        if self.checkpoints.is_empty()
            || self.checkpoints[0] == 0
            || *self.checkpoints.last().unwrap() > self.horizon
            || self.checkpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(invalid("checkpoints must be strictly increasing within [1, horizon]"));
        }
        Ok(())
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmModel::true_mean).collect()
    }

    /// `Δ_a = μ★ − μ_a`.
    pub fn gaps(&self) -> Vec<f64> {
        let means = self.means();
        let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        means.iter().map(|m| best - m).collect()
    }

    fn arm_rng(&self, replication: u64, arm: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replication.wrapping_mul(self.arms.len() as u64).wrapping_add(arm as u64));
        rng
    }
}

/// About `count` log-spaced rounds in `[1, horizon]`, always ending at
/// `horizon`.
pub fn log_checkpoints(horizon: u64, count: usize) -> Vec<u64> {
    let horizon = horizon.max(1);
    let count = count.max(2);
    let top = (horizon as f64).ln();
    let mut out: Vec<u64> = (0..count)
        .map(|i| ((top * i as f64 / (count - 1) as f64).exp().round() as u64).clamp(1, horizon))
        .collect();
    out.push(horizon);
    out.dedup();
    out
}

/// One trajectory, sampled at the scenario's checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub checkpoints: Vec<u64>,
    pub regret: Vec<f64>,
    /// `N_a` per arm at the last checkpoint.
    pub pulls: Vec<u64>,
}

/// Monte-Carlo aggregate of [`RegretTrace`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretSummary {
    pub label: String,
    pub replications: u64,
    pub checkpoints: Vec<u64>,
    pub mean: Vec<f64>,
    pub q0005: Vec<f64>,
    pub q0995: Vec<f64>,
    pub q09995: Vec<f64>,
    /// Average `N_a(T)` per arm.
    pub mean_pulls: Vec<f64>,
    /// Sample standard deviation of `N_a(T)` per arm.
    pub sd_pulls: Vec<f64>,
}

impl RegretSummary {
    /// Mean regret at the horizon.
    pub fn final_mean(&self) -> f64 {
        *self.mean.last().expect("non-empty checkpoints")
    }
}

pub fn run_single(spec: &PolicySpec, scenario: &Scenario, replication: u64) -> Result<RegretTrace> {
    let state = PolicyState::new(*spec, scenario.arms.len(), scenario.rescale_bound)?;
    run_single_with(state, scenario, replication)
}

/// Drives any [`ArmSelector`] through one replication.
pub fn run_single_with<S: ArmSelector>(mut selector: S, scenario: &Scenario, replication: u64) -> Result<RegretTrace> {
    let k = scenario.arms.len();
    let gaps = scenario.gaps();
    let samplers: Vec<ArmSampler> = scenario.arms.iter().map(ArmModel::sampler).collect();
    let mut rngs: Vec<ChaCha8Rng> = (0..k).map(|a| scenario.arm_rng(replication, a)).collect();
    let mut pulls = vec![0u64; k];
    let mut regret = Vec::with_capacity(scenario.checkpoints.len());
    let mut next = scenario.checkpoints.iter().peekable();
    for t in 1..=scenario.horizon {
        let arm = selector.select_arm();
        if arm >= k {
            return Err(invalid(format!("selector chose arm {arm} of {k}")));
        }
        let reward = samplers[arm].sample(&mut rngs[arm]);
        selector.update(arm, reward)?;
        pulls[arm] += 1;
        if next.peek() == Some(&&t) {
            next.next();
            regret.push(pulls.iter().zip(&gaps).map(|(&n, g)| n as f64 * g).sum());
        }
        if next.peek().is_none() {
            break;
        }
    }
    Ok(RegretTrace { checkpoints: scenario.checkpoints.clone(), regret, pulls })
}

pub fn run_monte_carlo(spec: &PolicySpec, scenario: &Scenario) -> Result<RegretSummary> {
    run_monte_carlo_with(spec, scenario, Execution::default())
}

pub fn run_monte_carlo_with(spec: &PolicySpec, scenario: &Scenario, exec: Execution) -> Result<RegretSummary> {
    scenario.validate()?;
    let traces = map_indexed(scenario.replications, exec, |r| run_single(spec, scenario, r));
    let traces = traces.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(summarize(spec.label(), &traces))
}

/// Nearest-rank quantile of sorted data: the `⌈pN⌉`-th smallest value.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    // guard against p·N landing a hair above an integer
    let rank = ((p * n as f64) - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

/// Aggregates traces in the given order; they must share checkpoints.
pub fn summarize(label: String, traces: &[RegretTrace]) -> RegretSummary {
    assert!(!traces.is_empty(), "no traces to summarize");
    let checkpoints = traces[0].checkpoints.clone();
    let n = traces.len();
    let mut mean = Vec::with_capacity(checkpoints.len());
    let (mut q0005, mut q0995, mut q09995) = (Vec::new(), Vec::new(), Vec::new());
    let mut column = vec![0.0; n];
    for c in 0..checkpoints.len() {
        for (slot, tr) in column.iter_mut().zip(traces) {
            *slot = tr.regret[c];
        }
        mean.push(column.iter().sum::<f64>() / n as f64);
        column.sort_by(f64::total_cmp);
        q0005.push(nearest_rank(&column, 0.005));
        q0995.push(nearest_rank(&column, 0.995));
        q09995.push(nearest_rank(&column, 0.9995));
    }
    let k = traces[0].pulls.len();
    let mut mean_pulls = vec![0.0; k];
    let mut sd_pulls = vec![0.0; k];
    for a in 0..k {
        let m = traces.iter().map(|t| t.pulls[a] as f64).sum::<f64>() / n as f64;
        let ss: f64 = traces.iter().map(|t| (t.pulls[a] as f64 - m).powi(2)).sum();
        mean_pulls[a] = m;
        sd_pulls[a] = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
    }
    RegretSummary {
        label,
        replications: n as u64,
        checkpoints,
        mean,
        q0005,
        q0995,
        q09995,
        mean_pulls,
        sd_pulls,
    }
}
