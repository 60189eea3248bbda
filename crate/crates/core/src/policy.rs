//! Index policies: kl-UCB for any divergence, empirical KL-UCB, UCB, UCB-V
//! and UCB-Tuned.
//!
//! Every policy pulls each arm once, then picks the lowest-numbered arm with
//! the largest index. Policies built for `[0, 1]` rewards (Bernoulli and
//! quadratic kl-UCB, empirical KL-UCB and the UCB family) see rewards divided
//! by `rescale_bound` and report indices multiplied back. The other kl-UCB
//! families work on raw rewards.

use std::fmt;
use std::str::FromStr;

use crate::divergence::{Divergence, Family};
use crate::empirical::{el_moment_bounds, EmpiricalDistribution};
use crate::error::{domain, invalid, Error, Result};
use crate::index::kl_index_unchecked;
use crate::schedule::ExplorationSchedule;

/// Comparisons between cheap enclosures and exact indices, on the `[0, 1]`
/// scale, keep this much slack for rounding.
const PRUNE_MARGIN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    KlUcb { divergence: Divergence, schedule: ExplorationSchedule },
    EmpiricalKlUcb { schedule: ExplorationSchedule },
    /// `μ̂ + sqrt(f(t) / (2N))`.
    Ucb { schedule: ExplorationSchedule },
    UcbV,
    UcbTuned,
}

impl PolicySpec {
    pub fn kl_ucb(divergence: Divergence, schedule: ExplorationSchedule) -> Self {
        Self::KlUcb { divergence, schedule }
    }

    /// Identifier without spaces, e.g. `klucb/bernoulli/logt`.
    pub fn label(&self) -> String {
        self.to_string().replace(' ', "/")
    }

    /// Whether the policy works on rewards divided by the rescale bound.
    pub fn is_rescaled(&self) -> bool {
        match self {
            Self::KlUcb { divergence, .. } => {
                matches!(divergence.family(), Family::Bernoulli | Family::Quadratic { .. })
            }
            _ => true,
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::KlUcb { divergence, schedule } => write!(f, "klucb {divergence} {schedule}"),
            Self::EmpiricalKlUcb { schedule } => write!(f, "empklucb {schedule}"),
            Self::Ucb { schedule: ExplorationSchedule::LogT } => f.write_str("ucb"),
            Self::Ucb { schedule: ExplorationSchedule::LogPlus3LogLog } => f.write_str("ucb-cor2"),
            Self::Ucb { schedule } => write!(f, "ucb {schedule}"),
            Self::UcbV => f.write_str("ucbv"),
            Self::UcbTuned => f.write_str("ucbtuned"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let words: Vec<&str> = s.split_whitespace().collect();
        let (&kind, args) = words.split_first().ok_or_else(|| invalid("empty policy specification"))?;
        let schedule = |args: &[&str]| -> Result<ExplorationSchedule> {
            match args {
                [] => Ok(ExplorationSchedule::LogT),
                [s] => s.parse(),
                _ => Err(invalid(format!("{kind}: too many arguments"))),
            }
        };
        let bare = |spec: Self| {
            if args.is_empty() {
                Ok(spec)
            } else {
                Err(invalid(format!("{kind} takes no arguments")))
            }
        };
        match kind {
            "klucb" => {
                let (div, rest) = args
                    .split_first()
                    .ok_or_else(|| invalid("klucb needs a divergence, e.g. 'klucb bernoulli logt'"))?;
                Ok(Self::KlUcb { divergence: div.parse()?, schedule: schedule(rest)? })
            }
            "empklucb" => Ok(Self::EmpiricalKlUcb { schedule: schedule(args)? }),
            "ucb" => Ok(Self::Ucb { schedule: schedule(args)? }),
            "ucb-cor2" => bare(Self::Ucb { schedule: ExplorationSchedule::LogPlus3LogLog }),
            "ucbv" => bare(Self::UcbV),
            "ucbtuned" => bare(Self::UcbTuned),
            other => Err(invalid(format!(
                "unknown policy '{other}' (expected klucb, empklucb, ucb, ucb-cor2, ucbv or ucbtuned)"
            ))),
        }
    }
}

/// Anything that picks arms and learns from rewards; the simulator drives
/// this trait.
pub trait ArmSelector {
    fn select_arm(&mut self) -> usize;
    fn update(&mut self, arm: usize, reward: f64) -> Result<()>;
}

/// Sufficient statistics of one policy run.
#[derive(Debug, Clone)]
pub struct PolicyState {
    spec: PolicySpec,
    rescale_bound: f64,
    t: u64,
    pulls: Vec<u64>,
    sums: Vec<f64>,
    sums_sq: Vec<f64>,
    empirical: Vec<EmpiricalDistribution>,
}

impl PolicyState {
    pub fn new(spec: PolicySpec, num_arms: usize, rescale_bound: f64) -> Result<Self> {
        if num_arms == 0 {
            return Err(invalid("need at least one arm"));
        }
        if !(rescale_bound.is_finite() && rescale_bound > 0.0) {
            return Err(invalid(format!("rescale bound must be finite and positive, got {rescale_bound}")));
        }
        let empirical = match spec {
            PolicySpec::EmpiricalKlUcb { .. } => vec![EmpiricalDistribution::new(); num_arms],
            _ => Vec::new(),
        };
        Ok(Self {
            spec,
            rescale_bound,
            t: 0,
            pulls: vec![0; num_arms],
            sums: vec![0.0; num_arms],
            sums_sq: vec![0.0; num_arms],
            empirical,
        })
    }

    pub fn spec(&self) -> &PolicySpec {
        &self.spec
    }

    pub fn num_arms(&self) -> usize {
        self.pulls.len()
    }

    /// Rounds played so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn pulls(&self) -> &[u64] {
        &self.pulls
    }

    /// Raw reward sums per arm.
    pub fn reward_sums(&self) -> &[f64] {
        &self.sums
    }

    /// Raw sums of squared rewards per arm.
    pub fn reward_sq_sums(&self) -> &[f64] {
        &self.sums_sq
    }

    /// Raw empirical mean; `None` before the first pull.
    pub fn mean(&self, arm: usize) -> Option<f64> {
        match self.pulls.get(arm) {
            Some(&n) if n > 0 => Some(self.sums[arm] / n as f64),
            _ => None,
        }
    }

    /// Rescaled rewards seen on `arm`, for empirical KL-UCB only.
    pub fn empirical(&self, arm: usize) -> Option<&EmpiricalDistribution> {
        self.empirical.get(arm)
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        if arm >= self.pulls.len() {
            return Err(invalid(format!("arm {arm} out of range for {} arms", self.pulls.len())));
        }
        match self.spec {
            PolicySpec::KlUcb { divergence, .. } if !self.spec.is_rescaled() => {
                if !(reward.is_finite() && divergence.in_closure(reward)) {
                    return Err(domain(format!(
                        "reward {reward} outside [{}, {}] for {divergence}",
                        divergence.mu_lo(),
                        divergence.mu_hi()
                    )));
                }
            }
            _ => {
                if !(0.0..=self.rescale_bound).contains(&reward) {
                    return Err(domain(format!("reward {reward} outside [0, {}]", self.rescale_bound)));
                }
            }
        }
        if let Some(dist) = self.empirical.get_mut(arm) {
            dist.add_observation(reward / self.rescale_bound)?;
        }
        self.t += 1;
        self.pulls[arm] += 1;
        self.sums[arm] += reward;
        self.sums_sq[arm] += reward * reward;
        Ok(())
    }

    /// Index of `arm` at the current round, on the raw reward scale.
    pub fn index(&self, arm: usize) -> Result<f64> {
        match self.pulls.get(arm) {
            None => Err(invalid(format!("arm {arm} out of range for {} arms", self.pulls.len()))),
            Some(0) => Err(Error::Precondition(format!("arm {arm} has not been pulled"))),
            Some(_) => Ok(self.index_unchecked(arm)),
        }
    }

    /// Indices of all arms; fails if some arm was never pulled.
    pub fn indices(&self) -> Result<Vec<f64>> {
        (0..self.num_arms()).map(|a| self.index(a)).collect()
    }

    /// Next arm: the first never-pulled arm, else the smallest index among
    /// the maximizers.
    pub fn select_arm(&self) -> usize {
        if let Some(a) = self.pulls.iter().position(|&n| n == 0) {
            return a;
        }
        match self.spec {
            PolicySpec::EmpiricalKlUcb { schedule } => self.select_empirical(schedule.at(self.t)),
            _ => self.select_arm_exhaustive(),
        }
    }

    /// Same choice as [`select_arm`](Self::select_arm), evaluating every
    /// index exactly.
    pub fn select_arm_exhaustive(&self) -> usize {
        if let Some(a) = self.pulls.iter().position(|&n| n == 0) {
            return a;
        }
        let mut best = 0;
        let mut best_value = f64::NEG_INFINITY;
        for a in 0..self.num_arms() {
            let u = self.index_unchecked(a);
            if u > best_value {
                best = a;
                best_value = u;
            }
        }
        best
    }

    fn index_unchecked(&self, arm: usize) -> f64 {
        let n = self.pulls[arm] as f64;
        let b = self.rescale_bound;
        let m = self.sums[arm] / n / b;
        let log_t = (self.t.max(1) as f64).ln();
        match self.spec {
            PolicySpec::KlUcb { divergence, schedule } => {
                let eps = schedule.at(self.t) / n;
                if self.spec.is_rescaled() {
                    let m = m.clamp(divergence.mu_lo(), divergence.mu_hi());
                    b * kl_index_unchecked(&divergence, m, eps)
                } else {
                    let m = (self.sums[arm] / n).clamp(divergence.mu_lo(), divergence.mu_hi());
                    kl_index_unchecked(&divergence, m, eps)
                }
            }
            PolicySpec::EmpiricalKlUcb { schedule } => {
                let eps = schedule.at(self.t) / n;
                b * self.empirical[arm].el_upper_bound_unchecked(eps)
            }
            PolicySpec::Ucb { schedule } => {
                let eps = schedule.at(self.t) / n;
                b * (m + (eps / 2.0).sqrt())
            }
            PolicySpec::UcbV => {
                let v = self.scaled_variance(arm, m);
                b * (m + (2.0 * v * log_t / n).sqrt() + 3.0 * log_t / n)
            }
            PolicySpec::UcbTuned => {
                let v = self.scaled_variance(arm, m);
                let cap = (v + (2.0 * log_t / n).sqrt()).min(0.25);
                b * (m + (cap * log_t / n).sqrt())
            }
        }
    }

    /// Biased variance of the rescaled rewards.
    fn scaled_variance(&self, arm: usize, m: f64) -> f64 {
        let n = self.pulls[arm] as f64;
        let b = self.rescale_bound;
        (self.sums_sq[arm] / n / (b * b) - m * m).max(0.0)
    }

    /// Argmax for empirical KL-UCB without solving every arm exactly.
    ///
    /// Each arm starts from a cheap enclosure of its index; exact solves are
    /// spent, cheapest support first, only on arms that could still reach
    /// the maximum. Picks exactly the arm the exhaustive argmax would.
    fn select_empirical(&self, level: f64) -> usize {
        let k = self.num_arms();
        let mut lo = vec![0.0; k];
        let mut hi = vec![0.0; k];
        let mut exact = vec![false; k];
        for a in 0..k {
            let dist = &self.empirical[a];
            let eps = level / self.pulls[a] as f64;
            let (m, v) = dist.running_moments();
            let (mut l, mut h) = el_moment_bounds(m, v, eps);
            if let Some((sl, sh)) = dist.el_series_bounds(eps) {
                l = l.max(sl);
                h = h.min(sh);
            }
            if l <= h && h - l > 0.0 {
                lo[a] = l;
                hi[a] = h;
            } else {
                let u = dist.el_upper_bound_unchecked(eps);
                lo[a] = u;
                hi[a] = u;
                exact[a] = true;
            }
        }
        loop {
            let best_lo = lo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut open: Option<usize> = None;
            let mut contenders = 0;
            let mut leader = 0;
            let mut leader_value = f64::NEG_INFINITY;
            for a in (0..k).filter(|&a| hi[a] + PRUNE_MARGIN >= best_lo) {
                contenders += 1;
                if !exact[a] {
                    let cheaper = |b: usize| self.empirical[a].support().len() < self.empirical[b].support().len();
                    if open.is_none_or(cheaper) {
                        open = Some(a);
                    }
                } else if lo[a] > leader_value {
                    leader = a;
                    leader_value = lo[a];
                }
            }
            match open {
                None => return leader,
                // the only contender holds the largest lower end, and every
                // other arm lies strictly below it
                Some(a) if contenders == 1 => return a,
                Some(a) => {
                    let eps = level / self.pulls[a] as f64;
                    let u = self.empirical[a].el_upper_bound_unchecked(eps);
                    lo[a] = u;
                    hi[a] = u;
                    exact[a] = true;
                }
            }
        }
    }
}

impl ArmSelector for PolicyState {
    fn select_arm(&mut self) -> usize {
        PolicyState::select_arm(self)
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        PolicyState::update(self, arm, reward)
    }
}
