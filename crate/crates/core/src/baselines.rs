//! Uncoupled reference policies.
//!
//! The bandit policies are the textbook forms of epsilon-greedy, softmax
//! (Boltzmann) selection and UCB1-tuned. [`MultiAgentTeam`] runs one
//! learner per user with no shared state, which is how a crowd of selfish
//! users ends up on the Nash equilibrium.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::env::{ChannelModel, JointAction, SlotOutcome};
use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Policy {
    EpsilonGreedy { epsilon: f64 },
    Softmax { tau: f64 },
    Ucb1Tuned,
}

impl Policy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Policy::EpsilonGreedy { epsilon } if !(0.0..=1.0).contains(&epsilon) => {
                Err(Error::Config(format!("epsilon {epsilon} outside [0, 1]")))
            }
            Policy::Softmax { tau } if !(tau > 0.0 && tau.is_finite()) => {
                Err(Error::Config(format!("softmax temperature {tau} must be > 0")))
            }
            _ => Ok(()),
        }
    }
}

/// Uniform pick among the indices attaining the maximum of `values`.
fn argmax_random<R: Rng + ?Sized>(values: impl Iterator<Item = f64>, rng: &mut R) -> usize {
    let mut best = Vec::new();
    let mut top = f64::NEG_INFINITY;
    for (k, v) in values.enumerate() {
        if v > top {
            top = v;
            best.clear();
            best.push(k);
        } else if v == top {
            best.push(k);
        }
    }
    match best.len() {
        0 => 0,
        1 => best[0],
        n => best[rng.random_range(0..n)],
    }
}

/// Per-arm pull statistics for one bandit learner.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    policy: Policy,
    counts: Vec<u64>,
    sums: Vec<f64>,
    sq_sums: Vec<f64>,
}

impl PolicyState {
    pub fn new(arms: usize, policy: Policy) -> Result<Self> {
        if arms == 0 {
            return Err(Error::Config("policy needs at least one arm".into()));
        }
        policy.validate()?;
        Ok(PolicyState {
            policy,
            counts: vec![0; arms],
            sums: vec![0.0; arms],
            sq_sums: vec![0.0; arms],
        })
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn arms(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn total_pulls(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Empirical mean reward, 0 for an unpulled arm.
    pub fn mean(&self, arm: usize) -> f64 {
        if self.counts[arm] == 0 {
            0.0
        } else {
            self.sums[arm] / self.counts[arm] as f64
        }
    }

    pub fn update(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        self.sq_sums[arm] += reward * reward;
    }

    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self.policy {
            Policy::EpsilonGreedy { epsilon } => self.eg_select(epsilon, rng),
            Policy::Softmax { tau } => self.softmax_select(tau, rng),
            Policy::Ucb1Tuned => self.ucb1t_select(rng),
        }
    }

    pub fn eg_select<R: Rng + ?Sized>(&self, epsilon: f64, rng: &mut R) -> usize {
        if epsilon > 0.0 && rng.random_bool(epsilon) {
            rng.random_range(0..self.arms())
        } else {
            argmax_random((0..self.arms()).map(|k| self.mean(k)), rng)
        }
    }

    /// Boltzmann probabilities `exp(mean_k / tau) / sum_j exp(mean_j / tau)`.
    pub fn softmax_probs(&self, tau: f64) -> Vec<f64> {
        let top = (0..self.arms()).map(|k| self.mean(k)).fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = (0..self.arms())
            .map(|k| ((self.mean(k) - top) / tau).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    pub fn softmax_select<R: Rng + ?Sized>(&self, tau: f64, rng: &mut R) -> usize {
        let probs = self.softmax_probs(tau);
        let mut u: f64 = rng.random();
        for (k, p) in probs.iter().enumerate() {
            if u < *p {
                return k;
            }
            u -= p;
        }
        probs.len() - 1
    }

    /// UCB1-tuned index `mean + sqrt(ln n / n_k * min(1/4, V_k))`, with
    /// `V_k = sq_mean - mean^2 + sqrt(2 ln n / n_k)`. `None` for an unpulled arm.
    pub fn ucb1t_index(&self, arm: usize) -> Option<f64> {
        let n_k = self.counts[arm];
        if n_k == 0 {
            return None;
        }
        let n_k = n_k as f64;
        let log_n = (self.total_pulls() as f64).ln();
        let mean = self.sums[arm] / n_k;
        let variance = self.sq_sums[arm] / n_k - mean * mean + (2.0 * log_n / n_k).sqrt();
        Some(mean + (log_n / n_k * variance.min(0.25)).sqrt())
    }

    /// Unpulled arms first, in index order; then the largest index.
    pub fn ucb1t_select<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if let Some(arm) = self.counts.iter().position(|&c| c == 0) {
            return arm;
        }
        argmax_random(
            (0..self.arms()).map(|k| self.ucb1t_index(k).expect("every arm pulled")),
            rng,
        )
    }
}

/// Uncoupled tug-of-war learner over any number of channels.
///
/// Each arm keeps `Q_k = N_k - (1 + omega) L_k`; selection takes the highest
/// `Q_k - 1/(K-1) sum_{l != k} Q_l` plus the same synchronized oscillation
/// the Bombe uses. With two arms this is exactly the two-machine TOW rule.
#[derive(Debug, Clone, PartialEq)]
pub struct TowLearner {
    q: Vec<f64>,
    omega: f64,
    amplitude: f64,
    period: usize,
    t: u64,
}

impl TowLearner {
    pub fn new(arms: usize, omega: f64, amplitude: f64, period: usize) -> Result<Self> {
        if arms < 2 {
            return Err(Error::Config("TOW learner needs at least two arms".into()));
        }
        if !(omega >= 0.0 && omega.is_finite()) || !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::Config("omega and amplitude must be finite and >= 0".into()));
        }
        if period < 2 {
            return Err(Error::Config(format!("oscillation period {period} < 2")));
        }
        Ok(TowLearner {
            q: vec![0.0; arms],
            omega,
            amplitude,
            period,
            t: 0,
        })
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    fn osc(&self, k: usize) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let p = self.period as u64;
        let phase = ((self.t % p) + k as u64 % p) % p;
        self.amplitude * (std::f64::consts::TAU * phase as f64 / self.period as f64).sin()
    }

    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total: f64 = self.q.iter().sum();
        let scale = 1.0 / (self.q.len() - 1) as f64;
        argmax_random(
            self.q
                .iter()
                .enumerate()
                .map(|(k, &q)| q - (total - q) * scale + self.osc(k)),
            rng,
        )
    }

    pub fn update(&mut self, arm: usize, rewarded: bool) {
        self.q[arm] += if rewarded { 1.0 } else { -self.omega };
        self.t += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Learner {
    Bandit(PolicyState),
    Tow(TowLearner),
}

impl Learner {
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            Learner::Bandit(p) => p.select(rng),
            Learner::Tow(t) => t.select(rng),
        }
    }

    pub fn observe(&mut self, arm: usize, reward: f64, rewarded: bool) {
        match self {
            Learner::Bandit(p) => p.update(arm, reward),
            Learner::Tow(t) => t.update(arm, rewarded),
        }
    }
}

/// A learner with its own random stream.
#[derive(Debug, Clone)]
pub struct TeamMember {
    pub learner: Learner,
    pub rng: SimRng,
}

impl TeamMember {
    pub fn new(learner: Learner, seed: u64) -> Self {
        TeamMember {
            learner,
            rng: SimRng::seed_from_u64(seed),
        }
    }
}

/// Independent users: each sees only its own channel choice and reward.
#[derive(Debug, Clone)]
pub struct MultiAgentTeam {
    pub members: Vec<TeamMember>,
}

impl MultiAgentTeam {
    pub fn new(members: Vec<TeamMember>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Config("team needs at least one member".into()));
        }
        Ok(MultiAgentTeam { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Every member picks from its own state, the channel resolves the slot
    /// with `env_rng`, and every member learns from its own result.
    pub fn slot<R: Rng + ?Sized>(
        &mut self,
        model: &ChannelModel,
        env_rng: &mut R,
    ) -> Result<(JointAction, SlotOutcome)> {
        let action = JointAction::new(
            self.members
                .iter_mut()
                .map(|m| m.learner.select(&mut m.rng))
                .collect(),
        );
        let outcome = model.step(&action, env_rng)?;
        for (i, member) in self.members.iter_mut().enumerate() {
            member
                .learner
                .observe(action.choices()[i], outcome.rewards[i], outcome.rewarded[i]);
        }
        Ok((action, outcome))
    }
}
