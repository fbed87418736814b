//! Time-slotted Bernoulli channel environment.
//!
//! Each slot, channel `k` is free (not used by a primary user) with
//! probability `P_k`, drawn once per channel. Cognitive users that pick the
//! same channel collide and share whatever that channel yields.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a free channel's unit reward is shared among colliding users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollisionMode {
    /// One collider, drawn uniformly, receives the whole coin.
    #[default]
    CoinLottery,
    /// Each of the `m` colliders receives `1/m`.
    FractionalSplit,
}

impl std::str::FromStr for CollisionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "coin-lottery" | "lottery" => Ok(CollisionMode::CoinLottery),
            "fractional-split" | "fractional" | "split" => Ok(CollisionMode::FractionalSplit),
            other => Err(Error::Config(format!("unknown collision mode {other:?}"))),
        }
    }
}

impl fmt::Display for CollisionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CollisionMode::CoinLottery => "coin-lottery",
            CollisionMode::FractionalSplit => "fractional-split",
        })
    }
}

/// The primary network's channels as seen by cognitive users.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    probs: Vec<f64>,
    collision_mode: CollisionMode,
}

impl ChannelModel {
    pub fn new(probs: Vec<f64>, collision_mode: CollisionMode) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Config("channel model needs at least one channel".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Config(format!("channel probability {p} outside [0, 1]")));
        }
        Ok(ChannelModel {
            probs,
            collision_mode,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn channels(&self) -> usize {
        self.probs.len()
    }

    pub fn collision_mode(&self) -> CollisionMode {
        self.collision_mode
    }

    fn check(&self, action: &JointAction) -> Result<()> {
        if action.is_empty() {
            return Err(Error::Contract("joint action has no users".into()));
        }
        if let Some((user, &k)) = action
            .choices()
            .iter()
            .enumerate()
            .find(|(_, &k)| k >= self.channels())
        {
            return Err(Error::Contract(format!(
                "user {user} chose channel {k}, model has {} channels",
                self.channels()
            )));
        }
        Ok(())
    }

    /// Number of users on each channel.
    fn occupancy(&self, action: &JointAction) -> Vec<usize> {
        let mut counts = vec![0usize; self.channels()];
        for &k in action.choices() {
            counts[k] += 1;
        }
        counts
    }

    /// Plays one slot.
    pub fn step<R: Rng + ?Sized>(&self, action: &JointAction, rng: &mut R) -> Result<SlotOutcome> {
        self.check(action)?;
        let free: Vec<bool> = self.probs.iter().map(|&p| rng.random_bool(p)).collect();
        let users = action.len();
        let mut rewards = vec![0.0; users];

        match self.collision_mode {
            CollisionMode::FractionalSplit => {
                let counts = self.occupancy(action);
                for (i, &k) in action.choices().iter().enumerate() {
                    if free[k] {
                        rewards[i] = 1.0 / counts[k] as f64;
                    }
                }
            }
            CollisionMode::CoinLottery => {
                // Channels are visited in index order so the stream consumption
                // is a function of the action alone.
                let mut on_channel: Vec<Vec<usize>> = vec![Vec::new(); self.channels()];
                for (i, &k) in action.choices().iter().enumerate() {
                    on_channel[k].push(i);
                }
                for (k, users_here) in on_channel.iter().enumerate() {
                    if !free[k] || users_here.is_empty() {
                        continue;
                    }
                    let winner = if users_here.len() == 1 {
                        users_here[0]
                    } else {
                        users_here[rng.random_range(0..users_here.len())]
                    };
                    rewards[winner] = 1.0;
                }
            }
        }

        let rewarded = rewards.iter().map(|&r| r > 0.0).collect();
        Ok(SlotOutcome {
            free,
            rewards,
            rewarded,
        })
    }

    /// Expected per-slot reward of every user: `P_k / m` where `m` users share channel `k`.
    pub fn expected_payoff(&self, action: &JointAction) -> Result<Vec<f64>> {
        self.check(action)?;
        let counts = self.occupancy(action);
        Ok(action
            .choices()
            .iter()
            .map(|&k| self.probs[k] / counts[k] as f64)
            .collect())
    }
}

/// One channel choice per user.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointAction(Vec<usize>);

impl JointAction {
    pub fn new(choices: Vec<usize>) -> Self {
        JointAction(choices)
    }

    pub fn choices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Whether every user is on a distinct channel.
    pub fn is_segregated(&self) -> bool {
        let mut seen = self.0.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    /// Letters for channels (`A`, `B`, ...), e.g. `(D,E,C)`.
    pub fn label(&self) -> String {
        let letters: Vec<String> = self.0.iter().map(|&k| channel_label(k)).collect();
        format!("({})", letters.join(","))
    }
}

impl From<Vec<usize>> for JointAction {
    fn from(choices: Vec<usize>) -> Self {
        JointAction(choices)
    }
}

impl fmt::Display for JointAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// `A`..`Z` for the first 26 channels, `ch<k>` beyond.
pub fn channel_label(k: usize) -> String {
    if k < 26 {
        char::from(b'A' + k as u8).to_string()
    } else {
        format!("ch{k}")
    }
}

/// Result of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    /// Availability of each channel this slot.
    pub free: Vec<bool>,
    /// Reward granted to each user.
    pub rewards: Vec<f64>,
    /// Binary success signal each user observes.
    pub rewarded: Vec<bool>,
}

impl SlotOutcome {
    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}
