//! Brute-force game analysis over all `N^M` joint actions.
//!
//! This is the exponential enumeration the Bombe never performs; it exists
//! to check the Bombe's outcome against the true social maxima and pure Nash
//! equilibria of the channel game.

use crate::env::{ChannelModel, JointAction};
use crate::error::{Error, Result};

/// Default cap on tensor entries (about 16.7 million).
pub const DEFAULT_ENTRY_CAP: u128 = 1 << 24;

/// Payoff totals closer than this count as equal. Sums of the same
/// probabilities taken in different orders can differ in the last ulp.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Expected per-user payoff for every joint action.
///
/// Actions are stored in mixed-radix order with user 0 as the most
/// significant digit.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffTensor {
    channels: usize,
    users: usize,
    payoffs: Vec<Vec<f64>>,
}

impl PayoffTensor {
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn len(&self) -> usize {
        self.payoffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payoffs.is_empty()
    }

    pub fn action_at(&self, index: usize) -> JointAction {
        let mut choices = vec![0; self.users];
        let mut rest = index;
        for slot in choices.iter_mut().rev() {
            *slot = rest % self.channels;
            rest /= self.channels;
        }
        JointAction::new(choices)
    }

    pub fn index_of(&self, action: &JointAction) -> Option<usize> {
        if action.len() != self.users || action.choices().iter().any(|&k| k >= self.channels) {
            return None;
        }
        Some(action.choices().iter().fold(0, |acc, &k| acc * self.channels + k))
    }

    pub fn get(&self, action: &JointAction) -> Option<&[f64]> {
        self.index_of(action).map(|i| self.payoffs[i].as_slice())
    }

    /// `(action, payoffs)` pairs in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (JointAction, &[f64])> + '_ {
        self.payoffs
            .iter()
            .enumerate()
            .map(|(i, p)| (self.action_at(i), p.as_slice()))
    }
}

/// Social maxima and pure Nash equilibria of one game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSolution {
    pub social_maxima: Vec<JointAction>,
    pub sm_value: f64,
    pub nash_equilibria: Vec<JointAction>,
}

pub fn build_tensor(model: &ChannelModel, users: usize) -> Result<PayoffTensor> {
    build_tensor_capped(model, users, DEFAULT_ENTRY_CAP)
}

/// Enumerates every joint action, refusing if `N^M` exceeds `cap`.
pub fn build_tensor_capped(model: &ChannelModel, users: usize, cap: u128) -> Result<PayoffTensor> {
    if users == 0 {
        return Err(Error::Contract("payoff tensor needs at least one user".into()));
    }
    let channels = model.channels();
    let needed = (channels as u128)
        .checked_pow(users as u32)
        .unwrap_or(u128::MAX);
    if needed > cap {
        return Err(Error::Resource { needed, cap });
    }
    let mut tensor = PayoffTensor {
        channels,
        users,
        payoffs: Vec::with_capacity(needed as usize),
    };
    for index in 0..needed as usize {
        let action = tensor.action_at(index);
        tensor.payoffs.push(model.expected_payoff(&action)?);
    }
    Ok(tensor)
}

/// All actions with the largest total payoff, and that total.
pub fn social_maxima(tensor: &PayoffTensor) -> (Vec<JointAction>, f64) {
    let totals: Vec<f64> = tensor.payoffs.iter().map(|p| p.iter().sum()).collect();
    let best = totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let maxima = totals
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= best - TIE_TOLERANCE)
        .map(|(i, _)| tensor.action_at(i))
        .collect();
    (maxima, best)
}

/// Pure-strategy equilibria: no user strictly gains by switching alone.
pub fn nash_equilibria(tensor: &PayoffTensor) -> Vec<JointAction> {
    let stride = |user: usize| tensor.channels.pow((tensor.users - 1 - user) as u32);
    (0..tensor.len())
        .filter(|&index| {
            let action = tensor.action_at(index);
            action.choices().iter().enumerate().all(|(user, &current)| {
                let own = tensor.payoffs[index][user];
                let base = index - current * stride(user);
                (0..tensor.channels).all(|alt| {
                    alt == current
                        || tensor.payoffs[base + alt * stride(user)][user] <= own + TIE_TOLERANCE
                })
            })
        })
        .map(|index| tensor.action_at(index))
        .collect()
}

pub fn solve(tensor: &PayoffTensor) -> GameSolution {
    let (social_maxima, sm_value) = social_maxima(tensor);
    GameSolution {
        social_maxima,
        sm_value,
        nash_equilibria: nash_equilibria(tensor),
    }
}
