//! The TOW Bombe: `M` tug-of-war learners over `N` channels, coupled so that
//! one user's gain on a channel is another user's loss there.
//!
//! Per slot, with `dq[i][k]` equal to `+1` (reward), `-omega` (failure) or `0`
//! (channel not played by user `i`):
//!
//! ```text
//! q[i][k] += dq[i][k] - 1/(M-1) * sum_{j != i} dq[j][k]
//! x[i][k]  = q[i][k]  - 1/(N-1) * sum_{l != k} q[i][l]
//! ```
//!
//! Each user then plays `argmax_k x[i][k] + osc(t, k)`. The first rule keeps
//! every column sum of `q` fixed, the second makes every row of `x` sum to
//! zero. The oscillation only enters the selection and is never stored.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{ChannelModel, JointAction, SlotOutcome};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BombeConfig {
    pub users: usize,
    pub channels: usize,
    pub omega: f64,
    /// Oscillation amplitude.
    pub amplitude: f64,
    /// Oscillation period in slots; usually equal to `channels`.
    pub period: usize,
}

impl BombeConfig {
    /// Config with `period = channels`.
    pub fn new(users: usize, channels: usize, omega: f64, amplitude: f64) -> Result<Self> {
        let config = BombeConfig {
            users,
            channels,
            omega,
            amplitude,
            period: channels,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.users < 2 {
            return Err(Error::Config(format!("bombe needs >= 2 users, got {}", self.users)));
        }
        if self.channels < 2 {
            return Err(Error::Config(format!(
                "bombe needs >= 2 channels, got {}",
                self.channels
            )));
        }
        if self.period < 2 {
            return Err(Error::Config(format!("oscillation period {} < 2", self.period)));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::Config(format!("omega {} must be finite and >= 0", self.omega)));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Config(format!(
                "amplitude {} must be finite and >= 0",
                self.amplitude
            )));
        }
        Ok(())
    }

    pub fn init(&self) -> Result<BombeState> {
        self.validate()?;
        Ok(BombeState {
            users: self.users,
            channels: self.channels,
            q: vec![0.0; self.users * self.channels],
            t: 0,
        })
    }

    /// `A sin(2 pi t / period + 2 pi k / period)`, identical for every user.
    pub fn osc(&self, t: u64, k: usize) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let period = self.period as u64;
        // Reduce the phase index first so large t keeps full precision.
        let phase = ((t % period) + k as u64 % period) % period;
        self.amplitude * (TAU * phase as f64 / self.period as f64).sin()
    }

    fn check_state(&self, state: &BombeState) -> Result<()> {
        if state.users != self.users || state.channels != self.channels {
            return Err(Error::Contract(format!(
                "state is {}x{}, config is {}x{}",
                state.users, state.channels, self.users, self.channels
            )));
        }
        Ok(())
    }

    /// Interface heights `x[i][k]`, one row per user.
    pub fn heights(&self, state: &BombeState) -> Result<Vec<Vec<f64>>> {
        self.check_state(state)?;
        Ok((0..self.users).map(|i| self.row_heights(state.row(i))).collect())
    }

    fn row_heights(&self, row: &[f64]) -> Vec<f64> {
        let total: f64 = row.iter().sum();
        let scale = 1.0 / (self.channels - 1) as f64;
        row.iter().map(|&q| q - (total - q) * scale).collect()
    }

    /// Each user's highest channel after adding the oscillation for the
    /// current step; exact ties go to a uniform draw.
    pub fn select_all<R: Rng + ?Sized>(&self, state: &BombeState, rng: &mut R) -> Result<JointAction> {
        self.check_state(state)?;
        let osc: Vec<f64> = (0..self.channels).map(|k| self.osc(state.t, k)).collect();
        let mut best = Vec::with_capacity(self.channels);
        let choices = (0..self.users)
            .map(|i| {
                let x = self.row_heights(state.row(i));
                let mut top = f64::NEG_INFINITY;
                best.clear();
                for (k, v) in x.iter().zip(&osc).map(|(x, o)| x + o).enumerate() {
                    if v > top {
                        top = v;
                        best.clear();
                        best.push(k);
                    } else if v == top {
                        best.push(k);
                    }
                }
                if best.len() == 1 {
                    best[0]
                } else {
                    best[rng.random_range(0..best.len())]
                }
            })
            .collect();
        Ok(JointAction::new(choices))
    }

    /// Applies one slot's results and advances `t`.
    pub fn apply_results(
        &self,
        state: &mut BombeState,
        action: &JointAction,
        rewarded: &[bool],
    ) -> Result<()> {
        self.check_state(state)?;
        let dq = DeltaMatrix::from_results(self, action, rewarded)?;
        self.apply_delta(state, &dq)
    }

    /// Coupled update for an arbitrary delta matrix.
    pub fn apply_delta(&self, state: &mut BombeState, dq: &DeltaMatrix) -> Result<()> {
        self.check_state(state)?;
        if dq.users != self.users || dq.channels != self.channels {
            return Err(Error::Contract("delta matrix dimensions do not match config".into()));
        }
        let reaction = 1.0 / (self.users - 1) as f64;
        for k in 0..self.channels {
            let column: f64 = (0..self.users).map(|i| dq.get(i, k)).sum();
            if column == 0.0 && (0..self.users).all(|i| dq.get(i, k) == 0.0) {
                continue;
            }
            for i in 0..self.users {
                let own = dq.get(i, k);
                state.q[i * self.channels + k] += own - (column - own) * reaction;
            }
        }
        state.t += 1;
        Ok(())
    }

    /// Select, play the slot in `model`, learn from it.
    pub fn run_slot<R: Rng + ?Sized>(
        &self,
        state: &mut BombeState,
        model: &ChannelModel,
        rng: &mut R,
    ) -> Result<(JointAction, SlotOutcome)> {
        if model.channels() != self.channels {
            return Err(Error::Contract(format!(
                "model has {} channels, bombe has {}",
                model.channels(),
                self.channels
            )));
        }
        let action = self.select_all(state, rng)?;
        let outcome = model.step(&action, rng)?;
        self.apply_results(state, &action, &outcome.rewarded)?;
        Ok((action, outcome))
    }
}

/// Estimate matrix `q` (row-major, users by channels) and the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct BombeState {
    users: usize,
    channels: usize,
    q: Vec<f64>,
    t: u64,
}

impl BombeState {
    /// State from explicit rows; all rows must have the same length.
    pub fn from_rows(rows: &[Vec<f64>], t: u64) -> Result<Self> {
        let channels = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != channels) {
            return Err(Error::Contract("ragged estimate matrix".into()));
        }
        Ok(BombeState {
            users: rows.len(),
            channels,
            q: rows.concat(),
            t,
        })
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.q[i * self.channels..(i + 1) * self.channels]
    }

    pub fn q(&self, i: usize, k: usize) -> f64 {
        self.q[i * self.channels + k]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.q.chunks(self.channels).map(<[f64]>::to_vec).collect()
    }

    /// `sum_i q[i][k]` for every channel.
    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.channels)
            .map(|k| (0..self.users).map(|i| self.q(i, k)).sum())
            .collect()
    }
}

/// Per-slot increments: `+1` or `-omega` on each user's played channel, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMatrix {
    users: usize,
    channels: usize,
    dq: Vec<f64>,
}

impl DeltaMatrix {
    pub fn from_results(config: &BombeConfig, action: &JointAction, rewarded: &[bool]) -> Result<Self> {
        if action.len() != config.users || rewarded.len() != config.users {
            return Err(Error::Contract(format!(
                "expected {} users, got action of {} and {} results",
                config.users,
                action.len(),
                rewarded.len()
            )));
        }
        let mut dq = vec![0.0; config.users * config.channels];
        for (i, (&k, &ok)) in action.choices().iter().zip(rewarded).enumerate() {
            if k >= config.channels {
                return Err(Error::Contract(format!("user {i} chose channel {k} out of range")));
            }
            dq[i * config.channels + k] = if ok { 1.0 } else { -config.omega };
        }
        Ok(DeltaMatrix {
            users: config.users,
            channels: config.channels,
            dq,
        })
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.dq[i * self.channels + k]
    }
}

/// A config together with the state it drives.
#[derive(Debug, Clone)]
pub struct Bombe {
    pub config: BombeConfig,
    pub state: BombeState,
}

impl Bombe {
    pub fn new(config: BombeConfig) -> Result<Self> {
        let state = config.init()?;
        Ok(Bombe { config, state })
    }

    pub fn heights(&self) -> Vec<Vec<f64>> {
        self.config
            .heights(&self.state)
            .expect("state built from this config")
    }

    pub fn slot<R: Rng + ?Sized>(
        &mut self,
        model: &ChannelModel,
        rng: &mut R,
    ) -> Result<(JointAction, SlotOutcome)> {
        self.config.run_slot(&mut self.state, model, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::CollisionMode;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;

    fn config(users: usize, channels: usize, omega: f64, amplitude: f64) -> BombeConfig {
        BombeConfig::new(users, channels, omega, amplitude).unwrap()
    }

    #[test]
    fn init_is_zero() {
        let c = config(3, 5, 0.08, 1.0);
        let s = c.init().unwrap();
        assert_eq!(s.t(), 0);
        assert_eq!(s.rows(), vec![vec![0.0; 5]; 3]);
        assert_eq!(c.heights(&s).unwrap(), vec![vec![0.0; 5]; 3]);
        assert_eq!(s.column_sums(), vec![0.0; 5]);
    }

    #[test]
    fn rejects_degenerate_sizes() {
        assert!(matches!(BombeConfig::new(1, 5, 0.1, 0.0), Err(Error::Config(_))));
        assert!(matches!(BombeConfig::new(3, 1, 0.1, 0.0), Err(Error::Config(_))));
        assert!(BombeConfig::new(3, 5, -0.1, 0.0).is_err());
        assert!(BombeConfig::new(3, 5, 0.1, -1.0).is_err());
    }

    #[test]
    fn osc_examples() {
        let c = config(3, 5, 0.08, 2.0);
        assert_eq!(c.osc(0, 0), 0.0);
        for t in 0..50 {
            let s: f64 = (0..5).map(|k| c.osc(t, k)).sum();
            assert!(s.abs() < 1e-12);
        }
        let silent = config(3, 5, 0.08, 0.0);
        assert!((0..20).all(|t| (0..5).all(|k| silent.osc(t, k) == 0.0)));
        // One-based indexing: k = 1..5 with phase 2 pi (k - 1) / 5.
        for t in 0..10u64 {
            for k in 0..5usize {
                let expected = 2.0 * (TAU * t as f64 / 5.0 + TAU * k as f64 / 5.0).sin();
                assert!((c.osc(t, k) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn heights_of_single_spike() {
        let c = config(2, 5, 0.1, 0.0);
        let s = BombeState::from_rows(&[vec![1.0, 0.0, 0.0, 0.0, 0.0], vec![0.0; 5]], 0).unwrap();
        let x = c.heights(&s).unwrap();
        assert_eq!(x[0], vec![1.0, -0.25, -0.25, -0.25, -0.25]);
        assert_eq!(x[1], vec![0.0; 5]);
    }

    #[test]
    fn dominant_estimate_wins() {
        let c = config(2, 5, 0.1, 0.0);
        let s = BombeState::from_rows(&[vec![0.0, 0.0, 0.0, 0.0, 10.0], vec![0.0, 3.0, 0.0, 0.0, 0.0]], 0)
            .unwrap();
        let mut rng = seeded(1);
        assert_eq!(c.select_all(&s, &mut rng).unwrap().choices(), &[4, 1]);
    }

    #[test]
    fn oscillation_breaks_zero_state_ties() {
        let c = config(3, 5, 0.1, 0.5);
        let s = c.init().unwrap();
        let mut rng = seeded(2);
        // osc(0, k) = A sin(2 pi k / 5) peaks at k = 1
        let peak = (0..5)
            .max_by(|&a, &b| c.osc(0, a).total_cmp(&c.osc(0, b)))
            .unwrap();
        assert_eq!(peak, 1);
        assert_eq!(c.select_all(&s, &mut rng).unwrap().choices(), &[1, 1, 1]);
    }

    #[test]
    fn zero_state_without_oscillation_is_uniform() {
        let c = config(2, 5, 0.1, 0.0);
        let s = c.init().unwrap();
        let mut rng = seeded(3);
        let draws = 10_000;
        let mut freq = [0usize; 5];
        for _ in 0..draws {
            freq[c.select_all(&s, &mut rng).unwrap().choices()[0]] += 1;
        }
        for f in freq {
            assert!((f as f64 / draws as f64 - 0.2).abs() < 0.02, "{freq:?}");
        }
    }

    #[test]
    fn reward_pushes_others_down_on_that_channel() {
        let c = config(3, 5, 0.08, 0.0);
        let mut s = c.init().unwrap();
        // user 0 rewarded on channel 2; users 1 and 2 busy elsewhere and failing
        c.apply_results(&mut s, &JointAction::new(vec![2, 0, 1]), &[true, false, false])
            .unwrap();
        assert_eq!(s.q(0, 2), 1.0);
        assert_eq!(s.q(1, 2), -0.5);
        assert_eq!(s.q(2, 2), -0.5);
        assert_eq!(s.column_sums()[2], 0.0);
        assert_eq!(s.t(), 1);
    }

    #[test]
    fn failure_lifts_the_other_user() {
        let c = config(2, 3, 0.08, 0.0);
        let mut s = c.init().unwrap();
        let dq = DeltaMatrix {
            users: 2,
            channels: 3,
            dq: vec![0.0, -0.08, 0.0, 0.0, 0.0, 0.0],
        };
        c.apply_delta(&mut s, &dq).unwrap();
        assert!((s.q(0, 1) + 0.08).abs() < 1e-15);
        assert!((s.q(1, 1) - 0.08).abs() < 1e-15);
    }

    #[test]
    fn zero_delta_only_advances_time() {
        let c = config(3, 4, 0.08, 0.0);
        let mut s = BombeState::from_rows(&vec![vec![0.5, -1.0, 2.0, 0.0]; 3], 7).unwrap();
        let before = s.clone();
        let dq = DeltaMatrix {
            users: 3,
            channels: 4,
            dq: vec![0.0; 12],
        };
        c.apply_delta(&mut s, &dq).unwrap();
        assert_eq!(s.rows(), before.rows());
        assert_eq!(s.t(), 8);
    }

    #[test]
    fn symmetric_collision_failure_cancels() {
        let c = config(3, 5, 0.08, 0.0);
        let mut s = c.init().unwrap();
        c.apply_results(&mut s, &JointAction::new(vec![4, 4, 4]), &[false; 3]).unwrap();
        assert!(s.rows().iter().flatten().all(|q| q.abs() < 1e-15));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let c = config(3, 5, 0.08, 0.0);
        let mut s = c.init().unwrap();
        assert!(matches!(
            c.apply_results(&mut s, &JointAction::new(vec![0, 1]), &[true, true]),
            Err(Error::Contract(_))
        ));
        assert!(c.apply_results(&mut s, &JointAction::new(vec![0, 1, 2]), &[true]).is_err());
        let other = config(2, 5, 0.08, 0.0).init().unwrap();
        assert!(c.heights(&other).is_err());
        let model = ChannelModel::new(vec![0.5; 4], CollisionMode::CoinLottery).unwrap();
        assert!(c.run_slot(&mut s, &model, &mut seeded(0)).is_err());
    }

    #[test]
    fn run_slot_advances_time() {
        let mut b = Bombe::new(config(3, 5, 0.08, 0.5)).unwrap();
        let model = ChannelModel::new(vec![0.03, 0.05, 0.1, 0.2, 0.9], CollisionMode::CoinLottery).unwrap();
        b.slot(&model, &mut seeded(4)).unwrap();
        assert_eq!(b.state.t(), 1);
    }

    #[test]
    fn slot_reward_never_exceeds_free_occupied_channels() {
        let mut b = Bombe::new(config(3, 5, 0.08, 0.5)).unwrap();
        let model = ChannelModel::new(vec![0.0, 0.0, 0.0, 0.0, 1.0], CollisionMode::CoinLottery).unwrap();
        let mut rng = seeded(5);
        for _ in 0..1000 {
            let (action, out) = b.slot(&model, &mut rng).unwrap();
            let mut occupied: Vec<usize> = action.choices().iter().copied().filter(|&k| out.free[k]).collect();
            occupied.sort_unstable();
            occupied.dedup();
            assert!(out.total_reward() <= occupied.len() as f64);
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let model = ChannelModel::new(vec![0.03, 0.05, 0.1, 0.2, 0.9], CollisionMode::CoinLottery).unwrap();
        let run = |seed| {
            let mut b = Bombe::new(config(3, 5, 0.08, 0.5)).unwrap();
            let mut rng = seeded(seed);
            let actions: Vec<JointAction> = (0..500).map(|_| b.slot(&model, &mut rng).unwrap().0).collect();
            (actions, b.state)
        };
        assert_eq!(run(9), run(9));
    }

    proptest! {
        #[test]
        fn both_conservation_laws_hold(
            users in 2usize..5,
            channels in 2usize..7,
            omega in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let c = config(users, channels, omega, 0.3);
            let mut s = c.init().unwrap();
            let mut rng = seeded(seed);
            for _ in 0..300 {
                let action = c.select_all(&s, &mut rng).unwrap();
                let rewarded: Vec<bool> = (0..users).map(|_| rng.random_bool(0.5)).collect();
                c.apply_results(&mut s, &action, &rewarded).unwrap();
            }
            for sum in s.column_sums() {
                prop_assert!(sum.abs() < 1e-9);
            }
            for row in c.heights(&s).unwrap() {
                prop_assert!(row.iter().sum::<f64>().abs() < 1e-9);
            }
        }

        #[test]
        fn shifting_a_row_keeps_its_heights(
            row in prop::collection::vec(-50.0f64..50.0, 5),
            shift in -100.0f64..100.0,
        ) {
            let c = config(2, 5, 0.1, 0.0);
            let a = BombeState::from_rows(&[row.clone(), vec![0.0; 5]], 0).unwrap();
            let b = BombeState::from_rows(&[row.iter().map(|q| q + shift).collect(), vec![0.0; 5]], 0).unwrap();
            let (xa, xb) = (c.heights(&a).unwrap(), c.heights(&b).unwrap());
            for (u, v) in xa[0].iter().zip(&xb[0]) {
                prop_assert!((u - v).abs() < 1e-9);
            }
        }
    }
}
