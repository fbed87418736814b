//! Single-user tug-of-war dynamics over two machines.
//!
//! Each machine keeps the estimate `Q_k = N_k - (1 + omega) L_k`, where `N_k`
//! counts plays and `L_k` counts failures. The learner picks `A` when the
//! displacement `X_A = Q_A - Q_B + delta` is positive and `B` when it is
//! negative. A reward moves the played machine's estimate up by one, a
//! failure moves it down by `omega`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Machine {
    A,
    B,
}

impl Machine {
    pub fn index(self) -> usize {
        match self {
            Machine::A => 0,
            Machine::B => 1,
        }
    }

    pub fn other(self) -> Machine {
        match self {
            Machine::A => Machine::B,
            Machine::B => Machine::A,
        }
    }
}

/// The fluctuation `delta` added to the displacement before the sign test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Fluctuation {
    None,
    Gaussian { sigma: f64 },
    /// `+amplitude` on even steps, `-amplitude` on odd steps.
    Alternating { amplitude: f64 },
}

impl Default for Fluctuation {
    fn default() -> Self {
        Fluctuation::Gaussian { sigma: 1.0 }
    }
}

impl Fluctuation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Fluctuation::None => Ok(()),
            Fluctuation::Gaussian { sigma: v } | Fluctuation::Alternating { amplitude: v } => {
                if v >= 0.0 && v.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!("fluctuation parameter {v} must be finite and >= 0")))
                }
            }
        }
    }

    /// `delta` for step `t`. Only the Gaussian form draws from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, t: u64) -> f64 {
        match *self {
            Fluctuation::None => 0.0,
            Fluctuation::Gaussian { sigma } => {
                if sigma == 0.0 {
                    0.0
                } else {
                    Normal::new(0.0, sigma)
                        .expect("sigma validated finite and positive")
                        .sample(rng)
                }
            }
            Fluctuation::Alternating { amplitude } => {
                if t % 2 == 0 {
                    amplitude
                } else {
                    -amplitude
                }
            }
        }
    }
}

/// Play and failure counters of a two-machine TOW learner.
#[derive(Debug, Clone, PartialEq)]
pub struct TowState {
    plays: [u64; 2],
    failures: [u64; 2],
    omega: f64,
}

impl TowState {
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(Error::Config(format!("omega {omega} must be finite and >= 0")));
        }
        Ok(TowState {
            plays: [0; 2],
            failures: [0; 2],
            omega,
        })
    }

    /// State with explicit counts; requires `failures[k] <= plays[k]`.
    pub fn with_counts(plays: [u64; 2], failures: [u64; 2], omega: f64) -> Result<Self> {
        if failures[0] > plays[0] || failures[1] > plays[1] {
            return Err(Error::Contract(format!(
                "failures {failures:?} exceed plays {plays:?}"
            )));
        }
        let mut state = TowState::new(omega)?;
        state.plays = plays;
        state.failures = failures;
        Ok(state)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn plays(&self, k: Machine) -> u64 {
        self.plays[k.index()]
    }

    pub fn failures(&self, k: Machine) -> u64 {
        self.failures[k.index()]
    }

    /// `Q_k = N_k - (1 + omega) L_k`.
    pub fn q_estimate(&self, k: Machine) -> f64 {
        let i = k.index();
        self.plays[i] as f64 - (1.0 + self.omega) * self.failures[i] as f64
    }

    pub fn update(&mut self, k: Machine, rewarded: bool) {
        let i = k.index();
        self.plays[i] += 1;
        if !rewarded {
            self.failures[i] += 1;
        }
    }

    /// `X_A = Q_A - Q_B + delta`. The paired `X_B` is its negation.
    pub fn displacement(&self, delta: f64) -> f64 {
        self.q_estimate(Machine::A) - self.q_estimate(Machine::B) + delta
    }

    /// Sign of the displacement decides; an exact zero is a fair coin.
    pub fn select<R: Rng + ?Sized>(&self, fluct: &Fluctuation, rng: &mut R, t: u64) -> Machine {
        let x = self.displacement(fluct.sample(rng, t));
        if x > 0.0 {
            Machine::A
        } else if x < 0.0 {
            Machine::B
        } else if rng.random_bool(0.5) {
            Machine::A
        } else {
            Machine::B
        }
    }

    /// Expected total reward if machine `k`'s empirical rate is trusted
    /// directly and the other machine's rate is inferred as `gamma` minus it:
    /// `N_k - L_k + (gamma - 1) N_j + L_j`.
    pub fn q_prime(&self, gamma: f64, k: Machine) -> f64 {
        let (i, j) = (k.index(), k.other().index());
        self.plays[i] as f64 - self.failures[i] as f64
            + (gamma - 1.0) * self.plays[j] as f64
            + self.failures[j] as f64
    }

    /// `q_prime / (2 - gamma)`.
    pub fn q_double_prime(&self, gamma: f64, k: Machine) -> Result<f64> {
        check_gamma(gamma)?;
        Ok(self.q_prime(gamma, k) / (2.0 - gamma))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma < 2.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("gamma {gamma} must be below 2")))
    }
}

/// Weight that makes `Q_A - Q_B` coincide with the difference of the
/// two-sided estimates: `gamma / (2 - gamma)`, where `gamma = P_A + P_B`.
pub fn omega0(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if gamma < 0.0 {
        return Err(Error::Domain(format!("gamma {gamma} must be >= 0")));
    }
    Ok(gamma / (2.0 - gamma))
}

/// `omega0` for `users` players: `gamma` is the sum of the `users`-th and
/// `users + 1`-th largest probabilities.
pub fn omega0_multi(probs: &[f64], users: usize) -> Result<f64> {
    if users == 0 || probs.len() < users + 1 {
        return Err(Error::Domain(format!(
            "need at least users + 1 = {} channels, got {}",
            users + 1,
            probs.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    let mut sorted = probs.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    omega0(sorted[users - 1] + sorted[users])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn state(n: [u64; 2], l: [u64; 2], omega: f64) -> TowState {
        TowState::with_counts(n, l, omega).unwrap()
    }

    #[test]
    fn q_estimate_examples() {
        assert_eq!(state([0, 0], [0, 0], 0.3).q_estimate(Machine::A), 0.0);
        let s = state([10, 0], [4, 0], 0.08);
        assert!((s.q_estimate(Machine::A) - 5.68).abs() < 1e-12);
        assert_eq!(state([5, 0], [5, 0], 1.0).q_estimate(Machine::A), -5.0);
    }

    #[test]
    fn update_moves_only_the_played_machine() {
        let mut s = TowState::new(0.08).unwrap();
        s.update(Machine::A, true);
        assert_eq!(s.q_estimate(Machine::A), 1.0);
        assert_eq!(s.q_estimate(Machine::B), 0.0);

        let mut s = TowState::new(0.08).unwrap();
        s.update(Machine::A, false);
        assert!((s.q_estimate(Machine::A) + 0.08).abs() < 1e-15);
        assert_eq!(s.q_estimate(Machine::B), 0.0);
        assert_eq!((s.plays(Machine::A), s.failures(Machine::A)), (1, 1));
    }

    #[test]
    fn displacement_examples() {
        let fresh = TowState::new(0.5).unwrap();
        assert_eq!(fresh.displacement(0.0), 0.0);
        assert_eq!(fresh.displacement(0.5), 0.5);
        // Q_A = 5.68, Q_B = 2.0
        let s = state([10, 2], [4, 0], 0.08);
        assert!((s.displacement(0.0) - 3.68).abs() < 1e-12);
    }

    #[test]
    fn select_follows_sign() {
        let mut rng = seeded(5);
        let a_ahead = state([3, 1], [0, 0], 0.1);
        let b_ahead = state([1, 3], [0, 0], 0.1);
        for t in 0..20 {
            assert_eq!(a_ahead.select(&Fluctuation::None, &mut rng, t), Machine::A);
            assert_eq!(b_ahead.select(&Fluctuation::None, &mut rng, t), Machine::B);
        }
    }

    #[test]
    fn ties_are_fair_coins() {
        let mut rng = seeded(6);
        let s = state([2, 2], [1, 1], 0.1);
        let draws = 10_000;
        let a = (0..draws)
            .filter(|&t| s.select(&Fluctuation::None, &mut rng, t) == Machine::A)
            .count();
        assert!((a as f64 / draws as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn alternating_fluctuation_flips_a_tie() {
        let mut rng = seeded(0);
        let s = TowState::new(0.1).unwrap();
        let f = Fluctuation::Alternating { amplitude: 0.5 };
        assert_eq!(s.select(&f, &mut rng, 0), Machine::A);
        assert_eq!(s.select(&f, &mut rng, 1), Machine::B);
        assert!(Fluctuation::Gaussian { sigma: -1.0 }.validate().is_err());
    }

    #[test]
    fn omega0_examples() {
        assert_eq!(omega0(0.0).unwrap(), 0.0);
        assert_eq!(omega0(1.0).unwrap(), 1.0);
        let w = omega0(0.15).unwrap();
        assert!((w - 0.15 / 1.85).abs() < 1e-15);
        assert_eq!((w * 100.0).round() / 100.0, 0.08);
        assert!(matches!(omega0(2.0), Err(Error::Domain(_))));
        assert!(matches!(omega0(3.5), Err(Error::Domain(_))));
    }

    #[test]
    fn omega0_multi_examples() {
        let w = omega0_multi(&[0.03, 0.05, 0.1, 0.2, 0.9], 3).unwrap();
        assert!((w - 0.081_081_081_081).abs() < 1e-9);
        assert_eq!(omega0_multi(&[1.0, 0.0, 0.0], 2).unwrap(), 0.0);
        assert_eq!(omega0_multi(&[0.5, 0.5, 0.5], 2).unwrap(), 1.0);
        assert!(matches!(omega0_multi(&[0.5, 0.5], 2), Err(Error::Domain(_))));
    }

    #[test]
    fn q_prime_examples() {
        let s = state([10, 5], [4, 3], 0.0);
        assert!((s.q_prime(0.5, Machine::A) - 6.5).abs() < 1e-12);
        assert!((s.q_double_prime(0.5, Machine::A).unwrap() - 6.5 / 1.5).abs() < 1e-12);
        assert_eq!(TowState::new(0.0).unwrap().q_prime(0.7, Machine::B), 0.0);
        assert_eq!(TowState::new(0.0).unwrap().q_double_prime(0.7, Machine::B).unwrap(), 0.0);
        let s = state([9, 40], [2, 0], 0.0);
        assert_eq!(s.q_prime(1.0, Machine::A), 7.0);
        assert_eq!(s.q_double_prime(0.0, Machine::A).unwrap(), s.q_prime(0.0, Machine::A) / 2.0);
        assert!(s.q_double_prime(2.0, Machine::A).is_err());
    }

    #[test]
    fn counts_must_be_consistent() {
        assert!(TowState::with_counts([1, 0], [2, 0], 0.1).is_err());
        assert!(TowState::new(-0.1).is_err());
    }

    fn counts() -> impl Strategy<Value = ([u64; 2], [u64; 2])> {
        (0u64..5000, 0u64..5000).prop_flat_map(|(na, nb)| {
            (Just([na, nb]), (0..=na, 0..=nb).prop_map(|(la, lb)| [la, lb]))
        })
    }

    proptest! {
        #[test]
        fn omega0_makes_differences_agree((n, l) in counts(), gamma in 0.0f64..1.9) {
            let s = state(n, l, omega0(gamma).unwrap());
            let lhs = s.q_estimate(Machine::A) - s.q_estimate(Machine::B);
            let rhs = s.q_double_prime(gamma, Machine::A).unwrap()
                - s.q_double_prime(gamma, Machine::B).unwrap();
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * scale, "{lhs} vs {rhs}");
        }

        #[test]
        fn displacements_are_antisymmetric((n, l) in counts(), omega in 0.0f64..3.0) {
            let s = state(n, l, omega);
            let x_b = s.q_estimate(Machine::B) - s.q_estimate(Machine::A);
            prop_assert_eq!(s.displacement(0.0), -x_b);
        }

        #[test]
        fn updates_are_monotone((n, l) in counts(), omega in 0.001f64..3.0, a in any::<bool>()) {
            let k = if a { Machine::A } else { Machine::B };
            let s = state(n, l, omega);
            let mut up = s.clone();
            up.update(k, true);
            prop_assert!(up.q_estimate(k) > s.q_estimate(k));
            let mut down = s.clone();
            down.update(k, false);
            prop_assert!(down.q_estimate(k) < s.q_estimate(k));
        }

        #[test]
        fn common_shift_does_not_change_choice((n, l) in counts(), extra in 0u64..1000, seed in any::<u64>()) {
            // Adding the same number of rewarded plays to both machines shifts Q_A and Q_B equally.
            let s = state(n, l, 0.25);
            let shifted = state([n[0] + extra, n[1] + extra], l, 0.25);
            let f = Fluctuation::Gaussian { sigma: 2.0 };
            let mut r1 = seeded(seed);
            let mut r2 = seeded(seed);
            for t in 0..8 {
                prop_assert_eq!(s.select(&f, &mut r1, t), shifted.select(&f, &mut r2, t));
            }
        }
    }
}
