//! Tug-of-war (TOW) decision dynamics and the coupled multi-user TOW Bombe,
//! applied to competitive channel access in a time-slotted cognitive radio
//! network.
//!
//! * [`env`] is the Bernoulli channel model with collision sharing.
//! * [`tow`] is the single-user two-machine TOW learner and the algebra
//!   behind its nearly optimal weight `omega0`.
//! * [`bombe`] couples `M` users over `N` channels.
//! * [`baselines`] holds uncoupled reference policies.
//! * [`oracle`] enumerates the full payoff tensor to find social maxima and
//!   pure Nash equilibria by brute force.
//! * [`harness`] runs seeded Monte Carlo experiments and writes CSV.

pub mod baselines;
pub mod bombe;
pub mod cli;
pub mod env;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod rng;
pub mod tow;

pub use bombe::{Bombe, BombeConfig, BombeState, DeltaMatrix};
pub use env::{ChannelModel, CollisionMode, JointAction, SlotOutcome};
pub use error::{Error, Result};
pub use oracle::{GameSolution, PayoffTensor};
pub use tow::{Fluctuation, Machine, TowState};
