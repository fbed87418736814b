use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::Policy;
use crate::bombe::BombeConfig;
use crate::env::{ChannelModel, CollisionMode};
use crate::error::{Error, Result};

/// The reference experiment: five channels, three users, 1000 plays, 1000 samples.
pub const REFERENCE_CONFIG_TOML: &str = include_str!("../../configs/reference.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Bombe,
    IndependentTow,
    IndependentEg,
    IndependentSoftmax,
    IndependentUcb1t,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Bombe,
        PolicyKind::IndependentTow,
        PolicyKind::IndependentEg,
        PolicyKind::IndependentSoftmax,
        PolicyKind::IndependentUcb1t,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Bombe => "bombe",
            PolicyKind::IndependentTow => "independent-tow",
            PolicyKind::IndependentEg => "independent-eg",
            PolicyKind::IndependentSoftmax => "independent-softmax",
            PolicyKind::IndependentUcb1t => "independent-ucb1t",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.to_ascii_lowercase().replace('_', "-");
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name() == wanted)
            .ok_or_else(|| {
                let names: Vec<&str> = PolicyKind::ALL.iter().map(|p| p.name()).collect();
                Error::Config(format!("unknown policy {s:?}, expected one of {}", names.join(", ")))
            })
    }
}

/// Everything that determines an experiment's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub probs: Vec<f64>,
    pub users: usize,
    pub policy: PolicyKind,
    pub omega: f64,
    /// Oscillation amplitude for the Bombe and the independent TOW team.
    pub amplitude: f64,
    /// Oscillation period; defaults to the channel count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    pub epsilon: f64,
    pub tau: f64,
    pub horizon: usize,
    pub samples: usize,
    pub seed: u64,
    pub collision_mode: CollisionMode,
    pub output_dir: PathBuf,
    /// L1 radius for assigning a score vector to a reference point.
    pub cluster_radius: f64,
    /// Keep cumulative scores at every step and write timeseries.csv.
    pub timeseries: bool,
    /// Worker threads; 0 uses every core, 1 runs serially. Never affects results.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::reference()
    }
}

impl ExperimentConfig {
    pub fn reference() -> Self {
        toml::from_str(REFERENCE_CONFIG_TOML).expect("bundled reference config parses")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn period(&self) -> usize {
        self.period.unwrap_or(self.probs.len())
    }

    pub fn validate(&self) -> Result<()> {
        if self.probs.len() < 2 {
            return Err(Error::Config("need at least two channels".into()));
        }
        if self.users == 0 {
            return Err(Error::Config("need at least one user".into()));
        }
        if self.horizon == 0 || self.samples == 0 {
            return Err(Error::Config("horizon and samples must be >= 1".into()));
        }
        if !(self.cluster_radius > 0.0) {
            return Err(Error::Config(format!(
                "cluster radius {} must be > 0",
                self.cluster_radius
            )));
        }
        self.model()?;
        match self.policy {
            PolicyKind::Bombe => self.bombe_config().map(|_| ()),
            PolicyKind::IndependentTow => {
                if !(self.omega >= 0.0 && self.omega.is_finite())
                    || !(self.amplitude >= 0.0 && self.amplitude.is_finite())
                    || self.period() < 2
                {
                    return Err(Error::Config(
                        "omega and amplitude must be >= 0 and period >= 2".into(),
                    ));
                }
                Ok(())
            }
            _ => self.bandit_policy().expect("bandit policy kind").validate(),
        }
    }

    pub fn model(&self) -> Result<ChannelModel> {
        ChannelModel::new(self.probs.clone(), self.collision_mode)
    }

    pub fn bombe_config(&self) -> Result<BombeConfig> {
        let config = BombeConfig {
            users: self.users,
            channels: self.probs.len(),
            omega: self.omega,
            amplitude: self.amplitude,
            period: self.period(),
        };
        config.validate()?;
        Ok(config)
    }

    /// Bandit policy for the `independent-*` bandit kinds.
    pub fn bandit_policy(&self) -> Option<Policy> {
        match self.policy {
            PolicyKind::IndependentEg => Some(Policy::EpsilonGreedy {
                epsilon: self.epsilon,
            }),
            PolicyKind::IndependentSoftmax => Some(Policy::Softmax { tau: self.tau }),
            PolicyKind::IndependentUcb1t => Some(Policy::Ucb1Tuned),
            PolicyKind::Bombe | PolicyKind::IndependentTow => None,
        }
    }
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Config(format!("grid {spec:?} is not start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || stop < start || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}
