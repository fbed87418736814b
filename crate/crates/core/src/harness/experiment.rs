use rand::RngCore;
use rayon::prelude::*;

use crate::baselines::{Learner, MultiAgentTeam, PolicyState, TeamMember, TowLearner};
use crate::bombe::Bombe;
use crate::env::{ChannelModel, JointAction, SlotOutcome};
use crate::error::{Error, Result};
use crate::rng::{sample_stream, SimRng};

use super::config::{ExperimentConfig, PolicyKind};
use super::summary::{Anchors, RunSummary};

/// Scores of one sample trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub sample_id: u64,
    /// Accumulated reward of each user over the horizon.
    pub scores: Vec<f64>,
    /// `cumulative[i][t]`: user `i`'s score after `t + 1` slots, when enabled.
    pub cumulative: Option<Vec<Vec<f64>>>,
}

impl ScoreRecord {
    pub fn total(&self) -> f64 {
        self.scores.iter().sum()
    }
}

enum Runner {
    Bombe(Bombe),
    Team(MultiAgentTeam),
}

impl Runner {
    fn build(config: &ExperimentConfig, rng: &mut SimRng) -> Result<Self> {
        let channels = config.probs.len();
        if config.policy == PolicyKind::Bombe {
            return Ok(Runner::Bombe(Bombe::new(config.bombe_config()?)?));
        }
        // Member streams are seeded from the sample stream before any slot is played.
        let members = (0..config.users)
            .map(|_| {
                let learner = match config.bandit_policy() {
                    Some(policy) => Learner::Bandit(PolicyState::new(channels, policy)?),
                    None => Learner::Tow(TowLearner::new(
                        channels,
                        config.omega,
                        config.amplitude,
                        config.period(),
                    )?),
                };
                Ok(TeamMember::new(learner, rng.next_u64()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Runner::Team(MultiAgentTeam::new(members)?))
    }

    fn slot(&mut self, model: &ChannelModel, rng: &mut SimRng) -> Result<(JointAction, SlotOutcome)> {
        match self {
            Runner::Bombe(b) => b.slot(model, rng),
            Runner::Team(t) => t.slot(model, rng),
        }
    }
}

/// One trajectory of `horizon` slots on the stream for `sample_id`.
pub fn run_sample(config: &ExperimentConfig, model: &ChannelModel, sample_id: u64) -> Result<ScoreRecord> {
    let mut rng = sample_stream(config.seed, sample_id);
    let mut runner = Runner::build(config, &mut rng)?;
    let users = config.users;
    let mut scores = vec![0.0; users];
    let mut cumulative = config
        .timeseries
        .then(|| vec![Vec::with_capacity(config.horizon); users]);
    for _ in 0..config.horizon {
        let (_, outcome) = runner.slot(model, &mut rng)?;
        for (s, r) in scores.iter_mut().zip(&outcome.rewards) {
            *s += r;
        }
        if let Some(rows) = cumulative.as_mut() {
            for (row, s) in rows.iter_mut().zip(&scores) {
                row.push(*s);
            }
        }
    }
    Ok(ScoreRecord {
        sample_id,
        scores,
        cumulative,
    })
}

/// Runs every sample. Output order is by sample id whatever the thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ScoreRecord>> {
    config.validate()?;
    let model = config.model()?;
    let ids = 0..config.samples as u64;
    log::info!(
        "running {} samples x {} slots, policy {}, seed {}",
        config.samples,
        config.horizon,
        config.policy,
        config.seed
    );
    match config.threads {
        1 => ids.map(|s| run_sample(config, &model, s)).collect(),
        0 => ids
            .into_par_iter()
            .map(|s| run_sample(config, &model, s))
            .collect(),
        n => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| {
                ids.into_par_iter()
                    .map(|s| run_sample(config, &model, s))
                    .collect()
            }),
    }
}

/// Sample-mean cumulative score of each user at every step, as rows
/// `[user_0, .., user_{M-1}, total]`. `None` unless every record carries
/// cumulative scores.
pub fn timeseries(records: &[ScoreRecord]) -> Option<Vec<Vec<f64>>> {
    let first = records.first()?.cumulative.as_ref()?;
    let users = first.len();
    let horizon = first.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; users + 1]; horizon];
    for record in records {
        let rows = record.cumulative.as_ref()?;
        for (i, row) in rows.iter().enumerate() {
            for (t, v) in row.iter().enumerate() {
                sums[t][i] += v;
            }
        }
    }
    let n = records.len() as f64;
    for row in &mut sums {
        let total: f64 = row[..users].iter().sum();
        row[users] = total;
        for v in row.iter_mut() {
            *v /= n;
        }
    }
    Some(sums)
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub omega: f64,
    pub summary: RunSummary,
}

/// Reruns `config` once per `omega` in `grid`.
pub fn sweep_omega(config: &ExperimentConfig, grid: &[f64]) -> Result<Vec<SweepRow>> {
    let anchors = Anchors::for_config(config)?;
    grid.iter()
        .map(|&omega| {
            let mut c = config.clone();
            c.omega = omega;
            c.timeseries = false;
            let records = run_experiment(&c)?;
            let summary = RunSummary::new(&records, anchors.as_ref(), c.cluster_radius)?;
            log::info!("omega {omega}: mean total {:.2}", summary.mean_total);
            Ok(SweepRow { omega, summary })
        })
        .collect()
}
