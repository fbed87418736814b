use std::collections::BTreeMap;

use crate::env::JointAction;
use crate::error::{Error, Result};
use crate::oracle;

use super::config::ExperimentConfig;
use super::experiment::ScoreRecord;

/// A labelled reference score vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorePoint {
    pub label: String,
    pub score: Vec<f64>,
}

impl ScorePoint {
    /// Expected score of `action` over `horizon` slots.
    pub fn from_action(action: &JointAction, per_slot: &[f64], horizon: usize) -> Self {
        let label = action
            .choices()
            .iter()
            .map(|&k| crate::env::channel_label(k))
            .collect::<Vec<_>>()
            .join("-");
        ScorePoint {
            label,
            score: per_slot.iter().map(|p| p * horizon as f64).collect(),
        }
    }
}

/// Social-maximum and Nash-equilibrium score vectors for one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchors {
    pub social_maxima: Vec<ScorePoint>,
    pub nash: Vec<ScorePoint>,
}

impl Anchors {
    /// Brute-force anchors for the config's game; `None` when the tensor is
    /// over the enumeration cap.
    pub fn for_config(config: &ExperimentConfig) -> Result<Option<Self>> {
        let model = config.model()?;
        let tensor = match oracle::build_tensor(&model, config.users) {
            Ok(t) => t,
            Err(Error::Resource { needed, .. }) => {
                log::warn!("skipping cluster classification: {needed} joint actions");
                return Ok(None);
            }
            Err(e) => return Err(e),
        };
        let solution = oracle::solve(&tensor);
        let point = |a: &JointAction| {
            ScorePoint::from_action(a, tensor.get(a).expect("action from tensor"), config.horizon)
        };
        Ok(Some(Anchors {
            social_maxima: solution.social_maxima.iter().map(point).collect(),
            nash: solution.nash_equilibria.iter().map(point).collect(),
        }))
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn nearest<'a>(score: &[f64], points: &'a [ScorePoint]) -> Option<(f64, &'a ScorePoint)> {
    points
        .iter()
        .map(|p| (l1(score, &p.score), p))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

/// Per-sample cluster assignment counts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Classification {
    /// Count per social-maximum label, including empty clusters.
    pub cluster_counts: BTreeMap<String, usize>,
    pub ne_count: usize,
    pub unclassified_count: usize,
}

impl Classification {
    pub fn sm_count(&self) -> usize {
        self.cluster_counts.values().sum()
    }
}

/// Assigns each sample to the nearest reference point within L1 `radius`.
/// A sample near both a social maximum and an equilibrium goes to the closer.
pub fn classify_samples(
    records: &[ScoreRecord],
    sm_points: &[ScorePoint],
    ne_points: &[ScorePoint],
    radius: f64,
) -> Result<Classification> {
    if sm_points.is_empty() {
        return Err(Error::Config("no social-maximum points to classify against".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::Config(format!("radius {radius} must be > 0")));
    }
    let mut out = Classification {
        cluster_counts: sm_points.iter().map(|p| (p.label.clone(), 0)).collect(),
        ..Classification::default()
    };
    for record in records {
        let sm = nearest(&record.scores, sm_points).filter(|(d, _)| *d <= radius);
        let ne = nearest(&record.scores, ne_points).filter(|(d, _)| *d <= radius);
        match (sm, ne) {
            (Some((ds, _)), Some((dn, _))) if dn < ds => out.ne_count += 1,
            (Some((_, p)), _) => *out.cluster_counts.get_mut(&p.label).expect("seeded") += 1,
            (None, Some(_)) => out.ne_count += 1,
            (None, None) => out.unclassified_count += 1,
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub samples: usize,
    pub mean_per_user: Vec<f64>,
    pub mean_total: f64,
    /// Empty counts with every sample unclassified when no anchors were available.
    pub classification: Classification,
}

impl RunSummary {
    pub fn new(records: &[ScoreRecord], anchors: Option<&Anchors>, radius: f64) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::Contract("cannot summarize zero records".into()))?;
        let users = first.scores.len();
        if records.iter().any(|r| r.scores.len() != users) {
            return Err(Error::Contract("records disagree on user count".into()));
        }
        let n = records.len() as f64;
        let mut mean_per_user = vec![0.0; users];
        for r in records {
            for (m, s) in mean_per_user.iter_mut().zip(&r.scores) {
                *m += s;
            }
        }
        mean_per_user.iter_mut().for_each(|m| *m /= n);
        let mean_total = records.iter().map(ScoreRecord::total).sum::<f64>() / n;
        let classification = match anchors {
            Some(a) => classify_samples(records, &a.social_maxima, &a.nash, radius)?,
            None => Classification {
                unclassified_count: records.len(),
                ..Classification::default()
            },
        };
        Ok(RunSummary {
            samples: records.len(),
            mean_per_user,
            mean_total,
            classification,
        })
    }

    pub fn sm_fraction(&self) -> f64 {
        self.classification.sm_count() as f64 / self.samples as f64
    }

    pub fn ne_fraction(&self) -> f64 {
        self.classification.ne_count as f64 / self.samples as f64
    }
}
