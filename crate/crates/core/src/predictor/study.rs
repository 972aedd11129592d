//! Observation-length study: how many past points the predictor should see.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gan::{evaluate_ade, train_gan, GanTrainConfig};
use super::trajectory::{TrajSplit, Trajectory};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub t_obs: usize,
    /// Training windows the model saw.
    pub sample_count: usize,
    /// Mean ADE over held-out windows.
    pub mean_ade: f64,
}

/// Fraction of trajectories (taken from the end of the list) held out for evaluation.
const HOLDOUT_FRACTION: f64 = 0.25;

/// Windows whose last point lands on each end index shared by every length,
/// so all observation lengths are scored on the same futures.
fn windows(
    trajs: &[Trajectory],
    t_obs: usize,
    n_pred: usize,
    longest: usize,
) -> Result<Vec<TrajSplit>> {
    let mut out = Vec::new();
    for t in trajs {
        for end in (longest + n_pred - 1)..t.len() {
            let start = end + 1 - (t_obs + n_pred);
            out.push(TrajSplit::from_window(t, start, t_obs, n_pred)?);
        }
    }
    Ok(out)
}

/// Trains one predictor per observation length and reports held-out ADE.
pub fn observation_length_study(
    dataset: &[Trajectory],
    lengths: &[usize],
    cfg: &GanTrainConfig,
) -> Result<Vec<StudyRow>> {
    if lengths.is_empty() {
        return Err(invalid("no observation lengths given"));
    }
    if dataset.len() < 2 {
        return Err(invalid("study needs at least two trajectories"));
    }
    let longest = *lengths.iter().max().expect("non-empty");
    let needed = longest + cfg.n_pred;
    if let Some(short) = dataset.iter().position(|t| t.len() < needed) {
        return Err(invalid(format!(
            "trajectory {short} has {} points, study needs at least {needed}",
            dataset[short].len()
        )));
    }
    let holdout =
        ((dataset.len() as f64 * HOLDOUT_FRACTION).round() as usize).clamp(1, dataset.len() - 1);
    let (train, test) = dataset.split_at(dataset.len() - holdout);
    let mut rows = Vec::with_capacity(lengths.len());
    for &t_obs in lengths {
        let run_cfg = GanTrainConfig {
            t_obs,
            ..cfg.clone()
        };
        let train_splits = windows(train, t_obs, cfg.n_pred, longest)?;
        let test_splits = windows(test, t_obs, cfg.n_pred, longest)?;
        let trained = train_gan(&train_splits, &run_cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
        let mean_ade = evaluate_ade(&trained.generator, &test_splits, &mut rng)?;
        rows.push(StudyRow {
            t_obs,
            sample_count: train_splits.len(),
            mean_ade,
        });
    }
    Ok(rows)
}
