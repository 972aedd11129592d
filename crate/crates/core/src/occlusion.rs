//! Occlusion judgment from peak geometry and the classification score.
//!
//! Each level contributes the distance from its top peak to the nearest
//! retained interferer. Levels are fused by weight into `dis`, which is then
//! mixed with the positive-class score into the composite index
//! `ε = i·s/score_norm + (1−i)·dis/distance_norm`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::heatmap::{compute_distances, PeakSet};

/// Which quantity decides occlusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Occluded iff the fused peak distance is below `distance_threshold`.
    Distance,
    /// Occluded iff the classification score is below `score_threshold`.
    Score,
    /// Occluded iff the composite index is below `epsilon_threshold`.
    #[default]
    Composite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OcclusionConfig {
    /// Per-level fusion weights (fine, middle, coarse).
    pub level_weights: [f64; 3],
    pub distance_threshold: f64,
    pub score_threshold: f64,
    /// Weight `i` of the score term in the composite index.
    pub mix_weight: f64,
    pub epsilon_threshold: f64,
    pub score_norm: f64,
    pub distance_norm: f64,
    pub criterion: Criterion,
}

impl Default for OcclusionConfig {
    fn default() -> Self {
        Self {
            level_weights: [0.2, 0.5, 0.3],
            distance_threshold: 3.25,
            score_threshold: 0.85,
            mix_weight: 0.8,
            epsilon_threshold: 0.85,
            score_norm: 0.95,
            distance_norm: 5.5,
            criterion: Criterion::Composite,
        }
    }
}

impl OcclusionConfig {
    pub fn validate(&self) -> Result<()> {
        let w = &self.level_weights;
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(invalid("level weights must be finite and non-negative"));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("level weights must sum to 1, got {sum}")));
        }
        if !(self.mix_weight > 0.0 && self.mix_weight < 1.0) {
            return Err(invalid(format!(
                "mix weight must lie in (0,1), got {}",
                self.mix_weight
            )));
        }
        if !(self.score_threshold > 0.0 && self.score_threshold < 1.0) {
            return Err(invalid("score threshold must lie in (0,1)"));
        }
        // ε_t = 0 is accepted: it disables the composite judge (ablation runs).
        let non_negative = [self.distance_threshold, self.epsilon_threshold];
        if non_negative.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(invalid("thresholds must be finite and non-negative"));
        }
        if !(self.score_norm > 0.0 && self.distance_norm > 0.0) {
            return Err(invalid("normalization constants must be positive"));
        }
        Ok(())
    }
}

/// Everything the judge computed for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcclusionVerdict {
    /// Fused nearest-interferer distance; absent when no level has an interferer.
    pub dis: Option<f64>,
    pub score: f64,
    pub epsilon: f64,
    pub occluded: bool,
    pub per_level_min_dist: [Option<f64>; 3],
}

/// Nearest-interferer distance at one level.
pub fn level_distance(peaks: &PeakSet) -> Option<f64> {
    compute_distances(peaks).into_iter().reduce(f64::min)
}

/// Weighted mean over the levels that have a distance, weights renormalized.
pub fn aggregate_distance(levels: [Option<f64>; 3], cfg: &OcclusionConfig) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut any = false;
    for (d, w) in levels.iter().zip(cfg.level_weights) {
        if let Some(d) = d {
            num += w * d;
            den += w;
            any = true;
        }
    }
    if !any {
        return None;
    }
    if den == 0.0 {
        // Only zero-weight levels reported; fall back to an unweighted mean.
        let present: Vec<f64> = levels.iter().flatten().copied().collect();
        return Some(present.iter().sum::<f64>() / present.len() as f64);
    }
    // Dividing by 1 is exact, so the all-present case equals the plain weighted sum.
    Some(num / den)
}

pub fn composite_index(score: f64, dis: f64, cfg: &OcclusionConfig) -> Result<f64> {
    if !dis.is_finite() || dis < 0.0 {
        return Err(invalid(format!("distance must be non-negative, got {dis}")));
    }
    if !score.is_finite() {
        return Err(invalid("score must be finite"));
    }
    let i = cfg.mix_weight;
    Ok(i * (score / cfg.score_norm) + (1.0 - i) * (dis / cfg.distance_norm))
}

pub fn judge(
    peaksets: &[PeakSet; 3],
    score: f64,
    cfg: &OcclusionConfig,
    criterion: Criterion,
) -> Result<OcclusionVerdict> {
    if !(0.0..=1.0).contains(&score) {
        return Err(invalid(format!("score must lie in [0,1], got {score}")));
    }
    let per_level = [
        level_distance(&peaksets[0]),
        level_distance(&peaksets[1]),
        level_distance(&peaksets[2]),
    ];
    let dis = aggregate_distance(per_level, cfg);
    let epsilon = match dis {
        Some(d) => composite_index(score, d, cfg)?,
        // No interferer anywhere: the index degrades to the score term alone.
        None => score / cfg.score_norm,
    };
    let occluded = match criterion {
        Criterion::Distance => dis.is_some_and(|d| d < cfg.distance_threshold),
        Criterion::Score => score < cfg.score_threshold,
        Criterion::Composite => epsilon < cfg.epsilon_threshold,
    };
    Ok(OcclusionVerdict {
        dis,
        score,
        epsilon,
        occluded,
        per_level_min_dist: per_level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heatmap::{merge_neighbors, Peak};

    fn set(cells: &[(usize, usize)]) -> PeakSet {
        let peaks: Vec<Peak> = cells
            .iter()
            .enumerate()
            .map(|(i, &(r, c))| Peak::new(r, c, 1.0 - i as f64 * 0.01))
            .collect();
        merge_neighbors(&peaks).unwrap()
    }

    #[test]
    fn level_distance_is_nearest_interferer() {
        assert_eq!(level_distance(&set(&[(0, 0), (3, 4), (6, 8)])), Some(5.0));
        assert_eq!(level_distance(&set(&[(5, 5)])), None);
        assert_eq!(level_distance(&set(&[(0, 0), (0, 3), (4, 0)])), Some(3.0));
    }

    #[test]
    fn aggregate_renormalizes() {
        let cfg = OcclusionConfig::default();
        assert!((aggregate_distance([Some(4.0); 3], &cfg).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(aggregate_distance([Some(2.0), None, None], &cfg), Some(2.0));
        let d = aggregate_distance([Some(3.0), Some(5.0), Some(4.0)], &cfg).unwrap();
        assert!((d - 4.3).abs() < 1e-12);
        assert_eq!(aggregate_distance([None; 3], &cfg), None);
    }

    #[test]
    fn composite_index_values() {
        let cfg = OcclusionConfig::default();
        assert!((composite_index(0.95, 5.5, &cfg).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(composite_index(0.0, 0.0, &cfg).unwrap(), 0.0);
        let e = composite_index(0.85, 3.25, &cfg).unwrap();
        let expected = 0.8 * (0.85 / 0.95) + 0.2 * (3.25 / 5.5);
        assert!((e - expected).abs() < 1e-12);
        assert!((e - 0.8340).abs() < 1e-4);
        assert!(composite_index(0.5, -1.0, &cfg).is_err());
    }

    #[test]
    fn judge_criteria() {
        let cfg = OcclusionConfig::default();
        // Dis = 5.5 on every level gives ε = 1.
        let far = set(&[(0, 0), (0, 5)]);
        let sets = [far.clone(), far.clone(), far];
        let v = judge(
            &sets,
            0.95,
            &OcclusionConfig {
                distance_norm: 5.0,
                ..cfg.clone()
            },
            Criterion::Composite,
        )
        .unwrap();
        assert!((v.epsilon - 1.0).abs() < 1e-12);
        assert!(!v.occluded);

        let lone = set(&[(8, 8)]);
        let sets = [lone.clone(), lone.clone(), lone];
        assert!(judge(&sets, 0.5, &cfg, Criterion::Score).unwrap().occluded);
        let v = judge(
            &sets,
            0.5,
            &OcclusionConfig {
                distance_threshold: 3.25,
                ..cfg.clone()
            },
            Criterion::Distance,
        )
        .unwrap();
        assert!(!v.occluded);
        assert_eq!(v.dis, None);
        // score-only fallback
        assert!((v.epsilon - 0.5 / 0.95).abs() < 1e-15);
        assert!(judge(&sets, 1.5, &cfg, Criterion::Score).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(OcclusionConfig::default().validate().is_ok());
        let bad = OcclusionConfig {
            level_weights: [0.5, 0.5, 0.5],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = OcclusionConfig {
            mix_weight: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
