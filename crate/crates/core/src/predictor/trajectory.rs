use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub type Point = [f64; 2];

/// Time-ordered target centers in pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    points: Vec<Point>,
    frame_ids: Vec<u64>,
}

impl Trajectory {
    pub fn new(points: Vec<Point>, frame_ids: Vec<u64>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("trajectory needs at least one point"));
        }
        if points.len() != frame_ids.len() {
            return Err(invalid("points and frame ids differ in length"));
        }
        if frame_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("frame ids must be strictly increasing"));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("trajectory coordinates must be finite"));
        }
        Ok(Self { points, frame_ids })
    }

    /// Points on consecutive frames starting at `first_frame`.
    pub fn contiguous(points: Vec<Point>, first_frame: u64) -> Result<Self> {
        let ids = (first_frame..first_frame + points.len() as u64).collect();
        Self::new(points, ids)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn frame_ids(&self) -> &[u64] {
        &self.frame_ids
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Point {
        self.points[self.points.len() - 1]
    }

    pub fn last_frame(&self) -> u64 {
        self.frame_ids[self.frame_ids.len() - 1]
    }

    /// Sub-trajectory `[start, start + len)`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.len() {
            return Err(invalid(format!(
                "window {start}+{len} outside trajectory of length {}",
                self.len()
            )));
        }
        Ok(Self {
            points: self.points[start..start + len].to_vec(),
            frame_ids: self.frame_ids[start..start + len].to_vec(),
        })
    }

    pub fn translated(&self, offset: Point) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| [p[0] + offset[0], p[1] + offset[1]])
                .collect(),
            frame_ids: self.frame_ids.clone(),
        }
    }

    /// Concatenation; `next` must start after this trajectory ends.
    pub fn concat(&self, next: &Trajectory) -> Result<Self> {
        let mut points = self.points.clone();
        points.extend_from_slice(&next.points);
        let mut ids = self.frame_ids.clone();
        ids.extend_from_slice(&next.frame_ids);
        Self::new(points, ids)
    }
}

/// Observed prefix and the future it should be extended with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajSplit {
    pub observed: Trajectory,
    pub future: Trajectory,
}

impl TrajSplit {
    pub fn new(observed: Trajectory, future: Trajectory) -> Result<Self> {
        if observed.last_frame() >= future.frame_ids[0] {
            return Err(invalid("observed frames must precede future frames"));
        }
        Ok(Self { observed, future })
    }

    /// Splits a trajectory window `[start, start + t_obs + n_pred)`.
    pub fn from_window(
        traj: &Trajectory,
        start: usize,
        t_obs: usize,
        n_pred: usize,
    ) -> Result<Self> {
        Self::new(
            traj.window(start, t_obs)?,
            traj.window(start + t_obs, n_pred)?,
        )
    }

    pub fn full(&self) -> Trajectory {
        // Frames are ordered by construction.
        self.observed
            .concat(&self.future)
            .expect("split frames are ordered")
    }
}

pub(crate) fn euclid(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Average displacement error: mean Euclidean distance between matching points.
pub fn ade(predicted: &Trajectory, label: &Trajectory) -> Result<f64> {
    ade_points(predicted.points(), label.points())
}

pub fn ade_points(predicted: &[Point], label: &[Point]) -> Result<f64> {
    if predicted.len() != label.len() || predicted.is_empty() {
        return Err(invalid(format!(
            "ADE needs equal non-empty lengths, got {} and {}",
            predicted.len(),
            label.len()
        )));
    }
    let total: f64 = predicted
        .iter()
        .zip(label)
        .map(|(a, b)| euclid(*a, *b))
        .sum();
    Ok(total / predicted.len() as f64)
}
