use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::predictor::{Trajectory, TrajectoryPredictor};

/// Linear extrapolation from the last two observed points.
pub fn baseline_predictor(observed: &Trajectory, n_pred: usize) -> Result<Trajectory> {
    if observed.len() < 2 {
        return Err(invalid("constant-velocity extrapolation needs two points"));
    }
    if n_pred == 0 {
        return Err(invalid("n_pred must be positive"));
    }
    let p = observed.points();
    let last = p[p.len() - 1];
    let prev = p[p.len() - 2];
    let v = [last[0] - prev[0], last[1] - prev[1]];
    let points = (1..=n_pred)
        .map(|k| [last[0] + k as f64 * v[0], last[1] + k as f64 * v[1]])
        .collect();
    Trajectory::contiguous(points, observed.last_frame() + 1)
}

/// The extrapolation baseline behind the predictor interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstantVelocity {
    pub t_obs: usize,
    pub n_pred: usize,
}

impl ConstantVelocity {
    pub fn new(t_obs: usize, n_pred: usize) -> Result<Self> {
        if t_obs < 2 || n_pred == 0 {
            return Err(invalid(
                "constant-velocity predictor needs t_obs ≥ 2 and n_pred ≥ 1",
            ));
        }
        Ok(Self { t_obs, n_pred })
    }
}

impl TrajectoryPredictor for ConstantVelocity {
    fn t_obs(&self) -> usize {
        self.t_obs
    }

    fn n_pred(&self) -> usize {
        self.n_pred
    }

    fn predict(&self, observed: &Trajectory, _rng: &mut ChaCha8Rng) -> Result<Trajectory> {
        baseline_predictor(observed, self.n_pred)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extrapolates_last_velocity() {
        let t = Trajectory::contiguous(vec![[0.0, 0.0], [1.0, 1.0]], 0).unwrap();
        let p = baseline_predictor(&t, 2).unwrap();
        assert_eq!(p.points(), &[[2.0, 2.0], [3.0, 3.0]]);
        assert_eq!(p.frame_ids(), &[2, 3]);
        let s = Trajectory::contiguous(vec![[4.0, 5.0]; 3], 0).unwrap();
        assert_eq!(
            baseline_predictor(&s, 3).unwrap().points(),
            &[[4.0, 5.0]; 3]
        );
        assert!(baseline_predictor(&t.window(0, 1).unwrap(), 2).is_err());
    }
}
