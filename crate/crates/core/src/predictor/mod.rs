//! Trajectory prediction: sequence networks, adversarial training and the
//! parameter file format.

mod gan;
mod io;
mod nn;
mod study;
mod trajectory;

use rand_chacha::ChaCha8Rng;

pub use gan::{
    discriminator_forward, discriminator_loss_and_grad, evaluate_ade, gan_loss, gan_loss_grad,
    generator_forward, generator_loss_and_grad, predicted_offsets, train_gan, GanLossGrad,
    GanTrainConfig, GeneratorWeights, NetKind, NetShape, SeqNetParams, TrainLogEntry, TrainedGan,
};
pub use io::{load_predictor, read_predictor, save_predictor, write_predictor, PredictorFile};
pub use study::{observation_length_study, StudyRow};
pub use trajectory::{ade, ade_points, Point, TrajSplit, Trajectory};

use crate::error::Result;

/// Anything that extends an observed center track by a few frames.
pub trait TrajectoryPredictor: Send + Sync {
    fn t_obs(&self) -> usize;
    fn n_pred(&self) -> usize;
    fn predict(&self, observed: &Trajectory, rng: &mut ChaCha8Rng) -> Result<Trajectory>;
}

impl TrajectoryPredictor for SeqNetParams {
    fn t_obs(&self) -> usize {
        self.shape().t_obs
    }

    fn n_pred(&self) -> usize {
        self.shape().n_pred
    }

    fn predict(&self, observed: &Trajectory, rng: &mut ChaCha8Rng) -> Result<Trajectory> {
        let z = gan::sample_noise(rng, self.shape().noise_dim);
        generator_forward(self, observed, &z)
    }
}
