//! Seeded scenario families used by the tests, the sweep defaults and the demo.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::datasets::varied_velocity;
use super::scenario::{
    Motion, ObjectSpec, OcclusionEpisode, Pattern, ScenarioSpec, Shape, Waypoint,
};
use crate::error::Result;
use crate::predictor::{train_gan, GanTrainConfig, SeqNetParams, TrajSplit};

pub const FIELD_W: usize = 256;
pub const FIELD_H: usize = 192;
pub const TARGET_SIZE: f64 = 32.0;
const FRAMES: usize = 60;
const TARGET_MEAN: f64 = 0.55;
const TARGET_SPREAD: f64 = 0.25;
const NOISE: f64 = 0.01;

const BACKGROUND: f64 = TARGET_MEAN;
/// The occluding block matches the background, so covered parts of the
/// target carry no texture at any smoothing level.
pub const CROSSING_DISTRACTOR_INTENSITY: f64 = BACKGROUND;
/// Leaves a 6 px margin around the target while it rides along.
const BLOCK_SIZE: f64 = TARGET_SIZE + 12.0;

fn target(rng: &mut ChaCha8Rng, motion: Motion) -> ObjectSpec {
    ObjectSpec {
        shape: Shape::Rect,
        pattern: Pattern::Blocks {
            mean: TARGET_MEAN,
            spread: TARGET_SPREAD,
            cell: 4.0,
            seed: rng.random(),
        },
        width: TARGET_SIZE,
        height: TARGET_SIZE,
        motion,
    }
}

/// A textured target moving horizontally is hidden by a block that drops in
/// across its path, rides along with it for 5 to 10 frames and then drops out
/// the other side. The block waits at the field edges before and after.
pub fn crossing(seed: u64) -> ScenarioSpec {
    crossing_inner(seed, None)
}

/// [`crossing`] with the full-cover duration fixed to `covered` frames.
pub fn crossing_covering(seed: u64, covered: u64) -> ScenarioSpec {
    crossing_inner(seed, Some(covered))
}

fn crossing_inner(seed: u64, covered_override: Option<u64>) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let speed = rng.random_range(1.6..2.4);
    let v: [f64; 2] = [dir * speed, rng.random_range(-0.15..0.15)];
    let start_x = if dir > 0.0 {
        rng.random_range(24.0..36.0)
    } else {
        FIELD_W as f64 - rng.random_range(24.0..36.0)
    };
    let start = [start_x, rng.random_range(88.0..104.0)];
    let t_cover = rng.random_range(24..30) as u64;
    let drawn: u64 = rng.random_range(5..=10);
    let covered = covered_override.unwrap_or(drawn).max(1);
    let sweep: f64 = rng.random_range(20.0..26.0);
    let down = rng.random::<bool>();
    let at = |t: u64| [start[0] + v[0] * t as f64, start[1] + v[1] * t as f64];
    let half = BLOCK_SIZE / 2.0;
    let (entry_y, exit_y) = if down {
        (half, FIELD_H as f64 - half)
    } else {
        (FIELD_H as f64 - half, half)
    };
    let steps_to = |y: f64, t: u64| ((at(t)[1] - y).abs() / sweep).ceil() as u64;
    let t_last = t_cover + covered - 1;
    let t_in = t_cover - steps_to(entry_y, t_cover);
    let t_out = t_last + steps_to(exit_y, t_last);
    let waypoints = vec![
        Waypoint {
            frame: t_in,
            at: [at(t_in)[0], entry_y],
        },
        Waypoint {
            frame: t_cover,
            at: at(t_cover),
        },
        Waypoint {
            frame: t_last,
            at: at(t_last),
        },
        Waypoint {
            frame: t_out,
            at: [at(t_out)[0], exit_y],
        },
    ];
    ScenarioSpec {
        width: FIELD_W,
        height: FIELD_H,
        frames: FRAMES,
        background: BACKGROUND,
        target: target(&mut rng, Motion::Linear { start, velocity: v }),
        distractors: vec![ObjectSpec {
            shape: Shape::Rect,
            pattern: Pattern::Uniform {
                intensity: CROSSING_DISTRACTOR_INTENSITY,
            },
            width: BLOCK_SIZE,
            height: BLOCK_SIZE,
            motion: Motion::Piecewise { waypoints },
        }],
        occlusion_episodes: vec![OcclusionEpisode {
            distractor: 0,
            start: t_in,
            end: t_out,
        }],
        noise: NOISE,
        seed,
        quantize: true,
    }
}

pub fn crossing_suite(count: usize, seed: u64) -> Vec<ScenarioSpec> {
    (0..count as u64)
        .map(|k| crossing(seed.wrapping_add(k)))
        .collect()
}

/// Sequences in which the target is never covered: the crossing layout with
/// the block passing underneath, and free-moving targets on an empty field.
pub fn unoccluded_suite(count: usize, seed: u64) -> Vec<ScenarioSpec> {
    (0..count as u64)
        .map(|k| {
            let s = seed.wrapping_add(k);
            if k % 2 == 0 {
                let mut spec = crossing(s);
                spec.occlusion_episodes.clear();
                spec
            } else {
                free_motion(s)
            }
        })
        .collect()
}

/// Target on an empty field with a gentle sinusoidal wobble.
pub fn free_motion(seed: u64) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = [rng.random_range(-1.5..1.5), rng.random_range(-0.8..0.8)];
    let start = [
        FIELD_W as f64 / 2.0 - v[0] * 25.0,
        FIELD_H as f64 / 2.0 - v[1] * 25.0,
    ];
    let motion = Motion::Sinusoidal {
        start,
        velocity: v,
        amplitude: [rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)],
        period: rng.random_range(15.0..30.0),
        phase: 0.0,
    };
    ScenarioSpec {
        width: FIELD_W,
        height: FIELD_H,
        frames: 50,
        background: BACKGROUND,
        target: target(&mut rng, motion),
        distractors: vec![],
        occlusion_episodes: vec![],
        noise: NOISE,
        seed,
        quantize: true,
    }
}

/// Straight tracks at the crossing-suite target speeds, one window each.
pub fn crossing_training_set(
    count: usize,
    cfg: &GanTrainConfig,
    seed: u64,
) -> Result<Vec<TrajSplit>> {
    let len = cfg.t_obs + cfg.n_pred;
    varied_velocity(count, len, cfg.field_size, 1.5..2.5, seed)?
        .iter()
        .map(|t| TrajSplit::from_window(t, 0, cfg.t_obs, cfg.n_pred))
        .collect()
}

/// Generator trained on [`crossing_training_set`] under `cfg`.
pub fn crossing_predictor(cfg: &GanTrainConfig) -> Result<SeqNetParams> {
    let data = crossing_training_set(400, cfg, cfg.seed.wrapping_add(1))?;
    Ok(train_gan(&data, cfg)?.generator)
}
