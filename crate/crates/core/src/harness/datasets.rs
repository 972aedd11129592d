//! Seeded synthetic trajectory sets for predictor training and studies.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::predictor::{Point, Trajectory};

/// Margin kept between every point and the field border.
const MARGIN: f64 = 2.0;

/// Translates a path (given relative to some origin) to a uniformly random
/// placement that keeps it inside the `field × field` square.
fn place(rng: &mut ChaCha8Rng, rel: Vec<Point>, field: f64) -> Result<Trajectory> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in &rel {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let mut offset = [0.0; 2];
    for a in 0..2 {
        let min = MARGIN - lo[a];
        let max = field - MARGIN - hi[a];
        if min > max {
            return Err(invalid(format!(
                "path spans {:.1} px, wider than the field",
                hi[a] - lo[a]
            )));
        }
        offset[a] = if min == max {
            min
        } else {
            rng.random_range(min..max)
        };
    }
    Trajectory::contiguous(
        rel.iter()
            .map(|p| [p[0] + offset[0], p[1] + offset[1]])
            .collect(),
        0,
    )
}

fn heading(rng: &mut ChaCha8Rng, speed: f64) -> Point {
    let th: f64 = rng.random_range(0.0..TAU);
    [speed * th.cos(), speed * th.sin()]
}

fn linear_path(v: Point, len: usize) -> Vec<Point> {
    (0..len)
        .map(|t| [v[0] * t as f64, v[1] * t as f64])
        .collect()
}

fn sinusoid_path(rng: &mut ChaCha8Rng, len: usize) -> Vec<Point> {
    let speed = rng.random_range(0.5..1.0);
    let v = heading(rng, speed);
    // Oscillate across the drift direction.
    let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
    let perp = [-v[1] / norm, v[0] / norm];
    let amp = rng.random_range(2.0..5.0);
    let period = rng.random_range(8.0..16.0);
    let phase = rng.random_range(0.0..TAU);
    (0..len)
        .map(|t| {
            let s = amp * (TAU * t as f64 / period + phase).sin();
            [v[0] * t as f64 + perp[0] * s, v[1] * t as f64 + perp[1] * s]
        })
        .collect()
}

fn turn_path(rng: &mut ChaCha8Rng, len: usize) -> Vec<Point> {
    let speed = rng.random_range(0.5..2.0);
    let v0 = heading(rng, speed);
    let turn = rng.random_range(-2.0..2.0f64);
    let v1 = [
        v0[0] * turn.cos() - v0[1] * turn.sin(),
        v0[0] * turn.sin() + v0[1] * turn.cos(),
    ];
    let knee = rng.random_range(len / 4..=3 * len / 4);
    let mut p = [0.0, 0.0];
    let mut out = Vec::with_capacity(len);
    for t in 0..len {
        out.push(p);
        let v = if t < knee { v0 } else { v1 };
        p = [p[0] + v[0], p[1] + v[1]];
    }
    out
}

fn check(count: usize, len: usize, field: f64) -> Result<()> {
    if count == 0 || len == 0 {
        return Err(invalid("dataset needs a positive count and length"));
    }
    if !(field > 2.0 * MARGIN) {
        return Err(invalid("field too small"));
    }
    Ok(())
}

/// Straight lines at fixed `speed` px/frame in uniformly random directions.
pub fn constant_velocity(
    count: usize,
    len: usize,
    field: f64,
    speed: f64,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    check(count, len, field)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let v = heading(&mut rng, speed);
            place(&mut rng, linear_path(v, len), field)
        })
        .collect()
}

/// Straight lines with speeds drawn from `speed` (px/frame).
pub fn varied_velocity(
    count: usize,
    len: usize,
    field: f64,
    speed: std::ops::Range<f64>,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    check(count, len, field)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let s = rng.random_range(speed.clone());
            let v = heading(&mut rng, s);
            place(&mut rng, linear_path(v, len), field)
        })
        .collect()
}

/// Drifting paths that oscillate sideways.
pub fn sinusoidal(count: usize, len: usize, field: f64, seed: u64) -> Result<Vec<Trajectory>> {
    check(count, len, field)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let rel = sinusoid_path(&mut rng, len);
            place(&mut rng, rel, field)
        })
        .collect()
}

/// Linear, sinusoidal and single-turn paths in rotation.
pub fn mixed_motion(count: usize, len: usize, field: f64, seed: u64) -> Result<Vec<Trajectory>> {
    check(count, len, field)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let rel = match i % 3 {
                0 => {
                    let speed = rng.random_range(0.5..2.0);
                    let v = heading(&mut rng, speed);
                    linear_path(v, len)
                }
                1 => sinusoid_path(&mut rng, len),
                _ => turn_path(&mut rng, len),
            };
            place(&mut rng, rel, field)
        })
        .collect()
}
