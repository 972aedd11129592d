//! Synthetic raster scenes with known target boxes and occlusion flags.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::io::{read_truth, write_truth, TruthRow};
use crate::error::{Error, Result};
use crate::frame::{BoundingBox, Frame};
use crate::predictor::Point;

fn spec_err(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    #[default]
    Rect,
    Ellipse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pattern {
    Uniform {
        intensity: f64,
    },
    /// Square blocks of `cell` px with intensities drawn uniformly from
    /// `mean ± spread`; the layout is fixed by `seed` and moves with the object.
    Blocks {
        mean: f64,
        spread: f64,
        cell: f64,
        seed: u64,
    },
}

impl Pattern {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Pattern::Uniform { intensity } => (0.0..=1.0).contains(&intensity),
            Pattern::Blocks {
                mean, spread, cell, ..
            } => spread >= 0.0 && cell > 0.0 && mean - spread >= 0.0 && mean + spread <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(spec_err(format!(
                "pattern {self:?} leaves the [0,1] intensity range"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub frame: u64,
    pub at: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Motion {
    Linear {
        start: Point,
        velocity: Point,
    },
    /// Linear drift plus a per-axis sine of the given period (frames).
    Sinusoidal {
        start: Point,
        velocity: Point,
        amplitude: Point,
        period: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Straight segments between waypoints; holds the first and last positions outside them.
    Piecewise {
        waypoints: Vec<Waypoint>,
    },
}

impl Motion {
    pub fn position(&self, t: u64) -> Point {
        let tf = t as f64;
        match self {
            Motion::Linear { start, velocity } => {
                [start[0] + velocity[0] * tf, start[1] + velocity[1] * tf]
            }
            Motion::Sinusoidal {
                start,
                velocity,
                amplitude,
                period,
                phase,
            } => {
                let s = (TAU * tf / period + phase).sin();
                [
                    start[0] + velocity[0] * tf + amplitude[0] * s,
                    start[1] + velocity[1] * tf + amplitude[1] * s,
                ]
            }
            Motion::Piecewise { waypoints } => {
                let first = waypoints[0];
                if t <= first.frame {
                    return first.at;
                }
                for w in waypoints.windows(2) {
                    if t <= w[1].frame {
                        let f = (t - w[0].frame) as f64 / (w[1].frame - w[0].frame) as f64;
                        return [
                            w[0].at[0] + f * (w[1].at[0] - w[0].at[0]),
                            w[0].at[1] + f * (w[1].at[1] - w[0].at[1]),
                        ];
                    }
                }
                waypoints[waypoints.len() - 1].at
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Motion::Sinusoidal { period, .. } if !(*period > 0.0) => {
                Err(spec_err("sinusoid period must be positive"))
            }
            Motion::Piecewise { waypoints } if waypoints.is_empty() => {
                Err(spec_err("piecewise motion needs waypoints"))
            }
            Motion::Piecewise { waypoints }
                if waypoints.windows(2).any(|w| w[0].frame >= w[1].frame) =>
            {
                Err(spec_err("waypoint frames must be strictly increasing"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    #[serde(default)]
    pub shape: Shape,
    pub pattern: Pattern,
    pub width: f64,
    pub height: f64,
    pub motion: Motion,
}

impl ObjectSpec {
    pub fn bbox(&self, t: u64) -> BoundingBox {
        let [cx, cy] = self.motion.position(t);
        BoundingBox {
            cx,
            cy,
            w: self.width,
            h: self.height,
        }
    }
}

/// Frames `start..=end` during which distractor `distractor` is drawn above the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcclusionEpisode {
    pub distractor: usize,
    pub start: u64,
    pub end: u64,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    #[serde(default)]
    pub background: f64,
    pub target: ObjectSpec,
    #[serde(default)]
    pub distractors: Vec<ObjectSpec>,
    #[serde(default)]
    pub occlusion_episodes: Vec<OcclusionEpisode>,
    /// Standard deviation of additive Gaussian pixel noise.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
    /// Round frames to 8-bit gray levels, as stored on disk.
    #[serde(default = "default_true")]
    pub quantize: bool,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.frames == 0 {
            return Err(spec_err("field size and frame count must be positive"));
        }
        if !(0.0..=1.0).contains(&self.background) {
            return Err(spec_err("background intensity must lie in [0,1]"));
        }
        if !(self.noise >= 0.0) {
            return Err(spec_err("noise level must be non-negative"));
        }
        for (name, obj) in std::iter::once(("target".to_string(), &self.target)).chain(
            self.distractors
                .iter()
                .enumerate()
                .map(|(i, d)| (format!("distractor {i}"), d)),
        ) {
            if !(obj.width > 0.0 && obj.height > 0.0) {
                return Err(spec_err(format!("{name} must have positive size")));
            }
            obj.pattern.validate()?;
            obj.motion.validate()?;
            for t in 0..self.frames as u64 {
                let b = obj.bbox(t);
                if b.left() < 0.0
                    || b.top() < 0.0
                    || b.right() > self.width as f64
                    || b.bottom() > self.height as f64
                {
                    return Err(spec_err(format!(
                        "{name} leaves the {}x{} field at frame {t} (center {:.2}, {:.2})",
                        self.width, self.height, b.cx, b.cy
                    )));
                }
            }
        }
        for e in &self.occlusion_episodes {
            if e.distractor >= self.distractors.len() {
                return Err(spec_err(format!(
                    "episode refers to missing distractor {}",
                    e.distractor
                )));
            }
            if e.start > e.end || e.end >= self.frames as u64 {
                return Err(spec_err(format!(
                    "episode {}..={} outside {} frames",
                    e.start, e.end, self.frames
                )));
            }
        }
        Ok(())
    }

    fn distractor_above(&self, d: usize, t: u64) -> bool {
        self.occlusion_episodes
            .iter()
            .any(|e| e.distractor == d && (e.start..=e.end).contains(&t))
    }
}

/// Rendered sequence plus per-frame ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub frames: Vec<Frame>,
    pub truth: Vec<TruthRow>,
}

impl Scenario {
    pub fn truth_boxes(&self) -> Vec<BoundingBox> {
        self.truth.iter().map(|r| r.bbox()).collect()
    }

    pub fn init_box(&self) -> BoundingBox {
        self.truth[0].bbox()
    }
}

struct Raster<'a> {
    spec: &'a ObjectSpec,
    bbox: BoundingBox,
    blocks: Vec<f64>,
    cols: usize,
}

impl<'a> Raster<'a> {
    fn new(spec: &'a ObjectSpec, t: u64) -> Self {
        let (blocks, cols) = match spec.pattern {
            Pattern::Uniform { .. } => (Vec::new(), 0),
            Pattern::Blocks {
                mean,
                spread,
                cell,
                seed,
            } => {
                let cols = (spec.width / cell).ceil() as usize;
                let rows = (spec.height / cell).ceil() as usize;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let v = (0..rows * cols)
                    .map(|_| mean + spread * rng.random_range(-1.0..=1.0))
                    .collect();
                (v, cols)
            }
        };
        Self {
            spec,
            bbox: spec.bbox(t),
            blocks,
            cols,
        }
    }

    /// Pixel column range possibly covered by the object.
    fn span(&self, limit: usize, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let a = lo.floor().max(0.0) as usize;
        let b = (hi.ceil().max(0.0) as usize).min(limit);
        a..b.max(a)
    }

    fn contains(&self, x: usize, y: usize) -> bool {
        let px = x as f64 + 0.5;
        let py = y as f64 + 0.5;
        let b = &self.bbox;
        match self.spec.shape {
            Shape::Rect => px >= b.left() && px < b.right() && py >= b.top() && py < b.bottom(),
            Shape::Ellipse => {
                let dx = (px - b.cx) / (b.w / 2.0);
                let dy = (py - b.cy) / (b.h / 2.0);
                dx * dx + dy * dy <= 1.0
            }
        }
    }

    fn intensity(&self, x: usize, y: usize) -> f64 {
        match self.spec.pattern {
            Pattern::Uniform { intensity } => intensity,
            Pattern::Blocks { cell, .. } => {
                let lx = ((x as f64 + 0.5 - self.bbox.left()) / cell)
                    .floor()
                    .max(0.0) as usize;
                let ly = ((y as f64 + 0.5 - self.bbox.top()) / cell).floor().max(0.0) as usize;
                let rows = self.blocks.len() / self.cols;
                self.blocks[ly.min(rows - 1) * self.cols + lx.min(self.cols - 1)]
            }
        }
    }

    fn paint(&self, frame: &mut Frame) {
        let (w, h) = (frame.width(), frame.height());
        for y in self.span(h, self.bbox.top(), self.bbox.bottom()) {
            for x in self.span(w, self.bbox.left(), self.bbox.right()) {
                if self.contains(x, y) {
                    frame.set(x, y, self.intensity(x, y));
                }
            }
        }
    }
}

/// Renders the scenario. Output is a pure function of the spec.
pub fn simulate(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut frames = Vec::with_capacity(spec.frames);
    let mut truth = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames as u64 {
        let mut frame = Frame::filled(spec.width, spec.height, spec.background)?;
        let target = Raster::new(&spec.target, t);
        let distractors: Vec<Raster> = spec.distractors.iter().map(|d| Raster::new(d, t)).collect();
        let (above, below): (Vec<(usize, &Raster)>, Vec<(usize, &Raster)>) = distractors
            .iter()
            .enumerate()
            .partition(|(i, _)| spec.distractor_above(*i, t));
        for (_, d) in &below {
            d.paint(&mut frame);
        }
        target.paint(&mut frame);
        for (_, d) in &above {
            d.paint(&mut frame);
        }

        let mut target_px = 0usize;
        let mut covered = 0usize;
        for y in target.span(spec.height, target.bbox.top(), target.bbox.bottom()) {
            for x in target.span(spec.width, target.bbox.left(), target.bbox.right()) {
                if target.contains(x, y) {
                    target_px += 1;
                    if above.iter().any(|(_, d)| d.contains(x, y)) {
                        covered += 1;
                    }
                }
            }
        }
        if spec.noise > 0.0 {
            for p in frame.pixels_mut() {
                let n: f64 = rng.sample(StandardNormal);
                *p = (*p + spec.noise * n).clamp(0.0, 1.0);
            }
        }
        if spec.quantize {
            frame.quantize_8bit();
        }
        frames.push(frame);
        truth.push(TruthRow {
            frame: t,
            cx: target.bbox.cx,
            cy: target.bbox.cy,
            w: target.bbox.w,
            h: target.bbox.h,
            occluded_flag: target_px > 0 && 2 * covered > target_px,
        });
    }
    Ok(Scenario { frames, truth })
}

fn frame_name(i: usize) -> String {
    format!("frame_{i:05}.pgm")
}

/// Writes `frame_NNNNN.pgm` files and `truth.csv` into `dir`.
pub fn write_scenario(dir: impl AsRef<Path>, scenario: &Scenario) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    for (i, f) in scenario.frames.iter().enumerate() {
        f.write_pgm(dir.join(frame_name(i)))?;
    }
    write_truth(fs::File::create(dir.join("truth.csv"))?, &scenario.truth)
}

/// Reads every `.pgm` in `dir` in file-name order, plus `truth.csv` when present.
pub fn read_sequence(dir: impl AsRef<Path>) -> Result<(Vec<Frame>, Option<Vec<TruthRow>>)> {
    let dir = dir.as_ref();
    let mut names: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Error::Validation(format!(
            "no PGM frames in {}",
            dir.display()
        )));
    }
    let frames = names
        .iter()
        .map(Frame::read_pgm)
        .collect::<Result<Vec<_>>>()?;
    let truth_path = dir.join("truth.csv");
    let truth = if truth_path.exists() {
        Some(read_truth(fs::File::open(truth_path)?)?)
    } else {
        None
    };
    Ok((frames, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn still() -> ScenarioSpec {
        ScenarioSpec {
            width: 40,
            height: 30,
            frames: 4,
            background: 0.2,
            target: ObjectSpec {
                shape: Shape::Rect,
                pattern: Pattern::Uniform { intensity: 0.8 },
                width: 6.0,
                height: 4.0,
                motion: Motion::Linear {
                    start: [10.0, 10.0],
                    velocity: [0.0, 0.0],
                },
            },
            distractors: vec![],
            occlusion_episodes: vec![],
            noise: 0.0,
            seed: 3,
            quantize: true,
        }
    }

    #[test]
    fn static_scene_repeats_frames() {
        let s = simulate(&still()).unwrap();
        assert!(s.frames.windows(2).all(|w| w[0] == w[1]));
        assert!(s.truth.iter().all(|r| !r.occluded_flag));
        let ones = s.frames[0].pixels().iter().filter(|&&p| p > 0.5).count();
        assert_eq!(ones, 24);
    }

    #[test]
    fn out_of_field_motion_is_rejected() {
        let mut spec = still();
        spec.target.motion = Motion::Linear {
            start: [10.0, 10.0],
            velocity: [10.0, 0.0],
        };
        assert!(matches!(simulate(&spec), Err(Error::Validation(_))));
    }

    #[test]
    fn piecewise_interpolates_and_holds() {
        let m = Motion::Piecewise {
            waypoints: vec![
                Waypoint {
                    frame: 2,
                    at: [0.0, 0.0],
                },
                Waypoint {
                    frame: 6,
                    at: [4.0, 8.0],
                },
            ],
        };
        assert_eq!(m.position(0), [0.0, 0.0]);
        assert_eq!(m.position(3), [1.0, 2.0]);
        assert_eq!(m.position(9), [4.0, 8.0]);
    }
}
