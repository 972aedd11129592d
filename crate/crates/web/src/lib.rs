//! wasm-bindgen surface for `www/index.html`. Every call returns JSON text
//! except the raw frame bytes.

use occlutrack::harness::suite::crossing;
use occlutrack::harness::{simulate, ConstantVelocity};
use occlutrack::heatmap::{compute_distances, extract_peaks, ResponseMap};
use occlutrack::occlusion::{composite_index, OcclusionConfig};
use occlutrack::pipeline::{run_sequence, Mode, PipelineConfig};
use occlutrack::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json(v: &impl Serialize) -> Result<String> {
    Ok(serde_json::to_string(v)?)
}

#[derive(Serialize)]
struct PeakView {
    size: usize,
    values: Vec<f64>,
    peaks: Vec<[f64; 3]>,
    distances: Vec<f64>,
}

/// A response map made of `bumps` Gaussian blobs plus noise, with its peaks.
#[wasm_bindgen]
pub fn peak_demo(
    seed: u64,
    size: usize,
    k: usize,
    bumps: usize,
    noise: f64,
) -> std::result::Result<String, JsError> {
    peak_demo_json(seed, size, k, bumps, noise).map_err(js)
}

pub fn peak_demo_json(
    seed: u64,
    size: usize,
    k: usize,
    bumps: usize,
    noise: f64,
) -> Result<String> {
    if !(2..=64).contains(&size) || !(noise >= 0.0) {
        return Err(Error::InvalidArgument(
            "map size must lie in 2..=64 and noise must be non-negative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = size as f64;
    let blobs: Vec<(f64, f64, f64, f64)> = (0..bumps)
        .map(|_| {
            (
                rng.random_range(0.0..n),
                rng.random_range(0.0..n),
                rng.random_range(0.4..1.0),
                rng.random_range(0.8..n / 6.0 + 1.0),
            )
        })
        .collect();
    let map = ResponseMap::from_fn(size, 3, |r, c| {
        let s: f64 = blobs
            .iter()
            .map(|(br, bc, a, w)| {
                a * (-((r as f64 - br).powi(2) + (c as f64 - bc).powi(2)) / (2.0 * w * w)).exp()
            })
            .sum();
        s + noise * rng.random_range(-1.0..1.0)
    })?;
    let set = extract_peaks(&map, k)?;
    to_json(&PeakView {
        size,
        values: map.values().to_vec(),
        peaks: set
            .peaks()
            .iter()
            .map(|p| [p.row as f64, p.col as f64, p.score])
            .collect(),
        distances: compute_distances(&set),
    })
}

#[derive(Serialize)]
struct Surface {
    scores: Vec<f64>,
    distances: Vec<f64>,
    epsilon: Vec<f64>,
    threshold: f64,
}

/// ε over a grid of scores in [0, 1] and interferer distances in [0, max_dis].
#[wasm_bindgen]
pub fn epsilon_surface(
    mix_weight: f64,
    threshold: f64,
    max_dis: f64,
    steps: usize,
) -> std::result::Result<String, JsError> {
    epsilon_surface_json(mix_weight, threshold, max_dis, steps).map_err(js)
}

pub fn epsilon_surface_json(
    mix_weight: f64,
    threshold: f64,
    max_dis: f64,
    steps: usize,
) -> Result<String> {
    let cfg = OcclusionConfig {
        mix_weight,
        epsilon_threshold: threshold,
        ..Default::default()
    };
    cfg.validate()?;
    let axis = |hi: f64| {
        (0..steps)
            .map(|k| hi * k as f64 / (steps.max(2) - 1) as f64)
            .collect::<Vec<_>>()
    };
    let scores = axis(1.0);
    let distances = axis(max_dis);
    let mut epsilon = Vec::with_capacity(steps * steps);
    for s in &scores {
        for d in &distances {
            epsilon.push(composite_index(*s, *d, &cfg)?);
        }
    }
    to_json(&Surface {
        scores,
        distances,
        epsilon,
        threshold,
    })
}

#[derive(Serialize)]
struct FrameView {
    frame: u64,
    truth: [f64; 4],
    occluded_truth: bool,
    tracked: [f64; 4],
    predicting: bool,
    epsilon: Option<f64>,
    iou: f64,
}

#[derive(Serialize)]
struct RunSummary {
    post_occlusion_success: Option<f64>,
    predicting_frames: usize,
    frames: Vec<FrameView>,
}

/// A rendered crossing scenario tracked with or without the occlusion judge.
#[wasm_bindgen]
pub struct CrossingRun {
    width: usize,
    height: usize,
    pixels: Vec<Vec<u8>>,
    summary: String,
}

#[wasm_bindgen]
impl CrossingRun {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64, with_judge: bool) -> std::result::Result<CrossingRun, JsError> {
        Self::build(seed, with_judge).map_err(js)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame_count(&self) -> usize {
        self.pixels.len()
    }

    /// Grayscale bytes of frame `i`, row-major.
    pub fn frame(&self, i: usize) -> Vec<u8> {
        self.pixels.get(i).cloned().unwrap_or_default()
    }

    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

impl CrossingRun {
    pub fn build(seed: u64, with_judge: bool) -> Result<CrossingRun> {
        let sc = simulate(&crossing(seed))?;
        let mut cfg = PipelineConfig::default();
        if !with_judge {
            cfg.occlusion.epsilon_threshold = 0.0;
        }
        let predictor = ConstantVelocity::new(4, 2)?;
        let truth = sc.truth_boxes();
        let results = run_sequence(&sc.frames, sc.init_box(), &predictor, &cfg, Some(&truth))?;
        let last_occluded = sc
            .truth
            .iter()
            .filter(|t| t.occluded_flag)
            .map(|t| t.frame)
            .max();
        let after: Vec<f64> = results
            .iter()
            .filter(|r| last_occluded.is_some_and(|l| r.frame_id > l))
            .map(|r| r.iou.unwrap_or(0.0))
            .collect();
        let frames = results
            .iter()
            .map(|r| {
                let t = &sc.truth[r.frame_id as usize];
                FrameView {
                    frame: r.frame_id,
                    truth: [t.cx, t.cy, t.w, t.h],
                    occluded_truth: t.occluded_flag,
                    tracked: [r.bbox.cx, r.bbox.cy, r.bbox.w, r.bbox.h],
                    predicting: r.mode == Mode::Predicting,
                    epsilon: r.verdict.as_ref().map(|v| v.epsilon),
                    iou: r.iou.unwrap_or(0.0),
                }
            })
            .collect::<Vec<_>>();
        let summary = RunSummary {
            post_occlusion_success: (!after.is_empty())
                .then(|| after.iter().filter(|&&v| v > 0.5).count() as f64 / after.len() as f64),
            predicting_frames: frames.iter().filter(|f| f.predicting).count(),
            frames,
        };
        let pixels = sc
            .frames
            .iter()
            .map(|f| {
                f.pixels()
                    .iter()
                    .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
                    .collect()
            })
            .collect();
        Ok(CrossingRun {
            width: sc.frames[0].width(),
            height: sc.frames[0].height(),
            pixels,
            summary: to_json(&summary)?,
        })
    }
}
