//! Per-frame tracking state machine.
//!
//! In `Tracking` mode the appearance model positions the box. When the
//! occlusion judge fires and enough history exists, the tracker switches to
//! `Predicting` and coasts on predicted centers, re-checking the judge every
//! frame in a search region centered on the prediction. The first clear
//! verdict snaps back to the appearance output.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::appearance::{
    crop_template, locate, response_pyramid, AppearanceConfig, PyramidResponse, Template,
};
use crate::error::{invalid, Error, Result};
use crate::frame::{BoundingBox, Frame};
use crate::heatmap::{extract_peaks, PeakSet, DEFAULT_TOP_K};
use crate::occlusion::{judge, OcclusionConfig, OcclusionVerdict};
use crate::predictor::{Point, Trajectory, TrajectoryPredictor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    Tracking,
    Predicting,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Tracking => "TRACKING",
            Mode::Predicting => "PREDICTING",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "TRACKING" => Ok(Mode::Tracking),
            "PREDICTING" => Ok(Mode::Predicting),
            other => Err(Error::Format(format!("unknown mode {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub occlusion: OcclusionConfig,
    pub appearance: AppearanceConfig,
    pub top_k: usize,
    /// Longest run of predicted frames before the target is declared lost.
    pub max_predict: usize,
    /// Capacity of the center history.
    pub history: usize,
    /// Fixes scoring below this enter the history as a constant-velocity
    /// extrapolation instead of the located center; zero keeps every fix.
    pub history_min_score: f64,
    /// Seed of the predictor noise stream.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            occlusion: OcclusionConfig::default(),
            appearance: AppearanceConfig::default(),
            top_k: DEFAULT_TOP_K,
            max_predict: 20,
            history: 32,
            history_min_score: 0.9,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.occlusion.validate()?;
        self.appearance.validate()?;
        if self.top_k == 0 {
            return Err(invalid("top_k must be positive"));
        }
        if self.max_predict == 0 {
            return Err(invalid("max_predict must be positive"));
        }
        if !(0.0..=1.0).contains(&self.history_min_score) {
            return Err(invalid("history_min_score must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub frame: u64,
    pub center: Point,
    /// Predicted or extrapolated rather than observed.
    pub synthetic: bool,
}

#[derive(Debug, Clone)]
pub struct TrackState {
    mode: Mode,
    bbox: BoundingBox,
    history: VecDeque<HistoryPoint>,
    capacity: usize,
    frames_predicted: usize,
    max_predict: usize,
    pending: VecDeque<Point>,
    lost: bool,
    rng: ChaCha8Rng,
}

impl TrackState {
    /// Fresh state seeded with the initial box center at `frame`.
    pub fn new(
        init_box: BoundingBox,
        frame: u64,
        cfg: &PipelineConfig,
        t_obs: usize,
    ) -> Result<Self> {
        if cfg.history < t_obs {
            return Err(invalid(format!(
                "history capacity {} is shorter than t_obs {t_obs}",
                cfg.history
            )));
        }
        let mut history = VecDeque::with_capacity(cfg.history);
        history.push_back(HistoryPoint {
            frame,
            center: init_box.center(),
            synthetic: false,
        });
        Ok(Self {
            mode: Mode::Tracking,
            bbox: init_box,
            history,
            capacity: cfg.history,
            frames_predicted: 0,
            max_predict: cfg.max_predict,
            pending: VecDeque::new(),
            lost: false,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    pub fn history(&self) -> &VecDeque<HistoryPoint> {
        &self.history
    }

    pub fn frames_predicted(&self) -> usize {
        self.frames_predicted
    }

    pub fn max_predict(&self) -> usize {
        self.max_predict
    }

    pub fn is_lost(&self) -> bool {
        self.lost
    }

    fn push(&mut self, frame: u64, center: Point, synthetic: bool) {
        if self.history.len() == self.capacity {
            self.history.pop_front();
        }
        self.history.push_back(HistoryPoint {
            frame,
            center,
            synthetic,
        });
    }

    /// Records an appearance fix, or extrapolates the last step when the fix is weak.
    fn push_fix(&mut self, frame: u64, center: Point, score: f64, min_score: f64) {
        let n = self.history.len();
        if score >= min_score || n < 2 {
            return self.push(frame, center, false);
        }
        let (a, b) = (self.history[n - 2], self.history[n - 1]);
        let dt = (frame - b.frame) as f64 / (b.frame - a.frame) as f64;
        let guess = [
            b.center[0] + dt * (b.center[0] - a.center[0]),
            b.center[1] + dt * (b.center[1] - a.center[1]),
        ];
        self.push(frame, guess, true);
    }

    /// Generator input: the trailing run of observed points when it is long
    /// enough, otherwise the newest `t_obs` points including synthetic ones.
    fn predictor_input(&self, t_obs: usize) -> Result<Trajectory> {
        let real_run = self
            .history
            .iter()
            .rev()
            .take_while(|p| !p.synthetic)
            .count();
        let take = if real_run >= t_obs {
            t_obs
        } else {
            t_obs.min(self.history.len())
        };
        let tail: Vec<&HistoryPoint> = self
            .history
            .iter()
            .skip(self.history.len() - take)
            .collect();
        Trajectory::new(
            tail.iter().map(|p| p.center).collect(),
            tail.iter().map(|p| p.frame).collect(),
        )
    }

    fn refill(&mut self, predictor: &dyn TrajectoryPredictor) -> Result<()> {
        let observed = self.predictor_input(predictor.t_obs())?;
        let predicted = predictor.predict(&observed, &mut self.rng)?;
        self.pending.extend(predicted.points().iter().copied());
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameResult {
    pub frame_id: u64,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub mode: Mode,
    /// Absent when the appearance model failed on this frame.
    pub verdict: Option<OcclusionVerdict>,
    pub iou: Option<f64>,
    pub lost: bool,
}

struct Observation {
    response: PyramidResponse,
    verdict: OcclusionVerdict,
}

fn observe(
    frame: &Frame,
    template: &Template,
    search: &BoundingBox,
    cfg: &PipelineConfig,
) -> Result<Observation> {
    let response = response_pyramid(frame, template, search, &cfg.appearance)?;
    let peaks: Vec<PeakSet> = response
        .maps
        .iter()
        .map(|m| extract_peaks(m, cfg.top_k))
        .collect::<Result<_>>()?;
    let peaks: [PeakSet; 3] = peaks.try_into().expect("three levels");
    let verdict = judge(
        &peaks,
        response.score,
        &cfg.occlusion,
        cfg.occlusion.criterion,
    )?;
    Ok(Observation { response, verdict })
}

/// Appearance failures become `Ok(None)`; configuration errors propagate.
fn observe_or_lost(
    frame: &Frame,
    template: &Template,
    search: &BoundingBox,
    cfg: &PipelineConfig,
) -> Result<Option<Observation>> {
    match observe(frame, template, search, cfg) {
        Ok(o) => Ok(Some(o)),
        Err(Error::TrackingFailure(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Advances the tracker by one frame.
pub fn step(
    mut state: TrackState,
    frame: &Frame,
    frame_id: u64,
    template: &Template,
    predictor: &dyn TrajectoryPredictor,
    cfg: &PipelineConfig,
) -> Result<(TrackState, FrameResult)> {
    let mut verdict = None;
    let mut lost = false;
    match state.mode {
        Mode::Tracking => {
            let search = state.bbox;
            match observe_or_lost(frame, template, &search, cfg)? {
                None => lost = true,
                Some(obs) => {
                    let t_obs = predictor.t_obs();
                    if obs.verdict.occluded && state.history.len() >= t_obs {
                        state.pending.clear();
                        state.refill(predictor)?;
                        let center = state
                            .pending
                            .pop_front()
                            .ok_or_else(|| invalid("predictor returned no points"))?;
                        state.mode = Mode::Predicting;
                        state.frames_predicted = 1;
                        state.bbox = search.with_center(center);
                        state.push(frame_id, center, true);
                    } else {
                        state.bbox = locate(&obs.response, &search);
                        state.push_fix(
                            frame_id,
                            state.bbox.center(),
                            obs.verdict.score,
                            cfg.history_min_score,
                        );
                    }
                    verdict = Some(obs.verdict);
                }
            }
        }
        Mode::Predicting => {
            if state.pending.is_empty() && state.frames_predicted < state.max_predict {
                state.refill(predictor)?;
            }
            let next = if state.frames_predicted < state.max_predict {
                state.pending.pop_front()
            } else {
                None
            };
            let search = next.map_or(state.bbox, |c| state.bbox.with_center(c));
            let obs = observe_or_lost(frame, template, &search, cfg)?;
            match obs {
                Some(obs) if !obs.verdict.occluded => {
                    state.bbox = locate(&obs.response, &search);
                    state.mode = Mode::Tracking;
                    state.frames_predicted = 0;
                    state.pending.clear();
                    state.lost = false;
                    state.push(frame_id, state.bbox.center(), false);
                    verdict = Some(obs.verdict);
                }
                obs => {
                    verdict = obs.map(|o| o.verdict);
                    match next {
                        Some(center) => {
                            state.bbox = search;
                            state.frames_predicted += 1;
                            state.push(frame_id, center, true);
                            lost = verdict.is_none();
                        }
                        None => {
                            state.lost = true;
                            lost = true;
                        }
                    }
                }
            }
        }
    }
    let result = FrameResult {
        frame_id,
        bbox: state.bbox,
        mode: state.mode,
        verdict,
        iou: None,
        lost: lost || state.lost,
    };
    Ok((state, result))
}

fn check_sequence(
    frames: &[Frame],
    init_box: &BoundingBox,
    truth: Option<&[BoundingBox]>,
) -> Result<()> {
    if frames.is_empty() {
        return Err(invalid("sequence has no frames"));
    }
    if !init_box.intersects_frame(frames[0].width(), frames[0].height()) {
        return Err(invalid("initial box lies outside the first frame"));
    }
    if let Some(t) = truth {
        if t.len() != frames.len() {
            return Err(invalid(format!(
                "{} truth boxes for {} frames",
                t.len(),
                frames.len()
            )));
        }
    }
    Ok(())
}

fn with_iou(mut r: FrameResult, truth: Option<&[BoundingBox]>) -> FrameResult {
    r.iou = truth.map(|t| r.bbox.iou(&t[r.frame_id as usize]));
    r
}

/// Tracks from frame 0's `init_box` through the remaining frames. Frame ids
/// are sequence indices; `truth`, when given, holds one box per frame.
pub fn run_sequence(
    frames: &[Frame],
    init_box: BoundingBox,
    predictor: &dyn TrajectoryPredictor,
    cfg: &PipelineConfig,
    truth: Option<&[BoundingBox]>,
) -> Result<Vec<FrameResult>> {
    cfg.validate()?;
    check_sequence(frames, &init_box, truth)?;
    let template = crop_template(&frames[0], &init_box, &cfg.appearance)?;
    let mut state = TrackState::new(init_box, 0, cfg, predictor.t_obs())?;
    let mut out = Vec::with_capacity(frames.len() - 1);
    for (i, frame) in frames.iter().enumerate().skip(1) {
        let (next, result) = step(state, frame, i as u64, &template, predictor, cfg)?;
        state = next;
        out.push(with_iou(result, truth));
    }
    Ok(out)
}

/// Reference tracker that always follows the appearance model. Verdicts are
/// computed and reported but never acted on.
pub fn run_appearance_only(
    frames: &[Frame],
    init_box: BoundingBox,
    cfg: &PipelineConfig,
    truth: Option<&[BoundingBox]>,
) -> Result<Vec<FrameResult>> {
    cfg.validate()?;
    check_sequence(frames, &init_box, truth)?;
    let template = crop_template(&frames[0], &init_box, &cfg.appearance)?;
    let mut bbox = init_box;
    let mut out = Vec::with_capacity(frames.len() - 1);
    for (i, frame) in frames.iter().enumerate().skip(1) {
        let obs = observe_or_lost(frame, &template, &bbox, cfg)?;
        if let Some(o) = &obs {
            bbox = locate(&o.response, &bbox);
        }
        let r = FrameResult {
            frame_id: i as u64,
            bbox,
            mode: Mode::Tracking,
            lost: obs.is_none(),
            verdict: obs.map(|o| o.verdict),
            iou: None,
        };
        out.push(with_iou(r, truth));
    }
    Ok(out)
}
