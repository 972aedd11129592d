//! Desk-scale accuracy/robustness analogues: mean overlap over tracked frames,
//! zero-overlap failure count, and occlusion-detector precision/recall.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::io::{ResultRow, TruthRow};
use crate::error::{invalid, Result};
use crate::pipeline::Mode;
use crate::predictor::Point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub frames: usize,
    /// Mean IoU over frames with IoU > 0 (accuracy analogue).
    pub mean_iou: f64,
    /// Frames with IoU = 0 (robustness analogue).
    pub failures: usize,
    /// Precision/recall of the occlusion flag; 1.0 when the denominator is empty.
    pub occlusion_precision: f64,
    pub occlusion_recall: f64,
    /// Mean center error over frames emitted in predicting mode.
    pub predictor_ade: Option<f64>,
}

/// Running counts; merging accumulators pools frames from several sequences.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricsAccumulator {
    frames: usize,
    iou_sum: f64,
    iou_hits: usize,
    failures: usize,
    tp: usize,
    fp: usize,
    fn_: usize,
    pred_err_sum: f64,
    pred_frames: usize,
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricsAccumulator {
    pub fn add(&mut self, row: &ResultRow, truth: &TruthRow) {
        let (b, t) = (row.bbox(), truth.bbox());
        let iou = b.iou(&t);
        self.frames += 1;
        if iou > 0.0 {
            self.iou_sum += iou;
            self.iou_hits += 1;
        } else {
            self.failures += 1;
        }
        match (row.occluded, truth.occluded_flag) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => {}
        }
        if row.mode == Mode::Predicting {
            self.pred_err_sum += dist(b.center(), t.center());
            self.pred_frames += 1;
        }
    }

    pub fn merge(&mut self, other: &MetricsAccumulator) {
        self.frames += other.frames;
        self.iou_sum += other.iou_sum;
        self.iou_hits += other.iou_hits;
        self.failures += other.failures;
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.pred_err_sum += other.pred_err_sum;
        self.pred_frames += other.pred_frames;
    }

    pub fn report(&self) -> MetricsReport {
        MetricsReport {
            frames: self.frames,
            mean_iou: if self.iou_hits == 0 {
                0.0
            } else {
                self.iou_sum / self.iou_hits as f64
            },
            failures: self.failures,
            occlusion_precision: ratio(self.tp, self.tp + self.fp),
            occlusion_recall: ratio(self.tp, self.tp + self.fn_),
            predictor_ade: (self.pred_frames > 0)
                .then(|| self.pred_err_sum / self.pred_frames as f64),
        }
    }
}

/// Joins results to truth by frame id and accumulates every result frame.
pub fn accumulate(results: &[ResultRow], truth: &[TruthRow]) -> Result<MetricsAccumulator> {
    let by_frame: HashMap<u64, &TruthRow> = truth.iter().map(|t| (t.frame, t)).collect();
    if by_frame.len() != truth.len() {
        return Err(invalid("truth has duplicate frame ids"));
    }
    let mut seen = std::collections::HashSet::with_capacity(results.len());
    // Summation order is fixed by frame id so the report does not depend on row order.
    let mut sorted: Vec<&ResultRow> = results.iter().collect();
    sorted.sort_by_key(|r| r.frame);
    let mut acc = MetricsAccumulator::default();
    for r in sorted {
        if !seen.insert(r.frame) {
            return Err(invalid(format!(
                "frame {} appears twice in results",
                r.frame
            )));
        }
        let t = by_frame
            .get(&r.frame)
            .ok_or_else(|| invalid(format!("no truth for result frame {}", r.frame)))?;
        acc.add(r, t);
    }
    Ok(acc)
}

pub fn evaluate(results: &[ResultRow], truth: &[TruthRow]) -> Result<MetricsReport> {
    Ok(accumulate(results, truth)?.report())
}

/// Frames after the last truth-occluded frame, and how many of them overlap
/// the truth by more than `iou_threshold`. `(0, 0)` when nothing is occluded.
pub fn post_occlusion_hits(
    results: &[ResultRow],
    truth: &[TruthRow],
    iou_threshold: f64,
) -> Result<(usize, usize)> {
    let Some(last) = truth
        .iter()
        .filter(|t| t.occluded_flag)
        .map(|t| t.frame)
        .max()
    else {
        return Ok((0, 0));
    };
    let by_frame: HashMap<u64, &TruthRow> = truth.iter().map(|t| (t.frame, t)).collect();
    let mut hits = 0;
    let mut total = 0;
    for r in results.iter().filter(|r| r.frame > last) {
        let t = by_frame
            .get(&r.frame)
            .ok_or_else(|| invalid(format!("no truth for result frame {}", r.frame)))?;
        total += 1;
        if r.bbox().iou(&t.bbox()) > iou_threshold {
            hits += 1;
        }
    }
    Ok((hits, total))
}
