//! Threshold sweeps: one pooled metrics row per parameter value.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::ResultRow;
use super::metrics::{accumulate, post_occlusion_hits, MetricsAccumulator, MetricsReport};
use super::scenario::{simulate, Scenario, ScenarioSpec};
use crate::error::{invalid, Error, Result};
use crate::occlusion::Criterion;
use crate::pipeline::{run_sequence, PipelineConfig};
use crate::predictor::TrajectoryPredictor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    DistanceThreshold,
    ScoreThreshold,
    EpsilonThreshold,
    MixWeight,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::DistanceThreshold => "distance_t",
            SweepParam::ScoreThreshold => "score_t",
            SweepParam::EpsilonThreshold => "epsilon_t",
            SweepParam::MixWeight => "i",
        }
    }

    /// Sets the parameter and the criterion that reads it.
    pub fn apply(self, cfg: &PipelineConfig, value: f64) -> PipelineConfig {
        let mut c = cfg.clone();
        let o = &mut c.occlusion;
        match self {
            SweepParam::DistanceThreshold => {
                o.distance_threshold = value;
                o.criterion = Criterion::Distance;
            }
            SweepParam::ScoreThreshold => {
                o.score_threshold = value;
                o.criterion = Criterion::Score;
            }
            SweepParam::EpsilonThreshold => {
                o.epsilon_threshold = value;
                o.criterion = Criterion::Composite;
            }
            SweepParam::MixWeight => {
                o.mix_weight = value;
                o.criterion = Criterion::Composite;
            }
        }
        c
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d_t" | "distance_t" | "distance_threshold" => Ok(SweepParam::DistanceThreshold),
            "s_t" | "score_t" | "score_threshold" => Ok(SweepParam::ScoreThreshold),
            "epsilon_t" | "ε_t" | "e_t" | "epsilon_threshold" => Ok(SweepParam::EpsilonThreshold),
            "i" | "mix_weight" => Ok(SweepParam::MixWeight),
            other => Err(Error::Validation(format!(
                "unknown sweep parameter {other}"
            ))),
        }
    }
}

/// Parses `a:b:step` (inclusive, count rounded from the span) or a comma list.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::Validation(format!("bad number {s:?}: {e}")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a {
                return Err(Error::Validation(format!("bad range {text}")));
            }
            let count = ((b - a) / step).round() as usize + 1;
            (0..count).map(|k| a + k as f64 * step).collect()
        }
        [single] => single.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(Error::Validation(format!("bad value list {text}"))),
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("bad value list {text}")));
    }
    Ok(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub report: MetricsReport,
    /// Fraction of frames after the occlusion with IoU > 0.5.
    pub post_occlusion_success: Option<f64>,
}

/// Simulated scenario with its tracking results under one configuration.
pub fn track_scenario(
    scenario: &Scenario,
    predictor: &dyn TrajectoryPredictor,
    cfg: &PipelineConfig,
) -> Result<Vec<ResultRow>> {
    let truth = scenario.truth_boxes();
    let results = run_sequence(
        &scenario.frames,
        scenario.init_box(),
        predictor,
        cfg,
        Some(&truth),
    )?;
    Ok(results.iter().map(ResultRow::from).collect())
}

/// Runs every scenario under every value and pools metrics per value.
pub fn sweep(
    scenarios: &[ScenarioSpec],
    param: SweepParam,
    values: &[f64],
    base: &PipelineConfig,
    predictor: &dyn TrajectoryPredictor,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(invalid("sweep needs at least one value"));
    }
    if scenarios.is_empty() {
        return Err(invalid("sweep needs at least one scenario"));
    }
    let rendered: Vec<Scenario> = scenarios.par_iter().map(simulate).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|v| (0..rendered.len()).map(move |s| (v, s)))
        .collect();
    // Collected in job order, so pooling is independent of scheduling.
    let per_job: Vec<(MetricsAccumulator, usize, usize)> = jobs
        .par_iter()
        .map(|&(v, s)| {
            let cfg = param.apply(base, values[v]);
            let rows = track_scenario(&rendered[s], predictor, &cfg)?;
            let acc = accumulate(&rows, &rendered[s].truth)?;
            let (hits, total) = post_occlusion_hits(&rows, &rendered[s].truth, 0.5)?;
            Ok((acc, hits, total))
        })
        .collect::<Result<_>>()?;
    Ok(values
        .iter()
        .enumerate()
        .map(|(v, &value)| {
            let mut acc = MetricsAccumulator::default();
            let (mut hits, mut total) = (0, 0);
            for (a, h, t) in &per_job[v * rendered.len()..(v + 1) * rendered.len()] {
                acc.merge(a);
                hits += h;
                total += t;
            }
            SweepRow {
                value,
                report: acc.report(),
                post_occlusion_success: (total > 0).then(|| hits as f64 / total as f64),
            }
        })
        .collect())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Plot-ready table. `mean_iou` and `failures` are the accuracy and
/// robustness analogues; expected average overlap is not computed.
pub fn write_sweep_csv(out: impl Write, param: SweepParam, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "parameter",
        "value",
        "frames",
        "mean_iou",
        "failures",
        "occlusion_precision",
        "occlusion_recall",
        "predictor_ade",
        "post_occlusion_success",
    ])?;
    for r in rows {
        w.write_record([
            param.name().to_string(),
            r.value.to_string(),
            r.report.frames.to_string(),
            r.report.mean_iou.to_string(),
            r.report.failures.to_string(),
            r.report.occlusion_precision.to_string(),
            r.report.occlusion_recall.to_string(),
            opt(r.report.predictor_ade),
            opt(r.post_occlusion_success),
        ])?;
    }
    w.flush()?;
    Ok(())
}
