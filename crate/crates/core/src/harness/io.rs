//! CSV tables exchanged between the CLI stages. All files carry a header row.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::BoundingBox;
use crate::pipeline::{FrameResult, Mode};
use crate::predictor::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub frame: u64,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub occluded_flag: bool,
}

impl TruthRow {
    pub fn bbox(&self) -> BoundingBox {
        BoundingBox {
            cx: self.cx,
            cy: self.cy,
            w: self.w,
            h: self.h,
        }
    }
}

/// One tracked frame as written to `results.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub frame: u64,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub mode: Mode,
    pub epsilon: Option<f64>,
    pub occluded: bool,
    pub iou: Option<f64>,
}

impl ResultRow {
    pub fn bbox(&self) -> BoundingBox {
        BoundingBox {
            cx: self.cx,
            cy: self.cy,
            w: self.w,
            h: self.h,
        }
    }
}

impl From<&FrameResult> for ResultRow {
    fn from(r: &FrameResult) -> Self {
        Self {
            frame: r.frame_id,
            cx: r.bbox.cx,
            cy: r.bbox.cy,
            w: r.bbox.w,
            h: r.bbox.h,
            mode: r.mode,
            epsilon: r.verdict.as_ref().map(|v| v.epsilon),
            occluded: r.verdict.as_ref().is_some_and(|v| v.occluded),
            iou: r.iou,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub frame: u64,
    pub dis: Option<f64>,
    pub score: f64,
    pub epsilon: f64,
    pub occluded: bool,
}

impl VerdictRow {
    pub fn from_result(r: &FrameResult) -> Option<Self> {
        r.verdict.as_ref().map(|v| Self {
            frame: r.frame_id,
            dis: v.dis,
            score: v.score,
            epsilon: v.epsilon,
            occluded: v.occluded,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub traj_id: u64,
    pub frame: u64,
    pub x: f64,
    pub y: f64,
}

pub fn write_rows<T: Serialize>(out: impl Write, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows, requiring the header to contain every expected column.
pub fn read_rows<T: DeserializeOwned>(input: impl Read, required: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if let Some(missing) = required.iter().find(|c| !headers.iter().any(|h| h == **c)) {
        return Err(Error::Format(format!("CSV header lacks column {missing}")));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn write_truth(out: impl Write, rows: &[TruthRow]) -> Result<()> {
    write_rows(out, rows)
}

pub fn read_truth(input: impl Read) -> Result<Vec<TruthRow>> {
    read_rows(input, &["frame", "cx", "cy", "w", "h", "occluded_flag"])
}

pub fn write_results(out: impl Write, rows: &[ResultRow]) -> Result<()> {
    write_rows(out, rows)
}

pub fn read_results(input: impl Read) -> Result<Vec<ResultRow>> {
    read_rows(
        input,
        &[
            "frame", "cx", "cy", "w", "h", "mode", "epsilon", "occluded", "iou",
        ],
    )
}

pub fn write_trajectories(out: impl Write, trajs: &[Trajectory]) -> Result<()> {
    let rows: Vec<TrajectoryRow> = trajs
        .iter()
        .enumerate()
        .flat_map(|(id, t)| {
            t.points()
                .iter()
                .zip(t.frame_ids())
                .map(move |(p, &f)| TrajectoryRow {
                    traj_id: id as u64,
                    frame: f,
                    x: p[0],
                    y: p[1],
                })
        })
        .collect();
    write_rows(out, &rows)
}

/// Groups rows by `traj_id` (ascending); rows within a trajectory are sorted by frame.
pub fn read_trajectories(input: impl Read) -> Result<Vec<Trajectory>> {
    let rows: Vec<TrajectoryRow> = read_rows(input, &["traj_id", "frame", "x", "y"])?;
    let mut groups: BTreeMap<u64, Vec<TrajectoryRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.traj_id).or_default().push(r);
    }
    groups
        .into_values()
        .map(|mut g| {
            g.sort_by_key(|r| r.frame);
            Trajectory::new(
                g.iter().map(|r| [r.x, r.y]).collect(),
                g.iter().map(|r| r.frame).collect(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_round_trip_with_blanks() {
        let rows = vec![
            ResultRow {
                frame: 1,
                cx: 1.5,
                cy: 2.0,
                w: 16.0,
                h: 16.0,
                mode: Mode::Predicting,
                epsilon: None,
                occluded: false,
                iou: Some(0.25),
            },
            ResultRow {
                frame: 2,
                cx: 3.0,
                cy: 2.0,
                w: 16.0,
                h: 16.0,
                mode: Mode::Tracking,
                epsilon: Some(0.9),
                occluded: true,
                iou: None,
            },
        ];
        let mut buf = Vec::new();
        write_results(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("frame,cx,cy,w,h,mode,epsilon,occluded,iou\n"));
        assert!(text.contains("PREDICTING"));
        assert_eq!(read_results(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn trajectories_group_by_id() {
        let csv = "traj_id,frame,x,y\n1,5,0,0\n0,0,1,1\n1,4,2,2\n0,1,3,3\n";
        let t = read_trajectories(csv.as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[1].points(), &[[2.0, 2.0], [0.0, 0.0]]);
        assert!(read_trajectories("id,frame,x,y\n0,0,0,0\n".as_bytes()).is_err());
    }
}
