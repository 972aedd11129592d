//! Response maps and peak extraction.
//!
//! A response map is the n×n similarity surface produced at one feature level.
//! Peak extraction keeps the strongest cells, discards those that are weak
//! relative to the top peak, suppresses cells inside the 2-cell neighborhood of
//! an already accepted peak and finally measures how far each surviving
//! interferer sits from the top peak.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Fraction of the top score a secondary peak must exceed to be retained.
pub const LOW_PEAK_RATIO: f64 = 0.75;
/// Chebyshev radius (in grid cells) inside which two peaks are merged.
pub const NEIGHBOR_RADIUS: usize = 2;
/// Number of candidate peaks taken per level before filtering.
pub const DEFAULT_TOP_K: usize = 4;

/// Square grid of finite scores tagged with the feature level it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseMap {
    size: usize,
    level: u8,
    values: Vec<f64>,
}

impl ResponseMap {
    pub fn new(size: usize, level: u8, values: Vec<f64>) -> Result<Self> {
        if size == 0 {
            return Err(invalid("response map size must be positive"));
        }
        if !(1..=3).contains(&level) {
            return Err(invalid(format!("level must be 1, 2 or 3, got {level}")));
        }
        if values.len() != size * size {
            return Err(invalid(format!(
                "expected {} values for a {size}x{size} map, got {}",
                size * size,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite score at flat index {bad}")));
        }
        Ok(Self {
            size,
            level,
            values,
        })
    }

    /// Builds a map by evaluating `f(row, col)` on every cell.
    pub fn from_fn(size: usize, level: u8, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(size * size);
        for r in 0..size {
            for c in 0..size {
                values.push(f(r, c));
            }
        }
        Self::new(size, level, values)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn level(&self) -> u8 {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.size + col]
    }

    /// Cell with the highest score; ties go to the smaller flat index.
    pub fn argmax(&self) -> Peak {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        self.peak_at(best)
    }

    fn peak_at(&self, flat: usize) -> Peak {
        Peak {
            row: flat / self.size,
            col: flat % self.size,
            score: self.values[flat],
        }
    }

    /// Plain-text grid: a `n level` header line, then n rows of n scores.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.size, self.level);
        for row in self.values.chunks(self.size) {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty response map".into()))?;
        let mut head = header.split_whitespace();
        let parse_usize = |tok: Option<&str>, what: &str| -> Result<usize> {
            tok.ok_or_else(|| Error::Format(format!("missing {what} in header")))?
                .parse::<usize>()
                .map_err(|e| Error::Format(format!("bad {what}: {e}")))
        };
        let size = parse_usize(head.next(), "size")?;
        let level = parse_usize(head.next(), "level")?;
        if head.next().is_some() {
            return Err(Error::Format("trailing tokens in header".into()));
        }
        let mut values = Vec::with_capacity(size * size);
        for (r, line) in lines.enumerate() {
            let row: std::result::Result<Vec<f64>, _> =
                line.split_whitespace().map(str::parse::<f64>).collect();
            let row = row.map_err(|e| Error::Format(format!("row {r}: {e}")))?;
            if row.len() != size {
                return Err(Error::Format(format!(
                    "row {r} has {} values, expected {size}",
                    row.len()
                )));
            }
            values.extend(row);
        }
        let level = u8::try_from(level).map_err(|_| Error::Format("level out of range".into()))?;
        Self::new(size, level, values)
    }
}

/// A single grid cell picked out of a response map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub row: usize,
    pub col: usize,
    pub score: f64,
}

impl Peak {
    pub fn new(row: usize, col: usize, score: f64) -> Self {
        Self { row, col, score }
    }

    /// Euclidean distance between the two cells, in grid units.
    pub fn distance(&self, other: &Peak) -> f64 {
        let dr = self.row as f64 - other.row as f64;
        let dc = self.col as f64 - other.col as f64;
        (dr * dr + dc * dc).sqrt()
    }
}

/// Peaks surviving filtering and suppression, strongest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    peaks: Vec<Peak>,
    source_level: u8,
}

impl PeakSet {
    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn source_level(&self) -> u8 {
        self.source_level
    }

    pub fn top(&self) -> &Peak {
        &self.peaks[0]
    }

    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn with_level(mut self, level: u8) -> Self {
        self.source_level = level;
        self
    }
}

/// The `k` highest cells, descending; equal scores keep flat-index order.
pub fn get_top(map: &ResponseMap, k: usize) -> Result<Vec<Peak>> {
    let cells = map.size * map.size;
    if k == 0 || k > cells {
        return Err(invalid(format!("k must be in 1..={cells}, got {k}")));
    }
    let mut order: Vec<usize> = (0..cells).collect();
    // Stable sort on a descending key keeps the smaller flat index first on ties.
    order.sort_by(|&a, &b| map.values[b].total_cmp(&map.values[a]));
    Ok(order[..k].iter().map(|&i| map.peak_at(i)).collect())
}

/// Keeps the top peak plus every later peak scoring strictly above 0.75 × top.
pub fn remove_low_points(peaks: &[Peak]) -> Result<Vec<Peak>> {
    let (top, rest) = peaks
        .split_first()
        .ok_or_else(|| invalid("cannot filter an empty peak list"))?;
    let floor = LOW_PEAK_RATIO * top.score;
    let mut kept = vec![*top];
    kept.extend(rest.iter().filter(|p| p.score > floor).copied());
    Ok(kept)
}

/// True when both row and column differ by at most two cells.
pub fn is_neighbor(a: &Peak, b: &Peak) -> bool {
    a.row.abs_diff(b.row) <= NEIGHBOR_RADIUS && a.col.abs_diff(b.col) <= NEIGHBOR_RADIUS
}

/// Greedy suppression in score order: a peak survives unless it neighbors one
/// that already survived.
pub fn merge_neighbors(peaks: &[Peak]) -> Result<PeakSet> {
    if peaks.is_empty() {
        return Err(invalid("cannot merge an empty peak list"));
    }
    let mut kept: Vec<Peak> = Vec::with_capacity(peaks.len());
    for p in peaks {
        if !kept.iter().any(|k| is_neighbor(k, p)) {
            kept.push(*p);
        }
    }
    Ok(PeakSet {
        peaks: kept,
        source_level: 1,
    })
}

/// Distance from the top peak to each other retained peak, in list order.
/// Empty when there is no interferer.
pub fn compute_distances(peaks: &PeakSet) -> Vec<f64> {
    match peaks.peaks.split_first() {
        Some((top, rest)) => rest.iter().map(|p| top.distance(p)).collect(),
        None => Vec::new(),
    }
}

/// Full pipeline: top-k, low-peak rejection, neighborhood merging.
pub fn extract_peaks(map: &ResponseMap, k: usize) -> Result<PeakSet> {
    let top = get_top(map, k)?;
    let filtered = remove_low_points(&top)?;
    Ok(merge_neighbors(&filtered)?.with_level(map.level))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(peaks: &[Peak]) -> Vec<f64> {
        peaks.iter().map(|p| p.score).collect()
    }

    #[test]
    fn flat_index_maps_to_row_and_col() {
        let map =
            ResponseMap::from_fn(5, 1, |r, c| if r == 1 && c == 2 { 9.0 } else { 0.0 }).unwrap();
        let top = get_top(&map, 1).unwrap();
        assert_eq!((top[0].row, top[0].col), (1, 2));
        // flat index 7 on a 5-wide grid
        assert_eq!(map.peak_at(7).row, 1);
        assert_eq!(map.peak_at(7).col, 2);
    }

    #[test]
    fn top_one_at_origin() {
        let map = ResponseMap::from_fn(4, 2, |r, c| -((r + c) as f64)).unwrap();
        let top = get_top(&map, 1).unwrap();
        assert_eq!(top, vec![Peak::new(0, 0, 0.0)]);
    }

    #[test]
    fn get_top_rejects_bad_k() {
        let map = ResponseMap::from_fn(3, 1, |_, _| 0.0).unwrap();
        assert!(get_top(&map, 0).is_err());
        assert!(get_top(&map, 10).is_err());
        assert_eq!(get_top(&map, 9).unwrap().len(), 9);
    }

    #[test]
    fn ties_prefer_smaller_flat_index() {
        let map = ResponseMap::from_fn(3, 1, |_, _| 1.0).unwrap();
        let top = get_top(&map, 3).unwrap();
        let cells: Vec<_> = top.iter().map(|p| (p.row, p.col)).collect();
        assert_eq!(cells, vec![(0, 0), (0, 1), (0, 2)]);
    }

    #[test]
    fn low_points_use_strict_threshold() {
        let mk = |s: &[f64]| {
            s.iter()
                .enumerate()
                .map(|(i, &v)| Peak::new(i, 0, v))
                .collect::<Vec<_>>()
        };
        assert_eq!(
            scores(&remove_low_points(&mk(&[1.0, 0.8, 0.76, 0.7])).unwrap()),
            vec![1.0, 0.8, 0.76]
        );
        assert_eq!(scores(&remove_low_points(&mk(&[1.0])).unwrap()), vec![1.0]);
        assert_eq!(
            scores(&remove_low_points(&mk(&[1.0, 0.75])).unwrap()),
            vec![1.0]
        );
        assert!(remove_low_points(&[]).is_err());
    }

    #[test]
    fn neighbor_boundaries() {
        let p = |r, c| Peak::new(r, c, 0.0);
        assert!(is_neighbor(&p(3, 3), &p(5, 5)));
        assert!(!is_neighbor(&p(3, 3), &p(6, 3)));
        assert!(is_neighbor(&p(4, 4), &p(4, 4)));
        assert!(is_neighbor(&p(5, 5), &p(3, 3)));
    }

    #[test]
    fn merge_drops_inner_neighbor() {
        let peaks = vec![
            Peak::new(2, 2, 1.0),
            Peak::new(3, 3, 0.9),
            Peak::new(10, 10, 0.85),
        ];
        let set = merge_neighbors(&peaks).unwrap();
        let cells: Vec<_> = set.peaks().iter().map(|p| (p.row, p.col)).collect();
        assert_eq!(cells, vec![(2, 2), (10, 10)]);
        assert_eq!(merge_neighbors(&peaks[..1]).unwrap().len(), 1);
        assert!(merge_neighbors(&[]).is_err());
    }

    #[test]
    fn distances_from_top() {
        let set = merge_neighbors(&[Peak::new(0, 0, 1.0), Peak::new(3, 4, 0.9)]).unwrap();
        assert_eq!(compute_distances(&set), vec![5.0]);
        let set = merge_neighbors(&[
            Peak::new(0, 0, 1.0),
            Peak::new(3, 4, 0.9),
            Peak::new(6, 8, 0.8),
        ])
        .unwrap();
        assert_eq!(compute_distances(&set), vec![5.0, 10.0]);
        let single = merge_neighbors(&[Peak::new(1, 1, 1.0)]).unwrap();
        assert!(compute_distances(&single).is_empty());
    }

    #[test]
    fn text_format_round_trip() {
        let map = ResponseMap::from_fn(3, 2, |r, c| r as f64 * 0.5 - c as f64 * 0.125).unwrap();
        let text = map.to_text();
        assert!(text.starts_with("3 2\n"));
        assert_eq!(ResponseMap::from_text(&text).unwrap(), map);
    }

    #[test]
    fn text_format_rejects_ragged_rows() {
        assert!(ResponseMap::from_text("2 1\n1 2\n3\n").is_err());
        assert!(ResponseMap::from_text("2 4\n1 2\n3 4\n").is_err());
        assert!(ResponseMap::from_text("").is_err());
    }

    #[test]
    fn construction_invariants() {
        assert!(ResponseMap::new(2, 1, vec![0.0; 3]).is_err());
        assert!(ResponseMap::new(2, 0, vec![0.0; 4]).is_err());
        assert!(ResponseMap::new(1, 1, vec![f64::NAN]).is_err());
    }
}
