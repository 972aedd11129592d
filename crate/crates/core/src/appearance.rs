//! Template-correlation appearance model.
//!
//! Three feature levels are emulated by Gaussian smoothing at σ = 1, 2 and 4
//! px followed by normalized cross-correlation (NCC) of the template against
//! the search region. Fine levels respond sharply and noisily, the coarse
//! level smoothly; the coarse level also supplies the positive-class score
//! and the location estimate.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frame::{BoundingBox, Frame};
use crate::heatmap::ResponseMap;

/// Small owned grayscale grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppearanceConfig {
    /// Search region size as a multiple of the box size.
    pub context: f64,
    /// Side of the common response grid.
    pub grid: usize,
    pub sigmas: [f64; 3],
    /// Windows whose standard deviation falls below this fraction of the
    /// template's are treated as textureless (NCC = 0).
    pub min_std_ratio: f64,
}

impl Default for AppearanceConfig {
    fn default() -> Self {
        Self {
            context: 2.0,
            grid: 17,
            sigmas: [1.0, 2.0, 4.0],
            min_std_ratio: 0.1,
        }
    }
}

impl AppearanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.context >= 1.0) {
            return Err(invalid("search context must be at least 1"));
        }
        if self.grid == 0 {
            return Err(invalid("response grid must be positive"));
        }
        if self.sigmas.iter().any(|s| !(*s >= 0.0)) {
            return Err(invalid("smoothing sigmas must be non-negative"));
        }
        if !(self.min_std_ratio >= 0.0) {
            return Err(invalid("min_std_ratio must be non-negative"));
        }
        Ok(())
    }
}

/// Target appearance cut from the first frame, raw and per smoothing level.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub patch: Patch,
    /// Pixel-aligned box the patch was cut from.
    pub origin_box: BoundingBox,
    levels: [Patch; 3],
}

impl Template {
    pub fn levels(&self) -> &[Patch; 3] {
        &self.levels
    }

    /// Template from an isolated patch; smoothing replicates the patch edges.
    pub fn from_patch(patch: Patch, cfg: &AppearanceConfig) -> Result<Self> {
        if patch.width == 0 || patch.height == 0 || patch.data.len() != patch.width * patch.height {
            return Err(invalid("template patch has inconsistent dimensions"));
        }
        let frame = Frame::new(patch.width, patch.height, patch.data.clone())?;
        let levels = cfg
            .sigmas
            .map(|s| blur_region(&frame, 0, 0, patch.width, patch.height, s));
        let origin_box = BoundingBox::new(
            patch.width as f64 / 2.0,
            patch.height as f64 / 2.0,
            patch.width as f64,
            patch.height as f64,
        )?;
        Ok(Self {
            patch,
            origin_box,
            levels,
        })
    }
}

/// Integer pixel bounds covering `b`: floor of the origin, ceil of the extent.
fn pixel_bounds(b: &BoundingBox) -> (isize, isize, isize, isize) {
    (
        b.left().floor() as isize,
        b.top().floor() as isize,
        b.right().ceil() as isize,
        b.bottom().ceil() as isize,
    )
}

/// Cuts the template; smoothed levels see the surrounding frame context.
pub fn crop_template(
    frame: &Frame,
    bbox: &BoundingBox,
    cfg: &AppearanceConfig,
) -> Result<Template> {
    let (x0, y0, x1, y1) = pixel_bounds(bbox);
    if x0 < 0
        || y0 < 0
        || x1 > frame.width() as isize
        || y1 > frame.height() as isize
        || x1 <= x0
        || y1 <= y0
    {
        return Err(invalid(format!(
            "box [{x0},{x1})x[{y0},{y1}) outside {}x{} frame",
            frame.width(),
            frame.height()
        )));
    }
    let (x0, y0) = (x0 as usize, y0 as usize);
    let (w, h) = ((x1 as usize) - x0, (y1 as usize) - y0);
    let data = (y0..y0 + h)
        .flat_map(|y| (x0..x0 + w).map(move |x| (x, y)))
        .map(|(x, y)| frame.get(x, y))
        .collect();
    let levels = cfg.sigmas.map(|s| blur_region(frame, x0, y0, w, h, s));
    Ok(Template {
        patch: Patch {
            width: w,
            height: h,
            data,
        },
        origin_box: BoundingBox::new(
            x0 as f64 + w as f64 / 2.0,
            y0 as f64 + h as f64 / 2.0,
            w as f64,
            h as f64,
        )?,
        levels,
    })
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.into_iter().map(|v| v / sum).collect()
}

/// Gaussian-smoothed copy of the frame region `[x0, x0+w) × [y0, y0+h)`,
/// reading real frame pixels around it and replicating frame edges.
fn blur_region(frame: &Frame, x0: usize, y0: usize, w: usize, h: usize, sigma: f64) -> Patch {
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let (x0, y0) = (x0 as isize, y0 as isize);
    let ew = w + 2 * r as usize;
    // Horizontal pass over the rows the vertical pass will need.
    let mut tmp = vec![0.0; ew * (h + 2 * r as usize)];
    for (j, dy) in (-r..h as isize + r).enumerate() {
        for i in 0..w {
            let x = x0 + i as isize;
            let mut acc = 0.0;
            for (t, kv) in k.iter().enumerate() {
                acc += kv * frame.get_clamped(x + t as isize - r, y0 + dy);
            }
            tmp[j * ew + i] = acc;
        }
    }
    let mut data = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, kv) in k.iter().enumerate() {
                acc += kv * tmp[(y + t) * ew + x];
            }
            data[y * w + x] = acc;
        }
    }
    Patch {
        width: w,
        height: h,
        data,
    }
}

/// Dense NCC of `tpl` over every fully-contained offset in `region`.
/// Output is `(rows, cols, values)` with values in [−1, 1].
fn ncc_map(region: &Patch, tpl: &Patch, min_std_ratio: f64) -> (usize, usize, Vec<f64>) {
    let rows = region.height - tpl.height + 1;
    let cols = region.width - tpl.width + 1;
    let n = (tpl.width * tpl.height) as f64;
    let t_mean = tpl.data.iter().sum::<f64>() / n;
    let t_centered: Vec<f64> = tpl.data.iter().map(|v| v - t_mean).collect();
    let t_ss: f64 = t_centered.iter().map(|v| v * v).sum();
    let mut out = vec![0.0; rows * cols];
    if t_ss <= f64::EPSILON * n {
        return (rows, cols, out);
    }
    let t_norm = t_ss.sqrt();
    let floor_ss = min_std_ratio * min_std_ratio * t_ss;
    for oy in 0..rows {
        for ox in 0..cols {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut cross = 0.0;
            for ty in 0..tpl.height {
                let row = &region.data[(oy + ty) * region.width + ox..][..tpl.width];
                let trow = &t_centered[ty * tpl.width..][..tpl.width];
                for (s, t) in row.iter().zip(trow) {
                    sum += s;
                    sum_sq += s * s;
                    cross += s * t;
                }
            }
            let s_ss = (sum_sq - sum * sum / n).max(0.0);
            if s_ss <= floor_ss || s_ss <= f64::EPSILON * n {
                continue;
            }
            out[oy * cols + ox] = (cross / (t_norm * s_ss.sqrt())).clamp(-1.0, 1.0);
        }
    }
    (rows, cols, out)
}

/// Bilinear resampling of a `rows × cols` grid onto `n × n`.
fn resample(rows: usize, cols: usize, values: &[f64], n: usize) -> Vec<f64> {
    if rows == n && cols == n {
        return values.to_vec();
    }
    let coord = |g: usize, len: usize| -> f64 {
        if n == 1 || len == 1 {
            (len as f64 - 1.0) / 2.0
        } else {
            g as f64 * (len as f64 - 1.0) / (n as f64 - 1.0)
        }
    };
    let mut out = Vec::with_capacity(n * n);
    for r in 0..n {
        let y = coord(r, rows);
        let (y0, fy) = (y.floor() as usize, y - y.floor());
        let y1 = (y0 + 1).min(rows - 1);
        for c in 0..n {
            let x = coord(c, cols);
            let (x0, fx) = (x.floor() as usize, x - x.floor());
            let x1 = (x0 + 1).min(cols - 1);
            let v = values[y0 * cols + x0] * (1.0 - fy) * (1.0 - fx)
                + values[y0 * cols + x1] * (1.0 - fy) * fx
                + values[y1 * cols + x0] * fy * (1.0 - fx)
                + values[y1 * cols + x1] * fy * fx;
            out.push(v);
        }
    }
    out
}

/// Where the search region sits in the frame and how grid cells map to pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchWindow {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
    /// Pixels per grid cell along x and y.
    pub stride_x: f64,
    pub stride_y: f64,
    pub template_w: usize,
    pub template_h: usize,
}

impl SearchWindow {
    /// Frame-space center of the template placed at grid cell (row, col).
    pub fn cell_center(&self, row: usize, col: usize) -> [f64; 2] {
        [
            self.x0 as f64 + col as f64 * self.stride_x + self.template_w as f64 / 2.0,
            self.y0 as f64 + row as f64 * self.stride_y + self.template_h as f64 / 2.0,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PyramidResponse {
    pub maps: [ResponseMap; 3],
    /// Positive-class score in [0, 1] from the coarse level.
    pub score: f64,
    pub window: SearchWindow,
}

fn search_window(
    frame: &Frame,
    template: &Template,
    search_box: &BoundingBox,
    cfg: &AppearanceConfig,
) -> Result<SearchWindow> {
    let tw = template.patch.width;
    let th = template.patch.height;
    let width = ((search_box.w * cfg.context).round() as usize).max(tw);
    let height = ((search_box.h * cfg.context).round() as usize).max(th);
    if width > frame.width() || height > frame.height() {
        return Err(Error::TrackingFailure(format!(
            "search region {width}x{height} does not fit a {}x{} frame",
            frame.width(),
            frame.height()
        )));
    }
    if !search_box.cx.is_finite() || !search_box.cy.is_finite() {
        return Err(Error::TrackingFailure(
            "search box center is not finite".into(),
        ));
    }
    let clamp_origin = |c: f64, size: usize, limit: usize| -> usize {
        let o = (c - size as f64 / 2.0).round();
        o.clamp(0.0, (limit - size) as f64) as usize
    };
    let rows = height - th + 1;
    let cols = width - tw + 1;
    let stride = |len: usize| {
        if cfg.grid > 1 {
            (len as f64 - 1.0) / (cfg.grid as f64 - 1.0)
        } else {
            0.0
        }
    };
    Ok(SearchWindow {
        x0: clamp_origin(search_box.cx, width, frame.width()),
        y0: clamp_origin(search_box.cy, height, frame.height()),
        width,
        height,
        stride_x: stride(cols),
        stride_y: stride(rows),
        template_w: tw,
        template_h: th,
    })
}

/// Correlates the template against the region around `search_box` at all three levels.
pub fn response_pyramid(
    frame: &Frame,
    template: &Template,
    search_box: &BoundingBox,
    cfg: &AppearanceConfig,
) -> Result<PyramidResponse> {
    let window = search_window(frame, template, search_box, cfg)?;
    let mut maps = Vec::with_capacity(3);
    for (level, (sigma, tpl)) in cfg.sigmas.iter().zip(&template.levels).enumerate() {
        let region = blur_region(
            frame,
            window.x0,
            window.y0,
            window.width,
            window.height,
            *sigma,
        );
        let (rows, cols, ncc) = ncc_map(&region, tpl, cfg.min_std_ratio);
        let values = resample(rows, cols, &ncc, cfg.grid);
        maps.push(ResponseMap::new(cfg.grid, level as u8 + 1, values)?);
    }
    let maps: [ResponseMap; 3] = maps.try_into().expect("three levels");
    let top = maps[2]
        .values()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let score = ((top + 1.0) / 2.0).clamp(0.0, 1.0);
    Ok(PyramidResponse {
        maps,
        score,
        window,
    })
}

/// Box centered on the coarse-level argmax, keeping the previous size.
pub fn locate(response: &PyramidResponse, search_box: &BoundingBox) -> BoundingBox {
    let peak = response.maps[2].argmax();
    search_box.with_center(response.window.cell_center(peak.row, peak.col))
}
