//! Grayscale frames, boxes and binary PGM I/O.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Row-major grayscale image with intensities in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid("frame dimensions must be positive"));
        }
        if pixels.len() != width * height {
            return Err(invalid(format!(
                "pixel buffer has {} entries, expected {}",
                pixels.len(),
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Pixel with coordinates clamped to the frame (edge replication).
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.pixels[y * self.width + x] = v;
    }

    /// Rounds every pixel to the nearest of 256 gray levels.
    pub fn quantize_8bit(&mut self) {
        for p in &mut self.pixels {
            *p = (p.clamp(0.0, 1.0) * 255.0).round() / 255.0;
        }
    }

    /// Binary P5 encoding with maxval 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(
            self.pixels
                .iter()
                .map(|p| (p.clamp(0.0, 1.0) * 255.0).round() as u8),
        );
        out
    }

    /// Parses binary P5 with maxval up to 65535 (16-bit samples are big-endian).
    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
                if bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    pos += 1;
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Format("truncated PGM header".into()));
            }
            fields.push(
                std::str::from_utf8(&bytes[start..pos])
                    .map_err(|_| Error::Format("non-ASCII PGM header".into()))?,
            );
        }
        if fields[0] != "P5" {
            return Err(Error::Format(format!(
                "expected P5 magic, got {}",
                fields[0]
            )));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Format(format!("bad PGM header field {s}: {e}")))
        };
        let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
        if maxval == 0 || maxval > 65535 {
            return Err(Error::Format(format!("unsupported maxval {maxval}")));
        }
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        let bps = if maxval < 256 { 1 } else { 2 };
        let need = width * height * bps;
        let raster = bytes
            .get(pos..pos + need)
            .ok_or_else(|| Error::Format("truncated PGM raster".into()))?;
        let scale = maxval as f64;
        let pixels = if bps == 1 {
            raster.iter().map(|&b| b as f64 / scale).collect()
        } else {
            raster
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / scale)
                .collect()
        };
        Self::new(width, height, pixels)
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_pgm())?;
        Ok(())
    }

    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_pgm(&fs::read(path)?)
    }
}

/// Axis-aligned box given by its center and size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        if !(w > 0.0 && h > 0.0)
            || !cx.is_finite()
            || !cy.is_finite()
            || !w.is_finite()
            || !h.is_finite()
        {
            return Err(invalid(format!("invalid box ({cx}, {cy}, {w}, {h})")));
        }
        Ok(Self { cx, cy, w, h })
    }

    pub fn left(&self) -> f64 {
        self.cx - self.w / 2.0
    }

    pub fn top(&self) -> f64 {
        self.cy - self.h / 2.0
    }

    pub fn right(&self) -> f64 {
        self.cx + self.w / 2.0
    }

    pub fn bottom(&self) -> f64 {
        self.cy + self.h / 2.0
    }

    pub fn center(&self) -> [f64; 2] {
        [self.cx, self.cy]
    }

    pub fn with_center(&self, c: [f64; 2]) -> Self {
        Self {
            cx: c[0],
            cy: c[1],
            ..*self
        }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn intersects_frame(&self, width: usize, height: usize) -> bool {
        self.right() > 0.0
            && self.bottom() > 0.0
            && self.left() < width as f64
            && self.top() < height as f64
    }

    pub fn intersection(&self, other: &BoundingBox) -> f64 {
        let w = (self.right().min(other.right()) - self.left().max(other.left())).max(0.0);
        let h = (self.bottom().min(other.bottom()) - self.top().max(other.top())).max(0.0);
        w * h
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            return 0.0;
        }
        (inter / union).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_8bit() {
        let mut f = Frame::new(3, 2, vec![0.0, 0.25, 0.5, 0.75, 1.0, 0.1]).unwrap();
        f.quantize_8bit();
        let back = Frame::from_pgm(&f.to_pgm()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn pgm_reads_comments_and_16bit() {
        let mut bytes = b"P5\n# made by hand\n2 1\n65535\n".to_vec();
        bytes.extend_from_slice(&[0xff, 0xff, 0x00, 0x00]);
        let f = Frame::from_pgm(&bytes).unwrap();
        assert_eq!(f.pixels(), &[1.0, 0.0]);
        assert!(Frame::from_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(Frame::from_pgm(b"P5\n4 4\n255\n\x00").is_err());
    }

    #[test]
    fn iou_basics() {
        let a = BoundingBox::new(10.0, 10.0, 4.0, 4.0).unwrap();
        assert_eq!(a.iou(&a), 1.0);
        let b = BoundingBox::new(12.0, 10.0, 4.0, 4.0).unwrap();
        assert!((a.iou(&b) - 8.0 / 24.0).abs() < 1e-12);
        let far = BoundingBox::new(100.0, 10.0, 4.0, 4.0).unwrap();
        assert_eq!(a.iou(&far), 0.0);
        assert!(BoundingBox::new(0.0, 0.0, 0.0, 1.0).is_err());
    }
}
