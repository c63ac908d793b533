//! Normalized grayscale frames and binary PGM (P5) I/O.

use std::io::{Read, Write};

use crate::{Error, Result};

/// A grayscale frame with samples normalized to `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions(format!(
                "image dimensions {width}x{height} must be positive"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::MalformedImage(format!(
                "sample {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image, clamping every sample into `[0, 1]` (NaN becomes 0).
    pub fn from_clipped(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        let pixels = pixels
            .into_iter()
            .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) })
            .collect();
        Self::new(width, height, pixels)
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

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Copies the frame into the top-left corner of a zeroed
    /// `side × side` grid.
    pub fn padded(&self, side: usize) -> Vec<f64> {
        let mut out = vec![0.0; side * side];
        for (row, chunk) in self.pixels.chunks(self.width).enumerate() {
            out[row * side..row * side + self.width].copy_from_slice(chunk);
        }
        out
    }

    /// Inverse of [`GrayImage::padded`], clipping to `[0, 1]`.
    pub fn from_padded(grid: &[f64], side: usize, width: usize, height: usize) -> Result<Self> {
        if width > side || height > side || grid.len() != side * side {
            return Err(Error::DimensionMismatch(format!(
                "cannot crop {width}x{height} from a {side}-pixel grid of {} samples",
                grid.len()
            )));
        }
        let mut pixels = Vec::with_capacity(width * height);
        for row in 0..height {
            pixels.extend_from_slice(&grid[row * side..row * side + width]);
        }
        Self::from_clipped(width, height, pixels)
    }

    /// Reads a binary PGM (8- or 16-bit).
    pub fn read_pgm<R: Read>(mut reader: R) -> Result<Self> {
        let mut bytes = Vec::new();
        reader
            .read_to_end(&mut bytes)
            .map_err(|e| Error::MalformedImage(e.to_string()))?;
        parse_pgm(&bytes)
    }

    /// Writes a binary PGM with the given maximum value (255 or 65535).
    pub fn write_pgm<W: Write>(&self, mut writer: W, maxval: u16) -> std::io::Result<()> {
        write!(writer, "P5\n{} {}\n{}\n", self.width, self.height, maxval)?;
        let scale = maxval as f64;
        let mut data = Vec::with_capacity(self.pixels.len() * 2);
        for &v in &self.pixels {
            let q = (v * scale).round() as u16;
            if maxval < 256 {
                data.push(q as u8);
            } else {
                data.extend_from_slice(&q.to_be_bytes());
            }
        }
        writer.write_all(&data)
    }
}

fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let bad = |msg: &str| Error::MalformedImage(msg.to_string());
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(bad("not a binary PGM (missing P5 magic)"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("header value out of range"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("missing whitespace after header"));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval must be in 1..=65535"));
    }
    let sample_bytes = if maxval < 256 { 1 } else { 2 };
    let count = width
        .checked_mul(height)
        .ok_or_else(|| bad("dimensions overflow"))?;
    let data = &bytes[pos..];
    if data.len() < count * sample_bytes {
        return Err(bad("truncated pixel data"));
    }
    let scale = maxval as f64;
    let pixels = (0..count)
        .map(|i| {
            let raw = if sample_bytes == 1 {
                data[i] as usize
            } else {
                u16::from_be_bytes([data[2 * i], data[2 * i + 1]]) as usize
            };
            (raw.min(maxval)) as f64 / scale
        })
        .collect();
    GrayImage::new(width, height, pixels)
}
