//! Privacy regions, random column flips and their ternary code.

use crate::keys::{KeyStream, MaskSeed};
use crate::{Error, Result};

/// Default ratio `‖Bw‖₂ / ‖Ãs‖₂` used to size the embedding amplitude.
pub const DEFAULT_EMBEDDING_RATIO: f64 = 0.085;

/// Axis-aligned rectangle in original image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self { x, y, width, height }
    }

    fn fits(&self, image_width: usize, image_height: usize) -> bool {
        self.x
            .checked_add(self.width)
            .is_some_and(|r| r <= image_width)
            && self
                .y
                .checked_add(self.height)
                .is_some_and(|b| b <= image_height)
    }
}

/// Ordered set of privacy-sensitive pixel indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RegionSet {
    /// Strictly increasing row-major indices into the padded grid.
    pub indices: Vec<usize>,
    pub rects: Vec<Rect>,
}

impl RegionSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The same pixels as row-major indices into an unpadded image of the
    /// given width, used for zone metrics.
    pub fn pixel_indices(&self, width: usize) -> Vec<usize> {
        rect_indices(&self.rects, width)
    }
}

fn rect_indices(rects: &[Rect], stride: usize) -> Vec<usize> {
    let mut indices: Vec<usize> = rects
        .iter()
        .flat_map(|r| {
            (r.y..r.y + r.height).flat_map(move |row| (r.x..r.x + r.width).map(move |col| row * stride + col))
        })
        .collect();
    indices.sort_unstable();
    indices.dedup();
    indices
}

/// Builds the region set from rectangles on a `width × height` image that
/// sits in the top-left corner of a `padded_side × padded_side` grid.
pub fn region_from_rects(
    rects: &[Rect],
    width: usize,
    height: usize,
    padded_side: usize,
) -> Result<RegionSet> {
    if width > padded_side || height > padded_side {
        return Err(Error::InvalidDimensions(format!(
            "{width}x{height} image does not fit a {padded_side}-pixel padded grid"
        )));
    }
    for r in rects {
        if !r.fits(width, height) {
            return Err(Error::RectOutOfBounds {
                x: r.x,
                y: r.y,
                width: r.width,
                height: r.height,
                image_width: width,
                image_height: height,
            });
        }
    }
    Ok(RegionSet {
        indices: rect_indices(rects, padded_side),
        rects: rects.to_vec(),
    })
}

/// Per-region-pixel flip flags; `true` means the pixel's column of `A` is
/// negated.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FlipSet(pub Vec<bool>);

impl FlipSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn flipped(&self) -> usize {
        self.0.iter().filter(|&&f| f).count()
    }

    /// Number of positions where `self` and `other` agree.
    pub fn agreement(&self, other: &FlipSet) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a == b).count()
    }
}

/// Draws one flip per region pixel: flipped with probability `1 - p`.
pub fn gen_flips(region_size: usize, mask_seed: &MaskSeed) -> FlipSet {
    let mut stream = KeyStream::new(mask_seed.seed);
    FlipSet((0..region_size).map(|_| stream.unit() >= mask_seed.p).collect())
}

/// Ternary code of a flip set: `+a` untouched, `-a` flipped, `0` padding.
#[derive(Debug, Clone, PartialEq)]
pub struct TernaryMessage {
    pub w: Vec<f64>,
    pub amplitude: f64,
}

pub fn encode_mask(flips: &FlipSet, amplitude: f64, capacity: usize) -> Result<TernaryMessage> {
    if flips.len() > capacity {
        return Err(Error::CapacityExceeded {
            region: flips.len(),
            capacity,
        });
    }
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "embedding amplitude {amplitude} must be positive"
        )));
    }
    let mut w = vec![0.0; capacity];
    for (slot, &flip) in w.iter_mut().zip(&flips.0) {
        *slot = if flip { -amplitude } else { amplitude };
    }
    Ok(TernaryMessage { w, amplitude })
}

/// Result of reading flips back from an estimated message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedMask {
    pub flips: FlipSet,
    /// Active symbols that came back as exactly zero; they decode as
    /// "not flipped".
    pub ambiguous: usize,
}

pub fn decode_mask(w_hat: &[f64], region_size: usize) -> Result<DecodedMask> {
    if region_size > w_hat.len() {
        return Err(Error::CapacityExceeded {
            region: region_size,
            capacity: w_hat.len(),
        });
    }
    let active = &w_hat[..region_size];
    Ok(DecodedMask {
        flips: FlipSet(active.iter().map(|&v| v < 0.0).collect()),
        ambiguous: active.iter().filter(|&&v| v == 0.0).count(),
    })
}

/// Amplitude `a` such that `‖Bw‖₂ = ratio · reference_norm` for any flip
/// pattern, given orthonormal embedding columns.
pub fn compute_amplitude(ratio: f64, reference_norm: f64, region_size: usize) -> Result<f64> {
    if region_size == 0 {
        return Err(Error::EmptyRegion);
    }
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "embedding ratio {ratio} must be positive"
        )));
    }
    if !(reference_norm > 0.0 && reference_norm.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "reference norm {reference_norm} must be positive"
        )));
    }
    Ok(ratio * reference_norm / (region_size as f64).sqrt())
}
