//! Deterministic test frames.

use crate::image::GrayImage;
use crate::keys::KeyStream;
use crate::mask_codec::Rect;
use crate::transforms::{dwt2_inv, Grid};
use crate::Result;

pub const OFFICE_SIDE: usize = 128;

/// The head-and-shoulders box of [`office_frame`].
pub const OFFICE_FACE: Rect = Rect {
    x: 48,
    y: 16,
    width: 32,
    height: 32,
};

fn fill(px: &mut [f64], side: usize, r: Rect, v: f64) {
    for y in r.y..(r.y + r.height).min(side) {
        for x in r.x..(r.x + r.width).min(side) {
            px[y * side + x] = v;
        }
    }
}

fn ellipse(px: &mut [f64], side: usize, cx: f64, cy: f64, rx: f64, ry: f64, v: f64) {
    for y in 0..side {
        for x in 0..side {
            let dx = (x as f64 + 0.5 - cx) / rx;
            let dy = (y as f64 + 0.5 - cy) / ry;
            if dx * dx + dy * dy <= 1.0 {
                px[y * side + x] = v;
            }
        }
    }
}

/// A 128×128 piecewise-constant office scene: wall, window, shelf, desk,
/// monitor and a seated person whose head fills [`OFFICE_FACE`].
pub fn office_scene() -> GrayImage {
    let s = OFFICE_SIDE;
    let mut px = vec![0.70; s * s];
    let r = Rect::new;
    // floor
    fill(&mut px, s, r(0, 96, 128, 32), 0.38);
    // window with mullions
    fill(&mut px, s, r(88, 8, 32, 40), 0.94);
    fill(&mut px, s, r(103, 8, 2, 40), 0.5);
    fill(&mut px, s, r(88, 27, 32, 2), 0.5);
    // shelf
    fill(&mut px, s, r(4, 16, 24, 72), 0.44);
    for shelf_y in [16, 40, 64] {
        fill(&mut px, s, r(6, shelf_y + 4, 8, 16), 0.2);
        fill(&mut px, s, r(16, shelf_y + 8, 8, 12), 0.82);
    }
    // person: torso, neck, hair, face
    fill(&mut px, s, r(40, 52, 48, 44), 0.22);
    fill(&mut px, s, r(58, 44, 12, 8), 0.58);
    ellipse(&mut px, s, 64.0, 30.0, 14.0, 15.0, 0.16);
    ellipse(&mut px, s, 64.0, 33.0, 12.0, 13.0, 0.64);
    // desk and monitor
    fill(&mut px, s, r(0, 80, 128, 8), 0.28);
    fill(&mut px, s, r(8, 88, 4, 24), 0.28);
    fill(&mut px, s, r(116, 88, 4, 24), 0.28);
    fill(&mut px, s, r(92, 56, 28, 20), 0.08);
    fill(&mut px, s, r(104, 76, 4, 4), 0.3);
    GrayImage::new(s, s, px).expect("scene values are in [0, 1]")
}

/// Standard deviation of the sensor noise in [`office_frame`].
pub const OFFICE_NOISE: f64 = 0.005;
const OFFICE_NOISE_SEED: u64 = 0x0FF1CE;

/// [`office_scene`] plus fixed uniform sensor noise of standard deviation
/// `noise`, so that the frame is compressible rather than exactly sparse.
pub fn noisy_office_frame(noise: f64) -> GrayImage {
    let scene = office_scene();
    let mut rng = KeyStream::new(OFFICE_NOISE_SEED);
    let half_width = noise * 3f64.sqrt();
    let px = scene
        .pixels()
        .iter()
        .map(|v| v + half_width * (2.0 * rng.unit() - 1.0))
        .collect();
    GrayImage::from_clipped(scene.width(), scene.height(), px).expect("square frame")
}

/// The standard test frame: [`office_scene`] with [`OFFICE_NOISE`].
pub fn office_frame() -> GrayImage {
    noisy_office_frame(OFFICE_NOISE)
}

/// A `side × side` frame with exactly `k` non-zero Haar coefficients at
/// `levels` levels, stretched to span [0, 1]. The approximation band is
/// always part of the support and forms a checkerboard of bright and dark
/// blocks; the remaining coefficients are drawn from `seed`.
pub fn planted_sparse_frame(side: usize, levels: usize, k: usize, seed: u64) -> Result<GrayImage> {
    let grid = Grid::square(side);
    grid.check_levels(levels)?;
    let n = grid.len();
    let scale = (1usize << levels) as f64;
    // Approximation coefficients sit at the top-left of the Mallat layout.
    let approx: Vec<usize> = (0..side >> levels)
        .flat_map(|y| (0..side >> levels).map(move |x| y * side + x))
        .collect();
    let details: Vec<usize> = (0..n).filter(|i| !approx.contains(i)).collect();
    let k_detail = k.saturating_sub(approx.len()).min(details.len());

    let mut rng = KeyStream::new(seed);
    let mut coeffs = vec![0.0; n];
    // Bright and dark approximation blocks alternate so the frame has
    // high contrast.
    let phase = rng.below(2) as usize;
    for (j, &i) in approx.iter().enumerate() {
        let bright = (j + j / (side >> levels) + phase) % 2 == 1;
        coeffs[i] = scale * if bright { 0.8 } else { 0.2 };
    }
    for &pick in &rng.shuffle_prefix(details.len(), k_detail)[..k_detail] {
        let magnitude = 0.25 + 0.25 * rng.unit();
        let sign = if rng.below(2) == 0 { -1.0 } else { 1.0 };
        coeffs[details[pick]] = sign * magnitude;
    }
    let raw = dwt2_inv(&coeffs, grid, levels)?;
    let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // An affine stretch only moves the approximation band, so the support
    // is unchanged.
    let img = raw.iter().map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).collect();
    GrayImage::new(side, side, img)
}
