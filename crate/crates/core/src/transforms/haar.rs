//! Multilevel orthonormal 2-D Haar wavelet transform.
//!
//! Coefficients use the usual pyramid layout: after each level the
//! top-left quadrant of the active window holds the approximation band, the
//! top-right the horizontal-detail band, the bottom-left the vertical-detail
//! band and the bottom-right the diagonal band. The next level then recurses
//! into the top-left quadrant.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::{Error, Result};

/// Row-major image grid dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
}

impl Grid {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    pub fn square(side: usize) -> Self {
        Self::new(side, side)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks that `levels` dyadic reductions fit the grid.
    pub fn check_levels(&self, levels: usize) -> Result<()> {
        if levels == 0 {
            return Err(Error::InvalidDimensions(
                "wavelet level count must be at least 1".into(),
            ));
        }
        let block = 1usize.checked_shl(levels as u32).unwrap_or(0);
        if self.width == 0
            || self.height == 0
            || block == 0
            || !self.width.is_multiple_of(block)
            || !self.height.is_multiple_of(block)
        {
            return Err(Error::DimensionNotDivisible {
                width: self.width,
                height: self.height,
                levels,
            });
        }
        Ok(())
    }
}

fn check(img: &[f64], grid: Grid, levels: usize) -> Result<()> {
    grid.check_levels(levels)?;
    if img.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            actual: img.len(),
        });
    }
    Ok(())
}

// One analysis step on `len` samples spaced `stride` apart.
fn analyze(data: &mut [f64], start: usize, stride: usize, len: usize, tmp: &mut [f64]) {
    let half = len / 2;
    for j in 0..half {
        let a = data[start + 2 * j * stride];
        let b = data[start + (2 * j + 1) * stride];
        tmp[j] = (a + b) * FRAC_1_SQRT_2;
        tmp[half + j] = (a - b) * FRAC_1_SQRT_2;
    }
    for (j, &v) in tmp[..len].iter().enumerate() {
        data[start + j * stride] = v;
    }
}

fn synthesize(data: &mut [f64], start: usize, stride: usize, len: usize, tmp: &mut [f64]) {
    let half = len / 2;
    for j in 0..half {
        let lo = data[start + j * stride];
        let hi = data[start + (half + j) * stride];
        tmp[2 * j] = (lo + hi) * FRAC_1_SQRT_2;
        tmp[2 * j + 1] = (lo - hi) * FRAC_1_SQRT_2;
    }
    for (j, &v) in tmp[..len].iter().enumerate() {
        data[start + j * stride] = v;
    }
}

/// Forward (analysis) transform of a row-major `grid` image.
pub fn dwt2_fwd(img: &[f64], grid: Grid, levels: usize) -> Result<Vec<f64>> {
    check(img, grid, levels)?;
    let mut out = img.to_vec();
    let mut tmp = vec![0.0; grid.width.max(grid.height)];
    let (mut w, mut h) = (grid.width, grid.height);
    for _ in 0..levels {
        for row in 0..h {
            analyze(&mut out, row * grid.width, 1, w, &mut tmp);
        }
        for col in 0..w {
            analyze(&mut out, col, grid.width, h, &mut tmp);
        }
        w /= 2;
        h /= 2;
    }
    Ok(out)
}

/// Inverse (synthesis) transform; also the adjoint of [`dwt2_fwd`].
pub fn dwt2_inv(coeffs: &[f64], grid: Grid, levels: usize) -> Result<Vec<f64>> {
    check(coeffs, grid, levels)?;
    let mut out = coeffs.to_vec();
    let mut tmp = vec![0.0; grid.width.max(grid.height)];
    for level in (0..levels).rev() {
        let w = grid.width >> level;
        let h = grid.height >> level;
        for col in 0..w {
            synthesize(&mut out, col, grid.width, h, &mut tmp);
        }
        for row in 0..h {
            synthesize(&mut out, row * grid.width, 1, w, &mut tmp);
        }
    }
    Ok(out)
}
