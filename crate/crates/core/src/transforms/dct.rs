//! Orthonormal DCT-II of arbitrary length, computed through a complex FFT
//! of the same length (even/odd reordering followed by a quarter-sample
//! twiddle). The scalar FFT planner is used so results are bit-identical
//! across CPUs.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlannerScalar};

use crate::{Error, Result};

/// A planned orthonormal DCT-II of a fixed length.
///
/// The plan is immutable and can be shared between threads; every call
/// allocates its own scratch.
#[derive(Clone)]
pub struct Dct {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    // e^{-iπk/(2N)}
    twiddles: Vec<Complex64>,
}

impl std::fmt::Debug for Dct {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dct").field("len", &self.len).finish()
    }
}

impl Dct {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::EmptyInput);
        }
        let mut planner = FftPlannerScalar::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let twiddles = (0..len)
            .map(|k| {
                let angle = -std::f64::consts::PI * k as f64 / (2.0 * len as f64);
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        Ok(Self {
            len,
            forward,
            inverse,
            twiddles,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn scale(&self, k: usize) -> f64 {
        let n = self.len as f64;
        if k == 0 {
            (1.0 / n).sqrt()
        } else {
            (2.0 / n).sqrt()
        }
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// Orthonormal DCT-II.
    pub fn forward(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        let n = self.len;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (j, pair) in v.chunks(2).enumerate() {
            buf[j] = Complex64::new(pair[0], 0.0);
            if let Some(&odd) = pair.get(1) {
                buf[n - 1 - j] = Complex64::new(odd, 0.0);
            }
        }
        self.forward.process(&mut buf);
        Ok(buf
            .iter()
            .zip(&self.twiddles)
            .enumerate()
            .map(|(k, (b, t))| (b * t).re * self.scale(k))
            .collect())
    }

    /// Transpose of [`Dct::forward`], which is also its inverse (DCT-III).
    pub fn adjoint(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check(coeffs)?;
        let n = self.len;
        let raw = |k: usize| if k < n { coeffs[k] / self.scale(k) } else { 0.0 };
        let mut buf: Vec<Complex64> = (0..n)
            .map(|k| Complex64::new(raw(k), -raw(n - k)) * self.twiddles[k].conj())
            .collect();
        self.inverse.process(&mut buf);
        let norm = 1.0 / n as f64;
        let mut out = vec![0.0; n];
        for j in 0..n.div_ceil(2) {
            out[2 * j] = buf[j].re * norm;
        }
        for j in 0..n / 2 {
            out[2 * j + 1] = buf[n - 1 - j].re * norm;
        }
        Ok(out)
    }
}

/// Orthonormal DCT-II of `v` (plans on every call; use [`Dct`] in loops).
pub fn dct_fwd(v: &[f64]) -> Result<Vec<f64>> {
    Dct::new(v.len())?.forward(v)
}

/// Transpose (= inverse) of [`dct_fwd`].
pub fn dct_adj(v: &[f64]) -> Result<Vec<f64>> {
    Dct::new(v.len())?.adjoint(v)
}
