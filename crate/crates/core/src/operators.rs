//! Matrix-free linear operators of the codec.
//!
//! * [`Sensing`]: `A = S · N · P⁻¹`, rows `S` of the real noiselet `N`
//!   applied after scattering pixels through the key's permutation.
//! * [`Perturbed`]: `Ã = A + M = A · D`, where `D` negates the flipped
//!   region pixels (a column sign flip of `A` is a sign flip of the pixel).
//! * [`WaveletSynthesis`]: the sparsifying basis `Φ` (inverse Haar DWT).
//! * [`Embedding`] / [`Annihilator`]: `B` and `F`, complementary row sets of
//!   one orthonormal `m`-point DCT-II, so `F·B = 0`, `BᵀB = I`, `F·Fᵀ = I`.
//! * [`Compose`] chains two operators, e.g. `H = A·Φ` or `F·H`.

use crate::keys::{EmbeddingKey, SensingKey};
use crate::mask_codec::{FlipSet, RegionSet};
use crate::transforms::{dwt2_fwd, dwt2_inv, noiselet_in_place, Dct, Grid};
use crate::{Error, Result};

/// A real linear map `R^cols -> R^rows` with its transpose.
pub trait LinearOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>>;
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).apply(x)
    }
    fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        (**self).apply_adjoint(y)
    }
}

pub(crate) fn check_len(v: &[f64], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: v.len(),
        });
    }
    Ok(())
}

/// Operator defined by a pair of closures. Mostly useful in tests and for
/// plugging dense matrices into the solver.
pub struct FnOperator<F, G> {
    rows: usize,
    cols: usize,
    forward: F,
    adjoint: G,
}

impl<F, G> FnOperator<F, G>
where
    F: Fn(&[f64]) -> Vec<f64>,
    G: Fn(&[f64]) -> Vec<f64>,
{
    pub fn new(rows: usize, cols: usize, forward: F, adjoint: G) -> Self {
        Self {
            rows,
            cols,
            forward,
            adjoint,
        }
    }
}

impl<F, G> LinearOperator for FnOperator<F, G>
where
    F: Fn(&[f64]) -> Vec<f64>,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(x, self.cols)?;
        let out = (self.forward)(x);
        check_len(&out, self.rows)?;
        Ok(out)
    }
    fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(y, self.rows)?;
        let out = (self.adjoint)(y);
        check_len(&out, self.cols)?;
        Ok(out)
    }
}

/// `outer ∘ inner`.
pub struct Compose<O, I> {
    outer: O,
    inner: I,
}

impl<O: LinearOperator, I: LinearOperator> Compose<O, I> {
    pub fn new(outer: O, inner: I) -> Result<Self> {
        if outer.cols() != inner.rows() {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {}x{} after {}x{}",
                outer.rows(),
                outer.cols(),
                inner.rows(),
                inner.cols()
            )));
        }
        Ok(Self { outer, inner })
    }
}

impl<O: LinearOperator, I: LinearOperator> LinearOperator for Compose<O, I> {
    fn rows(&self) -> usize {
        self.outer.rows()
    }
    fn cols(&self) -> usize {
        self.inner.cols()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.outer.apply(&self.inner.apply(x)?)
    }
    fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.inner.apply_adjoint(&self.outer.apply_adjoint(y)?)
    }
}

/// The sensing matrix `A` of a [`SensingKey`]. `A·Aᵀ = I_m`.
#[derive(Debug, Clone, Copy)]
pub struct Sensing<'k> {
    key: &'k SensingKey,
}

impl<'k> Sensing<'k> {
    pub fn new(key: &'k SensingKey) -> Self {
        Self { key }
    }

    pub fn key(&self) -> &'k SensingKey {
        self.key
    }
}

impl LinearOperator for Sensing<'_> {
    fn rows(&self) -> usize {
        self.key.m
    }
    fn cols(&self) -> usize {
        self.key.n
    }
    fn apply(&self, s: &[f64]) -> Result<Vec<f64>> {
        check_len(s, self.key.n)?;
        let mut full = self.key.col_perm.ipermute(s)?;
        noiselet_in_place(&mut full)?;
        Ok(self.key.row_subset.iter().map(|&r| full[r]).collect())
    }
    fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(y, self.key.m)?;
        let mut full = vec![0.0; self.key.n];
        for (&r, &v) in self.key.row_subset.iter().zip(y) {
            full[r] = v;
        }
        // the real noiselet is symmetric
        noiselet_in_place(&mut full)?;
        self.key.col_perm.permute(&full)
    }
}

/// The perturbed sensing matrix `Ã = A + M` for column-atomic flips.
#[derive(Debug, Clone)]
pub struct Perturbed<'k> {
    sensing: Sensing<'k>,
    flipped: Vec<usize>,
}

impl<'k> Perturbed<'k> {
    pub fn new(key: &'k SensingKey, region: &RegionSet, flips: &FlipSet) -> Result<Self> {
        if flips.len() != region.len() {
            return Err(Error::LengthMismatch {
                expected: region.len(),
                actual: flips.len(),
            });
        }
        let mut flipped = Vec::with_capacity(flips.flipped());
        for (&index, &flip) in region.indices.iter().zip(&flips.0) {
            if index >= key.n {
                return Err(Error::IndexOutOfRange { index, len: key.n });
            }
            if flip {
                flipped.push(index);
            }
        }
        Ok(Self {
            sensing: Sensing::new(key),
            flipped,
        })
    }

    fn negate(&self, v: &mut [f64]) {
        for &i in &self.flipped {
            v[i] = -v[i];
        }
    }
}

impl LinearOperator for Perturbed<'_> {
    fn rows(&self) -> usize {
        self.sensing.rows()
    }
    fn cols(&self) -> usize {
        self.sensing.cols()
    }
    fn apply(&self, s: &[f64]) -> Result<Vec<f64>> {
        check_len(s, self.cols())?;
        let mut flipped = s.to_vec();
        self.negate(&mut flipped);
        self.sensing.apply(&flipped)
    }
    fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.sensing.apply_adjoint(y)?;
        self.negate(&mut out);
        Ok(out)
    }
}

/// `Φ`: wavelet coefficients to pixels (inverse orthonormal Haar DWT).
#[derive(Debug, Clone, Copy)]
pub struct WaveletSynthesis {
    grid: Grid,
    levels: usize,
}

impl WaveletSynthesis {
    pub fn new(grid: Grid, levels: usize) -> Result<Self> {
        grid.check_levels(levels)?;
        Ok(Self { grid, levels })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }
}

impl LinearOperator for WaveletSynthesis {
    fn rows(&self) -> usize {
        self.grid.len()
    }
    fn cols(&self) -> usize {
        self.grid.len()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        dwt2_inv(x, self.grid, self.levels)
    }
    fn apply_adjoint(&self, s: &[f64]) -> Result<Vec<f64>> {
        dwt2_fwd(s, self.grid, self.levels)
    }
}

/// `H = A·Φ` on a square `side × side` grid.
pub type SparseSensing<'k> = Compose<Sensing<'k>, WaveletSynthesis>;

/// Builds `H = A·Φ` for a key whose `n` is a square grid.
pub fn sparse_sensing(key: &SensingKey, levels: usize) -> Result<SparseSensing<'_>> {
    let grid = square_grid(key.n)?;
    Compose::new(Sensing::new(key), WaveletSynthesis::new(grid, levels)?)
}

pub(crate) fn square_grid(n: usize) -> Result<Grid> {
    let side = (n as f64).sqrt().round() as usize;
    if side * side != n {
        return Err(Error::InvalidDimensions(format!(
            "signal length {n} is not a square grid"
        )));
    }
    Ok(Grid::square(side))
}

/// `B` and `F` of an [`EmbeddingKey`], sharing one DCT plan.
#[derive(Debug, Clone)]
pub struct Embedding<'k> {
    key: &'k EmbeddingKey,
    dct: Dct,
}

impl<'k> Embedding<'k> {
    pub fn new(key: &'k EmbeddingKey) -> Result<Self> {
        Ok(Self {
            key,
            dct: Dct::new(key.m)?,
        })
    }

    pub fn key(&self) -> &'k EmbeddingKey {
        self.key
    }

    fn scatter(&self, values: &[f64], at: &[usize]) -> Result<Vec<f64>> {
        check_len(values, at.len())?;
        let mut coeffs = vec![0.0; self.key.m];
        for (&i, &v) in at.iter().zip(values) {
            coeffs[i] = v;
        }
        self.dct.adjoint(&coeffs)
    }

    fn gather(&self, y: &[f64], at: &[usize]) -> Result<Vec<f64>> {
        check_len(y, self.key.m)?;
        let coeffs = self.dct.forward(y)?;
        Ok(at.iter().map(|&i| coeffs[i]).collect())
    }

    /// `B·w`, length `m`.
    pub fn embed(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.scatter(w, &self.key.col_subset)
    }

    /// `Bᵀ·y`, length `T`. Equals the least-squares `(BᵀB)⁻¹Bᵀy`.
    pub fn embed_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.gather(y, &self.key.col_subset)
    }

    /// `F·y`, length `P = m - T`.
    pub fn annihilate(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.gather(y, &self.key.complement)
    }

    /// `Fᵀ·z`, length `m`.
    pub fn annihilate_adjoint(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.scatter(z, &self.key.complement)
    }

    /// `B` as a standalone operator.
    pub fn embedder(&self) -> Embedder<'_, 'k> {
        Embedder(self)
    }

    /// `F` as a standalone operator.
    pub fn annihilator(&self) -> Annihilator<'_, 'k> {
        Annihilator(self)
    }
}

/// [`LinearOperator`] view of `B`.
#[derive(Debug, Clone, Copy)]
pub struct Embedder<'e, 'k>(&'e Embedding<'k>);

impl LinearOperator for Embedder<'_, '_> {
    fn rows(&self) -> usize {
        self.0.key.m
    }
    fn cols(&self) -> usize {
        self.0.key.t
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.0.embed(x)
    }
    fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.0.embed_adjoint(y)
    }
}

/// [`LinearOperator`] view of `F`.
#[derive(Debug, Clone, Copy)]
pub struct Annihilator<'e, 'k>(&'e Embedding<'k>);

impl LinearOperator for Annihilator<'_, '_> {
    fn rows(&self) -> usize {
        self.0.key.p()
    }
    fn cols(&self) -> usize {
        self.0.key.m
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.0.annihilate(x)
    }
    fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.0.annihilate_adjoint(y)
    }
}
