//! Walsh–Hadamard and real noiselet transforms.
//!
//! The real noiselet of length `N = 2^k` is built from the complex noiselet
//! butterfly. Up to a global phase and a row ordering, the complex noiselet
//! matrix is `2^{-k/2} T^{⊗k}` with `T = [[1, i], [i, 1]]`, i.e. its `(r, c)`
//! entry is `i^{popcount(r ^ c)}`. For even `k` the matrix
//! `Re(T^{⊗k}) + Im(T^{⊗k})` is real, symmetric and satisfies
//! `R·R = 2^k I`, so `2^{-k/2} R` is an orthonormal involution whose entries
//! are all `±2^{-k/2}`. For odd `k` one extra Walsh–Hadamard stage is
//! applied on the top bit, which keeps the result flat, symmetric and
//! orthonormal.
//!
//! Each stage is normalized by `1/√2`, so the forward transform is its own
//! inverse and its own adjoint.

use std::f64::consts::FRAC_1_SQRT_2;

use super::check_power_of_two;
use crate::Result;

/// In-place orthonormal Walsh–Hadamard transform (natural ordering).
pub fn fwht_in_place(v: &mut [f64]) -> Result<()> {
    check_power_of_two(v.len())?;
    let n = v.len();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let a = v[i];
                let b = v[i + h];
                v[i] = (a + b) * FRAC_1_SQRT_2;
                v[i + h] = (a - b) * FRAC_1_SQRT_2;
            }
        }
        h *= 2;
    }
    Ok(())
}

/// Orthonormal Walsh–Hadamard transform. Self-inverse.
pub fn fwht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

/// In-place real noiselet transform; see the module docs for the
/// construction.
pub fn noiselet_in_place(v: &mut [f64]) -> Result<()> {
    check_power_of_two(v.len())?;
    let n = v.len();
    let stages = n.trailing_zeros();
    // With an odd stage count the top bit gets a plain Hadamard butterfly.
    let hadamard_stride = if stages % 2 == 1 { n / 2 } else { 0 };

    let re = v;
    let mut im = vec![0.0; n];
    let mut h = 1;
    while h < n {
        let twist = h != hadamard_stride;
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let j = i + h;
                let (ar, ai, br, bi) = (re[i], im[i], re[j], im[j]);
                if twist {
                    // (a, b) -> (a + i·b, i·a + b)
                    re[i] = (ar - bi) * FRAC_1_SQRT_2;
                    im[i] = (ai + br) * FRAC_1_SQRT_2;
                    re[j] = (br - ai) * FRAC_1_SQRT_2;
                    im[j] = (bi + ar) * FRAC_1_SQRT_2;
                } else {
                    re[i] = (ar + br) * FRAC_1_SQRT_2;
                    im[i] = (ai + bi) * FRAC_1_SQRT_2;
                    re[j] = (ar - br) * FRAC_1_SQRT_2;
                    im[j] = (ai - bi) * FRAC_1_SQRT_2;
                }
            }
        }
        h *= 2;
    }
    for (r, i) in re.iter_mut().zip(&im) {
        *r += *i;
    }
    Ok(())
}

/// Forward real noiselet transform.
pub fn noiselet_fwd(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    noiselet_in_place(&mut out)?;
    Ok(out)
}

/// Adjoint of [`noiselet_fwd`]. The real noiselet matrix is symmetric, so
/// this is the same map.
pub fn noiselet_adj(v: &[f64]) -> Result<Vec<f64>> {
    noiselet_fwd(v)
}
