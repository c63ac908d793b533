//! Matrix-free orthonormal transforms.
//!
//! Every transform here is orthonormal and comes with an exact adjoint, so
//! the sensing and embedding operators built on top of them never need a
//! dense matrix. All arithmetic is `f64`.

mod dct;
mod haar;
mod hadamard;
mod permutation;

pub use dct::{dct_adj, dct_fwd, Dct};
pub use haar::{dwt2_fwd, dwt2_inv, Grid};
pub use hadamard::{fwht, fwht_in_place, noiselet_adj, noiselet_fwd, noiselet_in_place};
pub use permutation::Permutation;

use crate::{Error, Result};

pub(crate) fn check_power_of_two(len: usize) -> Result<()> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NonPowerOfTwoLength { len });
    }
    Ok(())
}
