//! Seed-derived secrets: the sensing key (matrix `A`), the embedding key
//! (matrix `B` and its annihilator `F`) and the mask seed.
//!
//! Keys are fully determined by a 64-bit seed and their dimensions. The
//! random stream is xoshiro256** seeded through SplitMix64, and bounded
//! integers are drawn with Lemire's multiply-and-reject method, so a given
//! `(seed, dims)` expands to the same indices on every platform. The
//! generator is not a cryptographic one; the seed only has to stay private.
//!
//! Key file layout (little-endian):
//!
//! | bytes | field |
//! |-------|-------|
//! | 4     | magic `CSPK` |
//! | 1     | version (1) |
//! | 1     | kind: 0 = sensing, 1 = embedding, 2 = mask seed |
//! | 8     | seed (u64) |
//! | 8     | sensing: `n` u32, `m` u32; embedding: `m` u32, `t` u32; mask: `p` f64 |

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::transforms::Permutation;
use crate::{Error, Result};

pub const KEY_MAGIC: &[u8; 4] = b"CSPK";
pub const KEY_VERSION: u8 = 1;

/// Deterministic random stream shared by key and mask generation.
#[derive(Debug, Clone)]
pub struct KeyStream(Xoshiro256StarStar);

impl KeyStream {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256StarStar::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform integer in `0..bound` (`bound > 0`).
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let wide = (self.next_u64() as u128) * (bound as u128);
            if (wide as u64) >= threshold {
                return (wide >> 64) as u64;
            }
        }
    }

    /// Uniform `f64` in `[0, 1)` built from the top 53 bits.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Forward Fisher–Yates over `0..n`, stopping after `take` positions.
    /// The first `take` entries are a uniform sample without replacement.
    pub fn shuffle_prefix(&mut self, n: usize, take: usize) -> Vec<usize> {
        let mut items: Vec<usize> = (0..n).collect();
        for i in 0..take.min(n.saturating_sub(1)) {
            let j = i + self.below((n - i) as u64) as usize;
            items.swap(i, j);
        }
        items
    }
}

/// Describes the sensing matrix `A`: `m` rows of the `n`-point real
/// noiselet basis applied after a pixel permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensingKey {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    /// Selected noiselet rows, in draw order.
    pub row_subset: Vec<usize>,
    pub col_perm: Permutation,
}

/// Describes the embedding matrix `B` (`t` orthonormal DCT-II basis vectors
/// of length `m`) and the annihilator `F` built from the remaining `m - t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingKey {
    pub seed: u64,
    pub m: usize,
    pub t: usize,
    pub col_subset: Vec<usize>,
    /// `0..m` minus `col_subset`, ascending; these are the rows of `F`.
    pub complement: Vec<usize>,
}

impl EmbeddingKey {
    /// Row count of the annihilator, `m - t`.
    pub fn p(&self) -> usize {
        self.m - self.t
    }
}

/// Seed and survival probability for the column flips.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskSeed {
    pub seed: u64,
    pub p: f64,
}

impl MaskSeed {
    pub fn new(seed: u64, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "flip survival probability {p} outside [0, 1]"
            )));
        }
        Ok(Self { seed, p })
    }
}

/// Generates the sensing key. Rows are drawn first, then the column
/// permutation, both from one stream.
pub fn keygen_a(seed: u64, n: usize, m: usize) -> Result<SensingKey> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidDimensions(format!(
            "signal length n = {n} must be a power of two"
        )));
    }
    if m == 0 || m > n {
        return Err(Error::InvalidDimensions(format!(
            "measurement count m = {m} must satisfy 0 < m <= n = {n}"
        )));
    }
    if n > u32::MAX as usize {
        return Err(Error::InvalidDimensions(format!("n = {n} too large")));
    }
    let mut stream = KeyStream::new(seed);
    let mut rows = stream.shuffle_prefix(n, m);
    rows.truncate(m);
    let col_perm = Permutation::new(stream.shuffle_prefix(n, n))?;
    Ok(SensingKey {
        seed,
        n,
        m,
        row_subset: rows,
        col_perm,
    })
}

/// Generates the embedding key. DCT row 0 (the constant vector) is never
/// a message slot: every sensing matrix maps a flat frame onto it, so the
/// annihilator must keep it to see the frame mean.
pub fn keygen_b(seed: u64, m: usize, t: usize) -> Result<EmbeddingKey> {
    if t >= m {
        return Err(Error::CapacityNotBelowMeasurements { t, m });
    }
    if t == 0 {
        return Err(Error::InvalidDimensions(
            "embedding capacity T must be positive".into(),
        ));
    }
    if m > u32::MAX as usize {
        return Err(Error::InvalidDimensions(format!("m = {m} too large")));
    }
    let mut stream = KeyStream::new(seed);
    let mut order: Vec<usize> = stream.shuffle_prefix(m - 1, t).iter().map(|i| i + 1).collect();
    let mut complement = order.split_off(t);
    complement.push(0);
    complement.sort_unstable();
    Ok(EmbeddingKey {
        seed,
        m,
        t,
        col_subset: order,
        complement,
    })
}

/// Any of the three key kinds, as stored in a key file.
#[derive(Debug, Clone, PartialEq)]
pub enum Key {
    Sensing(SensingKey),
    Embedding(EmbeddingKey),
    Mask(MaskSeed),
}

impl Key {
    pub fn kind(&self) -> u8 {
        match self {
            Key::Sensing(_) => 0,
            Key::Embedding(_) => 1,
            Key::Mask(_) => 2,
        }
    }
}

impl From<SensingKey> for Key {
    fn from(k: SensingKey) -> Self {
        Key::Sensing(k)
    }
}

impl From<EmbeddingKey> for Key {
    fn from(k: EmbeddingKey) -> Self {
        Key::Embedding(k)
    }
}

impl From<MaskSeed> for Key {
    fn from(k: MaskSeed) -> Self {
        Key::Mask(k)
    }
}

pub fn serialize_key(key: &Key) -> Vec<u8> {
    let mut out = Vec::with_capacity(22);
    out.extend_from_slice(KEY_MAGIC);
    out.push(KEY_VERSION);
    out.push(key.kind());
    match key {
        Key::Sensing(k) => {
            out.extend_from_slice(&k.seed.to_le_bytes());
            out.extend_from_slice(&(k.n as u32).to_le_bytes());
            out.extend_from_slice(&(k.m as u32).to_le_bytes());
        }
        Key::Embedding(k) => {
            out.extend_from_slice(&k.seed.to_le_bytes());
            out.extend_from_slice(&(k.m as u32).to_le_bytes());
            out.extend_from_slice(&(k.t as u32).to_le_bytes());
        }
        Key::Mask(k) => {
            out.extend_from_slice(&k.seed.to_le_bytes());
            out.extend_from_slice(&k.p.to_le_bytes());
        }
    }
    out
}

pub fn deserialize_key(bytes: &[u8]) -> Result<Key> {
    let malformed = |msg: &str| Error::MalformedKeyFile(msg.to_string());
    if bytes.len() < 6 {
        return Err(malformed("truncated header"));
    }
    if &bytes[..4] != KEY_MAGIC {
        return Err(malformed("bad magic"));
    }
    if bytes[4] != KEY_VERSION {
        return Err(Error::UnsupportedVersion(bytes[4]));
    }
    let body = &bytes[6..];
    if body.len() != 16 {
        return Err(malformed(&format!(
            "expected 16 body bytes, found {}",
            body.len()
        )));
    }
    let seed = u64::from_le_bytes(body[..8].try_into().unwrap());
    let a = u32::from_le_bytes(body[8..12].try_into().unwrap()) as usize;
    let b = u32::from_le_bytes(body[12..16].try_into().unwrap()) as usize;
    let invalid = |e: Error| Error::MalformedKeyFile(e.to_string());
    match bytes[5] {
        0 => keygen_a(seed, a, b).map(Key::Sensing).map_err(invalid),
        1 => keygen_b(seed, a, b).map(Key::Embedding).map_err(invalid),
        2 => {
            let p = f64::from_le_bytes(body[8..16].try_into().unwrap());
            MaskSeed::new(seed, p).map(Key::Mask).map_err(invalid)
        }
        kind => Err(malformed(&format!("unknown key kind {kind}"))),
    }
}
