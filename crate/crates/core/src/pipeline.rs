//! End-to-end encoder and the three decoders.
//!
//! ```text
//! y_w = (A + M)·s + B·w
//! ```
//!
//! * [`decode_semi`]: `x̂ = argmin ‖x‖₁ s.t. ‖y_w − AΦx‖ ≤ ε`; the region
//!   stays scrambled.
//! * [`decode_full`]: strip `B·w` with `F`, pre-estimate `x̃` from `F·y_w`,
//!   read `w'' = Bᵀ(y_w − AΦx̃)`, threshold at `a/2`, rebuild the flips and
//!   solve again with `(A + M)Φ` on `y_w − B·ŵ`.
//! * [`decode_eavesdrop`]: the semi-authorized decoder run with a key
//!   generated from a wrong seed.
//!
//! Payload layout (little-endian): magic `CSPP`, version `u8 = 1`,
//! `orig_w u16`, `orig_h u16`, `padded_side u16`, `levels u8`, `m u32`,
//! `T u32`, `region_size u32`, `rect_count u16`, `rect_count × (x, y, w, h)`
//! as `u16`, `amplitude f64`, `epsilon_hint f64`, then `m` `f64`
//! measurements.

use crate::image::GrayImage;
use crate::keys::{keygen_a, EmbeddingKey, MaskSeed, SensingKey};
use crate::mask_codec::{
    compute_amplitude, decode_mask, encode_mask, gen_flips, region_from_rects, FlipSet, Rect,
    RegionSet, DEFAULT_EMBEDDING_RATIO,
};
use crate::operators::{
    sparse_sensing, Compose, Embedding, LinearOperator, Perturbed, WaveletSynthesis,
};
use crate::solver::{bpdn_solve, SolverOptions, SolverReport};
use crate::transforms::Grid;
use crate::{Error, Result};

pub const PAYLOAD_MAGIC: &[u8; 4] = b"CSPP";
pub const PAYLOAD_VERSION: u8 = 1;
pub const DEFAULT_LEVELS: usize = 4;
/// Decoder ε as a fraction of the norm of the data vector of each solve.
pub const DEFAULT_EPSILON_FACTOR: f64 = 1e-3;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Side of the square power-of-two grid a `width × height` frame is padded
/// into.
pub fn padded_side(width: usize, height: usize) -> usize {
    width.max(height).max(1).next_power_of_two()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayloadHeader {
    pub orig_width: usize,
    pub orig_height: usize,
    pub padded_side: usize,
    pub levels: usize,
    pub m: usize,
    pub t: usize,
    pub region_size: usize,
    pub rects: Vec<Rect>,
    pub amplitude: f64,
    /// Relative decoder ε suggested by the encoder.
    pub epsilon_hint: f64,
}

impl PayloadHeader {
    pub fn n(&self) -> usize {
        self.padded_side * self.padded_side
    }

    pub fn region(&self) -> Result<RegionSet> {
        region_from_rects(&self.rects, self.orig_width, self.orig_height, self.padded_side)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncryptedPayload {
    pub header: PayloadHeader,
    pub measurements: Vec<f64>,
}

fn fits_u16(v: usize, what: &str) -> Result<u16> {
    u16::try_from(v).map_err(|_| Error::InvalidDimensions(format!("{what} = {v} exceeds 65535")))
}

fn fits_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::InvalidDimensions(format!("{what} = {v} exceeds u32")))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::MalformedPayload("truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<usize> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()) as usize)
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

impl EncryptedPayload {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let h = &self.header;
        let mut out = Vec::with_capacity(44 + 8 * h.rects.len() + 8 * self.measurements.len());
        out.extend_from_slice(PAYLOAD_MAGIC);
        out.push(PAYLOAD_VERSION);
        out.extend_from_slice(&fits_u16(h.orig_width, "width")?.to_le_bytes());
        out.extend_from_slice(&fits_u16(h.orig_height, "height")?.to_le_bytes());
        out.extend_from_slice(&fits_u16(h.padded_side, "padded side")?.to_le_bytes());
        out.push(u8::try_from(h.levels).map_err(|_| {
            Error::InvalidDimensions(format!("{} wavelet levels", h.levels))
        })?);
        out.extend_from_slice(&fits_u32(h.m, "m")?.to_le_bytes());
        out.extend_from_slice(&fits_u32(h.t, "T")?.to_le_bytes());
        out.extend_from_slice(&fits_u32(h.region_size, "region size")?.to_le_bytes());
        out.extend_from_slice(&fits_u16(h.rects.len(), "rect count")?.to_le_bytes());
        for r in &h.rects {
            for v in [r.x, r.y, r.width, r.height] {
                out.extend_from_slice(&fits_u16(v, "rect field")?.to_le_bytes());
            }
        }
        out.extend_from_slice(&h.amplitude.to_le_bytes());
        out.extend_from_slice(&h.epsilon_hint.to_le_bytes());
        for v in &self.measurements {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != PAYLOAD_MAGIC {
            return Err(Error::MalformedPayload("bad magic".into()));
        }
        let version = r.u8()?;
        if version != PAYLOAD_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let orig_width = r.u16()?;
        let orig_height = r.u16()?;
        let padded_side = r.u16()?;
        let levels = r.u8()? as usize;
        let m = r.u32()?;
        let t = r.u32()?;
        let region_size = r.u32()?;
        let rect_count = r.u16()?;
        let mut rects = Vec::with_capacity(rect_count);
        for _ in 0..rect_count {
            rects.push(Rect::new(r.u16()?, r.u16()?, r.u16()?, r.u16()?));
        }
        let amplitude = r.f64()?;
        let epsilon_hint = r.f64()?;
        let remaining = bytes.len() - r.pos;
        if remaining != 8 * m {
            return Err(Error::MalformedPayload(format!(
                "expected {} measurement bytes, found {remaining}",
                8 * m
            )));
        }
        let measurements = (0..m).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let payload = Self {
            header: PayloadHeader {
                orig_width,
                orig_height,
                padded_side,
                levels,
                m,
                t,
                region_size,
                rects,
                amplitude,
                epsilon_hint,
            },
            measurements,
        };
        payload.validate()?;
        Ok(payload)
    }

    /// Checks the header's internal consistency.
    pub fn validate(&self) -> Result<()> {
        let h = &self.header;
        let bad = |msg: String| Err(Error::MalformedPayload(msg));
        if h.orig_width == 0 || h.orig_height == 0 || h.padded_side != padded_side(h.orig_width, h.orig_height) {
            return bad(format!(
                "padded side {} does not match {}x{} frame",
                h.padded_side, h.orig_width, h.orig_height
            ));
        }
        if h.m != self.measurements.len() || h.m == 0 || h.m > h.n() {
            return bad(format!("measurement count {} inconsistent", h.m));
        }
        if h.t >= h.m || h.region_size > h.t {
            return bad(format!(
                "need |C| <= T < m, got |C| = {}, T = {}, m = {}",
                h.region_size, h.t, h.m
            ));
        }
        let region = h.region().map_err(|e| Error::MalformedPayload(e.to_string()))?;
        if region.len() != h.region_size {
            return bad(format!(
                "rectangles cover {} pixels, header says {}",
                region.len(),
                h.region_size
            ));
        }
        let amplitude_ok = if h.region_size == 0 {
            h.amplitude == 0.0
        } else {
            h.amplitude > 0.0 && h.amplitude.is_finite()
        };
        if !amplitude_ok {
            return bad(format!("amplitude {} invalid for region", h.amplitude));
        }
        if !(h.epsilon_hint >= 0.0 && h.epsilon_hint.is_finite()) {
            return bad(format!("epsilon hint {}", h.epsilon_hint));
        }
        if self.measurements.iter().any(|v| !v.is_finite()) {
            return bad("non-finite measurement".into());
        }
        Ok(())
    }
}

/// Encoder settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodeParams {
    /// Target `‖Bw‖₂ / ‖Ãs‖₂`.
    pub ratio: f64,
    pub levels: usize,
    pub epsilon_hint: f64,
}

impl Default for EncodeParams {
    fn default() -> Self {
        Self {
            ratio: DEFAULT_EMBEDDING_RATIO,
            levels: DEFAULT_LEVELS,
            epsilon_hint: DEFAULT_EPSILON_FACTOR,
        }
    }
}

/// Encoder output: the payload plus what the encoder knows privately.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub payload: EncryptedPayload,
    pub region: RegionSet,
    pub flips: FlipSet,
    /// Measured `‖Bw‖₂ / ‖Ãs‖₂` (0 without a region).
    pub achieved_ratio: f64,
}

fn check_keys(n: usize, m: usize, key_a: &SensingKey, key_b: Option<&EmbeddingKey>, t: Option<usize>) -> Result<()> {
    if key_a.n != n || key_a.m != m {
        return Err(Error::DimensionMismatch(format!(
            "sensing key is {}x{}, payload needs {m}x{n}",
            key_a.m, key_a.n
        )));
    }
    if let Some(kb) = key_b {
        if kb.m != m || t.is_some_and(|t| t != kb.t) {
            return Err(Error::DimensionMismatch(format!(
                "embedding key has m = {}, T = {}; payload needs m = {m}, T = {}",
                kb.m,
                kb.t,
                t.unwrap_or(kb.t)
            )));
        }
    }
    Ok(())
}

/// Senses, encrypts and obfuscates one frame.
pub fn encode(
    frame: &GrayImage,
    key_a: &SensingKey,
    key_b: &EmbeddingKey,
    rects: &[Rect],
    mask_seed: &MaskSeed,
    params: &EncodeParams,
) -> Result<Encoding> {
    let side = padded_side(frame.width(), frame.height());
    if key_a.n != side * side {
        return Err(Error::InvalidDimensions(format!(
            "{}x{} frame pads to n = {}, sensing key has n = {}",
            frame.width(),
            frame.height(),
            side * side,
            key_a.n
        )));
    }
    if key_b.m != key_a.m {
        return Err(Error::InvalidDimensions(format!(
            "embedding key has m = {}, sensing key m = {}",
            key_b.m, key_a.m
        )));
    }
    Grid::square(side).check_levels(params.levels)?;
    if !(params.epsilon_hint >= 0.0 && params.epsilon_hint.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon hint {}",
            params.epsilon_hint
        )));
    }

    let region = region_from_rects(rects, frame.width(), frame.height(), side)?;
    if region.len() > key_b.t {
        return Err(Error::CapacityExceeded {
            region: region.len(),
            capacity: key_b.t,
        });
    }
    let flips = gen_flips(region.len(), mask_seed);
    let s = frame.padded(side);
    let sensed = Perturbed::new(key_a, &region, &flips)?.apply(&s)?;

    let (measurements, amplitude, achieved_ratio) = if region.is_empty() {
        (sensed, 0.0, 0.0)
    } else {
        let reference = norm(&sensed);
        let amplitude = compute_amplitude(params.ratio, reference, region.len())?;
        let message = encode_mask(&flips, amplitude, key_b.t)?;
        let hidden = Embedding::new(key_b)?.embed(&message.w)?;
        let achieved = norm(&hidden) / reference;
        debug_assert!((achieved - params.ratio).abs() <= 1e-10);
        let y: Vec<f64> = sensed.iter().zip(&hidden).map(|(a, b)| a + b).collect();
        (y, amplitude, achieved)
    };

    let payload = EncryptedPayload {
        header: PayloadHeader {
            orig_width: frame.width(),
            orig_height: frame.height(),
            padded_side: side,
            levels: params.levels,
            m: key_a.m,
            t: key_b.t,
            region_size: region.len(),
            rects: rects.to_vec(),
            amplitude,
            epsilon_hint: params.epsilon_hint,
        },
        measurements,
    };
    Ok(Encoding {
        payload,
        region,
        flips,
        achieved_ratio,
    })
}

/// Decoder settings shared by all levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeOptions {
    /// Overrides the payload's relative ε when set.
    pub epsilon_factor: Option<f64>,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        let solver = SolverOptions::default();
        Self {
            epsilon_factor: None,
            max_iterations: solver.max_outer_iterations,
            tolerance: solver.tolerance,
        }
    }
}

impl DecodeOptions {
    fn solve<L: LinearOperator + ?Sized>(
        &self,
        op: &L,
        data: &[f64],
        header: &PayloadHeader,
    ) -> Result<(Vec<f64>, SolverReport)> {
        let factor = self.epsilon_factor.unwrap_or(header.epsilon_hint);
        let opts = SolverOptions {
            epsilon: factor * norm(data),
            max_outer_iterations: self.max_iterations,
            tolerance: self.tolerance,
            ..SolverOptions::default()
        };
        let solution = bpdn_solve(op, data, &opts)?;
        Ok((solution.x, solution.report))
    }
}

#[derive(Debug, Clone)]
pub struct DecodeResult {
    /// Reconstruction cropped to the original frame and clipped to [0, 1].
    pub image: GrayImage,
    /// Recovered flips (full decoder only).
    pub flips: Option<FlipSet>,
    pub ambiguous: usize,
    pub reports: Vec<SolverReport>,
}

impl DecodeResult {
    pub fn converged(&self) -> bool {
        self.reports.iter().all(|r| r.converged)
    }
}

fn synthesis(header: &PayloadHeader) -> Result<WaveletSynthesis> {
    WaveletSynthesis::new(Grid::square(header.padded_side), header.levels)
}

fn finish(coeffs: &[f64], header: &PayloadHeader) -> Result<GrayImage> {
    let pixels = synthesis(header)?.apply(coeffs)?;
    GrayImage::from_padded(&pixels, header.padded_side, header.orig_width, header.orig_height)
}

/// Semi-authorized reconstruction: the scene with the region scrambled.
pub fn decode_semi(payload: &EncryptedPayload, key_a: &SensingKey, opts: &DecodeOptions) -> Result<DecodeResult> {
    payload.validate()?;
    let h = &payload.header;
    check_keys(h.n(), h.m, key_a, None, None)?;
    let op = sparse_sensing(key_a, h.levels)?;
    let (x, report) = opts.solve(&op, &payload.measurements, h)?;
    Ok(DecodeResult {
        image: finish(&x, h)?,
        flips: None,
        ambiguous: 0,
        reports: vec![report],
    })
}

/// Output of the message-extraction half of the full decoder.
#[derive(Debug, Clone)]
pub struct MaskEstimate {
    pub flips: FlipSet,
    pub ambiguous: usize,
    /// `ŵ = a·sgn(w̃)`, with slots beyond the region forced to zero.
    pub w_hat: Vec<f64>,
    /// `w'' = Bᵀ(y_w − AΦx̃)`.
    pub w_raw: Vec<f64>,
    pub report: SolverReport,
}

/// Recovers the flip pattern from a payload (annihilate, pre-estimate,
/// least squares, threshold, decode).
pub fn extract_mask(
    payload: &EncryptedPayload,
    key_a: &SensingKey,
    key_b: &EmbeddingKey,
    opts: &DecodeOptions,
) -> Result<MaskEstimate> {
    payload.validate()?;
    let h = &payload.header;
    check_keys(h.n(), h.m, key_a, Some(key_b), Some(h.t))?;
    let y = &payload.measurements;
    let embedding = Embedding::new(key_b)?;
    let sparse = sparse_sensing(key_a, h.levels)?;

    let stripped = embedding.annihilate(y)?;
    let annihilated = Compose::new(embedding.annihilator(), &sparse)?;
    let (x_pre, report) = opts.solve(&annihilated, &stripped, h)?;

    let predicted = sparse.apply(&x_pre)?;
    let residual: Vec<f64> = y.iter().zip(&predicted).map(|(a, b)| a - b).collect();
    let w_raw = embedding.embed_adjoint(&residual)?;

    let a = h.amplitude;
    let threshold = a / 2.0;
    let w_hat: Vec<f64> = w_raw
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            if k >= h.region_size || v.abs() <= threshold {
                0.0
            } else {
                a * v.signum()
            }
        })
        .collect();
    let decoded = decode_mask(&w_hat, h.region_size)?;
    Ok(MaskEstimate {
        flips: decoded.flips,
        ambiguous: decoded.ambiguous,
        w_hat,
        w_raw,
        report,
    })
}

/// Fully authorized reconstruction, reversing the de-identification.
pub fn decode_full(
    payload: &EncryptedPayload,
    key_a: &SensingKey,
    key_b: &EmbeddingKey,
    opts: &DecodeOptions,
) -> Result<DecodeResult> {
    payload.validate()?;
    let h = &payload.header;
    check_keys(h.n(), h.m, key_a, Some(key_b), Some(h.t))?;
    if h.region_size == 0 {
        // Nothing was embedded and nothing was flipped.
        let mut result = decode_semi(payload, key_a, opts)?;
        result.flips = Some(FlipSet::default());
        return Ok(result);
    }

    let mask = extract_mask(payload, key_a, key_b, opts)?;
    let region = h.region()?;
    let embedding = Embedding::new(key_b)?;
    let hidden = embedding.embed(&mask.w_hat)?;
    let cleaned: Vec<f64> = payload
        .measurements
        .iter()
        .zip(&hidden)
        .map(|(a, b)| a - b)
        .collect();
    let perturbed = Perturbed::new(key_a, &region, &mask.flips)?;
    let op = Compose::new(perturbed, synthesis(h)?)?;
    let (x, report) = opts.solve(&op, &cleaned, h)?;

    Ok(DecodeResult {
        image: finish(&x, h)?,
        flips: Some(mask.flips),
        ambiguous: mask.ambiguous,
        reports: vec![mask.report, report],
    })
}

/// Semi-authorized decoding with a sensing key regenerated from
/// `wrong_seed`; measures what an attacker without `A` recovers.
pub fn decode_eavesdrop(payload: &EncryptedPayload, wrong_seed: u64, opts: &DecodeOptions) -> Result<DecodeResult> {
    payload.validate()?;
    let key = keygen_a(wrong_seed, payload.header.n(), payload.header.m)?;
    decode_semi(payload, &key, opts)
}
