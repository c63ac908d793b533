//! File formats handled by the CLI: images, key files, payloads and
//! region lists. Every write goes through a temporary file and a rename.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use cspriv_core::keys::{deserialize_key, serialize_key};
use cspriv_core::pipeline::EncryptedPayload;
use cspriv_core::{EmbeddingKey, Error as CoreError, GrayImage, Key, MaskSeed, Rect, SensingKey};

use crate::exit::usage;

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

pub fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let context = || format!("cannot write {}", path.display());
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(context)?;
    tmp.write_all(bytes).with_context(context)?;
    tmp.as_file().sync_all().with_context(context)?;
    tmp.persist(path).map_err(|e| e.error).with_context(context)?;
    Ok(())
}

/// Reads a binary PGM or a PNG (any colour type, converted to luma).
pub fn read_image(path: &Path) -> Result<GrayImage> {
    let bytes = read(path)?;
    let parsed = if bytes.starts_with(PNG_SIGNATURE) {
        let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
            .with_context(|| format!("cannot decode {}", path.display()))?
            .to_luma16();
        let (w, h) = img.dimensions();
        let px = img.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect();
        GrayImage::new(w as usize, h as usize, px)
    } else {
        GrayImage::read_pgm(&bytes[..])
    };
    parsed.with_context(|| format!("cannot read image {}", path.display()))
}

pub fn write_image(path: &Path, img: &GrayImage, depth: u8) -> Result<()> {
    let maxval = if depth == 16 { u16::MAX } else { 255 };
    let mut buf = Vec::new();
    img.write_pgm(&mut buf, maxval)?;
    write_atomic(path, &buf)
}

pub fn read_key(path: &Path) -> Result<Key> {
    let bytes = read(path)?;
    deserialize_key(&bytes).with_context(|| format!("cannot parse key file {}", path.display()))
}

pub fn write_key(path: &Path, key: &Key) -> Result<()> {
    write_atomic(path, &serialize_key(key))
}

pub fn sensing_key(path: &Path) -> Result<SensingKey> {
    match read_key(path)? {
        Key::Sensing(k) => Ok(k),
        _ => Err(usage(format!("{} is not a sensing key (kind a)", path.display()))),
    }
}

pub fn embedding_key(path: &Path) -> Result<EmbeddingKey> {
    match read_key(path)? {
        Key::Embedding(k) => Ok(k),
        _ => Err(usage(format!("{} is not an embedding key (kind b)", path.display()))),
    }
}

pub fn mask_key(path: &Path) -> Result<MaskSeed> {
    match read_key(path)? {
        Key::Mask(k) => Ok(k),
        _ => Err(usage(format!("{} is not a mask key", path.display()))),
    }
}

pub fn read_payload(path: &Path) -> Result<EncryptedPayload> {
    let bytes = read(path)?;
    EncryptedPayload::from_bytes(&bytes)
        .with_context(|| format!("cannot parse payload {}", path.display()))
}

pub fn write_payload(path: &Path, payload: &EncryptedPayload) -> Result<()> {
    write_atomic(path, &payload.to_bytes()?)
}

/// Parses a region list: one `x,y,w,h` per line, `#` starts a comment.
pub fn parse_regions(text: &str) -> Result<Vec<Rect>> {
    let mut rects = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let numbers: Option<Vec<usize>> = fields.iter().map(|f| f.parse().ok()).collect();
        match numbers.as_deref() {
            Some(&[x, y, w, h]) if w > 0 && h > 0 => rects.push(Rect::new(x, y, w, h)),
            _ => {
                return Err(usage(format!(
                    "region line {}: expected x,y,w,h with positive w and h, found {line:?}",
                    lineno + 1
                )))
            }
        }
    }
    Ok(rects)
}

pub fn read_regions(path: &Path) -> Result<Vec<Rect>> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| CoreError::InvalidParameter(format!("{} is not UTF-8", path.display())))?;
    parse_regions(&text).with_context(|| format!("in {}", path.display()))
}
