use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cspriv_core::keys::{keygen_a, keygen_b};
use cspriv_core::metrics::report;
use cspriv_core::pipeline::{
    decode_eavesdrop, decode_full, decode_semi, encode, padded_side, DecodeOptions, EncodeParams,
};
use cspriv_core::{DecodeResult, EncryptedPayload, FlipSet, GrayImage, Key, MaskSeed};

use crate::args::{DecodeArgs, EncodeArgs, KeyKind, KeygenArgs, Level, SolverArgs};
use crate::exit::{usage, NotConverged};
use crate::files;

/// `round(mr·n)`, rejecting rates outside (0, 1].
pub fn measurement_count(mr: f64, n: usize) -> Result<usize> {
    if !(mr > 0.0 && mr <= 1.0) {
        return Err(usage(format!("--mr must be in (0, 1], got {mr}")));
    }
    Ok(((mr * n as f64).round() as usize).max(1))
}

pub fn keygen(args: &KeygenArgs) -> Result<()> {
    let key: Key = match args.kind {
        KeyKind::A => {
            let n = match (args.n, args.width, args.height) {
                (Some(n), None, None) => n,
                (None, Some(w), Some(h)) => {
                    let side = padded_side(w, h);
                    side * side
                }
                _ => return Err(usage("kind a needs either --n or both --width and --height")),
            };
            let m = match (args.mr, args.m) {
                (Some(mr), None) => measurement_count(mr, n)?,
                (None, Some(m)) => m,
                _ => return Err(usage("kind a needs exactly one of --mr and --m")),
            };
            let key = keygen_a(args.seed, n, m)?;
            println!("n={n}");
            println!("m={m}");
            key.into()
        }
        KeyKind::B => {
            let (Some(m), Some(t)) = (args.m, args.t) else {
                return Err(usage("kind b needs --m and --t"));
            };
            if t >= m {
                return Err(usage(format!(
                    "--t {t} must be below --m {m} (embedding capacity T < m)"
                )));
            }
            let key = keygen_b(args.seed, m, t)?;
            println!("m={m}");
            println!("t={t}");
            println!("p={}", key.p());
            key.into()
        }
        KeyKind::Mask => {
            let key = MaskSeed::new(args.seed, args.p).map_err(|e| usage(e.to_string()))?;
            println!("p={}", key.p);
            key.into()
        }
    };
    files::write_key(&args.out, &key)?;
    println!("{}", args.out.display());
    Ok(())
}

pub fn encode_cmd(args: &EncodeArgs) -> Result<()> {
    let frame = files::read_image(&args.input)?;
    let key_a = files::sensing_key(&args.key_a)?;
    let key_b = files::embedding_key(&args.key_b)?;
    let mask = match (&args.mask_key, args.seed) {
        (Some(path), _) => files::mask_key(path)?,
        (None, Some(seed)) => MaskSeed::new(seed, args.p).map_err(|e| usage(e.to_string()))?,
        (None, None) => return Err(usage("give --mask-key or --seed for the flip mask")),
    };
    let rects = match &args.region {
        Some(path) => files::read_regions(path)?,
        None => Vec::new(),
    };
    let params = EncodeParams {
        ratio: args.ratio,
        levels: args.levels,
        epsilon_hint: args.epsilon,
    };
    let enc = encode(&frame, &key_a, &key_b, &rects, &mask, &params)?;
    files::write_payload(&args.out, &enc.payload)?;
    println!("region_size={}", enc.region.len());
    println!("amplitude={:e}", enc.payload.header.amplitude);
    println!("ratio={:.12}", enc.achieved_ratio);
    println!("{}", args.out.display());
    Ok(())
}

pub fn decode_options(args: &SolverArgs) -> Result<DecodeOptions> {
    let mut opts = DecodeOptions::default();
    if let Some(eps) = args.epsilon {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(usage(format!("--epsilon must be a finite non-negative factor, got {eps}")));
        }
        opts.epsilon_factor = Some(eps);
    }
    if let Some(n) = args.max_iterations {
        opts.max_iterations = n;
    }
    if let Some(t) = args.tolerance {
        opts.tolerance = t;
    }
    Ok(opts)
}

/// Region pixels flipped → 255, kept → 128, elsewhere 0.
pub fn flip_bitmap(payload: &EncryptedPayload, flips: &FlipSet) -> Result<GrayImage> {
    let h = &payload.header;
    let region = h.region()?;
    let mut px = vec![0.0; h.orig_width * h.orig_height];
    for (&i, &f) in region.pixel_indices(h.orig_width).iter().zip(&flips.0) {
        px[i] = if f { 1.0 } else { 128.0 / 255.0 };
    }
    Ok(GrayImage::new(h.orig_width, h.orig_height, px)?)
}

fn default_mask_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".mask.pgm");
    PathBuf::from(s)
}

pub fn decode_cmd(args: &DecodeArgs) -> Result<()> {
    let payload = files::read_payload(&args.input)?;
    let opts = decode_options(&args.solver)?;
    let need_a = || {
        args.key_a
            .as_deref()
            .ok_or_else(|| usage(format!("--level {:?} needs --key-a", args.level).to_lowercase()))
    };
    let result: DecodeResult = match args.level {
        Level::Semi => decode_semi(&payload, &files::sensing_key(need_a()?)?, &opts)?,
        Level::Full => {
            let key_b = args
                .key_b
                .as_deref()
                .ok_or_else(|| usage("--level full needs --key-b"))?;
            let key_a = files::sensing_key(need_a()?)?;
            decode_full(&payload, &key_a, &files::embedding_key(key_b)?, &opts)?
        }
        Level::Eavesdrop => {
            let seed = args
                .seed
                .ok_or_else(|| usage("--level eavesdrop needs --seed (the guessed sensing seed)"))?;
            decode_eavesdrop(&payload, seed, &opts)?
        }
    };
    files::write_image(&args.out, &result.image, args.depth)?;
    println!("{}", args.out.display());

    if let (Level::Full, Some(flips)) = (args.level, &result.flips) {
        let path = args.mask_out.clone().unwrap_or_else(|| default_mask_path(&args.out));
        files::write_image(&path, &flip_bitmap(&payload, flips)?, 8)?;
        println!("{}", path.display());
        println!("flipped={}", flips.flipped());
        println!("ambiguous={}", result.ambiguous);
    }

    if let Some(path) = &args.reference {
        let reference = files::read_image(path)?;
        if reference.width() != result.image.width() || reference.height() != result.image.height() {
            return Err(usage(format!(
                "reference is {}x{}, decoded frame is {}x{}",
                reference.width(),
                reference.height(),
                result.image.width(),
                result.image.height()
            )));
        }
        let zone = payload.header.region()?.pixel_indices(payload.header.orig_width);
        let r = report(reference.pixels(), result.image.pixels(), &zone)
            .context("computing PSNR against the reference")?;
        let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.6}"));
        println!("psnr_concealed={}", fmt(r.concealed_db));
        println!("psnr_outside={}", fmt(r.outside_db));
        println!("psnr_whole={}", fmt(Some(r.whole_db)));
    }

    for (i, rep) in result.reports.iter().enumerate() {
        eprintln!(
            "solve {}: {} iterations, residual {:.3e} (bound {:.3e}), {}",
            i + 1,
            rep.iterations,
            rep.residual_norm,
            rep.epsilon,
            if rep.converged { "converged" } else { "not converged" }
        );
    }
    if !result.converged() {
        return Err(NotConverged.into());
    }
    Ok(())
}
