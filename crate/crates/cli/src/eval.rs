//! Measurement-rate sweep over a frame corpus.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use cspriv_core::keys::{keygen_a, keygen_b};
use cspriv_core::metrics::{format_csv, format_table, report};
use cspriv_core::pipeline::{decode_full, decode_semi, encode, padded_side, DecodeOptions, EncodeParams};
use cspriv_core::synthetic::{office_frame, OFFICE_FACE};
use cspriv_core::{GrayImage, MaskSeed, PsnrReport, Rect, ReportRow, User};
use rayon::prelude::*;

use crate::args::EvalArgs;
use crate::commands::{decode_options, measurement_count};
use crate::exit::usage;
use crate::files;

pub struct Frame {
    pub name: String,
    pub image: GrayImage,
    pub rects: Vec<Rect>,
}

fn is_frame(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("pgm" | "png")
    )
}

/// Frames in `dir` sorted by file name, each with the region list from the
/// sibling `<stem>.regions` file when present.
pub fn load_corpus(dir: &Path) -> Result<Vec<Frame>> {
    let entries = fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.with_context(|| format!("cannot list {}", dir.display()))?.path();
        if path.is_file() && is_frame(&path) {
            paths.push(path);
        }
    }
    paths.sort();
    let mut frames = Vec::new();
    for path in paths {
        let regions = path.with_extension("regions");
        let rects = if regions.exists() {
            files::read_regions(&regions)?
        } else {
            Vec::new()
        };
        frames.push(Frame {
            name: path.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            image: files::read_image(&path)?,
            rects,
        });
    }
    Ok(frames)
}

struct Outcome {
    semi: PsnrReport,
    full: PsnrReport,
    converged: bool,
}

fn run_one(frame: &Frame, mr: f64, args: &EvalArgs, opts: &DecodeOptions) -> Result<Outcome> {
    let side = padded_side(frame.image.width(), frame.image.height());
    let n = side * side;
    let m = measurement_count(mr, n)?;
    if args.t >= m {
        return Err(usage(format!("T = {} is not below m = {m} at MR {mr}", args.t)));
    }
    let key_a = keygen_a(args.seed, n, m)?;
    let key_b = keygen_b(args.seed.wrapping_add(1), m, args.t)?;
    let mask = MaskSeed::new(args.seed.wrapping_add(2), args.p)?;
    let params = EncodeParams {
        ratio: args.ratio,
        levels: args.levels,
        ..EncodeParams::default()
    };
    let enc = encode(&frame.image, &key_a, &key_b, &frame.rects, &mask, &params)?;
    let semi = decode_semi(&enc.payload, &key_a, opts)?;
    let full = decode_full(&enc.payload, &key_a, &key_b, opts)?;
    let zone = enc.region.pixel_indices(frame.image.width());
    let reference = frame.image.pixels();
    Ok(Outcome {
        semi: report(reference, semi.image.pixels(), &zone)?,
        full: report(reference, full.image.pixels(), &zone)?,
        converged: semi.converged() && full.converged(),
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Mean of each PSNR column over frames; zones absent from a frame are
/// skipped.
pub fn mean_report(reports: &[PsnrReport]) -> Option<PsnrReport> {
    Some(PsnrReport {
        concealed_db: mean(reports.iter().filter_map(|r| r.concealed_db)),
        outside_db: mean(reports.iter().filter_map(|r| r.outside_db)),
        whole_db: mean(reports.iter().map(|r| r.whole_db))?,
        concealed_pixels: reports.iter().map(|r| r.concealed_pixels).sum(),
        outside_pixels: reports.iter().map(|r| r.outside_pixels).sum(),
    })
}

pub fn eval_cmd(args: &EvalArgs) -> Result<()> {
    if args.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    for &mr in &args.mr {
        measurement_count(mr, 1)?;
    }
    let opts = decode_options(&args.solver)?;
    let mut frames = match &args.corpus {
        Some(dir) => load_corpus(dir)?,
        None => Vec::new(),
    };
    if args.standard {
        frames.push(Frame {
            name: "standard office frame".into(),
            image: office_frame(),
            rects: vec![OFFICE_FACE],
        });
    }
    if frames.is_empty() {
        return Err(usage("the corpus contains no .pgm or .png frames"));
    }

    let tasks: Vec<(usize, usize)> = (0..args.mr.len())
        .flat_map(|r| (0..frames.len()).map(move |f| (r, f)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .context("cannot start worker threads")?;
    let outcomes: Vec<Result<Outcome>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(r, f)| run_one(&frames[f], args.mr[r], args, &opts))
            .collect()
    });

    let mut rows = Vec::new();
    for (r, &mr) in args.mr.iter().enumerate() {
        let mut semi = Vec::new();
        let mut full = Vec::new();
        for ((tr, f), outcome) in tasks.iter().zip(&outcomes) {
            if *tr != r {
                continue;
            }
            match outcome {
                Ok(o) => {
                    if !o.converged {
                        eprintln!("{} at MR {mr}: solver did not converge", frames[*f].name);
                    }
                    semi.push(o.semi);
                    full.push(o.full);
                }
                Err(e) => eprintln!("{} at MR {mr}: {e:#}", frames[*f].name),
            }
        }
        for (user, reports) in [(User::SemiAuthorized, &semi), (User::FullyAuthorized, &full)] {
            if let Some(psnr) = mean_report(reports) {
                rows.push(ReportRow {
                    measurement_rate: mr,
                    user,
                    psnr,
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(anyhow!("every evaluation job failed"));
    }
    print!("{}", format_table(&rows));
    if let Some(path) = &args.out {
        files::write_atomic(path, format_csv(&rows).as_bytes())?;
        println!("{}", path.display());
    }
    Ok(())
}
