//! Zone-aware PSNR with a peak of 1.0.
//!
//! Identical zones report `f64::INFINITY`, produced explicitly rather than
//! through a division by zero.

use std::fmt::Write as _;

use crate::{Error, Result};

fn check_dims(reference: &[f64], estimate: &[f64]) -> Result<()> {
    if reference.len() != estimate.len() {
        return Err(Error::DimensionMismatch(format!(
            "reference has {} samples, estimate {}",
            reference.len(),
            estimate.len()
        )));
    }
    Ok(())
}

/// Mean squared error; `None` when the zone is empty.
fn zone_mse(reference: &[f64], estimate: &[f64], zone: Option<&[usize]>) -> Result<Option<f64>> {
    check_dims(reference, estimate)?;
    let (sum, count) = match zone {
        None => (
            reference
                .iter()
                .zip(estimate)
                .map(|(r, e)| (r - e) * (r - e))
                .sum::<f64>(),
            reference.len(),
        ),
        Some(indices) => {
            let mut sum = 0.0;
            for &i in indices {
                if i >= reference.len() {
                    return Err(Error::IndexOutOfRange {
                        index: i,
                        len: reference.len(),
                    });
                }
                sum += (reference[i] - estimate[i]).powi(2);
            }
            (sum, indices.len())
        }
    };
    Ok((count > 0).then(|| sum / count as f64))
}

/// PSNR in dB from an MSE, peak 1.0.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

/// PSNR of `estimate` against `reference` over `zone` (whole frame when
/// `None`).
pub fn psnr(reference: &[f64], estimate: &[f64], zone: Option<&[usize]>) -> Result<f64> {
    zone_mse(reference, estimate, zone)?
        .map(psnr_from_mse)
        .ok_or(Error::EmptyZone)
}

/// PSNRs for the concealed region, its complement and the whole frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsnrReport {
    /// `None` when the region is empty.
    pub concealed_db: Option<f64>,
    /// `None` when the region covers the whole frame.
    pub outside_db: Option<f64>,
    pub whole_db: f64,
    pub concealed_pixels: usize,
    pub outside_pixels: usize,
}

/// Zone report; `region` holds row-major indices into the frame.
pub fn report(reference: &[f64], estimate: &[f64], region: &[usize]) -> Result<PsnrReport> {
    check_dims(reference, estimate)?;
    let total = reference.len();
    if total == 0 {
        return Err(Error::EmptyZone);
    }
    let mut inside = vec![false; total];
    for &i in region {
        if i >= total {
            return Err(Error::IndexOutOfRange { index: i, len: total });
        }
        if inside[i] {
            return Err(Error::InvalidParameter(format!(
                "region index {i} listed twice"
            )));
        }
        inside[i] = true;
    }
    let outside: Vec<usize> = (0..total).filter(|&i| !inside[i]).collect();
    let concealed_mse = zone_mse(reference, estimate, Some(region))?;
    let outside_mse = zone_mse(reference, estimate, Some(&outside))?;
    let whole_mse = zone_mse(reference, estimate, None)?.ok_or(Error::EmptyZone)?;

    let weighted = (concealed_mse.unwrap_or(0.0) * region.len() as f64
        + outside_mse.unwrap_or(0.0) * outside.len() as f64)
        / total as f64;
    debug_assert!((weighted - whole_mse).abs() <= 1e-12 * (1.0 + whole_mse));

    Ok(PsnrReport {
        concealed_db: concealed_mse.map(psnr_from_mse),
        outside_db: outside_mse.map(psnr_from_mse),
        whole_db: psnr_from_mse(whole_mse),
        concealed_pixels: region.len(),
        outside_pixels: outside.len(),
    })
}

/// Which decoder produced a reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum User {
    Eavesdropper,
    /// Holds the sensing key only ("User A").
    SemiAuthorized,
    /// Holds both keys ("User B").
    FullyAuthorized,
}

impl User {
    pub fn label(&self) -> &'static str {
        match self {
            User::Eavesdropper => "eavesdropper",
            User::SemiAuthorized => "A",
            User::FullyAuthorized => "B",
        }
    }
}

/// One row of a measurement-rate sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub measurement_rate: f64,
    pub user: User,
    pub psnr: PsnrReport,
}

fn fmt_db(v: Option<f64>) -> String {
    match v {
        None => "n/a".to_string(),
        Some(v) if v.is_infinite() => "inf".to_string(),
        Some(v) => format!("{v:.2}"),
    }
}

/// Table with one line per measurement rate and paired A/B columns for
/// each zone. Rows for other users are ignored.
pub fn format_table(rows: &[ReportRow]) -> String {
    let mut rates: Vec<f64> = rows.iter().map(|r| r.measurement_rate).collect();
    rates.sort_by(f64::total_cmp);
    rates.dedup();
    let find = |mr: f64, user: User| {
        rows.iter()
            .find(|r| r.measurement_rate == mr && r.user == user)
            .map(|r| r.psnr)
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>5} | {:>9} {:>9} | {:>9} {:>9} | {:>9} {:>9}",
        "", "Concealed", "", "Outside", "", "Whole", ""
    );
    let _ = writeln!(
        out,
        "{:>5} | {:>9} {:>9} | {:>9} {:>9} | {:>9} {:>9}",
        "MR", "User A", "User B", "User A", "User B", "User A", "User B"
    );
    for mr in rates {
        let a = find(mr, User::SemiAuthorized);
        let b = find(mr, User::FullyAuthorized);
        let _ = writeln!(
            out,
            "{:>5.2} | {:>9} {:>9} | {:>9} {:>9} | {:>9} {:>9}",
            mr,
            fmt_db(a.and_then(|p| p.concealed_db)),
            fmt_db(b.and_then(|p| p.concealed_db)),
            fmt_db(a.and_then(|p| p.outside_db)),
            fmt_db(b.and_then(|p| p.outside_db)),
            fmt_db(a.map(|p| p.whole_db)),
            fmt_db(b.map(|p| p.whole_db)),
        );
    }
    out
}

/// Comma-separated `mr,user,concealed,outside,whole` rows with a header.
pub fn format_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("mr,user,concealed,outside,whole\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:.2},{},{},{},{}",
            r.measurement_rate,
            r.user.label(),
            fmt_db(r.psnr.concealed_db),
            fmt_db(r.psnr.outside_db),
            fmt_db(Some(r.psnr.whole_db)),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_infinite() {
        let a = [0.1, 0.2, 0.3];
        assert_eq!(psnr(&a, &a, None).unwrap(), f64::INFINITY);
    }

    #[test]
    fn half_gray_against_black() {
        let v = psnr(&[0.0; 16], &[0.5; 16], None).unwrap();
        assert!((v - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!((v - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn error_outside_zone_is_invisible() {
        let reference = [0.0, 0.0, 0.0, 0.0];
        let estimate = [0.0, 0.9, 0.0, 0.4];
        assert_eq!(psnr(&reference, &estimate, Some(&[0, 2])).unwrap(), f64::INFINITY);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            psnr(&[0.0; 3], &[0.0; 4], None),
            Err(Error::DimensionMismatch(_))
        ));
        assert_eq!(psnr(&[0.0; 3], &[0.0; 3], Some(&[])).unwrap_err(), Error::EmptyZone);
    }

    #[test]
    fn empty_region_report() {
        let r = report(&[0.0, 0.0], &[0.1, 0.1], &[]).unwrap();
        assert_eq!(r.concealed_db, None);
        assert_eq!(r.outside_db, Some(r.whole_db));
    }

    #[test]
    fn weighted_mean_of_zones() {
        // |C| = N/4 with MSE 0.1 inside and 0.001 outside
        let n = 64;
        let reference = vec![0.0; n];
        let mut estimate = vec![0.001f64.sqrt(); n];
        let region: Vec<usize> = (0..n / 4).collect();
        for &i in &region {
            estimate[i] = 0.1f64.sqrt();
        }
        let r = report(&reference, &estimate, &region).unwrap();
        let expected = 10.0 * (1.0 / 0.02575f64).log10();
        assert!((r.whole_db - expected).abs() < 1e-9);
        assert_eq!(r.concealed_pixels + r.outside_pixels, n);
    }

    #[test]
    fn csv_and_table_layout() {
        let psnr = PsnrReport {
            concealed_db: Some(9.5),
            outside_db: Some(28.0),
            whole_db: f64::INFINITY,
            concealed_pixels: 1,
            outside_pixels: 3,
        };
        let rows = [ReportRow {
            measurement_rate: 0.6,
            user: User::SemiAuthorized,
            psnr,
        }];
        assert_eq!(format_csv(&rows), "mr,user,concealed,outside,whole\n0.60,A,9.50,28.00,inf\n");
        let table = format_table(&rows);
        assert_eq!(table.lines().count(), 3);
        assert!(table.lines().nth(2).unwrap().contains("9.50"));
    }
}
