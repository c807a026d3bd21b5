use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::TrialRecord;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "trial_id,sigma_min_h,sigma_max_h,sigma_min_g,sigma_min_hp,sigma_min_gp,adv,advup,log10_adv,b_success_paper,b_success_symbol,e_success_paper,e_success_symbol,power_ratio,failed";

/// Writes records with a header row. Floats use the shortest representation
/// that round-trips, so output is byte-stable for identical inputs.
pub fn write_csv<W: Write>(
    records: &[TrialRecord],
    writer: W,
) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyOutput("no trial records to write"));
    }
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(records, BufWriter::new(file)).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != CSV_HEADER {
        return Err(Error::invalid(format!(
            "unexpected CSV header in {}: {header}",
            path.display()
        )));
    }
    r.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err)
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const PAD: f64 = 60.0;

/// Scatter of `series` against its index, with horizontal lines at the
/// series mean and at `reference`. Non-finite points are skipped.
pub fn svg_scatter(series: &[f64], reference: f64, y_label: &str) -> Result<String> {
    let points: Vec<(usize, f64)> = series
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .collect();
    if points.is_empty() {
        return Err(Error::EmptyOutput("no finite points to plot"));
    }
    if !reference.is_finite() {
        return Err(Error::invalid("reference line must be finite"));
    }
    let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let (mut lo, mut hi) = points
        .iter()
        .fold((reference.min(mean), reference.max(mean)), |(lo, hi), p| {
            (lo.min(p.1), hi.max(p.1))
        });
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let span = hi - lo;
    lo -= 0.05 * span;
    hi += 0.05 * span;
    let n = series.len().max(2) - 1;
    let x = |i: usize| PAD + (WIDTH - 2.0 * PAD) * i as f64 / n as f64;
    let y = |v: f64| HEIGHT - PAD - (HEIGHT - 2.0 * PAD) * (v - lo) / (hi - lo);

    let mut s = String::new();
    // Writing to a String cannot fail.
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect class="frame" x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * PAD,
        HEIGHT - 2.0 * PAD
    );
    for (i, v) in &points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="steelblue"/>"#,
            x(*i),
            y(*v)
        );
    }
    for (class, v, colour) in [
        ("mean", mean, "firebrick"),
        ("reference", reference, "darkgreen"),
    ] {
        let _ = writeln!(
            s,
            r#"<line class="ref-line {class}" x1="{PAD}" y1="{yy:.2}" x2="{}" y2="{yy:.2}" stroke="{colour}" stroke-dasharray="6 4"/>"#,
            WIDTH - PAD,
            yy = y(v)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-size="12" fill="{colour}">{class} = {v:.3}</text>"#,
            WIDTH - PAD + 4.0,
            y(v) + 4.0
        );
    }
    for v in [lo, hi] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-size="12" text-anchor="end">{v:.2}</text>"#,
            PAD - 6.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">trial</text>"#,
        WIDTH / 2.0,
        HEIGHT - PAD / 3.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 {} {})">{}</text>"#,
        PAD / 3.0,
        HEIGHT / 2.0,
        PAD / 3.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_svg_scatter(series: &[f64], reference: f64, y_label: &str, path: &Path) -> Result<()> {
    let svg = svg_scatter(series, reference, y_label)?;
    std::fs::write(path, svg).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: u64) -> TrialRecord {
        TrialRecord {
            trial_id: id,
            sigma_min_h: 0.1 * id as f64,
            sigma_max_h: 3.0,
            sigma_min_g: 0.5,
            sigma_min_hp: 1.0,
            sigma_min_gp: 0.25,
            adv: 16.0,
            advup: 36.0,
            log10_adv: 16f64.log10(),
            b_success_paper: true,
            b_success_symbol: true,
            e_success_paper: id % 2 == 0,
            e_success_symbol: false,
            power_ratio: 1.0 / 3.0,
            failed: false,
        }
    }

    #[test]
    fn header_matches_serialized_fields() {
        let mut buf = Vec::new();
        write_csv(&[record(0)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn round_trip_including_nan() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut recs: Vec<_> = (0..5).map(record).collect();
        recs[3].adv = f64::NAN;
        recs[3].failed = true;
        emit_csv(&recs, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.len(), 5);
        assert!(back[3].adv.is_nan());
        assert_eq!(back[4], recs[4]);
        assert_eq!(back[1].power_ratio.to_bits(), recs[1].power_ratio.to_bits());
    }

    #[test]
    fn empty_outputs_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            emit_csv(&[], &dir.path().join("x.csv")),
            Err(Error::EmptyOutput(_))
        ));
        assert!(svg_scatter(&[], 1.0, "y").is_err());
        assert!(svg_scatter(&[f64::NAN], 1.0, "y").is_err());
    }

    #[test]
    fn missing_directory_reports_path() {
        let err = emit_csv(&[record(0)], Path::new("/nonexistent/dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/x.csv"));
    }

    #[test]
    fn svg_has_one_circle_per_point_and_two_lines() {
        let series = [1.0, 2.0, f64::NAN, 3.0, 2.5];
        let svg = svg_scatter(&series, 4.0, "log10 adv").unwrap();
        assert_eq!(svg.matches("<circle").count(), 4);
        assert_eq!(svg.matches("class=\"ref-line").count(), 2);
        assert!(svg.contains("mean = 2.125"));
        assert!(svg.trim_end().ends_with("</svg>"));
        // Constant series still renders.
        assert!(svg_scatter(&[2.0], 2.0, "y").is_ok());
    }
}
