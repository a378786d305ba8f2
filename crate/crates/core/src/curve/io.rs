use std::io::{BufRead, Write};

use super::{DiscreteCurve, GeometricReport, Point};
use crate::error::{Error, Result};

pub const CURVE_HEADER: &str = "index,x,y";
pub const REPORT_HEADER: &str = "L,B,E,TC,yMin,yMax";

/// Writes a curve snapshot as `index,x,y` rows.
pub fn write_curve_csv<W: Write>(curve: &DiscreteCurve, mut out: W) -> Result<()> {
    writeln!(out, "{CURVE_HEADER}")?;
    for (i, p) in curve.points().iter().enumerate() {
        writeln!(out, "{i},{:?},{:?}", p.x, p.y)?;
    }
    Ok(())
}

pub fn read_curve_csv<R: BufRead>(input: R) -> Result<DiscreteCurve> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty curve file".into()))??;
    if header.trim() != CURVE_HEADER {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut points = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("row {row}: expected 3 fields")));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {row}: {e}")))
        };
        let index: usize = fields[0]
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("row {row}: {e}")))?;
        if index != points.len() {
            return Err(Error::Parse(format!("row {row}: index {index} out of order")));
        }
        points.push(Point::new(parse(fields[1])?, parse(fields[2])?));
    }
    DiscreteCurve::new(points)
}

/// Single-row report CSV.
pub fn write_report_csv<W: Write>(report: &GeometricReport, mut out: W) -> Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    writeln!(
        out,
        "{:?},{:?},{:?},{:?},{:?},{:?}",
        report.length,
        report.bending,
        report.energy,
        report.total_curvature,
        report.y_min,
        report.y_max
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{report, semicircle};

    #[test]
    fn snapshot_roundtrip_is_exact() {
        let c = semicircle(33).unwrap();
        let mut buf = Vec::new();
        write_curve_csv(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("index,x,y\n0,"));
        assert!(!text.contains('\r'));
        let back = read_curve_csv(buf.as_slice()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_header() {
        assert!(read_curve_csv("i,x,y\n0,0,0\n".as_bytes()).is_err());
    }

    #[test]
    fn report_row() {
        let c = semicircle(16).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&report(&c, 1.0), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("L,B,E,TC,yMin,yMax"));
        assert_eq!(lines.next().unwrap().split(',').count(), 6);
    }
}
