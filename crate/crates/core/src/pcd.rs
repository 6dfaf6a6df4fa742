//! ASCII PCD v0.7 reader and writer.
//!
//! Only the ASCII flavor is supported, with at least `x y z` among the
//! declared fields; extra fields are ignored. Points with a NaN/Inf
//! component are dropped at parse time and reported in [`ParsedPcd`], so
//! `dropped + cloud.len()` always equals the declared `POINTS`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::cloud::{Point3, PointCloud};

#[derive(Debug, Error, PartialEq)]
pub enum PcdError {
    #[error("malformed PCD header: {0}")]
    MalformedHeader(String),
    #[error("unsupported PCD layout: fields must include x, y and z")]
    UnsupportedLayout,
    #[error("unsupported PCD data encoding `{0}` (only `ascii`)")]
    UnsupportedData(String),
    #[error("point count mismatch: header declares {declared}, body has {found}")]
    CountMismatch { declared: usize, found: usize },
    #[error("malformed data row at line {line}")]
    MalformedRow { line: usize },
}

/// Result of a successful parse: the retained cloud plus how many declared
/// points were dropped for having non-finite components.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPcd {
    pub cloud: PointCloud,
    pub dropped_non_finite: usize,
}

/// Parse an ASCII PCD v0.7 byte stream.
pub fn parse_pcd(bytes: &[u8]) -> Result<ParsedPcd, PcdError> {
    let text = String::from_utf8_lossy(bytes);

    let mut fields: Option<Vec<String>> = None;
    let mut declared_points: Option<usize> = None;
    let mut data_kind: Option<String> = None;
    let mut body_start = 0usize; // line index of the first data row

    let lines: Vec<&str> = text.lines().collect();
    for (idx, raw) in lines.iter().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let key = it.next().unwrap_or("");
        match key.to_ascii_uppercase().as_str() {
            "FIELDS" => fields = Some(it.map(str::to_string).collect()),
            "POINTS" => {
                let n = it
                    .next()
                    .and_then(|t| t.parse::<usize>().ok())
                    .ok_or_else(|| PcdError::MalformedHeader("bad POINTS value".into()))?;
                declared_points = Some(n);
            }
            "DATA" => {
                data_kind = Some(it.next().unwrap_or("").to_ascii_lowercase());
                body_start = idx + 1;
                break;
            }
            // Tolerated but unused header entries.
            "VERSION" | "SIZE" | "TYPE" | "COUNT" | "WIDTH" | "HEIGHT" | "VIEWPOINT" => {}
            other => {
                return Err(PcdError::MalformedHeader(format!(
                    "unexpected header line `{other}`"
                )))
            }
        }
    }

    let fields = fields.ok_or_else(|| PcdError::MalformedHeader("missing FIELDS".into()))?;
    let declared = declared_points.ok_or_else(|| PcdError::MalformedHeader("missing POINTS".into()))?;
    let data_kind = data_kind.ok_or_else(|| PcdError::MalformedHeader("missing DATA".into()))?;
    if data_kind != "ascii" {
        return Err(PcdError::UnsupportedData(data_kind));
    }

    let find = |name: &str| fields.iter().position(|f| f == name);
    let (ix, iy, iz) = match (find("x"), find("y"), find("z")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(PcdError::UnsupportedLayout),
    };

    let mut points = Vec::with_capacity(declared);
    let mut dropped = 0usize;
    let mut rows = 0usize;
    for (idx, raw) in lines.iter().enumerate().skip(body_start) {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        rows += 1;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != fields.len() {
            return Err(PcdError::MalformedRow { line: idx + 1 });
        }
        let get = |i: usize| -> Result<f64, PcdError> {
            cols[i]
                .parse::<f64>()
                .map_err(|_| PcdError::MalformedRow { line: idx + 1 })
        };
        let p = Point3::new(get(ix)?, get(iy)?, get(iz)?);
        if p.is_finite() {
            points.push(p);
        } else {
            dropped += 1;
        }
    }

    if rows != declared {
        return Err(PcdError::CountMismatch {
            declared,
            found: rows,
        });
    }

    Ok(ParsedPcd {
        cloud: PointCloud::new(points),
        dropped_non_finite: dropped,
    })
}

/// Serialize a cloud as ASCII PCD v0.7 with `FIELDS x y z` and 6-decimal
/// fixed-point coordinates (UTF-8, LF line endings).
pub fn write_pcd(cloud: &PointCloud) -> Vec<u8> {
    let n = cloud.len();
    let mut out = String::with_capacity(128 + 32 * n);
    out.push_str("# .PCD v0.7 - Point Cloud Data file format\n");
    out.push_str("VERSION 0.7\n");
    out.push_str("FIELDS x y z\n");
    out.push_str("SIZE 4 4 4\n");
    out.push_str("TYPE F F F\n");
    out.push_str("COUNT 1 1 1\n");
    let _ = writeln!(out, "WIDTH {n}");
    out.push_str("HEIGHT 1\n");
    out.push_str("VIEWPOINT 0 0 0 1 0 0 0\n");
    let _ = writeln!(out, "POINTS {n}");
    out.push_str("DATA ascii\n");
    for p in &cloud.points {
        let _ = writeln!(out, "{:.6} {:.6} {:.6}", p.x, p.y, p.z);
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pcd_with_body(points_line: &str, body: &str) -> Vec<u8> {
        format!(
            "VERSION 0.7\nFIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\n\
             WIDTH 0\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\n{points_line}\nDATA ascii\n{body}"
        )
        .into_bytes()
    }

    #[test]
    fn empty_file_parses_to_empty_cloud() {
        let parsed = parse_pcd(&pcd_with_body("POINTS 0", "")).unwrap();
        assert!(parsed.cloud.is_empty());
        assert_eq!(parsed.dropped_non_finite, 0);
    }

    #[test]
    fn non_finite_rows_are_dropped_and_counted() {
        let parsed =
            parse_pcd(&pcd_with_body("POINTS 3", "0 0 1\nnan 0 1\n1 2 3\n")).unwrap();
        assert_eq!(parsed.cloud.len(), 2);
        assert_eq!(parsed.dropped_non_finite, 1);
        assert_eq!(parsed.cloud.points[0], Point3::new(0.0, 0.0, 1.0));
        assert_eq!(parsed.cloud.points[1], Point3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn extra_fields_are_ignored() {
        let src = "VERSION 0.7\nFIELDS rgb x y z\nSIZE 4 4 4 4\nTYPE F F F F\nCOUNT 1 1 1 1\n\
                   WIDTH 1\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS 1\nDATA ascii\n9 1 2 3\n";
        let parsed = parse_pcd(src.as_bytes()).unwrap();
        assert_eq!(parsed.cloud.points[0], Point3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn missing_fields_line_is_malformed_header() {
        let src = b"VERSION 0.7\nPOINTS 0\nDATA ascii\n";
        assert!(matches!(
            parse_pcd(src),
            Err(PcdError::MalformedHeader(_))
        ));
    }

    #[test]
    fn missing_xyz_is_unsupported_layout() {
        let parsed = parse_pcd(&pcd_with_body("POINTS 0", "").as_slice().to_vec());
        assert!(parsed.is_ok());
        let src = "VERSION 0.7\nFIELDS a b c\nPOINTS 0\nDATA ascii\n";
        assert_eq!(parse_pcd(src.as_bytes()), Err(PcdError::UnsupportedLayout));
    }

    #[test]
    fn binary_data_is_rejected() {
        let src = "VERSION 0.7\nFIELDS x y z\nPOINTS 0\nDATA binary\n";
        assert_eq!(
            parse_pcd(src.as_bytes()),
            Err(PcdError::UnsupportedData("binary".into()))
        );
    }

    #[test]
    fn count_mismatch_is_reported_both_ways() {
        assert_eq!(
            parse_pcd(&pcd_with_body("POINTS 2", "0 0 1\n")),
            Err(PcdError::CountMismatch {
                declared: 2,
                found: 1
            })
        );
        assert_eq!(
            parse_pcd(&pcd_with_body("POINTS 0", "0 0 1\n")),
            Err(PcdError::CountMismatch {
                declared: 0,
                found: 1
            })
        );
    }

    #[test]
    fn writer_emits_fixed_point_rows() {
        let bytes = write_pcd(&PointCloud::new(vec![Point3::new(0.0, 0.0, 1.0)]));
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.ends_with("0.000000 0.000000 1.000000\n"));
        assert!(text.contains("POINTS 1\n"));
    }

    #[test]
    fn writer_handles_empty_cloud() {
        let bytes = write_pcd(&PointCloud::new(vec![]));
        let parsed = parse_pcd(&bytes).unwrap();
        assert!(parsed.cloud.is_empty());
    }
}
