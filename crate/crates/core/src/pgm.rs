//! Bit-exact 16-bit depth image files (binary PGM, `P5`).
//!
//! Layout: `P5`, one comment line `# fx fy cx cy` carrying the intrinsics to
//! 6 decimals, width/height, maxval 65535, then big-endian 16-bit samples in
//! row-major order. [`read_depth_pgm`] is the exact inverse of
//! [`write_depth_pgm`].

use thiserror::Error;

use crate::camera::CameraIntrinsics;
use crate::depth::DepthImage;

#[derive(Debug, Error, PartialEq)]
pub enum PgmError {
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("wrong PGM maxval {0} (expected 65535)")]
    WrongMaxval(u32),
    #[error("truncated PGM payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("missing `# fx fy cx cy` intrinsics comment")]
    MissingIntrinsics,
}

pub fn write_depth_pgm(img: &DepthImage) -> Vec<u8> {
    let i = &img.intrinsics;
    let mut out = Vec::with_capacity(64 + img.depths_mm.len() * 2);
    out.extend_from_slice(b"P5\n");
    out.extend_from_slice(
        format!("# {:.6} {:.6} {:.6} {:.6}\n", i.fx, i.fy, i.cx, i.cy).as_bytes(),
    );
    out.extend_from_slice(format!("{} {}\n65535\n", img.width, img.height).as_bytes());
    for &d in &img.depths_mm {
        out.extend_from_slice(&d.to_be_bytes());
    }
    out
}

pub fn read_depth_pgm(bytes: &[u8]) -> Result<DepthImage, PgmError> {
    let mut pos = 0usize;
    let mut intrinsics_comment: Option<[f64; 4]> = None;

    // PGM tokens are separated by whitespace; a `#` starts a comment running
    // to end of line. The intrinsics ride in the first 4-number comment.
    let mut next_token = |bytes: &[u8], pos: &mut usize| -> Result<String, PgmError> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos >= bytes.len() {
                return Err(PgmError::MalformedHeader("unexpected end of header".into()));
            }
            if bytes[*pos] == b'#' {
                let start = *pos + 1;
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                let comment = String::from_utf8_lossy(&bytes[start..*pos]);
                let nums: Vec<f64> = comment
                    .split_whitespace()
                    .filter_map(|t| t.parse::<f64>().ok())
                    .collect();
                if nums.len() == 4 && intrinsics_comment.is_none() {
                    intrinsics_comment = Some([nums[0], nums[1], nums[2], nums[3]]);
                }
                continue;
            }
            let start = *pos;
            while *pos < bytes.len()
                && !bytes[*pos].is_ascii_whitespace()
                && bytes[*pos] != b'#'
            {
                *pos += 1;
            }
            return Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned());
        }
    };

    let magic = next_token(bytes, &mut pos)?;
    if magic != "P5" {
        return Err(PgmError::MalformedHeader(format!("bad magic `{magic}`")));
    }
    let parse_u32 = |tok: String, what: &str| -> Result<u32, PgmError> {
        tok.parse::<u32>()
            .map_err(|_| PgmError::MalformedHeader(format!("bad {what} `{tok}`")))
    };
    let width = parse_u32(next_token(bytes, &mut pos)?, "width")?;
    let height = parse_u32(next_token(bytes, &mut pos)?, "height")?;
    let maxval = parse_u32(next_token(bytes, &mut pos)?, "maxval")?;
    if maxval != 65535 {
        return Err(PgmError::WrongMaxval(maxval));
    }
    if width == 0 || height == 0 {
        return Err(PgmError::MalformedHeader("zero image dimension".into()));
    }

    // Exactly one whitespace byte separates the maxval from the payload.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(PgmError::MalformedHeader(
            "missing separator before payload".into(),
        ));
    }
    pos += 1;

    let [fx, fy, cx, cy] = intrinsics_comment.ok_or(PgmError::MissingIntrinsics)?;
    let intrinsics = CameraIntrinsics::new(fx, fy, cx, cy, width, height)
        .map_err(|e| PgmError::MalformedHeader(e.to_string()))?;

    let n = width as usize * height as usize;
    let payload = &bytes[pos..];
    if payload.len() < n * 2 {
        return Err(PgmError::TruncatedPayload {
            expected: n * 2,
            found: payload.len(),
        });
    }
    let depths_mm = payload[..n * 2]
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();

    Ok(DepthImage {
        width,
        height,
        depths_mm,
        intrinsics,
    })
}
