//! 8-bit binary PGM (P5) and PPM (P6) files, parsed and written without
//! any codec dependency so byte-level behavior is fully pinned.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use fidtrust::ImageTensor;
use ndarray::Array3;

pub fn read_pnm(path: &Path) -> Result<ImageTensor> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_pnm(&bytes).with_context(|| format!("parsing {}", path.display()))
}

pub fn parse_pnm(bytes: &[u8]) -> Result<ImageTensor> {
    if bytes.len() < 2 {
        bail!("file too short for a PNM header");
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        _ => bail!("expected a binary PGM (P5) or PPM (P6) magic number"),
    };
    let mut pos = 2;
    let width = read_token(bytes, &mut pos)?;
    let height = read_token(bytes, &mut pos)?;
    let maxval = read_token(bytes, &mut pos)?;
    if maxval == 0 || maxval > 255 {
        bail!("only 8-bit PNM files are supported (maxval {maxval})");
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        bail!("missing whitespace before the raster");
    }
    pos += 1;

    let expected = width * height * channels;
    let raster = &bytes[pos..];
    if raster.len() < expected {
        bail!(
            "raster has {} bytes, expected {expected} for {width}x{height}x{channels}",
            raster.len()
        );
    }
    if raster.len() > expected {
        bail!("trailing bytes after the raster");
    }

    let mut px = Array3::<f64>::zeros((height, width, channels));
    let mut idx = 0;
    for y in 0..height {
        for x in 0..width {
            for c in 0..channels {
                px[[y, x, c]] = raster[idx] as f64;
                idx += 1;
            }
        }
    }
    Ok(ImageTensor::new(px, (0.0, 255.0))?)
}

/// Next unsigned decimal token, skipping whitespace and '#' comments.
fn read_token(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        bail!("malformed PNM header (expected a number)");
    }
    Ok(std::str::from_utf8(&bytes[start..*pos])?.parse()?)
}

/// Serialize with the canonical header `P5\n{w} {h}\n255\n`. Pixels are
/// rounded to nearest and clamped to `[0, 255]`.
pub fn encode_pnm(img: &ImageTensor) -> Result<Vec<u8>> {
    let (h, w, c) = img.shape();
    let magic = match c {
        1 => "P5",
        3 => "P6",
        _ => bail!("PNM supports 1 or 3 channels, image has {c}"),
    };
    let mut out = format!("{magic}\n{w} {h}\n255\n").into_bytes();
    out.reserve(h * w * c);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                out.push(img.pixels()[[y, x, ch]].round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_byte_identical_for_canonical_files() {
        let mut px = Array3::zeros((2, 3, 1));
        for (i, v) in [0.0, 17.0, 255.0, 128.0, 1.0, 99.0].iter().enumerate() {
            px[[i / 3, i % 3, 0]] = *v;
        }
        let img = ImageTensor::new(px, (0.0, 255.0)).unwrap();
        let bytes = encode_pnm(&img).unwrap();
        let back = parse_pnm(&bytes).unwrap();
        assert_eq!(encode_pnm(&back).unwrap(), bytes);
        assert_eq!(back, img);
    }

    #[test]
    fn parses_comments_and_whitespace() {
        let bytes = b"P5\n# a comment\n 2 2\n# another\n255\n\x00\x40\x80\xff".to_vec();
        let img = parse_pnm(&bytes).unwrap();
        assert_eq!(img.shape(), (2, 2, 1));
        assert_eq!(img.pixels()[[0, 1, 0]], 64.0);
        assert_eq!(img.pixels()[[1, 1, 0]], 255.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(parse_pnm(b"P4\n1 1\n255\n\x00").is_err());
        assert!(parse_pnm(b"P5\n2 2\n255\n\x00\x00").is_err());
        assert!(parse_pnm(b"P5\n2 2\n65535\n\x00\x00\x00\x00").is_err());
        assert!(parse_pnm(b"P5\n2 2\n255\n\x00\x00\x00\x00\x00").is_err());
    }

    #[test]
    fn ppm_uses_three_channels() {
        let bytes = b"P6\n1 1\n255\n\x10\x20\x30".to_vec();
        let img = parse_pnm(&bytes).unwrap();
        assert_eq!(img.shape(), (1, 1, 3));
        assert_eq!(img.pixels()[[0, 0, 2]], 48.0);
    }
}
