//! Binary PGM (P5) and PPM (P6).

use super::Image;
use crate::error::{Error, Result};

struct Header {
    channels: usize,
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        other => return Err(Error::UnsupportedFormat(format!("PNM magic {other:?}"))),
    };
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::MalformedHeader("header ends early".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::MalformedHeader(format!(
                "expected a number at byte {start}"
            )));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| Error::MalformedHeader(format!("number '{text}' out of range")))?;
    }
    // exactly one whitespace byte before the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(Error::MalformedHeader(
                "missing separator before raster".into(),
            ))
        }
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader("zero image dimension".into()));
    }
    Ok(Header {
        channels,
        width: width as usize,
        height: height as usize,
        maxval,
        data_start: pos,
    })
}

pub(super) fn decode(bytes: &[u8]) -> Result<Image> {
    let h = parse_header(bytes)?;
    let depth = match h.maxval {
        255 => 8,
        65535 => 16,
        m => return Err(Error::UnsupportedFormat(format!("PNM maxval {m}"))),
    };
    let bytes_per_sample = if depth == 8 { 1 } else { 2 };
    let count = h
        .width
        .checked_mul(h.height)
        .and_then(|n| n.checked_mul(h.channels))
        .ok_or_else(|| Error::MalformedHeader("image dimensions overflow".into()))?;
    let expected = count
        .checked_mul(bytes_per_sample)
        .ok_or_else(|| Error::MalformedHeader("image dimensions overflow".into()))?;
    let payload = &bytes[h.data_start..];
    if payload.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: payload.len(),
        });
    }
    let pixels = if depth == 8 {
        payload[..expected].iter().map(|&b| u16::from(b)).collect()
    } else {
        payload[..expected]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    Image::new(h.height, h.width, h.channels, depth, pixels)
}

pub(super) fn encode(img: &Image) -> Vec<u8> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!(
        "{magic}\n{} {}\n{}\n",
        img.width(),
        img.height(),
        img.max_value()
    )
    .into_bytes();
    if img.depth() == 8 {
        out.extend(img.pixels().iter().map(|&v| v as u8));
    } else {
        for &v in img.pixels() {
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_tiny_pgm() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 17, 34]);
        let img = decode(&bytes).unwrap();
        assert_eq!(
            (img.height(), img.width(), img.channels(), img.depth()),
            (2, 2, 1, 8)
        );
        assert_eq!(img.pixels(), &[0, 255, 17, 34]);
    }

    #[test]
    fn ppm_truncation() {
        let mut bytes = b"P6 4 4 255\n".to_vec();
        bytes.extend_from_slice(&[7; 24]);
        match decode(&bytes).unwrap_err() {
            Error::Truncated { expected, actual } => assert_eq!((expected, actual), (48, 24)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn sixteen_bit_is_big_endian() {
        let mut bytes = b"P5\n# comment line\n1 1\n65535\n".to_vec();
        bytes.extend_from_slice(&[0x12, 0x34]);
        let img = decode(&bytes).unwrap();
        assert_eq!(img.depth(), 16);
        assert_eq!(img.pixels(), &[0x1234]);
    }

    #[test]
    fn header_errors() {
        assert_eq!(
            decode(b"P5 2 x 255\n").unwrap_err().code(),
            "malformed-header"
        );
        assert_eq!(decode(b"P5 2 2").unwrap_err().code(), "malformed-header");
        assert_eq!(
            decode(b"P5 1 1 1023\n\0\0").unwrap_err().code(),
            "unsupported-format"
        );
        assert_eq!(
            decode(b"P5 99999999999 1 255\n").unwrap_err().code(),
            "malformed-header"
        );
    }
}
