use serde::{Deserialize, Serialize};

use super::{scan_segments, JpegError, SegmentList, APP1};

const EXIF_HEADER: &[u8; 6] = b"Exif\0\0";
const TAG_EXIF_IFD: u16 = 0x8769;
const TAG_DIGITAL_ZOOM: u16 = 0xA404;
const TYPE_LONG: u16 = 4;
const TYPE_RATIONAL: u16 = 5;
const TYPE_IFD: u16 = 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: u32,
    pub den: u32,
}

struct Tiff<'a> {
    data: &'a [u8],
    big_endian: bool,
}

fn malformed(msg: impl Into<String>) -> JpegError {
    JpegError::MalformedTiff(msg.into())
}

impl<'a> Tiff<'a> {
    fn new(data: &'a [u8]) -> Result<Self, JpegError> {
        if data.len() < 8 {
            return Err(malformed("header shorter than 8 bytes"));
        }
        let big_endian = match &data[..2] {
            b"II" => false,
            b"MM" => true,
            _ => return Err(malformed("unknown byte order")),
        };
        let tiff = Tiff { data, big_endian };
        if tiff.u16_at(2)? != 42 {
            return Err(malformed("bad magic"));
        }
        Ok(tiff)
    }

    fn bytes<const N: usize>(&self, at: usize) -> Result<[u8; N], JpegError> {
        at.checked_add(N)
            .and_then(|end| self.data.get(at..end))
            .map(|s| s.try_into().unwrap())
            .ok_or_else(|| malformed(format!("read of {N} bytes at {at} out of bounds")))
    }

    fn u16_at(&self, at: usize) -> Result<u16, JpegError> {
        let b = self.bytes::<2>(at)?;
        Ok(if self.big_endian {
            u16::from_be_bytes(b)
        } else {
            u16::from_le_bytes(b)
        })
    }

    fn u32_at(&self, at: usize) -> Result<u32, JpegError> {
        let b = self.bytes::<4>(at)?;
        Ok(if self.big_endian {
            u32::from_be_bytes(b)
        } else {
            u32::from_le_bytes(b)
        })
    }

    /// Returns `(type, count, value_offset_field_position)` of `tag` in the IFD at `ifd`.
    fn find(&self, ifd: usize, tag: u16) -> Result<Option<(u16, u32, usize)>, JpegError> {
        let count = usize::from(self.u16_at(ifd)?);
        let end = ifd + 2 + 12 * count;
        if end > self.data.len() {
            return Err(malformed(format!(
                "IFD at {ifd} with {count} entries overruns data"
            )));
        }
        for i in 0..count {
            let entry = ifd + 2 + 12 * i;
            if self.u16_at(entry)? == tag {
                let ty = self.u16_at(entry + 2)?;
                let n = self.u32_at(entry + 4)?;
                return Ok(Some((ty, n, entry + 8)));
            }
        }
        Ok(None)
    }
}

fn zoom_from_tiff(data: &[u8]) -> Result<Option<Rational>, JpegError> {
    let tiff = Tiff::new(data)?;
    let ifd0 = tiff.u32_at(4)? as usize;
    let Some((ty, count, field)) = tiff.find(ifd0, TAG_EXIF_IFD)? else {
        return Ok(None);
    };
    if !(ty == TYPE_LONG || ty == TYPE_IFD) || count != 1 {
        return Err(malformed(format!(
            "Exif IFD pointer has type {ty}, count {count}"
        )));
    }
    let exif_ifd = tiff.u32_at(field)? as usize;
    let Some((ty, count, field)) = tiff.find(exif_ifd, TAG_DIGITAL_ZOOM)? else {
        return Ok(None);
    };
    if ty != TYPE_RATIONAL || count == 0 {
        return Err(malformed(format!(
            "DigitalZoomRatio has type {ty}, count {count}"
        )));
    }
    let at = tiff.u32_at(field)? as usize;
    Ok(Some(Rational {
        num: tiff.u32_at(at)?,
        den: tiff.u32_at(
            at.checked_add(4)
                .ok_or_else(|| malformed("offset overflow"))?,
        )?,
    }))
}

pub(super) fn zoom_from_segments(
    list: &SegmentList,
    bytes: &[u8],
) -> Result<Option<Rational>, JpegError> {
    let exif = list
        .segments
        .iter()
        .filter(|s| s.marker == APP1)
        .map(|s| s.payload(bytes))
        .find(|p| p.starts_with(EXIF_HEADER));
    match exif {
        Some(payload) => zoom_from_tiff(&payload[EXIF_HEADER.len()..]),
        None => Ok(None),
    }
}

/// The Exif `DigitalZoomRatio`, or `None` when there is no Exif APP1 or the
/// tag is absent.
pub fn parse_zoom(bytes: &[u8]) -> Result<Option<Rational>, JpegError> {
    let list = scan_segments(bytes)?;
    zoom_from_segments(&list, bytes)
}

#[cfg(test)]
mod tests {
    use super::super::craft::{exif_payload, JpegBuilder};
    use super::*;

    #[test]
    fn zoom_both_byte_orders() {
        for big_endian in [false, true] {
            let bytes = JpegBuilder::new()
                .app(1, &exif_payload(Some((2, 1)), big_endian))
                .build();
            assert_eq!(
                parse_zoom(&bytes).unwrap(),
                Some(Rational { num: 2, den: 1 })
            );
        }
    }

    #[test]
    fn absent_tag_is_none() {
        let bytes = JpegBuilder::new().app(1, &exif_payload(None, true)).build();
        assert_eq!(parse_zoom(&bytes).unwrap(), None);
        assert_eq!(parse_zoom(&JpegBuilder::new().build()).unwrap(), None);
    }

    #[test]
    fn broken_tiff_is_an_error() {
        let mut payload = exif_payload(Some((3, 2)), false);
        payload[6] = b'X';
        let bytes = JpegBuilder::new().app(1, &payload).build();
        assert!(matches!(
            parse_zoom(&bytes),
            Err(JpegError::MalformedTiff(_))
        ));

        let mut payload = exif_payload(Some((3, 2)), false);
        payload.truncate(30);
        let bytes = JpegBuilder::new().app(1, &payload).build();
        assert!(matches!(
            parse_zoom(&bytes),
            Err(JpegError::MalformedTiff(_))
        ));
    }
}
