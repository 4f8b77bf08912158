//! Byte-level JPEG container walking for MFP labelling.
//!
//! Only marker segments up to the first SOS are parsed. Samsung writes its
//! multi-frame-processing tags (`MHDR`, `LHDR`, `MFP3`) as plain ASCII inside
//! APP4; the digital zoom ratio comes from the Exif IFD of APP1.

pub mod craft;
mod exif;

pub use exif::{parse_zoom, Rational};

const SOI: u8 = 0xD8;
const EOI: u8 = 0xD9;
const SOS: u8 = 0xDA;
const APP1: u8 = 0xE1;
const APP4: u8 = 0xE4;

/// The MFP tag strings, matched case-sensitively.
pub const MFP_TAGS: [&[u8; 4]; 3] = [b"MHDR", b"LHDR", b"MFP3"];

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum JpegError {
    #[error("missing SOI marker")]
    MissingSoi,
    #[error("expected a marker at offset {offset}, found 0x{found:02X}")]
    ExpectedMarker { offset: usize, found: u8 },
    #[error("marker at offset {offset} is cut off")]
    TruncatedMarker { offset: usize },
    #[error("reserved marker 0x{marker:02X} at offset {offset}")]
    ReservedMarker { marker: u8, offset: usize },
    #[error("segment at offset {offset} has invalid length field {length}")]
    InvalidLength { offset: usize, length: usize },
    #[error("segment at offset {offset} declares {declared} bytes, {available} remain")]
    LengthOverrun {
        offset: usize,
        declared: usize,
        available: usize,
    },
    #[error("malformed TIFF structure: {0}")]
    MalformedTiff(String),
}

impl JpegError {
    pub fn code(&self) -> &'static str {
        match self {
            JpegError::MissingSoi => "jpeg-missing-soi",
            JpegError::ExpectedMarker { .. } => "jpeg-expected-marker",
            JpegError::TruncatedMarker { .. } => "jpeg-truncated-marker",
            JpegError::ReservedMarker { .. } => "jpeg-reserved-marker",
            JpegError::InvalidLength { .. } => "jpeg-invalid-length",
            JpegError::LengthOverrun { .. } => "jpeg-length-overrun",
            JpegError::MalformedTiff(_) => "tiff-malformed",
        }
    }
}

/// One marker segment. `offset` is the position of the `0xFF` that
/// introduces the marker; `length` counts payload bytes only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub marker: u8,
    pub offset: usize,
    pub length: usize,
}

impl Segment {
    /// Payload slice. Standalone markers (RSTn, TEM) have an empty payload.
    pub fn payload<'a>(&self, bytes: &'a [u8]) -> &'a [u8] {
        if self.length == 0 {
            return &[];
        }
        &bytes[self.offset + 4..self.offset + 4 + self.length]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SegmentList {
    pub segments: Vec<Segment>,
}

/// Walks marker segments from SOI until SOS, EOI or the end of input.
pub fn scan_segments(bytes: &[u8]) -> Result<SegmentList, JpegError> {
    if bytes.len() < 2 || bytes[0] != 0xFF || bytes[1] != SOI {
        return Err(JpegError::MissingSoi);
    }
    let mut segments = Vec::new();
    let mut pos = 2;
    while pos < bytes.len() {
        if bytes[pos] != 0xFF {
            return Err(JpegError::ExpectedMarker {
                offset: pos,
                found: bytes[pos],
            });
        }
        // fill bytes
        while pos + 1 < bytes.len() && bytes[pos + 1] == 0xFF {
            pos += 1;
        }
        let Some(&marker) = bytes.get(pos + 1) else {
            return Err(JpegError::TruncatedMarker { offset: pos });
        };
        match marker {
            EOI | SOS => break,
            0x01 | 0xD0..=0xD8 => {
                segments.push(Segment {
                    marker,
                    offset: pos,
                    length: 0,
                });
                pos += 2;
            }
            0x00..=0xBF => {
                return Err(JpegError::ReservedMarker {
                    marker,
                    offset: pos,
                })
            }
            _ => {
                if pos + 4 > bytes.len() {
                    return Err(JpegError::TruncatedMarker { offset: pos });
                }
                let field = usize::from(u16::from_be_bytes([bytes[pos + 2], bytes[pos + 3]]));
                if field < 2 {
                    return Err(JpegError::InvalidLength {
                        offset: pos,
                        length: field,
                    });
                }
                let available = bytes.len() - pos - 2;
                if field > available {
                    return Err(JpegError::LengthOverrun {
                        offset: pos,
                        declared: field,
                        available,
                    });
                }
                segments.push(Segment {
                    marker,
                    offset: pos,
                    length: field - 2,
                });
                pos += 2 + field;
            }
        }
    }
    Ok(SegmentList { segments })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MfpTags {
    pub mhdr: bool,
    pub lhdr: bool,
    pub mfp3: bool,
    pub zoom_ratio: Option<Rational>,
    pub is_mfp: bool,
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Flags MFP tags found inside any single APP4 payload, plus the Exif zoom ratio.
pub fn detect_mfp(bytes: &[u8]) -> Result<MfpTags, JpegError> {
    let list = scan_segments(bytes)?;
    let mut found = [false; 3];
    for seg in list.segments.iter().filter(|s| s.marker == APP4) {
        let payload = seg.payload(bytes);
        for (flag, tag) in found.iter_mut().zip(MFP_TAGS) {
            *flag |= contains(payload, tag);
        }
    }
    let zoom_ratio = exif::zoom_from_segments(&list, bytes)?;
    let [mhdr, lhdr, mfp3] = found;
    Ok(MfpTags {
        mhdr,
        lhdr,
        mfp3,
        zoom_ratio,
        is_mfp: mhdr || lhdr || mfp3,
    })
}

#[cfg(test)]
mod tests {
    use super::craft::{exif_payload, JpegBuilder};
    use super::*;

    #[test]
    fn minimal_file_has_no_segments() {
        let list = scan_segments(&[0xFF, 0xD8, 0xFF, 0xD9]).unwrap();
        assert!(list.segments.is_empty());
    }

    #[test]
    fn app4_then_sos() {
        let mut bytes = vec![0xFF, 0xD8, 0xFF, 0xE4, 0x00, 0x0A];
        bytes.extend_from_slice(b"abcdefgh");
        bytes.extend_from_slice(&[0xFF, 0xDA, 0x00, 0x02, 0x12, 0xFF, 0x00]);
        let list = scan_segments(&bytes).unwrap();
        assert_eq!(
            list.segments,
            vec![Segment {
                marker: 0xE4,
                offset: 2,
                length: 8
            }]
        );
        assert_eq!(list.segments[0].payload(&bytes), b"abcdefgh");
    }

    #[test]
    fn overrun_is_reported() {
        let bytes = [0xFF, 0xD8, 0xFF, 0xE4, 0x00, 0x40, 1, 2, 3];
        assert!(matches!(
            scan_segments(&bytes).unwrap_err(),
            JpegError::LengthOverrun {
                offset: 2,
                declared: 0x40,
                ..
            }
        ));
    }

    #[test]
    fn structural_errors_are_distinct() {
        assert_eq!(
            scan_segments(b"\x89PNG").unwrap_err(),
            JpegError::MissingSoi
        );
        assert!(matches!(
            scan_segments(&[0xFF, 0xD8, 0xFF, 0x05]).unwrap_err(),
            JpegError::ReservedMarker { marker: 0x05, .. }
        ));
        assert!(matches!(
            scan_segments(&[0xFF, 0xD8, 0x12]).unwrap_err(),
            JpegError::ExpectedMarker {
                offset: 2,
                found: 0x12
            }
        ));
        assert!(matches!(
            scan_segments(&[0xFF, 0xD8, 0xFF, 0xE0, 0x00, 0x01]).unwrap_err(),
            JpegError::InvalidLength { length: 1, .. }
        ));
        assert!(matches!(
            scan_segments(&[0xFF, 0xD8, 0xFF]).unwrap_err(),
            JpegError::TruncatedMarker { offset: 2 }
        ));
    }

    #[test]
    fn fill_bytes_are_skipped() {
        let bytes = [0xFF, 0xD8, 0xFF, 0xFF, 0xFF, 0xE4, 0x00, 0x02, 0xFF, 0xD9];
        let list = scan_segments(&bytes).unwrap();
        assert_eq!(list.segments[0].offset, 4);
        assert_eq!(list.segments[0].length, 0);
    }

    #[test]
    fn mhdr_in_app4() {
        let bytes = JpegBuilder::new().app(4, b"SEC..MHDR..").build();
        let tags = detect_mfp(&bytes).unwrap();
        assert!(tags.mhdr && tags.is_mfp);
        assert!(!tags.lhdr && !tags.mfp3);
    }

    #[test]
    fn tags_outside_app4_are_ignored() {
        let bytes = JpegBuilder::new().app(1, b"MHDR LHDR MFP3").build();
        assert_eq!(detect_mfp(&bytes).unwrap(), MfpTags::default());
    }

    #[test]
    fn tags_do_not_span_segments() {
        let bytes = JpegBuilder::new().app(4, b"xxMF").app(4, b"P3xx").build();
        assert!(!detect_mfp(&bytes).unwrap().mfp3);
    }

    #[test]
    fn match_is_case_sensitive() {
        let bytes = JpegBuilder::new().app(4, b"mhdr lhdr mfp3").build();
        assert!(!detect_mfp(&bytes).unwrap().is_mfp);
    }

    #[test]
    fn zoom_from_exif() {
        let bytes = JpegBuilder::new()
            .app(1, &exif_payload(Some((2, 1)), false))
            .app(4, b"LHDR")
            .build();
        let tags = detect_mfp(&bytes).unwrap();
        assert_eq!(tags.zoom_ratio, Some(Rational { num: 2, den: 1 }));
        assert!(tags.lhdr);
    }
}
