//! Builders for synthetic JPEG containers (no image data, just markers).
//! Used for fixtures and for exercising the scanner.

/// Assembles `SOI`, the queued segments, a minimal `SOS` with a few bytes of
/// stuffed scan data, and `EOI`.
#[derive(Clone, Debug, Default)]
pub struct JpegBuilder {
    segments: Vec<(u8, Vec<u8>)>,
}

impl JpegBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Queues an `APPn` segment.
    pub fn app(self, n: u8, payload: &[u8]) -> Self {
        assert!(n < 16);
        self.segment(0xE0 + n, payload)
    }

    pub fn segment(mut self, marker: u8, payload: &[u8]) -> Self {
        assert!(payload.len() <= 65533, "payload too large for one segment");
        self.segments.push((marker, payload.to_vec()));
        self
    }

    pub fn build(&self) -> Vec<u8> {
        let mut out = vec![0xFF, 0xD8];
        for (marker, payload) in &self.segments {
            out.extend_from_slice(&[0xFF, *marker]);
            out.extend_from_slice(&((payload.len() + 2) as u16).to_be_bytes());
            out.extend_from_slice(payload);
        }
        // SOS header for one component, then entropy-coded bytes with a stuffed 0xFF
        out.extend_from_slice(&[0xFF, 0xDA, 0x00, 0x08, 0x01, 0x01, 0x00, 0x00, 0x3F, 0x00]);
        out.extend_from_slice(&[0x12, 0xFF, 0x00, 0x34, 0xFF, 0xD9]);
        out
    }
}

/// An APP1 Exif payload whose Exif IFD holds `ExifVersion` and, when given,
/// `DigitalZoomRatio = num/den`.
pub fn exif_payload(zoom: Option<(u32, u32)>, big_endian: bool) -> Vec<u8> {
    let u16b = |v: u16| {
        if big_endian {
            v.to_be_bytes()
        } else {
            v.to_le_bytes()
        }
    };
    let u32b = |v: u32| {
        if big_endian {
            v.to_be_bytes()
        } else {
            v.to_le_bytes()
        }
    };

    let mut tiff = Vec::new();
    tiff.extend_from_slice(if big_endian { b"MM" } else { b"II" });
    tiff.extend_from_slice(&u16b(42));
    tiff.extend_from_slice(&u32b(8));

    // IFD0: one entry pointing at the Exif IFD
    let exif_ifd = 8 + 2 + 12 + 4;
    tiff.extend_from_slice(&u16b(1));
    tiff.extend_from_slice(&u16b(0x8769));
    tiff.extend_from_slice(&u16b(4));
    tiff.extend_from_slice(&u32b(1));
    tiff.extend_from_slice(&u32b(exif_ifd));
    tiff.extend_from_slice(&u32b(0));

    let entries: u16 = if zoom.is_some() { 2 } else { 1 };
    let data_at = exif_ifd + 2 + 12 * u32::from(entries) + 4;
    tiff.extend_from_slice(&u16b(entries));
    tiff.extend_from_slice(&u16b(0x9000));
    tiff.extend_from_slice(&u16b(7));
    tiff.extend_from_slice(&u32b(4));
    tiff.extend_from_slice(b"0230");
    if zoom.is_some() {
        tiff.extend_from_slice(&u16b(0xA404));
        tiff.extend_from_slice(&u16b(5));
        tiff.extend_from_slice(&u32b(1));
        tiff.extend_from_slice(&u32b(data_at));
    }
    tiff.extend_from_slice(&u32b(0));
    if let Some((num, den)) = zoom {
        tiff.extend_from_slice(&u32b(num));
        tiff.extend_from_slice(&u32b(den));
    }

    let mut payload = b"Exif\0\0".to_vec();
    payload.extend_from_slice(&tiff);
    payload
}
