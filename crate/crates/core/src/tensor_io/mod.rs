//! Image and tensor ingestion, the real-valued working buffer, dataset
//! manifests and the handful of geometric primitives the pipelines share.
//!
//! Supported on-disk formats:
//!
//! * binary PGM/PPM (`P5`/`P6`), maxval 255 or 65535, 16-bit samples big-endian;
//! * FPT, the toolkit's float tensor: magic `FPT1`, then little-endian `u32`
//!   height, width and channels, then `height * width * channels` little-endian
//!   `f32` values, row-major and channel-interleaved.

mod fpt;
mod geometry;
mod manifest;
mod plane;
mod pnm;

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use fpt::{decode_fpt, encode_fpt, load_plane, save_plane, FptTensor};
pub use geometry::{crop_center, resize_bicubic, to_luma, LUMA_WEIGHTS};
pub use manifest::{
    load_manifest, save_manifest, DatasetManifest, Label, ManifestEntry, Role, Tag,
};
pub use plane::Plane;

/// Smallest frame edge accepted by the analysis pipelines.
pub const MIN_PIPELINE_EDGE: usize = 64;

/// An integer-sampled image: row-major, channel-interleaved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    depth: u8,
    pixels: Vec<u16>,
    /// Free-form provenance (device, capture mode, ...).
    pub source_tag: String,
}

impl Image {
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        depth: u8,
        pixels: Vec<u16>,
    ) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::UnsupportedChannels(channels));
        }
        if depth != 8 && depth != 16 {
            return Err(Error::InvalidImage(format!("bit depth {depth}")));
        }
        if height == 0 || width == 0 {
            return Err(Error::InvalidImage("empty image".into()));
        }
        let expected = height * width * channels;
        if pixels.len() != expected {
            return Err(Error::InvalidImage(format!(
                "{} samples for {height}x{width}x{channels}",
                pixels.len()
            )));
        }
        let max = max_sample(depth);
        if let Some(pos) = pixels.iter().position(|&v| u32::from(v) > max) {
            return Err(Error::InvalidImage(format!(
                "sample {} at index {pos} exceeds {depth}-bit range",
                pixels[pos]
            )));
        }
        Ok(Image {
            height,
            width,
            channels,
            depth,
            pixels,
            source_tag: String::new(),
        })
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.source_tag = tag.into();
        self
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u16> {
        self.pixels
    }

    /// Largest representable sample, `2^depth - 1`.
    pub fn max_value(&self) -> u16 {
        max_sample(self.depth) as u16
    }

    /// True when any channel of pixel `(row, col)` sits at the maximum sample.
    pub fn is_saturated(&self, row: usize, col: usize) -> bool {
        let base = (row * self.width + col) * self.channels;
        let max = self.max_value();
        self.pixels[base..base + self.channels]
            .iter()
            .any(|&v| v == max)
    }

    pub(crate) fn ensure_pipeline_size(&self) -> Result<()> {
        if self.height < MIN_PIPELINE_EDGE || self.width < MIN_PIPELINE_EDGE {
            return Err(Error::PlaneTooSmall {
                actual: self.dims(),
                min: MIN_PIPELINE_EDGE,
            });
        }
        Ok(())
    }
}

fn max_sample(depth: u8) -> u32 {
    (1u32 << depth) - 1
}

/// Reads a PGM/PPM or FPT file. FPT tensors must hold non-negative integer
/// values below 65536; the result is 8-bit when every value fits in a byte.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let tag = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    decode_image(&bytes).map(|img| img.with_tag(tag))
}

pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 {
        return Err(Error::MalformedHeader("file shorter than magic".into()));
    }
    match &bytes[..2] {
        b"P5" | b"P6" => pnm::decode(bytes),
        b"FP" if bytes.starts_with(b"FPT1") => fpt::decode_fpt(bytes)?.to_image(),
        _ => Err(Error::UnsupportedFormat(format!(
            "unknown magic {:02x?}",
            &bytes[..bytes.len().min(4)]
        ))),
    }
}

/// Writes `img` as PGM/PPM, or as FPT when the extension is `.fpt`.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = if path.extension().is_some_and(|e| e == "fpt") {
        encode_fpt(&FptTensor::from_image(img))
    } else {
        pnm::encode(img)
    };
    atomic_write(path, &bytes)
}

/// Writes through a temporary sibling and renames on success, so a failed
/// write never leaves a partial file under `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let unwritable = |source| Error::Unwritable {
        path: path.to_path_buf(),
        source,
    };
    let file_name = path
        .file_name()
        .ok_or_else(|| unwritable(std::io::Error::other("path has no file name")))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()))
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(unwritable(e));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_samples() {
        let err = Image::new(1, 1, 1, 8, vec![256]).unwrap_err();
        assert_eq!(err.code(), "invalid-image");
        assert!(Image::new(1, 1, 1, 16, vec![65535]).is_ok());
    }

    #[test]
    fn rejects_bad_channel_count() {
        assert_eq!(
            Image::new(1, 1, 2, 8, vec![0, 0]).unwrap_err().code(),
            "unsupported-channels"
        );
    }

    #[test]
    fn saturation_checks_every_channel() {
        let img = Image::new(1, 2, 3, 8, vec![0, 255, 0, 1, 2, 3]).unwrap();
        assert!(img.is_saturated(0, 0));
        assert!(!img.is_saturated(0, 1));
    }

    #[test]
    fn unknown_magic_is_unsupported() {
        assert_eq!(
            decode_image(b"GIF89a").unwrap_err().code(),
            "unsupported-format"
        );
        assert_eq!(decode_image(b"P").unwrap_err().code(), "malformed-header");
    }

    #[test]
    fn missing_file_is_unreadable() {
        let err = load_image("/nonexistent/definitely/not/here.pgm").unwrap_err();
        assert_eq!(err.code(), "unreadable");
    }
}
