use std::path::Path;

use super::{atomic_write, Image, Plane};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"FPT1";
const HEADER_LEN: usize = 16;

/// A float32 tensor as stored in an FPT file.
#[derive(Clone, Debug, PartialEq)]
pub struct FptTensor {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl FptTensor {
    pub fn from_plane(p: &Plane) -> Self {
        FptTensor {
            height: p.height(),
            width: p.width(),
            channels: 1,
            data: p.values().iter().map(|&v| v as f32).collect(),
        }
    }

    /// Interleaves several equally sized planes as channels.
    pub fn from_planes(planes: &[&Plane]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::InvalidConfig("no planes to pack".into()))?;
        for p in planes {
            first.ensure_same_dims(p)?;
        }
        let mut data = Vec::with_capacity(first.len() * planes.len());
        for i in 0..first.len() {
            data.extend(planes.iter().map(|p| p.values()[i] as f32));
        }
        Ok(FptTensor {
            height: first.height(),
            width: first.width(),
            channels: planes.len(),
            data,
        })
    }

    pub fn from_image(img: &Image) -> Self {
        FptTensor {
            height: img.height(),
            width: img.width(),
            channels: img.channels(),
            data: img.pixels().iter().map(|&v| f32::from(v)).collect(),
        }
    }

    /// Extracts channel `c` as a plane.
    pub fn channel(&self, c: usize) -> Result<Plane> {
        if c >= self.channels {
            return Err(Error::UnsupportedChannels(self.channels));
        }
        let values = self
            .data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .map(|&v| f64::from(v))
            .collect();
        Plane::new(self.height, self.width, values)
    }

    pub fn to_plane(&self) -> Result<Plane> {
        if self.channels != 1 {
            return Err(Error::UnsupportedChannels(self.channels));
        }
        self.channel(0)
    }

    pub(super) fn to_image(&self) -> Result<Image> {
        let mut max = 0.0f32;
        for &v in &self.data {
            if !(0.0..=65535.0).contains(&v) || v.fract() != 0.0 {
                return Err(Error::InvalidImage(format!(
                    "FPT value {v} is not an integer sample"
                )));
            }
            max = max.max(v);
        }
        let depth = if max <= 255.0 { 8 } else { 16 };
        let pixels = self.data.iter().map(|&v| v as u16).collect();
        Image::new(self.height, self.width, self.channels, depth, pixels)
    }
}

pub fn encode_fpt(t: &FptTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * t.data.len());
    out.extend_from_slice(MAGIC);
    for dim in [t.height, t.width, t.channels] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for v in &t.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_fpt(bytes: &[u8]) -> Result<FptTensor> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::UnsupportedFormat("missing FPT1 magic".into()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::MalformedHeader(
            "FPT header shorter than 16 bytes".into(),
        ));
    }
    let dim =
        |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (height, width, channels) = (dim(0), dim(1), dim(2));
    if height == 0 || width == 0 || channels == 0 {
        return Err(Error::MalformedHeader(format!(
            "FPT dimensions {height}x{width}x{channels}"
        )));
    }
    let expected = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(channels))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::MalformedHeader("FPT dimensions overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: payload.len(),
        });
    }
    let data = payload[..expected]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(FptTensor {
        height,
        width,
        channels,
        data,
    })
}

pub fn load_plane(path: impl AsRef<Path>) -> Result<Plane> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    decode_fpt(&bytes)?.to_plane()
}

/// Stores `p` as a single-channel FPT (values narrowed to `f32`).
pub fn save_plane(p: &Plane, path: impl AsRef<Path>) -> Result<()> {
    atomic_write(path.as_ref(), &encode_fpt(&FptTensor::from_plane(p)))
}
