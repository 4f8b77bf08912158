use crate::error::{Error, Result};

/// Real-valued row-major buffer used for residuals, fingerprints and
/// correlation surfaces. Values are always finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl Plane {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::InvalidImage(format!(
                "{} values for a {height}x{width} plane",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Plane {
            height,
            width,
            values,
        })
    }

    /// Caller guarantees length and finiteness.
    pub(crate) fn from_raw(height: usize, width: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), height * width);
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Plane {
            height,
            width,
            values,
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(value.is_finite());
        Plane {
            height,
            width,
            values: vec![value; height * width],
        }
    }

    /// Builds a plane from `f(row, col)`.
    ///
    /// # Panics
    /// If `f` returns a non-finite value.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                let v = f(r, c);
                assert!(v.is_finite(), "non-finite value at ({r},{c})");
                values.push(v);
            }
        }
        Plane {
            height,
            width,
            values,
        }
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

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Callers must keep the values finite.
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub(crate) fn set(&mut self, row: usize, col: usize, v: f64) {
        debug_assert!(v.is_finite());
        self.values[row * self.width + col] = v;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.width..(row + 1) * self.width]
    }

    /// Value at `(row, col)` with circular wrap-around on both axes.
    #[inline]
    pub fn get_wrapped(&self, row: isize, col: isize) -> f64 {
        let r = row.rem_euclid(self.height as isize) as usize;
        let c = col.rem_euclid(self.width as isize) as usize;
        self.get(r, c)
    }

    /// Circular translation: `out(i, j) = self(i + d1, j + d2)`, indices mod dims.
    pub fn shifted(&self, d1: isize, d2: isize) -> Plane {
        let (h, w) = self.dims();
        let mut values = Vec::with_capacity(self.len());
        for r in 0..h {
            let src = (r as isize + d1).rem_euclid(h as isize) as usize;
            let src_row = self.row(src);
            let off = d2.rem_euclid(w as isize) as usize;
            values.extend_from_slice(&src_row[off..]);
            values.extend_from_slice(&src_row[..off]);
        }
        Plane::from_raw(h, w, values)
    }

    /// Copy of the `height x width` block whose top-left corner is `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Plane {
        assert!(top + height <= self.height && left + width <= self.width);
        let mut values = Vec::with_capacity(height * width);
        for r in top..top + height {
            values.extend_from_slice(&self.row(r)[left..left + width]);
        }
        Plane::from_raw(height, width, values)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sum of squared values.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.values.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn max_abs_diff(&self, other: &Plane) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Element-wise map.
    ///
    /// # Panics
    /// If `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        assert!(
            values.iter().all(|v| v.is_finite()),
            "map produced non-finite value"
        );
        Plane::from_raw(self.height, self.width, values)
    }

    /// Element-wise combination of two planes of equal dimensions.
    ///
    /// # Panics
    /// On dimension mismatch or non-finite output.
    pub fn zip_map(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Plane {
        assert_eq!(self.dims(), other.dims(), "plane dimension mismatch");
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        assert!(
            values.iter().all(|v| v.is_finite()),
            "zip_map produced non-finite value"
        );
        Plane::from_raw(self.height, self.width, values)
    }

    pub fn scale(&self, k: f64) -> Plane {
        self.map(|v| v * k)
    }

    pub fn add(&self, other: &Plane) -> Plane {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Plane) -> Plane {
        self.zip_map(other, |a, b| a - b)
    }

    /// Element-wise (Hadamard) product.
    pub fn hadamard(&self, other: &Plane) -> Plane {
        self.zip_map(other, |a, b| a * b)
    }

    /// True when every value equals the first one.
    pub fn is_constant(&self) -> bool {
        match self.values.first() {
            Some(&first) => self.values.iter().all(|&v| v == first),
            None => true,
        }
    }

    pub(crate) fn ensure_same_dims(&self, other: &Plane) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_samples_forward() {
        let p = Plane::from_fn(3, 4, |r, c| (r * 10 + c) as f64);
        let s = p.shifted(1, -1);
        assert_eq!(s.get(0, 0), p.get(1, 3));
        assert_eq!(s.get(2, 3), p.get(0, 2));
        assert_eq!(p.shifted(3, 4), p);
    }

    #[test]
    fn rejects_non_finite() {
        assert_eq!(
            Plane::new(1, 2, vec![0.0, f64::NAN]).unwrap_err().code(),
            "non-finite"
        );
    }

    #[test]
    fn crop_picks_block() {
        let p = Plane::from_fn(4, 4, |r, c| (r * 4 + c) as f64);
        let b = p.crop(1, 2, 2, 2);
        assert_eq!(b.values(), &[6.0, 7.0, 10.0, 11.0]);
    }
}
