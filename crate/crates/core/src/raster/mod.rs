//! Raster carriers and exact pixel operations.
//!
//! All rasters are row-major. Morphology treats out-of-canvas pixels as 0.

mod components;
mod distance;
mod morphology;

pub use components::{connected_components, Connectivity};
pub use distance::{chebyshev_distance, DistanceMap};
pub use morphology::{dilate, erode, mask_xor};

use crate::error::{Error, Result};

/// Single-channel {0,1} raster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        check_dims(height, width)?;
        Ok(Self {
            height,
            width,
            data: vec![0; height * width],
        })
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(height, width)?;
        if data.len() != height * width {
            return Err(Error::InvalidRaster(format!(
                "mask data length {} != {height}x{width}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidRaster(format!(
                "mask value {v} is not 0 or 1"
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Builds a mask from a predicate over (row, col).
    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        check_dims(height, width)?;
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c) as u8);
            }
        }
        Ok(Self {
            height,
            width,
            data,
        })
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

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col] != 0
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.width + col] = value as u8;
    }

    /// Out-of-canvas reads return false.
    #[inline]
    pub fn get_signed(&self, row: isize, col: isize) -> bool {
        row >= 0
            && col >= 0
            && (row as usize) < self.height
            && (col as usize) < self.width
            && self.get(row as usize, col as usize)
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn complement(&self) -> Self {
        self.map(|v| v ^ 1)
    }

    pub fn and(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a & b)
    }

    pub fn or(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a | b)
    }

    /// Pixels set in `self` and clear in `other`.
    pub fn and_not(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a & !b & 1)
    }

    /// True if every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.dims() == other.dims() && self.data.iter().zip(&other.data).all(|(&a, &b)| a <= b)
    }

    pub fn ensure_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        Ok(())
    }

    fn map(&self, f: impl Fn(u8) -> u8) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(u8, u8) -> u8) -> Result<Self> {
        self.ensure_same_dims(other)?;
        Ok(Self {
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

/// Multi-channel probability raster, channel-major then row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl ProbMap {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Self> {
        Self::from_vec(
            channels,
            height,
            width,
            vec![0.0; channels * height * width],
        )
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(height, width)?;
        if channels == 0 {
            return Err(Error::InvalidRaster(
                "probability map needs >= 1 channel".into(),
            ));
        }
        if data.len() != channels * height * width {
            return Err(Error::InvalidRaster(format!(
                "probability data length {} != {channels}x{height}x{width}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidRaster(format!(
                "probability value {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    /// Stacks binary masks as 0.0/1.0 channels.
    pub fn from_masks(masks: &[&BinaryMask]) -> Result<Self> {
        let first = masks
            .first()
            .ok_or_else(|| Error::InvalidArgument("no masks to stack".into()))?;
        let mut data = Vec::with_capacity(masks.len() * first.data.len());
        for m in masks {
            first.ensure_same_dims(m)?;
            data.extend(m.data.iter().map(|&v| v as f32));
        }
        Self::from_vec(masks.len(), first.height, first.width, data)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// (channels, height, width)
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, row: usize, col: usize) -> f32 {
        self.data[(c * self.height + row) * self.width + col]
    }

    pub fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?}", self.shape()),
                actual: format!("{:?}", other.shape()),
            });
        }
        Ok(())
    }
}

/// Instance label raster; 0 is background, used labels are exactly 1..=max_label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InstanceMap {
    height: usize,
    width: usize,
    labels: Vec<u32>,
    max_label: u32,
}

impl InstanceMap {
    pub fn empty(height: usize, width: usize) -> Result<Self> {
        check_dims(height, width)?;
        Ok(Self {
            height,
            width,
            labels: vec![0; height * width],
            max_label: 0,
        })
    }

    /// Validates density: the nonzero labels present must be exactly 1..=max_label.
    pub fn from_vec(height: usize, width: usize, labels: Vec<u32>, max_label: u32) -> Result<Self> {
        check_dims(height, width)?;
        if labels.len() != height * width {
            return Err(Error::InvalidRaster(format!(
                "label data length {} != {height}x{width}",
                labels.len()
            )));
        }
        let mut seen = vec![false; max_label as usize + 1];
        for &l in &labels {
            if l > max_label {
                return Err(Error::InvalidRaster(format!(
                    "label {l} exceeds max_label {max_label}"
                )));
            }
            seen[l as usize] = true;
        }
        if let Some(missing) = (1..=max_label as usize).find(|&l| !seen[l]) {
            return Err(Error::InvalidRaster(format!(
                "labels are not dense: {missing} unused below max_label {max_label}"
            )));
        }
        Ok(Self {
            height,
            width,
            labels,
            max_label,
        })
    }

    /// Accepts arbitrary labels and renumbers them densely by anchor
    /// (first occurrence in row-major order).
    pub fn from_sparse(height: usize, width: usize, labels: Vec<u32>) -> Result<Self> {
        check_dims(height, width)?;
        if labels.len() != height * width {
            return Err(Error::InvalidRaster(format!(
                "label data length {} != {height}x{width}",
                labels.len()
            )));
        }
        Ok(relabel_by_anchor(height, width, labels, |_| true))
    }

    pub(crate) fn from_parts_unchecked(
        height: usize,
        width: usize,
        labels: Vec<u32>,
        max_label: u32,
    ) -> Self {
        debug_assert_eq!(labels.len(), height * width);
        Self {
            height,
            width,
            labels,
            max_label,
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

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn max_label(&self) -> u32 {
        self.max_label
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    /// Pixel count per label; index 0 holds the background count.
    pub fn areas(&self) -> Vec<usize> {
        let mut areas = vec![0usize; self.max_label as usize + 1];
        for &l in &self.labels {
            areas[l as usize] += 1;
        }
        areas
    }

    pub fn mask_of(&self, label: u32) -> BinaryMask {
        BinaryMask {
            height: self.height,
            width: self.width,
            data: self.labels.iter().map(|&l| (l == label) as u8).collect(),
        }
    }

    /// Union of all labeled pixels.
    pub fn foreground(&self) -> BinaryMask {
        BinaryMask {
            height: self.height,
            width: self.width,
            data: self.labels.iter().map(|&l| (l != 0) as u8).collect(),
        }
    }

    /// Keeps labels for which `keep` is true and renumbers survivors densely by anchor.
    pub fn retain(&self, keep: impl Fn(u32) -> bool) -> Self {
        relabel_by_anchor(self.height, self.width, self.labels.clone(), keep)
    }
}

fn relabel_by_anchor(
    height: usize,
    width: usize,
    mut labels: Vec<u32>,
    keep: impl Fn(u32) -> bool,
) -> InstanceMap {
    let mut remap = std::collections::HashMap::new();
    let mut next = 0u32;
    for l in labels.iter_mut() {
        if *l == 0 {
            continue;
        }
        if !keep(*l) {
            *l = 0;
            continue;
        }
        *l = *remap.entry(*l).or_insert_with(|| {
            next += 1;
            next
        });
    }
    InstanceMap {
        height,
        width,
        labels,
        max_label: next,
    }
}

/// Odd-sided square structuring element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Kernel {
    side: usize,
}

impl Kernel {
    pub fn square(side: usize) -> Result<Self> {
        if side == 0 || side.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "kernel side must be odd and >= 1, got {side}"
            )));
        }
        Ok(Self { side })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn radius(&self) -> usize {
        self.side / 2
    }
}

fn check_dims(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidRaster(format!(
            "raster dimensions must be >= 1, got {height}x{width}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_rejects_bad_values_and_lengths() {
        assert!(BinaryMask::from_vec(2, 2, vec![0, 1, 2, 0]).is_err());
        assert!(BinaryMask::from_vec(2, 2, vec![0, 1, 0]).is_err());
        assert!(BinaryMask::new(0, 3).is_err());
    }

    #[test]
    fn probmap_rejects_out_of_range() {
        assert!(ProbMap::from_vec(1, 1, 2, vec![0.5, 1.5]).is_err());
        assert!(ProbMap::from_vec(1, 1, 2, vec![0.5, f32::NAN]).is_err());
        assert!(ProbMap::from_vec(1, 1, 2, vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn instance_map_requires_dense_labels() {
        assert!(InstanceMap::from_vec(1, 3, vec![1, 0, 3], 3).is_err());
        assert!(InstanceMap::from_vec(1, 3, vec![1, 0, 2], 2).is_ok());
        let m = InstanceMap::from_sparse(1, 4, vec![7, 0, 3, 7]).unwrap();
        assert_eq!(m.labels(), &[1, 0, 2, 1]);
        assert_eq!(m.max_label(), 2);
    }

    #[test]
    fn retain_relabels_by_anchor() {
        let m = InstanceMap::from_vec(1, 5, vec![2, 1, 0, 3, 2], 3).unwrap();
        let kept = m.retain(|l| l != 1);
        assert_eq!(kept.labels(), &[1, 0, 0, 2, 1]);
        assert_eq!(kept.max_label(), 2);
    }

    #[test]
    fn kernel_must_be_odd() {
        assert!(Kernel::square(0).is_err());
        assert!(Kernel::square(4).is_err());
        assert_eq!(Kernel::square(15).unwrap().radius(), 7);
    }
}
