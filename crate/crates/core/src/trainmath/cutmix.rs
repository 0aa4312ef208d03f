use crate::error::{Error, Result};
use crate::raster::{BinaryMask, ProbMap};
use crate::targets::TargetStack;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Image plus its three target channels.
#[derive(Debug, Clone, PartialEq)]
pub struct MixSample {
    pub image: ProbMap,
    pub targets: TargetStack,
}

impl MixSample {
    fn dims(&self) -> Result<(usize, usize)> {
        let d = self.targets.building.dims();
        for m in self.targets.channels() {
            if m.dims() != d {
                return Err(Error::dims(d, m.dims()));
            }
        }
        if (self.image.height(), self.image.width()) != d {
            return Err(Error::dims(d, (self.image.height(), self.image.width())));
        }
        Ok(d)
    }
}

/// Half-open pixel rectangle `[row, row + height) x [col, col + width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixBox {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl MixBox {
    #[inline]
    pub fn contains(&self, r: usize, c: usize) -> bool {
        r >= self.row && r < self.row + self.height && c >= self.col && c < self.col + self.width
    }

    pub fn area(&self) -> usize {
        self.height * self.width
    }
}

/// Pastes `b` into `a` inside `mix_box`: every output pixel, in the image
/// and in all target channels, comes from `b` inside the box and from `a`
/// outside it.
pub fn cutmix(a: &MixSample, b: &MixSample, mix_box: MixBox) -> Result<MixSample> {
    let (h, w) = a.dims()?;
    let db = b.dims()?;
    if db != (h, w) || a.image.channels() != b.image.channels() {
        return Err(Error::dims((h, w), db));
    }
    if mix_box.row + mix_box.height > h || mix_box.col + mix_box.width > w {
        return Err(Error::InvalidArgument(format!(
            "box {mix_box:?} exceeds {h}x{w} canvas"
        )));
    }
    let ch = a.image.channels();
    let mut image = Vec::with_capacity(ch * h * w);
    for c in 0..ch {
        for r in 0..h {
            for col in 0..w {
                let src = if mix_box.contains(r, col) {
                    &b.image
                } else {
                    &a.image
                };
                image.push(src.get(c, r, col));
            }
        }
    }
    let mix = |ma: &BinaryMask, mb: &BinaryMask| {
        BinaryMask::from_fn(h, w, |r, c| {
            if mix_box.contains(r, c) {
                mb.get(r, c)
            } else {
                ma.get(r, c)
            }
        })
    };
    Ok(MixSample {
        image: ProbMap::from_vec(ch, h, w, image)?,
        targets: TargetStack {
            building: mix(&a.targets.building, &b.targets.building)?,
            border: mix(&a.targets.border, &b.targets.border)?,
            spacing: mix(&a.targets.spacing, &b.targets.spacing)?,
        },
    })
}

/// Draws a random box: mix ratio `lambda ~ U[0, 1]`, box sides
/// `sqrt(1 - lambda)` of the canvas sides, uniform center, clipped to the
/// canvas. Returns the box and the fraction of the canvas kept from the
/// first sample.
pub fn sample_box<R: Rng + ?Sized>(height: usize, width: usize, rng: &mut R) -> (MixBox, f64) {
    let lambda: f64 = rng.gen_range(0.0..=1.0);
    let ratio = (1.0 - lambda).sqrt();
    let cut_h = (height as f64 * ratio) as usize;
    let cut_w = (width as f64 * ratio) as usize;
    let cy = rng.gen_range(0..height);
    let cx = rng.gen_range(0..width);
    let r0 = cy.saturating_sub(cut_h / 2);
    let r1 = (cy + cut_h / 2).min(height);
    let c0 = cx.saturating_sub(cut_w / 2);
    let c1 = (cx + cut_w / 2).min(width);
    let b = MixBox {
        row: r0,
        col: c0,
        height: r1 - r0,
        width: c1 - c0,
    };
    let kept = 1.0 - b.area() as f64 / (height * width) as f64;
    (b, kept)
}
