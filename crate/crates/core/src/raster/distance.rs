use super::BinaryMask;

/// Per-pixel Chebyshev distance to the nearest set pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap {
    height: usize,
    width: usize,
    values: Vec<f32>,
}

impl DistanceMap {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.width + col]
    }
}

/// Two-pass chamfer transform with unit weights on all eight neighbours, which
/// is exact for the Chebyshev metric. A mask with no set pixel yields
/// `f32::INFINITY` everywhere.
pub fn chebyshev_distance(mask: &BinaryMask) -> DistanceMap {
    let (h, w) = mask.dims();
    const FAR: u32 = u32::MAX;
    let mut d: Vec<u32> = mask
        .data()
        .iter()
        .map(|&v| if v != 0 { 0 } else { FAR })
        .collect();

    let relax = |d: &mut [u32], i: usize, j: usize| {
        let cand = d[j].saturating_add(1);
        if cand < d[i] {
            d[i] = cand;
        }
    };

    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if c > 0 {
                relax(&mut d, i, i - 1);
            }
            if r > 0 {
                relax(&mut d, i, i - w);
                if c > 0 {
                    relax(&mut d, i, i - w - 1);
                }
                if c + 1 < w {
                    relax(&mut d, i, i - w + 1);
                }
            }
        }
    }
    for r in (0..h).rev() {
        for c in (0..w).rev() {
            let i = r * w + c;
            if c + 1 < w {
                relax(&mut d, i, i + 1);
            }
            if r + 1 < h {
                relax(&mut d, i, i + w);
                if c + 1 < w {
                    relax(&mut d, i, i + w + 1);
                }
                if c > 0 {
                    relax(&mut d, i, i + w - 1);
                }
            }
        }
    }

    DistanceMap {
        height: h,
        width: w,
        values: d
            .into_iter()
            .map(|v| if v == FAR { f32::INFINITY } else { v as f32 })
            .collect(),
    }
}
