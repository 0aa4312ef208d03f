use super::{BinaryMask, Kernel};
use crate::error::Result;

/// Binary erosion with a centered square window, applied `iterations` times.
/// Out-of-canvas pixels count as 0, so anything within `radius` of the edge clears.
pub fn erode(mask: &BinaryMask, kernel: Kernel, iterations: usize) -> BinaryMask {
    let mut out = mask.clone();
    for _ in 0..iterations {
        out = window_pass(&out, kernel.radius(), Extremum::Min);
    }
    out
}

/// Binary dilation with a centered square window, clipped at the canvas edges.
pub fn dilate(mask: &BinaryMask, kernel: Kernel, iterations: usize) -> BinaryMask {
    let mut out = mask.clone();
    for _ in 0..iterations {
        out = window_pass(&out, kernel.radius(), Extremum::Max);
    }
    out
}

pub fn mask_xor(a: &BinaryMask, b: &BinaryMask) -> Result<BinaryMask> {
    a.zip(b, |x, y| x ^ y)
}

#[derive(Clone, Copy)]
enum Extremum {
    Min,
    Max,
}

// A square window is separable: the 2-D min/max is a row pass followed by a
// column pass. Each 1-D pass counts set pixels in the window with a running sum.
fn window_pass(mask: &BinaryMask, radius: usize, op: Extremum) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let (h, w) = mask.dims();
    let mut rows = vec![0u8; h * w];
    let mut line = Vec::new();
    for r in 0..h {
        line.clear();
        line.extend_from_slice(&mask.data[r * w..(r + 1) * w]);
        filter_line(&line, radius, op, &mut rows[r * w..(r + 1) * w]);
    }
    let mut out = vec![0u8; h * w];
    let mut col = vec![0u8; h];
    for c in 0..w {
        line.clear();
        line.extend((0..h).map(|r| rows[r * w + c]));
        filter_line(&line, radius, op, &mut col);
        for (r, &v) in col.iter().enumerate() {
            out[r * w + c] = v;
        }
    }
    BinaryMask {
        height: h,
        width: w,
        data: out,
    }
}

fn filter_line(input: &[u8], radius: usize, op: Extremum, out: &mut [u8]) {
    let n = input.len();
    let side = 2 * radius + 1;
    let mut prefix = vec![0usize; n + 1];
    for (i, &v) in input.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v as usize;
    }
    for (i, o) in out.iter_mut().enumerate() {
        let lo = i.saturating_sub(radius);
        let hi = (i + radius + 1).min(n);
        let ones = prefix[hi] - prefix[lo];
        *o = match op {
            // Out-of-canvas positions are zeros, so a clipped window never reaches `side`.
            Extremum::Min => (ones == side) as u8,
            Extremum::Max => (ones > 0) as u8,
        };
    }
}
