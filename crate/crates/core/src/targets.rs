//! Ground-truth target generation: building fill, 2-px border ring and the
//! spacing class between close buildings.

use crate::error::{Error, Result};
use crate::extract::watershed_assign;
use crate::raster::{
    chebyshev_distance, connected_components, dilate, erode, mask_xor, BinaryMask, Connectivity,
    InstanceMap, Kernel, ProbMap,
};
use serde::{Deserialize, Serialize};

pub const BORDER_EROSIONS: usize = 2;
pub const BORDER_KERNEL_SIDE: usize = 3;
pub const SPACING_KERNEL_SIDE: usize = 15;
pub const SPACING_MAX_DIST: u32 = 8;

/// Closed polygon in pixel coordinates (x right, y down, origin top-left).
/// The closing edge from the last vertex back to the first is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonRing {
    pub vertices: Vec<(f64, f64)>,
}

impl PolygonRing {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self> {
        let ring = Self { vertices };
        ring.validate(0)?;
        Ok(ring)
    }

    /// Axis-aligned rectangle spanning `[x0, x1] x [y0, y1]`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            vertices: vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)],
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|&(x, y)| (x + dx, y + dy))
                .collect(),
        }
    }

    /// Shoelace area; positive when the ring runs counter-clockwise in raw
    /// (x, y) coordinates.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (x0, y0) = self.vertices[i];
                let (x1, y1) = self.vertices[(i + 1) % n];
                x0 * y1 - x1 * y0
            })
            .sum::<f64>()
            / 2.0
    }

    fn validate(&self, index: usize) -> Result<()> {
        if self.vertices.len() < 3 {
            return Err(Error::MalformedRing {
                index,
                reason: format!("{} vertices, need at least 3", self.vertices.len()),
            });
        }
        if self
            .vertices
            .iter()
            .any(|&(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(Error::MalformedRing {
                index,
                reason: "non-finite coordinate".into(),
            });
        }
        Ok(())
    }
}

/// Horizontal run of filled pixels `[col_start, col_end)` on one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Span {
    row: usize,
    col_start: usize,
    col_end: usize,
}

// Even-odd scanline fill sampled at pixel centers. Edges are half-open in y
// (top endpoint included) and spans are half-open in x (left end included),
// which is the top-left ownership rule for centers lying exactly on an edge.
fn scan_spans(ring: &PolygonRing, height: usize, width: usize) -> Vec<Span> {
    let v = &ring.vertices;
    let (ymin, ymax) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| {
            (lo.min(y), hi.max(y))
        });
    let row_lo = (ymin - 0.5).ceil().max(0.0) as usize;
    let row_hi = ((ymax - 0.5).ceil().max(0.0) as usize).min(height);
    let mut spans = Vec::new();
    let mut xs = Vec::new();
    for row in row_lo..row_hi {
        let y = row as f64 + 0.5;
        xs.clear();
        for i in 0..v.len() {
            let (ax, ay) = v[i];
            let (bx, by) = v[(i + 1) % v.len()];
            if (ay <= y && y < by) || (by <= y && y < ay) {
                xs.push(ax + (y - ay) * (bx - ax) / (by - ay));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            // Columns whose center c + 0.5 lies in [x0, x1).
            let start = (pair[0] - 0.5).ceil().max(0.0);
            let end = (pair[1] - 0.5).ceil().max(0.0);
            let (start, end) = ((start as usize).min(width), (end as usize).min(width));
            if start < end {
                spans.push(Span {
                    row,
                    col_start: start,
                    col_end: end,
                });
            }
        }
    }
    spans
}

/// Fills one ring on an `height x width` canvas with the pixel-center rule.
pub fn rasterize_polygon(ring: &PolygonRing, height: usize, width: usize) -> Result<BinaryMask> {
    ring.validate(0)?;
    let mut mask = BinaryMask::new(height, width)?;
    paint_spans(&mut mask, &scan_spans(ring, height, width), 0, 0);
    Ok(mask)
}

fn paint_spans(mask: &mut BinaryMask, spans: &[Span], row0: usize, col0: usize) {
    for s in spans {
        for c in s.col_start..s.col_end {
            mask.set(s.row - row0, c - col0, true);
        }
    }
}

/// Filled ring cropped to the bounding box of its pixels.
struct Window {
    row0: usize,
    col0: usize,
    mask: BinaryMask,
}

fn fill_window(ring: &PolygonRing, height: usize, width: usize) -> Option<Window> {
    let spans = scan_spans(ring, height, width);
    let row0 = spans.iter().map(|s| s.row).min()?;
    let row1 = spans.iter().map(|s| s.row).max()? + 1;
    let col0 = spans.iter().map(|s| s.col_start).min()?;
    let col1 = spans.iter().map(|s| s.col_end).max()?;
    let mut mask = BinaryMask::new(row1 - row0, col1 - col0).ok()?;
    paint_spans(&mut mask, &spans, row0, col0);
    Some(Window { row0, col0, mask })
}

fn blit_or(dst: &mut BinaryMask, src: &BinaryMask, row0: usize, col0: usize) {
    for r in 0..src.height() {
        for c in 0..src.width() {
            if src.get(r, c) {
                dst.set(row0 + r, col0 + c, true);
            }
        }
    }
}

fn validate_all(rings: &[PolygonRing]) -> Result<()> {
    rings
        .iter()
        .enumerate()
        .try_for_each(|(i, ring)| ring.validate(i))
}

/// Union of all filled rings.
pub fn make_building_mask(
    rings: &[PolygonRing],
    height: usize,
    width: usize,
) -> Result<BinaryMask> {
    validate_all(rings)?;
    let mut out = BinaryMask::new(height, width)?;
    for ring in rings {
        paint_spans(&mut out, &scan_spans(ring, height, width), 0, 0);
    }
    Ok(out)
}

/// Per polygon: fill, erode `erosion_iterations` times with `kernel`, XOR the
/// fill with its erosion, and OR the ring into the result.
///
/// Erosion treats everything outside the polygon's own bounding box as 0, so
/// working in that window is identical to working on the full canvas.
pub fn make_border_mask(
    rings: &[PolygonRing],
    height: usize,
    width: usize,
    erosion_iterations: usize,
    kernel: Kernel,
) -> Result<BinaryMask> {
    validate_all(rings)?;
    let mut out = BinaryMask::new(height, width)?;
    for ring in rings {
        let Some(win) = fill_window(ring, height, width) else {
            continue;
        };
        let eroded = erode(&win.mask, kernel, erosion_iterations);
        let border = mask_xor(&win.mask, &eroded)?;
        blit_or(&mut out, &border, win.row0, win.col0);
    }
    Ok(out)
}

/// Spacing pixels between buildings that are close enough for their
/// dilations to meet.
///
/// Steps: dilate the buildings; split the dilated region by nearest-seed
/// assignment seeded with the building components; take the pixels that touch
/// a differently labeled pixel (the separation lines); keep those within
/// `max_dist` of a building and outside every building.
pub fn make_spacing_mask(
    building: &BinaryMask,
    dilate_kernel: Kernel,
    max_dist: u32,
) -> Result<BinaryMask> {
    let region = dilate(building, dilate_kernel, 1);
    let seeds = connected_components(building, Connectivity::Eight);
    if seeds.max_label() < 2 {
        return BinaryMask::new(building.height(), building.width());
    }
    let basins = watershed_assign(&seeds, &region)?;
    let lines = separation_lines(&basins, &region);
    let split = region.and_not(&lines)?;
    let between = mask_xor(&region, &split)?;
    let dist = chebyshev_distance(building);
    let (h, w) = building.dims();
    BinaryMask::from_fn(h, w, |r, c| {
        between.get(r, c) && !building.get(r, c) && dist.get(r, c) <= max_dist as f32
    })
}

// Region pixels 8-adjacent to a pixel carrying a different nonzero label.
fn separation_lines(basins: &InstanceMap, region: &BinaryMask) -> BinaryMask {
    let (h, w) = basins.dims();
    let mut out = BinaryMask::new(h, w).expect("dims already validated");
    for r in 0..h {
        for c in 0..w {
            let l = basins.get(r, c);
            if l == 0 || !region.get(r, c) {
                continue;
            }
            'nbrs: for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    let (nr, nc) = (r as isize + dr, c as isize + dc);
                    if nr < 0 || nc < 0 || nr as usize >= h || nc as usize >= w {
                        continue;
                    }
                    let o = basins.get(nr as usize, nc as usize);
                    if o != 0 && o != l {
                        out.set(r, c, true);
                        break 'nbrs;
                    }
                }
            }
        }
    }
    out
}

/// The three training channels, in the fixed order building, border, spacing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetStack {
    pub building: BinaryMask,
    pub border: BinaryMask,
    pub spacing: BinaryMask,
}

impl TargetStack {
    pub const CHANNEL_NAMES: [&'static str; 3] = ["building", "border", "spacing"];

    pub fn channels(&self) -> [&BinaryMask; 3] {
        [&self.building, &self.border, &self.spacing]
    }

    pub fn to_prob_map(&self) -> ProbMap {
        ProbMap::from_masks(&self.channels()).expect("target channels share dims")
    }

    /// Thresholds a 3-channel map back into masks (values > 0.5 set).
    pub fn from_prob_map(map: &ProbMap) -> Result<Self> {
        if map.channels() != 3 {
            return Err(Error::InvalidArgument(format!(
                "target stack needs 3 channels, got {}",
                map.channels()
            )));
        }
        let ch = |c: usize| {
            BinaryMask::from_vec(
                map.height(),
                map.width(),
                map.channel(c).iter().map(|&v| (v > 0.5) as u8).collect(),
            )
        };
        Ok(Self {
            building: ch(0)?,
            border: ch(1)?,
            spacing: ch(2)?,
        })
    }
}

pub fn assemble_targets(rings: &[PolygonRing], height: usize, width: usize) -> Result<TargetStack> {
    let building = make_building_mask(rings, height, width)?;
    let border = make_border_mask(
        rings,
        height,
        width,
        BORDER_EROSIONS,
        Kernel::square(BORDER_KERNEL_SIDE)?,
    )?;
    let spacing = make_spacing_mask(
        &building,
        Kernel::square(SPACING_KERNEL_SIDE)?,
        SPACING_MAX_DIST,
    )?;
    Ok(TargetStack {
        building,
        border,
        spacing,
    })
}
