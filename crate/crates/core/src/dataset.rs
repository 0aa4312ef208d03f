//! Source tiling, blank-tile detection, quadrant subdivision with annotation
//! clipping, and round-robin fold assignment.

use crate::error::{Error, Result};
use crate::targets::{rasterize_polygon, PolygonRing};
use serde::{Deserialize, Serialize};

pub const DEFAULT_TILE_SIZE: usize = 1024;
pub const CROP_SIZE: usize = 512;
pub const DEFAULT_FOLDS: usize = 5;

/// One grid tile. `row`/`col` are the pixel offset of its top-left corner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TileRecord {
    pub tile_id: u32,
    pub row: usize,
    pub col: usize,
    pub blank: bool,
    pub fold: Option<u32>,
}

/// Full tiles of `tile_size` in row-major grid order; partial edge tiles are
/// dropped. `is_blank` decides the blank flag for each tile.
pub fn tile_index(
    height: usize,
    width: usize,
    tile_size: usize,
    mut is_blank: impl FnMut(usize, usize) -> bool,
) -> Result<Vec<TileRecord>> {
    if tile_size == 0 {
        return Err(Error::InvalidArgument("tile size must be >= 1".into()));
    }
    let (rows, cols) = (height / tile_size, width / tile_size);
    let mut out = Vec::with_capacity(rows * cols);
    for gr in 0..rows {
        for gc in 0..cols {
            let (row, col) = (gr * tile_size, gc * tile_size);
            out.push(TileRecord {
                tile_id: (gr * cols + gc) as u32,
                row,
                col,
                blank: is_blank(row, col),
                fold: None,
            });
        }
    }
    Ok(out)
}

/// True iff every sample of the `size`-square window at (row, col) equals `nodata`.
pub fn window_is_blank(
    samples: &[u8],
    src_width: usize,
    row: usize,
    col: usize,
    size: usize,
    nodata: u8,
) -> bool {
    (row..row + size).all(|r| {
        samples[r * src_width + col..r * src_width + col + size]
            .iter()
            .all(|&v| v == nodata)
    })
}

/// Copies the `size`-square window at (row, col) out of a row-major source.
pub fn crop_samples(
    samples: &[u8],
    src_width: usize,
    row: usize,
    col: usize,
    size: usize,
) -> Vec<u8> {
    let mut out = Vec::with_capacity(size * size);
    for r in row..row + size {
        out.extend_from_slice(&samples[r * src_width + col..r * src_width + col + size]);
    }
    out
}

/// Fold = position mod k over non-blank tiles sorted by (row, col). Blank
/// tiles are left unassigned.
pub fn kfold_assign(tiles: &mut [TileRecord], k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be >= 2, got {k}")));
    }
    let mut order: Vec<usize> = (0..tiles.len()).filter(|&i| !tiles[i].blank).collect();
    if order.len() < k {
        return Err(Error::InvalidArgument(format!(
            "{} non-blank tiles cannot fill {k} folds",
            order.len()
        )));
    }
    order.sort_by_key(|&i| (tiles[i].row, tiles[i].col));
    for t in tiles.iter_mut() {
        t.fold = None;
    }
    for (pos, &i) in order.iter().enumerate() {
        tiles[i].fold = Some((pos % k) as u32);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crop {
    pub row: usize,
    pub col: usize,
    pub samples: Vec<u8>,
    pub rings: Vec<PolygonRing>,
}

#[derive(Clone, Copy)]
enum Side {
    Left(f64),
    Right(f64),
    Top(f64),
    Bottom(f64),
}

impl Side {
    fn inside(self, (x, y): (f64, f64)) -> bool {
        match self {
            Side::Left(v) => x >= v,
            Side::Right(v) => x <= v,
            Side::Top(v) => y >= v,
            Side::Bottom(v) => y <= v,
        }
    }

    fn cross(self, (x0, y0): (f64, f64), (x1, y1): (f64, f64)) -> (f64, f64) {
        match self {
            Side::Left(v) | Side::Right(v) => (v, y0 + (y1 - y0) * (v - x0) / (x1 - x0)),
            Side::Top(v) | Side::Bottom(v) => (x0 + (x1 - x0) * (v - y0) / (y1 - y0), v),
        }
    }
}

/// Sutherland–Hodgman clip of a ring to `[x0, x1] x [y0, y1]`. Degenerate
/// edges along the window boundary may remain; they cancel under even-odd fill.
pub fn clip_ring(ring: &PolygonRing, x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<(f64, f64)> {
    let mut pts = ring.vertices.clone();
    for side in [
        Side::Left(x0),
        Side::Right(x1),
        Side::Top(y0),
        Side::Bottom(y1),
    ] {
        if pts.is_empty() {
            break;
        }
        let input = std::mem::take(&mut pts);
        let mut prev = *input.last().unwrap();
        for &cur in &input {
            match (side.inside(prev), side.inside(cur)) {
                (true, true) => pts.push(cur),
                (true, false) => pts.push(side.cross(prev, cur)),
                (false, true) => {
                    pts.push(side.cross(prev, cur));
                    pts.push(cur);
                }
                (false, false) => {}
            }
            prev = cur;
        }
    }
    pts.dedup();
    if pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    pts
}

/// Splits a `DEFAULT_TILE_SIZE` square tile into its four `CROP_SIZE`
/// quadrants in row-major order. Rings are clipped to each quadrant and
/// translated into crop coordinates; fragments that fill no pixel are dropped.
pub fn subdivide_tile(
    height: usize,
    width: usize,
    samples: &[u8],
    rings: &[PolygonRing],
) -> Result<Vec<Crop>> {
    if (height, width) != (DEFAULT_TILE_SIZE, DEFAULT_TILE_SIZE) {
        return Err(Error::dims(
            (DEFAULT_TILE_SIZE, DEFAULT_TILE_SIZE),
            (height, width),
        ));
    }
    if samples.len() != height * width {
        return Err(Error::InvalidRaster(format!(
            "sample length {} != {height}x{width}",
            samples.len()
        )));
    }
    for (i, r) in rings.iter().enumerate() {
        PolygonRing::new(r.vertices.clone()).map_err(|e| match e {
            Error::MalformedRing { reason, .. } => Error::MalformedRing { index: i, reason },
            other => other,
        })?;
    }
    let mut crops = Vec::with_capacity(4);
    for row in [0, CROP_SIZE] {
        for col in [0, CROP_SIZE] {
            let (fx, fy) = (col as f64, row as f64);
            let mut out = Vec::new();
            for ring in rings {
                let clipped = clip_ring(ring, fx, fy, fx + CROP_SIZE as f64, fy + CROP_SIZE as f64);
                if clipped.len() < 3 {
                    continue;
                }
                let frag = PolygonRing { vertices: clipped }.translate(-fx, -fy);
                if rasterize_polygon(&frag, CROP_SIZE, CROP_SIZE)?.count() > 0 {
                    out.push(frag);
                }
            }
            crops.push(Crop {
                row,
                col,
                samples: crop_samples(samples, width, row, col, CROP_SIZE),
                rings: out,
            });
        }
    }
    Ok(crops)
}
