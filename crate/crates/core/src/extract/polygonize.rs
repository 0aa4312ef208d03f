use super::{PolygonInstance, PolygonSet};
use crate::raster::InstanceMap;
use crate::targets::PolygonRing;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    East,
    South,
    West,
    North,
}

impl Dir {
    // Clockwise on screen (y down).
    fn right(self) -> Dir {
        match self {
            Dir::East => Dir::South,
            Dir::South => Dir::West,
            Dir::West => Dir::North,
            Dir::North => Dir::East,
        }
    }

    fn left(self) -> Dir {
        match self {
            Dir::East => Dir::North,
            Dir::North => Dir::West,
            Dir::West => Dir::South,
            Dir::South => Dir::East,
        }
    }

    fn step(self, (x, y): (i64, i64)) -> (i64, i64) {
        match self {
            Dir::East => (x + 1, y),
            Dir::South => (x, y + 1),
            Dir::West => (x - 1, y),
            Dir::North => (x, y - 1),
        }
    }
}

/// Outer boundary of one 8-connected pixel set, walked along pixel edges with
/// the interior on the right-hand side when viewed on screen. Raw (x, y)
/// coordinates therefore come out with positive shoelace area.
///
/// `inside(row, col)` must return false outside the canvas. The walk starts at
/// the top-left corner of `anchor`, the topmost-then-leftmost pixel.
pub(crate) fn trace_exterior(
    anchor: (usize, usize),
    inside: impl Fn(i64, i64) -> bool,
) -> Vec<(i64, i64)> {
    // Boundary edge leaving vertex (x, y) in direction `d`: the pixel on its
    // right is inside and the pixel on its left is not.
    let edge = |(x, y): (i64, i64), d: Dir| -> bool {
        let (right, left) = match d {
            Dir::East => ((y, x), (y - 1, x)),
            Dir::South => ((y, x - 1), (y, x)),
            Dir::West => ((y - 1, x - 1), (y, x - 1)),
            Dir::North => ((y - 1, x), (y - 1, x - 1)),
        };
        inside(right.0, right.1) && !inside(left.0, left.1)
    };

    let start = (anchor.1 as i64, anchor.0 as i64);
    let mut pos = start;
    let mut dir = Dir::East;
    let mut ring = vec![start];
    loop {
        pos = dir.step(pos);
        // At a diagonal pinch two edges leave the vertex; turning left keeps
        // diagonally touching pixels on one outline.
        let next = [dir.left(), dir, dir.right()]
            .into_iter()
            .find(|&d| edge(pos, d))
            .expect("boundary walk always continues");
        if pos == start && next == Dir::East {
            break;
        }
        if next != dir {
            ring.push(pos);
        }
        dir = next;
    }
    ring
}

/// Traces the exterior of every label. Holes are not reported.
pub fn polygonize(instances: &InstanceMap) -> PolygonSet {
    let (h, w) = instances.dims();
    let n = instances.max_label() as usize;
    let mut anchors: Vec<Option<(usize, usize)>> = vec![None; n + 1];
    let mut areas = vec![0usize; n + 1];
    for r in 0..h {
        for c in 0..w {
            let l = instances.get(r, c) as usize;
            if l == 0 {
                continue;
            }
            areas[l] += 1;
            anchors[l].get_or_insert((r, c));
        }
    }
    let labels = instances.labels();
    let polys = (1..=n)
        .filter_map(|l| {
            let anchor = anchors[l]?;
            let label = l as u32;
            let inside = |row: i64, col: i64| {
                row >= 0
                    && col >= 0
                    && (row as usize) < h
                    && (col as usize) < w
                    && labels[row as usize * w + col as usize] == label
            };
            let ring = trace_exterior(anchor, inside);
            Some(PolygonInstance {
                id: label,
                exterior: PolygonRing {
                    vertices: ring
                        .into_iter()
                        .map(|(x, y)| (x as f64, y as f64))
                        .collect(),
                },
                area_px: areas[l],
            })
        })
        .collect();
    PolygonSet {
        image_id: String::new(),
        height: h,
        width: w,
        instances: polys,
    }
}
