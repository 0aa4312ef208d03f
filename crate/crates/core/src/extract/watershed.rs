use crate::error::{Error, Result};
use crate::raster::{connected_components, BinaryMask, Connectivity, InstanceMap};

const NEIGHBORS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Assigns every region pixel to its geodesically nearest seed.
///
/// Expansion is layer-synchronous over the 8-neighbourhood and never leaves
/// `region`. A pixel reached in the same layer from several basins takes the
/// smallest label. Region components that contain no seed get one fresh label
/// each, numbered after the seed labels in anchor order.
pub fn watershed_assign(seeds: &InstanceMap, region: &BinaryMask) -> Result<InstanceMap> {
    if seeds.dims() != region.dims() {
        return Err(Error::dims(region.dims(), seeds.dims()));
    }
    let (h, w) = region.dims();
    let mut labels = seeds.labels().to_vec();
    let mut frontier = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        if region.data()[i] == 0 {
            return Err(Error::SeedOutsideRegion {
                label: l,
                row: i / w,
                col: i % w,
            });
        }
        frontier.push(i);
    }

    // Layer in which each pixel was reached; seeds are layer 0.
    let mut reached_at = vec![u32::MAX; h * w];
    for &i in &frontier {
        reached_at[i] = 0;
    }
    let mut next = Vec::new();
    let mut layer = 0u32;
    while !frontier.is_empty() {
        layer += 1;
        next.clear();
        for &i in &frontier {
            let l = labels[i];
            let (r, c) = ((i / w) as isize, (i % w) as isize);
            for (dr, dc) in NEIGHBORS {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr as usize >= h || nc as usize >= w {
                    continue;
                }
                let j = nr as usize * w + nc as usize;
                if region.data()[j] == 0 {
                    continue;
                }
                if reached_at[j] == u32::MAX {
                    reached_at[j] = layer;
                    labels[j] = l;
                    next.push(j);
                } else if reached_at[j] == layer && l < labels[j] {
                    labels[j] = l;
                }
            }
        }
        std::mem::swap(&mut frontier, &mut next);
    }

    let max_seed = seeds.max_label();
    let unreached = BinaryMask::from_vec(
        h,
        w,
        labels
            .iter()
            .zip(region.data())
            .map(|(&l, &m)| (l == 0 && m != 0) as u8)
            .collect(),
    )?;
    let orphans = connected_components(&unreached, Connectivity::Eight);
    for (l, &o) in labels.iter_mut().zip(orphans.labels()) {
        if o != 0 {
            *l = max_seed + o;
        }
    }
    Ok(InstanceMap::from_parts_unchecked(
        h,
        w,
        labels,
        max_seed + orphans.max_label(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::VecDeque;

    fn row_region(n: usize) -> BinaryMask {
        BinaryMask::from_fn(1, n, |_, _| true).unwrap()
    }

    #[test]
    fn center_tie_goes_to_smaller_label() {
        let seeds = InstanceMap::from_vec(1, 5, vec![1, 0, 0, 0, 2], 2).unwrap();
        let out = watershed_assign(&seeds, &row_region(5)).unwrap();
        assert_eq!(out.labels(), &[1, 1, 1, 2, 2]);
        // Reversed seed labels: the tie still resolves to label 1.
        let seeds = InstanceMap::from_vec(1, 5, vec![2, 0, 0, 0, 1], 2).unwrap();
        let out = watershed_assign(&seeds, &row_region(5)).unwrap();
        assert_eq!(out.labels(), &[2, 2, 1, 1, 1]);
    }

    #[test]
    fn disjoint_blobs_take_their_seed() {
        let region = BinaryMask::from_fn(3, 7, |_, c| c != 3).unwrap();
        let mut l = vec![0; 21];
        l[7] = 1;
        l[7 + 6] = 2;
        let seeds = InstanceMap::from_vec(3, 7, l, 2).unwrap();
        let out = watershed_assign(&seeds, &region).unwrap();
        for r in 0..3 {
            for c in 0..7 {
                let expect = match c {
                    0..=2 => 1,
                    3 => 0,
                    _ => 2,
                };
                assert_eq!(out.get(r, c), expect);
            }
        }
    }

    #[test]
    fn seedless_component_gets_fresh_label() {
        let region = BinaryMask::from_vec(1, 5, vec![1, 1, 0, 1, 1]).unwrap();
        let seeds = InstanceMap::from_vec(1, 5, vec![0, 0, 0, 0, 1], 1).unwrap();
        let out = watershed_assign(&seeds, &region).unwrap();
        assert_eq!(out.labels(), &[2, 2, 0, 1, 1]);
        assert_eq!(out.max_label(), 2);
    }

    #[test]
    fn seed_outside_region_is_an_error() {
        let region = BinaryMask::from_vec(1, 3, vec![1, 0, 1]).unwrap();
        let seeds = InstanceMap::from_vec(1, 3, vec![0, 1, 0], 1).unwrap();
        assert!(matches!(
            watershed_assign(&seeds, &region),
            Err(Error::SeedOutsideRegion {
                label: 1,
                row: 0,
                col: 1
            })
        ));
    }

    #[test]
    fn expansion_stays_inside_region() {
        // A U-shaped corridor: the right arm is geodesically far from seed 1
        // even though it is adjacent in straight-line terms.
        let rows = ["#.#", "#.#", "###"];
        let region = BinaryMask::from_fn(3, 3, |r, c| rows[r].as_bytes()[c] == b'#').unwrap();
        let seeds = InstanceMap::from_vec(3, 3, vec![1, 0, 2, 0, 0, 0, 0, 0, 0], 2).unwrap();
        let out = watershed_assign(&seeds, &region).unwrap();
        assert_eq!(out.labels(), &[1, 0, 2, 1, 0, 2, 1, 1, 2]);
    }

    // Independent oracle: one BFS per seed label, then per pixel the
    // lexicographic minimum of (distance, label).
    pub(crate) fn brute_force(seeds: &InstanceMap, region: &BinaryMask) -> Vec<u32> {
        let (h, w) = region.dims();
        let mut best: Vec<Option<(usize, u32)>> = vec![None; h * w];
        for label in 1..=seeds.max_label() {
            let mut dist = vec![usize::MAX; h * w];
            let mut q = VecDeque::new();
            for (i, &l) in seeds.labels().iter().enumerate() {
                if l == label {
                    dist[i] = 0;
                    q.push_back(i);
                }
            }
            while let Some(i) = q.pop_front() {
                let (r, c) = ((i / w) as isize, (i % w) as isize);
                for (dr, dc) in NEIGHBORS {
                    if region.get_signed(r + dr, c + dc) {
                        let j = (r + dr) as usize * w + (c + dc) as usize;
                        if dist[j] == usize::MAX {
                            dist[j] = dist[i] + 1;
                            q.push_back(j);
                        }
                    }
                }
            }
            for i in 0..h * w {
                if dist[i] != usize::MAX && best[i].is_none_or(|b| (dist[i], label) < b) {
                    best[i] = Some((dist[i], label));
                }
            }
        }
        best.iter().map(|b| b.map_or(0, |(_, l)| l)).collect()
    }

    fn scene() -> impl Strategy<Value = (BinaryMask, InstanceMap)> {
        (2usize..24, 2usize..24).prop_flat_map(|(h, w)| {
            (
                proptest::collection::vec(prop::bool::weighted(0.7), h * w),
                proptest::collection::vec((0..h, 0..w), 1..6),
            )
                .prop_map(move |(cells, seeds)| {
                    let mut region: Vec<u8> = cells.into_iter().map(u8::from).collect();
                    let mut labels = vec![0u32; h * w];
                    for (k, (r, c)) in seeds.into_iter().enumerate() {
                        region[r * w + c] = 1;
                        labels[r * w + c] = k as u32 + 1;
                    }
                    (
                        BinaryMask::from_vec(h, w, region).unwrap(),
                        InstanceMap::from_sparse(h, w, labels).unwrap(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force_on_reachable_pixels((region, seeds) in scene()) {
            let out = watershed_assign(&seeds, &region).unwrap();
            let oracle = brute_force(&seeds, &region);
            for (i, &want) in oracle.iter().enumerate() {
                if want != 0 {
                    prop_assert_eq!(out.labels()[i], want);
                } else if region.data()[i] != 0 {
                    prop_assert!(out.labels()[i] > seeds.max_label());
                } else {
                    prop_assert_eq!(out.labels()[i], 0);
                }
            }
            // Seeds keep their labels.
            for (i, &l) in seeds.labels().iter().enumerate() {
                if l != 0 {
                    prop_assert_eq!(out.labels()[i], l);
                }
            }
        }
    }
}
