use super::{BinaryMask, InstanceMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    /// Already-visited neighbours in a row-major scan (up-left, up, up-right, left).
    fn backward(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(-1, 0), (0, -1)],
            Connectivity::Eight => &[(-1, -1), (-1, 0), (-1, 1), (0, -1)],
        }
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new() -> Self {
        // Slot 0 is background.
        Self { parent: vec![0] }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller provisional id as root.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Two-pass labeling. Components are numbered 1..N by their topmost, then
/// leftmost pixel.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> InstanceMap {
    let (h, w) = mask.dims();
    let mut provisional = vec![0u32; h * w];
    let mut uf = UnionFind::new();
    for r in 0..h {
        for c in 0..w {
            if !mask.get(r, c) {
                continue;
            }
            let mut current = 0u32;
            for &(dr, dc) in connectivity.backward() {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if nr < 0 || nc < 0 || nc as usize >= w {
                    continue;
                }
                let l = provisional[nr as usize * w + nc as usize];
                if l == 0 {
                    continue;
                }
                if current == 0 {
                    current = l;
                } else {
                    uf.union(current, l);
                }
            }
            if current == 0 {
                current = uf.make();
            }
            provisional[r * w + c] = current;
        }
    }

    // Final labels in order of first appearance, which is the anchor order.
    let mut final_of = vec![0u32; uf.parent.len()];
    let mut next = 0u32;
    for l in provisional.iter_mut() {
        if *l == 0 {
            continue;
        }
        let root = uf.find(*l) as usize;
        if final_of[root] == 0 {
            next += 1;
            final_of[root] = next;
        }
        *l = final_of[root];
    }
    InstanceMap::from_parts_unchecked(h, w, provisional, next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::{BTreeSet, VecDeque};

    fn mask(rows: &[&str]) -> BinaryMask {
        let h = rows.len();
        let w = rows[0].len();
        BinaryMask::from_fn(h, w, |r, c| rows[r].as_bytes()[c] == b'#').unwrap()
    }

    #[test]
    fn separated_blocks() {
        let m = mask(&["##.##", "##.##"]);
        let cc = connected_components(&m, Connectivity::Eight);
        assert_eq!(cc.max_label(), 2);
        assert_eq!(cc.labels(), &[1, 1, 0, 2, 2, 1, 1, 0, 2, 2]);
    }

    #[test]
    fn diagonal_contact() {
        let m = mask(&["#.", ".#"]);
        assert_eq!(connected_components(&m, Connectivity::Eight).max_label(), 1);
        assert_eq!(connected_components(&m, Connectivity::Four).max_label(), 2);
    }

    #[test]
    fn empty_mask_has_no_labels() {
        let m = BinaryMask::new(4, 4).unwrap();
        assert_eq!(connected_components(&m, Connectivity::Eight).max_label(), 0);
    }

    #[test]
    fn anchor_order_with_late_merge() {
        // The right arm appears first on row 0 but the U merges at the bottom;
        // the lone pixel at (1,1) must come second.
        let m = mask(&["#..#", ".#.#", "...#", "####"]);
        let cc = connected_components(&m, Connectivity::Four);
        assert_eq!(cc.get(0, 0), 1);
        assert_eq!(cc.get(0, 3), 2);
        assert_eq!(cc.get(1, 1), 3);
        assert_eq!(cc.get(3, 0), 2);
    }

    // Flood-fill oracle returning the set of pixel sets.
    fn flood_components(m: &BinaryMask, conn: Connectivity) -> BTreeSet<BTreeSet<(usize, usize)>> {
        let (h, w) = m.dims();
        let mut seen = vec![false; h * w];
        let mut out = BTreeSet::new();
        let nbrs: Vec<(isize, isize)> = match conn {
            Connectivity::Four => vec![(-1, 0), (1, 0), (0, -1), (0, 1)],
            Connectivity::Eight => (-1..=1)
                .flat_map(|a| (-1..=1).map(move |b| (a, b)))
                .filter(|&p| p != (0, 0))
                .collect(),
        };
        for r in 0..h {
            for c in 0..w {
                if !m.get(r, c) || seen[r * w + c] {
                    continue;
                }
                let mut comp = BTreeSet::new();
                let mut q = VecDeque::from([(r, c)]);
                seen[r * w + c] = true;
                while let Some((pr, pc)) = q.pop_front() {
                    comp.insert((pr, pc));
                    for &(dr, dc) in &nbrs {
                        let (nr, nc) = (pr as isize + dr, pc as isize + dc);
                        if m.get_signed(nr, nc) && !seen[nr as usize * w + nc as usize] {
                            seen[nr as usize * w + nc as usize] = true;
                            q.push_back((nr as usize, nc as usize));
                        }
                    }
                }
                out.insert(comp);
            }
        }
        out
    }

    fn label_sets(im: &InstanceMap) -> BTreeSet<BTreeSet<(usize, usize)>> {
        (1..=im.max_label())
            .map(|l| {
                (0..im.height())
                    .flat_map(|r| (0..im.width()).map(move |c| (r, c)))
                    .filter(|&(r, c)| im.get(r, c) == l)
                    .collect()
            })
            .collect()
    }

    fn rotate90(m: &BinaryMask) -> BinaryMask {
        let (h, w) = m.dims();
        BinaryMask::from_fn(w, h, |r, c| m.get(h - 1 - c, r)).unwrap()
    }

    fn arb_mask() -> impl Strategy<Value = BinaryMask> {
        (1usize..16, 1usize..16).prop_flat_map(|(h, w)| {
            proptest::collection::vec(prop::bool::weighted(0.45), h * w).prop_map(move |d| {
                BinaryMask::from_vec(h, w, d.into_iter().map(u8::from).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn matches_flood_fill(m in arb_mask(), eight in any::<bool>()) {
            let conn = if eight { Connectivity::Eight } else { Connectivity::Four };
            let cc = connected_components(&m, conn);
            prop_assert_eq!(label_sets(&cc), flood_components(&m, conn));
            // Dense labels.
            let areas = cc.areas();
            prop_assert!(areas[1..].iter().all(|&a| a > 0));
        }

        #[test]
        fn rotation_invariant_up_to_relabeling(m in arb_mask()) {
            let cc = connected_components(&m, Connectivity::Eight);
            let rot = connected_components(&rotate90(&m), Connectivity::Eight);
            let h = m.height();
            let unrotated: BTreeSet<BTreeSet<(usize, usize)>> = label_sets(&rot)
                .into_iter()
                .map(|s| s.into_iter().map(|(r, c)| (h - 1 - c, r)).collect())
                .collect();
            prop_assert_eq!(unrotated, label_sets(&cc));
        }
    }
}
