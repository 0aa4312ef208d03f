//! Test-time-augmentation and fold-ensemble averaging of probability maps.

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, ProbMap};
use serde::{Deserialize, Serialize};

pub const DEFAULT_THRESHOLD: f32 = 0.3;

/// Positional views used at inference. Each is its own inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViewTransform {
    Identity,
    HFlip,
    VFlip,
    Rot180,
}

impl ViewTransform {
    pub const ALL: [ViewTransform; 4] = [
        ViewTransform::Identity,
        ViewTransform::HFlip,
        ViewTransform::VFlip,
        ViewTransform::Rot180,
    ];

    /// File-name suffix used for per-view map files.
    pub fn suffix(self) -> &'static str {
        match self {
            ViewTransform::Identity => "id",
            ViewTransform::HFlip => "hf",
            ViewTransform::VFlip => "vf",
            ViewTransform::Rot180 => "r180",
        }
    }

    fn source_index(self, h: usize, w: usize, r: usize, c: usize) -> usize {
        let (sr, sc) = match self {
            ViewTransform::Identity => (r, c),
            ViewTransform::HFlip => (r, w - 1 - c),
            ViewTransform::VFlip => (h - 1 - r, c),
            ViewTransform::Rot180 => (h - 1 - r, w - 1 - c),
        };
        sr * w + sc
    }
}

fn transform_plane<T: Copy>(plane: &[T], h: usize, w: usize, view: ViewTransform) -> Vec<T> {
    let mut out = Vec::with_capacity(plane.len());
    for r in 0..h {
        for c in 0..w {
            out.push(plane[view.source_index(h, w, r, c)]);
        }
    }
    out
}

/// Rasters that can be viewed under a [`ViewTransform`].
pub trait ApplyView: Sized {
    fn apply_view(&self, view: ViewTransform) -> Self;
}

impl ApplyView for ProbMap {
    fn apply_view(&self, view: ViewTransform) -> Self {
        let (ch, h, w) = self.shape();
        let data = (0..ch)
            .flat_map(|c| transform_plane(self.channel(c), h, w, view))
            .collect();
        ProbMap::from_vec(ch, h, w, data).expect("shape preserved")
    }
}

impl ApplyView for BinaryMask {
    fn apply_view(&self, view: ViewTransform) -> Self {
        let (h, w) = self.dims();
        BinaryMask::from_vec(h, w, transform_plane(self.data(), h, w, view))
            .expect("shape preserved")
    }
}

pub fn apply_view<T: ApplyView>(raster: &T, view: ViewTransform) -> T {
    raster.apply_view(view)
}

// Per-pixel mean of equally shaped maps. Values are sorted before a 64-bit
// accumulation, so the result does not depend on the order of `maps`.
fn mean_of(maps: &[&ProbMap]) -> Result<ProbMap> {
    let first = maps
        .first()
        .ok_or_else(|| Error::InvalidArgument("no maps to average".into()))?;
    for m in &maps[1..] {
        first.ensure_same_shape(m)?;
    }
    let (ch, h, w) = first.shape();
    let n = maps.len();
    let mut buf = vec![0f32; n];
    let data = (0..ch * h * w)
        .map(|i| {
            for (slot, m) in buf.iter_mut().zip(maps) {
                *slot = m.data()[i];
            }
            buf.sort_by(f32::total_cmp);
            let sum: f64 = buf.iter().map(|&v| v as f64).sum();
            // Rounding can push the mean a hair outside [min, max]; clamp it back.
            ((sum / n as f64) as f32).clamp(buf[0], buf[n - 1])
        })
        .collect();
    ProbMap::from_vec(ch, h, w, data)
}

/// Re-aligns the four views through their inverses and averages them.
/// Every transform in [`ViewTransform::ALL`] must appear exactly once.
pub fn tta_average(views: &[(ViewTransform, ProbMap)]) -> Result<ProbMap> {
    let mut sorted: Vec<&(ViewTransform, ProbMap)> = views.iter().collect();
    sorted.sort_by_key(|(v, _)| *v);
    let kinds: Vec<ViewTransform> = sorted.iter().map(|(v, _)| *v).collect();
    if kinds != ViewTransform::ALL {
        return Err(Error::InvalidArgument(format!(
            "TTA needs exactly one map per view {:?}, got {:?}",
            ViewTransform::ALL,
            kinds
        )));
    }
    let aligned: Vec<ProbMap> = sorted.iter().map(|(v, m)| m.apply_view(*v)).collect();
    mean_of(&aligned.iter().collect::<Vec<_>>())
}

/// Pixelwise arithmetic mean across fold models.
pub fn ensemble_average(maps: &[ProbMap]) -> Result<ProbMap> {
    mean_of(&maps.iter().collect::<Vec<_>>())
}

/// Inclusive threshold: a pixel is set when its value is `>= threshold`.
pub fn binarize(map: &ProbMap, channel: usize, threshold: f32) -> Result<BinaryMask> {
    if channel >= map.channels() {
        return Err(Error::InvalidArgument(format!(
            "channel {channel} out of range for {}-channel map",
            map.channels()
        )));
    }
    BinaryMask::from_vec(
        map.height(),
        map.width(),
        map.channel(channel)
            .iter()
            .map(|&v| (v >= threshold) as u8)
            .collect(),
    )
}

/// One fold's contribution: either a single map or its four TTA views.
#[derive(Debug, Clone)]
pub enum FoldInput {
    Single(ProbMap),
    Views(Vec<(ViewTransform, ProbMap)>),
}

#[derive(Debug, Clone)]
pub struct FusionOutput {
    /// Per-fold map after view averaging (identical to the input for `Single`).
    pub per_fold: Vec<ProbMap>,
    pub fused: ProbMap,
}

/// Views are averaged within each fold first, then folds are averaged.
pub fn fuse_folds(folds: Vec<FoldInput>) -> Result<FusionOutput> {
    let per_fold = folds
        .into_iter()
        .map(|f| match f {
            FoldInput::Single(m) => Ok(m),
            FoldInput::Views(v) => tta_average(&v),
        })
        .collect::<Result<Vec<_>>>()?;
    let fused = ensemble_average(&per_fold)?;
    Ok(FusionOutput { per_fold, fused })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_map(rng: &mut ChaCha8Rng, ch: usize, h: usize, w: usize) -> ProbMap {
        ProbMap::from_vec(
            ch,
            h,
            w,
            (0..ch * h * w).map(|_| rng.gen::<f32>()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn rot180_of_2x2() {
        let m = ProbMap::from_vec(1, 2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(
            m.apply_view(ViewTransform::Rot180).data(),
            &[0.4, 0.3, 0.2, 0.1]
        );
        assert_eq!(
            m.apply_view(ViewTransform::HFlip).data(),
            &[0.2, 0.1, 0.4, 0.3]
        );
        assert_eq!(
            m.apply_view(ViewTransform::VFlip).data(),
            &[0.3, 0.4, 0.1, 0.2]
        );
        assert_eq!(m.apply_view(ViewTransform::Identity), m);
    }

    #[test]
    fn constant_views_average_to_constant() {
        let m = ProbMap::from_vec(2, 3, 3, vec![0.7; 18]).unwrap();
        let views: Vec<_> = ViewTransform::ALL.iter().map(|&v| (v, m.clone())).collect();
        assert_eq!(tta_average(&views).unwrap(), m);
    }

    #[test]
    fn symmetric_image_equals_identity_view() {
        let m =
            ProbMap::from_vec(1, 3, 3, vec![0.1, 0.5, 0.1, 0.5, 0.9, 0.5, 0.1, 0.5, 0.1]).unwrap();
        let views: Vec<_> = ViewTransform::ALL
            .iter()
            .map(|&v| (v, m.apply_view(v)))
            .collect();
        assert_eq!(tta_average(&views).unwrap(), m);
    }

    #[test]
    fn tta_matches_direct_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (h, w) = (4, 4);
        let views: Vec<_> = ViewTransform::ALL
            .iter()
            .map(|&v| (v, random_map(&mut rng, 1, h, w)))
            .collect();
        let out = tta_average(&views).unwrap();
        for r in 0..h {
            for c in 0..w {
                // Undo each view by explicit index arithmetic.
                let vals = [
                    views[0].1.get(0, r, c),
                    views[1].1.get(0, r, w - 1 - c),
                    views[2].1.get(0, h - 1 - r, c),
                    views[3].1.get(0, h - 1 - r, w - 1 - c),
                ];
                let mean = vals.iter().map(|&v| v as f64).sum::<f64>() / 4.0;
                assert!((out.get(0, r, c) as f64 - mean).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn tta_rejects_incomplete_or_mismatched() {
        let m = ProbMap::zeros(1, 2, 2).unwrap();
        let three: Vec<_> = ViewTransform::ALL[..3]
            .iter()
            .map(|&v| (v, m.clone()))
            .collect();
        assert!(tta_average(&three).is_err());
        let mut dup: Vec<_> = ViewTransform::ALL.iter().map(|&v| (v, m.clone())).collect();
        dup[3].0 = ViewTransform::HFlip;
        assert!(tta_average(&dup).is_err());
        let mut bad: Vec<_> = ViewTransform::ALL.iter().map(|&v| (v, m.clone())).collect();
        bad[2].1 = ProbMap::zeros(1, 3, 2).unwrap();
        assert!(tta_average(&bad).is_err());
    }

    #[test]
    fn ensemble_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let one = random_map(&mut rng, 2, 3, 5);
        assert_eq!(ensemble_average(std::slice::from_ref(&one)).unwrap(), one);

        let zeros = ProbMap::zeros(1, 2, 2).unwrap();
        let ones = ProbMap::from_vec(1, 2, 2, vec![1.0; 4]).unwrap();
        assert!(ensemble_average(&[zeros, ones])
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 0.5));

        let five: Vec<_> = (0..5).map(|_| random_map(&mut rng, 3, 8, 8)).collect();
        let out = ensemble_average(&five).unwrap();
        for i in 0..out.data().len() {
            let oracle: f64 = five.iter().map(|m| m.data()[i] as f64).sum::<f64>() / 5.0;
            assert!((out.data()[i] as f64 - oracle).abs() < 1e-6);
        }

        assert!(ensemble_average(&[]).is_err());
        assert!(ensemble_average(&[
            ProbMap::zeros(1, 2, 2).unwrap(),
            ProbMap::zeros(2, 2, 2).unwrap()
        ])
        .is_err());
    }

    #[test]
    fn binarize_inclusive() {
        let m = ProbMap::from_vec(1, 1, 3, vec![0.29, 0.3, 0.31]).unwrap();
        assert_eq!(binarize(&m, 0, 0.3).unwrap().data(), &[0, 1, 1]);
        let low = ProbMap::from_vec(1, 2, 2, vec![0.29; 4]).unwrap();
        assert!(binarize(&low, 0, DEFAULT_THRESHOLD).unwrap().is_empty());
        assert!(binarize(&m, 1, 0.3).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = random_map(&mut rng, 2, 6, 6);
        let b = binarize(&r, 1, 0.3).unwrap();
        for row in 0..6 {
            for col in 0..6 {
                assert_eq!(b.get(row, col), r.get(1, row, col) >= 0.3);
            }
        }
    }

    #[test]
    fn fuse_folds_exposes_intermediates() {
        let a = ProbMap::from_vec(1, 1, 2, vec![0.2, 0.4]).unwrap();
        let views: Vec<_> = ViewTransform::ALL
            .iter()
            .map(|&v| (v, a.apply_view(v)))
            .collect();
        let b = ProbMap::from_vec(1, 1, 2, vec![0.6, 0.8]).unwrap();
        let out = fuse_folds(vec![FoldInput::Views(views), FoldInput::Single(b)]).unwrap();
        assert_eq!(out.per_fold[0], a);
        assert!((out.fused.data()[0] - 0.4).abs() < 1e-7);
        assert!((out.fused.data()[1] - 0.6).abs() < 1e-7);
    }

    fn arb_map() -> impl Strategy<Value = ProbMap> {
        (1usize..3, 1usize..7, 1usize..7).prop_flat_map(|(c, h, w)| {
            proptest::collection::vec(0.0f32..=1.0, c * h * w)
                .prop_map(move |d| ProbMap::from_vec(c, h, w, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn views_are_involutions(m in arb_map()) {
            for v in ViewTransform::ALL {
                prop_assert_eq!(m.apply_view(v).apply_view(v), m.clone());
            }
        }

        #[test]
        fn order_and_bounds(maps in (1usize..3, 1usize..5, 1usize..5).prop_flat_map(|(c, h, w)| {
            proptest::collection::vec(
                proptest::collection::vec(0.0f32..=1.0, c * h * w)
                    .prop_map(move |d| ProbMap::from_vec(c, h, w, d).unwrap()),
                1..6,
            )
        })) {
            let fused = ensemble_average(&maps).unwrap();
            let mut rev = maps.clone();
            rev.reverse();
            prop_assert_eq!(&ensemble_average(&rev).unwrap(), &fused);
            for i in 0..fused.data().len() {
                let lo = maps.iter().map(|m| m.data()[i]).fold(f32::INFINITY, f32::min);
                let hi = maps.iter().map(|m| m.data()[i]).fold(f32::NEG_INFINITY, f32::max);
                prop_assert!(lo <= fused.data()[i] && fused.data()[i] <= hi);
            }
            let replicated = vec![maps[0].clone(); maps.len()];
            prop_assert_eq!(
                binarize(&ensemble_average(&replicated).unwrap(), 0, 0.3).unwrap(),
                binarize(&maps[0], 0, 0.3).unwrap()
            );
        }

        #[test]
        fn tta_order_invariant(m in arb_map(), perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
            let views: Vec<_> = ViewTransform::ALL.iter().enumerate()
                .map(|(k, &v)| (v, ProbMap::from_vec(
                    m.channels(), m.height(), m.width(),
                    m.data().iter().map(|x| (x * (k as f32 + 1.0) / 4.0).min(1.0)).collect()).unwrap()))
                .collect();
            let shuffled: Vec<_> = perm.iter().map(|&i| views[i].clone()).collect();
            prop_assert_eq!(tta_average(&views).unwrap(), tta_average(&shuffled).unwrap());
        }
    }
}
