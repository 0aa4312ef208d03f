//! Pixel- and object-level scoring, per-image count export and TP/FP/FN
//! color maps.

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, InstanceMap};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvalCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl EvalCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, fp, fn_ }
    }

    fn is_empty(&self) -> bool {
        self.tp == 0 && self.fp == 0 && self.fn_ == 0
    }
}

impl Add for EvalCounts {
    type Output = EvalCounts;

    fn add(self, o: EvalCounts) -> EvalCounts {
        EvalCounts::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

impl AddAssign for EvalCounts {
    fn add_assign(&mut self, o: EvalCounts) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PixelScores {
    pub counts: EvalCounts,
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
    pub iou: f64,
}

// Ratio with the empty-vs-empty convention: 0/0 is a perfect score when
// nothing at all was predicted or expected, and 0 otherwise.
fn ratio(num: u64, den: u64, all_empty: bool) -> f64 {
    if den == 0 {
        if all_empty {
            1.0
        } else {
            0.0
        }
    } else {
        num as f64 / den as f64
    }
}

pub fn pixel_scores(pred: &BinaryMask, gt: &BinaryMask) -> Result<PixelScores> {
    pred.ensure_same_dims(gt)?;
    let mut c = EvalCounts::default();
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        match (p != 0, g != 0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            _ => {}
        }
    }
    let e = c.is_empty();
    Ok(PixelScores {
        counts: c,
        precision: ratio(c.tp, c.tp + c.fp, e),
        recall: ratio(c.tp, c.tp + c.fn_, e),
        fscore: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_, e),
        iou: ratio(c.tp, c.tp + c.fp + c.fn_, e),
    })
}

/// `|a ∩ b| / |a ∪ b|` over pixel supports.
pub fn instance_iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let (mut inter, mut union) = (0u64, 0u64);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        inter += (x & y) as u64;
        union += (x | y) as u64;
    }
    if union == 0 {
        return Err(Error::InvalidArgument("IoU of two empty instances".into()));
    }
    Ok(inter as f64 / union as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub pred: u32,
    pub gt: u32,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub pairs: Vec<MatchPair>,
    pub counts: EvalCounts,
    pub unmatched_pred: Vec<u32>,
    pub unmatched_gt: Vec<u32>,
}

/// Every (pred, gt) pair with a nonzero overlap and its IoU, in id order.
pub fn overlap_table(pred: &InstanceMap, gt: &InstanceMap) -> Result<Vec<MatchPair>> {
    if pred.dims() != gt.dims() {
        return Err(Error::dims(gt.dims(), pred.dims()));
    }
    let pa = pred.areas();
    let ga = gt.areas();
    let mut inter: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
        if p != 0 && g != 0 {
            *inter.entry((p, g)).or_default() += 1;
        }
    }
    Ok(inter
        .into_iter()
        .map(|((p, g), i)| {
            let union = pa[p as usize] as u64 + ga[g as usize] as u64 - i;
            MatchPair {
                pred: p,
                gt: g,
                iou: i as f64 / union as f64,
            }
        })
        .collect())
}

/// Greedy one-to-one matching: candidates with IoU >= threshold are taken in
/// descending IoU order, ties broken by smaller pred id, then smaller gt id.
pub fn match_instances(
    pred: &InstanceMap,
    gt: &InstanceMap,
    iou_threshold: f64,
) -> Result<MatchResult> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "IoU threshold {iou_threshold} outside (0, 1]"
        )));
    }
    let mut candidates: Vec<MatchPair> = overlap_table(pred, gt)?
        .into_iter()
        .filter(|m| m.iou >= iou_threshold)
        .collect();
    candidates.sort_by(|a, b| {
        b.iou
            .total_cmp(&a.iou)
            .then(a.pred.cmp(&b.pred))
            .then(a.gt.cmp(&b.gt))
    });
    let mut pred_used = vec![false; pred.max_label() as usize + 1];
    let mut gt_used = vec![false; gt.max_label() as usize + 1];
    let mut pairs = Vec::new();
    for m in candidates {
        if pred_used[m.pred as usize] || gt_used[m.gt as usize] {
            continue;
        }
        pred_used[m.pred as usize] = true;
        gt_used[m.gt as usize] = true;
        pairs.push(m);
    }
    let unmatched_pred: Vec<u32> = (1..=pred.max_label())
        .filter(|&p| !pred_used[p as usize])
        .collect();
    let unmatched_gt: Vec<u32> = (1..=gt.max_label())
        .filter(|&g| !gt_used[g as usize])
        .collect();
    Ok(MatchResult {
        counts: EvalCounts::new(
            pairs.len() as u64,
            unmatched_pred.len() as u64,
            unmatched_gt.len() as u64,
        ),
        pairs,
        unmatched_pred,
        unmatched_gt,
    })
}

/// `2TP / (2TP + FP + FN)` as a percentage; 100 when all counts are zero.
pub fn f1_from_counts(c: EvalCounts) -> f64 {
    100.0 * ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_, c.is_empty())
}

/// Sums counts over images before computing F1.
pub fn aggregate_global(per_image: &[EvalCounts]) -> (EvalCounts, f64) {
    let total = per_image
        .iter()
        .fold(EvalCounts::default(), |acc, &c| acc + c);
    (total, f1_from_counts(total))
}

/// RGB raster: red = TP prediction, green = FP prediction, blue = FN ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorMap {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl ColorMap {
    pub fn to_ppm(&self) -> Vec<u8> {
        crate::formats::encode_ppm(self.height, self.width, &self.pixels)
    }

    pub fn get(&self, row: usize, col: usize) -> [u8; 3] {
        self.pixels[row * self.width + col]
    }
}

fn check_partition(
    kind: &str,
    max: u32,
    matched: impl Iterator<Item = u32>,
    unmatched: &[u32],
) -> Result<Vec<Option<bool>>> {
    // None = unseen, Some(true) = matched, Some(false) = unmatched.
    let mut state: Vec<Option<bool>> = vec![None; max as usize + 1];
    let mut mark = |id: u32, v: bool| -> Result<()> {
        if id == 0 || id > max {
            return Err(Error::InconsistentMatch(format!(
                "{kind} id {id} not in 1..={max}"
            )));
        }
        if state[id as usize].replace(v).is_some() {
            return Err(Error::InconsistentMatch(format!(
                "{kind} id {id} listed twice"
            )));
        }
        Ok(())
    };
    for id in matched {
        mark(id, true)?;
    }
    for &id in unmatched {
        mark(id, false)?;
    }
    if let Some(id) = (1..=max).find(|&i| state[i as usize].is_none()) {
        return Err(Error::InconsistentMatch(format!(
            "{kind} id {id} missing from match"
        )));
    }
    Ok(state)
}

pub fn color_map(pred: &InstanceMap, gt: &InstanceMap, m: &MatchResult) -> Result<ColorMap> {
    if pred.dims() != gt.dims() {
        return Err(Error::dims(gt.dims(), pred.dims()));
    }
    let pred_state = check_partition(
        "pred",
        pred.max_label(),
        m.pairs.iter().map(|p| p.pred),
        &m.unmatched_pred,
    )?;
    let gt_state = check_partition(
        "gt",
        gt.max_label(),
        m.pairs.iter().map(|p| p.gt),
        &m.unmatched_gt,
    )?;
    let pixels = pred
        .labels()
        .iter()
        .zip(gt.labels())
        .map(|(&p, &g)| {
            let mut px = [0u8; 3];
            if p != 0 {
                if pred_state[p as usize] == Some(true) {
                    px[0] = 255;
                } else {
                    px[1] = 255;
                }
            }
            if g != 0 && gt_state[g as usize] == Some(false) {
                px[2] = 255;
            }
            px
        })
        .collect();
    Ok(ColorMap {
        height: pred.height(),
        width: pred.width(),
        pixels,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageCounts {
    pub image_id: String,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ImageCounts {
    pub fn new(image_id: impl Into<String>, c: EvalCounts) -> Self {
        Self {
            image_id: image_id.into(),
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
        }
    }

    pub fn counts(&self) -> EvalCounts {
        EvalCounts::new(self.tp, self.fp, self.fn_)
    }
}

/// CSV with header `image_id,tp,fp,fn`, rows in input order.
pub fn export_per_image_csv(rows: &[ImageCounts]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["image_id", "tp", "fp", "fn"])?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

pub fn parse_per_image_csv(text: &str) -> Result<Vec<ImageCounts>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["image_id", "tp", "fp", "fn"] {
        return Err(Error::Format(format!("unexpected CSV header {headers:?}")));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_image: Vec<ImageCounts>,
    pub global: EvalCounts,
    pub f1_percent: f64,
}

impl EvalReport {
    pub fn from_rows(per_image: Vec<ImageCounts>) -> Self {
        let counts: Vec<EvalCounts> = per_image.iter().map(ImageCounts::counts).collect();
        let (global, f1_percent) = aggregate_global(&counts);
        Self {
            per_image,
            global,
            f1_percent,
        }
    }
}
