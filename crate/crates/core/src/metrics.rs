//! Segmentation evaluation: generalized Dice, per-class Dice, HD95, volume
//! similarity and the topology-aware Euler difference.
//!
//! Metrics that are undefined for a pair (e.g. HD95 when a prediction
//! correctly contains no CC) are flagged rather than forced to a sentinel, so
//! aggregates can exclude them explicitly.

use crate::distance::surface_distances;
use crate::error::{CoreError, Result};
use crate::harmonize::merge_cc_into_wm;
use crate::topology::{euler_characteristic, BettiTriple};
use crate::volume::{extract_mask, BinaryMask, LabelVolume, TissueLabel};
use serde::{Deserialize, Serialize};

/// Per-class voxel counts of a label-volume pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn gt_size(&self) -> u64 {
        self.tp + self.fn_
    }
    pub fn pred_size(&self) -> u64 {
        self.tp + self.fp
    }
}

pub fn confusion_counts(gt: &LabelVolume, pred: &LabelVolume, class: TissueLabel) -> ConfusionCounts {
    let c = class.code();
    let mut k = ConfusionCounts::default();
    for (&g, &p) in gt.voxels.iter().zip(&pred.voxels) {
        match (g == c, p == c) {
            (true, true) => k.tp += 1,
            (false, true) => k.fp += 1,
            (true, false) => k.fn_ += 1,
            _ => {}
        }
    }
    k
}

/// A metric value that may be undefined, with the reason recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flagged {
    pub value: Option<f64>,
    pub flag: Option<String>,
}

impl Flagged {
    pub fn value(v: f64) -> Flagged {
        Flagged {
            value: Some(v),
            flag: None,
        }
    }
    pub fn flagged(v: Option<f64>, reason: &str) -> Flagged {
        Flagged {
            value: v,
            flag: Some(reason.to_string()),
        }
    }
}

/// gDSC with inverse-squared-volume class weights; classes absent from the
/// ground truth are excluded from both sums and returned as flagged.
pub fn generalized_dice(
    gt: &LabelVolume,
    pred: &LabelVolume,
    classes: &[TissueLabel],
) -> Result<(f64, Vec<TissueLabel>)> {
    gt.meta.require_same_grid(&pred.meta)?;
    if classes.is_empty() {
        return Err(CoreError::AllClassesAbsent);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut excluded = Vec::new();
    for &class in classes {
        let k = confusion_counts(gt, pred, class);
        if k.gt_size() == 0 {
            excluded.push(class);
            continue;
        }
        let w = 1.0 / (k.gt_size() as f64 * k.gt_size() as f64);
        num += w * k.tp as f64;
        den += w * (2 * k.tp + k.fp + k.fn_) as f64;
    }
    if excluded.len() == classes.len() {
        return Err(CoreError::AllClassesAbsent);
    }
    Ok((if den > 0.0 { 2.0 * num / den } else { 0.0 }, excluded))
}

/// Plain Dice on binary masks: 2|A n B| / (|A| + |B|).
pub fn dice(gt_mask: &BinaryMask, pred_mask: &BinaryMask) -> Flagged {
    let inter = gt_mask
        .voxels
        .iter()
        .zip(&pred_mask.voxels)
        .filter(|(&g, &p)| g != 0 && p != 0)
        .count() as f64;
    let (ng, np) = (gt_mask.count() as f64, pred_mask.count() as f64);
    if ng == 0.0 && np == 0.0 {
        return Flagged::flagged(None, "both-empty");
    }
    let v = 2.0 * inter / (ng + np);
    if ng == 0.0 {
        Flagged::flagged(Some(v), "gt-empty")
    } else if np == 0.0 {
        Flagged::flagged(Some(v), "pred-empty")
    } else {
        Flagged::value(v)
    }
}

/// Percentile with linear interpolation between order statistics; `p` in 0..=100.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let f = pos - lo as f64;
        sorted[lo] * (1.0 - f) + sorted[hi] * f
    }
}

/// max of the two directed 95th-percentile distances, in mm. Undefined when
/// either mask is empty.
pub fn hd95(gt_mask: &BinaryMask, pred_mask: &BinaryMask) -> Flagged {
    if gt_mask.is_empty() || pred_mask.is_empty() {
        let reason = match (gt_mask.is_empty(), pred_mask.is_empty()) {
            (true, true) => "both-empty",
            (true, false) => "gt-empty",
            _ => "pred-empty",
        };
        return Flagged::flagged(None, reason);
    }
    let (mut ab, mut ba) = surface_distances(gt_mask, pred_mask).expect("non-empty masks");
    ab.sort_by(|a, b| a.total_cmp(b));
    ba.sort_by(|a, b| a.total_cmp(b));
    Flagged::value(percentile(&ab, 95.0).max(percentile(&ba, 95.0)))
}

/// VS = 1 - ||S_t| - |S_g|| / (|S_t| + |S_g|).
pub fn volume_similarity(gt_mask: &BinaryMask, pred_mask: &BinaryMask) -> Flagged {
    let (ng, np) = (gt_mask.count() as f64, pred_mask.count() as f64);
    if ng == 0.0 && np == 0.0 {
        return Flagged::flagged(None, "both-empty");
    }
    let v = 1.0 - (np - ng).abs() / (np + ng);
    if ng == 0.0 {
        Flagged::flagged(Some(v), "gt-empty")
    } else if np == 0.0 {
        Flagged::flagged(Some(v), "pred-empty")
    } else {
        Flagged::value(v)
    }
}

/// ED = |chi_ref - chi(mask)|; an empty mask has chi = 0.
pub fn euler_difference(mask: &BinaryMask, reference: BettiTriple) -> i64 {
    (reference.euler() - euler_characteristic(mask)).abs()
}

/// CC ground-truth topology: one component, no tunnels, no cavities.
pub const CC_REFERENCE_TOPOLOGY: BettiTriple = BettiTriple { b0: 1, b1: 0, b2: 0 };

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: TissueLabel,
    pub dice: Flagged,
    pub hd95_mm: Flagged,
    pub vs: Flagged,
    /// Euler difference vs the single-solid-structure reference; CC only.
    pub ed: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegReport {
    pub classes: Vec<ClassMetrics>,
    pub gdsc: f64,
    /// Classes absent from the ground truth, excluded from the gDSC sums.
    pub gdsc_excluded: Vec<TissueLabel>,
    pub merged_cc_into_wm: bool,
}

impl SegReport {
    /// Frozen CSV layout: one row per class plus a trailing global row.
    pub const CSV_HEADER: &'static str = "class,dice,hd95_mm,vs,ed,flags";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        let fmt = |f: &Flagged| match f.value {
            Some(v) => format!("{v:.9}"),
            None => String::new(),
        };
        for c in &self.classes {
            let mut flags: Vec<&str> = Vec::new();
            for f in [&c.dice, &c.hd95_mm, &c.vs] {
                if let Some(r) = &f.flag {
                    if !flags.contains(&r.as_str()) {
                        flags.push(r);
                    }
                }
            }
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.class.name(),
                fmt(&c.dice),
                fmt(&c.hd95_mm),
                fmt(&c.vs),
                c.ed.map(|e| e.to_string()).unwrap_or_default(),
                flags.join(";")
            ));
        }
        let excluded: Vec<&str> = self.gdsc_excluded.iter().map(|c| c.name()).collect();
        out.push_str(&format!(
            "global,{:.9},,,,{}\n",
            self.gdsc,
            if excluded.is_empty() {
                String::new()
            } else {
                format!("gdsc-excluded:{}", excluded.join("+"))
            }
        ));
        out
    }
}

/// Full per-class evaluation. With `merge_cc` set, CC is relabeled to WM in
/// both volumes first and dropped from the evaluated class set.
pub fn evaluate(
    gt: &LabelVolume,
    pred: &LabelVolume,
    class_set: &[TissueLabel],
    merge_cc: bool,
) -> Result<SegReport> {
    gt.meta.require_same_grid(&pred.meta)?;
    let (gt, pred) = if merge_cc {
        (merge_cc_into_wm(gt), merge_cc_into_wm(pred))
    } else {
        (gt.clone(), pred.clone())
    };
    let classes: Vec<TissueLabel> = class_set
        .iter()
        .copied()
        .filter(|&c| !(merge_cc && c == TissueLabel::Cc))
        .collect();
    let (gdsc, gdsc_excluded) = generalized_dice(&gt, &pred, &classes)?;
    let mut rows = Vec::with_capacity(classes.len());
    for &class in &classes {
        let gm = extract_mask(&gt, class);
        let pm = extract_mask(&pred, class);
        let ed = (class == TissueLabel::Cc)
            .then(|| euler_difference(&pm, CC_REFERENCE_TOPOLOGY));
        rows.push(ClassMetrics {
            class,
            dice: dice(&gm, &pm),
            hd95_mm: hd95(&gm, &pm),
            vs: volume_similarity(&gm, &pm),
            ed,
        });
    }
    Ok(SegReport {
        classes: rows,
        gdsc,
        gdsc_excluded,
        merged_cc_into_wm: merge_cc,
    })
}
