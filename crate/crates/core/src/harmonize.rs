//! Label-scheme remapping between annotation protocols.

use crate::error::{CoreError, Result};
use crate::nifti::RawVolume;
use crate::volume::{LabelVolume, TissueLabel};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Mapping from source label codes to the 8-class scheme. In strict mode a
/// voxel code without an explicit entry is an error; otherwise it drops to
/// background.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelMap {
    pub name: String,
    pub strict: bool,
    pub map: BTreeMap<u8, u8>,
}

impl LabelMap {
    pub fn validate(&self) -> Result<()> {
        if let Some((&src, &tgt)) = self.map.iter().find(|(_, &t)| t > 8) {
            return Err(CoreError::InvalidConfig(format!(
                "map entry {src} -> {tgt} exceeds label code 8"
            )));
        }
        Ok(())
    }

    /// The Draw-EM to FeTA harmonization table, with the source CC class
    /// (code 10 here) retained as label 8.
    pub fn drawem_to_feta() -> LabelMap {
        let entries = [
            (0, 0),
            (1, 1), // CSF
            (2, 2), // GM
            (3, 3), // WM
            (4, 0), // skull -> background
            (5, 4), // lateral ventricles -> VM
            (6, 5), // CBM
            (7, 6), // SGM
            (8, 7), // BSM
            (9, 3), // hippocampi/amygdala merged with WM
            (10, 8), // CC retained as an additional class
        ];
        LabelMap {
            name: "drawem-to-feta".into(),
            strict: true,
            map: entries.into_iter().collect(),
        }
    }

    pub fn identity() -> LabelMap {
        LabelMap {
            name: "identity".into(),
            strict: true,
            map: (0..=8).map(|c| (c, c)).collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<LabelMap> {
        let m: LabelMap = serde_json::from_str(text)
            .map_err(|e| CoreError::InvalidConfig(format!("label map: {e}")))?;
        m.validate()?;
        Ok(m)
    }
}

/// Per-voxel table lookup; metadata preserved.
pub fn remap(vol: &RawVolume, map: &LabelMap) -> Result<LabelVolume> {
    map.validate()?;
    let mut out = Vec::with_capacity(vol.voxels.len());
    for &code in &vol.voxels {
        match map.map.get(&code) {
            Some(&tgt) => out.push(tgt),
            None if map.strict => return Err(CoreError::UnmappedCode(code)),
            None => out.push(0),
        }
    }
    Ok(LabelVolume {
        meta: vol.meta,
        voxels: out,
    })
}

/// CC voxels relabeled WM; everything else unchanged.
pub fn merge_cc_into_wm(vol: &LabelVolume) -> LabelVolume {
    let cc = TissueLabel::Cc.code();
    let wm = TissueLabel::Wm.code();
    LabelVolume {
        meta: vol.meta,
        voxels: vol
            .voxels
            .iter()
            .map(|&v| if v == cc { wm } else { v })
            .collect(),
    }
}
