//! Core 3D grid types: tissue labels, grid metadata, label/binary/intensity volumes.
//!
//! Voxels are stored x-fastest (`idx = x + nx*(y + ny*z)`). Grid axes are mapped
//! to anatomical axes through [`Orientation`], so algorithms address the
//! left-right, posterior-anterior and inferior-superior directions symbolically
//! instead of assuming a fixed axis order.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// The frozen 8-class tissue scheme plus background. Numeric codes are the
/// on-disk encoding and must not change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum TissueLabel {
    Background = 0,
    Csf = 1,
    Gm = 2,
    Wm = 3,
    Vm = 4,
    Cbm = 5,
    Sgm = 6,
    Bsm = 7,
    Cc = 8,
}

impl TissueLabel {
    pub const ALL: [TissueLabel; 9] = [
        TissueLabel::Background,
        TissueLabel::Csf,
        TissueLabel::Gm,
        TissueLabel::Wm,
        TissueLabel::Vm,
        TissueLabel::Cbm,
        TissueLabel::Sgm,
        TissueLabel::Bsm,
        TissueLabel::Cc,
    ];

    /// The seven FeTA tissue classes plus CC (everything except background).
    pub const TISSUES: [TissueLabel; 8] = [
        TissueLabel::Csf,
        TissueLabel::Gm,
        TissueLabel::Wm,
        TissueLabel::Vm,
        TissueLabel::Cbm,
        TissueLabel::Sgm,
        TissueLabel::Bsm,
        TissueLabel::Cc,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<TissueLabel> {
        Self::ALL
            .get(code as usize)
            .copied()
            .ok_or(CoreError::LabelOutOfRange(code))
    }

    pub fn name(self) -> &'static str {
        match self {
            TissueLabel::Background => "BG",
            TissueLabel::Csf => "CSF",
            TissueLabel::Gm => "GM",
            TissueLabel::Wm => "WM",
            TissueLabel::Vm => "VM",
            TissueLabel::Cbm => "CBM",
            TissueLabel::Sgm => "SGM",
            TissueLabel::Bsm => "BSM",
            TissueLabel::Cc => "CC",
        }
    }
}

/// Anatomical axis identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnatAxis {
    /// Left-right; positive direction is toward the right.
    LeftRight,
    /// Posterior-anterior; positive direction is toward the anterior.
    PosteriorAnterior,
    /// Inferior-superior; positive direction is toward the superior.
    InferiorSuperior,
}

/// Assignment of the three grid axes to anatomical axes, with per-axis sign.
///
/// `axes[g]` is the anatomical axis that grid axis `g` runs along and
/// `signs[g]` is +1 when increasing grid index moves in that axis's positive
/// anatomical direction (right / anterior / superior). Each anatomical axis
/// appears exactly once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orientation {
    pub axes: [AnatAxis; 3],
    pub signs: [i8; 3],
}

impl Orientation {
    /// RAS: grid x -> right, y -> anterior, z -> superior.
    pub const RAS: Orientation = Orientation {
        axes: [
            AnatAxis::LeftRight,
            AnatAxis::PosteriorAnterior,
            AnatAxis::InferiorSuperior,
        ],
        signs: [1, 1, 1],
    };

    pub fn validate(&self) -> Result<()> {
        let mut seen = [false; 3];
        for (a, s) in self.axes.iter().zip(self.signs) {
            if s != 1 && s != -1 {
                return Err(CoreError::InvalidConfig(format!(
                    "orientation sign must be +1 or -1, got {s}"
                )));
            }
            let i = match a {
                AnatAxis::LeftRight => 0,
                AnatAxis::PosteriorAnterior => 1,
                AnatAxis::InferiorSuperior => 2,
            };
            if seen[i] {
                return Err(CoreError::InvalidConfig(
                    "orientation names an anatomical axis twice".into(),
                ));
            }
            seen[i] = true;
        }
        Ok(())
    }

    /// Grid axis (and sign) carrying the given anatomical axis.
    pub fn grid_axis(&self, axis: AnatAxis) -> (usize, i8) {
        for g in 0..3 {
            if self.axes[g] == axis {
                return (g, self.signs[g]);
            }
        }
        unreachable!("validated orientation is a permutation")
    }
}

impl Default for Orientation {
    fn default() -> Self {
        Orientation::RAS
    }
}

/// Shared grid geometry: voxel counts, physical spacing (mm) and orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub orientation: Orientation,
}

impl GridMeta {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], orientation: Orientation) -> Result<GridMeta> {
        if dims.iter().any(|&d| d == 0) {
            return Err(CoreError::InvalidConfig("dims must be positive".into()));
        }
        if spacing.iter().any(|&s| !(s > 0.0)) {
            return Err(CoreError::InvalidConfig("spacing must be > 0".into()));
        }
        orientation.validate()?;
        Ok(GridMeta {
            dims,
            spacing,
            orientation,
        })
    }

    pub fn isotropic(n: usize, spacing: f64) -> GridMeta {
        GridMeta::new([n, n, n], [spacing; 3], Orientation::RAS).unwrap()
    }

    pub fn voxel_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let x = idx % self.dims[0];
        let y = (idx / self.dims[0]) % self.dims[1];
        let z = idx / (self.dims[0] * self.dims[1]);
        (x, y, z)
    }

    #[inline]
    pub fn contains(&self, x: i64, y: i64, z: i64) -> bool {
        x >= 0
            && y >= 0
            && z >= 0
            && (x as usize) < self.dims[0]
            && (y as usize) < self.dims[1]
            && (z as usize) < self.dims[2]
    }

    /// Physical position of a voxel center in grid-aligned mm coordinates.
    #[inline]
    pub fn position_mm(&self, x: usize, y: usize, z: usize) -> [f64; 3] {
        [
            x as f64 * self.spacing[0],
            y as f64 * self.spacing[1],
            z as f64 * self.spacing[2],
        ]
    }

    pub fn same_grid(&self, other: &GridMeta) -> bool {
        self.dims == other.dims
            && self.orientation == other.orientation
            && self
                .spacing
                .iter()
                .zip(other.spacing)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0))
    }

    pub fn require_same_grid(&self, other: &GridMeta) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(CoreError::MetadataMismatch(format!(
                "{:?}/{:?} vs {:?}/{:?}",
                self.dims, self.spacing, other.dims, other.spacing
            )))
        }
    }
}

/// Dense volume of tissue-label codes (the central currency of the pipeline).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    pub meta: GridMeta,
    pub voxels: Vec<u8>,
}

impl LabelVolume {
    pub fn new(meta: GridMeta, voxels: Vec<u8>) -> Result<LabelVolume> {
        if voxels.len() != meta.voxel_count() {
            return Err(CoreError::InvalidConfig(format!(
                "voxel buffer length {} != {}",
                voxels.len(),
                meta.voxel_count()
            )));
        }
        if let Some(&bad) = voxels.iter().find(|&&v| v > 8) {
            return Err(CoreError::LabelOutOfRange(bad));
        }
        Ok(LabelVolume { meta, voxels })
    }

    pub fn filled(meta: GridMeta, label: TissueLabel) -> LabelVolume {
        LabelVolume {
            voxels: vec![label.code(); meta.voxel_count()],
            meta,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> u8 {
        self.voxels[self.meta.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, label: TissueLabel) {
        let i = self.meta.index(x, y, z);
        self.voxels[i] = label.code();
    }

    /// Voxel count per label code 0..=8.
    pub fn census(&self) -> [usize; 9] {
        let mut counts = [0usize; 9];
        for &v in &self.voxels {
            counts[v as usize] += 1;
        }
        counts
    }

    pub fn count(&self, label: TissueLabel) -> usize {
        let c = label.code();
        self.voxels.iter().filter(|&&v| v == c).count()
    }

    pub fn contains_label(&self, label: TissueLabel) -> bool {
        let c = label.code();
        self.voxels.iter().any(|&v| v == c)
    }
}

/// Binary foreground mask sharing the geometry of the volume it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub meta: GridMeta,
    pub voxels: Vec<u8>,
}

impl BinaryMask {
    pub fn empty(meta: GridMeta) -> BinaryMask {
        BinaryMask {
            voxels: vec![0; meta.voxel_count()],
            meta,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.voxels[self.meta.index(x, y, z)] != 0
    }

    /// Out-of-grid reads resolve to background.
    #[inline]
    pub fn get_clipped(&self, x: i64, y: i64, z: i64) -> bool {
        self.meta.contains(x, y, z) && self.voxels[self.meta.index(x as usize, y as usize, z as usize)] != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, on: bool) {
        let i = self.meta.index(x, y, z);
        self.voxels[i] = on as u8;
    }

    pub fn count(&self) -> usize {
        self.voxels.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.iter().all(|&v| v == 0)
    }

    /// Complement within the grid.
    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            meta: self.meta,
            voxels: self.voxels.iter().map(|&v| (v == 0) as u8).collect(),
        }
    }
}

/// Dense volume of scalar intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityVolume {
    pub meta: GridMeta,
    pub voxels: Vec<f32>,
}

impl IntensityVolume {
    pub fn filled(meta: GridMeta, value: f32) -> IntensityVolume {
        IntensityVolume {
            voxels: vec![value; meta.voxel_count()],
            meta,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.voxels[self.meta.index(x, y, z)]
    }
}

/// mask voxel = 1 iff `vol` voxel equals `label`; metadata copied.
pub fn extract_mask(vol: &LabelVolume, label: TissueLabel) -> BinaryMask {
    let c = label.code();
    BinaryMask {
        meta: vol.meta,
        voxels: vol.voxels.iter().map(|&v| (v == c) as u8).collect(),
    }
}

/// Axis-aligned voxel bounding box, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoxelBox {
    pub min: [usize; 3],
    pub max: [usize; 3],
}

impl VoxelBox {
    pub fn extent(&self, axis: usize) -> usize {
        self.max[axis] - self.min[axis] + 1
    }
}

/// Minimal box containing all foreground voxels.
pub fn bounding_box(mask: &BinaryMask) -> Result<VoxelBox> {
    let mut min = [usize::MAX; 3];
    let mut max = [0usize; 3];
    let mut any = false;
    let [nx, ny, nz] = mask.meta.dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if mask.get(x, y, z) {
                    any = true;
                    let p = [x, y, z];
                    for a in 0..3 {
                        min[a] = min[a].min(p[a]);
                        max[a] = max[a].max(p[a]);
                    }
                }
            }
        }
    }
    if any {
        Ok(VoxelBox { min, max })
    } else {
        Err(CoreError::EmptyMask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_codes_frozen() {
        for (i, l) in TissueLabel::ALL.iter().enumerate() {
            assert_eq!(l.code() as usize, i);
            assert_eq!(TissueLabel::from_code(i as u8).unwrap(), *l);
        }
        assert!(TissueLabel::from_code(9).is_err());
    }

    #[test]
    fn extract_mask_definition() {
        let meta = GridMeta::isotropic(4, 1.0);
        let vol = LabelVolume::filled(meta, TissueLabel::Wm);
        assert_eq!(extract_mask(&vol, TissueLabel::Wm).count(), 64);
        assert_eq!(extract_mask(&vol, TissueLabel::Cc).count(), 0);
    }

    #[test]
    fn extract_mask_popcount_matches_scan() {
        let meta = GridMeta::isotropic(10, 1.0);
        let mut vol = LabelVolume::filled(meta, TissueLabel::Wm);
        let sites = [(1, 2, 3), (4, 4, 4), (9, 0, 0), (0, 9, 9), (5, 5, 5), (6, 1, 2), (3, 3, 9)];
        for &(x, y, z) in &sites {
            vol.set(x, y, z, TissueLabel::Cc);
        }
        let mask = extract_mask(&vol, TissueLabel::Cc);
        // independent scan oracle
        let mut n = 0;
        for z in 0..10 {
            for y in 0..10 {
                for x in 0..10 {
                    if vol.get(x, y, z) == TissueLabel::Cc.code() {
                        n += 1;
                    }
                }
            }
        }
        assert_eq!(n, 7);
        assert_eq!(mask.count(), n);
    }

    #[test]
    fn bounding_box_cases() {
        let meta = GridMeta::isotropic(8, 1.0);
        let mut m = BinaryMask::empty(meta);
        assert!(matches!(bounding_box(&m), Err(CoreError::EmptyMask)));
        m.set(3, 4, 5, true);
        let b = bounding_box(&m).unwrap();
        assert_eq!(b.min, [3, 4, 5]);
        assert_eq!(b.max, [3, 4, 5]);
        let full = BinaryMask {
            meta,
            voxels: vec![1; meta.voxel_count()],
        };
        let b = bounding_box(&full).unwrap();
        assert_eq!(b.min, [0, 0, 0]);
        assert_eq!(b.max, [7, 7, 7]);
    }

    #[test]
    fn orientation_rejects_duplicate_axis() {
        let o = Orientation {
            axes: [AnatAxis::LeftRight, AnatAxis::LeftRight, AnatAxis::InferiorSuperior],
            signs: [1, 1, 1],
        };
        assert!(o.validate().is_err());
    }

    #[test]
    fn label_volume_rejects_out_of_range() {
        let meta = GridMeta::isotropic(2, 1.0);
        let mut v = vec![0u8; 8];
        v[3] = 9;
        assert!(matches!(
            LabelVolume::new(meta, v),
            Err(CoreError::LabelOutOfRange(9))
        ));
    }
}
