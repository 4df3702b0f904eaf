//! Dense backward displacement fields and nearest-neighbor label warping.

use crate::error::Result;
use crate::volume::{GridMeta, LabelVolume, TissueLabel};

/// Dense 3D vector field in mm, interpreted as backward displacements:
/// the warped output at x samples the input at x - u(x).
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    pub meta: GridMeta,
    pub vectors: Vec<[f64; 3]>,
}

impl DisplacementField {
    pub fn zero(meta: GridMeta) -> DisplacementField {
        DisplacementField {
            vectors: vec![[0.0; 3]; meta.voxel_count()],
            meta,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> [f64; 3] {
        self.vectors[self.meta.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: [f64; 3]) {
        let i = self.meta.index(x, y, z);
        self.vectors[i] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.vectors.iter().all(|v| *v == [0.0; 3])
    }

    pub fn max_magnitude(&self) -> f64 {
        self.vectors
            .iter()
            .map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Nearest-neighbor backward warp: output(x) = vol(round((x - u(x)) / spacing)),
/// with out-of-grid samples mapping to background. A zero field is the identity.
pub fn warp_labels(vol: &LabelVolume, field: &DisplacementField) -> Result<LabelVolume> {
    vol.meta.require_same_grid(&field.meta)?;
    let meta = vol.meta;
    let [nx, ny, nz] = meta.dims;
    let mut out = vec![TissueLabel::Background.code(); meta.voxel_count()];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = meta.index(x, y, z);
                let u = field.vectors[i];
                if u == [0.0; 3] {
                    out[i] = vol.voxels[i];
                    continue;
                }
                let sx = ((x as f64 * meta.spacing[0] - u[0]) / meta.spacing[0]).round() as i64;
                let sy = ((y as f64 * meta.spacing[1] - u[1]) / meta.spacing[1]).round() as i64;
                let sz = ((z as f64 * meta.spacing[2] - u[2]) / meta.spacing[2]).round() as i64;
                if meta.contains(sx, sy, sz) {
                    out[i] = vol.voxels[meta.index(sx as usize, sy as usize, sz as usize)];
                }
            }
        }
    }
    Ok(LabelVolume { meta, voxels: out })
}
