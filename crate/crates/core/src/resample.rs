//! Nearest-neighbor resampling of label volumes to a canonical grid.

use crate::error::Result;
use crate::volume::{GridMeta, LabelVolume, TissueLabel};

fn spacing_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.max(b)
}

/// Resample to `target_spacing` (nearest neighbor, center-aligned) then
/// center-pad with background or center-crop to `target_dims`.
pub fn conform(
    vol: &LabelVolume,
    target_spacing: [f64; 3],
    target_dims: [usize; 3],
) -> Result<LabelVolume> {
    let meta = vol.meta;
    let resampled = if (0..3).all(|a| spacing_close(meta.spacing[a], target_spacing[a])) {
        vol.clone()
    } else {
        let new_dims: [usize; 3] = std::array::from_fn(|a| {
            ((meta.dims[a] as f64 * meta.spacing[a] / target_spacing[a]).round() as usize).max(1)
        });
        let new_meta = GridMeta::new(new_dims, target_spacing, meta.orientation)?;
        let mut voxels = vec![TissueLabel::Background.code(); new_meta.voxel_count()];
        // center-aligned mapping keeps the content centroid fixed
        let center_in: [f64; 3] = std::array::from_fn(|a| (meta.dims[a] as f64 - 1.0) / 2.0);
        let center_out: [f64; 3] = std::array::from_fn(|a| (new_dims[a] as f64 - 1.0) / 2.0);
        for z in 0..new_dims[2] {
            for y in 0..new_dims[1] {
                for x in 0..new_dims[0] {
                    let out = [x as f64, y as f64, z as f64];
                    let mut src = [0i64; 3];
                    for a in 0..3 {
                        src[a] = ((out[a] - center_out[a]) * target_spacing[a] / meta.spacing[a]
                            + center_in[a])
                            .round() as i64;
                    }
                    if meta.contains(src[0], src[1], src[2]) {
                        voxels[new_meta.index(x, y, z)] =
                            vol.voxels[meta.index(src[0] as usize, src[1] as usize, src[2] as usize)];
                    }
                }
            }
        }
        LabelVolume {
            meta: new_meta,
            voxels,
        }
    };

    if resampled.meta.dims == target_dims {
        return Ok(resampled);
    }
    let src_meta = resampled.meta;
    let out_meta = GridMeta::new(target_dims, target_spacing, meta.orientation)?;
    let mut voxels = vec![TissueLabel::Background.code(); out_meta.voxel_count()];
    // signed offset of the output window into the source grid
    let off: [i64; 3] =
        std::array::from_fn(|a| (src_meta.dims[a] as i64 - target_dims[a] as i64) / 2);
    for z in 0..target_dims[2] {
        for y in 0..target_dims[1] {
            for x in 0..target_dims[0] {
                let s = [
                    x as i64 + off[0],
                    y as i64 + off[1],
                    z as i64 + off[2],
                ];
                if src_meta.contains(s[0], s[1], s[2]) {
                    voxels[out_meta.index(x, y, z)] = resampled.voxels
                        [src_meta.index(s[0] as usize, s[1] as usize, s[2] as usize)];
                }
            }
        }
    }
    Ok(LabelVolume {
        meta: out_meta,
        voxels,
    })
}
