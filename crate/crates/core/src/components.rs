//! Connected-component labeling on binary masks.

use crate::volume::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Face6,
    Edge18,
    Corner26,
}

impl Connectivity {
    pub fn neighbors(self) -> Vec<[i64; 3]> {
        let mut out = Vec::new();
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let m = dx.abs() + dy.abs() + dz.abs();
                    let keep = match self {
                        Connectivity::Face6 => m == 1,
                        Connectivity::Edge18 => (1..=2).contains(&m),
                        Connectivity::Corner26 => m >= 1,
                    };
                    if keep {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

/// Component ids 1..=count assigned in first-encountered x-fastest scan order;
/// 0 marks background.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> (Vec<u32>, u32) {
    let meta = &mask.meta;
    let [nx, ny, nz] = meta.dims;
    let neigh = connectivity.neighbors();
    let mut ids = vec![0u32; meta.voxel_count()];
    let mut count = 0u32;
    let mut stack: Vec<usize> = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = meta.index(x, y, z);
                if mask.voxels[i] == 0 || ids[i] != 0 {
                    continue;
                }
                count += 1;
                ids[i] = count;
                stack.push(i);
                while let Some(j) = stack.pop() {
                    let (cx, cy, cz) = meta.coords(j);
                    for o in &neigh {
                        let (px, py, pz) = (cx as i64 + o[0], cy as i64 + o[1], cz as i64 + o[2]);
                        if !meta.contains(px, py, pz) {
                            continue;
                        }
                        let k = meta.index(px as usize, py as usize, pz as usize);
                        if mask.voxels[k] != 0 && ids[k] == 0 {
                            ids[k] = count;
                            stack.push(k);
                        }
                    }
                }
            }
        }
    }
    (ids, count)
}

/// Number of components only.
pub fn component_count(mask: &BinaryMask, connectivity: Connectivity) -> u32 {
    connected_components(mask, connectivity).1
}
