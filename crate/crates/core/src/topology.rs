//! Cubical-complex topology of binary masks: Euler characteristic and Betti
//! numbers (components, tunnels, enclosed cavities).
//!
//! Foreground uses 26-connectivity and background 6-connectivity, the dual
//! pairing under which b1 = b0 + b2 - chi is always non-negative.

use crate::components::{component_count, connected_components, Connectivity};
use crate::error::{CoreError, Result};
use crate::volume::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BettiTriple {
    pub b0: u32,
    pub b1: u32,
    pub b2: u32,
}

impl BettiTriple {
    pub fn euler(&self) -> i64 {
        self.b0 as i64 - self.b1 as i64 + self.b2 as i64
    }
}

/// chi = V - E + F - C of the closed cubical complex whose 3-cells are the
/// foreground voxels.
///
/// Cells are identified by doubled coordinates: voxel (x,y,z) owns the 27
/// points (2x+a, 2y+b, 2z+c) with a,b,c in {0,1,2}; a point's dimension is its
/// number of odd coordinates, and shared cells deduplicate to a single point.
pub fn euler_characteristic(mask: &BinaryMask) -> i64 {
    let [nx, ny, nz] = mask.meta.dims;
    let mut cells: Vec<u64> = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if !mask.get(x, y, z) {
                    continue;
                }
                for dz in 0..3u64 {
                    for dy in 0..3u64 {
                        for dx in 0..3u64 {
                            let px = 2 * x as u64 + dx;
                            let py = 2 * y as u64 + dy;
                            let pz = 2 * z as u64 + dz;
                            cells.push(px | (py << 21) | (pz << 42));
                        }
                    }
                }
            }
        }
    }
    cells.sort_unstable();
    cells.dedup();
    let mut chi = 0i64;
    for c in cells {
        let odd = (c & 1) + ((c >> 21) & 1) + ((c >> 42) & 1);
        chi += if odd % 2 == 0 { 1 } else { -1 };
    }
    chi
}

/// (b0, b1, b2) with b0 from 26-connected foreground, b2 from 6-connected
/// complement components not reaching the grid boundary, and b1 derived from
/// the Euler characteristic.
pub fn betti_numbers(mask: &BinaryMask) -> Result<BettiTriple> {
    let b0 = component_count(mask, Connectivity::Corner26);
    if b0 == 0 {
        return Ok(BettiTriple { b0: 0, b1: 0, b2: 0 });
    }
    let b2 = enclosed_cavities(mask);
    let chi = euler_characteristic(mask);
    let b1 = b0 as i64 + b2 as i64 - chi;
    if b1 < 0 {
        return Err(CoreError::NegativeBetti(b1));
    }
    Ok(BettiTriple {
        b0,
        b1: b1 as u32,
        b2,
    })
}

/// 6-connected components of the complement that do not touch the grid boundary.
fn enclosed_cavities(mask: &BinaryMask) -> u32 {
    let comp = mask.complement();
    let (ids, count) = connected_components(&comp, Connectivity::Face6);
    if count == 0 {
        return 0;
    }
    let meta = &mask.meta;
    let [nx, ny, nz] = meta.dims;
    let mut touches = vec![false; count as usize + 1];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if x == 0 || y == 0 || z == 0 || x == nx - 1 || y == ny - 1 || z == nz - 1 {
                    let id = ids[meta.index(x, y, z)];
                    if id != 0 {
                        touches[id as usize] = true;
                    }
                }
            }
        }
    }
    (1..=count).filter(|&id| !touches[id as usize]).count() as u32
}
