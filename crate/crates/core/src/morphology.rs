//! Binary erosion and dilation on voxel masks.
//!
//! Reads outside the grid resolve to background, so erosion shrinks foreground
//! touching the grid boundary and dilation clips to the grid.

use crate::volume::{AnatAxis, BinaryMask};

/// Neighborhood shape of a morphological operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StructuringElement {
    /// Odd-length line of voxels along an anatomical axis.
    Line { axis: AnatAxis, length: usize },
    /// All voxel offsets o with ||o|| <= radius (Euclidean, in voxels).
    Sphere { radius: f64 },
    /// Axis-aligned box of the given half-extents.
    Box { half: [usize; 3] },
}

impl StructuringElement {
    /// Voxel offsets of the element, resolved against the mask orientation
    /// (a line along an anatomical axis becomes a line along a grid axis).
    pub fn offsets(&self, orientation: &crate::volume::Orientation) -> Vec<[i64; 3]> {
        match *self {
            StructuringElement::Line { axis, length } => {
                assert!(length >= 1 && length % 2 == 1, "line length must be odd");
                let (g, _) = orientation.grid_axis(axis);
                let h = (length / 2) as i64;
                (-h..=h)
                    .map(|d| {
                        let mut o = [0i64; 3];
                        o[g] = d;
                        o
                    })
                    .collect()
            }
            StructuringElement::Sphere { radius } => {
                assert!(radius >= 0.0);
                let r = radius.floor() as i64;
                let r2 = radius * radius;
                let mut out = Vec::new();
                for dz in -r..=r {
                    for dy in -r..=r {
                        for dx in -r..=r {
                            let d2 = (dx * dx + dy * dy + dz * dz) as f64;
                            if d2 <= r2 {
                                out.push([dx, dy, dz]);
                            }
                        }
                    }
                }
                out
            }
            StructuringElement::Box { half } => {
                let [hx, hy, hz] = half.map(|h| h as i64);
                let mut out = Vec::new();
                for dz in -hz..=hz {
                    for dy in -hy..=hy {
                        for dx in -hx..=hx {
                            out.push([dx, dy, dz]);
                        }
                    }
                }
                out
            }
        }
    }

    /// Point reflection through the origin.
    pub fn reflect(&self) -> StructuringElement {
        // all three variants are symmetric
        *self
    }
}

/// Output voxel is on iff the element translated there lies entirely in the mask.
pub fn erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let offsets = se.offsets(&mask.meta.orientation);
    apply(mask, &offsets, true)
}

/// Output voxel is on iff the element translated there intersects the mask.
pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let offsets = se.offsets(&mask.meta.orientation);
    apply(mask, &offsets, false)
}

fn apply(mask: &BinaryMask, offsets: &[[i64; 3]], all: bool) -> BinaryMask {
    let [nx, ny, nz] = mask.meta.dims;
    let mut out = BinaryMask::empty(mask.meta);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let mut hit = all;
                for o in offsets {
                    let v = mask.get_clipped(x as i64 + o[0], y as i64 + o[1], z as i64 + o[2]);
                    if all {
                        if !v {
                            hit = false;
                            break;
                        }
                    } else if v {
                        hit = true;
                        break;
                    }
                }
                if hit {
                    out.set(x, y, z, true);
                }
            }
        }
    }
    out
}
