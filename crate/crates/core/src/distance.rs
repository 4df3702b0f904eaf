//! Spacing-aware exact Euclidean distance queries between voxel sets.
//!
//! Built on the separable lower-envelope (parabola) squared distance
//! transform, generalized to physical coordinates so anisotropic spacing is
//! handled exactly.

use crate::error::{CoreError, Result};
use crate::volume::BinaryMask;

const INF: f64 = f64::INFINITY;

/// 1D squared distance transform at sample positions i*spacing.
fn dt1d(f: &[f64], spacing: f64, d: &mut [f64], v: &mut [usize], zbuf: &mut [f64]) {
    let n = f.len();
    let x = |i: usize| i as f64 * spacing;
    let mut k = 0usize;
    v[0] = 0;
    zbuf[0] = -INF;
    zbuf[1] = INF;
    for q in 1..n {
        if f[q] == INF {
            continue;
        }
        loop {
            let p = v[k];
            if f[p] == INF {
                // first finite parabola
                if k == 0 {
                    v[0] = q;
                    zbuf[0] = -INF;
                    zbuf[1] = INF;
                    break;
                }
                k -= 1;
                continue;
            }
            let s = ((f[q] + x(q) * x(q)) - (f[p] + x(p) * x(p))) / (2.0 * x(q) - 2.0 * x(p));
            if s <= zbuf[k] {
                if k == 0 {
                    v[0] = q;
                    zbuf[0] = -INF;
                    zbuf[1] = INF;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                zbuf[k] = s;
                zbuf[k + 1] = INF;
                break;
            }
        }
    }
    let mut j = 0usize;
    for q in 0..n {
        while zbuf[j + 1] < x(q) {
            j += 1;
        }
        let p = v[j];
        d[q] = if f[p] == INF {
            INF
        } else {
            let dx = x(q) - x(p);
            f[p] + dx * dx
        };
    }
}

/// Squared Euclidean distance (mm^2) from every voxel center to the nearest
/// foreground voxel center of `mask`. Infinite everywhere if the mask is empty.
pub fn squared_distance_transform(mask: &BinaryMask) -> Vec<f64> {
    let meta = &mask.meta;
    let [nx, ny, nz] = meta.dims;
    let mut g: Vec<f64> = mask
        .voxels
        .iter()
        .map(|&v| if v != 0 { 0.0 } else { INF })
        .collect();

    let nmax = nx.max(ny).max(nz);
    let mut f = vec![0.0; nmax];
    let mut d = vec![0.0; nmax];
    let mut v = vec![0usize; nmax];
    let mut zbuf = vec![0.0; nmax + 1];

    // x rows
    for z in 0..nz {
        for y in 0..ny {
            let base = meta.index(0, y, z);
            f[..nx].copy_from_slice(&g[base..base + nx]);
            dt1d(&f[..nx], meta.spacing[0], &mut d[..nx], &mut v, &mut zbuf);
            g[base..base + nx].copy_from_slice(&d[..nx]);
        }
    }
    // y columns
    for z in 0..nz {
        for x in 0..nx {
            for y in 0..ny {
                f[y] = g[meta.index(x, y, z)];
            }
            dt1d(&f[..ny], meta.spacing[1], &mut d[..ny], &mut v, &mut zbuf);
            for y in 0..ny {
                g[meta.index(x, y, z)] = d[y];
            }
        }
    }
    // z columns
    for y in 0..ny {
        for x in 0..nx {
            for z in 0..nz {
                f[z] = g[meta.index(x, y, z)];
            }
            dt1d(&f[..nz], meta.spacing[2], &mut d[..nz], &mut v, &mut zbuf);
            for z in 0..nz {
                g[meta.index(x, y, z)] = d[z];
            }
        }
    }
    g
}

/// For each foreground voxel of `a`, the minimum Euclidean distance in mm to
/// any foreground voxel of `b`, and symmetrically for `b` against `a`.
pub fn surface_distances(a: &BinaryMask, b: &BinaryMask) -> Result<(Vec<f64>, Vec<f64>)> {
    a.meta.require_same_grid(&b.meta)?;
    if a.is_empty() || b.is_empty() {
        return Err(CoreError::EmptyMask);
    }
    let dt_b = squared_distance_transform(b);
    let dt_a = squared_distance_transform(a);
    let a_to_b = a
        .voxels
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0)
        .map(|(i, _)| dt_b[i].sqrt())
        .collect();
    let b_to_a = b
        .voxels
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0)
        .map(|(i, _)| dt_a[i].sqrt())
        .collect();
    Ok((a_to_b, b_to_a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::GridMeta;
    use rand::{Rng, SeedableRng};

    fn brute_force(a: &BinaryMask, b: &BinaryMask) -> Vec<f64> {
        let s = a.meta.spacing;
        let mut bs = Vec::new();
        let [nx, ny, nz] = b.meta.dims;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    if b.get(x, y, z) {
                        bs.push([x as f64 * s[0], y as f64 * s[1], z as f64 * s[2]]);
                    }
                }
            }
        }
        let mut out = Vec::new();
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    if a.get(x, y, z) {
                        let p = [x as f64 * s[0], y as f64 * s[1], z as f64 * s[2]];
                        let dmin = bs
                            .iter()
                            .map(|q| {
                                ((p[0] - q[0]).powi(2)
                                    + (p[1] - q[1]).powi(2)
                                    + (p[2] - q[2]).powi(2))
                                .sqrt()
                            })
                            .fold(INF, f64::min);
                        out.push(dmin);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn identical_masks_zero_distances() {
        let mut m = BinaryMask::empty(GridMeta::isotropic(6, 0.5));
        m.set(1, 2, 3, true);
        m.set(4, 4, 4, true);
        let (ab, ba) = surface_distances(&m, &m).unwrap();
        assert!(ab.iter().chain(ba.iter()).all(|&d| d == 0.0));
    }

    #[test]
    fn two_voxels_four_apart() {
        let meta = GridMeta::isotropic(8, 0.5);
        let mut a = BinaryMask::empty(meta);
        let mut b = BinaryMask::empty(meta);
        a.set(1, 3, 3, true);
        b.set(5, 3, 3, true);
        let (ab, ba) = surface_distances(&a, &b).unwrap();
        assert_eq!(ab, vec![2.0]);
        assert_eq!(ba, vec![2.0]);
    }

    #[test]
    fn empty_mask_rejected() {
        let meta = GridMeta::isotropic(4, 1.0);
        let mut a = BinaryMask::empty(meta);
        a.set(0, 0, 0, true);
        let e = BinaryMask::empty(meta);
        assert!(matches!(surface_distances(&a, &e), Err(CoreError::EmptyMask)));
    }

    #[test]
    fn swap_swaps_lists() {
        let meta = GridMeta::isotropic(6, 1.0);
        let mut a = BinaryMask::empty(meta);
        let mut b = BinaryMask::empty(meta);
        a.set(0, 0, 0, true);
        a.set(1, 1, 1, true);
        b.set(5, 5, 5, true);
        let (ab, ba) = surface_distances(&a, &b).unwrap();
        let (ba2, ab2) = surface_distances(&b, &a).unwrap();
        assert_eq!(ab, ab2);
        assert_eq!(ba, ba2);
    }

    #[test]
    fn matches_brute_force_on_random_masks() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for trial in 0..10 {
            let spacing = if trial % 2 == 0 { [1.0; 3] } else { [0.5, 0.7, 1.1] };
            let meta = GridMeta::new([12, 12, 12], spacing, Default::default()).unwrap();
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                let mut m = BinaryMask::empty(meta);
                for v in m.voxels.iter_mut() {
                    *v = (rng.gen::<f64>() < 0.1) as u8;
                }
                if m.is_empty() {
                    m.set(0, 0, 0, true);
                }
                m
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let (ab, ba) = surface_distances(&a, &b).unwrap();
            let ab_o = brute_force(&a, &b);
            let ba_o = brute_force(&b, &a);
            for (got, want) in ab.iter().zip(&ab_o).chain(ba.iter().zip(&ba_o)) {
                assert!(
                    (got - want).abs() <= 1e-9 * want.max(1.0),
                    "got {got}, want {want}"
                );
            }
        }
    }
}
