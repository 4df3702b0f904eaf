//! Smooth low-frequency noise: a coarse random grid upsampled by trilinear
//! interpolation. Shared by the bias-field generator and the phantom's
//! boundary perturbation.

use crate::rng::substream;
use crate::volume::GridMeta;
use rand::Rng;

/// Trilinear sample of `data` (dims `[nx,ny,nz]`, x-fastest) at a fractional
/// position clamped to the grid.
pub fn trilinear(data: &[f64], dims: [usize; 3], pos: [f64; 3]) -> f64 {
    let clamp = |p: f64, n: usize| p.max(0.0).min(n as f64 - 1.0);
    let p = [
        clamp(pos[0], dims[0]),
        clamp(pos[1], dims[1]),
        clamp(pos[2], dims[2]),
    ];
    let i0 = [p[0] as usize, p[1] as usize, p[2] as usize];
    let i1 = [
        (i0[0] + 1).min(dims[0] - 1),
        (i0[1] + 1).min(dims[1] - 1),
        (i0[2] + 1).min(dims[2] - 1),
    ];
    let f = [p[0] - i0[0] as f64, p[1] - i0[1] as f64, p[2] - i0[2] as f64];
    let at = |x: usize, y: usize, z: usize| data[x + dims[0] * (y + dims[1] * z)];
    let mut acc = 0.0;
    for (zi, wz) in [(i0[2], 1.0 - f[2]), (i1[2], f[2])] {
        for (yi, wy) in [(i0[1], 1.0 - f[1]), (i1[1], f[1])] {
            for (xi, wx) in [(i0[0], 1.0 - f[0]), (i1[0], f[0])] {
                acc += at(xi, yi, zi) * wx * wy * wz;
            }
        }
    }
    acc
}

/// Smooth scalar field over the target grid with characteristic length
/// `scale_mm`: standard-normal values on a coarse grid (one node per
/// `scale_mm`), trilinearly upsampled to the full resolution.
pub fn smooth_noise(meta: &GridMeta, scale_mm: f64, seed: u64, tag: u64) -> Vec<f64> {
    assert!(scale_mm > 0.0);
    let mut rng = substream(seed, tag);
    let coarse_dims: [usize; 3] = std::array::from_fn(|a| {
        ((meta.dims[a] as f64 * meta.spacing[a] / scale_mm).ceil() as usize + 2).max(2)
    });
    let n = coarse_dims[0] * coarse_dims[1] * coarse_dims[2];
    let coarse: Vec<f64> = (0..n)
        .map(|_| {
            // Box-Muller; two uniforms per draw keeps the stream simple
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen::<f64>();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
        .collect();
    let mut out = vec![0.0; meta.voxel_count()];
    for z in 0..meta.dims[2] {
        for y in 0..meta.dims[1] {
            for x in 0..meta.dims[0] {
                let pos = [
                    x as f64 * meta.spacing[0] / scale_mm,
                    y as f64 * meta.spacing[1] / scale_mm,
                    z as f64 * meta.spacing[2] / scale_mm,
                ];
                out[meta.index(x, y, z)] = trilinear(&coarse, coarse_dims, pos);
            }
        }
    }
    out
}
