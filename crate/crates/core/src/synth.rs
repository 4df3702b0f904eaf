//! Domain-randomized intensity synthesis from label volumes.
//!
//! Each sample draws per-class Gaussian intensity parameters, a multiplicative
//! smooth bias field, a simulated acquisition resolution, additive noise and a
//! gamma exponent, all from tagged substreams of one seed, so synthesized
//! appearance is reproducible and independent of scheduling. Labels are never
//! modified; the result is an intensity volume rescaled to [0, 1].

use crate::error::{CoreError, Result};
use crate::noise::{smooth_noise, trilinear};
use crate::rng::substream;
use crate::volume::{GridMeta, IntensityVolume, LabelVolume};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

const CLASS_STREAM_BASE: u64 = 0x100;
const VOXEL_STREAM: u64 = 0x200;
const BIAS_STREAM: u64 = 0x201;
const RESOLUTION_STREAM: u64 = 0x202;
const NOISE_STREAM: u64 = 0x203;
const GAMMA_STREAM: u64 = 0x204;

/// Uniform sampling ranges for one class's Gaussian intensity model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassRange {
    pub mean: [f64; 2],
    pub std: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// One entry per label code 0..=8.
    pub classes: Vec<ClassRange>,
    /// Range of the bias field's peak log-magnitude; 0 disables the bias.
    pub bias_amplitude: [f64; 2],
    /// Characteristic length of the bias field, in mm.
    pub bias_scale_mm: f64,
    /// Simulated acquisition spacing as a multiple of the native spacing;
    /// 1 leaves the volume at native resolution.
    pub resolution_ratio: [f64; 2],
    /// Additive Gaussian noise standard deviation, on the class-mean scale.
    pub noise_std: [f64; 2],
    /// Gamma exponent applied after rescaling to [0, 1].
    pub gamma: [f64; 2],
}

impl Default for SynthConfig {
    fn default() -> Self {
        let tissue = ClassRange {
            mean: [25.0, 225.0],
            std: [1.0, 20.0],
        };
        let mut classes = vec![tissue; 9];
        classes[0] = ClassRange {
            mean: [0.0, 30.0],
            std: [0.0, 5.0],
        };
        SynthConfig {
            classes,
            bias_amplitude: [0.0, 0.4],
            bias_scale_mm: 25.0,
            resolution_ratio: [1.0, 4.0],
            noise_std: [1.0, 10.0],
            gamma: [0.7, 1.4],
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes.len() != 9 {
            return Err(CoreError::InvalidConfig(format!(
                "need 9 class ranges (codes 0..=8), got {}",
                self.classes.len()
            )));
        }
        for (c, r) in self.classes.iter().enumerate() {
            if r.mean[0] > r.mean[1] || r.std[0] > r.std[1] || r.std[0] < 0.0 {
                return Err(CoreError::InvalidConfig(format!(
                    "class {c}: bad mean/std ranges {r:?}"
                )));
            }
        }
        for (name, r, lo) in [
            ("bias_amplitude", self.bias_amplitude, 0.0),
            ("resolution_ratio", self.resolution_ratio, 1.0),
            ("noise_std", self.noise_std, 0.0),
            ("gamma", self.gamma, f64::MIN_POSITIVE),
        ] {
            if r[0] > r[1] || r[0] < lo {
                return Err(CoreError::InvalidConfig(format!("bad {name} range {r:?}")));
            }
        }
        if !(self.bias_scale_mm > 0.0) {
            return Err(CoreError::InvalidConfig("bias_scale_mm must be > 0".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<SynthConfig> {
        let cfg: SynthConfig = serde_json::from_str(text)
            .map_err(|e| CoreError::InvalidConfig(format!("synthesis config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// All random draws made for one synthesized sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthDraw {
    pub means: [f64; 9],
    pub stds: [f64; 9],
    pub bias_amplitude: f64,
    pub resolution_ratio: f64,
    pub noise_std: f64,
    pub gamma: f64,
}

fn uniform_in(rng: &mut impl Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.gen_range(range[0]..range[1])
    }
}

/// Per-class Gaussian parameters, each class from its own substream so one
/// class's draw never shifts another's.
pub fn sample_class_params(config: &SynthConfig, seed: u64) -> ([f64; 9], [f64; 9]) {
    let mut means = [0.0; 9];
    let mut stds = [0.0; 9];
    for c in 0..9 {
        let mut rng = substream(seed, CLASS_STREAM_BASE + c as u64);
        means[c] = uniform_in(&mut rng, config.classes[c].mean);
        stds[c] = uniform_in(&mut rng, config.classes[c].std);
    }
    (means, stds)
}

/// Voxelwise Gaussian mixture draw conditioned on the label map.
pub fn sample_intensities(
    labels: &LabelVolume,
    means: &[f64; 9],
    stds: &[f64; 9],
    seed: u64,
) -> IntensityVolume {
    let mut rng = substream(seed, VOXEL_STREAM);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let voxels = labels
        .voxels
        .iter()
        .map(|&l| {
            let c = l as usize;
            (means[c] + stds[c] * unit.sample(&mut rng)) as f32
        })
        .collect();
    IntensityVolume {
        meta: labels.meta,
        voxels,
    }
}

/// Multiplicative bias field exp(B) where B is smooth noise rescaled so
/// max |B| equals `amplitude`. Zero amplitude yields an all-ones field.
pub fn bias_field(meta: &GridMeta, amplitude: f64, scale_mm: f64, seed: u64) -> Vec<f64> {
    if amplitude == 0.0 {
        return vec![1.0; meta.voxel_count()];
    }
    let mut field = smooth_noise(meta, scale_mm, seed, BIAS_STREAM);
    let peak = field.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let scale = if peak > 0.0 { amplitude / peak } else { 0.0 };
    for v in field.iter_mut() {
        *v = (*v * scale).exp();
    }
    field
}

/// Separable Gaussian blur with per-axis sigma in voxels; sigma 0 skips an axis.
pub fn gaussian_blur(img: &IntensityVolume, sigma_vox: [f64; 3]) -> IntensityVolume {
    let mut out = img.clone();
    let dims = img.meta.dims;
    for axis in 0..3 {
        let sigma = sigma_vox[axis];
        if sigma <= 0.0 {
            continue;
        }
        let radius = (3.0 * sigma).ceil() as i64;
        let kernel: Vec<f64> = (-radius..=radius)
            .map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp())
            .collect();
        let norm: f64 = kernel.iter().sum();
        let prev = out.voxels.clone();
        let [nx, ny, nz] = dims;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let p = [x as i64, y as i64, z as i64];
                    let mut acc = 0.0;
                    for (ki, w) in kernel.iter().enumerate() {
                        let mut q = p;
                        // clamp at the boundary (replicate padding)
                        q[axis] = (p[axis] + ki as i64 - radius).clamp(0, dims[axis] as i64 - 1);
                        acc += w * prev
                            [img.meta.index(q[0] as usize, q[1] as usize, q[2] as usize)]
                            as f64;
                    }
                    out.voxels[img.meta.index(x, y, z)] = (acc / norm) as f32;
                }
            }
        }
    }
    out
}

/// Simulate acquisition at `ratio` times the native spacing: Gaussian blur
/// matched to the downsampling factor, trilinear decimation to the coarse
/// grid, trilinear upsampling back. Ratio 1 is exactly the identity.
pub fn degrade_resolution(img: &IntensityVolume, ratio: f64) -> Result<IntensityVolume> {
    if !(ratio >= 1.0) {
        return Err(CoreError::InvalidConfig(format!(
            "resolution ratio must be >= 1, got {ratio}"
        )));
    }
    if ratio == 1.0 {
        return Ok(img.clone());
    }
    let sigma = 0.5 * (ratio * ratio - 1.0).sqrt();
    let blurred = gaussian_blur(img, [sigma; 3]);
    let dims = img.meta.dims;
    let coarse_dims: [usize; 3] =
        std::array::from_fn(|a| ((dims[a] as f64 / ratio).ceil() as usize).max(2));
    let fine: Vec<f64> = blurred.voxels.iter().map(|&v| v as f64).collect();
    let mut coarse = vec![0.0f64; coarse_dims.iter().product()];
    for cz in 0..coarse_dims[2] {
        for cy in 0..coarse_dims[1] {
            for cx in 0..coarse_dims[0] {
                let pos = [cx as f64 * ratio, cy as f64 * ratio, cz as f64 * ratio];
                coarse[cx + coarse_dims[0] * (cy + coarse_dims[1] * cz)] =
                    trilinear(&fine, dims, pos);
            }
        }
    }
    let mut out = img.clone();
    let [nx, ny, nz] = dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let pos = [x as f64 / ratio, y as f64 / ratio, z as f64 / ratio];
                out.voxels[img.meta.index(x, y, z)] =
                    trilinear(&coarse, coarse_dims, pos) as f32;
            }
        }
    }
    Ok(out)
}

fn rescale_unit(voxels: &mut [f32]) {
    let (mut lo, mut hi) = (f32::INFINITY, f32::NEG_INFINITY);
    for &v in voxels.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let span = hi - lo;
    if span > 0.0 {
        for v in voxels.iter_mut() {
            *v = (*v - lo) / span;
        }
    } else {
        for v in voxels.iter_mut() {
            *v = 0.0;
        }
    }
}

/// Full synthesis chain: mixture draw, bias, resolution degradation, noise,
/// gamma, final rescale to [0, 1]. Returns the image and the parameter draws.
pub fn synthesize(
    labels: &LabelVolume,
    config: &SynthConfig,
    seed: u64,
) -> Result<(IntensityVolume, SynthDraw)> {
    config.validate()?;
    let (means, stds) = sample_class_params(config, seed);
    let mut img = sample_intensities(labels, &means, &stds, seed);

    let bias_amplitude = uniform_in(&mut substream(seed, BIAS_STREAM), config.bias_amplitude);
    let bias = bias_field(&labels.meta, bias_amplitude, config.bias_scale_mm, seed);
    for (v, b) in img.voxels.iter_mut().zip(&bias) {
        *v = (*v as f64 * b) as f32;
    }

    let resolution_ratio = uniform_in(
        &mut substream(seed, RESOLUTION_STREAM),
        config.resolution_ratio,
    );
    img = degrade_resolution(&img, resolution_ratio)?;

    let mut noise_rng = substream(seed, NOISE_STREAM);
    let noise_std = uniform_in(&mut noise_rng, config.noise_std);
    if noise_std > 0.0 {
        let dist = Normal::new(0.0, noise_std).unwrap();
        for v in img.voxels.iter_mut() {
            *v += dist.sample(&mut noise_rng) as f32;
        }
    }

    rescale_unit(&mut img.voxels);
    let gamma = uniform_in(&mut substream(seed, GAMMA_STREAM), config.gamma);
    if gamma != 1.0 {
        for v in img.voxels.iter_mut() {
            *v = v.powf(gamma as f32);
        }
    }
    rescale_unit(&mut img.voxels);

    Ok((
        img,
        SynthDraw {
            means,
            stds,
            bias_amplitude,
            resolution_ratio,
            noise_std,
            gamma,
        },
    ))
}
