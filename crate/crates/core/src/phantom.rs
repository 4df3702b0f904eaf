//! Procedural label-volume phantom: a stylized fetal head with all eight
//! tissue classes, used as a deterministic stand-in for real segmentations
//! in tests and end-to-end runs.
//!
//! The geometry is a nested set of ellipsoids (CSF shell, cortical ribbon,
//! WM bulk), paired ventricles and deep gray nuclei, touching cerebellum and
//! brainstem, and a midsagittal half-annulus arch for the corpus callosum.
//! Scales are fractions of the grid so the same spec works at any resolution.

use crate::components::{component_count, Connectivity};
use crate::error::{CoreError, Result};
use crate::morphology::{dilate, StructuringElement};
use crate::noise::smooth_noise;
use crate::topology::betti_numbers;
use crate::volume::{extract_mask, GridMeta, LabelVolume, Orientation, TissueLabel};
use serde::{Deserialize, Serialize};

const HEAD_NOISE_TAG: u64 = 1;
const BRAIN_NOISE_TAG: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub seed: u64,
    /// Fractional radial perturbation of the head and brain surfaces.
    pub surface_noise_amplitude: f64,
    /// Characteristic length of the surface perturbation, in mm.
    pub surface_noise_scale_mm: f64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            dims: [256; 3],
            spacing: [0.5; 3],
            seed: 20_240_501,
            surface_noise_amplitude: 0.02,
            surface_noise_scale_mm: 10.0,
        }
    }
}

/// Center and semi-axes in fractional grid coordinates.
struct Ellipsoid {
    center: [f64; 3],
    semi: [f64; 3],
}

impl Ellipsoid {
    /// Normalized squared radius: <= 1 inside.
    fn q(&self, p: [f64; 3]) -> f64 {
        (0..3)
            .map(|a| ((p[a] - self.center[a]) / self.semi[a]).powi(2))
            .sum()
    }
}

impl PhantomSpec {
    /// Small fast phantom for unit tests: 64^3 at 1 mm, no surface noise.
    pub fn compact() -> PhantomSpec {
        PhantomSpec {
            dims: [64; 3],
            spacing: [1.0; 3],
            seed: 11,
            surface_noise_amplitude: 0.0,
            surface_noise_scale_mm: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d < 32) {
            return Err(CoreError::InfeasibleSpec(format!(
                "dims {:?} too small, need >= 32 per axis",
                self.dims
            )));
        }
        if self.spacing.iter().any(|&s| !(s > 0.0)) {
            return Err(CoreError::InfeasibleSpec("spacing must be > 0".into()));
        }
        if !(0.0..0.2).contains(&self.surface_noise_amplitude) {
            return Err(CoreError::InfeasibleSpec(
                "surface_noise_amplitude must lie in [0, 0.2)".into(),
            ));
        }
        if !(self.surface_noise_scale_mm > 0.0) {
            return Err(CoreError::InfeasibleSpec(
                "surface_noise_scale_mm must be > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<PhantomSpec> {
        let spec: PhantomSpec = serde_json::from_str(text)
            .map_err(|e| CoreError::InvalidConfig(format!("phantom spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Build the phantom and verify its structural invariants: every tissue
    /// present, CC/CBM/BSM single 26-connected components, CC topologically a
    /// solid arch (Betti 1,0,0), CBM adjacent to BSM, ventricles on both
    /// sides of the midline.
    pub fn generate(&self) -> Result<LabelVolume> {
        self.validate()?;
        let meta = GridMeta::new(self.dims, self.spacing, Orientation::RAS)?;
        let vol = self.paint(&meta);
        check_invariants(&vol)?;
        Ok(vol)
    }

    fn paint(&self, meta: &GridMeta) -> LabelVolume {
        // grid axes are RAS: 0 = left-right, 1 = posterior-anterior,
        // 2 = inferior-superior
        let head = Ellipsoid {
            center: [0.5, 0.5, 0.5],
            semi: [0.40, 0.44, 0.38],
        };
        let brain = Ellipsoid {
            center: [0.5, 0.5, 0.5],
            semi: [0.345, 0.375, 0.315],
        };
        let wm = Ellipsoid {
            center: [0.5, 0.5, 0.5],
            semi: [0.28, 0.31, 0.25],
        };
        let vm_l = Ellipsoid {
            center: [0.375, 0.5, 0.5],
            semi: [0.0625, 0.094, 0.0625],
        };
        let vm_r = Ellipsoid {
            center: [0.625, 0.5, 0.5],
            semi: [0.0625, 0.094, 0.0625],
        };
        let sgm_l = Ellipsoid {
            center: [0.28, 0.47, 0.47],
            semi: [0.047, 0.0625, 0.047],
        };
        let sgm_r = Ellipsoid {
            center: [0.72, 0.47, 0.47],
            semi: [0.047, 0.0625, 0.047],
        };
        let cbm = Ellipsoid {
            center: [0.5, 0.28, 0.31],
            semi: [0.125, 0.078, 0.078],
        };
        let bsm = Ellipsoid {
            center: [0.5, 0.41, 0.25],
            semi: [0.0625, 0.0625, 0.11],
        };
        // CC arch: midsagittal slab, half annulus in the sagittal plane
        let cc_half_width = (0.035 * self.dims[0] as f64).max(1.0);
        let cc_center = [0.5 * self.dims[1] as f64, 0.5625 * self.dims[2] as f64];
        let cc_r = 0.5 * (self.dims[1] + self.dims[2]) as f64;
        let (cc_r_in, cc_r_out) = (0.094 * cc_r, 0.14 * cc_r);

        let noisy = self.surface_noise_amplitude > 0.0;
        let head_noise = if noisy {
            smooth_noise(meta, self.surface_noise_scale_mm, self.seed, HEAD_NOISE_TAG)
        } else {
            Vec::new()
        };
        let brain_noise = if noisy {
            smooth_noise(meta, self.surface_noise_scale_mm, self.seed, BRAIN_NOISE_TAG)
        } else {
            Vec::new()
        };

        let mut vol = LabelVolume::filled(*meta, TissueLabel::Background);
        let [nx, ny, nz] = meta.dims;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let i = meta.index(x, y, z);
                    let p = [
                        x as f64 / nx as f64,
                        y as f64 / ny as f64,
                        z as f64 / nz as f64,
                    ];
                    // perturbed boundary: inside when q <= (1 + amp*g)^2
                    let head_bound = if noisy {
                        (1.0 + self.surface_noise_amplitude * head_noise[i]).powi(2)
                    } else {
                        1.0
                    };
                    let brain_bound = if noisy {
                        (1.0 + self.surface_noise_amplitude * brain_noise[i]).powi(2)
                    } else {
                        1.0
                    };
                    if head.q(p) > head_bound {
                        continue;
                    }
                    let mut label = TissueLabel::Csf;
                    if brain.q(p) <= brain_bound {
                        label = TissueLabel::Gm;
                    }
                    if wm.q(p) <= 1.0 {
                        label = TissueLabel::Wm;
                    }
                    if bsm.q(p) <= 1.0 {
                        label = TissueLabel::Bsm;
                    }
                    if cbm.q(p) <= 1.0 {
                        label = TissueLabel::Cbm;
                    }
                    if vm_l.q(p) <= 1.0 || vm_r.q(p) <= 1.0 {
                        label = TissueLabel::Vm;
                    }
                    if sgm_l.q(p) <= 1.0 || sgm_r.q(p) <= 1.0 {
                        label = TissueLabel::Sgm;
                    }
                    if label == TissueLabel::Wm {
                        let dx = (x as f64 - 0.5 * nx as f64).abs();
                        let dy = y as f64 - cc_center[0];
                        let dz = z as f64 - cc_center[1];
                        let r = (dy * dy + dz * dz).sqrt();
                        if dx <= cc_half_width && dz >= 0.0 && (cc_r_in..=cc_r_out).contains(&r) {
                            label = TissueLabel::Cc;
                        }
                    }
                    vol.voxels[i] = label.code();
                }
            }
        }
        vol
    }
}

fn check_invariants(vol: &LabelVolume) -> Result<()> {
    for label in TissueLabel::TISSUES {
        if !vol.contains_label(label) {
            return Err(CoreError::InfeasibleSpec(format!(
                "{} absent from generated phantom",
                label.name()
            )));
        }
    }
    for label in [TissueLabel::Cc, TissueLabel::Cbm, TissueLabel::Bsm] {
        let mask = extract_mask(vol, label);
        let n = component_count(&mask, Connectivity::Corner26);
        if n != 1 {
            return Err(CoreError::InfeasibleSpec(format!(
                "{} has {n} components, expected 1",
                label.name()
            )));
        }
    }
    let cc = extract_mask(vol, TissueLabel::Cc);
    let b = betti_numbers(&cc)?;
    if (b.b0, b.b1, b.b2) != (1, 0, 0) {
        return Err(CoreError::InfeasibleSpec(format!(
            "CC Betti numbers ({}, {}, {}), expected (1, 0, 0)",
            b.b0, b.b1, b.b2
        )));
    }
    let cbm = extract_mask(vol, TissueLabel::Cbm);
    let bsm = extract_mask(vol, TissueLabel::Bsm);
    let near_bsm = dilate(&bsm, &StructuringElement::Box { half: [1, 1, 1] });
    if !cbm.voxels.iter().zip(&near_bsm.voxels).any(|(&a, &b)| a != 0 && b != 0) {
        return Err(CoreError::InfeasibleSpec("CBM not adjacent to BSM".into()));
    }
    // ventricles straddle the midline
    let vm = extract_mask(vol, TissueLabel::Vm);
    let mid = vol.meta.dims[0] / 2;
    let (mut left, mut right) = (false, false);
    for z in 0..vol.meta.dims[2] {
        for y in 0..vol.meta.dims[1] {
            for x in 0..vol.meta.dims[0] {
                if vm.get(x, y, z) {
                    if x < mid {
                        left = true;
                    } else {
                        right = true;
                    }
                }
            }
        }
    }
    if !(left && right) {
        return Err(CoreError::InfeasibleSpec(
            "ventricles do not straddle the midline".into(),
        ));
    }
    Ok(())
}
