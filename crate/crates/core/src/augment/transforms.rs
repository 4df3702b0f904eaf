use crate::components::{component_count, Connectivity};
use crate::error::{CoreError, Result};
use crate::field::{warp_labels, DisplacementField};
use crate::morphology::{dilate, erode, StructuringElement};
use crate::volume::{bounding_box, extract_mask, AnatAxis, BinaryMask, LabelVolume, TissueLabel};
use serde::{Deserialize, Serialize};

/// Which end of the anterior-posterior extent a partial agenesis removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApEnd {
    Anterior,
    Posterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Laterality {
    Left,
    Right,
    Bilateral,
}

/// A transform with all parameters resolved, ready to apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transform", rename_all = "snake_case")]
pub enum ResolvedTransform {
    CompleteAgenesis,
    PartialAgenesis { fraction: f64, end: ApEnd },
    CcThinning { iterations: u32 },
    CcThickening { radius: f64 },
    CcKink { amplitude_mm: f64, cycles: f64, phase: f64 },
    CortexThickening { radius: f64 },
    CortexThinning { radius: f64 },
    CortexSmoothing { radius: f64 },
    PosteriorFossaHypoplasia { iterations: u32 },
    Ventriculomegaly { magnitude_mm: f64, sigma_mm: f64, laterality: Laterality },
}

impl ResolvedTransform {
    pub fn apply(&self, vol: &LabelVolume) -> Result<LabelVolume> {
        match *self {
            ResolvedTransform::CompleteAgenesis => complete_agenesis(vol),
            ResolvedTransform::PartialAgenesis { fraction, end } => {
                partial_agenesis(vol, fraction, end)
            }
            ResolvedTransform::CcThinning { iterations } => cc_thinning(vol, iterations),
            ResolvedTransform::CcThickening { radius } => cc_thickening(vol, radius),
            ResolvedTransform::CcKink { amplitude_mm, cycles, phase } => {
                cc_kink(vol, amplitude_mm, cycles, phase)
            }
            ResolvedTransform::CortexThickening { radius } => cortex_thickening(vol, radius),
            ResolvedTransform::CortexThinning { radius } => cortex_thinning(vol, radius),
            ResolvedTransform::CortexSmoothing { radius } => cortex_smoothing(vol, radius),
            ResolvedTransform::PosteriorFossaHypoplasia { iterations } => {
                posterior_fossa_hypoplasia(vol, iterations)
            }
            ResolvedTransform::Ventriculomegaly { magnitude_mm, sigma_mm, laterality } => {
                ventriculomegaly(vol, magnitude_mm, sigma_mm, laterality)
            }
        }
    }

    /// Fast precondition check used by the plan runner to skip transforms
    /// whose target structure an earlier transform already removed.
    pub fn precondition_holds(&self, vol: &LabelVolume) -> bool {
        match self {
            ResolvedTransform::CompleteAgenesis
            | ResolvedTransform::PartialAgenesis { .. }
            | ResolvedTransform::CcThinning { .. }
            | ResolvedTransform::CcThickening { .. }
            | ResolvedTransform::CcKink { .. } => vol.contains_label(TissueLabel::Cc),
            ResolvedTransform::CortexThickening { .. } => vol.contains_label(TissueLabel::Gm),
            ResolvedTransform::CortexThinning { .. } => {
                vol.contains_label(TissueLabel::Gm) && vol.contains_label(TissueLabel::Csf)
            }
            ResolvedTransform::CortexSmoothing { .. } => vol.contains_label(TissueLabel::Gm),
            ResolvedTransform::PosteriorFossaHypoplasia { .. } => {
                vol.contains_label(TissueLabel::Cbm) && vol.contains_label(TissueLabel::Bsm)
            }
            ResolvedTransform::Ventriculomegaly { laterality, .. } => {
                ventricle_sides(vol, *laterality).is_ok()
            }
        }
    }
}

fn require_label(vol: &LabelVolume, label: TissueLabel) -> Result<()> {
    if vol.contains_label(label) {
        Ok(())
    } else {
        Err(CoreError::NoTargetStructure(label.name()))
    }
}

/// Every CC voxel relabeled to ventricles.
pub fn complete_agenesis(vol: &LabelVolume) -> Result<LabelVolume> {
    require_label(vol, TissueLabel::Cc)?;
    let cc = TissueLabel::Cc.code();
    let vm = TissueLabel::Vm.code();
    let mut out = vol.clone();
    for v in out.voxels.iter_mut() {
        if *v == cc {
            *v = vm;
        }
    }
    Ok(out)
}

/// Remove ceil(fraction * E) slices of the CC's anterior-posterior extent at
/// the chosen end, relabeling them to ventricles.
pub fn partial_agenesis(vol: &LabelVolume, fraction: f64, end: ApEnd) -> Result<LabelVolume> {
    require_label(vol, TissueLabel::Cc)?;
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CoreError::InvalidConfig(format!(
            "fraction must lie in (0,1), got {fraction}"
        )));
    }
    let mask = extract_mask(vol, TissueLabel::Cc);
    let bb = bounding_box(&mask)?;
    let (pa, sign) = vol.meta.orientation.grid_axis(AnatAxis::PosteriorAnterior);
    let extent = bb.extent(pa);
    let k = ((fraction * extent as f64).ceil() as usize).clamp(1, extent);
    // anterior = largest grid index when the axis runs posterior->anterior
    let remove_high_end = matches!(
        (end, sign),
        (ApEnd::Anterior, 1) | (ApEnd::Posterior, -1)
    );
    let range = if remove_high_end {
        bb.max[pa] + 1 - k..=bb.max[pa]
    } else {
        bb.min[pa]..=bb.min[pa] + k - 1
    };
    let cc = TissueLabel::Cc.code();
    let vm = TissueLabel::Vm.code();
    let mut out = vol.clone();
    let [nx, ny, nz] = vol.meta.dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = vol.meta.index(x, y, z);
                if out.voxels[i] == cc && range.contains(&[x, y, z][pa]) {
                    out.voxels[i] = vm;
                }
            }
        }
    }
    Ok(out)
}

/// Erode the CC with a 3-voxel inferior-superior line `iterations` times;
/// vacated voxels become WM. The last non-empty erosion is kept, so thinning
/// never degenerates into full agenesis.
pub fn cc_thinning(vol: &LabelVolume, iterations: u32) -> Result<LabelVolume> {
    require_label(vol, TissueLabel::Cc)?;
    let se = StructuringElement::Line {
        axis: AnatAxis::InferiorSuperior,
        length: 3,
    };
    let mut mask = extract_mask(vol, TissueLabel::Cc);
    for _ in 0..iterations {
        let next = erode(&mask, &se);
        if next.is_empty() {
            break;
        }
        mask = next;
    }
    let cc = TissueLabel::Cc.code();
    let wm = TissueLabel::Wm.code();
    let mut out = vol.clone();
    for (i, v) in out.voxels.iter_mut().enumerate() {
        if *v == cc && mask.voxels[i] == 0 {
            *v = wm;
        }
    }
    Ok(out)
}

/// Dilate the CC with a spherical kernel; growth is constrained to voxels
/// that previously were WM.
pub fn cc_thickening(vol: &LabelVolume, radius: f64) -> Result<LabelVolume> {
    grow_into(vol, TissueLabel::Cc, TissueLabel::Wm, radius)
}

/// Dilate cortical GM constrained to the gray-white boundary.
pub fn cortex_thickening(vol: &LabelVolume, radius: f64) -> Result<LabelVolume> {
    grow_into(vol, TissueLabel::Gm, TissueLabel::Wm, radius)
}

/// Expand CSF into cortical GM (cortical thinning).
pub fn cortex_thinning(vol: &LabelVolume, radius: f64) -> Result<LabelVolume> {
    require_label(vol, TissueLabel::Gm)?;
    grow_into(vol, TissueLabel::Csf, TissueLabel::Gm, radius)
}

fn grow_into(
    vol: &LabelVolume,
    grown: TissueLabel,
    substrate: TissueLabel,
    radius: f64,
) -> Result<LabelVolume> {
    require_label(vol, grown)?;
    if radius <= 0.0 {
        return Ok(vol.clone());
    }
    let mask = extract_mask(vol, grown);
    let dilated = dilate(&mask, &StructuringElement::Sphere { radius });
    let sub = substrate.code();
    let code = grown.code();
    let mut out = vol.clone();
    for (i, v) in out.voxels.iter_mut().enumerate() {
        if dilated.voxels[i] != 0 && mask.voxels[i] == 0 && *v == sub {
            *v = code;
        }
    }
    Ok(out)
}

/// Morphological closing of GM+WM; voxels the closing adds that previously
/// were CSF become GM (reduces sulcal folding).
pub fn cortex_smoothing(vol: &LabelVolume, radius: f64) -> Result<LabelVolume> {
    require_label(vol, TissueLabel::Gm)?;
    if radius <= 0.0 {
        return Ok(vol.clone());
    }
    let gm = TissueLabel::Gm.code();
    let wm = TissueLabel::Wm.code();
    let csf = TissueLabel::Csf.code();
    let mut mask = BinaryMask::empty(vol.meta);
    for (i, &v) in vol.voxels.iter().enumerate() {
        mask.voxels[i] = (v == gm || v == wm) as u8;
    }
    let se = StructuringElement::Sphere { radius };
    let closed = erode(&dilate(&mask, &se), &se);
    let mut out = vol.clone();
    for (i, v) in out.voxels.iter_mut().enumerate() {
        if closed.voxels[i] != 0 && mask.voxels[i] == 0 && *v == csf {
            *v = gm;
        }
    }
    Ok(out)
}

/// Joint erosion of cerebellum and brainstem; each iteration is rolled back
/// per structure if it would split the structure or break its adjacency to
/// the other. Vacated voxels become CSF.
pub fn posterior_fossa_hypoplasia(vol: &LabelVolume, iterations: u32) -> Result<LabelVolume> {
    require_label(vol, TissueLabel::Cbm)?;
    require_label(vol, TissueLabel::Bsm)?;
    let se = StructuringElement::Sphere { radius: 1.0 };
    let mut cbm = extract_mask(vol, TissueLabel::Cbm);
    let mut bsm = extract_mask(vol, TissueLabel::Bsm);
    for _ in 0..iterations {
        let cbm_next = erode(&cbm, &se);
        let bsm_next = erode(&bsm, &se);
        let cbm_ok = !cbm_next.is_empty()
            && component_count(&cbm_next, Connectivity::Corner26) == 1
            && touches(&cbm_next, &bsm);
        let bsm_ok = !bsm_next.is_empty()
            && component_count(&bsm_next, Connectivity::Corner26) == 1
            && touches(&bsm_next, &cbm);
        if cbm_ok {
            cbm = cbm_next;
        }
        if bsm_ok {
            bsm = bsm_next;
        }
        if !cbm_ok && !bsm_ok {
            break;
        }
    }
    let cbm_code = TissueLabel::Cbm.code();
    let bsm_code = TissueLabel::Bsm.code();
    let csf = TissueLabel::Csf.code();
    let mut out = vol.clone();
    for (i, v) in out.voxels.iter_mut().enumerate() {
        if (*v == cbm_code && cbm.voxels[i] == 0) || (*v == bsm_code && bsm.voxels[i] == 0) {
            *v = csf;
        }
    }
    Ok(out)
}

/// True if any voxel of `a` is 26-adjacent to (or coincides with) `b`.
fn touches(a: &BinaryMask, b: &BinaryMask) -> bool {
    let [nx, ny, nz] = a.meta.dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if !a.get(x, y, z) {
                    continue;
                }
                for dz in -1i64..=1 {
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            if b.get_clipped(x as i64 + dx, y as i64 + dy, z as i64 + dz) {
                                return true;
                            }
                        }
                    }
                }
            }
        }
    }
    false
}

/// Sinusoidal vertical deformation confined to the CC's (margin-dilated)
/// bounding box, with a raised-cosine taper to zero at the margin so the
/// field stays continuous.
pub fn cc_kink(vol: &LabelVolume, amplitude_mm: f64, cycles: f64, phase: f64) -> Result<LabelVolume> {
    require_label(vol, TissueLabel::Cc)?;
    if amplitude_mm == 0.0 {
        return Ok(vol.clone());
    }
    if !(cycles > 0.0) {
        return Err(CoreError::InvalidConfig("cycles must be > 0".into()));
    }
    let field = kink_field(vol, amplitude_mm, cycles, phase)?;
    warp_labels(vol, &field)
}

/// The displacement field `cc_kink` applies; exposed for field-continuity checks.
pub fn kink_field(
    vol: &LabelVolume,
    amplitude_mm: f64,
    cycles: f64,
    phase: f64,
) -> Result<DisplacementField> {
    let mask = extract_mask(vol, TissueLabel::Cc);
    let bb = bounding_box(&mask)?;
    let meta = vol.meta;
    let (pa, _) = meta.orientation.grid_axis(AnatAxis::PosteriorAnterior);
    let (is, _) = meta.orientation.grid_axis(AnatAxis::InferiorSuperior);
    let margins: [i64; 3] = std::array::from_fn(|a| {
        (amplitude_mm / meta.spacing[a]).ceil() as i64 + 2
    });
    let extent = bb.extent(pa) as f64;
    let omega = 2.0 * std::f64::consts::PI * cycles / extent;
    let mut field = DisplacementField::zero(meta);
    let [nx, ny, nz] = meta.dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let p = [x as i64, y as i64, z as i64];
                let mut taper = 1.0;
                for a in 0..3 {
                    let below = bb.min[a] as i64 - p[a];
                    let above = p[a] - bb.max[a] as i64;
                    let outside = below.max(above);
                    if outside > 0 {
                        if outside >= margins[a] {
                            taper = 0.0;
                            break;
                        }
                        // raised cosine from 1 at the box face to 0 at the margin edge
                        taper *= 0.5
                            * (1.0
                                + (std::f64::consts::PI * outside as f64 / margins[a] as f64)
                                    .cos());
                    }
                }
                if taper == 0.0 {
                    continue;
                }
                let dy = (p[pa] - bb.min[pa] as i64) as f64;
                let mag = amplitude_mm * (omega * dy + phase).sin();
                let mut u = [0.0; 3];
                u[is] = mag * taper;
                field.set(x, y, z, u);
            }
        }
    }
    Ok(field)
}

/// Per-side ventricle voxel index lists for the requested laterality.
fn ventricle_sides(vol: &LabelVolume, laterality: Laterality) -> Result<Vec<Vec<usize>>> {
    let brain = nonbackground_mask(vol);
    let bb = bounding_box(&brain).map_err(|_| CoreError::NoTargetStructure("brain"))?;
    let (lr, sign) = vol.meta.orientation.grid_axis(AnatAxis::LeftRight);
    let mid = (bb.min[lr] + bb.max[lr]) as f64 / 2.0;
    let vm = TissueLabel::Vm.code();
    let mut left = Vec::new();
    let mut right = Vec::new();
    let [nx, ny, nz] = vol.meta.dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if vol.get(x, y, z) != vm {
                    continue;
                }
                let c = [x, y, z][lr] as f64;
                // positive axis direction points rightward when sign = +1
                let is_right = if sign > 0 { c > mid } else { c < mid };
                let i = vol.meta.index(x, y, z);
                if is_right {
                    right.push(i);
                } else {
                    left.push(i);
                }
            }
        }
    }
    let selected: Vec<Vec<usize>> = match laterality {
        Laterality::Left => vec![left],
        Laterality::Right => vec![right],
        Laterality::Bilateral => vec![left, right],
    };
    if selected.iter().any(|s| s.is_empty()) {
        return Err(CoreError::NoTargetStructure("VM"));
    }
    Ok(selected)
}

fn nonbackground_mask(vol: &LabelVolume) -> BinaryMask {
    BinaryMask {
        meta: vol.meta,
        voxels: vol.voxels.iter().map(|&v| (v != 0) as u8).collect(),
    }
}

/// Localized radial expansion of the ventricles around the per-side VM
/// centroid: output voxels sample from nearer the centroid, so the ventricle
/// grows. The field vanishes beyond 4 sigma of each centroid.
pub fn ventriculomegaly(
    vol: &LabelVolume,
    magnitude_mm: f64,
    sigma_mm: f64,
    laterality: Laterality,
) -> Result<LabelVolume> {
    let sides = ventricle_sides(vol, laterality)?;
    if magnitude_mm == 0.0 {
        return Ok(vol.clone());
    }
    if !(sigma_mm > 0.0) {
        return Err(CoreError::InvalidConfig("sigma must be > 0".into()));
    }
    let meta = vol.meta;
    let mut field = DisplacementField::zero(meta);
    for side in &sides {
        let mut c = [0.0f64; 3];
        for &i in side {
            let (x, y, z) = meta.coords(i);
            let p = meta.position_mm(x, y, z);
            for a in 0..3 {
                c[a] += p[a];
            }
        }
        for a in 0..3 {
            c[a] /= side.len() as f64;
        }
        let cutoff = 4.0 * sigma_mm;
        let [nx, ny, nz] = meta.dims;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let p = meta.position_mm(x, y, z);
                    let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
                    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                    if r > cutoff {
                        continue;
                    }
                    let g = magnitude_mm * (-r * r / (2.0 * sigma_mm * sigma_mm)).exp();
                    let scale = g / r.max(1e-9);
                    let i = meta.index(x, y, z);
                    for a in 0..3 {
                        field.vectors[i][a] += scale * d[a];
                    }
                }
            }
        }
    }
    warp_labels(vol, &field)
}
