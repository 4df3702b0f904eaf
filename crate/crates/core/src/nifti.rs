//! NIfTI-1 single-file reader/writer (strict subset) plus a trivial raw
//! format used by tests.
//!
//! Supported: uint8 label volumes and float32 intensity volumes, axis-aligned
//! affines only, little-endian files, optional gzip (autodetected on read).

use crate::error::{CoreError, Result};
use crate::volume::{AnatAxis, GridMeta, IntensityVolume, LabelVolume, Orientation};
use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

const HEADER_SIZE: usize = 348;
const VOX_OFFSET: usize = 352;
const DT_UINT8: i16 = 2;
const DT_FLOAT32: i16 = 16;

/// Either payload a NIfTI file can hold in this pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Volume {
    Labels(LabelVolume),
    Intensity(IntensityVolume),
}

impl Volume {
    pub fn meta(&self) -> &GridMeta {
        match self {
            Volume::Labels(v) => &v.meta,
            Volume::Intensity(v) => &v.meta,
        }
    }

    pub fn into_labels(self) -> Result<LabelVolume> {
        match self {
            Volume::Labels(v) => Ok(v),
            Volume::Intensity(_) => Err(CoreError::MalformedHeader(
                "expected a label volume, found float32 data".into(),
            )),
        }
    }
}

/// u8 volume with arbitrary codes (pre-harmonization input).
#[derive(Debug, Clone, PartialEq)]
pub struct RawVolume {
    pub meta: GridMeta,
    pub voxels: Vec<u8>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    File::open(path)?.read_to_end(&mut raw)?;
    // gzip autodetect by magic
    if raw.len() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b {
        let mut out = Vec::new();
        MultiGzDecoder::new(&raw[..]).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn i16_at(b: &[u8], off: usize) -> i16 {
    i16::from_le_bytes([b[off], b[off + 1]])
}

fn i32_at(b: &[u8], off: usize) -> i32 {
    i32::from_le_bytes([b[off], b[off + 1], b[off + 2], b[off + 3]])
}

fn f32_at(b: &[u8], off: usize) -> f32 {
    f32::from_le_bytes([b[off], b[off + 1], b[off + 2], b[off + 3]])
}

/// Reduce an RAS direction matrix (columns = grid axes, rows = R/A/S) to a
/// permutation with signs; rejects oblique matrices.
fn orientation_from_affine(cols: &[[f64; 3]; 3]) -> Result<(Orientation, [f64; 3])> {
    let mut axes = [AnatAxis::LeftRight; 3];
    let mut signs = [0i8; 3];
    let mut spacing = [0.0f64; 3];
    for g in 0..3 {
        let c = cols[g];
        let norm = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        if !(norm > 0.0) {
            return Err(CoreError::MalformedHeader("zero affine column".into()));
        }
        let (mut best, mut best_abs) = (0usize, 0.0f64);
        for r in 0..3 {
            if c[r].abs() > best_abs {
                best_abs = c[r].abs();
                best = r;
            }
        }
        for r in 0..3 {
            if r != best && c[r].abs() > 1e-3 * norm {
                return Err(CoreError::ObliqueAffine);
            }
        }
        axes[g] = match best {
            0 => AnatAxis::LeftRight,
            1 => AnatAxis::PosteriorAnterior,
            _ => AnatAxis::InferiorSuperior,
        };
        signs[g] = if c[best] > 0.0 { 1 } else { -1 };
        spacing[g] = norm;
    }
    let o = Orientation { axes, signs };
    o.validate()
        .map_err(|_| CoreError::ObliqueAffine)?;
    Ok((o, spacing))
}

struct ParsedHeader {
    dims: [usize; 3],
    spacing: [f64; 3],
    orientation: Orientation,
    datatype: i16,
    vox_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<ParsedHeader> {
    if bytes.len() < VOX_OFFSET {
        return Err(CoreError::MalformedHeader(format!(
            "file too short ({} bytes)",
            bytes.len()
        )));
    }
    if &bytes[344..348] != b"n+1\0" {
        return Err(CoreError::MalformedHeader("bad magic".into()));
    }
    if i32_at(bytes, 0) != HEADER_SIZE as i32 {
        return Err(CoreError::MalformedHeader(
            "sizeof_hdr != 348 (big-endian files unsupported)".into(),
        ));
    }
    let ndim = i16_at(bytes, 40);
    if !(1..=7).contains(&ndim) {
        return Err(CoreError::MalformedHeader(format!("dim[0] = {ndim}")));
    }
    let mut dims = [1usize; 3];
    for a in 0..3 {
        let d = i16_at(bytes, 42 + 2 * a);
        if a < ndim as usize {
            if d < 1 {
                return Err(CoreError::MalformedHeader(format!("dim[{}] = {d}", a + 1)));
            }
            dims[a] = d as usize;
        }
    }
    // trailing dims must be singleton
    for a in 3..ndim as usize {
        if i16_at(bytes, 42 + 2 * a) > 1 {
            return Err(CoreError::MalformedHeader("4D+ volumes unsupported".into()));
        }
    }
    let datatype = i16_at(bytes, 70);
    if datatype != DT_UINT8 && datatype != DT_FLOAT32 {
        return Err(CoreError::UnsupportedDatatype(datatype));
    }
    let pixdim: [f64; 3] = std::array::from_fn(|a| f32_at(bytes, 76 + 4 * (a + 1)) as f64);
    let sform_code = i16_at(bytes, 254);
    let qform_code = i16_at(bytes, 252);
    let (orientation, spacing) = if sform_code > 0 {
        let mut cols = [[0.0f64; 3]; 3];
        for r in 0..3 {
            for g in 0..3 {
                cols[g][r] = f32_at(bytes, 280 + 16 * r + 4 * g) as f64;
            }
        }
        orientation_from_affine(&cols)?
    } else if qform_code > 0 {
        let qb = f32_at(bytes, 256) as f64;
        let qc = f32_at(bytes, 260) as f64;
        let qd = f32_at(bytes, 264) as f64;
        let qa = (1.0 - qb * qb - qc * qc - qd * qd).max(0.0).sqrt();
        let qfac = if f32_at(bytes, 76) < 0.0 { -1.0 } else { 1.0 };
        let rot = [
            [
                qa * qa + qb * qb - qc * qc - qd * qd,
                2.0 * (qb * qc - qa * qd),
                2.0 * (qb * qd + qa * qc),
            ],
            [
                2.0 * (qb * qc + qa * qd),
                qa * qa + qc * qc - qb * qb - qd * qd,
                2.0 * (qc * qd - qa * qb),
            ],
            [
                2.0 * (qb * qd - qa * qc),
                2.0 * (qc * qd + qa * qb),
                qa * qa + qd * qd - qb * qb - qc * qc,
            ],
        ];
        let mut cols = [[0.0f64; 3]; 3];
        for r in 0..3 {
            for g in 0..3 {
                let scale = pixdim[g] * if g == 2 { qfac } else { 1.0 };
                cols[g][r] = rot[r][g] * scale;
            }
        }
        orientation_from_affine(&cols)?
    } else {
        if pixdim.iter().any(|&p| !(p > 0.0)) {
            return Err(CoreError::MalformedHeader("non-positive pixdim".into()));
        }
        (Orientation::RAS, pixdim)
    };
    let vox_offset = f32_at(bytes, 108) as usize;
    Ok(ParsedHeader {
        dims,
        spacing,
        orientation,
        datatype,
        vox_offset: vox_offset.max(VOX_OFFSET),
    })
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<Volume> {
    let bytes = read_bytes(path.as_ref())?;
    let h = parse_header(&bytes)?;
    let meta = GridMeta::new(h.dims, h.spacing, h.orientation)?;
    let n = meta.voxel_count();
    let elem = if h.datatype == DT_UINT8 { 1 } else { 4 };
    let data = bytes
        .get(h.vox_offset..h.vox_offset + n * elem)
        .ok_or_else(|| CoreError::MalformedHeader("truncated voxel data".into()))?;
    if h.datatype == DT_UINT8 {
        Ok(Volume::Labels(LabelVolume::new(meta, data.to_vec())?))
    } else {
        let voxels = data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Volume::Intensity(IntensityVolume { meta, voxels }))
    }
}

/// Read any uint8 NIfTI without the 0..=8 label-range check.
pub fn read_raw_volume(path: impl AsRef<Path>) -> Result<RawVolume> {
    let bytes = read_bytes(path.as_ref())?;
    if bytes.len() >= 4 && &bytes[0..4] == b"CMV1" {
        return parse_raw_test_format(&bytes);
    }
    let h = parse_header(&bytes)?;
    if h.datatype != DT_UINT8 {
        return Err(CoreError::UnsupportedDatatype(h.datatype));
    }
    let meta = GridMeta::new(h.dims, h.spacing, h.orientation)?;
    let n = meta.voxel_count();
    let data = bytes
        .get(h.vox_offset..h.vox_offset + n)
        .ok_or_else(|| CoreError::MalformedHeader("truncated voxel data".into()))?;
    Ok(RawVolume {
        meta,
        voxels: data.to_vec(),
    })
}

fn build_header(meta: &GridMeta, datatype: i16, bitpix: i16) -> [u8; VOX_OFFSET] {
    let mut b = [0u8; VOX_OFFSET];
    b[0..4].copy_from_slice(&(HEADER_SIZE as i32).to_le_bytes());
    b[40..42].copy_from_slice(&3i16.to_le_bytes());
    for a in 0..3 {
        b[42 + 2 * a..44 + 2 * a].copy_from_slice(&(meta.dims[a] as i16).to_le_bytes());
    }
    for a in 3..7 {
        b[42 + 2 * a..44 + 2 * a].copy_from_slice(&1i16.to_le_bytes());
    }
    b[70..72].copy_from_slice(&datatype.to_le_bytes());
    b[72..74].copy_from_slice(&bitpix.to_le_bytes());
    b[76..80].copy_from_slice(&1.0f32.to_le_bytes()); // qfac
    for a in 0..3 {
        b[80 + 4 * a..84 + 4 * a].copy_from_slice(&(meta.spacing[a] as f32).to_le_bytes());
    }
    b[108..112].copy_from_slice(&(VOX_OFFSET as f32).to_le_bytes());
    b[112..116].copy_from_slice(&1.0f32.to_le_bytes()); // scl_slope
    b[116..120].copy_from_slice(&0.0f32.to_le_bytes()); // scl_inter
    b[123] = 10; // xyzt_units: mm
    b[254..256].copy_from_slice(&1i16.to_le_bytes()); // sform_code
    for g in 0..3 {
        let (anat_row, sign) = match meta.orientation.axes[g] {
            AnatAxis::LeftRight => (0usize, meta.orientation.signs[g]),
            AnatAxis::PosteriorAnterior => (1, meta.orientation.signs[g]),
            AnatAxis::InferiorSuperior => (2, meta.orientation.signs[g]),
        };
        let val = (sign as f64 * meta.spacing[g]) as f32;
        b[280 + 16 * anat_row + 4 * g..284 + 16 * anat_row + 4 * g]
            .copy_from_slice(&val.to_le_bytes());
    }
    b[344..348].copy_from_slice(b"n+1\0");
    b
}

pub fn write_volume(vol: &Volume, path: impl AsRef<Path>, compress: bool) -> Result<()> {
    let (header, data): ([u8; VOX_OFFSET], Vec<u8>) = match vol {
        Volume::Labels(v) => (build_header(&v.meta, DT_UINT8, 8), v.voxels.clone()),
        Volume::Intensity(v) => (
            build_header(&v.meta, DT_FLOAT32, 32),
            v.voxels.iter().flat_map(|f| f.to_le_bytes()).collect(),
        ),
    };
    let file = File::create(path.as_ref())?;
    if compress {
        let mut enc = GzEncoder::new(file, Compression::default());
        enc.write_all(&header)?;
        enc.write_all(&data)?;
        enc.finish()?;
    } else {
        let mut w = std::io::BufWriter::new(file);
        w.write_all(&header)?;
        w.write_all(&data)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// raw test format: 16-byte header (magic "CMV1" + dims as 3 x u32 LE) + payload
// ---------------------------------------------------------------------------

fn parse_raw_test_format(bytes: &[u8]) -> Result<RawVolume> {
    if bytes.len() < 16 {
        return Err(CoreError::MalformedHeader("raw header too short".into()));
    }
    let dims: [usize; 3] = std::array::from_fn(|a| {
        u32::from_le_bytes([
            bytes[4 + 4 * a],
            bytes[5 + 4 * a],
            bytes[6 + 4 * a],
            bytes[7 + 4 * a],
        ]) as usize
    });
    let meta = GridMeta::new(dims, [1.0; 3], Orientation::RAS)?;
    let n = meta.voxel_count();
    let data = bytes
        .get(16..16 + n)
        .ok_or_else(|| CoreError::MalformedHeader("truncated raw payload".into()))?;
    Ok(RawVolume {
        meta,
        voxels: data.to_vec(),
    })
}

pub fn write_raw_volume(vol: &RawVolume, path: impl AsRef<Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(File::create(path.as_ref())?);
    w.write_all(b"CMV1")?;
    for a in 0..3 {
        w.write_all(&(vol.meta.dims[a] as u32).to_le_bytes())?;
    }
    w.write_all(&vol.voxels)?;
    Ok(())
}
