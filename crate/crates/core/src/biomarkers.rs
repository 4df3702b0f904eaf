//! Corpus callosum biometrics: length, volume, deviation metrics and
//! normative growth-curve fitting.

use crate::error::{CoreError, Result};
use crate::metrics::Flagged;
use crate::volume::{AnatAxis, LabelVolume, TissueLabel};
use serde::{Deserialize, Serialize};

/// Expected CC length (mm) as a function of gestational age (weeks); either a
/// quadratic or a linearly-interpolated lookup table. The clinical reference
/// data are user-supplied; the built-in curve is synthetic and for tests only.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormativeCurveKind {
    Quadratic { coefficients: [f64; 3] },
    Table { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormativeCurve {
    #[serde(flatten)]
    pub kind: NormativeCurveKind,
    pub ga_range: [f64; 2],
    pub source: String,
}

impl NormativeCurve {
    pub fn from_json(text: &str) -> Result<NormativeCurve> {
        let c: NormativeCurve = serde_json::from_str(text)
            .map_err(|e| CoreError::InvalidConfig(format!("normative curve: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ga_range[0] < self.ga_range[1]) {
            return Err(CoreError::InvalidConfig("ga_range must be increasing".into()));
        }
        if let NormativeCurveKind::Table { knots } = &self.kind {
            if knots.len() < 2 {
                return Err(CoreError::InvalidConfig("table needs >= 2 knots".into()));
            }
            if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(CoreError::InvalidConfig("knots must be GA-sorted".into()));
            }
        }
        Ok(())
    }

    /// Clearly synthetic stand-in used by tests (roughly linear growth).
    pub fn synthetic_default() -> NormativeCurve {
        NormativeCurve {
            kind: NormativeCurveKind::Quadratic {
                coefficients: [-14.0, 1.8, -0.009],
            },
            ga_range: [18.0, 40.0],
            source: "synthetic test curve, not clinical data".into(),
        }
    }

    pub fn eval(&self, ga_weeks: f64) -> Result<f64> {
        if ga_weeks < self.ga_range[0] || ga_weeks > self.ga_range[1] {
            return Err(CoreError::GaOutOfRange {
                ga: ga_weeks,
                min: self.ga_range[0],
                max: self.ga_range[1],
            });
        }
        Ok(match &self.kind {
            NormativeCurveKind::Quadratic { coefficients: [a0, a1, a2] } => {
                a0 + a1 * ga_weeks + a2 * ga_weeks * ga_weeks
            }
            NormativeCurveKind::Table { knots } => {
                if ga_weeks <= knots[0].0 {
                    knots[0].1
                } else if ga_weeks >= knots[knots.len() - 1].0 {
                    knots[knots.len() - 1].1
                } else {
                    let i = knots.partition_point(|k| k.0 <= ga_weeks) - 1;
                    let (g0, l0) = knots[i];
                    let (g1, l1) = knots[i + 1];
                    l0 + (l1 - l0) * (ga_weeks - g0) / (g1 - g0)
                }
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiomarkerReport {
    pub cc_length_mm: f64,
    pub cc_volume_mm3: f64,
    pub delta_length_mm: Option<f64>,
    pub delta_growth_mm: Option<f64>,
    pub ga_weeks: Option<f64>,
    pub flags: Vec<String>,
}

impl BiomarkerReport {
    pub const CSV_HEADER: &'static str =
        "subject,GA,length_mm,volume_mm3,delta_length_mm,delta_growth_mm,flags";

    pub fn to_csv_row(&self, subject: &str) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        format!(
            "{},{},{:.6},{:.6},{},{},{}",
            subject,
            opt(self.ga_weeks),
            self.cc_length_mm,
            self.cc_volume_mm3,
            opt(self.delta_length_mm),
            opt(self.delta_growth_mm),
            self.flags.join(";")
        )
    }
}

/// Extent of the CC along the posterior-anterior axis (axis projection), in mm.
/// Zero with a `cc-absent` flag when no CC voxels exist.
pub fn cc_length(vol: &LabelVolume) -> Flagged {
    let (axis, _) = vol.meta.orientation.grid_axis(AnatAxis::PosteriorAnterior);
    let cc = TissueLabel::Cc.code();
    let mut min = usize::MAX;
    let mut max = 0usize;
    let [nx, ny, nz] = vol.meta.dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if vol.get(x, y, z) == cc {
                    let c = [x, y, z][axis];
                    min = min.min(c);
                    max = max.max(c);
                }
            }
        }
    }
    if min == usize::MAX {
        Flagged::flagged(Some(0.0), "cc-absent")
    } else {
        Flagged::value((max - min) as f64 * vol.meta.spacing[axis])
    }
}

/// CC voxel count times voxel volume, in mm^3.
pub fn cc_volume(vol: &LabelVolume) -> f64 {
    let s = vol.meta.spacing;
    vol.count(TissueLabel::Cc) as f64 * s[0] * s[1] * s[2]
}

/// |cc_length(pred) - cc_length(gt)|. When the ground truth has no CC (the
/// agenesis case) its length counts as 0 and the result carries a `cca` flag.
pub fn delta_length(pred: &LabelVolume, gt: &LabelVolume) -> Result<Flagged> {
    pred.meta.require_same_grid(&gt.meta)?;
    let lp = cc_length(pred);
    let lg = cc_length(gt);
    let v = (lp.value.unwrap() - lg.value.unwrap()).abs();
    if lg.flag.is_some() {
        Ok(Flagged::flagged(Some(v), "cca"))
    } else {
        Ok(Flagged::value(v))
    }
}

/// |length - curve(GA)| in mm.
pub fn delta_growth(length_mm: f64, ga_weeks: f64, curve: &NormativeCurve) -> Result<f64> {
    Ok((length_mm - curve.eval(ga_weeks)?).abs())
}

/// Least-squares quadratic length(GA) fit, solved via normal equations on a
/// GA-centered basis; returns raw coefficients (a0, a1, a2) and the RMS residual.
pub fn fit_growth_quadratic(points: &[(f64, f64)]) -> Result<([f64; 3], f64)> {
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if points.len() < 3 || distinct.len() < 3 {
        return Err(CoreError::DegenerateDesign);
    }
    let mean = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    // normal equations A^T A b = A^T y on basis {1, t, t^2}, t = GA - mean
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for &(ga, len) in points {
        let t = ga - mean;
        let basis = [1.0, t, t * t];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
            rhs[i] += basis[i] * len;
        }
    }
    let b = solve3(m, rhs).ok_or(CoreError::DegenerateDesign)?;
    // un-center: p(t) = b0 + b1 t + b2 t^2 with t = g - mean
    let a2 = b[2];
    let a1 = b[1] - 2.0 * b[2] * mean;
    let a0 = b[0] - b[1] * mean + b[2] * mean * mean;
    let rms = (points
        .iter()
        .map(|&(ga, len)| {
            let p = a0 + a1 * ga + a2 * ga * ga;
            (len - p) * (len - p)
        })
        .sum::<f64>()
        / points.len() as f64)
        .sqrt();
    Ok(([a0, a1, a2], rms))
}

/// 3x3 linear solve with partial pivoting; None when singular.
fn solve3(mut m: [[f64; 3]; 3], mut rhs: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut s = rhs[row];
        for k in row + 1..3 {
            s -= m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    Some(x)
}
