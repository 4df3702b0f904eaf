use super::transforms::{ApEnd, Laterality, ResolvedTransform};
use crate::error::{CoreError, Result};
use crate::rng::substream;
use crate::volume::LabelVolume;
use rand::Rng;
use serde::{Deserialize, Serialize};

const PLAN_STREAM: u64 = 0x706c_616e; // "plan"

/// Scalar in [0,1] mapped linearly onto each transform's configured range;
/// 0 selects the mildest legal effect, 1 the maximum of the range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Severity(f64);

impl Severity {
    pub fn new(s: f64) -> Result<Severity> {
        if (0.0..=1.0).contains(&s) {
            Ok(Severity(s))
        } else {
            Err(CoreError::InvalidConfig(format!("severity {s} outside [0,1]")))
        }
    }

    pub fn get(&self) -> f64 {
        self.0
    }

    pub fn lerp(&self, range: [f64; 2]) -> f64 {
        range[0] + self.0 * (range[1] - range[0])
    }

    pub fn lerp_int(&self, range: [u32; 2]) -> u32 {
        (range[0] as f64 + self.0 * (range[1] - range[0]) as f64).round() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    CompleteAgenesis,
    PartialAgenesis,
    CcThinning,
    CcThickening,
    CcKink,
    CortexThickening,
    CortexThinning,
    CortexSmoothing,
    PosteriorFossaHypoplasia,
    Ventriculomegaly,
}

impl TransformKind {
    pub const ALL: [TransformKind; 10] = [
        TransformKind::CompleteAgenesis,
        TransformKind::PartialAgenesis,
        TransformKind::CcThinning,
        TransformKind::CcThickening,
        TransformKind::CcKink,
        TransformKind::CortexThickening,
        TransformKind::CortexThinning,
        TransformKind::CortexSmoothing,
        TransformKind::PosteriorFossaHypoplasia,
        TransformKind::Ventriculomegaly,
    ];
}

/// Selection weight plus the parameter ranges a severity scalar maps onto.
/// Unused range fields are ignored by transforms that do not need them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedParams {
    pub weight: f64,
    #[serde(default)]
    pub fraction: Option<[f64; 2]>,
    #[serde(default)]
    pub iterations: Option<[u32; 2]>,
    #[serde(default)]
    pub radius: Option<[f64; 2]>,
    #[serde(default)]
    pub amplitude_mm: Option<[f64; 2]>,
    #[serde(default)]
    pub cycles: Option<[f64; 2]>,
    #[serde(default)]
    pub magnitude_mm: Option<[f64; 2]>,
    #[serde(default)]
    pub sigma_mm: Option<[f64; 2]>,
}

impl WeightedParams {
    fn weight_only(weight: f64) -> WeightedParams {
        WeightedParams {
            weight,
            fraction: None,
            iterations: None,
            radius: None,
            amplitude_mm: None,
            cycles: None,
            magnitude_mm: None,
            sigma_mm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationConfig {
    /// Probability that a sample is augmented at all (the mixing ratio:
    /// 0.5 and 1.0 reproduce the two published training mixes).
    pub p_augment: f64,
    /// Maximum number of transforms composed per augmented sample.
    pub max_transforms: usize,
    pub complete_agenesis: WeightedParams,
    pub partial_agenesis: WeightedParams,
    pub cc_thinning: WeightedParams,
    pub cc_thickening: WeightedParams,
    pub cc_kink: WeightedParams,
    pub cortex_thickening: WeightedParams,
    pub cortex_thinning: WeightedParams,
    pub cortex_smoothing: WeightedParams,
    pub posterior_fossa_hypoplasia: WeightedParams,
    pub ventriculomegaly: WeightedParams,
}

impl Default for AugmentationConfig {
    /// Default ranges are placeholders chosen for plausibility; the ranges
    /// used for any particular experiment belong in a config file.
    fn default() -> Self {
        AugmentationConfig {
            p_augment: 0.5,
            max_transforms: 3,
            complete_agenesis: WeightedParams::weight_only(1.0),
            partial_agenesis: WeightedParams {
                fraction: Some([0.2, 0.8]),
                ..WeightedParams::weight_only(1.0)
            },
            cc_thinning: WeightedParams {
                iterations: Some([1, 3]),
                ..WeightedParams::weight_only(1.0)
            },
            cc_thickening: WeightedParams {
                radius: Some([1.0, 3.0]),
                ..WeightedParams::weight_only(1.0)
            },
            cc_kink: WeightedParams {
                amplitude_mm: Some([0.5, 3.0]),
                cycles: Some([0.5, 2.0]),
                ..WeightedParams::weight_only(1.0)
            },
            cortex_thickening: WeightedParams {
                radius: Some([1.0, 2.0]),
                ..WeightedParams::weight_only(1.0)
            },
            cortex_thinning: WeightedParams {
                radius: Some([1.0, 2.0]),
                ..WeightedParams::weight_only(1.0)
            },
            cortex_smoothing: WeightedParams {
                radius: Some([1.0, 2.0]),
                ..WeightedParams::weight_only(1.0)
            },
            posterior_fossa_hypoplasia: WeightedParams {
                iterations: Some([1, 3]),
                ..WeightedParams::weight_only(1.0)
            },
            ventriculomegaly: WeightedParams {
                magnitude_mm: Some([1.0, 6.0]),
                sigma_mm: Some([4.0, 10.0]),
                ..WeightedParams::weight_only(1.0)
            },
        }
    }
}

impl AugmentationConfig {
    pub fn params(&self, kind: TransformKind) -> &WeightedParams {
        match kind {
            TransformKind::CompleteAgenesis => &self.complete_agenesis,
            TransformKind::PartialAgenesis => &self.partial_agenesis,
            TransformKind::CcThinning => &self.cc_thinning,
            TransformKind::CcThickening => &self.cc_thickening,
            TransformKind::CcKink => &self.cc_kink,
            TransformKind::CortexThickening => &self.cortex_thickening,
            TransformKind::CortexThinning => &self.cortex_thinning,
            TransformKind::CortexSmoothing => &self.cortex_smoothing,
            TransformKind::PosteriorFossaHypoplasia => &self.posterior_fossa_hypoplasia,
            TransformKind::Ventriculomegaly => &self.ventriculomegaly,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_augment) {
            return Err(CoreError::InvalidConfig(format!(
                "p_augment {} outside [0,1]",
                self.p_augment
            )));
        }
        if self.max_transforms == 0 {
            return Err(CoreError::InvalidConfig("max_transforms must be >= 1".into()));
        }
        let mut any_positive = false;
        for kind in TransformKind::ALL {
            let p = self.params(kind);
            if p.weight < 0.0 || !p.weight.is_finite() {
                return Err(CoreError::InvalidConfig(format!(
                    "{kind:?}: weight must be finite and >= 0"
                )));
            }
            any_positive |= p.weight > 0.0;
            for range in [p.fraction, p.radius, p.amplitude_mm, p.cycles, p.magnitude_mm, p.sigma_mm]
                .into_iter()
                .flatten()
            {
                if !(range[0] <= range[1]) {
                    return Err(CoreError::InvalidConfig(format!(
                        "{kind:?}: range {range:?} not well-ordered"
                    )));
                }
            }
            if let Some(r) = p.iterations {
                if r[0] > r[1] {
                    return Err(CoreError::InvalidConfig(format!(
                        "{kind:?}: iterations range {r:?} not well-ordered"
                    )));
                }
            }
        }
        if !any_positive {
            return Err(CoreError::InvalidConfig(
                "at least one transform weight must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<AugmentationConfig> {
        let cfg: AugmentationConfig = serde_json::from_str(text)
            .map_err(|e| CoreError::InvalidConfig(format!("augmentation config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedTransform {
    pub kind: TransformKind,
    pub severity: Severity,
    #[serde(flatten)]
    pub resolved: ResolvedTransform,
}

/// A fully resolved per-sample augmentation decision, reproducible from
/// (config, seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationPlan {
    pub master_seed: u64,
    pub applied: bool,
    pub transforms: Vec<PlannedTransform>,
}

impl AugmentationPlan {
    pub fn empty(seed: u64) -> AugmentationPlan {
        AugmentationPlan {
            master_seed: seed,
            applied: false,
            transforms: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipNote {
    pub index: usize,
    pub kind: TransformKind,
    pub reason: String,
}

fn range_or(opt: Option<[f64; 2]>, fallback: [f64; 2]) -> [f64; 2] {
    opt.unwrap_or(fallback)
}

/// Draw a plan: with probability p_augment, 1..=max_transforms distinct
/// transforms chosen by weight without replacement, each with parameters
/// mapped from a uniform severity.
pub fn sample_plan(config: &AugmentationConfig, seed: u64) -> Result<AugmentationPlan> {
    config.validate()?;
    let mut rng = substream(seed, PLAN_STREAM);
    if !(rng.gen::<f64>() < config.p_augment) {
        return Ok(AugmentationPlan::empty(seed));
    }
    let mut pool: Vec<(TransformKind, f64)> = TransformKind::ALL
        .iter()
        .map(|&k| (k, config.params(k).weight))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let n = rng.gen_range(1..=config.max_transforms.min(pool.len()));
    let mut transforms = Vec::with_capacity(n);
    for _ in 0..n {
        let total: f64 = pool.iter().map(|&(_, w)| w).sum();
        let mut r = rng.gen::<f64>() * total;
        let mut chosen = pool.len() - 1;
        for (i, &(_, w)) in pool.iter().enumerate() {
            if r < w {
                chosen = i;
                break;
            }
            r -= w;
        }
        let (kind, _) = pool.remove(chosen);
        let severity = Severity::new(rng.gen::<f64>()).unwrap();
        let resolved = resolve(config, kind, severity, &mut rng);
        transforms.push(PlannedTransform {
            kind,
            severity,
            resolved,
        });
    }
    Ok(AugmentationPlan {
        master_seed: seed,
        applied: true,
        transforms,
    })
}

fn resolve(
    config: &AugmentationConfig,
    kind: TransformKind,
    severity: Severity,
    rng: &mut impl Rng,
) -> ResolvedTransform {
    let p = config.params(kind);
    match kind {
        TransformKind::CompleteAgenesis => ResolvedTransform::CompleteAgenesis,
        TransformKind::PartialAgenesis => ResolvedTransform::PartialAgenesis {
            fraction: severity.lerp(range_or(p.fraction, [0.2, 0.8])),
            end: if rng.gen::<bool>() {
                ApEnd::Anterior
            } else {
                ApEnd::Posterior
            },
        },
        TransformKind::CcThinning => ResolvedTransform::CcThinning {
            iterations: severity.lerp_int(p.iterations.unwrap_or([1, 3])),
        },
        TransformKind::CcThickening => ResolvedTransform::CcThickening {
            radius: severity.lerp(range_or(p.radius, [1.0, 3.0])),
        },
        TransformKind::CcKink => ResolvedTransform::CcKink {
            amplitude_mm: severity.lerp(range_or(p.amplitude_mm, [0.5, 3.0])),
            cycles: severity.lerp(range_or(p.cycles, [0.5, 2.0])),
            phase: rng.gen::<f64>() * std::f64::consts::TAU,
        },
        TransformKind::CortexThickening => ResolvedTransform::CortexThickening {
            radius: severity.lerp(range_or(p.radius, [1.0, 2.0])),
        },
        TransformKind::CortexThinning => ResolvedTransform::CortexThinning {
            radius: severity.lerp(range_or(p.radius, [1.0, 2.0])),
        },
        TransformKind::CortexSmoothing => ResolvedTransform::CortexSmoothing {
            radius: severity.lerp(range_or(p.radius, [1.0, 2.0])),
        },
        TransformKind::PosteriorFossaHypoplasia => ResolvedTransform::PosteriorFossaHypoplasia {
            iterations: severity.lerp_int(p.iterations.unwrap_or([1, 3])),
        },
        TransformKind::Ventriculomegaly => ResolvedTransform::Ventriculomegaly {
            magnitude_mm: severity.lerp(range_or(p.magnitude_mm, [1.0, 6.0])),
            sigma_mm: severity.lerp(range_or(p.sigma_mm, [4.0, 10.0])),
            laterality: match rng.gen_range(0..3) {
                0 => Laterality::Left,
                1 => Laterality::Right,
                _ => Laterality::Bilateral,
            },
        },
    }
}

/// Apply a plan in order. A transform whose precondition no longer holds
/// (e.g. the CC was removed by an earlier transform) is skipped with a note.
pub fn apply_plan(vol: &LabelVolume, plan: &AugmentationPlan) -> (LabelVolume, Vec<SkipNote>) {
    let mut current = vol.clone();
    let mut skips = Vec::new();
    for (index, t) in plan.transforms.iter().enumerate() {
        if !t.resolved.precondition_holds(&current) {
            skips.push(SkipNote {
                index,
                kind: t.kind,
                reason: "target structure absent".into(),
            });
            continue;
        }
        match t.resolved.apply(&current) {
            Ok(next) => current = next,
            Err(e) => skips.push(SkipNote {
                index,
                kind: t.kind,
                reason: e.to_string(),
            }),
        }
    }
    (current, skips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::TissueLabel;

    #[test]
    fn p_zero_always_empty() {
        let cfg = AugmentationConfig {
            p_augment: 0.0,
            ..Default::default()
        };
        for seed in 0..200 {
            assert!(!sample_plan(&cfg, seed).unwrap().applied);
        }
    }

    #[test]
    fn forced_single_transform() {
        let mut cfg = AugmentationConfig {
            p_augment: 1.0,
            max_transforms: 3,
            ..Default::default()
        };
        for kind in TransformKind::ALL {
            if kind != TransformKind::CompleteAgenesis {
                let w = match kind {
                    TransformKind::PartialAgenesis => &mut cfg.partial_agenesis,
                    TransformKind::CcThinning => &mut cfg.cc_thinning,
                    TransformKind::CcThickening => &mut cfg.cc_thickening,
                    TransformKind::CcKink => &mut cfg.cc_kink,
                    TransformKind::CortexThickening => &mut cfg.cortex_thickening,
                    TransformKind::CortexThinning => &mut cfg.cortex_thinning,
                    TransformKind::CortexSmoothing => &mut cfg.cortex_smoothing,
                    TransformKind::PosteriorFossaHypoplasia => {
                        &mut cfg.posterior_fossa_hypoplasia
                    }
                    TransformKind::Ventriculomegaly => &mut cfg.ventriculomegaly,
                    TransformKind::CompleteAgenesis => unreachable!(),
                };
                w.weight = 0.0;
            }
        }
        for seed in 0..50 {
            let plan = sample_plan(&cfg, seed).unwrap();
            assert!(plan.applied);
            assert_eq!(plan.transforms.len(), 1);
            assert_eq!(plan.transforms[0].kind, TransformKind::CompleteAgenesis);
        }
    }

    #[test]
    fn deterministic_given_config_and_seed() {
        let cfg = AugmentationConfig {
            p_augment: 1.0,
            ..Default::default()
        };
        for seed in [0u64, 1, 42, u64::MAX] {
            assert_eq!(sample_plan(&cfg, seed).unwrap(), sample_plan(&cfg, seed).unwrap());
        }
        assert_ne!(
            sample_plan(&cfg, 1).unwrap().transforms,
            sample_plan(&cfg, 2).unwrap().transforms
        );
    }

    #[test]
    fn mixing_ratio_within_binomial_band() {
        let cfg = AugmentationConfig::default(); // p = 0.5
        let applied = (0..10_000)
            .filter(|&s| sample_plan(&cfg, s).unwrap().applied)
            .count();
        let frac = applied as f64 / 10_000.0;
        assert!((0.47..=0.53).contains(&frac), "applied fraction {frac}");
    }

    #[test]
    fn parameters_respect_ranges() {
        let cfg = AugmentationConfig {
            p_augment: 1.0,
            max_transforms: 10,
            ..Default::default()
        };
        for seed in 0..200 {
            for t in sample_plan(&cfg, seed).unwrap().transforms {
                match t.resolved {
                    ResolvedTransform::PartialAgenesis { fraction, .. } => {
                        assert!((0.2..=0.8).contains(&fraction))
                    }
                    ResolvedTransform::CcThinning { iterations } => {
                        assert!((1..=3).contains(&iterations))
                    }
                    ResolvedTransform::CcThickening { radius } => {
                        assert!((1.0..=3.0).contains(&radius))
                    }
                    ResolvedTransform::CcKink { amplitude_mm, cycles, phase } => {
                        assert!((0.5..=3.0).contains(&amplitude_mm));
                        assert!((0.5..=2.0).contains(&cycles));
                        assert!((0.0..std::f64::consts::TAU).contains(&phase));
                    }
                    ResolvedTransform::Ventriculomegaly { magnitude_mm, sigma_mm, .. } => {
                        assert!((1.0..=6.0).contains(&magnitude_mm));
                        assert!((4.0..=10.0).contains(&sigma_mm));
                    }
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn empty_plan_is_identity() {
        let vol = crate::phantom::PhantomSpec::compact().generate().unwrap();
        let (out, skips) = apply_plan(&vol, &AugmentationPlan::empty(9));
        assert_eq!(out, vol);
        assert!(skips.is_empty());
    }

    #[test]
    fn impossible_second_transform_skipped() {
        let vol = crate::phantom::PhantomSpec::compact().generate().unwrap();
        let plan = AugmentationPlan {
            master_seed: 0,
            applied: true,
            transforms: vec![
                PlannedTransform {
                    kind: TransformKind::CompleteAgenesis,
                    severity: Severity::new(1.0).unwrap(),
                    resolved: ResolvedTransform::CompleteAgenesis,
                },
                PlannedTransform {
                    kind: TransformKind::CcThinning,
                    severity: Severity::new(0.5).unwrap(),
                    resolved: ResolvedTransform::CcThinning { iterations: 1 },
                },
            ],
        };
        let (out, skips) = apply_plan(&vol, &plan);
        assert_eq!(skips.len(), 1);
        assert_eq!(skips[0].kind, TransformKind::CcThinning);
        let (only_first, _) = apply_plan(
            &vol,
            &AugmentationPlan {
                transforms: plan.transforms[..1].to_vec(),
                ..plan.clone()
            },
        );
        assert_eq!(out, only_first);
        assert_eq!(out.count(TissueLabel::Cc), 0);
    }

    #[test]
    fn config_json_round_trip_and_validation() {
        let cfg = AugmentationConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back = AugmentationConfig::from_json(&text).unwrap();
        assert_eq!(cfg, back);

        let mut bad = cfg.clone();
        bad.p_augment = 1.5;
        assert!(bad.validate().is_err());
        let mut bad = cfg.clone();
        bad.partial_agenesis.fraction = Some([0.8, 0.2]);
        assert!(bad.validate().is_err());
        let mut bad = cfg;
        for k in TransformKind::ALL {
            match k {
                TransformKind::CompleteAgenesis => bad.complete_agenesis.weight = 0.0,
                TransformKind::PartialAgenesis => bad.partial_agenesis.weight = 0.0,
                TransformKind::CcThinning => bad.cc_thinning.weight = 0.0,
                TransformKind::CcThickening => bad.cc_thickening.weight = 0.0,
                TransformKind::CcKink => bad.cc_kink.weight = 0.0,
                TransformKind::CortexThickening => bad.cortex_thickening.weight = 0.0,
                TransformKind::CortexThinning => bad.cortex_thinning.weight = 0.0,
                TransformKind::CortexSmoothing => bad.cortex_smoothing.weight = 0.0,
                TransformKind::PosteriorFossaHypoplasia => {
                    bad.posterior_fossa_hypoplasia.weight = 0.0
                }
                TransformKind::Ventriculomegaly => bad.ventriculomegaly.weight = 0.0,
            }
        }
        assert!(bad.validate().is_err());
    }
}
