//! Pathology-informed label-space transforms: corpus callosum dysgenesis
//! variants plus associated cortical, posterior-fossa and ventricular
//! alterations. All transforms are deterministic given their parameters;
//! randomization lives in the plan sampler.

mod plan;
mod transforms;

pub use plan::{
    apply_plan, sample_plan, AugmentationConfig, AugmentationPlan, PlannedTransform, Severity,
    SkipNote, TransformKind, WeightedParams,
};
pub use transforms::{
    cc_kink, cc_thickening, cc_thinning, complete_agenesis, cortex_smoothing, cortex_thickening,
    cortex_thinning, partial_agenesis, posterior_fossa_hypoplasia, ventriculomegaly, ApEnd,
    Laterality, ResolvedTransform,
};
