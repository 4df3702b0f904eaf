//! 3D volumetric toolkit for pathology-informed label-space augmentation,
//! domain-randomized intensity synthesis, topology-aware segmentation metrics
//! and corpus callosum biomarkers.

pub mod augment;
pub mod biomarkers;
pub mod components;
pub mod distance;
pub mod error;
pub mod field;
pub mod harmonize;
pub mod metrics;
pub mod morphology;
pub mod nifti;
pub mod noise;
pub mod phantom;
pub mod resample;
pub mod rng;
pub mod synth;
pub mod topology;
pub mod volume;

pub use error::{CoreError, Result};
pub use volume::{
    extract_mask, bounding_box, AnatAxis, BinaryMask, GridMeta, IntensityVolume, LabelVolume,
    Orientation, TissueLabel, VoxelBox,
};
