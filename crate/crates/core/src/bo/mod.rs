//! Border-ownership pyramids: center-surround evidence, grouping feedback,
//! cue combination and the final per-direction maps.

pub mod combine;
pub mod cs;
pub mod model;
pub mod modulation;
pub mod weights;

pub use combine::{combine_bo, final_bo_maps, winning_bo, winning_level, BoPyramidSet};
pub use cs::{compute_cs_pyramids, on_kernel, CsKind, CsPair};
pub use model::{
    light_dark_set, local_cue_set, passive_feature_final, Components, EvalCache, FeatureInput, ModelParams, Needs,
    OrientationSets,
};
pub use modulation::{
    accumulate_modulation, compute_bo_light_dark, compute_bo_local_cue, modulate, Grouping, LightDarkBo,
    NormalizedPyramid, VonMisesBank,
};
pub use weights::{Feature, ModelWeights, Preset};
