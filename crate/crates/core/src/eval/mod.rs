//! Scoring figure/ground decisions against annotated boundaries, tuning cue
//! weights and generating synthetic test stimuli.

pub mod dataset;
pub mod ground_truth;
pub mod scoring;
pub mod search;
pub mod stats;
pub mod synth;

pub use dataset::{evaluate, parse_manifest, read_manifest, tune, EvalReport, LoadedImage, ManifestEntry, PreparedImage};
pub use ground_truth::{
    format_signed_map, load_ground_truth, parse_signed_map, read_signed_map, write_signed_map, FgGroundTruth, GtRecord,
    SignedMap,
};
pub use scoring::{
    decide_figure, decision_credit, query_points, score_ground_truth, score_image, Decision, FinalLookup, GtScore,
    ImageScore, SparseFinal,
};
pub use search::{grid_search_weights, Alpha, SearchParams, SearchResult, StopReason, TracePoint};
pub use stats::{make_split, pooled_t, right_tailed_t_test, SplitSpec};
pub use synth::{generate_synthetic_stimulus, Stimulus, StimulusKind, SynthParams};
