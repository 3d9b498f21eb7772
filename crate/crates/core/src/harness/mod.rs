//! Synthetic-scene virtual camera, pipeline orchestration and the
//! experiment/report front end.

pub mod camera;
pub mod experiment;
pub mod pipeline;
pub mod refine;
pub mod scene;

pub use camera::{make_triplet, virtual_camera, ExposureTriplet, NoiseModel, TripletRole};
pub use experiment::{run_experiment, ExperimentConfig, Report, SceneMetrics};
pub use pipeline::{restore_pipeline, restore_pipeline_with, PipelineOptions, RestoreOutput};
pub use refine::{refiner_by_name, GainBiasRefiner, IdentityRefiner, Refiner};
pub use scene::{generate_scene, SceneComponent, SceneSpec};
