//! Synthetic recordings: moving defect-like patterns seen by an ideal event
//! sensor, with APS frames and ground-truth boxes in the dataset schema.

mod dvs;
mod scene;

pub use dvs::{crossings, log_intensity, simulate_dvs, spread_time, DvsSimulator, Region, INTENSITY_FLOOR};
pub use scene::{
    render_scene, render_sequence, MotionSpec, PatternKind, SceneConfig, ScenePattern, SceneError,
    SUBSTEP_US,
};
