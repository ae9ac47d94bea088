//! Event-camera benchmark pipeline: containers, event selection and
//! histogram encoding, frame preprocessing, sample extraction, detection
//! metrics and a synthetic sequence generator.

pub mod association;
pub mod config;
pub mod encoding;
pub mod frame_prep;
pub mod io;
pub mod metrics;
pub mod model;
pub mod synthgen;

pub use association::SampleBundle;
pub use encoding::{EncoderConfig, EncoderMode, NormalizedHistogram};
pub use model::{
    Annotation, BBox, DefectClass, Detection, Event, EventStream, Frame, Micros, Polarity,
    SensorGeometry, SequenceRecording, TimeWindow,
};
