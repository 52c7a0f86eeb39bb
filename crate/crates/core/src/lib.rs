pub mod analysis;
pub mod channels;
pub mod efficiency;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod oneshot;
pub mod strategies;
