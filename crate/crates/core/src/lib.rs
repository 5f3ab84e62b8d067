//! Crowd navigation laboratory: social-force forces and rewards, ORCA
//! pedestrians, randomized obstacle scenes, and an attention-pooled value
//! network trained by imitation plus temporal-difference learning.

pub mod codec;
pub mod episode;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod orca;
pub mod plot;
pub mod policy;
pub mod reward;
pub mod sfm;
pub mod trainer;
pub mod value_net;
pub mod vec2;
pub mod world;

pub use error::{Error, Result};
pub use vec2::Vec2;
