//! Uniform argument stability of learning algorithms in Hilbert space, and
//! the generalization bounds it implies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod certify;
pub mod complexity;
pub mod concentration;
pub mod datagen;
pub mod error;
pub mod lab;
pub mod learners;
pub mod losses;
pub mod rng;
pub mod stability;
pub mod vectorspace;

pub use error::{Error, Result};
pub use learners::{Algorithm, PresetName, Sample};
pub use losses::{LabeledExample, LossKind, LossModel};
pub use vectorspace::Vector;
