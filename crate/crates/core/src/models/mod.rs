//! Closed-form driven models and their truncated-matrix counterparts.

pub mod oscillator;
pub mod two_level;

pub use oscillator::*;
pub use two_level::*;
