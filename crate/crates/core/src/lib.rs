//! Two-tier simulation of pedestrian flow with random stop-and-go behaviour.
//!
//! The microscopic tier ([`micro`]) is a time-discrete social-force particle
//! system where each pedestrian carries a walking/stopped status that flips
//! with a position-dependent rate. The macroscopic tier ([`macro_solver`])
//! evolves the stopped and walking densities of the associated two-state
//! conservation law with a fractional-step finite-volume scheme. [`metrics`]
//! compares the two, and [`scenario`] ties everything to run descriptions and
//! on-disk formats.

pub mod error;
mod convolution;
pub mod forces;
pub mod geometry;
pub mod grid;
pub mod macro_solver;
pub mod metrics;
pub mod micro;
pub mod output;
pub mod rates;
pub mod runner;
pub mod scenario;
pub mod vec2;

pub use error::{Error, Result};
pub use geometry::{Rect, ReflectionParams, WalkableDomain};
pub use grid::Grid;
pub use vec2::Vec2;
