//! Feasible paths, geodesics and regularity checks for constrained sets.

pub mod cones;
pub mod convex;
pub mod error;
pub mod expr;
pub mod geodesics;
pub mod geometry;
pub mod map;
pub mod optim;
pub mod optimality;
pub mod paths;
pub mod regularity;
pub mod report;
pub mod sets;

pub use error::{Error, Result};
pub use geometry::{Point, SampledCurve};
