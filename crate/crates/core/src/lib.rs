//! Radio digital-twin calibration and base-station placement.
//!
//! The pipeline has two stages:
//!
//! 1. [`calibration`]: fit per-material conductivity and permittivity of a
//!    differentiable propagation model ([`propagation`]) to measured RSRP by
//!    projected gradient descent.
//! 2. [`planner`]: place new base stations one at a time with a Gaussian
//!    process surrogate and Expected Improvement over a discrete rooftop
//!    candidate set, maximizing `T = α·coverage + capacity` computed by the
//!    [`radiomap`] solver. Random-sampling and exhaustive-search baselines
//!    share the same objective.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod feasible;
pub mod geometry;
pub mod grid;
pub mod planner;
pub mod propagation;
pub mod radiomap;
pub mod scene;
pub mod synth;

pub use error::{Error, Result};
pub use feasible::{enumerate_candidates, Candidate, FeasibleRegion};
pub use geometry::{Point2, Rect};
pub use grid::{make_grid, Grid};
pub use propagation::{Engine, EngineConfig};
pub use radiomap::{solve_radiomap, Metrics, RadioMap};
pub use scene::{load_scene, save_scene, BaseStation, Building, MaterialParams, Scene};
