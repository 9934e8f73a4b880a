//! Touching-paraboloid contact sets, normal bundles and curvature estimates for
//! discretized closed sets, with numerical checks of ABP-type and
//! weak-Harnack-type measure inequalities.

pub mod abp;
pub mod error;
pub mod geom;
pub mod harnack;
pub mod index;
pub mod measure;
pub mod normal;
pub mod numfmt;
pub mod paraboloid;
pub mod report;
pub mod scene;
pub mod verdict;

pub use error::{Error, Result};
pub use geom::{Lattice, PointSet};
pub use verdict::Verdict;
pub use scene::{build_scene, ClosedSetSample, GraphFunction, SceneOracle, SceneSpec};
