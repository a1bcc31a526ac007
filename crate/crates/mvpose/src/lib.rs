//! Render-and-compare 6D pose estimation, refinement, and tracking.
//!
//! The crate estimates an object's rotation and translation relative to a
//! camera by iteratively comparing renderings at a hypothesis pose against
//! an observation. The pieces:
//!
//! - [`pose`]: quaternions, rigid poses, the untangled translation
//!   parameterization, and standardization statistics.
//! - [`camera`]: pinhole intrinsics, detection boxes, and the zoom-in crop
//!   that presents objects to a matcher at canonical scale.
//! - [`raster`] and [`render`]: PPM/PGM rasters, mask dilation, and a
//!   z-buffered triangle rasterizer with the six canonical views.
//! - [`mesh`]: triangle meshes, built-in shapes, and ASCII PLY I/O.
//! - [`loss`]: the matching losses with analytic gradients and a finite
//!   difference checker.
//! - [`estimator`]: the pose-difference estimator contract plus analytic
//!   oracle implementations (noiseless, contracting, noisy).
//! - [`refine`] and [`track`]: the iterative refinement loop and the
//!   hold/update/restart tracking state machine.
//! - [`synth`] and [`eval`]: seeded dataset/trajectory generation and the
//!   (n degree, n centimeter) benchmark harness.
//! - [`config`]: the JSON experiment configuration consumed by the CLI.
//!
//! Everything stochastic is seeded and reproducible: runs with the same
//! configuration produce byte-identical outputs, independent of thread
//! scheduling. The `parallel` feature (on by default) evaluates
//! independent records on a thread pool; disabling it changes nothing but
//! wall-clock time.

pub mod camera;
pub mod config;
pub mod error;
pub mod estimator;
pub mod eval;
pub mod exec;
pub mod loss;
pub mod mesh;
pub mod pose;
pub mod raster;
pub mod refine;
pub mod render;
pub mod rng;
pub mod synth;
pub mod track;

pub use error::{Error, Result};
