//! Partial-scan generation and completion scoring for textured triangle
//! meshes.
//!
//! The crate cuts holes into complete scans, scores reconstructions against
//! ground truth with surface-area, shape, texture and overall scores, fits the
//! distance-to-score mapping scales from perturbation baselines, and drives
//! all of it in batch from the `sharp-bench` binary.

pub mod batch;
pub mod bvh;
pub mod degrade;
pub mod distance;
pub mod measure;
pub mod mesh;
pub mod obj;
pub mod sampling;
pub mod scoring;
pub mod synth;

pub use bvh::{build_index, closest_on_mesh, SpatialIndex};
pub use distance::{closest_point_triangle, Correspondence};
pub use measure::{directed_measure, DirectedMeasure};
pub use mesh::{MeshError, Point, RegionMask, Rgb, TextureImage, TexturedMesh, Uv};
pub use sampling::{sample_surface, SurfaceSample};
pub use scoring::{score_pair, ScoreConfig, ScoreReport};
