//! Triangle-based photographic composition analysis.
//!
//! The pipeline stages are:
//!
//! 1. **Segmentation** – greedy hierarchical region merging driven by a
//!    combination of photometric boundary strength and a polar-angle
//!    geometric distance around the dominant vanishing point.
//! 2. **Vanishing point** – exhaustive grid search maximizing a
//!    boundary-consensus score built from the same geometric distance.
//! 3. **Line segments** – level-line region growing with density control
//!    plus contour-confidence filtering.
//! 4. **Triangles** – modified RANSAC fitting of two-sided triangles scored
//!    by continuity ratio and total ratio.
//! 5. **Metrics** – segmentation benchmarks (RI / VOI / SC), vanishing-point
//!    success rates, and triangle precision/recall.
//! 6. **Retrieval** – a persistent composition index supporting scene
//!    queries (segmentation + vanishing point similarity) and portrait
//!    sketch queries.

pub mod error;
pub mod geometry;
pub mod imagebuf;
pub mod labels;
pub mod line_segments;
pub mod metrics;
pub mod overlay;
pub mod par;
pub mod retrieval;
pub mod segmentation;
pub mod synth;
pub mod triangles;
pub mod vanishing_point;

pub use error::{Error, Result};
pub use geometry::{polar_angle, Point2, Triangle2};
pub use imagebuf::{resize_canonical, ImageBuffer};
pub use labels::{region_adjacency, RegionAdjacency, RegionLabelMap};
