//! Single-camera folded catadioptric omnistereo toolkit.
//!
//! A coaxial pair of hyperboloidal mirrors folded through a planar reflex
//! mirror gives one camera two single-viewpoint omnidirectional views with a
//! vertical stereo baseline. This crate implements the exact projection
//! geometry both ways, design-parameter optimization for maximum baseline
//! under physical and performance constraints, cylindrical panorama
//! rectification with lookup tables, stereo triangulation with first-order
//! uncertainty, and a synthetic verification harness.

pub mod analysis;
pub mod backprojection;
pub mod error;
pub mod harness;
pub mod optimizer;
pub mod panorama;
pub mod pnm;
pub mod projection;
pub mod rig;
pub mod triangulation;

pub use analysis::{fov_report, size_mass, stereo_roi, FovReport, SizeMassReport, StereoRoi};
pub use backprojection::{backproject, backproject_auto, ViewRay};
pub use error::{ConfigError, GeometryError, HarnessError, PanoramaError};
pub use harness::{generate_ring, rmse_experiment, ChessboardRing, RmseRow};
pub use optimizer::{
    baseline, evaluate_constraints, optimize, optimize_multistart, ConstraintSet,
    OptimizeOptions, OptimizeReport,
};
pub use panorama::{
    build_lut, disparity_to_match, match_columns, panorama_geometry, rectify, DisparityMap,
    Interpolation, PanoramaGeometry, PanoramaLUT, PanoramaSize,
};
pub use pnm::{read_pnm, write_pnm, GrayImage, PnmImage, RgbImage};
pub use projection::{reflex_transform, ReflectionPoint, RigGeometry};
pub use rig::{
    load_spec, parse_spec, CameraIntrinsics, DesignVector, Frame, Mirror, MirrorSurface,
    PixelPoint, RigSpec,
};
pub use triangulation::{
    propagate_uncertainty, range_sweep, triangulate_midpoint, triangulate_midpoint_rays,
    triangulate_naive, TriangulatedPoint, TriangulationMethod,
};
