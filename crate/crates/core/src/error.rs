//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised while loading or validating a rig configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: cannot parse `{text}`")]
    Parse { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid value: {0}")]
    Invariant(String),
}

/// Errors from projection, back-projection and triangulation geometry.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("ray through the focus is degenerate (denominator {0:.3e})")]
    DegenerateRay(f64),
    #[error("pixel lifts to a grazing ray along the mirror asymptote (denominator {0:.3e})")]
    GrazingRay(f64),
    #[error("non-finite input coordinate")]
    NonFinite,
    #[error("point lies inside mirror {mirror} volume")]
    InsideMirror { mirror: u8 },
    #[error("elevation {theta_deg:.3} deg outside mirror {mirror} limits [{min_deg:.3}, {max_deg:.3}]")]
    ElevationOutOfRange {
        mirror: u8,
        theta_deg: f64,
        min_deg: f64,
        max_deg: f64,
    },
    #[error("rays are parallel; triangulated range is unbounded")]
    ParallelRays,
    #[error("rays are not coplanar: azimuth mismatch of {0:.3e} rad")]
    AzimuthMismatch(f64),
    #[error("triangulated point lies behind a viewpoint (scale1 {0:.3e}, scale2 {1:.3e})")]
    BehindViewpoint(f64, f64),
    #[error("pixel cannot be lifted: {0}")]
    InvalidPixel(String),
    #[error("stereo region of interest is empty (common vertical FOV {0:.3} deg)")]
    EmptyRoi(f64),
    #[error("reflex plane at z = d/2 does not intersect mirror 1")]
    NoReflexIntersection,
    #[error("singular configuration: {0}")]
    Singular(String),
}

/// Errors from panorama construction and matching.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PanoramaError {
    #[error("panorama dimension must be positive, got {0}")]
    BadDimension(i64),
    #[error("image is {got_w}x{got_h} but the rig camera expects {want_w}x{want_h}")]
    DimensionMismatch {
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },
    #[error("disparity must be positive, got {0}")]
    NonPositiveDisparity(f64),
    #[error("row {row:.2} outside panorama of height {height}")]
    RowOutOfRange { row: f64, height: usize },
    #[error("match window {window} exceeds panorama size {w}x{h}")]
    WindowTooLarge { window: usize, w: usize, h: usize },
    #[error("panoramas have different dimensions: {0}x{1} vs {2}x{3}")]
    SizeMismatch(usize, usize, usize, usize),
    #[error("bad LUT file: {0}")]
    BadLutFile(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Errors from the synthetic verification harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error(
        "board of height {board_mm:.1} mm does not fit the stereo ROI at range {rho_mm:.1} mm \
         (max feasible height {max_mm:.1} mm)"
    )]
    RoiFit {
        rho_mm: f64,
        board_mm: f64,
        max_mm: f64,
    },
    #[error("corner at ({x:.1}, {y:.1}, {z:.1}) mm is not visible to both mirrors")]
    CornerNotVisible { x: f64, y: f64, z: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
