//! Rig parameterization: the six-parameter design vector, camera intrinsics,
//! derived hyperboloid surfaces and their profile functions, and config I/O.
//!
//! Units are millimeters and radians everywhere inside the crate; degrees
//! appear only at the config/CLI boundary.

use std::fmt;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, GeometryError};

/// Mirror index. Mirror 1 is the top hyperboloid (outer image ring), mirror 2
/// the bottom one imaged through the planar reflex fold (inner ring).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mirror {
    One,
    Two,
}

impl Mirror {
    pub fn index(self) -> u8 {
        match self {
            Mirror::One => 1,
            Mirror::Two => 2,
        }
    }

    pub fn from_index(i: u8) -> Option<Mirror> {
        match i {
            1 => Some(Mirror::One),
            2 => Some(Mirror::Two),
            _ => None,
        }
    }
}

impl fmt::Display for Mirror {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Image frame a pixel coordinate is expressed in: the full camera image,
/// the per-mirror masked annuli, or the rectified panoramas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    I,
    I1,
    I2,
    Xi1,
    Xi2,
}

/// Continuous 2D pixel position tagged with its frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
    pub frame: Frame,
}

impl PixelPoint {
    pub fn new(u: f64, v: f64, frame: Frame) -> Self {
        PixelPoint { u, v, frame }
    }

    /// Pixel in the full omnidirectional image frame.
    pub fn image(u: f64, v: f64) -> Self {
        PixelPoint::new(u, v, Frame::I)
    }
}

/// Pinhole camera intrinsics in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub f_u: f64,
    pub f_v: f64,
    pub skew: f64,
    pub u_c: f64,
    pub v_c: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    /// Default synthetic camera: 1280x960, f = 1700 px, centered, zero skew.
    /// The focal length is chosen so mirror 1's outer rim fits the image.
    pub fn default_synthetic() -> Self {
        CameraIntrinsics {
            f_u: 1700.0,
            f_v: 1700.0,
            skew: 0.0,
            u_c: 639.5,
            v_c: 479.5,
            width: 1280,
            height: 960,
        }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.f_u, self.skew, self.u_c, //
            0.0, self.f_v, self.v_c, //
            0.0, 0.0, 1.0,
        )
    }

    /// Closed-form inverse of the intrinsic matrix.
    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        let (fu, fv, s, uc, vc) = (self.f_u, self.f_v, self.skew, self.u_c, self.v_c);
        Matrix3::new(
            1.0 / fu,
            -s / (fu * fv),
            (s * vc - fv * uc) / (fu * fv),
            0.0,
            1.0 / fv,
            -vc / fv,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Project a point expressed in a frame whose +Z axis is the optical axis.
    /// Returns `None` when the depth normalizer is numerically singular.
    pub fn project(&self, p: &Vector3<f64>) -> Option<(f64, f64)> {
        if p.z.abs() < 1e-9 {
            return None;
        }
        let u = (self.f_u * p.x + self.skew * p.y) / p.z + self.u_c;
        let v = self.f_v * p.y / p.z + self.v_c;
        Some((u, v))
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }

    // `!(x > 0)` rather than `x <= 0`: NaN must fail validation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self) -> Result<(), ConfigError> {
        let inv = |m: String| Err(ConfigError::Invariant(m));
        if !(self.f_u > 0.0) {
            return inv("f_u must be positive".into());
        }
        if !(self.f_v > 0.0) {
            return inv("f_v must be positive".into());
        }
        if self.width == 0 || self.height == 0 {
            return inv("image dimensions must be positive".into());
        }
        if !(self.u_c >= 0.0 && self.u_c < self.width as f64) {
            return inv("u_c must lie inside the image".into());
        }
        if !(self.v_c >= 0.0 && self.v_c < self.height as f64) {
            return inv("v_c must lie inside the image".into());
        }
        Ok(())
    }
}

/// The six primary design parameters: focal separations, profile constants,
/// camera-to-virtual-camera distance, and system radius. Lengths in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignVector {
    pub c1: f64,
    pub c2: f64,
    pub k1: f64,
    pub k2: f64,
    pub d: f64,
    pub r_sys: f64,
}

impl DesignVector {
    pub fn new(c1: f64, c2: f64, k1: f64, k2: f64, d: f64, r_sys: f64) -> Self {
        DesignVector { c1, c2, k1, k2, d, r_sys }
    }

    /// Stereo baseline `c1 + c2 - d`: the separation of the two effective
    /// viewpoints along the axis.
    pub fn baseline(&self) -> f64 {
        self.c1 + self.c2 - self.d
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.c1, self.c2, self.k1, self.k2, self.d, self.r_sys]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        DesignVector::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    /// Checks the conical constraints (`c > 0`, `k > 2`) and positivity of
    /// `d` and `r_sys`, naming the offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("c1", self.c1 > 0.0, "must be positive"),
            ("c2", self.c2 > 0.0, "must be positive"),
            ("k1", self.k1 > 2.0, "must exceed 2"),
            ("k2", self.k2 > 2.0, "must exceed 2"),
            ("d", self.d > 0.0, "must be positive"),
            ("r_sys", self.r_sys > 0.0, "must be positive"),
        ];
        for (name, ok, msg) in fields {
            if !ok {
                return Err(ConfigError::Invariant(format!("{name} {msg}")));
            }
        }
        Ok(())
    }
}

/// Full rig description: design vector, camera hole and lens radii, material
/// constants for the mass model, and the camera intrinsics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigSpec {
    pub design: DesignVector,
    /// Camera-hole radius through mirror 2 (mm).
    pub r_cam: f64,
    /// Microlens radius (mm); informs the camera-hole sizing rule.
    pub r_lens: f64,
    /// Mirror shell wall thickness (mm).
    pub tau_m: f64,
    /// Mirror material density (g/cm^3).
    pub rho_mir: f64,
    /// Support tube material density (g/cm^3).
    pub rho_tub: f64,
    /// Camera plus lens mass (g).
    pub m_cam: f64,
    /// Support tube wall thickness (mm). Calibrated so the mass model
    /// reproduces the measured prototype weight; the support of the real rig
    /// is far heavier than a thin film.
    pub tube_wall: f64,
    pub camera: CameraIntrinsics,
}

pub const DEFAULT_R_LENS_MM: f64 = 7.0;
pub const DEFAULT_TAU_M_MM: f64 = 3.0;
pub const DEFAULT_RHO_MIR: f64 = 8.5;
pub const DEFAULT_RHO_TUB: f64 = 1.18;
pub const DEFAULT_M_CAM_G: f64 = 25.0;
pub const DEFAULT_TUBE_WALL_MM: f64 = 10.0;

impl RigSpec {
    /// Builds a validated spec from a design vector and camera-hole radius,
    /// with default material constants and the synthetic camera.
    pub fn new(design: DesignVector, r_cam: f64) -> Result<Self, ConfigError> {
        let spec = RigSpec {
            design,
            r_cam,
            r_lens: DEFAULT_R_LENS_MM,
            tau_m: DEFAULT_TAU_M_MM,
            rho_mir: DEFAULT_RHO_MIR,
            rho_tub: DEFAULT_RHO_TUB,
            m_cam: DEFAULT_M_CAM_G,
            tube_wall: DEFAULT_TUBE_WALL_MM,
            camera: CameraIntrinsics::default_synthetic(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The optimal 37 mm rig from the design study.
    pub fn big_rig() -> Self {
        RigSpec::new(
            DesignVector::new(123.49, 241.80, 5.73, 9.74, 233.68, 37.0),
            7.0,
        )
        .expect("big rig constants are valid")
    }

    /// The optimal 28 mm rig from the design study.
    pub fn small_rig() -> Self {
        RigSpec::new(
            DesignVector::new(104.59, 204.34, 6.88, 11.47, 200.00, 28.0),
            7.0,
        )
        .expect("small rig constants are valid")
    }

    /// Same constants and camera, different design vector.
    pub fn with_design(&self, design: DesignVector) -> Self {
        RigSpec { design, ..self.clone() }
    }

    pub fn c1(&self) -> f64 {
        self.design.c1
    }
    pub fn c2(&self) -> f64 {
        self.design.c2
    }
    pub fn k1(&self) -> f64 {
        self.design.k1
    }
    pub fn k2(&self) -> f64 {
        self.design.k2
    }
    pub fn d(&self) -> f64 {
        self.design.d
    }
    pub fn r_sys(&self) -> f64 {
        self.design.r_sys
    }

    /// Primary focus of mirror 1, at `(0, 0, c1)` in the camera frame.
    pub fn focus1(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, self.c1())
    }

    /// Primary focus of mirror 2, at `(0, 0, d - c2)`.
    pub fn focus2(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, self.d() - self.c2())
    }

    pub fn focus(&self, mirror: Mirror) -> Vector3<f64> {
        match mirror {
            Mirror::One => self.focus1(),
            Mirror::Two => self.focus2(),
        }
    }

    /// Virtual camera position `(0, 0, d)` created by the reflex mirror.
    pub fn virtual_camera(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, self.d())
    }

    // `!(x > 0)` rather than `x <= 0`: NaN must fail validation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.design.validate()?;
        let inv = |m: String| Err(ConfigError::Invariant(m));
        if !(self.r_cam > 0.0) {
            return inv("r_cam must be positive".into());
        }
        if self.r_cam >= self.r_sys() {
            return inv("r_cam must be smaller than r_sys".into());
        }
        if !(self.tau_m > 0.0 && self.rho_mir > 0.0 && self.rho_tub > 0.0) {
            return inv("material constants must be positive".into());
        }
        if !(self.m_cam >= 0.0 && self.r_lens >= 0.0 && self.tube_wall > 0.0) {
            return inv("mass-model constants must be non-negative".into());
        }
        self.camera.validate()
    }

    /// Derives both mirror surfaces: semi-axes, focus offsets, radial bounds
    /// and the elevation limits at those bounds. The reflex rim radius is not
    /// free: it is the radius where mirror 1 crosses the reflex plane z = d/2.
    pub fn derive_surfaces(&self) -> Result<(MirrorSurface, MirrorSurface), GeometryError> {
        let m1 = MirrorSurface::raw(Mirror::One, self.c1(), self.k1(), self.c1() / 2.0, self.focus1());
        let m2 = MirrorSurface::raw(
            Mirror::Two,
            self.c2(),
            self.k2(),
            self.d() - self.c2() / 2.0,
            self.focus2(),
        );

        // Reflex rim: mirror 1 must reach down to the reflex plane.
        let half_d = self.d() / 2.0;
        if half_d - m1.z0 < m1.a * (1.0 + 1e-12) {
            return Err(GeometryError::NoReflexIntersection);
        }
        let r_ref = m1.radius_on_sheet(half_d);
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(r_ref < self.r_sys()) {
            return Err(GeometryError::Singular(format!(
                "reflex rim radius {r_ref:.3} mm reaches past r_sys {:.3} mm",
                self.r_sys()
            )));
        }

        let mut m1 = m1;
        let mut m2 = m2;
        m1.r_min = r_ref;
        m1.r_max = self.r_sys();
        m2.r_min = self.r_cam;
        m2.r_max = self.r_sys();

        m1.theta_min = m1.elevation_at_radius(m1.r_min);
        m1.theta_max = m1.elevation_at_radius(m1.r_max);
        m2.theta_min = m2.elevation_at_radius(m2.r_max);
        m2.theta_max = m2.elevation_at_radius(m2.r_min);
        Ok((m1, m2))
    }

    pub fn surface(&self, mirror: Mirror) -> Result<MirrorSurface, GeometryError> {
        let (m1, m2) = self.derive_surfaces()?;
        Ok(match mirror {
            Mirror::One => m1,
            Mirror::Two => m2,
        })
    }

    /// Reflex-mirror rim radius, `f_r1(d/2)`.
    pub fn r_ref(&self) -> Result<f64, GeometryError> {
        Ok(self.derive_surfaces()?.0.r_min)
    }

    /// Canonical key=value rendering; the basis for the spec hash and for
    /// byte-stable provenance logging.
    pub fn canonical_string(&self) -> String {
        let d = &self.design;
        let c = &self.camera;
        format!(
            "c1_mm={:.9}\nc2_mm={:.9}\nd_mm={:.9}\nk1={:.9}\nk2={:.9}\nr_sys_mm={:.9}\n\
             r_cam_mm={:.9}\nr_lens_mm={:.9}\ntau_m_mm={:.9}\nrho_mir_g_cm3={:.9}\n\
             rho_tub_g_cm3={:.9}\nm_cam_g={:.9}\ntube_wall_mm={:.9}\nf_u_px={:.9}\nf_v_px={:.9}\n\
             skew={:.9}\nu_c_px={:.9}\nv_c_px={:.9}\nwidth_px={}\nheight_px={}\n",
            d.c1, d.c2, d.d, d.k1, d.k2, d.r_sys, self.r_cam, self.r_lens, self.tau_m,
            self.rho_mir, self.rho_tub, self.m_cam, self.tube_wall, c.f_u, c.f_v, c.skew,
            c.u_c, c.v_c, c.width, c.height
        )
    }

    /// 64-bit FNV-1a hash of the canonical rendering. Stable across runs and
    /// platforms; used for LUT headers and provenance log lines.
    pub fn spec_hash(&self) -> u64 {
        fnv1a64(self.canonical_string().as_bytes())
    }
}

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// One sheet of a hyperboloid of revolution, truncated to its reflective
/// annulus. Mirror 1 uses the upper sheet (`z = z0 + gamma`), mirror 2 the
/// lower one (`z = z0 - gamma`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorSurface {
    pub mirror: Mirror,
    /// Focal separation of this mirror (mm).
    pub c: f64,
    /// Profile constant (unitless, > 2).
    pub k: f64,
    pub a: f64,
    pub b: f64,
    /// Focus offset along Z from the camera origin (mm).
    pub z0: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// Elevation limits measured from the primary focus (rad).
    pub theta_min: f64,
    pub theta_max: f64,
    /// Primary focus position in the camera frame (mm).
    pub focus: Vector3<f64>,
}

impl MirrorSurface {
    fn raw(mirror: Mirror, c: f64, k: f64, z0: f64, focus: Vector3<f64>) -> Self {
        let a = c / 2.0 * ((k - 2.0) / k).sqrt();
        let b = c / 2.0 * (2.0 / k).sqrt();
        MirrorSurface {
            mirror,
            c,
            k,
            a,
            b,
            z0,
            r_min: 0.0,
            r_max: f64::INFINITY,
            theta_min: 0.0,
            theta_max: 0.0,
            focus,
        }
    }

    fn sheet_sign(&self) -> f64 {
        match self.mirror {
            Mirror::One => 1.0,
            Mirror::Two => -1.0,
        }
    }

    /// Height of the surface at radius `r`, ignoring radial bounds.
    pub fn height_unbounded(&self, r: f64) -> f64 {
        let gamma = self.a / self.b * (self.b * self.b + r * r).sqrt();
        self.z0 + self.sheet_sign() * gamma
    }

    /// `f_z`: height of the reflective surface at radius `r`, or `None`
    /// outside the radial bounds.
    pub fn height_at_radius(&self, r: f64) -> Option<f64> {
        let tol = 1e-9 * self.r_max.max(1.0);
        if r < self.r_min - tol || r > self.r_max + tol || !r.is_finite() {
            return None;
        }
        Some(self.height_unbounded(r))
    }

    /// Radius on this sheet at height `z`, ignoring the outer bound.
    /// Caller must ensure `z` is on the sheet.
    fn radius_on_sheet(&self, z: f64) -> f64 {
        let t = (z - self.z0) / self.a;
        self.b * (t * t - 1.0).max(0.0).sqrt()
    }

    /// `f_r`: non-negative radius of the surface at height `z`. `None` when
    /// `z` misses this mirror's sheet or lands past the outer rim.
    pub fn radius_at_height(&self, z: f64) -> Option<f64> {
        if !z.is_finite() {
            return None;
        }
        let s = self.sheet_sign();
        let tol = 1e-9 * self.a.max(1.0);
        if s * (z - self.z0) < self.a - tol {
            return None;
        }
        let r = self.radius_on_sheet(z);
        let rtol = 1e-9 * self.r_max.max(1.0);
        if r > self.r_max + rtol {
            return None;
        }
        Some(r)
    }

    /// Elevation (from the primary focus) of the surface point at radius `r`.
    pub fn elevation_at_radius(&self, r: f64) -> f64 {
        (self.height_unbounded(r) - self.focus.z).atan2(r)
    }

    /// Distance from the primary focus to the surface along elevation
    /// `theta`. Closed form from the line-hyperboloid intersection; the
    /// denominator vanishes at the asymptotic direction.
    pub fn focal_chord(&self, theta: f64) -> Result<f64, GeometryError> {
        let root = (self.k * (self.k - 2.0)).sqrt();
        let denom = root - self.sheet_sign() * self.k * theta.sin();
        if denom.abs() < 1e-12 {
            return Err(GeometryError::GrazingRay(denom));
        }
        Ok(self.c / denom)
    }

    /// Surface point at (elevation, azimuth) seen from the primary focus.
    pub fn point_at_angles(&self, theta: f64, psi: f64) -> Result<Vector3<f64>, GeometryError> {
        let s = self.focal_chord(theta)?;
        if s <= 0.0 {
            return Err(GeometryError::GrazingRay(s));
        }
        let dir = Vector3::new(
            theta.cos() * psi.cos(),
            theta.cos() * psi.sin(),
            theta.sin(),
        );
        Ok(self.focus + s * dir)
    }

    /// Signed residual of the hyperboloid equation at `(r, z)`; zero on the
    /// surface.
    pub fn residual(&self, r: f64, z: f64) -> f64 {
        let dz = (z - self.z0) / self.a;
        let dr = r / self.b;
        dz * dz - dr * dr - 1.0
    }

    pub fn residual_at(&self, p: &Vector3<f64>) -> f64 {
        self.residual((p.x * p.x + p.y * p.y).sqrt(), p.z)
    }

    pub fn theta_span(&self) -> f64 {
        self.theta_max - self.theta_min
    }

    pub fn contains_elevation(&self, theta: f64) -> bool {
        let tol = 1e-9;
        theta >= self.theta_min - tol && theta <= self.theta_max + tol
    }
}

const REQUIRED_KEYS: &[&str] = &[
    "c1_mm", "c2_mm", "d_mm", "k1", "k2", "r_sys_mm", "r_cam_mm", "f_u_px", "f_v_px", "skew",
    "u_c_px", "v_c_px", "width_px", "height_px",
];

const OPTIONAL_KEYS: &[&str] = &[
    "r_lens_mm",
    "tau_m_mm",
    "rho_mir_g_cm3",
    "rho_tub_g_cm3",
    "m_cam_g",
];

/// Parses the flat `key = value` rig format. `#` starts a comment; required
/// keys are the geometry and camera entries, material constants default.
pub fn parse_spec(text: &str) -> Result<RigSpec, ConfigError> {
    use std::collections::HashMap;
    let mut values: HashMap<String, f64> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, val)) = content.split_once('=') else {
            return Err(ConfigError::Parse { line, text: raw.trim().to_string() });
        };
        let key = key.trim().to_string();
        if !REQUIRED_KEYS.contains(&key.as_str()) && !OPTIONAL_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { line, key });
        }
        let val: f64 = val
            .trim()
            .parse()
            .map_err(|_| ConfigError::Parse { line, text: raw.trim().to_string() })?;
        values.insert(key, val);
    }

    let mut get = |key: &'static str| -> Result<f64, ConfigError> {
        values.remove(key).ok_or(ConfigError::MissingKey(key))
    };

    let design = DesignVector::new(
        get("c1_mm")?,
        get("c2_mm")?,
        get("k1")?,
        get("k2")?,
        get("d_mm")?,
        get("r_sys_mm")?,
    );
    let r_cam = get("r_cam_mm")?;
    let camera = CameraIntrinsics {
        f_u: get("f_u_px")?,
        f_v: get("f_v_px")?,
        skew: get("skew")?,
        u_c: get("u_c_px")?,
        v_c: get("v_c_px")?,
        width: get("width_px")? as usize,
        height: get("height_px")? as usize,
    };

    let spec = RigSpec {
        design,
        r_cam,
        r_lens: values.remove("r_lens_mm").unwrap_or(DEFAULT_R_LENS_MM),
        tau_m: values.remove("tau_m_mm").unwrap_or(DEFAULT_TAU_M_MM),
        rho_mir: values.remove("rho_mir_g_cm3").unwrap_or(DEFAULT_RHO_MIR),
        rho_tub: values.remove("rho_tub_g_cm3").unwrap_or(DEFAULT_RHO_TUB),
        m_cam: values.remove("m_cam_g").unwrap_or(DEFAULT_M_CAM_G),
        tube_wall: DEFAULT_TUBE_WALL_MM,
        camera,
    };
    spec.validate()?;
    Ok(spec)
}

/// Loads and validates a rig config file.
pub fn load_spec(path: impl AsRef<Path>) -> Result<RigSpec, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_spec(&text)
}

/// Renders a spec back to the config format (material constants included).
pub fn render_spec(spec: &RigSpec) -> String {
    let d = &spec.design;
    let c = &spec.camera;
    format!(
        "# rig geometry (mm)\nc1_mm = {}\nc2_mm = {}\nd_mm = {}\nk1 = {}\nk2 = {}\n\
         r_sys_mm = {}\nr_cam_mm = {}\n\n# materials\nr_lens_mm = {}\ntau_m_mm = {}\n\
         rho_mir_g_cm3 = {}\nrho_tub_g_cm3 = {}\nm_cam_g = {}\n\n# camera\nf_u_px = {}\n\
         f_v_px = {}\nskew = {}\nu_c_px = {}\nv_c_px = {}\nwidth_px = {}\nheight_px = {}\n",
        d.c1, d.c2, d.d, d.k1, d.k2, d.r_sys, spec.r_cam, spec.r_lens, spec.tau_m,
        spec.rho_mir, spec.rho_tub, spec.m_cam, c.f_u, c.f_v, c.skew, c.u_c, c.v_c,
        c.width, c.height
    )
}
