//! Field-of-view and stereo-ROI analysis, catadioptric spatial resolution,
//! and the rig size/mass model.

use serde::Serialize;

use crate::backprojection::{backproject, ViewRay};
use crate::error::GeometryError;
use crate::projection::RigGeometry;
use crate::rig::{Mirror, PixelPoint, RigSpec};
use crate::triangulation::triangulate_naive;

/// Planar apex angle of a one-steradian cone, used to reduce solid-angle
/// resolution to a 2D figure.
pub const THETA_ONE_STERADIAN_RAD: f64 = 1.14390752211;

/// Vertical field-of-view summary. Angles in radians.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FovReport {
    pub theta1_max: f64,
    pub theta1_min: f64,
    /// Mirror-2 upper elevation limit at the camera-hole rim.
    pub theta2_max: f64,
    pub theta2_min: f64,
    /// Mirror-2 upper bound ignoring the camera hole: rays steeper than this
    /// are occluded by mirror 1's outer rim.
    pub theta2_max_unclipped: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Overall system vFOV using the camera-hole-limited upper bound.
    pub alpha_sys: f64,
    /// Overall system vFOV with the hole ignored.
    pub alpha_sys_unclipped: f64,
    /// Common (overlapping) vFOV where stereo is possible.
    pub alpha_sroi: f64,
    /// Smallest camera FOV that images mirror 1 out to its rim.
    pub alpha_cam_min: f64,
    /// Largest camera FOV that still fits through the camera hole.
    pub alpha_cam_max: f64,
    /// False when the camera FOV inequality cannot be met.
    pub camera_feasible: bool,
}

/// Computes all vFOV angles from the derived elevation limits.
pub fn fov_report(geom: &RigGeometry) -> FovReport {
    let s1 = geom.surface(Mirror::One);
    let s2 = geom.surface(Mirror::Two);
    let spec = geom.spec();

    let rim1_z = s1.height_unbounded(s1.r_max);
    let theta2_max_unclipped = (rim1_z - spec.focus2().z).atan2(s1.r_max);

    let alpha_cam_min = 2.0 * spec.r_sys().atan2(rim1_z);
    let hole_z = s2.height_unbounded(spec.r_cam);
    let alpha_cam_max = 2.0 * spec.r_cam.atan2(hole_z);

    let theta_sys_max = s1.theta_max.max(s2.theta_max);
    let theta_sys_min = s1.theta_min.min(s2.theta_min);
    FovReport {
        theta1_max: s1.theta_max,
        theta1_min: s1.theta_min,
        theta2_max: s2.theta_max,
        theta2_min: s2.theta_min,
        theta2_max_unclipped,
        alpha1: s1.theta_span(),
        alpha2: s2.theta_span(),
        alpha_sys: theta_sys_max - theta_sys_min,
        alpha_sys_unclipped: s1.theta_max.max(theta2_max_unclipped) - theta_sys_min,
        alpha_sroi: s1.theta_max.min(s2.theta_max) - s1.theta_min.max(s2.theta_min),
        alpha_cam_min,
        alpha_cam_max,
        camera_feasible: alpha_cam_min <= alpha_cam_max,
    }
}

/// System elevation limits actually imaged: used by the panorama cylinder.
pub fn system_elevation_limits(geom: &RigGeometry) -> (f64, f64) {
    let s1 = geom.surface(Mirror::One);
    let s2 = geom.surface(Mirror::Two);
    (s1.theta_min.min(s2.theta_min), s1.theta_max.max(s2.theta_max))
}

/// Near-bound vertices and the far bound of the stereo region of interest,
/// as (horizontal range, height) pairs in mm.
#[derive(Debug, Clone, Serialize)]
pub struct StereoRoi {
    pub p_high: (f64, f64),
    pub p_mid: (f64, f64),
    pub p_low: (f64, f64),
    /// Triangulated points at one pixel of disparity across the common band.
    pub far_bound: Vec<(f64, f64)>,
}

fn vertex(geom: &RigGeometry, theta1: f64, theta2: f64) -> Result<(f64, f64), GeometryError> {
    let ray1 = ViewRay::from_angles(Mirror::One, theta1, 0.0, geom.spec().focus1());
    let ray2 = ViewRay::from_angles(Mirror::Two, theta2, 0.0, geom.spec().focus2());
    let p = triangulate_naive(&ray1, &ray2)?.position;
    Ok(((p.x * p.x + p.y * p.y).sqrt(), p.z))
}

/// Builds the stereo ROI. Errors with `EmptyRoi` when the two vertical FOVs
/// do not overlap, and propagates a parallel-ray failure when a near vertex
/// degenerates to infinity.
pub fn stereo_roi(geom: &RigGeometry) -> Result<StereoRoi, GeometryError> {
    let fov = fov_report(geom);
    if fov.alpha_sroi <= 0.0 {
        return Err(GeometryError::EmptyRoi(fov.alpha_sroi.to_degrees()));
    }
    let p_high = vertex(geom, fov.theta1_max, fov.theta2_max)?;
    let p_mid = vertex(geom, fov.theta1_min, fov.theta2_max)?;
    let p_low = vertex(geom, fov.theta1_min, fov.theta2_min)?;

    let theta_lo = fov.theta1_min.max(fov.theta2_min) + 1e-6;
    let theta_hi = fov.theta1_max.min(fov.theta2_max) - 1e-6;
    let mut far_bound = Vec::new();
    let samples = 33;
    for i in 0..samples {
        let theta1 = theta_lo + (theta_hi - theta_lo) * i as f64 / (samples - 1) as f64;
        if let Some(p) = far_point_at_one_pixel(geom, theta1) {
            far_bound.push(p);
        }
    }
    Ok(StereoRoi { p_high, p_mid, p_low, far_bound })
}

/// Far-bound point for the mirror-1 ray at `theta1`: the mirror-2 pixel is
/// displaced one pixel inward from the parallel-ray radius.
fn far_point_at_one_pixel(geom: &RigGeometry, theta1: f64) -> Option<(f64, f64)> {
    let cam = geom.spec().camera;
    let m2_parallel = geom.project_from_angles(theta1, 0.0, Mirror::Two)?;
    let r = geom.pixel_radius(&m2_parallel) - 1.0;
    let m2 = PixelPoint::image(cam.u_c + r, cam.v_c);
    let ray2 = backproject(geom, &m2, Mirror::Two)?;
    let ray1 = ViewRay::from_angles(Mirror::One, theta1, 0.0, geom.spec().focus1());
    let p = triangulate_naive(&ray1, &ray2).ok()?.position;
    Some(((p.x * p.x + p.y * p.y).sqrt(), p.z))
}

/// Catadioptric spatial resolution at one elevation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolutionSample {
    pub theta: f64,
    /// Image area per unit solid angle, in units of focal-length^2/sr.
    pub eta: f64,
    /// Same quantity for a bare perspective camera looking at that surface
    /// point; the catadioptric value approaches it as the mirror flattens.
    pub eta_cam: f64,
    /// 2D reduction of `eta` through the one-steradian cone angle.
    pub eta_2d: f64,
}

/// Spatial resolution of mirror `mirror` toward elevation `theta`.
pub fn spatial_resolution(
    geom: &RigGeometry,
    mirror: Mirror,
    theta: f64,
) -> Result<ResolutionSample, GeometryError> {
    let s = geom.surface(mirror);
    if !s.contains_elevation(theta) {
        return Err(GeometryError::ElevationOutOfRange {
            mirror: mirror.index(),
            theta_deg: theta.to_degrees(),
            min_deg: s.theta_min.to_degrees(),
            max_deg: s.theta_max.to_degrees(),
        });
    }
    let p = s.point_at_angles(theta, 0.0)?;
    let (r, z) = (p.x, p.z);
    let f = geom.spec().camera.f_u;
    let spec = geom.spec();
    let (eta_cam, eta) = match mirror {
        Mirror::One => {
            let eta_cam = f * f * ((r * r + z * z).sqrt() / z).powi(3);
            let bracket = (r * r + (spec.c1() - z).powi(2)) / (r * r + z * z);
            (eta_cam, bracket * eta_cam)
        }
        Mirror::Two => {
            let depth = spec.d() - z;
            let eta_cam = f * f * ((r * r + depth * depth).sqrt() / depth).powi(3);
            let bracket = (r * r + (spec.c2() - spec.d() + z).powi(2)) / (r * r + depth * depth);
            (eta_cam, bracket * eta_cam)
        }
    };
    let eta_2d = 2.0 * (eta / std::f64::consts::PI).sqrt() / THETA_ONE_STERADIAN_RAD;
    Ok(ResolutionSample { theta, eta, eta_cam, eta_2d })
}

/// Evenly spaced resolution samples across the mirror's elevation span.
pub fn resolution_profile(
    geom: &RigGeometry,
    mirror: Mirror,
    samples: usize,
) -> Vec<ResolutionSample> {
    let s = geom.surface(mirror);
    let span = s.theta_span();
    (0..samples)
        .filter_map(|i| {
            let theta = s.theta_min + span * (i as f64 + 0.5) / samples as f64;
            spatial_resolution(geom, mirror, theta).ok()
        })
        .collect()
}

/// Imaging ratio: radial pixel-band height of the stereo ROI on mirror 1's
/// annulus over the same band on mirror 2's.
pub fn imaging_ratio(geom: &RigGeometry) -> Result<f64, GeometryError> {
    let fov = fov_report(geom);
    if fov.alpha_sroi <= 0.0 {
        return Err(GeometryError::EmptyRoi(fov.alpha_sroi.to_degrees()));
    }
    let lo = fov.theta1_min.max(fov.theta2_min);
    let hi = fov.theta1_max.min(fov.theta2_max);
    let band = |mirror: Mirror| -> Result<f64, GeometryError> {
        let at = |theta: f64| -> Result<f64, GeometryError> {
            let m = geom
                .project_from_angles(theta, 0.0, mirror)
                .ok_or_else(|| GeometryError::Singular("SROI rim projection".into()))?;
            Ok(geom.pixel_radius(&m))
        };
        Ok((at(hi)? - at(lo)?).abs())
    };
    Ok(band(Mirror::One)? / band(Mirror::Two)?)
}

/// Composite Simpson quadrature with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n.is_multiple_of(2) { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Default Simpson interval count for shell volumes.
pub const VOLUME_QUADRATURE_INTERVALS: usize = 2048;

/// Size and mass summary. Volumes in mm^3, masses in g, height in mm.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SizeMassReport {
    pub h_sys: f64,
    pub m_sys: f64,
    pub m_mirrors: f64,
    pub m_tube: f64,
    pub m_cam: f64,
    pub v_mirror1: f64,
    pub v_mirror2: f64,
    pub v_reflex: f64,
    pub v_tube: f64,
}

/// Ring cross-section area of a shell of wall `tau` at outer radius `r`.
fn ring_area(r: f64, tau: f64) -> f64 {
    let inner = (r - tau).max(0.0);
    std::f64::consts::PI * (r * r - inner * inner)
}

pub fn size_mass(geom: &RigGeometry) -> SizeMassReport {
    size_mass_with_intervals(geom, VOLUME_QUADRATURE_INTERVALS)
}

/// Height from the mirror rims; shell volumes by ring integration of the
/// radius profile along z; the reflex mirror as a solid disk; the support
/// as a tube of height `h_sys`.
pub fn size_mass_with_intervals(geom: &RigGeometry, intervals: usize) -> SizeMassReport {
    let spec = geom.spec();
    let s1 = geom.surface(Mirror::One);
    let s2 = geom.surface(Mirror::Two);
    let tau = spec.tau_m;

    let z_top = s1.height_unbounded(s1.r_max);
    let z_bottom = s2.height_unbounded(s2.r_max);
    let h_sys = z_top - z_bottom;

    let z1_lo = s1.height_unbounded(s1.r_min);
    let v_mirror1 = simpson(
        |z| ring_area(s1.radius_at_height(z).unwrap_or(s1.r_max), tau),
        z1_lo,
        z_top,
        intervals,
    );
    // Mirror 2 descends with radius: its z span runs rim-to-hole.
    let z2_hi = s2.height_unbounded(s2.r_min);
    let v_mirror2 = simpson(
        |z| ring_area(s2.radius_at_height(z).unwrap_or(s2.r_max), tau),
        z_bottom,
        z2_hi,
        intervals,
    );
    let v_reflex = tau * std::f64::consts::PI * s1.r_min * s1.r_min;

    let wall = spec.tube_wall.min(spec.r_sys());
    let r_out = spec.r_sys();
    let v_tube = std::f64::consts::PI * (r_out * r_out - (r_out - wall).powi(2)) * h_sys;

    let g_per_mm3 = 1e-3;
    let m_mirrors = (v_mirror1 + v_mirror2 + v_reflex) * spec.rho_mir * g_per_mm3;
    let m_tube = v_tube * spec.rho_tub * g_per_mm3;
    SizeMassReport {
        h_sys,
        m_sys: spec.m_cam + m_tube + m_mirrors,
        m_mirrors,
        m_tube,
        m_cam: spec.m_cam,
        v_mirror1,
        v_mirror2,
        v_reflex,
        v_tube,
    }
}

/// Result of refitting mirror 1 for a new profile constant while holding the
/// common vFOV and the camera FOV fixed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RefittedMirror {
    pub k1: f64,
    pub c1: f64,
    pub r_sys: f64,
    pub baseline: f64,
}

/// For `k1_new`, finds the focal separation `c1` and system radius that keep
/// the base rig's common vFOV and camera FOV unchanged (mirror 2 and `d`
/// fixed). Exposes the inverse relation between profile flatness and the
/// attainable baseline.
pub fn refit_mirror1(spec: &RigSpec, k1_new: f64) -> Result<RefittedMirror, GeometryError> {
    let geom = RigGeometry::new(spec)?;
    let s1 = geom.surface(Mirror::One);
    let s2 = geom.surface(Mirror::Two);
    let rim_z = s1.height_unbounded(s1.r_max);
    let half_cam = spec.r_sys().atan2(rim_z);
    let alpha_sroi = s1.theta_max - s2.theta_min;
    let f2z = spec.focus2().z;

    // Residual of the mirror-1 hyperboloid through the rim implied by the
    // two preserved angles, as a function of the candidate system radius.
    let residual = |r: f64| -> f64 {
        let z_rim = r / half_cam.tan();
        let theta2_min = (s2.height_unbounded(r) - f2z).atan2(r);
        let theta1_max = alpha_sroi + theta2_min;
        let c1 = z_rim - r * theta1_max.tan();
        let lhs = (z_rim - c1 / 2.0).powi(2);
        let rhs = c1 * c1 / 4.0 * ((k1_new - 2.0) / k1_new) + r * r * (k1_new - 2.0) / 2.0;
        lhs - rhs
    };

    // Bracket by scanning, then bisect.
    let (mut lo, mut hi) = (f64::NAN, f64::NAN);
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=400 {
        let r = spec.r_cam + (400.0 - spec.r_cam) * i as f64 / 400.0;
        let val = residual(r);
        if !val.is_finite() {
            prev = None;
            continue;
        }
        if let Some((rp, vp)) = prev {
            if vp * val <= 0.0 {
                lo = rp;
                hi = r;
                break;
            }
        }
        prev = Some((r, val));
    }
    if !lo.is_finite() {
        return Err(GeometryError::Singular(format!(
            "no system radius preserves the FOV targets for k1 = {k1_new}"
        )));
    }
    let mut flo = residual(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = residual(mid);
        if flo * fm <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    let r_sys = 0.5 * (lo + hi);
    let z_rim = r_sys / half_cam.tan();
    let theta2_min = (s2.height_unbounded(r_sys) - f2z).atan2(r_sys);
    let c1 = z_rim - r_sys * (alpha_sroi + theta2_min).tan();
    Ok(RefittedMirror {
        k1: k1_new,
        c1,
        r_sys,
        baseline: c1 + spec.c2() - spec.d(),
    })
}

/// Baseline-vs-k1 data series from [`refit_mirror1`].
pub fn k1_baseline_series(spec: &RigSpec, k1_values: &[f64]) -> Vec<RefittedMirror> {
    k1_values
        .iter()
        .filter_map(|&k1| refit_mirror1(spec, k1).ok())
        .collect()
}

/// System radius required for mirror 1 to span vFOV `alpha1` at profile
/// constant `k1`, holding `c1` and `d` fixed (the lower limit stays at the
/// reflex rim). `None` when the target is unreachable.
pub fn r_sys_for_alpha1(spec: &RigSpec, k1: f64, alpha1: f64) -> Option<f64> {
    let mut probe = spec.clone();
    probe.design.k1 = k1;
    probe.design.r_sys = 1e4; // bounds wide open; only the profile matters here
    let (m1, _) = probe.derive_surfaces().ok()?;
    let theta_min = m1.elevation_at_radius(m1.r_min);
    let span_at = |r: f64| m1.elevation_at_radius(r) - theta_min;
    let (mut lo, mut hi) = (m1.r_min, 2000.0);
    if span_at(hi) < alpha1 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if span_at(mid) < alpha1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
