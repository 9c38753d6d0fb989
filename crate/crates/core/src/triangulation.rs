//! Range recovery from omnistereo correspondences: coplanar-ray intersection,
//! the common-perpendicular midpoint for skew rays, and first-order Gaussian
//! uncertainty propagation.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::backprojection::{backproject, ViewRay};
use crate::error::GeometryError;
use crate::projection::RigGeometry;
use crate::rig::{Mirror, PixelPoint};

/// Which estimator produced a triangulated point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TriangulationMethod {
    Naive,
    Midpoint,
}

/// Triangulated 3D point in the camera frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangulatedPoint {
    pub position: Vector3<f64>,
    /// 3x3 covariance (mm^2); zero unless propagated.
    pub covariance: Matrix3<f64>,
    pub method: TriangulationMethod,
    /// Length of the common-perpendicular segment between the rays (mm);
    /// zero for the coplanar intersection.
    pub gap: f64,
    pub source: Option<(PixelPoint, PixelPoint)>,
}

const AZIMUTH_TOL: f64 = 1e-6;

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

/// Intersects two coplanar view rays. The horizontal range follows from the
/// baseline between the anchors and the two elevations; the height is taken
/// along ray 1 (elevation measured upward from its focus).
pub fn triangulate_naive(
    ray1: &ViewRay,
    ray2: &ViewRay,
) -> Result<TriangulatedPoint, GeometryError> {
    let dpsi = circular_distance(ray1.psi, ray2.psi);
    if dpsi > AZIMUTH_TOL {
        return Err(GeometryError::AzimuthMismatch(dpsi));
    }
    let baseline = (ray1.anchor.z - ray2.anchor.z).abs();
    let sin_diff = (ray1.theta - ray2.theta).sin();
    if sin_diff.abs() < 1e-12 {
        return Err(GeometryError::ParallelRays);
    }
    let rho = (baseline * ray1.theta.cos() * ray2.theta.cos() / sin_diff).abs();
    if !rho.is_finite() {
        return Err(GeometryError::ParallelRays);
    }
    let psi = ray1.psi;
    let z = ray1.anchor.z + rho * ray1.theta.tan();
    Ok(TriangulatedPoint {
        position: Vector3::new(rho * psi.cos(), rho * psi.sin(), z),
        covariance: Matrix3::zeros(),
        method: TriangulationMethod::Naive,
        gap: 0.0,
        source: None,
    })
}

/// Midpoint of the common perpendicular between two (possibly skew) rays.
pub fn triangulate_midpoint_rays(
    ray1: &ViewRay,
    ray2: &ViewRay,
) -> Result<TriangulatedPoint, GeometryError> {
    let v1 = ray1.v;
    let v2 = ray2.v;
    let cross = v1.cross(&v2);
    let cross_norm = cross.norm();
    if cross_norm < 1e-12 * v1.norm() * v2.norm() {
        return Err(GeometryError::ParallelRays);
    }
    let perp = cross / cross_norm;
    let m = Matrix3::from_columns(&[v1, -v2, perp]);
    let rhs = ray2.anchor - ray1.anchor;
    let lambda = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| GeometryError::Singular("common-perpendicular system".into()))?;
    let (g1, g2, perp_len) = (lambda[0], lambda[1], lambda[2]);
    if g1 <= 0.0 || g2 <= 0.0 {
        return Err(GeometryError::BehindViewpoint(g1, g2));
    }
    let position = ray1.anchor + g1 * v1 + 0.5 * perp_len * perp;
    Ok(TriangulatedPoint {
        position,
        covariance: Matrix3::zeros(),
        method: TriangulationMethod::Midpoint,
        gap: perp_len.abs(),
        source: None,
    })
}

fn lift_or_invalid(
    geom: &RigGeometry,
    m: &PixelPoint,
    mirror: Mirror,
) -> Result<ViewRay, GeometryError> {
    backproject(geom, m, mirror).ok_or_else(|| {
        GeometryError::InvalidPixel(format!(
            "({:.2}, {:.2}) is outside mirror {mirror}'s image annulus",
            m.u, m.v
        ))
    })
}

/// Midpoint triangulation of an image-frame correspondence: `m1` lifts via
/// mirror 1, `m2` via mirror 2.
pub fn triangulate_midpoint(
    geom: &RigGeometry,
    m1: &PixelPoint,
    m2: &PixelPoint,
) -> Result<TriangulatedPoint, GeometryError> {
    let ray1 = lift_or_invalid(geom, m1, Mirror::One)?;
    let ray2 = lift_or_invalid(geom, m2, Mirror::Two)?;
    let mut point = triangulate_midpoint_rays(&ray1, &ray2)?;
    point.source = Some((*m1, *m2));
    Ok(point)
}

/// Default central-difference step for the triangulation Jacobian (px).
pub const JACOBIAN_STEP_PX: f64 = 0.05;

/// 3x4 Jacobian of the midpoint position with respect to the four pixel
/// coordinates `(u1, v1, u2, v2)` by central finite differences.
pub fn triangulation_jacobian(
    geom: &RigGeometry,
    m1: &PixelPoint,
    m2: &PixelPoint,
    step_px: f64,
) -> Result<[Vector3<f64>; 4], GeometryError> {
    let eval = |du1: f64, dv1: f64, du2: f64, dv2: f64| -> Result<Vector3<f64>, GeometryError> {
        let p1 = PixelPoint::new(m1.u + du1, m1.v + dv1, m1.frame);
        let p2 = PixelPoint::new(m2.u + du2, m2.v + dv2, m2.frame);
        Ok(triangulate_midpoint(geom, &p1, &p2)?.position)
    };
    let h = step_px;
    let cols = [
        (eval(h, 0.0, 0.0, 0.0)? - eval(-h, 0.0, 0.0, 0.0)?) / (2.0 * h),
        (eval(0.0, h, 0.0, 0.0)? - eval(0.0, -h, 0.0, 0.0)?) / (2.0 * h),
        (eval(0.0, 0.0, h, 0.0)? - eval(0.0, 0.0, -h, 0.0)?) / (2.0 * h),
        (eval(0.0, 0.0, 0.0, h)? - eval(0.0, 0.0, 0.0, -h)?) / (2.0 * h),
    ];
    for c in &cols {
        if !(c.x.is_finite() && c.y.is_finite() && c.z.is_finite()) {
            return Err(GeometryError::Singular("non-finite Jacobian".into()));
        }
    }
    Ok(cols)
}

/// First-order covariance of the triangulated point for i.i.d. pixel noise
/// of standard deviation `sigma_px`: `J (sigma^2 I) J^T`.
pub fn propagate_uncertainty(
    geom: &RigGeometry,
    m1: &PixelPoint,
    m2: &PixelPoint,
    sigma_px: f64,
) -> Result<Matrix3<f64>, GeometryError> {
    propagate_uncertainty_with_step(geom, m1, m2, sigma_px, JACOBIAN_STEP_PX)
}

pub fn propagate_uncertainty_with_step(
    geom: &RigGeometry,
    m1: &PixelPoint,
    m2: &PixelPoint,
    sigma_px: f64,
    step_px: f64,
) -> Result<Matrix3<f64>, GeometryError> {
    triangulate_midpoint(geom, m1, m2)?;
    let cols = triangulation_jacobian(geom, m1, m2, step_px)?;
    let mut sigma = Matrix3::zeros();
    for c in &cols {
        sigma += c * c.transpose();
    }
    sigma *= sigma_px * sigma_px;
    // Symmetrize against rounding.
    Ok(0.5 * (sigma + sigma.transpose()))
}

/// One row of the disparity-to-range table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RangeSample {
    pub disparity_px: u32,
    pub rho_mm: f64,
    /// Range drop to the next integer disparity; NaN on the last row.
    pub delta_rho_mm: f64,
}

/// Horizontal-range variation against integer pixel disparity.
///
/// Along the equatorial azimuth the mirror-1 pixel of an infinitely far point
/// is fixed; its mirror-2 pixel slides inward from the parallel-ray radius as
/// the point approaches. Disparity is that radial offset in whole pixels.
pub fn range_sweep(geom: &RigGeometry, max_disparity: u32) -> Vec<RangeSample> {
    let cam = geom.spec().camera;
    let ray1 = ViewRay::from_angles(Mirror::One, 0.0, 0.0, geom.spec().focus1());
    // Parallel-ray (infinite range) pixel radius on mirror 2.
    let Some(m2_inf) = geom.project_from_angles(0.0, 0.0, Mirror::Two) else {
        return Vec::new();
    };
    let r_inf = geom.pixel_radius(&m2_inf);
    let (lo2, _) = geom.image_radial_bounds(Mirror::Two);

    let mut rows: Vec<RangeSample> = Vec::new();
    for disparity in 1..=max_disparity {
        let r = r_inf - disparity as f64;
        if r < lo2 {
            break;
        }
        let m2 = PixelPoint::image(cam.u_c + r, cam.v_c);
        let Some(ray2) = backproject(geom, &m2, Mirror::Two) else {
            break;
        };
        let Ok(point) = triangulate_naive(&ray1, &ray2) else {
            break;
        };
        let rho = (point.position.x.powi(2) + point.position.y.powi(2)).sqrt();
        rows.push(RangeSample { disparity_px: disparity, rho_mm: rho, delta_rho_mm: f64::NAN });
    }
    for i in 0..rows.len().saturating_sub(1) {
        rows[i].delta_rho_mm = rows[i].rho_mm - rows[i + 1].rho_mm;
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rig::RigSpec;
    use approx::assert_relative_eq;

    fn big() -> RigGeometry {
        RigGeometry::new(&RigSpec::big_rig()).unwrap()
    }

    #[test]
    fn symmetric_crossing_halves_the_baseline() {
        let g = big();
        let spec = g.spec();
        let down = (-45.0_f64).to_radians();
        let up = 45.0_f64.to_radians();
        let ray1 = ViewRay::from_angles(Mirror::One, down, 0.0, spec.focus1());
        let ray2 = ViewRay::from_angles(Mirror::Two, up, 0.0, spec.focus2());
        let p = triangulate_naive(&ray1, &ray2).unwrap();
        // b = 131.61 mm: crossing at rho = b/2, half the baseline below F1.
        assert_relative_eq!(p.position.x, 65.805, epsilon = 1e-9);
        assert_relative_eq!(p.position.y, 0.0, epsilon = 1e-12);
        assert_relative_eq!(p.position.z, spec.c1() - 65.805, epsilon = 1e-9);
    }

    #[test]
    fn equal_elevations_never_intersect() {
        let g = big();
        let th = 10.0_f64.to_radians();
        let ray1 = ViewRay::from_angles(Mirror::One, th, 0.0, g.spec().focus1());
        let ray2 = ViewRay::from_angles(Mirror::Two, th, 0.0, g.spec().focus2());
        assert!(matches!(
            triangulate_naive(&ray1, &ray2),
            Err(GeometryError::ParallelRays)
        ));
    }

    #[test]
    fn different_azimuths_are_not_coplanar() {
        let g = big();
        let ray1 = ViewRay::from_angles(Mirror::One, 0.1, 0.0, g.spec().focus1());
        let ray2 = ViewRay::from_angles(Mirror::Two, 0.3, 0.01, g.spec().focus2());
        assert!(matches!(
            triangulate_naive(&ray1, &ray2),
            Err(GeometryError::AzimuthMismatch(_))
        ));
    }

    #[test]
    fn noiseless_midpoint_recovers_the_point() {
        let g = big();
        let p = Vector3::new(500.0, 200.0, 30.0);
        let m1 = g.project(&p, Mirror::One).unwrap();
        let m2 = g.project(&p, Mirror::Two).unwrap();
        let t = triangulate_midpoint(&g, &m1, &m2).unwrap();
        assert!((t.position - p).norm() < 1e-6 * p.norm());
        assert!(t.gap < 1e-9);
        assert_eq!(t.method, TriangulationMethod::Midpoint);
    }

    /// Independent oracle: closest points by unconstrained least squares on
    /// the two ray parameters (2x2 normal equations), midpoint of the two.
    fn midpoint_least_squares(r1: &ViewRay, r2: &ViewRay) -> Vector3<f64> {
        let (v1, v2) = (r1.v, r2.v);
        let w = r2.anchor - r1.anchor;
        let (a, b, c) = (v1.dot(&v1), v1.dot(&v2), v2.dot(&v2));
        let det = a * c - b * b;
        let t1 = (c * v1.dot(&w) - b * v2.dot(&w)) / det;
        let t2 = (b * v1.dot(&w) - a * v2.dot(&w)) / det;
        let g1 = r1.anchor + t1 * v1;
        let g2 = r2.anchor + t2 * v2;
        0.5 * (g1 + g2)
    }

    #[test]
    fn skewed_pair_matches_least_squares_oracle() {
        let g = big();
        let p = Vector3::new(500.0, 200.0, 30.0);
        let m1 = g.project(&p, Mirror::One).unwrap();
        let mut m2 = g.project(&p, Mirror::Two).unwrap();
        m2.v += 15.0; // the skew-ray construction
        let ray1 = backproject(&g, &m1, Mirror::One).unwrap();
        let ray2 = backproject(&g, &m2, Mirror::Two).unwrap();
        let t = triangulate_midpoint_rays(&ray1, &ray2).unwrap();
        assert!(t.gap > 0.0);
        let oracle = midpoint_least_squares(&ray1, &ray2);
        assert!((t.position - oracle).norm() < 1e-9 * oracle.norm().max(1.0));
    }

    #[test]
    fn dead_zone_correspondence_is_invalid() {
        let g = big();
        let cam = g.spec().camera;
        let m = PixelPoint::image(cam.u_c, cam.v_c);
        assert!(matches!(
            triangulate_midpoint(&g, &m, &m),
            Err(GeometryError::InvalidPixel(_))
        ));
    }

    #[test]
    fn midpoint_agrees_with_naive_for_coplanar_rays() {
        let g = big();
        let p = Vector3::new(600.0, 0.0, 40.0);
        let m1 = g.project(&p, Mirror::One).unwrap();
        let m2 = g.project(&p, Mirror::Two).unwrap();
        let ray1 = backproject(&g, &m1, Mirror::One).unwrap();
        let ray2 = backproject(&g, &m2, Mirror::Two).unwrap();
        let mid = triangulate_midpoint_rays(&ray1, &ray2).unwrap();
        let naive = triangulate_naive(&ray1, &ray2).unwrap();
        assert!((mid.position - naive.position).norm() < 1e-9 * naive.position.norm());
    }

    #[test]
    fn zero_pixel_noise_propagates_to_zero() {
        let g = big();
        let p = Vector3::new(400.0, 100.0, 0.0);
        let m1 = g.project(&p, Mirror::One).unwrap();
        let m2 = g.project(&p, Mirror::Two).unwrap();
        let sigma = propagate_uncertainty(&g, &m1, &m2, 0.0).unwrap();
        assert_eq!(sigma, Matrix3::zeros());
    }

    #[test]
    fn uncertainty_dominates_along_the_radial_direction() {
        let g = big();
        // Equatorial plane points; mirror 1 first sees z = 0 near rho = 325.
        for rho in [350.0, 500.0, 1000.0] {
            let p = Vector3::new(rho, 0.0, 0.0);
            let m1 = g.project(&p, Mirror::One).unwrap();
            let m2 = g.project(&p, Mirror::Two).unwrap();
            let sigma = propagate_uncertainty(&g, &m1, &m2, 1.0).unwrap();
            let eig = nalgebra::SymmetricEigen::new(sigma);
            let imax = eig
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            let dir = eig.eigenvectors.column(imax).normalize();
            // Radial direction here is +X.
            let angle = dir.x.abs().clamp(0.0, 1.0).acos().to_degrees();
            assert!(angle < 25.0, "rho {rho}: dominant axis {angle} deg off radial");
        }
    }

    #[test]
    fn near_field_ellipsoid_is_finite_and_radial() {
        // One pixel of noise at a point about 100 mm out, inside the near
        // stereo region: a bounded, radially-elongated ellipsoid.
        let g = big();
        let p = Vector3::new(100.0, 0.0, 100.0);
        let m1 = g.project(&p, Mirror::One).unwrap();
        let m2 = g.project(&p, Mirror::Two).unwrap();
        let sigma = propagate_uncertainty(&g, &m1, &m2, 1.0).unwrap();
        assert!(sigma.trace().is_finite() && sigma.trace() > 0.0);
        assert!(sigma.trace() < 100.0, "trace {} mm^2", sigma.trace());
        let eig = nalgebra::SymmetricEigen::new(sigma);
        let imax = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let dir = eig.eigenvectors.column(imax).normalize();
        let angle = dir.x.abs().clamp(0.0, 1.0).acos().to_degrees();
        assert!(angle < 25.0, "dominant axis {angle} deg off radial");
    }

    #[test]
    fn covariance_grows_with_range() {
        let g = big();
        let mut last = 0.0;
        for rho in [350.0, 700.0, 1400.0, 2800.0] {
            let p = Vector3::new(rho, 0.0, 0.0);
            let m1 = g.project(&p, Mirror::One).unwrap();
            let m2 = g.project(&p, Mirror::Two).unwrap();
            let sigma = propagate_uncertainty(&g, &m1, &m2, 1.0).unwrap();
            let eig = nalgebra::SymmetricEigen::new(sigma);
            let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
            assert!(max > last, "eigenvalue not growing at rho {rho}");
            last = max;
        }
    }

    #[test]
    fn range_sweep_brackets_the_reference_maximum() {
        let g = big();
        let rows = range_sweep(&g, 100);
        assert_eq!(rows.len(), 100);
        // 1 px disparity: maximum range between 18 and 28 meters.
        assert!(
            rows[0].rho_mm > 18_000.0 && rows[0].rho_mm < 28_000.0,
            "rho(1px) = {}",
            rows[0].rho_mm
        );
        // Nearer with every extra pixel of disparity.
        for w in rows.windows(2) {
            assert!(w[1].rho_mm < w[0].rho_mm);
        }
        // The 1 -> 2 px drop is on the order of 8 m.
        assert!(rows[0].delta_rho_mm > 3_000.0 && rows[0].delta_rho_mm < 20_000.0);
    }
}
