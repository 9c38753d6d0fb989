//! Property suites for the geometric invariants: profile inverses, reflex
//! involution, projection round trips, and noise-scaling of the harness.

use nalgebra::Vector3;
use proptest::prelude::*;

use omnistereo::analysis::fov_report;
use omnistereo::backprojection::backproject;
use omnistereo::harness::rmse_experiment;
use omnistereo::projection::{reflex_transform, RigGeometry};
use omnistereo::rig::{Mirror, RigSpec};
use omnistereo::triangulation::{triangulate_midpoint_rays, triangulate_naive};

fn geometries() -> Vec<RigGeometry> {
    vec![
        RigGeometry::new(&RigSpec::big_rig()).unwrap(),
        RigGeometry::new(&RigSpec::small_rig()).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// f_r(f_z(r)) = r on the reflective band, and the surface point
    /// satisfies the hyperboloid equation.
    #[test]
    fn profile_functions_invert(frac in 0.0_f64..1.0, mirror_idx in 1u8..=2) {
        for geom in geometries() {
            let mirror = Mirror::from_index(mirror_idx).unwrap();
            let s = geom.surface(mirror);
            let r = s.r_min + frac * (s.r_max - s.r_min);
            let z = s.height_at_radius(r).expect("in-band radius");
            prop_assert!(s.residual(r, z).abs() < 1e-10);
            let back = s.radius_at_height(z).expect("height on sheet");
            prop_assert!((back - r).abs() <= 1e-10 * r.max(1.0));
        }
    }

    /// The reflex map is an involution and keeps the lateral coordinates.
    #[test]
    fn reflex_mirror_involution(x in -500.0_f64..500.0, y in -500.0_f64..500.0,
                                z in -500.0_f64..500.0) {
        let d = RigSpec::big_rig().d();
        let p = Vector3::new(x, y, z);
        let q = reflex_transform(d, &p);
        prop_assert_eq!((q.x, q.y), (x, y));
        let back = reflex_transform(d, &q);
        prop_assert!((back - p).norm() < 1e-9);
    }

    /// Forward projection then back-projection returns a ray through the
    /// world point, with the azimuth preserved, for both mirrors.
    #[test]
    fn project_backproject_round_trip(
        theta_frac in 0.02_f64..0.98,
        psi in 0.0_f64..std::f64::consts::TAU,
        range in 250.0_f64..6000.0,
    ) {
        for geom in geometries() {
            let fov = fov_report(&geom);
            let lo = fov.theta1_min.max(fov.theta2_min);
            let hi = fov.theta1_max.min(fov.theta2_max);
            let theta = lo + theta_frac * (hi - lo);
            let dir = Vector3::new(theta.cos() * psi.cos(), theta.cos() * psi.sin(), theta.sin());
            let p = geom.spec().focus1() + range * dir;
            for mirror in [Mirror::One, Mirror::Two] {
                let Some(m) = geom.project(&p, mirror) else {
                    // Points near the shared-FOV rim may clip one mirror.
                    continue;
                };
                let ray = backproject(&geom, &m, mirror).expect("projected pixel lifts");
                prop_assert!(ray.distance_to(&p) < 1e-6 * range);
                let dpsi = (ray.psi - psi.rem_euclid(std::f64::consts::TAU)).abs();
                let dpsi = dpsi.min(std::f64::consts::TAU - dpsi);
                prop_assert!(dpsi < 1e-9);
            }
        }
    }

    /// Midpoint and planar intersection agree for exactly coplanar rays.
    #[test]
    fn midpoint_matches_naive_for_coplanar_rays(
        theta1 in -0.3_f64..0.2,
        dtheta in 0.05_f64..0.6,
        psi in 0.0_f64..std::f64::consts::TAU,
    ) {
        let geom = &geometries()[0];
        let theta2 = theta1 + dtheta;
        let r1 = omnistereo::ViewRay::from_angles(Mirror::One, theta1, psi, geom.spec().focus1());
        let r2 = omnistereo::ViewRay::from_angles(Mirror::Two, theta2, psi, geom.spec().focus2());
        let naive = triangulate_naive(&r1, &r2).unwrap();
        let midpoint = triangulate_midpoint_rays(&r1, &r2).unwrap();
        let gap = (naive.position - midpoint.position).norm();
        prop_assert!(gap <= 1e-9 * naive.position.norm().max(1.0), "gap {}", gap);
        prop_assert!(midpoint.gap < 1e-9);
    }
}

/// The structural radius equality: both truncations report r_max = r_sys and
/// the profile round trip through either surface returns the same radius.
#[test]
fn shared_radius_equality_is_structural() {
    for geom in geometries() {
        let r_sys = geom.spec().r_sys();
        let s1 = geom.surface(Mirror::One);
        let s2 = geom.surface(Mirror::Two);
        assert_eq!(s1.r_max, r_sys);
        assert_eq!(s2.r_max, r_sys);
        let r1 = s1.radius_at_height(s1.height_at_radius(r_sys).unwrap()).unwrap();
        let r2 = s2.radius_at_height(s2.height_at_radius(r_sys).unwrap()).unwrap();
        assert!((r1 - r2).abs() < 1e-12 * r_sys, "residual {}", (r1 - r2).abs());
    }
}

/// First-order regime: doubling the pixel noise roughly doubles the RMSE.
#[test]
fn rmse_scales_linearly_in_small_noise() {
    let geom = RigGeometry::new(&RigSpec::big_rig()).unwrap();
    let ranges = [500.0, 2000.0, 8000.0];
    let lo = rmse_experiment(&geom, &ranges, 0.1, 99).unwrap();
    let hi = rmse_experiment(&geom, &ranges, 0.2, 99).unwrap();
    for (a, b) in lo.iter().zip(hi.iter()) {
        let ratio = b.rmse_mm / a.rmse_mm;
        assert!(
            (1.6..=2.4).contains(&ratio),
            "noise-doubling ratio {ratio} at {} mm",
            a.range_mm
        );
    }
}
