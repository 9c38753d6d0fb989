//! Lifting image pixels to view rays anchored at the mirror foci.

use nalgebra::Vector3;

use crate::error::GeometryError;
use crate::projection::{reflex_transform, ReflectionPoint, RigGeometry, PIXEL_BOUND_TOL};
use crate::rig::{Mirror, PixelPoint};

/// Back-projected ray: elevation/azimuth from the mirror's primary focus,
/// plus the vector to the reflection point it was lifted through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewRay {
    pub mirror: Mirror,
    /// Elevation from the horizontal plane through the focus (rad).
    pub theta: f64,
    /// Azimuth around the symmetry axis, normalized to [0, 2*pi) (rad).
    pub psi: f64,
    /// Focus the ray emanates from (mm, camera frame).
    pub anchor: Vector3<f64>,
    /// Direction vector up to the reflection point (mm).
    pub v: Vector3<f64>,
}

impl ViewRay {
    /// Ray synthesized from angles alone, with a unit direction vector.
    pub fn from_angles(mirror: Mirror, theta: f64, psi: f64, anchor: Vector3<f64>) -> Self {
        ViewRay {
            mirror,
            theta,
            psi: psi.rem_euclid(std::f64::consts::TAU),
            anchor,
            v: Vector3::new(theta.cos() * psi.cos(), theta.cos() * psi.sin(), theta.sin()),
        }
    }

    pub fn direction(&self) -> Vector3<f64> {
        self.v.normalize()
    }

    pub fn point_at(&self, range: f64) -> Vector3<f64> {
        self.anchor + range * self.direction()
    }

    /// Distance from the infinite ray line to a point.
    pub fn distance_to(&self, p: &Vector3<f64>) -> f64 {
        let d = self.direction();
        (p - self.anchor).cross(&d).norm()
    }
}

/// Maps a pixel onto the normalized projection plane (`z = 1`) via the
/// inverse intrinsics; for mirror 2 the point is additionally folded into
/// the camera frame, landing at `z = d - 1`.
pub fn lift_pixel(geom: &RigGeometry, m: &PixelPoint, mirror: Mirror) -> Vector3<f64> {
    let k_inv = geom.spec().camera.inverse_matrix();
    let q = k_inv * Vector3::new(m.u, m.v, 1.0);
    match mirror {
        Mirror::One => q,
        Mirror::Two => reflex_transform(geom.spec().d(), &q),
    }
}

/// Intersects the lifted principal ray with the mirror surface.
///
/// `q` must come from [`lift_pixel`] for the same mirror. The caller is
/// responsible for radial-bounds checks; a pixel at the asymptotic direction
/// yields a grazing-ray error.
pub fn mirror_intersection(
    geom: &RigGeometry,
    q: &Vector3<f64>,
    mirror: Mirror,
) -> Result<ReflectionPoint, GeometryError> {
    let s = geom.surface(mirror);
    let position = match mirror {
        Mirror::One => {
            let norm = q.norm();
            let denom = s.k - norm * (s.k * (s.k - 2.0)).sqrt();
            if denom.abs() < 1e-12 {
                return Err(GeometryError::GrazingRay(denom));
            }
            (s.c / denom) * q
        }
        Mirror::Two => {
            // Norm of the unfolded normalized point (x, y, 1).
            let norm = (q.x * q.x + q.y * q.y + 1.0).sqrt();
            let denom = s.k - norm * (s.k * (s.k - 2.0)).sqrt();
            if denom.abs() < 1e-12 {
                return Err(GeometryError::GrazingRay(denom));
            }
            let t = s.c / denom;
            let virtual_cam = geom.spec().virtual_camera();
            virtual_cam + t * (q - virtual_cam)
        }
    };
    Ok(ReflectionPoint { position, mirror })
}

/// Back-projection: pixel to view ray. `None` when the pixel falls outside
/// the mirror's imaged radial bounds (including the dead annulus between the
/// two rings).
pub fn backproject(geom: &RigGeometry, m: &PixelPoint, mirror: Mirror) -> Option<ViewRay> {
    let (lo, hi) = geom.image_radial_bounds(mirror);
    let r = geom.pixel_radius(m);
    if r < lo - PIXEL_BOUND_TOL || r > hi + PIXEL_BOUND_TOL {
        return None;
    }
    let q = lift_pixel(geom, m, mirror);
    let reflection = mirror_intersection(geom, &q, mirror).ok()?;
    let anchor = geom.spec().focus(mirror);
    let v = reflection.position - anchor;
    let norm = v.norm();
    if norm < 1e-12 {
        return None;
    }
    let theta = (v.z / norm).asin();
    let psi = v.y.atan2(v.x).rem_euclid(std::f64::consts::TAU);
    Some(ViewRay { mirror, theta, psi, anchor, v })
}

/// Back-projects a pixel selecting the mirror from its radial band.
pub fn backproject_auto(geom: &RigGeometry, m: &PixelPoint) -> Option<ViewRay> {
    let mirror = geom.mirror_for_pixel(m)?;
    backproject(geom, m, mirror)
}

/// Batch interface: "u v mirror" lines to "theta_rad psi_rad anchor_z_mm",
/// with `nan` entries for pixels that do not lift.
pub fn backproject_batch(geom: &RigGeometry, input: &str) -> Result<String, GeometryError> {
    let mut out = String::new();
    for line in input.lines() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        let parsed: Option<(f64, f64, Mirror)> = (|| {
            if fields.len() != 3 {
                return None;
            }
            let u: f64 = fields[0].parse().ok()?;
            let v: f64 = fields[1].parse().ok()?;
            let mirror = Mirror::from_index(fields[2].parse().ok()?)?;
            Some((u, v, mirror))
        })();
        let Some((u, v, mirror)) = parsed else {
            return Err(GeometryError::Singular(format!("bad pixel line: `{t}`")));
        };
        match backproject(geom, &PixelPoint::image(u, v), mirror) {
            Some(ray) => {
                out.push_str(&format!("{:.9} {:.9} {:.6}\n", ray.theta, ray.psi, ray.anchor.z))
            }
            None => out.push_str("nan nan nan\n"),
        }
    }
    Ok(out)
}
