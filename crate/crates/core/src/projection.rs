//! Forward projection of world points to image pixels via either mirror.
//!
//! Mirror 1 images directly; mirror 2 is imaged through the planar reflex
//! fold, which maps the camera to a virtual camera at `(0, 0, d)`.

use nalgebra::Vector3;

use crate::error::GeometryError;
use crate::rig::{Frame, Mirror, MirrorSurface, PixelPoint, RigSpec};

/// Reflection point on a mirror surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionPoint {
    pub position: Vector3<f64>,
    pub mirror: Mirror,
}

/// Slack on the imaged radial bounds (px). Wide enough that coordinates
/// stored as f32 in panorama LUTs stay liftable at the annulus rims.
pub(crate) const PIXEL_BOUND_TOL: f64 = 1e-3;

/// Precomputed projection geometry for one rig: both surfaces plus the
/// per-mirror image radial bounds. Immutable and cheap to share.
#[derive(Debug, Clone)]
pub struct RigGeometry {
    spec: RigSpec,
    m1: MirrorSurface,
    m2: MirrorSurface,
    bounds1: (f64, f64),
    bounds2: (f64, f64),
}

impl RigGeometry {
    pub fn new(spec: &RigSpec) -> Result<Self, GeometryError> {
        let (m1, m2) = spec.derive_surfaces()?;
        let mut geom = RigGeometry {
            spec: spec.clone(),
            m1,
            m2,
            bounds1: (0.0, 0.0),
            bounds2: (0.0, 0.0),
        };
        geom.bounds1 = geom.rim_pixel_bounds(Mirror::One)?;
        geom.bounds2 = geom.rim_pixel_bounds(Mirror::Two)?;
        Ok(geom)
    }

    pub fn spec(&self) -> &RigSpec {
        &self.spec
    }

    pub fn surface(&self, mirror: Mirror) -> &MirrorSurface {
        match mirror {
            Mirror::One => &self.m1,
            Mirror::Two => &self.m2,
        }
    }

    /// Scale factor along the focus-to-point line at which the reflection
    /// point sits: the line-hyperboloid intersection solved in closed form.
    pub fn reflection_scale(
        &self,
        p_w: &Vector3<f64>,
        mirror: Mirror,
    ) -> Result<f64, GeometryError> {
        let s = self.surface(mirror);
        let dir = p_w - s.focus;
        let norm = dir.norm();
        let root = (s.k * (s.k - 2.0)).sqrt();
        // Mirror 1 keeps the upper sheet, mirror 2 the lower one; the axial
        // term flips sign accordingly.
        let denom = match mirror {
            Mirror::One => norm * root - s.k * dir.z,
            Mirror::Two => norm * root + s.k * dir.z,
        };
        if denom.abs() < 1e-12 || norm < 1e-12 {
            return Err(GeometryError::DegenerateRay(denom));
        }
        Ok(s.c / denom)
    }

    /// Reflection point of `p_w` on the given mirror, with the external
    /// position and elevation-limit checks applied.
    pub fn reflect(
        &self,
        p_w: &Vector3<f64>,
        mirror: Mirror,
    ) -> Result<ReflectionPoint, GeometryError> {
        let s = self.surface(mirror);
        self.check_outside_mirror(p_w, mirror)?;
        let scale = self.reflection_scale(p_w, mirror)?;
        let position = s.focus + scale * (p_w - s.focus);
        let rho = (position.x * position.x + position.y * position.y).sqrt();
        let theta = (position.z - s.focus.z).atan2(rho);
        if !s.contains_elevation(theta) {
            return Err(GeometryError::ElevationOutOfRange {
                mirror: mirror.index(),
                theta_deg: theta.to_degrees(),
                min_deg: s.theta_min.to_degrees(),
                max_deg: s.theta_max.to_degrees(),
            });
        }
        Ok(ReflectionPoint { position, mirror })
    }

    /// World points must lie outside the mirror volume for the line-surface
    /// intersection to be the physical reflection.
    fn check_outside_mirror(&self, p_w: &Vector3<f64>, mirror: Mirror) -> Result<(), GeometryError> {
        let s = self.surface(mirror);
        if let Some(r_surface) = s.radius_at_height(p_w.z) {
            let rho = (p_w.x * p_w.x + p_w.y * p_w.y).sqrt();
            if rho <= r_surface {
                return Err(GeometryError::InsideMirror { mirror: mirror.index() });
            }
        }
        Ok(())
    }

    /// Planar-mirror image through the reflex plane at z = d/2: maps the
    /// camera frame to the virtual camera frame. Involutive.
    pub fn reflex_transform(&self, p: &Vector3<f64>) -> Vector3<f64> {
        reflex_transform(self.spec.d(), p)
    }

    /// Forward projection. Returns `None` whenever the point is outside the
    /// mirror's field of view, inside its volume, or lands outside the imaged
    /// radial bounds. Non-finite input is a caller bug.
    pub fn project(&self, p_w: &Vector3<f64>, mirror: Mirror) -> Option<PixelPoint> {
        assert!(
            p_w.x.is_finite() && p_w.y.is_finite() && p_w.z.is_finite(),
            "projection input must be finite"
        );
        let reflection = self.reflect(p_w, mirror).ok()?;
        self.project_reflection(&reflection)
    }

    /// Projects a surface reflection point down to the image.
    fn project_reflection(&self, reflection: &ReflectionPoint) -> Option<PixelPoint> {
        let p = reflection.position;
        let in_camera_frame = match reflection.mirror {
            Mirror::One => p,
            Mirror::Two => self.reflex_transform(&p),
        };
        // zeta normalizer guard: grazing depth means invalid geometry.
        if in_camera_frame.z < 1e-9 {
            return None;
        }
        let (u, v) = self.spec.camera.project(&in_camera_frame)?;
        let frame = match reflection.mirror {
            Mirror::One => Frame::I1,
            Mirror::Two => Frame::I2,
        };
        let pixel = PixelPoint::new(u, v, frame);
        let (lo, hi) = self.image_radial_bounds(reflection.mirror);
        let r = self.pixel_radius(&pixel);
        if r < lo - PIXEL_BOUND_TOL || r > hi + PIXEL_BOUND_TOL {
            return None;
        }
        Some(pixel)
    }

    /// Projects the ray leaving the mirror's primary focus at (elevation,
    /// azimuth). Used by the panorama mapping, where only the ray matters.
    pub fn project_from_angles(&self, theta: f64, psi: f64, mirror: Mirror) -> Option<PixelPoint> {
        let s = self.surface(mirror);
        if !s.contains_elevation(theta) {
            return None;
        }
        let point = s.point_at_angles(theta, psi).ok()?;
        self.project_reflection(&ReflectionPoint { position: point, mirror })
    }

    /// Pixel distance from the image center.
    pub fn pixel_radius(&self, m: &PixelPoint) -> f64 {
        let du = m.u - self.spec.camera.u_c;
        let dv = m.v - self.spec.camera.v_c;
        (du * du + dv * dv).sqrt()
    }

    /// Imaged radial bounds of the mirror's annulus: pixel radii of the
    /// projections of the limiting-radius rim points.
    pub fn image_radial_bounds(&self, mirror: Mirror) -> (f64, f64) {
        match mirror {
            Mirror::One => self.bounds1,
            Mirror::Two => self.bounds2,
        }
    }

    fn rim_pixel_bounds(&self, mirror: Mirror) -> Result<(f64, f64), GeometryError> {
        let s = self.surface(mirror);
        let radius_of = |r_lim: f64| -> Result<f64, GeometryError> {
            let z = s.height_unbounded(r_lim);
            let p = Vector3::new(r_lim, 0.0, z);
            let in_cam = match mirror {
                Mirror::One => p,
                Mirror::Two => self.reflex_transform(&p),
            };
            if in_cam.z < 1e-9 {
                return Err(GeometryError::Singular(format!(
                    "mirror {mirror} rim at radius {r_lim:.3} mm projects behind the camera"
                )));
            }
            let (u, v) = self
                .spec
                .camera
                .project(&in_cam)
                .ok_or_else(|| GeometryError::Singular("rim projection normalizer".into()))?;
            Ok(self.pixel_radius(&PixelPoint::image(u, v)))
        };
        let inner = radius_of(s.r_min)?;
        let outer = radius_of(s.r_max)?;
        Ok((inner.min(outer), inner.max(outer)))
    }

    /// Selects the mirror whose image annulus contains the pixel, or `None`
    /// in the dead zone between the rings / outside both.
    pub fn mirror_for_pixel(&self, m: &PixelPoint) -> Option<Mirror> {
        let r = self.pixel_radius(m);
        let (lo2, hi2) = self.bounds2;
        if r >= lo2 - PIXEL_BOUND_TOL && r <= hi2 + PIXEL_BOUND_TOL {
            return Some(Mirror::Two);
        }
        let (lo1, hi1) = self.bounds1;
        if r >= lo1 - PIXEL_BOUND_TOL && r <= hi1 + PIXEL_BOUND_TOL {
            return Some(Mirror::One);
        }
        None
    }
}

/// Planar-mirror image through the plane z = d/2: `(x, y, z) -> (x, y, d-z)`.
pub fn reflex_transform(d: f64, p: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(p.x, p.y, d - p.z)
}

/// Batch interface: each input line holds "x y z" in mm; each output line is
/// "u1 v1 u2 v2" with `nan` for invalid projections.
pub fn project_batch(geom: &RigGeometry, input: &str) -> Result<String, GeometryError> {
    let mut out = String::new();
    for line in input.lines() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = t.split_whitespace().filter_map(|s| s.parse().ok()).collect();
        if vals.len() != 3 || !vals.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::Singular(format!("bad point line: `{t}`")));
        }
        let p = Vector3::new(vals[0], vals[1], vals[2]);
        fn field(px: Option<PixelPoint>) -> String {
            match px {
                Some(m) => format!("{:.6} {:.6}", m.u, m.v),
                None => "nan nan".to_string(),
            }
        }
        out.push_str(&field(geom.project(&p, Mirror::One)));
        out.push(' ');
        out.push_str(&field(geom.project(&p, Mirror::Two)));
        out.push('\n');
    }
    Ok(out)
}
