//! Synthetic verification experiments: chessboard rings triangulated under
//! pixel noise, Monte-Carlo covariance checks, and a cylinder-wall scene
//! renderer for exercising the panorama pipeline without a ray tracer.

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::fov_report;
use crate::backprojection::backproject_auto;
use crate::error::HarnessError;
use crate::pnm::GrayImage;
use crate::projection::RigGeometry;
use crate::rig::{Mirror, PixelPoint};
use crate::triangulation::{propagate_uncertainty, triangulate_midpoint};

/// Four chessboards at 90-degree azimuth spacing, tangent to the viewing
/// cylinder at one horizontal range, facing the axis.
#[derive(Debug, Clone)]
pub struct ChessboardRing {
    pub rho: f64,
    /// Corner rows per board (vertical).
    pub m: usize,
    /// Corner columns per board (horizontal).
    pub n: usize,
    pub cell: f64,
    /// All 4*m*n corner positions in the camera frame (mm).
    pub corners: Vec<Vector3<f64>>,
}

/// Vertical interval of the stereo ROI at horizontal range `rho`: the band
/// bounded by the limiting elevation rays of both mirrors.
pub fn roi_vertical_window(geom: &RigGeometry, rho: f64) -> (f64, f64) {
    let fov = fov_report(geom);
    let z1 = geom.spec().focus1().z;
    let z2 = geom.spec().focus2().z;
    let lo = (z1 + rho * fov.theta1_min.tan()).max(z2 + rho * fov.theta2_min.tan());
    let hi = (z1 + rho * fov.theta1_max.tan()).min(z2 + rho * fov.theta2_max.tan());
    (lo, hi)
}

/// Places the ring and verifies that every corner is imaged by both mirrors.
pub fn generate_ring(
    geom: &RigGeometry,
    rho: f64,
    m: usize,
    n: usize,
    cell: f64,
) -> Result<ChessboardRing, HarnessError> {
    let (lo, hi) = roi_vertical_window(geom, rho);
    let board_height = (m.saturating_sub(1)) as f64 * cell;
    if board_height > (hi - lo) {
        return Err(HarnessError::RoiFit {
            rho_mm: rho,
            board_mm: board_height,
            max_mm: (hi - lo).max(0.0),
        });
    }
    let z_center = 0.5 * (lo + hi);
    let mut corners = Vec::with_capacity(4 * m * n);
    for quadrant in 0..4 {
        let psi = quadrant as f64 * std::f64::consts::FRAC_PI_2;
        let center = Vector3::new(rho * psi.cos(), rho * psi.sin(), z_center);
        let tangent = Vector3::new(-psi.sin(), psi.cos(), 0.0);
        for i in 0..m {
            let dz = (i as f64 - (m as f64 - 1.0) / 2.0) * cell;
            for j in 0..n {
                let dt = (j as f64 - (n as f64 - 1.0) / 2.0) * cell;
                corners.push(center + dt * tangent + Vector3::new(0.0, 0.0, dz));
            }
        }
    }
    for p in &corners {
        if geom.project(p, Mirror::One).is_none() || geom.project(p, Mirror::Two).is_none() {
            return Err(HarnessError::CornerNotVisible { x: p.x, y: p.y, z: p.z });
        }
    }
    Ok(ChessboardRing { rho, m, n, cell, corners })
}

/// Cell size that fits the ring comfortably inside the ROI at `rho`: 80% of
/// the vertical window, capped at the 140 mm used for far-range boards.
pub fn auto_cell_size(geom: &RigGeometry, rho: f64, m: usize) -> f64 {
    let (lo, hi) = roi_vertical_window(geom, rho);
    let span = (hi - lo).max(0.0);
    (0.8 * span / (m.saturating_sub(1)).max(1) as f64).min(140.0)
}

/// One range group of the triangulation error experiment.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RmseRow {
    pub range_mm: f64,
    pub rmse_mm: f64,
    pub sd_mm: f64,
    pub points: usize,
}

pub const DEFAULT_BOARD_ROWS: usize = 6;
pub const DEFAULT_BOARD_COLS: usize = 8;

/// Projects each ring corner into both annuli, perturbs the four pixel
/// coordinates with i.i.d. Gaussian noise, triangulates by the midpoint
/// method, and reports RMSE and the error-norm standard deviation per range.
///
/// Range groups run in parallel with per-group RNG streams derived from the
/// seed, so results do not depend on scheduling.
pub fn rmse_experiment(
    geom: &RigGeometry,
    ranges_mm: &[f64],
    noise_px: f64,
    seed: u64,
) -> Result<Vec<RmseRow>, HarnessError> {
    let rings: Vec<ChessboardRing> = ranges_mm
        .iter()
        .map(|&rho| {
            let cell = auto_cell_size(geom, rho, DEFAULT_BOARD_ROWS);
            generate_ring(geom, rho, DEFAULT_BOARD_ROWS, DEFAULT_BOARD_COLS, cell)
        })
        .collect::<Result<_, _>>()?;

    let rows: Vec<RmseRow> = rings
        .par_iter()
        .enumerate()
        .map(|(group, ring)| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed.wrapping_add((group as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            );
            let normal = Normal::new(0.0, noise_px).expect("valid noise sigma");
            let mut sq_sum = 0.0;
            let mut norms = Vec::with_capacity(ring.corners.len());
            for p in &ring.corners {
                let m1 = geom.project(p, Mirror::One).expect("ring corner visible");
                let m2 = geom.project(p, Mirror::Two).expect("ring corner visible");
                let m1 = PixelPoint::new(
                    m1.u + normal.sample(&mut rng),
                    m1.v + normal.sample(&mut rng),
                    m1.frame,
                );
                let m2 = PixelPoint::new(
                    m2.u + normal.sample(&mut rng),
                    m2.v + normal.sample(&mut rng),
                    m2.frame,
                );
                let Ok(t) = triangulate_midpoint(geom, &m1, &m2) else {
                    continue;
                };
                let err = (t.position - p).norm();
                sq_sum += err * err;
                norms.push(err);
            }
            let count = norms.len().max(1);
            let rmse = (sq_sum / count as f64).sqrt();
            let mean = norms.iter().sum::<f64>() / count as f64;
            let var = norms.iter().map(|e| (e - mean).powi(2)).sum::<f64>()
                / (count.saturating_sub(1)).max(1) as f64;
            RmseRow {
                range_mm: ring.rho,
                rmse_mm: rmse,
                sd_mm: var.sqrt(),
                points: norms.len(),
            }
        })
        .collect();
    Ok(rows)
}

/// Sample covariance of midpoint triangulations under pixel noise; the
/// Monte-Carlo counterpart of [`propagate_uncertainty`].
pub fn monte_carlo_covariance(
    geom: &RigGeometry,
    m1: &PixelPoint,
    m2: &PixelPoint,
    sigma_px: f64,
    trials: usize,
    seed: u64,
) -> Result<Matrix3<f64>, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma_px).expect("valid noise sigma");
    let mut samples = Vec::with_capacity(trials);
    while samples.len() < trials {
        let p1 = PixelPoint::new(
            m1.u + normal.sample(&mut rng),
            m1.v + normal.sample(&mut rng),
            m1.frame,
        );
        let p2 = PixelPoint::new(
            m2.u + normal.sample(&mut rng),
            m2.v + normal.sample(&mut rng),
            m2.frame,
        );
        if let Ok(t) = triangulate_midpoint(geom, &p1, &p2) {
            samples.push(t.position);
        }
    }
    let mean: Vector3<f64> = samples.iter().sum::<Vector3<f64>>() / trials as f64;
    let mut cov = Matrix3::zeros();
    for s in &samples {
        let d = s - mean;
        cov += d * d.transpose();
    }
    Ok(cov / (trials as f64 - 1.0))
}

/// Convenience: first-order covariance at the projection of a world point.
pub fn predicted_covariance_at(
    geom: &RigGeometry,
    p: &Vector3<f64>,
    sigma_px: f64,
) -> Result<Matrix3<f64>, HarnessError> {
    let m1 = geom
        .project(p, Mirror::One)
        .ok_or(HarnessError::CornerNotVisible { x: p.x, y: p.y, z: p.z })?;
    let m2 = geom
        .project(p, Mirror::Two)
        .ok_or(HarnessError::CornerNotVisible { x: p.x, y: p.y, z: p.z })?;
    Ok(propagate_uncertainty(geom, &m1, &m2, sigma_px)?)
}

/// Renders the omnidirectional view of a texture painted on an infinite
/// vertical cylinder wall of radius `radius_mm`. `texture(psi, z) -> [0, 1]`.
pub fn render_cylinder_scene(
    geom: &RigGeometry,
    radius_mm: f64,
    texture: impl Fn(f64, f64) -> f64 + Sync,
) -> GrayImage {
    let cam = geom.spec().camera;
    let mut image = GrayImage::new(cam.width, cam.height);
    image
        .data
        .par_chunks_mut(cam.width)
        .enumerate()
        .for_each(|(y, row)| {
            for (x, px) in row.iter_mut().enumerate() {
                let pixel = PixelPoint::image(x as f64, y as f64);
                let Some(ray) = backproject_auto(geom, &pixel) else {
                    continue;
                };
                if ray.theta.cos() < 1e-6 {
                    continue;
                }
                let z_hit = ray.anchor.z + radius_mm * ray.theta.tan();
                let val = texture(ray.psi, z_hit).clamp(0.0, 1.0);
                *px = (val * 255.0).round() as u8;
            }
        });
    image
}

/// Smooth two-frequency test texture with dominant vertical variation.
pub fn default_wall_texture(psi: f64, z: f64) -> f64 {
    0.5 + 0.27 * (z / 61.0 + 0.8).sin() + 0.18 * (3.0 * psi + z / 257.0).cos()
}
