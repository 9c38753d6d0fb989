//! Cylindrical panorama rectification: geometry, lookup tables, image
//! remapping, and a simple column-scan block matcher for rectified pairs.
//!
//! Both mirrors map onto unit cylinders of equal height anchored at their
//! foci, so a world point lands in the same column of both panoramas and
//! stereo correspondence reduces to a row offset.

use rayon::prelude::*;

use crate::analysis::system_elevation_limits;
use crate::error::PanoramaError;
use crate::pnm::{GrayImage, PnmImage, RgbImage};
use crate::projection::RigGeometry;
use crate::rig::{Frame, Mirror, PixelPoint};

const TAU: f64 = std::f64::consts::TAU;

/// Requested panorama size: give exactly one dimension, the other follows
/// from the square-pixel equality on the unit cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanoramaSize {
    Width(usize),
    Height(usize),
}

/// Cylinder and raster geometry shared by both panoramas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanoramaGeometry {
    pub theta_max: f64,
    pub theta_min: f64,
    /// Cylinder height limits: z = tan(theta) on the unit cylinder.
    pub z_cyl_max: f64,
    pub z_cyl_min: f64,
    pub h_cyl: f64,
    pub w_pan: usize,
    pub h_pan: usize,
    /// Arc length of one pixel on the unit cylinder: 2*pi / w_pan.
    pub l_px: f64,
}

impl PanoramaGeometry {
    /// Builds the raster from elevation limits and one requested dimension.
    pub fn from_limits(
        theta_min: f64,
        theta_max: f64,
        size: PanoramaSize,
    ) -> Result<Self, PanoramaError> {
        if theta_max <= theta_min {
            return Err(PanoramaError::BadDimension(0));
        }
        let z_cyl_max = theta_max.tan();
        let z_cyl_min = theta_min.tan();
        let h_cyl = z_cyl_max - z_cyl_min;
        let (w_pan, h_pan) = match size {
            PanoramaSize::Width(w) => {
                if w == 0 {
                    return Err(PanoramaError::BadDimension(w as i64));
                }
                let h = (w as f64 * h_cyl / TAU).round().max(1.0) as usize;
                (w, h)
            }
            PanoramaSize::Height(h) => {
                if h == 0 {
                    return Err(PanoramaError::BadDimension(h as i64));
                }
                let w = (h as f64 * TAU / h_cyl).round().max(1.0) as usize;
                (w, h)
            }
        };
        Ok(PanoramaGeometry {
            theta_max,
            theta_min,
            z_cyl_max,
            z_cyl_min,
            h_cyl,
            w_pan,
            h_pan,
            l_px: TAU / w_pan as f64,
        })
    }

    /// (elevation, azimuth) of a panorama cell. Columns run opposite to the
    /// azimuth so the unrolled view reads as seen from inside the cylinder;
    /// row 0 sits at the top elevation.
    pub fn angles_for_cell(&self, u: f64, v: f64) -> (f64, f64) {
        let psi = (TAU - u * self.l_px).rem_euclid(TAU);
        let theta = (self.z_cyl_max - v * self.l_px).atan();
        (theta, psi)
    }

    /// Continuous cell coordinates of a ray; the column wraps modulo width.
    pub fn cell_for_angles(&self, theta: f64, psi: f64) -> (f64, f64) {
        let u = ((TAU - psi.rem_euclid(TAU)) / self.l_px) % self.w_pan as f64;
        let v = (self.z_cyl_max - theta.tan()) / self.l_px;
        (u, v)
    }
}

/// Panorama geometry for a rig, spanning the system's imaged elevations.
pub fn panorama_geometry(
    geom: &RigGeometry,
    size: PanoramaSize,
) -> Result<PanoramaGeometry, PanoramaError> {
    let (theta_min, theta_max) = system_elevation_limits(geom);
    PanoramaGeometry::from_limits(theta_min, theta_max, size)
}

/// Per-cell source coordinates into the omnidirectional image. Masked cells
/// hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct PanoramaLUT {
    pub mirror: Mirror,
    pub w_pan: usize,
    pub h_pan: usize,
    pub spec_hash: u64,
    /// Row-major (u, v) source pixels.
    pub cells: Vec<[f32; 2]>,
}

impl PanoramaLUT {
    #[inline]
    pub fn cell(&self, u: usize, v: usize) -> [f32; 2] {
        self.cells[v * self.w_pan + u]
    }

    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        let c = self.cell(u, v);
        c[0].is_finite() && c[1].is_finite()
    }

    pub fn valid_count(&self) -> usize {
        self.cells.iter().filter(|c| c[0].is_finite()).count()
    }
}

/// Fills the lookup table for one mirror by casting each cell's cylinder ray
/// through the forward projection. Rows are independent and processed in
/// parallel; output bytes are deterministic.
pub fn build_lut(geom: &RigGeometry, pano: &PanoramaGeometry, mirror: Mirror) -> PanoramaLUT {
    let (w, h) = (pano.w_pan, pano.h_pan);
    let mut cells = vec![[f32::NAN, f32::NAN]; w * h];
    cells
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(v, row)| {
            for (u, cell) in row.iter_mut().enumerate() {
                let (theta, psi) = pano.angles_for_cell(u as f64, v as f64);
                if let Some(m) = geom.project_from_angles(theta, psi, mirror) {
                    *cell = [m.u as f32, m.v as f32];
                }
            }
        });
    PanoramaLUT {
        mirror,
        w_pan: w,
        h_pan: h,
        spec_hash: geom.spec().spec_hash(),
        cells,
    }
}

const LUT_MAGIC: &[u8; 6] = b"OSLUT1";

/// Serializes a LUT: magic, mirror index, dimensions, spec hash, then
/// row-major little-endian f32 (u, v) pairs with NaN for masked cells.
pub fn encode_lut(lut: &PanoramaLUT) -> Vec<u8> {
    let mut out = Vec::with_capacity(23 + lut.cells.len() * 8);
    out.extend_from_slice(LUT_MAGIC);
    out.push(lut.mirror.index());
    out.extend_from_slice(&(lut.w_pan as u32).to_le_bytes());
    out.extend_from_slice(&(lut.h_pan as u32).to_le_bytes());
    out.extend_from_slice(&lut.spec_hash.to_le_bytes());
    for cell in &lut.cells {
        out.extend_from_slice(&cell[0].to_le_bytes());
        out.extend_from_slice(&cell[1].to_le_bytes());
    }
    out
}

pub fn decode_lut(bytes: &[u8]) -> Result<PanoramaLUT, PanoramaError> {
    let bad = |m: &str| PanoramaError::BadLutFile(m.to_string());
    if bytes.len() < 23 || &bytes[..6] != LUT_MAGIC {
        return Err(bad("missing OSLUT1 magic"));
    }
    let mirror = Mirror::from_index(bytes[6]).ok_or_else(|| bad("bad mirror index"))?;
    let w = u32::from_le_bytes(bytes[7..11].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(bytes[11..15].try_into().unwrap()) as usize;
    let spec_hash = u64::from_le_bytes(bytes[15..23].try_into().unwrap());
    let need = 23 + w * h * 8;
    if bytes.len() != need {
        return Err(bad("cell payload size mismatch"));
    }
    let mut cells = Vec::with_capacity(w * h);
    for chunk in bytes[23..].chunks_exact(8) {
        cells.push([
            f32::from_le_bytes(chunk[0..4].try_into().unwrap()),
            f32::from_le_bytes(chunk[4..8].try_into().unwrap()),
        ]);
    }
    Ok(PanoramaLUT { mirror, w_pan: w, h_pan: h, spec_hash, cells })
}

pub fn write_lut(path: impl AsRef<std::path::Path>, lut: &PanoramaLUT) -> Result<(), PanoramaError> {
    std::fs::write(path, encode_lut(lut)).map_err(|e| PanoramaError::Io(e.to_string()))
}

pub fn read_lut(path: impl AsRef<std::path::Path>) -> Result<PanoramaLUT, PanoramaError> {
    let bytes = std::fs::read(path).map_err(|e| PanoramaError::Io(e.to_string()))?;
    decode_lut(&bytes)
}

/// Sampling kernel for rectification. Bilinear is the default; nearest is
/// kept for bit-exact LUT tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Bilinear,
    Nearest,
}

fn rgb_bilinear(im: &RgbImage, x: f64, y: f64) -> Option<[f64; 3]> {
    if !(x.is_finite() && y.is_finite()) || x < 0.0 || y < 0.0 {
        return None;
    }
    if x > (im.width - 1) as f64 || y > (im.height - 1) as f64 {
        return None;
    }
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(im.width - 1);
    let y1 = (y0 + 1).min(im.height - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let p00 = im.get(x0, y0)[c] as f64;
        let p10 = im.get(x1, y0)[c] as f64;
        let p01 = im.get(x0, y1)[c] as f64;
        let p11 = im.get(x1, y1)[c] as f64;
        *o = p00 * (1.0 - fx) * (1.0 - fy) + p10 * fx * (1.0 - fy) + p01 * (1.0 - fx) * fy
            + p11 * fx * fy;
    }
    Some(out)
}

/// Remaps an omnidirectional image into a panorama through the LUT. The
/// image must match the rig camera, and the LUT must have been built for the
/// same spec (checked via the embedded hash). Masked cells become 0.
pub fn rectify(
    geom: &RigGeometry,
    image: &PnmImage,
    lut: &PanoramaLUT,
    interp: Interpolation,
) -> Result<PnmImage, PanoramaError> {
    let cam = geom.spec().camera;
    let (w, h) = image.dimensions();
    if (w, h) != (cam.width, cam.height) {
        return Err(PanoramaError::DimensionMismatch {
            got_w: w,
            got_h: h,
            want_w: cam.width,
            want_h: cam.height,
        });
    }
    if lut.spec_hash != geom.spec().spec_hash() {
        return Err(PanoramaError::BadLutFile(
            "LUT was built for a different rig spec".to_string(),
        ));
    }
    Ok(match image {
        PnmImage::Gray(im) => {
            let mut pan = GrayImage::new(lut.w_pan, lut.h_pan);
            pan.data
                .par_chunks_mut(lut.w_pan)
                .enumerate()
                .for_each(|(v, row)| {
                    for (u, dst) in row.iter_mut().enumerate() {
                        let [su, sv] = lut.cell(u, v);
                        let val = match interp {
                            Interpolation::Bilinear => im
                                .sample_bilinear(su as f64, sv as f64)
                                .map(|x| x.round().clamp(0.0, 255.0) as u8),
                            Interpolation::Nearest => im.sample_nearest(su as f64, sv as f64),
                        };
                        *dst = val.unwrap_or(0);
                    }
                });
            PnmImage::Gray(pan)
        }
        PnmImage::Rgb(im) => {
            let mut pan = RgbImage::new(lut.w_pan, lut.h_pan);
            pan.data
                .par_chunks_mut(3 * lut.w_pan)
                .enumerate()
                .for_each(|(v, row)| {
                    for u in 0..lut.w_pan {
                        let [su, sv] = lut.cell(u, v);
                        let rgb = match interp {
                            Interpolation::Bilinear => rgb_bilinear(im, su as f64, sv as f64)
                                .map(|c| c.map(|x| x.round().clamp(0.0, 255.0) as u8)),
                            Interpolation::Nearest => {
                                if su.is_finite() && sv.is_finite() {
                                    let xi = (su as f64 + 0.5).floor();
                                    let yi = (sv as f64 + 0.5).floor();
                                    if xi >= 0.0
                                        && yi >= 0.0
                                        && (xi as usize) < im.width
                                        && (yi as usize) < im.height
                                    {
                                        Some(im.get(xi as usize, yi as usize))
                                    } else {
                                        None
                                    }
                                } else {
                                    None
                                }
                            }
                        };
                        let rgb = rgb.unwrap_or([0, 0, 0]);
                        row[3 * u..3 * u + 3].copy_from_slice(&rgb);
                    }
                });
            PnmImage::Rgb(pan)
        }
    })
}

/// Correspondence for a positive vertical disparity: same column, row offset
/// down into the second panorama.
pub fn disparity_to_match(
    m1: &PixelPoint,
    disparity: f64,
    h_pan: usize,
) -> Result<PixelPoint, PanoramaError> {
    // `!(d > 0)` rather than `d <= 0`: NaN disparities must be rejected.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(disparity > 0.0) {
        return Err(PanoramaError::NonPositiveDisparity(disparity));
    }
    let v2 = m1.v + disparity;
    if v2 >= h_pan as f64 {
        return Err(PanoramaError::RowOutOfRange { row: v2, height: h_pan });
    }
    Ok(PixelPoint::new(m1.u, v2, Frame::Xi2))
}

/// Dense disparity map; NaN marks invalid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl DisparityMap {
    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f32 {
        self.data[v * self.width + u]
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|d| d.is_finite()).count()
    }
}

/// Minimum normalized cross-correlation for a match to count.
pub const NCC_THRESHOLD: f64 = 0.8;

/// Column-scan block matcher: for each reference cell, searches the target
/// panorama downward over integer row offsets `1..=max_disparity`,
/// maximizing windowed NCC, with parabolic sub-pixel refinement.
pub fn match_columns(
    reference: &GrayImage,
    target: &GrayImage,
    window: usize,
    max_disparity: usize,
) -> Result<DisparityMap, PanoramaError> {
    if reference.width != target.width || reference.height != target.height {
        return Err(PanoramaError::SizeMismatch(
            reference.width,
            reference.height,
            target.width,
            target.height,
        ));
    }
    let window = window | 1; // force odd
    if window > reference.width || window > reference.height {
        return Err(PanoramaError::WindowTooLarge {
            window,
            w: reference.width,
            h: reference.height,
        });
    }
    let (w, h) = (reference.width, reference.height);
    let half = window / 2;
    let mut data = vec![f32::NAN; w * h];

    data.par_chunks_mut(w).enumerate().for_each(|(v, row)| {
        if v < half || v + half >= h {
            return;
        }
        let mut scores = vec![f64::NAN; max_disparity + 2];
        for (u, out) in row.iter_mut().enumerate() {
            if u < half || u + half >= w {
                continue;
            }
            let Some(ref_patch) = Patch::extract(reference, u, v, half) else {
                continue;
            };
            let mut best = (f64::NEG_INFINITY, 0usize);
            for (s, d) in scores.iter_mut().zip(0..) {
                *s = f64::NAN;
                if d == 0 {
                    continue;
                }
                let v2 = v + d;
                if v2 + half >= h || d > max_disparity {
                    break;
                }
                if let Some(tgt) = Patch::extract(target, u, v2, half) {
                    let ncc = ref_patch.ncc(&tgt);
                    *s = ncc;
                    if ncc > best.0 {
                        best = (ncc, d);
                    }
                }
            }
            if best.0 < NCC_THRESHOLD {
                continue;
            }
            let d = best.1;
            let mut disparity = d as f64;
            if d >= 2 {
                let (c0, c1, c2) = (scores[d - 1], scores[d], scores[d + 1]);
                if c0.is_finite() && c2.is_finite() {
                    let denom = c0 - 2.0 * c1 + c2;
                    if denom.abs() > 1e-12 {
                        disparity += (0.5 * (c0 - c2) / denom).clamp(-0.5, 0.5);
                    }
                }
            }
            *out = disparity as f32;
        }
    });
    Ok(DisparityMap { width: w, height: h, data })
}

/// Zero-mean patch statistics for NCC.
struct Patch {
    values: Vec<f64>,
    norm: f64,
}

impl Patch {
    fn extract(im: &GrayImage, u: usize, v: usize, half: usize) -> Option<Patch> {
        let n = (2 * half + 1) * (2 * half + 1);
        let mut values = Vec::with_capacity(n);
        let mut mean = 0.0;
        for y in v - half..=v + half {
            for x in u - half..=u + half {
                let val = im.get(x, y) as f64;
                values.push(val);
                mean += val;
            }
        }
        mean /= n as f64;
        let mut sq = 0.0;
        for val in values.iter_mut() {
            *val -= mean;
            sq += *val * *val;
        }
        if sq < 1e-9 {
            return None; // textureless
        }
        Some(Patch { values, norm: sq.sqrt() })
    }

    fn ncc(&self, other: &Patch) -> f64 {
        let dot: f64 = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a * b)
            .sum();
        dot / (self.norm * other.norm)
    }
}
