//! Minimal binary PGM (P5) and PPM (P6) image I/O, 8 bits per channel.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::PanoramaError;

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        GrayImage { width, height, data: vec![0; width * height] }
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        GrayImage { width, height, data: vec![value; width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    /// Bilinear sample at a continuous position; `None` outside the image.
    /// The last row/column blends degenerately with itself.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Option<f64> {
        if !(x.is_finite() && y.is_finite()) || x < 0.0 || y < 0.0 {
            return None;
        }
        if x > (self.width - 1) as f64 || y > (self.height - 1) as f64 {
            return None;
        }
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let p00 = self.get(x0, y0) as f64;
        let p10 = self.get(x1, y0) as f64;
        let p01 = self.get(x0, y1) as f64;
        let p11 = self.get(x1, y1) as f64;
        Some(p00 * (1.0 - fx) * (1.0 - fy) + p10 * fx * (1.0 - fy) + p01 * (1.0 - fx) * fy
            + p11 * fx * fy)
    }

    pub fn sample_nearest(&self, x: f64, y: f64) -> Option<u8> {
        if !(x.is_finite() && y.is_finite()) || x < -0.5 || y < -0.5 {
            return None;
        }
        let xi = (x + 0.5).floor() as usize;
        let yi = (y + 0.5).floor() as usize;
        if xi >= self.width || yi >= self.height {
            return None;
        }
        Some(self.get(xi, yi))
    }
}

/// Row-major 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        RgbImage { width, height, data: vec![0; 3 * width * height] }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Integer-arithmetic luma conversion.
    pub fn to_gray(&self) -> GrayImage {
        let mut out = GrayImage::new(self.width, self.height);
        for (dst, src) in out.data.iter_mut().zip(self.data.chunks_exact(3)) {
            let y = 299 * src[0] as u32 + 587 * src[1] as u32 + 114 * src[2] as u32;
            *dst = (y / 1000) as u8;
        }
        out
    }
}

/// Either flavor of netpbm raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PnmImage {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl PnmImage {
    pub fn dimensions(&self) -> (usize, usize) {
        match self {
            PnmImage::Gray(im) => (im.width, im.height),
            PnmImage::Rgb(im) => (im.width, im.height),
        }
    }

    pub fn to_gray(&self) -> GrayImage {
        match self {
            PnmImage::Gray(im) => im.clone(),
            PnmImage::Rgb(im) => im.to_gray(),
        }
    }
}

fn io_err(e: std::io::Error) -> PanoramaError {
    PanoramaError::Io(e.to_string())
}

/// Reads a binary PGM/PPM file (maxval up to 255).
pub fn read_pnm(path: impl AsRef<Path>) -> Result<PnmImage, PanoramaError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(io_err)?
        .read_to_end(&mut bytes)
        .map_err(io_err)?;
    parse_pnm(&bytes)
}

pub fn parse_pnm(bytes: &[u8]) -> Result<PnmImage, PanoramaError> {
    let bad = |m: &str| PanoramaError::Io(format!("pnm: {m}"));
    if bytes.len() < 2 {
        return Err(bad("truncated header"));
    }
    let magic = &bytes[..2];
    let channels = match magic {
        b"P5" => 1,
        b"P6" => 3,
        _ => return Err(bad("only binary P5/P6 supported")),
    };
    // Header tokens: width, height, maxval; '#' comments run to end of line.
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        while pos < bytes.len() {
            let b = bytes[pos];
            if b == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                pos += 1;
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("malformed header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("malformed header"))?;
    }
    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit rasters supported"));
    }
    pos += 1; // single whitespace after maxval
    let need = width * height * channels;
    if bytes.len() < pos + need {
        return Err(bad("truncated raster"));
    }
    let data = bytes[pos..pos + need].to_vec();
    Ok(match channels {
        1 => PnmImage::Gray(GrayImage { width, height, data }),
        _ => PnmImage::Rgb(RgbImage { width, height, data }),
    })
}

pub fn encode_pnm(image: &PnmImage) -> Vec<u8> {
    let (w, h) = image.dimensions();
    match image {
        PnmImage::Gray(im) => {
            let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
            out.extend_from_slice(&im.data);
            out
        }
        PnmImage::Rgb(im) => {
            let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
            out.extend_from_slice(&im.data);
            out
        }
    }
}

pub fn write_pnm(path: impl AsRef<Path>, image: &PnmImage) -> Result<(), PanoramaError> {
    let bytes = encode_pnm(image);
    let mut f = std::fs::File::create(path).map_err(io_err)?;
    f.write_all(&bytes).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_round_trip() {
        let mut im = GrayImage::new(5, 3);
        for (i, px) in im.data.iter_mut().enumerate() {
            *px = (i * 17 % 256) as u8;
        }
        let encoded = encode_pnm(&PnmImage::Gray(im.clone()));
        let decoded = parse_pnm(&encoded).unwrap();
        assert_eq!(decoded, PnmImage::Gray(im));
    }

    #[test]
    fn rgb_round_trip_with_comment() {
        let mut im = RgbImage::new(2, 2);
        im.set(0, 0, [255, 0, 0]);
        im.set(1, 1, [0, 10, 200]);
        let mut encoded = b"P6\n# comment line\n2 2\n255\n".to_vec();
        encoded.extend_from_slice(&im.data);
        let decoded = parse_pnm(&encoded).unwrap();
        assert_eq!(decoded, PnmImage::Rgb(im));
    }

    #[test]
    fn bilinear_interpolates_between_pixels() {
        let mut im = GrayImage::new(2, 1);
        im.set(0, 0, 10);
        im.set(1, 0, 30);
        let v = im.sample_bilinear(0.5, 0.0).unwrap();
        assert!((v - 20.0).abs() < 1e-12);
        assert!(im.sample_bilinear(5.0, 0.0).is_none());
    }

    #[test]
    fn rejects_ascii_variants() {
        assert!(parse_pnm(b"P2\n1 1\n255\n0").is_err());
    }
}
