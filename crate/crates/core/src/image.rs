//! Grayscale image container and raster I/O.
//!
//! Intensities are stored as `f64` in row-major order. Decoded images live in
//! `[0, 1]`; intermediate buffers (gradients, spectral fields) may exceed that
//! range and are rescaled explicitly where an operation needs it.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::DynamicImage;

use crate::error::{Error, Result};

/// BT.601 luminance weights scaled to integers so gray and primary-color
/// pixels convert without rounding surprises: (299 r + 587 g + 114 b) / 1000.
const LUMA_R: u32 = 299;
const LUMA_G: u32 = 587;
const LUMA_B: u32 = 114;

/// Single-channel intensity grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    /// Wraps raw intensities. Panics if `data.len() != width * height`.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            width * height,
            "image data length must equal width*height"
        );
        Image {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Image::new(width, height, vec![value; width * height])
    }

    /// Builds an image from 8-bit gray levels, mapping 255 to 1.0.
    pub fn from_gray8(width: usize, height: usize, levels: &[u8]) -> Self {
        assert_eq!(levels.len(), width * height);
        let data = levels.iter().map(|&v| v as f64 / 255.0).collect();
        Image::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Samples with replicate (clamp-to-edge) boundary handling.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xi = x.clamp(0, self.width as isize - 1) as usize;
        let yi = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yi * self.width + xi]
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            if v < lo {
                lo = v;
            }
            if v > hi {
                hi = v;
            }
        }
        (lo, hi)
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn transpose(&self) -> Image {
        let mut out = vec![0.0; self.data.len()];
        for y in 0..self.height {
            for x in 0..self.width {
                out[x * self.height + y] = self.data[y * self.width + x];
            }
        }
        Image::new(self.height, self.width, out)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Writes a binary (P5) PGM, rescaling intensities to 8 bit.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        write!(w, "P5\n{} {}\n255\n", self.width, self.height).map_err(io_err)?;
        let (lo, hi) = self.min_max();
        let span = hi - lo;
        let bytes: Vec<u8> = self
            .data
            .iter()
            .map(|&v| {
                let t = if span > 0.0 { (v - lo) / span } else { 0.0 };
                (t * 255.0).round().clamp(0.0, 255.0) as u8
            })
            .collect();
        w.write_all(&bytes).map_err(io_err)?;
        w.flush().map_err(io_err)
    }
}

/// Affine rescale so min maps to 0 and max to 1; constant images map to zeros.
pub fn normalize(image: &Image) -> Image {
    let (lo, hi) = image.min_max();
    let span = hi - lo;
    let data = if span > 0.0 {
        image.data().iter().map(|&v| (v - lo) / span).collect()
    } else {
        vec![0.0; image.len()]
    };
    Image::new(image.width(), image.height(), data)
}

fn luma8(r: u8, g: u8, b: u8) -> f64 {
    (LUMA_R * r as u32 + LUMA_G * g as u32 + LUMA_B * b as u32) as f64 / 255_000.0
}

fn luma16(r: u16, g: u16, b: u16) -> f64 {
    (LUMA_R * r as u32 + LUMA_G * g as u32 + LUMA_B * b as u32) as f64 / 65_535_000.0
}

fn from_dynamic(img: DynamicImage) -> Image {
    let width = img.width() as usize;
    let height = img.height() as usize;
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().iter().map(|&v| v as f64 / 255.0).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(buf) => buf
            .into_raw()
            .iter()
            .map(|&v| v as f64 / 65_535.0)
            .collect(),
        DynamicImage::ImageLumaA16(buf) => buf.pixels().map(|p| p.0[0] as f64 / 65_535.0).collect(),
        DynamicImage::ImageRgb8(buf) => buf.pixels().map(|p| luma8(p[0], p[1], p[2])).collect(),
        DynamicImage::ImageRgba8(buf) => buf.pixels().map(|p| luma8(p[0], p[1], p[2])).collect(),
        DynamicImage::ImageRgb16(buf) => buf.pixels().map(|p| luma16(p[0], p[1], p[2])).collect(),
        DynamicImage::ImageRgba16(buf) => buf.pixels().map(|p| luma16(p[0], p[1], p[2])).collect(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| luma8(p[0], p[1], p[2]))
            .collect(),
    };
    Image::new(width, height, data)
}

/// Decodes a raster file (PNG or PGM/PPM) to a grayscale image in `[0, 1]`.
///
/// Color inputs are converted by BT.601 luminance weighting; already-gray
/// inputs pass through unchanged up to the `[0, 1]` scaling.
pub fn load_image(path: &Path) -> Result<Image> {
    let reader = image::ImageReader::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let decoded = reader.decode().map_err(|e| match e {
        image::ImageError::Unsupported(_) => Error::UnsupportedFormat {
            path: path.to_path_buf(),
        },
        source => Error::Decode {
            path: path.to_path_buf(),
            source,
        },
    })?;
    Ok(from_dynamic(decoded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pgm_roundtrip_endpoints() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        std::fs::write(&path, b"P5\n2 2\n255\n\x00\xff\xff\x00").unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.width(), 2);
        assert_eq!(img.height(), 2);
        assert_eq!(img.data(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn ascii_pgm_decodes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        std::fs::write(&path, b"P2\n2 1\n255\n0 255\n").unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.data(), &[0.0, 1.0]);
    }

    #[test]
    fn rgb_luminance_weights() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.ppm");
        // one red, one green, one blue, one white pixel
        std::fs::write(
            &path,
            b"P6\n4 1\n255\n\xff\x00\x00\x00\xff\x00\x00\x00\xff\xff\xff\xff",
        )
        .unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.data()[0], 0.299);
        assert_eq!(img.data()[1], 0.587);
        assert_eq!(img.data()[2], 0.114);
        assert_eq!(img.data()[3], 1.0);
    }

    #[test]
    fn grayscale_conversion_idempotent_on_gray() {
        // equal-channel RGB must land exactly on value/255
        for v in [0u8, 1, 17, 128, 254, 255] {
            assert_eq!(super::luma8(v, v, v), v as f64 / 255.0);
        }
    }

    #[test]
    fn normalize_affine_endpoints() {
        let img = Image::new(3, 1, vec![2.0, 4.0, 6.0]);
        assert_eq!(normalize(&img).data(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn normalize_constant_maps_to_zeros() {
        let img = Image::filled(3, 1, 5.0);
        assert_eq!(normalize(&img).data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_unit_range_is_identity() {
        let img = Image::new(4, 1, vec![0.0, 0.25, 0.75, 1.0]);
        assert_eq!(normalize(&img).data(), img.data());
    }

    #[test]
    fn missing_file_reports_path() {
        let err = load_image(Path::new("/nonexistent/missing.png")).unwrap_err();
        assert!(err.to_string().contains("missing.png"));
    }

    #[test]
    fn pgm_writer_rescales_to_full_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.pgm");
        let img = Image::new(2, 1, vec![0.25, 0.75]);
        img.write_pgm(&path).unwrap();
        let back = load_image(&path).unwrap();
        assert_relative_eq!(back.data()[0], 0.0);
        assert_relative_eq!(back.data()[1], 1.0);
    }

    #[test]
    fn transpose_swaps_axes() {
        let img = Image::new(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let t = img.transpose();
        assert_eq!(t.width(), 2);
        assert_eq!(t.height(), 3);
        assert_eq!(t.get(0, 2), img.get(2, 0));
        assert_eq!(t.transpose(), img);
    }
}
