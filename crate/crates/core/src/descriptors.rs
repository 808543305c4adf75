//! The six local-pattern feature extractors: LBP, LBPV, CLBP, LBPHF, LTP,
//! and CSLBP.
//!
//! All descriptors use the 8-connected ring at radius 1 (P = 8, r = 1) with
//! replicate padding, so every one of the M×N pixels contributes a code.
//! Neighbor p = 0 sits at the east position and the ring is traversed
//! counter-clockwise; any fixed ordering permutes histogram bins
//! consistently, but the brute-force oracles must share this one.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::{normalize, Image};

/// Ring offsets (dx, dy) for p = 0..7: E, NE, N, NW, W, SW, S, SE.
pub const NEIGHBOR_OFFSETS: [(isize, isize); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// 8-bit gray levels, the integer view the thresholding descriptors consume.
#[derive(Debug, Clone)]
pub struct QuantizedImage {
    width: usize,
    height: usize,
    levels: Vec<u8>,
}

impl QuantizedImage {
    pub fn new(width: usize, height: usize, levels: Vec<u8>) -> Self {
        assert_eq!(levels.len(), width * height);
        QuantizedImage {
            width,
            height,
            levels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.levels[y * self.width + x]
    }

    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let xi = x.clamp(0, self.width as isize - 1) as usize;
        let yi = y.clamp(0, self.height as isize - 1) as usize;
        self.levels[yi * self.width + xi]
    }
}

/// Rounds `[0, 1]` intensities to integer gray levels in `[0, 255]`.
pub fn quantize(image: &Image) -> QuantizedImage {
    let levels = image
        .data()
        .iter()
        .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    QuantizedImage::new(image.width(), image.height(), levels)
}

#[inline]
fn ring_levels(q: &QuantizedImage, x: usize, y: usize) -> [u8; 8] {
    let mut out = [0u8; 8];
    for (p, (dx, dy)) in NEIGHBOR_OFFSETS.iter().enumerate() {
        out[p] = q.get_clamped(x as isize + dx, y as isize + dy);
    }
    out
}

// ---------------------------------------------------------------------------
// LBP
// ---------------------------------------------------------------------------

/// Basic code: bit p set iff g_p ≥ g_c.
#[inline]
pub fn lbp_code(center: u8, ring: &[u8; 8]) -> u8 {
    let mut code = 0u8;
    for (p, &g) in ring.iter().enumerate() {
        if g >= center {
            code |= 1 << p;
        }
    }
    code
}

/// 256-bin histogram of LBP codes over all pixels.
pub fn lbp(q: &QuantizedImage) -> Vec<f64> {
    let mut hist = vec![0.0; 256];
    for y in 0..q.height() {
        for x in 0..q.width() {
            let code = lbp_code(q.get(x, y), &ring_levels(q, x, y));
            hist[code as usize] += 1.0;
        }
    }
    hist
}

// ---------------------------------------------------------------------------
// Uniformity / riu2 / LBPV
// ---------------------------------------------------------------------------

/// Number of circular 0↔1 transitions in an 8-bit pattern (wrap included).
#[inline]
pub fn uniformity(pattern: u8) -> u32 {
    (pattern ^ pattern.rotate_left(1)).count_ones()
}

/// Rotation-invariant uniform code: popcount when U < 2, else P + 1 = 9.
#[inline]
pub fn riu2_code(center: u8, ring: &[u8; 8]) -> u8 {
    let pattern = lbp_code(center, ring);
    if uniformity(pattern) < 2 {
        pattern.count_ones() as u8
    } else {
        9
    }
}

/// Population variance of the ring values.
#[inline]
fn ring_variance(ring: &[u8; 8]) -> f64 {
    let mean = ring.iter().map(|&g| g as f64).sum::<f64>() / 8.0;
    ring.iter()
        .map(|&g| {
            let d = g as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / 8.0
}

/// Variance-weighted riu2 histogram: bin k accumulates VAR wherever the
/// pixel's riu2 code equals k. K = P + 1 gives 10 bins.
pub fn lbpv(q: &QuantizedImage) -> Vec<f64> {
    let mut hist = vec![0.0; 10];
    for y in 0..q.height() {
        for x in 0..q.width() {
            let ring = ring_levels(q, x, y);
            let code = riu2_code(q.get(x, y), &ring);
            hist[code as usize] += ring_variance(&ring);
        }
    }
    hist
}

// ---------------------------------------------------------------------------
// CLBP
// ---------------------------------------------------------------------------

/// Completed LBP: sign histogram (256), magnitude histogram (256) thresholded
/// at the global mean of |g_c − g_p|, and a 2-bin center histogram against
/// the global mean intensity, concatenated to 514 values.
pub fn clbp(q: &QuantizedImage) -> Vec<f64> {
    let pixels = (q.width() * q.height()) as f64;
    let mut abs_sum = 0.0;
    let mut intensity_sum = 0.0;
    for y in 0..q.height() {
        for x in 0..q.width() {
            let center = q.get(x, y);
            intensity_sum += center as f64;
            for &g in &ring_levels(q, x, y) {
                abs_sum += (center as i32 - g as i32).abs() as f64;
            }
        }
    }
    let magnitude_threshold = abs_sum / (8.0 * pixels);
    let mean_intensity = intensity_sum / pixels;

    let mut hist = vec![0.0; 514];
    for y in 0..q.height() {
        for x in 0..q.width() {
            let center = q.get(x, y);
            let ring = ring_levels(q, x, y);
            let sign = lbp_code(center, &ring);
            let mut magnitude = 0u8;
            for (p, &g) in ring.iter().enumerate() {
                let d = (center as i32 - g as i32).abs() as f64;
                if d >= magnitude_threshold {
                    magnitude |= 1 << p;
                }
            }
            hist[sign as usize] += 1.0;
            hist[256 + magnitude as usize] += 1.0;
            let center_bin = usize::from(center as f64 >= mean_intensity);
            hist[512 + center_bin] += 1.0;
        }
    }
    hist
}

// ---------------------------------------------------------------------------
// LBPHF
// ---------------------------------------------------------------------------

#[inline]
fn rotate8(pattern: u8, r: u32) -> u8 {
    pattern.rotate_left(r % 8)
}

/// Uniform pattern with n consecutive ones starting at bit r.
#[inline]
fn uniform_pattern(ones: u32, rotation: u32) -> u8 {
    let base = ((1u16 << ones) - 1) as u8;
    rotate8(base, rotation)
}

/// Histogram-Fourier features from a 256-bin LBP code histogram.
///
/// Uniform patterns with n = 1..7 ones form 7 rotation orbits of 8 bins; each
/// orbit row is reduced to the DFT magnitudes |H(n, u)| for u = 0..4
/// (conjugate symmetry). The all-zeros, all-ones, and miscellaneous
/// (non-uniform) masses are appended, giving 35 + 3 = 38 features.
pub fn lbphf_from_code_hist(hist: &[f64; 256]) -> Vec<f64> {
    let mut features = Vec::with_capacity(38);
    for ones in 1..=7u32 {
        let row: Vec<f64> = (0..8)
            .map(|r| hist[uniform_pattern(ones, r) as usize])
            .collect();
        for u in 0..=4u32 {
            let mut re = 0.0;
            let mut im = 0.0;
            for (r, &h) in row.iter().enumerate() {
                let phase = -2.0 * std::f64::consts::PI * (u as f64) * (r as f64) / 8.0;
                re += h * phase.cos();
                im += h * phase.sin();
            }
            features.push((re * re + im * im).sqrt());
        }
    }
    let misc: f64 = (0u16..256)
        .filter(|&code| uniformity(code as u8) > 2)
        .map(|code| hist[code as usize])
        .sum();
    features.push(hist[0]);
    features.push(hist[255]);
    features.push(misc);
    features
}

/// LBP histogram Fourier features of an image (38 values).
pub fn lbphf(q: &QuantizedImage) -> Vec<f64> {
    let hist = lbp(q);
    let mut fixed = [0.0; 256];
    fixed.copy_from_slice(&hist);
    lbphf_from_code_hist(&fixed)
}

// ---------------------------------------------------------------------------
// LTP
// ---------------------------------------------------------------------------

/// Local ternary patterns split into upper/lower binary histograms
/// (256 + 256 values): upper bit set iff g_p > g_c + k, lower iff
/// g_p < g_c − k; the dead zone in between codes to neither.
pub fn ltp(q: &QuantizedImage, k: u8) -> Vec<f64> {
    let k = k as i32;
    let mut hist = vec![0.0; 512];
    for y in 0..q.height() {
        for x in 0..q.width() {
            let center = q.get(x, y) as i32;
            let ring = ring_levels(q, x, y);
            let mut upper = 0u8;
            let mut lower = 0u8;
            for (p, &g) in ring.iter().enumerate() {
                let g = g as i32;
                if g > center + k {
                    upper |= 1 << p;
                } else if g < center - k {
                    lower |= 1 << p;
                }
            }
            hist[upper as usize] += 1.0;
            hist[256 + lower as usize] += 1.0;
        }
    }
    hist
}

// ---------------------------------------------------------------------------
// CSLBP
// ---------------------------------------------------------------------------

/// 3×3 median prefilter (replicate borders), the optional CSLBP noise-removal
/// stage.
pub fn median_filter_3x3(image: &Image) -> Image {
    let w = image.width();
    let h = image.height();
    let mut out = Vec::with_capacity(image.len());
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut window = [0.0f64; 9];
            let mut i = 0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    window[i] = image.get_clamped(x + dx, y + dy);
                    i += 1;
                }
            }
            window.sort_by(|a, b| a.partial_cmp(b).unwrap());
            out.push(window[4]);
        }
    }
    Image::new(w, h, out)
}

/// Center-symmetric LBP over a 4×4 spatial grid.
///
/// Works on real intensities (callers pass the `[0, 1]` range-normalized
/// image so the threshold T is meaningful): bit i of the 4-bit code is set
/// iff n_i − n_{i+4} > T for the four diametrically opposite ring pairs. The
/// per-cell 16-bin histograms concatenate to 16 × 16 = 256 values.
pub fn cslbp(image: &Image, threshold: f64) -> Result<Vec<f64>> {
    let w = image.width();
    let h = image.height();
    if w < 4 || h < 4 {
        return Err(Error::Shape {
            width: w,
            height: h,
            reason: "cslbp needs a 4x4 cell grid",
        });
    }
    let mut hist = vec![0.0; 256];
    for y in 0..h {
        for x in 0..w {
            let mut ring = [0.0f64; 8];
            for (p, (dx, dy)) in NEIGHBOR_OFFSETS.iter().enumerate() {
                ring[p] = image.get_clamped(x as isize + dx, y as isize + dy);
            }
            let mut code = 0usize;
            for i in 0..4 {
                if ring[i] - ring[i + 4] > threshold {
                    code |= 1 << i;
                }
            }
            let cell = (y * 4 / h) * 4 + (x * 4 / w);
            hist[cell * 16 + code] += 1.0;
        }
    }
    Ok(hist)
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// The six descriptor families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DescriptorKind {
    Lbp,
    Lbpv,
    Clbp,
    Lbphf,
    Ltp,
    Cslbp,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 6] = [
        DescriptorKind::Lbp,
        DescriptorKind::Lbpv,
        DescriptorKind::Clbp,
        DescriptorKind::Lbphf,
        DescriptorKind::Ltp,
        DescriptorKind::Cslbp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DescriptorKind::Lbp => "lbp",
            DescriptorKind::Lbpv => "lbpv",
            DescriptorKind::Clbp => "clbp",
            DescriptorKind::Lbphf => "lbphf",
            DescriptorKind::Ltp => "ltp",
            DescriptorKind::Cslbp => "cslbp",
        }
    }

    pub fn feature_len(&self) -> usize {
        match self {
            DescriptorKind::Lbp => 256,
            DescriptorKind::Lbpv => 10,
            DescriptorKind::Clbp => 514,
            DescriptorKind::Lbphf => 38,
            DescriptorKind::Ltp => 512,
            DescriptorKind::Cslbp => 256,
        }
    }

    /// Histogram blocks that are L1-normalized independently.
    fn blocks(&self) -> Vec<Range<usize>> {
        match self {
            DescriptorKind::Clbp => vec![0..256, 256..512, 512..514],
            DescriptorKind::Ltp => vec![0..256, 256..512],
            other => vec![0..other.feature_len()],
        }
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DescriptorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lbp" => Ok(DescriptorKind::Lbp),
            "lbpv" => Ok(DescriptorKind::Lbpv),
            "clbp" => Ok(DescriptorKind::Clbp),
            "lbphf" => Ok(DescriptorKind::Lbphf),
            "ltp" => Ok(DescriptorKind::Ltp),
            "cslbp" => Ok(DescriptorKind::Cslbp),
            _ => Err(Error::UnknownName {
                kind: "descriptor",
                name: s.to_string(),
            }),
        }
    }
}

/// Per-descriptor knobs; defaults match the experimental protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    /// LTP dead-zone half-width in gray levels.
    pub ltp_k: u8,
    /// CSLBP pair-difference threshold on `[0, 1]` intensities.
    pub cslbp_t: f64,
    /// Apply the 3×3 median prefilter before CSLBP.
    pub cslbp_median: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            ltp_k: 5,
            cslbp_t: 0.01,
            cslbp_median: false,
        }
    }
}

/// One image's descriptor output.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub descriptor: DescriptorKind,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn l1_normalize_blocks(values: &mut [f64], blocks: &[Range<usize>]) {
    for block in blocks {
        let mass: f64 = values[block.clone()].iter().map(|v| v.abs()).sum();
        if mass > 0.0 {
            for v in &mut values[block.clone()] {
                *v /= mass;
            }
        }
    }
}

/// Raw (unnormalized) descriptor values; integer-valued for the counting
/// histograms, which is what the brute-force oracles compare against.
pub fn extract_raw(image: &Image, descriptor: DescriptorKind, opts: &ExtractOptions) -> Result<Vec<f64>> {
    match descriptor {
        DescriptorKind::Lbp => Ok(lbp(&quantize(image))),
        DescriptorKind::Lbpv => Ok(lbpv(&quantize(image))),
        DescriptorKind::Clbp => Ok(clbp(&quantize(image))),
        DescriptorKind::Lbphf => Ok(lbphf(&quantize(image))),
        DescriptorKind::Ltp => Ok(ltp(&quantize(image), opts.ltp_k)),
        DescriptorKind::Cslbp => {
            let ranged = normalize(image);
            let filtered = if opts.cslbp_median {
                median_filter_3x3(&ranged)
            } else {
                ranged
            };
            cslbp(&filtered, opts.cslbp_t)
        }
    }
}

/// Extracts one descriptor and L1-normalizes each histogram block.
pub fn extract(image: &Image, descriptor: DescriptorKind, opts: &ExtractOptions) -> Result<FeatureVector> {
    let mut values = extract_raw(image, descriptor, opts)?;
    l1_normalize_blocks(&mut values, &descriptor.blocks());
    Ok(FeatureVector { descriptor, values })
}
