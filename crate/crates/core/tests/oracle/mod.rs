//! Brute-force oracles: pixel-by-pixel re-evaluation of the descriptor
//! definitions, written independently of the production code paths.
//!
//! Shared conventions (and nothing else): neighbor p = 0 at east traversed
//! counter-clockwise, replicate padding, the 4×4 CSLBP cell grid, and f64
//! accumulation in ring order.

/// (dx, dy) for p = 0..7.
const OFFSETS: [(i32, i32); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

fn level_at(levels: &[u8], w: usize, h: usize, x: i32, y: i32) -> i32 {
    let xi = x.clamp(0, w as i32 - 1) as usize;
    let yi = y.clamp(0, h as i32 - 1) as usize;
    levels[yi * w + xi] as i32
}

fn ring_at(levels: &[u8], w: usize, h: usize, x: usize, y: usize) -> [i32; 8] {
    let mut out = [0i32; 8];
    for (p, (dx, dy)) in OFFSETS.iter().enumerate() {
        out[p] = level_at(levels, w, h, x as i32 + dx, y as i32 + dy);
    }
    out
}

fn s(x: i32) -> i32 {
    i32::from(x >= 0)
}

fn code_of(ring: &[i32; 8], center: i32) -> usize {
    let mut code = 0usize;
    for (p, &g) in ring.iter().enumerate() {
        code += (s(g - center) as usize) << p;
    }
    code
}

/// Circular transition count from the sign sequence.
fn transitions(ring: &[i32; 8], center: i32) -> i32 {
    let mut u = (s(ring[7] - center) - s(ring[0] - center)).abs();
    for p in 1..8 {
        u += (s(ring[p] - center) - s(ring[p - 1] - center)).abs();
    }
    u
}

pub fn lbp_hist(levels: &[u8], w: usize, h: usize) -> Vec<f64> {
    let mut hist = vec![0.0; 256];
    for y in 0..h {
        for x in 0..w {
            let center = level_at(levels, w, h, x as i32, y as i32);
            hist[code_of(&ring_at(levels, w, h, x, y), center)] += 1.0;
        }
    }
    hist
}

pub fn lbpv_hist(levels: &[u8], w: usize, h: usize) -> Vec<f64> {
    let mut hist = vec![0.0; 10];
    for y in 0..h {
        for x in 0..w {
            let center = level_at(levels, w, h, x as i32, y as i32);
            let ring = ring_at(levels, w, h, x, y);
            let riu2 = if transitions(&ring, center) < 2 {
                ring.iter().map(|&g| s(g - center) as usize).sum()
            } else {
                9
            };
            let mean = ring.iter().map(|&g| g as f64).sum::<f64>() / 8.0;
            let var = ring
                .iter()
                .map(|&g| {
                    let d = g as f64 - mean;
                    d * d
                })
                .sum::<f64>()
                / 8.0;
            hist[riu2] += var;
        }
    }
    hist
}

pub fn clbp_hist(levels: &[u8], w: usize, h: usize) -> Vec<f64> {
    // global thresholds: mean |g_c − g_p| and mean intensity
    let mut abs_sum = 0.0;
    for y in 0..h {
        for x in 0..w {
            let center = level_at(levels, w, h, x as i32, y as i32);
            for &g in &ring_at(levels, w, h, x, y) {
                abs_sum += (center - g).abs() as f64;
            }
        }
    }
    let magnitude_threshold = abs_sum / (8.0 * (w * h) as f64);
    let mut intensity_sum = 0.0;
    for y in 0..h {
        for x in 0..w {
            intensity_sum += level_at(levels, w, h, x as i32, y as i32) as f64;
        }
    }
    let mean_intensity = intensity_sum / (w * h) as f64;

    let mut hist = vec![0.0; 514];
    for y in 0..h {
        for x in 0..w {
            let center = level_at(levels, w, h, x as i32, y as i32);
            let ring = ring_at(levels, w, h, x, y);
            hist[code_of(&ring, center)] += 1.0;
            let mut magnitude = 0usize;
            for (p, &g) in ring.iter().enumerate() {
                if (center - g).abs() as f64 >= magnitude_threshold {
                    magnitude += 1 << p;
                }
            }
            hist[256 + magnitude] += 1.0;
            hist[512 + usize::from(center as f64 >= mean_intensity)] += 1.0;
        }
    }
    hist
}

/// U of a bit pattern, from its sign sequence.
fn pattern_transitions(code: usize) -> i32 {
    let bit = |p: usize| ((code >> p) & 1) as i32;
    let mut u = (bit(7) - bit(0)).abs();
    for p in 1..8 {
        u += (bit(p) - bit(p - 1)).abs();
    }
    u
}

pub fn lbphf_features(levels: &[u8], w: usize, h: usize) -> Vec<f64> {
    let hist = lbp_hist(levels, w, h);
    let mut features = Vec::with_capacity(38);
    for n in 1..=7usize {
        // orbit row: n consecutive ones starting at bit r
        let mut row = [0.0f64; 8];
        for (r, value) in row.iter_mut().enumerate() {
            let mut code = 0usize;
            for j in 0..n {
                code |= 1 << ((r + j) % 8);
            }
            *value = hist[code];
        }
        for u in 0..=4usize {
            let mut re = 0.0;
            let mut im = 0.0;
            for (r, &hv) in row.iter().enumerate() {
                let phase = -2.0 * std::f64::consts::PI * (u as f64) * (r as f64) / 8.0;
                re += hv * phase.cos();
                im += hv * phase.sin();
            }
            features.push((re * re + im * im).sqrt());
        }
    }
    let misc: f64 = (0..256)
        .filter(|&code| pattern_transitions(code) > 2)
        .map(|code| hist[code])
        .sum();
    features.push(hist[0]);
    features.push(hist[255]);
    features.push(misc);
    features
}

pub fn ltp_hist(levels: &[u8], w: usize, h: usize, k: i32) -> Vec<f64> {
    let mut hist = vec![0.0; 512];
    for y in 0..h {
        for x in 0..w {
            let center = level_at(levels, w, h, x as i32, y as i32);
            let ring = ring_at(levels, w, h, x, y);
            let mut upper = 0usize;
            let mut lower = 0usize;
            for (p, &g) in ring.iter().enumerate() {
                let ternary = if g > center + k {
                    1
                } else if g < center - k {
                    -1
                } else {
                    0
                };
                if ternary == 1 {
                    upper += 1 << p;
                }
                if ternary == -1 {
                    lower += 1 << p;
                }
            }
            hist[upper] += 1.0;
            hist[256 + lower] += 1.0;
        }
    }
    hist
}

pub fn cslbp_hist(data: &[f64], w: usize, h: usize, threshold: f64) -> Vec<f64> {
    // range-normalize exactly as the extraction front end declares
    let lo = data.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let normed: Vec<f64> = if span > 0.0 {
        data.iter().map(|&v| (v - lo) / span).collect()
    } else {
        vec![0.0; data.len()]
    };
    let at = |x: i32, y: i32| {
        let xi = x.clamp(0, w as i32 - 1) as usize;
        let yi = y.clamp(0, h as i32 - 1) as usize;
        normed[yi * w + xi]
    };
    let mut hist = vec![0.0; 256];
    for y in 0..h {
        for x in 0..w {
            let mut ring = [0.0f64; 8];
            for (p, (dx, dy)) in OFFSETS.iter().enumerate() {
                ring[p] = at(x as i32 + dx, y as i32 + dy);
            }
            let mut code = 0usize;
            for i in 0..4 {
                if ring[i] - ring[i + 4] > threshold {
                    code += 1 << i;
                }
            }
            let cell = (y * 4 / h) * 4 + (x * 4 / w);
            hist[cell * 16 + code] += 1.0;
        }
    }
    hist
}

/// Discretized mass-normalized 2-D Gaussian, radius ⌈3σ⌉.
pub fn normalized_gaussian_kernel(sigma: f64) -> Vec<Vec<f64>> {
    let radius = (3.0 * sigma).ceil() as i32;
    let mut kernel: Vec<Vec<f64>> = (-radius..=radius)
        .map(|dy| {
            (-radius..=radius)
                .map(|dx| (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp())
                .collect()
        })
        .collect();
    let total: f64 = kernel.iter().flatten().sum();
    for row in &mut kernel {
        for v in row {
            *v /= total;
        }
    }
    kernel
}
