//! Deterministic procedural textures for self-contained experiments, tests,
//! and the browser demo.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, LabeledImage};
use crate::error::Result;
use crate::image::Image;

fn mix_seed(class: usize, variant: usize) -> u64 {
    let mut z = (class as u64) << 32 | variant as u64;
    z = (z ^ (z >> 33)).wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    z = (z ^ (z >> 33)).wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    z ^ (z >> 33)
}

/// A texture family indexed by class, with per-variant phase/jitter so items
/// within a class differ but stay recognizable.
///
/// Families cycle through oriented sinusoidal gratings, checkerboards, and
/// smoothed value noise; higher class ids reuse a family at a different
/// frequency.
pub fn procedural_texture(class: usize, variant: usize, size: usize) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(class, variant));
    let family = class % 3;
    let level = class / 3;
    let n = size as f64;
    let mut data = Vec::with_capacity(size * size);
    match family {
        0 => {
            // oriented grating
            let cycles = 2.0 + 1.5 * level as f64;
            let angle = 0.35 + 0.25 * level as f64;
            let (sa, ca) = angle.sin_cos();
            let phase: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
            for y in 0..size {
                for x in 0..size {
                    let t = (ca * x as f64 + sa * y as f64) / n;
                    let v = 0.5 + 0.38 * (std::f64::consts::TAU * cycles * t + phase).sin();
                    let noise = 0.04 * (rng.gen::<f64>() - 0.5);
                    data.push((v + noise).clamp(0.0, 1.0));
                }
            }
        }
        1 => {
            // checkerboard with per-variant offset
            let cell = (size / (4 + 2 * level)).max(2);
            let ox = rng.gen_range(0..cell);
            let oy = rng.gen_range(0..cell);
            for y in 0..size {
                for x in 0..size {
                    let parity = ((x + ox) / cell + (y + oy) / cell) % 2;
                    let base = if parity == 0 { 0.25 } else { 0.75 };
                    let noise = 0.06 * (rng.gen::<f64>() - 0.5);
                    data.push((base + noise).clamp(0.0, 1.0));
                }
            }
        }
        _ => {
            // bilinearly interpolated value noise
            let grid = 4 + level;
            let mut lattice = vec![0.0f64; (grid + 1) * (grid + 1)];
            for v in &mut lattice {
                *v = rng.gen();
            }
            for y in 0..size {
                for x in 0..size {
                    let fx = x as f64 / n * grid as f64;
                    let fy = y as f64 / n * grid as f64;
                    let (ix, iy) = (fx as usize, fy as usize);
                    let (tx, ty) = (fx - ix as f64, fy - iy as f64);
                    let at = |gx: usize, gy: usize| lattice[gy * (grid + 1) + gx];
                    let top = at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx;
                    let bottom = at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx;
                    let v = top * (1.0 - ty) + bottom * ty;
                    let noise = 0.03 * (rng.gen::<f64>() - 0.5);
                    data.push((v + noise).clamp(0.0, 1.0));
                }
            }
        }
    }
    Image::new(size, size, data)
}

/// Builds a labeled procedural dataset with stratified folds.
pub fn synthetic_dataset(
    class_count: usize,
    per_class: usize,
    size: usize,
    folds: usize,
    seed: u64,
) -> Result<Dataset> {
    let mut items = Vec::with_capacity(class_count * per_class);
    for class in 0..class_count {
        for variant in 0..per_class {
            items.push(LabeledImage {
                image: procedural_texture(class, variant, size),
                class_id: class,
                source_path: PathBuf::from(format!("synthetic/class_{class:02}/tex_{variant:03}")),
            });
        }
    }
    Dataset::from_items(items, class_count, folds, seed)
}

/// Degenerate dataset where every image is the same constant tile.
pub fn constant_dataset(
    class_count: usize,
    per_class: usize,
    size: usize,
    value: f64,
    folds: usize,
    seed: u64,
) -> Result<Dataset> {
    let mut items = Vec::with_capacity(class_count * per_class);
    for class in 0..class_count {
        for variant in 0..per_class {
            items.push(LabeledImage {
                image: Image::filled(size, size, value),
                class_id: class,
                source_path: PathBuf::from(format!("constant/class_{class:02}/tile_{variant:03}")),
            });
        }
    }
    Dataset::from_items(items, class_count, folds, seed)
}
