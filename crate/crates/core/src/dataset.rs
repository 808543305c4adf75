//! Labeled image collections with deterministic stratified fold assignment.
//!
//! Dataset layout on disk: `<root>/<class_name>/<image files>`. Class ids are
//! assigned by lexicographic class-name order; items are ordered
//! lexicographically by path.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{load_image, Image};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

const RASTER_EXTENSIONS: [&str; 5] = ["png", "pgm", "ppm", "pbm", "pnm"];

/// One dataset item: the decoded image, its class, and where it came from.
#[derive(Debug, Clone)]
pub struct LabeledImage {
    pub image: Image,
    pub class_id: usize,
    pub source_path: PathBuf,
}

/// Labeled image collection plus per-item fold assignment.
#[derive(Debug, Clone)]
pub struct Dataset {
    items: Vec<LabeledImage>,
    class_count: usize,
    fold_of: Vec<usize>,
}

impl Dataset {
    /// Assembles a dataset from already-decoded items, assigning folds the
    /// same way `load_dataset` does.
    pub fn from_items(items: Vec<LabeledImage>, class_count: usize, folds: usize, seed: u64) -> Result<Self> {
        let labels: Vec<usize> = items.iter().map(|it| it.class_id).collect();
        let fold_of = stratified_folds(&labels, class_count, folds, seed)?;
        Ok(Dataset {
            items,
            class_count,
            fold_of,
        })
    }

    pub fn items(&self) -> &[LabeledImage] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn labels(&self) -> Vec<usize> {
        self.items.iter().map(|it| it.class_id).collect()
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn fold_count(&self) -> usize {
        self.fold_of.iter().copied().max().map_or(0, |m| m + 1)
    }
}

/// Deterministic stratified fold assignment.
///
/// Within each class, item positions are shuffled by a ChaCha stream derived
/// from `(seed, class_id)` and dealt round-robin over folds, so per-class fold
/// sizes differ by at most one and the result depends only on the item order,
/// the labels, and the seed.
pub fn stratified_folds(
    labels: &[usize],
    class_count: usize,
    folds: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if folds == 0 {
        return Err(Error::Config("fold count must be at least 1".into()));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); class_count];
    for (idx, &label) in labels.iter().enumerate() {
        if label >= class_count {
            return Err(Error::Config(format!(
                "label {label} out of range for {class_count} classes"
            )));
        }
        by_class[label].push(idx);
    }
    let mut fold_of = vec![0usize; labels.len()];
    for (class_id, members) in by_class.iter().enumerate() {
        if members.len() < folds {
            return Err(Error::Stratification {
                class: class_id.to_string(),
                count: members.len(),
                folds,
            });
        }
        let mut order: Vec<usize> = members.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(fold_seed(seed, class_id));
        order.shuffle(&mut rng);
        for (pos, &item) in order.iter().enumerate() {
            fold_of[item] = pos % folds;
        }
    }
    Ok(fold_of)
}

fn fold_seed(seed: u64, class_id: usize) -> u64 {
    // splitmix-style mix keeps per-class streams independent of class sizes
    let mut z = seed ^ (class_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn is_raster(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| {
            let e = e.to_ascii_lowercase();
            RASTER_EXTENSIONS.contains(&e.as_str())
        })
        .unwrap_or(false)
}

/// Ingests a directory-per-class dataset with stratified fold assignment.
pub fn load_dataset(root: &Path, folds: usize, seed: u64) -> Result<Dataset> {
    let read_err = |source| Error::Io {
        path: root.to_path_buf(),
        source,
    };
    let mut class_dirs: Vec<(String, PathBuf)> = Vec::new();
    for entry in fs::read_dir(root).map_err(read_err)? {
        let entry = entry.map_err(read_err)?;
        let path = entry.path();
        if path.is_dir() {
            let name = entry.file_name().to_string_lossy().into_owned();
            class_dirs.push((name, path));
        }
    }
    if class_dirs.is_empty() {
        return Err(Error::Config(format!(
            "no class directories under {}",
            root.display()
        )));
    }
    class_dirs.sort_by(|a, b| a.0.cmp(&b.0));

    let mut tasks: Vec<(usize, PathBuf)> = Vec::new();
    for (class_id, (name, dir)) in class_dirs.iter().enumerate() {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|source| Error::Io {
                path: dir.clone(),
                source,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_raster(p))
            .collect();
        if files.is_empty() {
            return Err(Error::EmptyClass {
                class: name.clone(),
            });
        }
        if files.len() < folds {
            return Err(Error::Stratification {
                class: name.clone(),
                count: files.len(),
                folds,
            });
        }
        files.sort();
        tasks.extend(files.into_iter().map(|f| (class_id, f)));
    }

    let decode = |(class_id, path): &(usize, PathBuf)| -> Result<LabeledImage> {
        Ok(LabeledImage {
            image: load_image(path)?,
            class_id: *class_id,
            source_path: path.clone(),
        })
    };
    #[cfg(feature = "parallel")]
    let items: Vec<LabeledImage> = tasks.par_iter().map(decode).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let items: Vec<LabeledImage> = tasks.iter().map(decode).collect::<Result<_>>()?;

    Dataset::from_items(items, class_dirs.len(), folds, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_pgm_bytes(path: &Path, w: usize, h: usize, value: u8) {
        let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
        bytes.extend(std::iter::repeat(value).take(w * h));
        std::fs::write(path, bytes).unwrap();
    }

    fn fake_root(classes: usize, per_class: usize) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for c in 0..classes {
            let class_dir = dir.path().join(format!("class_{c:03}"));
            std::fs::create_dir(&class_dir).unwrap();
            for i in 0..per_class {
                write_pgm_bytes(&class_dir.join(format!("img_{i:03}.pgm")), 4, 4, (c * 16 + i) as u8);
            }
        }
        dir
    }

    #[test]
    fn two_classes_ten_images_ten_folds() {
        let root = fake_root(2, 10);
        let ds = load_dataset(root.path(), 10, 0).unwrap();
        assert_eq!(ds.len(), 20);
        assert_eq!(ds.class_count(), 2);
        // each fold holds exactly one image per class
        for fold in 0..10 {
            for class in 0..2 {
                let n = ds
                    .items()
                    .iter()
                    .zip(ds.fold_of())
                    .filter(|(it, &f)| it.class_id == class && f == fold)
                    .count();
                assert_eq!(n, 1);
            }
        }
    }

    #[test]
    fn brodatz_layout_fold_sizes() {
        // 111 classes x 10 images, 10 folds: 111 items per fold
        let labels: Vec<usize> = (0..111).flat_map(|c| std::iter::repeat(c).take(10)).collect();
        let folds = stratified_folds(&labels, 111, 10, 0).unwrap();
        for f in 0..10 {
            assert_eq!(folds.iter().filter(|&&x| x == f).count(), 111);
        }
    }

    #[test]
    fn fold_assignment_is_deterministic() {
        let root = fake_root(3, 5);
        let a = load_dataset(root.path(), 5, 7).unwrap();
        let b = load_dataset(root.path(), 5, 7).unwrap();
        assert_eq!(a.fold_of(), b.fold_of());
        let c = load_dataset(root.path(), 5, 8).unwrap();
        assert_ne!(a.fold_of(), c.fold_of());
    }

    #[test]
    fn item_order_is_lexicographic() {
        let root = fake_root(2, 3);
        let ds = load_dataset(root.path(), 3, 0).unwrap();
        let paths: Vec<_> = ds.items().iter().map(|it| it.source_path.clone()).collect();
        let mut sorted = paths.clone();
        sorted.sort();
        assert_eq!(paths, sorted);
    }

    #[test]
    fn every_item_in_exactly_one_fold() {
        let labels: Vec<usize> = (0..4).flat_map(|c| std::iter::repeat(c).take(7)).collect();
        let folds = stratified_folds(&labels, 4, 7, 3).unwrap();
        assert_eq!(folds.len(), labels.len());
        let total: usize = (0..7).map(|f| folds.iter().filter(|&&x| x == f).count()).sum();
        assert_eq!(total, labels.len());
    }

    #[test]
    fn per_class_fold_sizes_differ_by_at_most_one() {
        let labels: Vec<usize> = std::iter::repeat(0)
            .take(13)
            .chain(std::iter::repeat(1).take(17))
            .collect();
        let folds = stratified_folds(&labels, 2, 5, 1).unwrap();
        for class in 0..2 {
            let sizes: Vec<usize> = (0..5)
                .map(|f| {
                    labels
                        .iter()
                        .zip(&folds)
                        .filter(|&(&l, &fo)| l == class && fo == f)
                        .count()
                })
                .collect();
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            assert!(hi - lo <= 1, "sizes {sizes:?}");
        }
    }

    #[test]
    fn empty_class_directory_is_an_error() {
        let root = fake_root(2, 4);
        std::fs::create_dir(root.path().join("class_zzz")).unwrap();
        let err = load_dataset(root.path(), 2, 0).unwrap_err();
        assert!(matches!(err, Error::EmptyClass { ref class } if class == "class_zzz"));
    }

    #[test]
    fn too_few_images_is_a_stratification_error() {
        let root = fake_root(1, 4);
        let err = load_dataset(root.path(), 5, 0).unwrap_err();
        assert!(matches!(err, Error::Stratification { count: 4, folds: 5, .. }));
    }

    #[test]
    fn class_ids_follow_lexicographic_directory_order() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["beta", "alpha"] {
            let class_dir = dir.path().join(name);
            std::fs::create_dir(&class_dir).unwrap();
            write_pgm_bytes(&class_dir.join("a.pgm"), 2, 2, 10);
        }
        let ds = load_dataset(dir.path(), 1, 0).unwrap();
        let alpha = ds
            .items()
            .iter()
            .find(|it| it.source_path.to_string_lossy().contains("alpha"))
            .unwrap();
        assert_eq!(alpha.class_id, 0);
    }
}
