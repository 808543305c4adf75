//! Classifiers and the cross-validated accuracy sweep.
//!
//! All tie-breaks (equidistant neighbors, equal posteriors, equal best
//! accuracies) resolve toward the smallest index so repeated runs are
//! bit-identical.

use std::fmt;
use std::str::FromStr;

use crate::descriptors::DescriptorKind;
use crate::diffusion::DiffusionMethod;
use crate::error::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// The two classifiers of the experimental protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassifierKind {
    Knn1,
    NaiveBayes,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 2] = [ClassifierKind::Knn1, ClassifierKind::NaiveBayes];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierKind::Knn1 => "knn1",
            ClassifierKind::NaiveBayes => "nb",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "knn1" | "knn" => Ok(ClassifierKind::Knn1),
            "nb" | "naivebayes" => Ok(ClassifierKind::NaiveBayes),
            _ => Err(Error::UnknownName {
                kind: "classifier",
                name: s.to_string(),
            }),
        }
    }
}

/// One feature row per labeled image, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub descriptor: DescriptorKind,
    /// Scale index the rows were extracted at; 0 means the original images.
    pub it: usize,
    dim: usize,
    values: Vec<f64>,
    labels: Vec<usize>,
    fold_of: Vec<usize>,
}

impl FeatureTable {
    pub fn new(descriptor: DescriptorKind, it: usize, dim: usize) -> Self {
        FeatureTable {
            descriptor,
            it,
            dim,
            values: Vec::new(),
            labels: Vec::new(),
            fold_of: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: &[f64], label: usize, fold: usize) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: row.len(),
            });
        }
        self.values.extend_from_slice(row);
        self.labels.push(label);
        self.fold_of.push(fold);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn class_count(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| m + 1)
    }

    fn subset(&self, keep: impl Fn(usize) -> bool) -> FeatureTable {
        let mut out = FeatureTable::new(self.descriptor, self.it, self.dim);
        for i in 0..self.len() {
            if keep(i) {
                out.values.extend_from_slice(self.row(i));
                out.labels.push(self.labels[i]);
                out.fold_of.push(self.fold_of[i]);
            }
        }
        out
    }
}

/// Row-wise concatenation of two aligned tables (same dataset and descriptor,
/// same row order). The result carries the scale table's iteration index.
pub fn concat_features(original: &FeatureTable, scaled: &FeatureTable) -> Result<FeatureTable> {
    if original.len() != scaled.len() {
        return Err(Error::Alignment(format!(
            "row counts differ: {} vs {}",
            original.len(),
            scaled.len()
        )));
    }
    if original.descriptor != scaled.descriptor {
        return Err(Error::Alignment(format!(
            "descriptors differ: {} vs {}",
            original.descriptor, scaled.descriptor
        )));
    }
    if original.labels != scaled.labels {
        return Err(Error::Alignment("label sequences differ".into()));
    }
    if original.fold_of != scaled.fold_of {
        return Err(Error::Alignment("fold assignments differ".into()));
    }
    let mut out = FeatureTable::new(scaled.descriptor, scaled.it, original.dim + scaled.dim);
    for i in 0..original.len() {
        out.values.extend_from_slice(original.row(i));
        out.values.extend_from_slice(scaled.row(i));
        out.labels.push(original.labels[i]);
        out.fold_of.push(original.fold_of[i]);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// k-nearest neighbors
// ---------------------------------------------------------------------------

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Label of the Euclidean-nearest training row; distance ties break toward
/// the smallest training-row index, vote ties toward the smallest label.
pub fn knn_predict(train: &FeatureTable, query: &[f64], k: usize) -> Result<usize> {
    if train.is_empty() {
        return Err(Error::Config("knn training set is empty".into()));
    }
    if query.len() != train.dim() {
        return Err(Error::Dimension {
            expected: train.dim(),
            got: query.len(),
        });
    }
    if k <= 1 {
        let mut best = (f64::INFINITY, 0usize);
        for i in 0..train.len() {
            let d2 = squared_distance(query, train.row(i));
            if d2 < best.0 {
                best = (d2, i);
            }
        }
        return Ok(train.labels()[best.1]);
    }
    let mut scored: Vec<(f64, usize)> = (0..train.len())
        .map(|i| (squared_distance(query, train.row(i)), i))
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut votes = vec![0usize; train.class_count()];
    for &(_, i) in scored.iter().take(k.min(scored.len())) {
        votes[train.labels()[i]] += 1;
    }
    let mut winner = 0;
    for (label, &count) in votes.iter().enumerate() {
        if count > votes[winner] {
            winner = label;
        }
    }
    Ok(winner)
}

// ---------------------------------------------------------------------------
// Gaussian Naive Bayes
// ---------------------------------------------------------------------------

const VARIANCE_FLOOR: f64 = 1e-9;

/// Per-class feature means and variances plus log priors.
#[derive(Debug, Clone)]
pub struct NbModel {
    class_count: usize,
    dim: usize,
    pub(crate) log_priors: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
}

pub fn nb_train(train: &FeatureTable) -> Result<NbModel> {
    if train.is_empty() {
        return Err(Error::Config("naive bayes training set is empty".into()));
    }
    let class_count = train.class_count();
    let dim = train.dim();
    let mut counts = vec![0usize; class_count];
    let mut means = vec![0.0; class_count * dim];
    for i in 0..train.len() {
        let label = train.labels()[i];
        counts[label] += 1;
        for (m, &v) in means[label * dim..(label + 1) * dim].iter_mut().zip(train.row(i)) {
            *m += v;
        }
    }
    for (label, &n) in counts.iter().enumerate() {
        if n > 0 {
            for m in &mut means[label * dim..(label + 1) * dim] {
                *m /= n as f64;
            }
        }
    }
    let mut variances = vec![0.0; class_count * dim];
    for i in 0..train.len() {
        let label = train.labels()[i];
        let mu = &means[label * dim..(label + 1) * dim];
        let var = &mut variances[label * dim..(label + 1) * dim];
        for ((v, &x), &m) in var.iter_mut().zip(train.row(i)).zip(mu) {
            let d = x - m;
            *v += d * d;
        }
    }
    let total = train.len() as f64;
    let mut log_priors = vec![f64::NEG_INFINITY; class_count];
    for (label, &n) in counts.iter().enumerate() {
        if n > 0 {
            for v in &mut variances[label * dim..(label + 1) * dim] {
                *v = (*v / n as f64).max(VARIANCE_FLOOR);
            }
            log_priors[label] = (n as f64 / total).ln();
        }
    }
    Ok(NbModel {
        class_count,
        dim,
        log_priors,
        means,
        variances,
    })
}

pub fn nb_predict(model: &NbModel, query: &[f64]) -> Result<usize> {
    if query.len() != model.dim {
        return Err(Error::Dimension {
            expected: model.dim,
            got: query.len(),
        });
    }
    let half_log_two_pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for class in 0..model.class_count {
        let prior = model.log_priors[class];
        if prior == f64::NEG_INFINITY {
            continue;
        }
        let mu = &model.means[class * model.dim..(class + 1) * model.dim];
        let var = &model.variances[class * model.dim..(class + 1) * model.dim];
        let mut score = prior;
        for ((&x, &m), &v) in query.iter().zip(mu).zip(var) {
            let d = x - m;
            score -= half_log_two_pi + 0.5 * v.ln() + d * d / (2.0 * v);
        }
        if score > best.0 {
            best = (score, class);
        }
    }
    Ok(best.1)
}

// ---------------------------------------------------------------------------
// Cross validation
// ---------------------------------------------------------------------------

/// Leave-one-fold-out evaluation; returns (mean, sample std) of the per-fold
/// accuracies in percent.
pub fn cross_validate(table: &FeatureTable, classifier: ClassifierKind) -> Result<(f64, f64)> {
    let folds = table.fold_of().iter().copied().max().map_or(0, |m| m + 1);
    if folds == 0 {
        return Err(Error::Config("feature table has no fold assignment".into()));
    }
    let mut accuracies = Vec::with_capacity(folds);
    for fold in 0..folds {
        let test_idx: Vec<usize> = (0..table.len())
            .filter(|&i| table.fold_of()[i] == fold)
            .collect();
        if test_idx.is_empty() {
            return Err(Error::Config(format!("fold {fold} is empty")));
        }
        let train = table.subset(|i| table.fold_of()[i] != fold);
        let model = match classifier {
            ClassifierKind::Knn1 => None,
            ClassifierKind::NaiveBayes => Some(nb_train(&train)?),
        };
        let predict = |&i: &usize| -> Result<bool> {
            let predicted = match &model {
                None => knn_predict(&train, table.row(i), 1)?,
                Some(nb) => nb_predict(nb, table.row(i))?,
            };
            Ok(predicted == table.labels()[i])
        };
        #[cfg(feature = "parallel")]
        let hits: Vec<bool> = test_idx.par_iter().map(predict).collect::<Result<_>>()?;
        #[cfg(not(feature = "parallel"))]
        let hits: Vec<bool> = test_idx.iter().map(predict).collect::<Result<_>>()?;
        let correct = hits.iter().filter(|&&h| h).count();
        accuracies.push(100.0 * correct as f64 / test_idx.len() as f64);
    }
    let mean = accuracies.iter().sum::<f64>() / folds as f64;
    let std = if folds > 1 {
        let ss: f64 = accuracies.iter().map(|a| (a - mean) * (a - mean)).sum();
        (ss / (folds - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, std))
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

/// Accuracy of one cross-validated cell, in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub mean: f64,
    pub std: f64,
}

/// Accuracies for one (method, descriptor, classifier) combination: the
/// baseline plus one cell per iteration, and the best iteration.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub method: DiffusionMethod,
    pub descriptor: DescriptorKind,
    pub classifier: ClassifierKind,
    pub baseline: CellStats,
    /// per_iteration[i] holds iteration it = i + 1.
    pub per_iteration: Vec<CellStats>,
    /// Argmax iteration in [1, n_scales]; ties break toward the smallest it.
    pub best_it: usize,
    pub best: CellStats,
}

impl SweepResult {
    /// Assembles a result from already-computed cells; `per_iteration[i]`
    /// holds iteration i + 1.
    pub fn from_cells(
        method: DiffusionMethod,
        descriptor: DescriptorKind,
        classifier: ClassifierKind,
        baseline: CellStats,
        per_iteration: Vec<CellStats>,
    ) -> Result<Self> {
        if per_iteration.is_empty() {
            return Err(Error::Config("sweep needs at least one iteration".into()));
        }
        let mut best_it = 1;
        for (i, cell) in per_iteration.iter().enumerate() {
            if cell.mean > per_iteration[best_it - 1].mean {
                best_it = i + 1;
            }
        }
        let best = per_iteration[best_it - 1];
        Ok(SweepResult {
            method,
            descriptor,
            classifier,
            baseline,
            per_iteration,
            best_it,
            best,
        })
    }

    pub fn gain(&self) -> f64 {
        self.best.mean - self.baseline.mean
    }
}

/// Runs the sweep over already-extracted tables: `scale_tables[i]` holds the
/// features at iteration i + 1.
pub fn sweep_tables(
    method: DiffusionMethod,
    classifier: ClassifierKind,
    baseline_table: &FeatureTable,
    scale_tables: &[FeatureTable],
) -> Result<SweepResult> {
    let (mean, std) = cross_validate(baseline_table, classifier)?;
    let baseline = CellStats { mean, std };
    let mut per_iteration = Vec::with_capacity(scale_tables.len());
    for table in scale_tables {
        let combined = concat_features(baseline_table, table)?;
        let (mean, std) = cross_validate(&combined, classifier)?;
        per_iteration.push(CellStats { mean, std });
    }
    SweepResult::from_cells(
        method,
        baseline_table.descriptor,
        classifier,
        baseline,
        per_iteration,
    )
}
