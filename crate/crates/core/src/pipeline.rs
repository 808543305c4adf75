//! Dataset-level orchestration: per-scale feature extraction, the full
//! accuracy sweep, and the CSV formats shared by the CLI and the tests.

use std::fmt::Write as _;

use crate::classify::{sweep_tables, ClassifierKind, FeatureTable, SweepResult};
use crate::dataset::Dataset;
use crate::descriptors::{extract, DescriptorKind, ExtractOptions};
use crate::diffusion::{DiffusionMethod, DiffusionParams, ScaleSequence};
use crate::error::{Error, Result};
use crate::image::Image;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Feature rows for one image at every scale: `rows[it][d]` is the row for
/// `descriptors[d]` at iteration `it`, with it = 0 the original image.
///
/// Scales are generated once and shared by all requested descriptors, which
/// matters because diffusion dominates the extraction cost.
pub fn extract_rows_for_image(
    image: &Image,
    method: DiffusionMethod,
    params: DiffusionParams,
    n_scales: usize,
    descriptors: &[DescriptorKind],
    opts: &ExtractOptions,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let extract_all = |img: &Image| -> Result<Vec<Vec<f64>>> {
        descriptors
            .iter()
            .map(|&d| extract(img, d, opts).map(|f| f.values))
            .collect()
    };
    let mut rows = Vec::with_capacity(n_scales + 1);
    rows.push(extract_all(image)?);
    let mut sequence = ScaleSequence::new(image, method, params)?;
    for it in 1..=n_scales {
        let scale = sequence.next().expect("scale sequence is unbounded")?;
        if !scale.all_finite() {
            return Err(Error::NonFinite(format!("{method} scale {it}")));
        }
        rows.push(extract_all(&scale)?);
    }
    Ok(rows)
}

/// Extracts one descriptor across the whole dataset at every scale.
///
/// Returns n_scales + 1 aligned tables; index 0 holds the original-image
/// features, index it the features at that iteration.
pub fn extract_feature_tables(
    dataset: &Dataset,
    method: DiffusionMethod,
    params: DiffusionParams,
    n_scales: usize,
    descriptor: DescriptorKind,
    opts: &ExtractOptions,
) -> Result<Vec<FeatureTable>> {
    let job = |item: &crate::dataset::LabeledImage| {
        extract_rows_for_image(&item.image, method, params, n_scales, &[descriptor], opts)
    };
    #[cfg(feature = "parallel")]
    let per_image: Vec<Vec<Vec<Vec<f64>>>> =
        dataset.items().par_iter().map(job).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let per_image: Vec<Vec<Vec<Vec<f64>>>> =
        dataset.items().iter().map(job).collect::<Result<_>>()?;

    let dim = descriptor.feature_len();
    let mut tables = Vec::with_capacity(n_scales + 1);
    for it in 0..=n_scales {
        let mut table = FeatureTable::new(descriptor, it, dim);
        for (item_idx, rows) in per_image.iter().enumerate() {
            table.push_row(
                &rows[it][0],
                dataset.items()[item_idx].class_id,
                dataset.fold_of()[item_idx],
            )?;
        }
        tables.push(table);
    }
    Ok(tables)
}

/// The full sweep for one (method, descriptor, classifier) combination:
/// baseline accuracy on original features, then one cross-validated cell per
/// iteration using original ‖ scale concatenation.
pub fn sweep(
    dataset: &Dataset,
    method: DiffusionMethod,
    descriptor: DescriptorKind,
    classifier: ClassifierKind,
    n_scales: usize,
    params: DiffusionParams,
    opts: &ExtractOptions,
) -> Result<SweepResult> {
    let tables = extract_feature_tables(dataset, method, params, n_scales, descriptor, opts)?;
    let (baseline, scales) = tables.split_first().expect("tables include the baseline");
    sweep_tables(method, classifier, baseline, scales)
}

// ---------------------------------------------------------------------------
// CSV formats
// ---------------------------------------------------------------------------

/// Formats a float with 6 significant digits.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.5}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// `mean(std)` accuracy cell.
pub fn fmt_cell(mean: f64, std: f64) -> String {
    format!("{}({})", fmt_sig6(mean), fmt_sig6(std))
}

pub const SUMMARY_HEADER: &str = "method,descriptor,classifier,baseline,best,best_it";
pub const CURVES_HEADER: &str = "method,descriptor,classifier,it,mean_acc,std_acc";

/// One row per combination: baseline, best accuracy, and the best iteration.
pub fn summary_csv(results: &[SweepResult]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in results {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.method,
            r.descriptor,
            r.classifier,
            fmt_cell(r.baseline.mean, r.baseline.std),
            fmt_cell(r.best.mean, r.best.std),
            r.best_it
        )
        .expect("string writes cannot fail");
    }
    out
}

/// Full per-iteration curves; it = 0 carries the baseline cell.
pub fn curves_csv(results: &[SweepResult]) -> String {
    let mut out = String::from(CURVES_HEADER);
    out.push('\n');
    for r in results {
        writeln!(
            out,
            "{},{},{},0,{},{}",
            r.method,
            r.descriptor,
            r.classifier,
            fmt_sig6(r.baseline.mean),
            fmt_sig6(r.baseline.std)
        )
        .expect("string writes cannot fail");
        for (i, cell) in r.per_iteration.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.method,
                r.descriptor,
                r.classifier,
                i + 1,
                fmt_sig6(cell.mean),
                fmt_sig6(cell.std)
            )
            .expect("string writes cannot fail");
        }
    }
    out
}

/// Serializes one feature table as `label,descriptor,it,v0,v1,...` rows.
///
/// Values use round-trip float formatting so a reloaded table is
/// bit-identical to the freshly computed one.
pub fn feature_table_csv(table: &FeatureTable) -> String {
    let mut out = String::new();
    for i in 0..table.len() {
        write!(out, "{},{},{}", table.labels()[i], table.descriptor, table.it)
            .expect("string writes cannot fail");
        for v in table.row(i) {
            write!(out, ",{v}").expect("string writes cannot fail");
        }
        out.push('\n');
    }
    out
}

/// Parses rows written by [`feature_table_csv`], reattaching fold assignments
/// (folds are dataset state, not part of the row format).
///
/// The expected labels double as a consistency check: a stale or truncated
/// file fails loudly instead of silently misaligning rows.
pub fn parse_feature_table_csv(
    text: &str,
    descriptor: DescriptorKind,
    it: usize,
    labels: &[usize],
    fold_of: &[usize],
) -> Result<FeatureTable> {
    let corrupt = |why: String| Error::Config(format!("feature csv mismatch: {why}"));
    let dim = descriptor.feature_len();
    let mut table = FeatureTable::new(descriptor, it, dim);
    let mut count = 0usize;
    for (line_no, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let label: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| corrupt(format!("bad label on line {line_no}")))?;
        let desc: DescriptorKind = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| corrupt(format!("bad descriptor on line {line_no}")))?;
        let row_it: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| corrupt(format!("bad iteration on line {line_no}")))?;
        if desc != descriptor || row_it != it {
            return Err(corrupt(format!(
                "line {line_no} carries {desc}@{row_it}, expected {descriptor}@{it}"
            )));
        }
        if count >= labels.len() || label != labels[count] {
            return Err(corrupt(format!("label order diverges on line {line_no}")));
        }
        let values: Vec<f64> = parts
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| corrupt(format!("bad value on line {line_no}")))?;
        if values.len() != dim {
            return Err(corrupt(format!(
                "line {line_no} has {} values, expected {dim}",
                values.len()
            )));
        }
        table.push_row(&values, label, fold_of[count])?;
        count += 1;
    }
    if count != labels.len() {
        return Err(corrupt(format!(
            "{count} rows found, dataset has {}",
            labels.len()
        )));
    }
    Ok(table)
}
