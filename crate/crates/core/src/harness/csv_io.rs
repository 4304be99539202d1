//! CSV datasets: one sample per row, one label column.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::DMatrix;

use crate::data::Dataset;
use crate::error::{Error, Result};

use super::write_atomic;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    /// Requires a header line.
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LoadOptions {
    pub label_column: LabelColumn,
    pub has_header: bool,
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads a dataset. Labels are arbitrary tokens mapped to class indices in
/// order of first appearance; the original tokens become the class names.
pub fn load_csv(path: &Path, options: &LoadOptions) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_error(path, 0, e.to_string()))?;
    parse_csv(&text, path, options)
}

/// [`load_csv`] on in-memory text; `path` is only used in error messages.
pub fn parse_csv(text: &str, path: &Path, options: &LoadOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut header: Option<Vec<String>> = None;
    let mut label_index: Option<usize> = None;
    let mut width: Option<usize> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut class_lookup: HashMap<String, usize> = HashMap::new();

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if options.has_header && header.is_none() {
            let names: Vec<String> = record.iter().map(str::to_string).collect();
            label_index = Some(match &options.label_column {
                LabelColumn::Last => names.len() - 1,
                LabelColumn::Named(name) => names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| parse_error(path, line, format!("no column named {name:?}")))?,
            });
            width = Some(names.len());
            header = Some(names);
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(parse_error(
                path,
                line,
                format!("expected {expected} fields, found {}", record.len()),
            ));
        }
        if expected < 2 {
            return Err(parse_error(
                path,
                line,
                "need at least one feature and a label",
            ));
        }
        let label_at = match (&options.label_column, label_index) {
            (_, Some(i)) => i,
            (LabelColumn::Last, None) => expected - 1,
            (LabelColumn::Named(name), None) => {
                return Err(parse_error(
                    path,
                    line,
                    format!("label column {name:?} given by name but the file has no header"),
                ))
            }
        };
        for (j, field) in record.iter().enumerate() {
            if j == label_at {
                let next = class_names.len();
                let class = *class_lookup.entry(field.to_string()).or_insert_with(|| {
                    class_names.push(field.to_string());
                    next
                });
                labels.push(class);
            } else {
                let v: f64 = field.parse().map_err(|_| {
                    parse_error(
                        path,
                        line,
                        format!("column {}: {field:?} is not a number", j + 1),
                    )
                })?;
                if !v.is_finite() {
                    return Err(parse_error(
                        path,
                        line,
                        format!("column {}: non-finite value", j + 1),
                    ));
                }
                values.push(v);
            }
        }
    }

    let width = width.ok_or_else(|| parse_error(path, 1, "file contains no data"))?;
    let samples = labels.len();
    if samples == 0 {
        return Err(parse_error(path, 1, "file contains no data rows"));
    }
    let features = width - 1;
    // row-major samples × features, transposed to features × samples
    let x = DMatrix::from_row_slice(samples, features, &values).transpose();
    let class_count = class_names.len();
    let mut dataset = Dataset::new(x, labels, class_count)?.with_class_names(class_names)?;
    if let (Some(names), Some(label_at)) = (header, label_index) {
        let feature_names = names
            .into_iter()
            .enumerate()
            .filter(|(j, _)| *j != label_at)
            .map(|(_, n)| n)
            .collect();
        dataset = dataset.with_feature_names(feature_names)?;
    }
    Ok(dataset)
}

/// Renders a dataset as CSV with the label in the last column. Values use the
/// shortest decimal form that parses back to the same `f64`.
pub fn render_csv(dataset: &Dataset, header: bool) -> String {
    let d = dataset.feature_count();
    let mut out = String::new();
    if header {
        let names: Vec<String> = match dataset.feature_names() {
            Some(n) => n.to_vec(),
            None => (0..d).map(|i| format!("x{i}")).collect(),
        };
        out.push_str(&names.join(","));
        out.push_str(",label\n");
    }
    let class_names = dataset.class_names();
    for (j, &label) in dataset.labels().iter().enumerate() {
        for i in 0..d {
            out.push_str(&format!("{},", dataset.features()[(i, j)]));
        }
        match class_names {
            Some(names) => out.push_str(&names[label]),
            None => out.push_str(&(label + 1).to_string()),
        }
        out.push('\n');
    }
    out
}

pub fn save_csv(path: &Path, dataset: &Dataset, header: bool) -> Result<()> {
    write_atomic(path, render_csv(dataset, header).as_bytes())
}
