//! CSV ingestion and the `--data` source syntax.

use std::collections::BTreeSet;
use std::path::Path;

use relucid_core::data::{generate_p2, Dataset};
use relucid_core::Matrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    Last,
}

impl LabelColumn {
    /// A bare integer is an index, anything else a header name.
    pub fn parse(s: &str) -> Self {
        match s.parse() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.into()),
        }
    }
}

/// Loads a numeric CSV. With `has_header = None` the first row is taken as a
/// header when any of its feature fields is not a number.
///
/// Labels that are all non-negative integers are used as class indices;
/// otherwise distinct label strings are indexed in sorted order.
pub fn load_csv(path: &Path, label: &LabelColumn, has_header: Option<bool>) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, label, has_header)
}

pub fn parse_csv(text: &str, label: &LabelColumn, has_header: Option<bool>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<String>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(rec.iter().map(str::to_owned).collect());
    }
    let first = rows.first().ok_or_else(|| Error::Csv("no rows".into()))?;
    let width = first.len();
    if width < 2 {
        return Err(Error::Csv("need at least one feature column and a label column".into()));
    }
    let header = match has_header {
        Some(h) => h,
        None => {
            let named = matches!(label, LabelColumn::Name(_));
            named || first.iter().any(|f| f.parse::<f64>().is_err() && !f.is_empty())
        }
    };
    let names: Vec<String> = if header {
        rows.remove(0)
    } else {
        (1..=width).map(|i| format!("x{i}")).collect()
    };
    let label_idx = match label {
        LabelColumn::Last => width - 1,
        LabelColumn::Index(i) if *i < width => *i,
        LabelColumn::Index(i) => {
            return Err(Error::Csv(format!("label column {i} outside {width} columns")))
        }
        LabelColumn::Name(n) => names
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Error::Csv(format!("no column named {n:?}")))?,
    };
    if rows.is_empty() {
        return Err(Error::Csv("no data rows".into()));
    }
    let mut features = Vec::with_capacity(rows.len() * (width - 1));
    let mut raw_labels = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let line = r + 1 + header as usize;
        if row.len() != width {
            return Err(Error::Csv(format!("line {line}: {} fields, expected {width}", row.len())));
        }
        for (c, field) in row.iter().enumerate() {
            if c == label_idx {
                raw_labels.push(field.as_str());
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Csv(format!("line {line}: {field:?} is not a number")))?;
            if !v.is_finite() {
                return Err(Error::Csv(format!("line {line}: non-finite value")));
            }
            features.push(v);
        }
    }
    let (labels, class_count) = index_labels(&raw_labels);
    let feature_names = names
        .into_iter()
        .enumerate()
        .filter(|&(c, _)| c != label_idx)
        .map(|(_, n)| n)
        .collect();
    let features = Matrix::from_vec(rows.len(), width - 1, features)?;
    Ok(Dataset::new(features, labels, feature_names, class_count)?)
}

fn index_labels(raw: &[&str]) -> (Vec<usize>, usize) {
    let ints: Option<Vec<usize>> = raw.iter().map(|s| s.parse().ok()).collect();
    if let Some(ints) = ints {
        let count = ints.iter().max().map_or(1, |m| m + 1).max(2);
        return (ints, count);
    }
    let distinct: BTreeSet<&str> = raw.iter().copied().collect();
    let order: Vec<&str> = distinct.into_iter().collect();
    let labels = raw
        .iter()
        .map(|s| order.binary_search(s).expect("label collected above"))
        .collect();
    (labels, order.len().max(2))
}

/// `p2:N` or `p2:N:SEED` generates the synthetic annulus task; anything else is a CSV path.
pub fn load_source(spec: &str, label: &LabelColumn, has_header: Option<bool>) -> Result<Dataset> {
    if let Some(rest) = spec.strip_prefix("p2:") {
        let mut parts = rest.split(':');
        let n = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Usage(format!("bad data source {spec:?}: expected p2:N[:SEED]")))?;
        let seed = match parts.next() {
            None => 0,
            Some(s) => s
                .parse()
                .map_err(|_| Error::Usage(format!("bad seed in data source {spec:?}")))?,
        };
        if parts.next().is_some() {
            return Err(Error::Usage(format!("bad data source {spec:?}")));
        }
        return Ok(generate_p2(n, seed)?);
    }
    load_csv(Path::new(spec), label, has_header)
}
