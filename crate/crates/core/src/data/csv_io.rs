//! CSV form of a dataset: header `f0,...,f{m-1},label`, one row per sample.
//! Features are written with 17 significant digits so they read back exactly.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::LabeledDataset;
use crate::error::{Error, Result};

pub fn save_csv(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let header: Vec<String> = (0..ds.m())
        .map(|j| format!("f{j}"))
        .chain(["label".to_string()])
        .collect();
    let write = |out: &mut std::io::BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "{}", header.join(","))?;
        let mut line = String::new();
        for i in 0..ds.len() {
            line.clear();
            for v in ds.row(i) {
                line.push_str(&format!("{v:.16e},"));
            }
            line.push_str(&ds.labels()[i].to_string());
            writeln!(out, "{line}")?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

/// Loads a dataset, taking `K = max(label) + 1` (at least 2).
pub fn load_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    load_csv_with_classes(path, None)
}

pub fn load_csv_with_classes(path: impl AsRef<Path>, k: Option<usize>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let csv_err = |e: csv::Error| {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        Error::format_at_line(&name, line, e.to_string())
    };

    let header = reader.headers().map_err(csv_err)?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::format_at_line(&name, 1, "empty file"));
    }
    let m = header.len() - 1;
    let expected = (0..m).map(|j| format!("f{j}")).chain(["label".to_string()]);
    if m == 0 || !header.iter().zip(expected).all(|(a, b)| a == b) {
        return Err(Error::format_at_line(&name, 1, "header must be f0,...,f{m-1},label"));
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != m + 1 {
            return Err(Error::format_at_line(
                &name,
                line,
                format!("expected {} fields, found {}", m + 1, record.len()),
            ));
        }
        for (j, field) in record.iter().take(m).enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::format_at_line(&name, line, format!("feature f{j} is not a number: `{field}`")))?;
            if !v.is_finite() {
                return Err(Error::format_at_line(
                    &name,
                    line,
                    format!("feature f{j} is not finite"),
                ));
            }
            features.push(v);
        }
        let label = &record[m];
        labels.push(
            label
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::format_at_line(&name, line, format!("label is not a class index: `{label}`")))?,
        );
    }
    if labels.is_empty() {
        return Err(Error::format_at_line(&name, 2, "no samples after header"));
    }
    let inferred = labels.iter().max().map_or(2, |&y| (y + 1).max(2));
    let k = match k {
        Some(k) if k < inferred => {
            return Err(Error::format_at_line(
                &name,
                0,
                format!("label {} exceeds class count {k}", inferred - 1),
            ))
        }
        Some(k) => k,
        None => inferred,
    };
    LabeledDataset::new(features, labels, k, m)
}
