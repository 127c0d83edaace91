//! CSV files written by experiments. Column sets are fixed; floats use the
//! shortest representation that parses back to the same value, and missing
//! values are empty fields.

use std::path::Path;

use super::runner::{CellResult, GridPoint, GridSelection, SummaryRow};
use crate::bounds::CurveRow;
use crate::error::{Error, Result};
use crate::loss::{self, LossKind};

pub const EPOCH_HEADER: [&str; 9] = [
    "run_id",
    "loss",
    "q",
    "eta",
    "seed",
    "epoch",
    "train_loss",
    "train_acc",
    "test_acc",
];
pub const SUMMARY_HEADER: [&str; 6] = ["loss", "q", "eta", "mean_test_acc", "std_test_acc", "n_seeds"];
pub const RUNS_HEADER: [&str; 8] = ["run_id", "loss", "q", "eta", "seed", "lr", "epochs_completed", "status"];
pub const GRID_HEADER: [&str; 5] = ["loss", "q", "eta", "lr", "mean_test_acc"];

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRow {
    pub run_id: usize,
    pub loss: LossKind,
    pub eta: f64,
    pub seed: u64,
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
}

pub fn epoch_rows(result: &CellResult) -> Vec<EpochRow> {
    let c = &result.cell;
    result
        .report
        .records
        .iter()
        .map(|r| EpochRow {
            run_id: c.run_id,
            loss: c.loss,
            eta: c.eta,
            seed: c.seed,
            epoch: r.epoch,
            train_loss: r.train_loss,
            train_acc: r.train_acc,
            test_acc: r.test_acc,
        })
        .collect()
}

fn q_field(loss: LossKind) -> String {
    loss.q().map(|q| q.to_string()).unwrap_or_default()
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format_at_line(path.display().to_string(), line, format!("{other:?}")),
    }
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_epoch_csv(path: impl AsRef<Path>, rows: &[EpochRow]) -> Result<()> {
    write_rows(
        path.as_ref(),
        &EPOCH_HEADER,
        rows.iter().map(|r| {
            vec![
                r.run_id.to_string(),
                r.loss.name().to_string(),
                q_field(r.loss),
                r.eta.to_string(),
                r.seed.to_string(),
                r.epoch.to_string(),
                r.train_loss.to_string(),
                r.train_acc.to_string(),
                opt_field(r.test_acc),
            ]
        }),
    )
}

pub fn write_summary_csv(path: impl AsRef<Path>, rows: &[SummaryRow]) -> Result<()> {
    write_rows(
        path.as_ref(),
        &SUMMARY_HEADER,
        rows.iter().map(|r| {
            vec![
                r.loss.name().to_string(),
                q_field(r.loss),
                r.eta.to_string(),
                r.mean_test_acc.to_string(),
                r.std_test_acc.to_string(),
                r.n_seeds.to_string(),
            ]
        }),
    )
}

pub fn write_runs_csv(path: impl AsRef<Path>, results: &[CellResult]) -> Result<()> {
    write_rows(
        path.as_ref(),
        &RUNS_HEADER,
        results.iter().map(|r| {
            let c = &r.cell;
            vec![
                c.run_id.to_string(),
                c.loss.name().to_string(),
                q_field(c.loss),
                c.eta.to_string(),
                c.seed.to_string(),
                c.learning_rate.to_string(),
                r.report.records.len().to_string(),
                if r.diverged() { "diverged" } else { "ok" }.to_string(),
            ]
        }),
    )
}

pub fn write_grid_csv(path: impl AsRef<Path>, points: &[GridPoint]) -> Result<()> {
    write_rows(
        path.as_ref(),
        &GRID_HEADER,
        points.iter().map(|p| {
            vec![
                p.loss.name().to_string(),
                q_field(p.loss),
                p.eta.to_string(),
                p.learning_rate.to_string(),
                p.mean_test_acc.to_string(),
            ]
        }),
    )
}

pub fn write_selection_csv(path: impl AsRef<Path>, selections: &[GridSelection]) -> Result<()> {
    write_rows(
        path.as_ref(),
        &GRID_HEADER,
        selections.iter().map(|s| {
            vec![
                s.loss.name().to_string(),
                q_field(s.loss),
                s.eta.to_string(),
                s.learning_rate.to_string(),
                s.mean_test_acc.to_string(),
            ]
        }),
    )
}

/// Column prefix for a loss in wide tables, e.g. `fr` or `qce0.7`.
pub fn column_prefix(loss: LossKind) -> String {
    match loss.q() {
        Some(q) => format!("qce{q}"),
        None => loss.name().to_string(),
    }
}

/// Wide bound table: `alpha,K,eta` then `<loss>_A,<loss>_B` per loss.
pub fn write_bounds_csv(path: impl AsRef<Path>, kinds: &[LossKind], rows: &[CurveRow]) -> Result<()> {
    let mut header = vec!["alpha".to_string(), "K".to_string(), "eta".to_string()];
    for &kind in kinds {
        let p = column_prefix(kind);
        header.push(format!("{p}_A"));
        header.push(format!("{p}_B"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(
        path.as_ref(),
        &header,
        rows.iter().map(|r| {
            let mut out = vec![r.alpha.to_string(), r.k.to_string(), r.eta.to_string()];
            for &(a, b) in &r.values {
                out.push(a.to_string());
                out.push(b.to_string());
            }
            out
        }),
    )
}

/// `h(p)` and `|h'(p)|` on `points` evenly spaced values `p = i / points`, `i = 1..=points`.
pub fn losses_table(kinds: &[LossKind], points: usize) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    if points == 0 {
        return Err(Error::InvalidInput("need at least one grid point".into()));
    }
    let mut header = vec!["p_y".to_string()];
    for &kind in kinds {
        if !kind.is_h_form() {
            return Err(Error::UnsupportedKind(format!("{kind} has no h(p_y) form")));
        }
        let p = column_prefix(kind);
        header.push(format!("{p}_h"));
        header.push(format!("{p}_dh"));
    }
    let rows = (1..=points)
        .map(|i| {
            let p = i as f64 / points as f64;
            let mut row = vec![p];
            for &kind in kinds {
                row.push(loss::h_value(kind, p)?);
                row.push(loss::h_prime_abs(kind, p)?);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}

pub fn write_numeric_csv(path: impl AsRef<Path>, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(
        path.as_ref(),
        &header,
        rows.iter().map(|r| r.iter().map(f64::to_string).collect()),
    )
}

/// A parsed CSV: header plus string records, with line numbers for error messages.
struct Table {
    name: String,
    records: Vec<(u64, csv::StringRecord)>,
}

fn read_table(path: &Path, expected: &[&str]) -> Result<Table> {
    let name = path.display().to_string();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::format_at_line(
            &name,
            1,
            format!("expected header `{}`", expected.join(",")),
        ));
    }
    let mut records = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        records.push((line, rec));
    }
    Ok(Table { name, records })
}

impl Table {
    fn field<T: std::str::FromStr>(&self, line: u64, rec: &csv::StringRecord, i: usize, col: &str) -> Result<T> {
        rec[i]
            .parse()
            .map_err(|_| Error::format_at_line(&self.name, line, format!("bad `{col}` value `{}`", &rec[i])))
    }

    fn loss(&self, line: u64, rec: &csv::StringRecord, i: usize) -> Result<LossKind> {
        let text = if rec[i] == *"qce" {
            format!("qce:{}", &rec[i + 1])
        } else {
            rec[i].to_string()
        };
        text.parse()
            .map_err(|_| Error::format_at_line(&self.name, line, format!("bad loss `{text}`")))
    }
}

pub fn read_epoch_csv(path: impl AsRef<Path>) -> Result<Vec<EpochRow>> {
    let t = read_table(path.as_ref(), &EPOCH_HEADER)?;
    t.records
        .iter()
        .map(|(line, rec)| {
            let line = *line;
            Ok(EpochRow {
                run_id: t.field(line, rec, 0, "run_id")?,
                loss: t.loss(line, rec, 1)?,
                eta: t.field(line, rec, 3, "eta")?,
                seed: t.field(line, rec, 4, "seed")?,
                epoch: t.field(line, rec, 5, "epoch")?,
                train_loss: t.field(line, rec, 6, "train_loss")?,
                train_acc: t.field(line, rec, 7, "train_acc")?,
                test_acc: if rec[8].is_empty() {
                    None
                } else {
                    Some(t.field(line, rec, 8, "test_acc")?)
                },
            })
        })
        .collect()
}

pub fn read_summary_csv(path: impl AsRef<Path>) -> Result<Vec<SummaryRow>> {
    let t = read_table(path.as_ref(), &SUMMARY_HEADER)?;
    t.records
        .iter()
        .map(|(line, rec)| {
            let line = *line;
            Ok(SummaryRow {
                loss: t.loss(line, rec, 0)?,
                eta: t.field(line, rec, 2, "eta")?,
                mean_test_acc: t.field(line, rec, 3, "mean_test_acc")?,
                std_test_acc: t.field(line, rec, 4, "std_test_acc")?,
                n_seeds: t.field(line, rec, 5, "n_seeds")?,
            })
        })
        .collect()
}

/// `(run_id, lr, diverged)` per run.
pub fn read_runs_csv(path: impl AsRef<Path>) -> Result<Vec<(usize, f64, bool)>> {
    let t = read_table(path.as_ref(), &RUNS_HEADER)?;
    t.records
        .iter()
        .map(|(line, rec)| {
            let status = &rec[7];
            if status != "ok" && status != "diverged" {
                return Err(Error::format_at_line(&t.name, *line, format!("bad status `{status}`")));
            }
            Ok((
                t.field(*line, rec, 0, "run_id")?,
                t.field(*line, rec, 5, "lr")?,
                status == "diverged",
            ))
        })
        .collect()
}

/// Learning-rate selections as written by [`write_selection_csv`]: `(loss, eta, lr)`.
pub fn read_selection_csv(path: impl AsRef<Path>) -> Result<Vec<(LossKind, f64, f64)>> {
    let t = read_table(path.as_ref(), &GRID_HEADER)?;
    t.records
        .iter()
        .map(|(line, rec)| {
            Ok((
                t.loss(*line, rec, 0)?,
                t.field(*line, rec, 2, "eta")?,
                t.field(*line, rec, 3, "lr")?,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{bound_curves, Sweep};

    #[test]
    fn epoch_rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let rows = vec![
            EpochRow {
                run_id: 0,
                loss: LossKind::qce(0.7).unwrap(),
                eta: 0.5,
                seed: 3,
                epoch: 1,
                train_loss: 0.1 + 0.2,
                train_acc: 1.0 / 3.0,
                test_acc: None,
            },
            EpochRow {
                run_id: 1,
                loss: LossKind::Hellinger,
                eta: 0.0,
                seed: 4,
                epoch: 2,
                train_loss: f64::INFINITY,
                train_acc: 0.25,
                test_acc: Some(0.875),
            },
        ];
        write_epoch_csv(&path, &rows).unwrap();
        assert_eq!(read_epoch_csv(&path).unwrap(), rows);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("run_id,loss,q,eta,seed,epoch,train_loss,train_acc,test_acc\n"));
        assert!(text.contains("0,qce,0.7,0.5,3,1,"));
    }

    #[test]
    fn wrong_header_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "loss,eta\nce,0\n").unwrap();
        assert!(matches!(read_summary_csv(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn bounds_table_marks_infinities() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.csv");
        let kinds = [LossKind::Fr, LossKind::qce(0.7).unwrap(), LossKind::Mae, LossKind::Ce];
        let rows = bound_curves(&kinds, &Sweep::alpha_grid(10, 4)).unwrap();
        write_bounds_csv(&path, &kinds, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "alpha,K,eta,fr_A,fr_B,qce0.7_A,qce0.7_B,mae_A,mae_B,ce_A,ce_B"
        );
        assert_eq!(lines.next().unwrap(), "0,10,0,0,0,0,0,0,0,inf,-inf");
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn losses_table_shape_and_mse_rejected() {
        let (header, rows) = losses_table(&[LossKind::Mae, LossKind::Fr], 4).unwrap();
        assert_eq!(header, ["p_y", "mae_h", "mae_dh", "fr_h", "fr_dh"]);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[3], vec![1.0, 0.0, 1.0, 0.0, 1.0]);
        assert!(losses_table(&[LossKind::Mse], 4).is_err());
    }
}
