use super::spec::ExperimentSpec;
use crate::data::LabeledDataset;
use crate::error::Result;
use crate::exec::Execution;
use crate::loss::LossKind;
use crate::mlp::{init_model, train, TrainReport};
use crate::noise::{corrupt_labels, NoiseSpec};
use crate::rng;

/// One training run of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub run_id: usize,
    pub loss: LossKind,
    pub eta_index: usize,
    pub eta: f64,
    pub seed: u64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: Cell,
    pub report: TrainReport,
}

impl CellResult {
    pub fn diverged(&self) -> bool {
        self.report.divergence.is_some()
    }
}

/// Cells in `loss`, `eta`, `seed` order; `lr` picks the rate for each `(loss, eta index)`.
pub fn plan_cells(spec: &ExperimentSpec, lr: impl Fn(LossKind, usize) -> f64) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &loss in &spec.losses {
        for (eta_index, &eta) in spec.etas.iter().enumerate() {
            for &seed in &spec.seeds {
                cells.push(Cell {
                    run_id: cells.len(),
                    loss,
                    eta_index,
                    eta,
                    seed,
                    learning_rate: lr(loss, eta_index),
                });
            }
        }
    }
    cells
}

/// Training labels for a cell. The corruption depends only on `(seed, eta index)`,
/// so every loss sees the same noisy labels.
pub fn noisy_labels(train: &LabeledDataset, eta: f64, eta_index: usize, seed: u64) -> Result<Vec<usize>> {
    let spec = NoiseSpec::new(eta, rng::derive_seed(seed, eta_index as u64), train.k())?;
    corrupt_labels(train.labels(), &spec)
}

/// Trains one cell from scratch. Test labels are never corrupted.
pub fn run_cell(
    spec: &ExperimentSpec,
    cell: &Cell,
    train_ds: &LabeledDataset,
    test_ds: &LabeledDataset,
    epochs: usize,
    eval_every_epoch: bool,
) -> Result<CellResult> {
    let labels = noisy_labels(train_ds, cell.eta, cell.eta_index, cell.seed)?;
    let noisy = train_ds.with_labels(labels)?;
    let mut config = spec.mlp_config(train_ds.m(), train_ds.k(), cell.loss, cell.seed, cell.learning_rate);
    config.epochs = epochs;
    config.eval_every_epoch = eval_every_epoch;
    let mut model = init_model(&config)?;
    let report = train(&mut model, &noisy, Some(test_ds), &config)?;
    Ok(CellResult { cell: *cell, report })
}

/// Runs every cell; results come back in cell order whatever the execution mode.
pub fn run_cells(
    spec: &ExperimentSpec,
    cells: &[Cell],
    train_ds: &LabeledDataset,
    test_ds: &LabeledDataset,
    exec: Execution,
) -> Result<Vec<CellResult>> {
    spec.validate_for(train_ds.k())?;
    exec.map(cells, |cell| {
        run_cell(spec, cell, train_ds, test_ds, spec.epochs, spec.eval_every_epoch)
    })
    .into_iter()
    .collect()
}

/// Mean and sample standard deviation (`n - 1`; zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Which epoch's test accuracy a summary aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochChoice {
    Final,
    Best,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub loss: LossKind,
    pub eta: f64,
    pub mean_test_acc: f64,
    pub std_test_acc: f64,
    /// Runs that finished; diverged runs are left out.
    pub n_seeds: usize,
}

/// One row per `(loss, eta)` in spec order.
pub fn summarize(spec: &ExperimentSpec, results: &[CellResult], choice: EpochChoice) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &loss in &spec.losses {
        for (eta_index, &eta) in spec.etas.iter().enumerate() {
            let accs: Vec<f64> = results
                .iter()
                .filter(|r| r.cell.loss == loss && r.cell.eta_index == eta_index && !r.diverged())
                .filter_map(|r| match choice {
                    EpochChoice::Final => r.report.final_test_acc(),
                    EpochChoice::Best => r.report.best_test_acc(),
                })
                .collect();
            let (mean, std) = mean_std(&accs);
            rows.push(SummaryRow {
                loss,
                eta,
                mean_test_acc: mean,
                std_test_acc: std,
                n_seeds: accs.len(),
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub loss: LossKind,
    pub eta: f64,
    pub learning_rate: f64,
    /// Mean final test accuracy over the grid seeds; diverged runs count as 0.
    pub mean_test_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSelection {
    pub loss: LossKind,
    pub eta_index: usize,
    pub eta: f64,
    pub learning_rate: f64,
    pub mean_test_acc: f64,
}

/// Index of the best accuracy; ties go to the smaller learning rate.
pub fn select_best(points: &[(f64, f64)]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &(lr, acc)) in points.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let (blr, bacc) = points[b];
                if acc > bacc || (acc == bacc && lr < blr) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Short training per `(loss, eta, lr)` on the first `grid_seeds` seeds, test
/// evaluation at the end only. Returns every grid point and the selection per `(loss, eta)`.
pub fn grid_search(
    spec: &ExperimentSpec,
    train_ds: &LabeledDataset,
    test_ds: &LabeledDataset,
    exec: Execution,
) -> Result<(Vec<GridPoint>, Vec<GridSelection>)> {
    spec.validate_for(train_ds.k())?;
    if spec.lr_grid.is_empty() {
        return Err(crate::Error::InvalidSpec("lr_grid is empty".into()));
    }
    let seeds = &spec.seeds[..spec.grid_seeds.min(spec.seeds.len())];
    let epochs = spec.grid_epochs.unwrap_or(spec.epochs);
    let mut cells = Vec::new();
    for &loss in &spec.losses {
        for (eta_index, &eta) in spec.etas.iter().enumerate() {
            for &learning_rate in &spec.lr_grid {
                for &seed in seeds {
                    cells.push(Cell {
                        run_id: cells.len(),
                        loss,
                        eta_index,
                        eta,
                        seed,
                        learning_rate,
                    });
                }
            }
        }
    }
    let results: Vec<CellResult> = exec
        .map(&cells, |cell| run_cell(spec, cell, train_ds, test_ds, epochs, false))
        .into_iter()
        .collect::<Result<_>>()?;

    let mut points = Vec::new();
    let mut selections = Vec::new();
    for group in results.chunks(seeds.len() * spec.lr_grid.len()) {
        let first = group[0].cell;
        let start = points.len();
        for per_lr in group.chunks(seeds.len()) {
            let accs: Vec<f64> = per_lr
                .iter()
                .map(|r| {
                    if r.diverged() {
                        0.0
                    } else {
                        r.report.final_test_acc().unwrap_or(0.0)
                    }
                })
                .collect();
            points.push(GridPoint {
                loss: first.loss,
                eta: first.eta,
                learning_rate: per_lr[0].cell.learning_rate,
                mean_test_acc: mean_std(&accs).0,
            });
        }
        let pairs: Vec<(f64, f64)> = points[start..]
            .iter()
            .map(|p| (p.learning_rate, p.mean_test_acc))
            .collect();
        let best = &points[start + select_best(&pairs).expect("grid is nonempty")];
        selections.push(GridSelection {
            loss: first.loss,
            eta_index: first.eta_index,
            eta: first.eta,
            learning_rate: best.learning_rate,
            mean_test_acc: best.mean_test_acc,
        });
    }
    Ok((points, selections))
}
