//! Multi-seed training experiments and their CSV/SVG outputs.
//!
//! An experiment trains one network per `(loss, eta, seed)` cell. Output files
//! in the experiment directory:
//!
//! * `runs/run_<id>.csv` per cell, merged into `epochs.csv`
//!   (`run_id,loss,q,eta,seed,epoch,train_loss,train_acc,test_acc`);
//! * `runs.csv` with the learning rate and an `ok`/`diverged` status per run;
//! * `summary.csv` (`loss,q,eta,mean_test_acc,std_test_acc,n_seeds`) over the
//!   final epoch, and `summary_best_epoch.csv` over each run's best epoch;
//! * `lr_grid.csv` and `lr_selection.csv` when a learning-rate grid is searched;
//! * `test_acc_eta<i>.svg` mean test accuracy curves when evaluated every epoch.

mod runner;
mod spec;
pub mod svg;
pub mod tables;

use std::path::{Path, PathBuf};

pub use runner::{
    grid_search, mean_std, noisy_labels, plan_cells, run_cell, run_cells, select_best, summarize, Cell, CellResult,
    EpochChoice, GridPoint, GridSelection, SummaryRow,
};
pub use spec::{DatasetSource, ExperimentSpec};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub results: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
    pub best_epoch_summary: Vec<SummaryRow>,
    pub selections: Vec<GridSelection>,
    pub output_dir: PathBuf,
}

impl ExperimentOutcome {
    pub fn diverged_runs(&self) -> usize {
        self.results.iter().filter(|r| r.diverged()).count()
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Runs the learning-rate grid and writes `lr_grid.csv` and `lr_selection.csv`.
pub fn run_grid(
    spec: &ExperimentSpec,
    train: &LabeledDataset,
    test: &LabeledDataset,
    exec: Execution,
) -> Result<Vec<GridSelection>> {
    let (points, selections) = grid_search(spec, train, test, exec)?;
    create_dir(&spec.output_dir)?;
    tables::write_grid_csv(spec.output_dir.join("lr_grid.csv"), &points)?;
    tables::write_selection_csv(spec.output_dir.join("lr_selection.csv"), &selections)?;
    Ok(selections)
}

/// Full experiment on already loaded data. When `spec.lr_grid` is nonempty the
/// grid search runs first and its selections set each cell's learning rate.
pub fn run_experiment_on(
    spec: &ExperimentSpec,
    train: &LabeledDataset,
    test: &LabeledDataset,
    exec: Execution,
) -> Result<ExperimentOutcome> {
    spec.validate_for(train.k())?;
    let selections = if spec.lr_grid.is_empty() {
        Vec::new()
    } else {
        run_grid(spec, train, test, exec)?
    };
    let cells = plan_cells(spec, |loss, eta_index| {
        selections
            .iter()
            .find(|s| s.loss == loss && s.eta_index == eta_index)
            .map(|s| s.learning_rate)
            .unwrap_or_else(|| spec.learning_rate_for(loss))
    });
    let results = run_cells(spec, &cells, train, test, exec)?;

    let dir = &spec.output_dir;
    let runs_dir = dir.join("runs");
    create_dir(&runs_dir)?;
    let mut all_rows = Vec::new();
    for r in &results {
        let rows = tables::epoch_rows(r);
        tables::write_epoch_csv(runs_dir.join(format!("run_{:04}.csv", r.cell.run_id)), &rows)?;
        all_rows.extend(rows);
    }
    tables::write_epoch_csv(dir.join("epochs.csv"), &all_rows)?;
    tables::write_runs_csv(dir.join("runs.csv"), &results)?;
    let summary = summarize(spec, &results, EpochChoice::Final);
    let best_epoch_summary = summarize(spec, &results, EpochChoice::Best);
    tables::write_summary_csv(dir.join("summary.csv"), &summary)?;
    tables::write_summary_csv(dir.join("summary_best_epoch.csv"), &best_epoch_summary)?;
    if spec.eval_every_epoch {
        write_curves(spec, &results)?;
    }
    Ok(ExperimentOutcome {
        results,
        summary,
        best_epoch_summary,
        selections,
        output_dir: dir.clone(),
    })
}

pub fn run_experiment(spec: &ExperimentSpec, exec: Execution) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let (train, test) = spec.dataset.load()?;
    run_experiment_on(spec, &train, &test, exec)
}

/// Seed-averaged test accuracy per epoch, one plot per noise rate.
fn write_curves(spec: &ExperimentSpec, results: &[CellResult]) -> Result<()> {
    for (eta_index, &eta) in spec.etas.iter().enumerate() {
        let mut plot = svg::LinePlot::new(&format!("test accuracy, eta = {eta}"), "epoch", "test accuracy");
        for &loss in &spec.losses {
            let runs: Vec<&CellResult> = results
                .iter()
                .filter(|r| r.cell.loss == loss && r.cell.eta_index == eta_index && !r.diverged())
                .collect();
            let points = (0..spec.epochs)
                .map(|e| {
                    let accs: Vec<f64> = runs.iter().filter_map(|r| r.report.records[e].test_acc).collect();
                    ((e + 1) as f64, mean_std(&accs).0)
                })
                .collect();
            plot.add(&loss.to_string(), points);
        }
        let path = spec.output_dir.join(format!("test_acc_eta{eta_index}.svg"));
        std::fs::write(&path, plot.render()).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
