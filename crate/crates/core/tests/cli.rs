use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use frloss::data::load_csv;
use frloss::experiment::{mean_std, tables};
use frloss::LossKind;

fn frloss(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frloss"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value_of(text: &str, key: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.starts_with(&format!("{key} =")))
        .unwrap_or_else(|| panic!("no `{key}` in {text}"));
    line.split('=').nth(1).unwrap().trim().parse().unwrap()
}

#[test]
fn distance_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = frloss(&["distance", "--p", "0.9,0.1", "--q", "0.1,0.9"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!((value_of(&text, "d_fr") - 1.854590).abs() < 1e-6);
    assert!((value_of(&text, "d_h") - 0.894427).abs() < 1e-6);
    assert!((value_of(&text, "4asin(d_h/2)") - 1.854590).abs() < 1e-6);

    let o = frloss(&["distance", "--p", "1,0,0", "--q", "0,0,1"], dir.path());
    let text = stdout(&o);
    assert!((value_of(&text, "d_fr") - std::f64::consts::PI).abs() < 1e-9);
    assert!((value_of(&text, "d_h") - 2f64.sqrt()).abs() < 1e-9);

    let file = dir.path().join("pair.txt");
    std::fs::write(&file, "0.2,0.3,0.5\n\n0.2,0.3,0.5\n").unwrap();
    let o = frloss(&["distance", "--file", file.to_str().unwrap()], dir.path());
    let text = stdout(&o);
    assert_eq!(value_of(&text, "d_fr"), 0.0);
    assert_eq!(value_of(&text, "d_h"), 0.0);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["distance", "--p", "0.5,0.6", "--q", "0.5,0.5"][..],
        &["distance", "--p", "0.5,0.5", "--q", "1,0,0"],
        &["bounds", "--sweep", "k", "--k-min", "10", "--k-max", "5"],
        &["bounds", "--K", "1"],
        &["bounds", "--alphas", "1.2"],
        &["bounds", "--losses", "bogus"],
        &["losses-table", "--losses", "mse"],
        &["nonsense"],
    ] {
        let o = frloss(args, dir.path());
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn bounds_alpha_sweep_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = frloss(
        &[
            "bounds",
            "--sweep",
            "alpha",
            "--K",
            "10",
            "--losses",
            "fr,hellinger,mse,qce:0.7,mae,ce",
            "--points",
            "18",
            "--out",
            "b.csv",
            "--svg",
            "fig",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 3 + 12);
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 18);
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    for row in &rows {
        assert_eq!(row[col("mae_A")], 0.0);
        assert_eq!(row[col("mae_B")], 0.0);
        assert_eq!(row[col("ce_A")], f64::INFINITY);
        assert_eq!(row[col("mse_A")], row[col("eta")]);
    }
    // alpha = 10/18 gives eta = 0.5 at K = 10
    let row = &rows[10];
    assert!((row[col("eta")] - 0.5).abs() < 1e-12);
    assert!((row[col("fr_A")] - 0.366970).abs() < 1e-6);
    for f in ["fig_A.svg", "fig_B.svg"] {
        assert!(std::fs::read_to_string(dir.path().join(f))
            .unwrap()
            .contains("<polyline"));
    }
}

#[test]
fn bounds_class_sweep_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let o = frloss(
        &[
            "bounds", "--sweep", "k", "--alpha", "0.8", "--k-min", "2", "--k-max", "300", "--out", "k.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("k.csv")).unwrap();
    assert_eq!(text.lines().count(), 300);
}

#[test]
fn losses_table_reparses() {
    let dir = tempfile::tempdir().unwrap();
    let o = frloss(&["losses-table", "--points", "50", "--out", "t.csv"], dir.path());
    assert!(o.status.success());
    let mut r = csv::Reader::from_path(dir.path().join("t.csv")).unwrap();
    let header = r.headers().unwrap().clone();
    assert_eq!(&header[0], "p_y");
    assert_eq!(header.len(), 1 + 2 * 5);
    let rows: Vec<Vec<f64>> = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 50);
    assert_eq!(rows[49][0], 1.0);
}

#[test]
fn gen_data_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = frloss(
        &[
            "gen-data",
            "--n-train",
            "50",
            "--n-test",
            "20",
            "--m",
            "6",
            "--k",
            "3",
            "--out-dir",
            "d",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let train = load_csv(dir.path().join("d/train.csv")).unwrap();
    let test = load_csv(dir.path().join("d/test.csv")).unwrap();
    assert_eq!((train.len(), train.m(), test.len()), (50, 6, 20));
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("exp.conf");
    let text = format!(
        "dataset = synthetic
synthetic.n_train = 120
synthetic.n_test = 60
synthetic.m = 6
synthetic.k = 3
synthetic.class_sep = 1.0
losses = ce, fr, qce:0.7
etas = 0, 0.4
seeds = 0, 1, 2
hidden = 8
batch_size = 10
epochs = 4
lr = 0.2
output_dir = out
{extra}"
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn train_writes_consistent_tables() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "");
    let o = frloss(&["train", "--config", "exp.conf"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");

    let epochs = tables::read_epoch_csv(out.join("epochs.csv")).unwrap();
    assert_eq!(epochs.len(), 3 * 2 * 3 * 4);
    let runs = tables::read_runs_csv(out.join("runs.csv")).unwrap();
    assert_eq!(runs.len(), 18);
    assert!(runs.iter().all(|r| !r.2));
    for id in 0..18 {
        let per_run = tables::read_epoch_csv(out.join(format!("runs/run_{id:04}.csv"))).unwrap();
        let merged: Vec<_> = epochs.iter().filter(|r| r.run_id == id).cloned().collect();
        assert_eq!(per_run, merged);
    }

    let summary = tables::read_summary_csv(out.join("summary.csv")).unwrap();
    assert_eq!(summary.len(), 3 * 2);
    for row in &summary {
        let finals: Vec<f64> = epochs
            .iter()
            .filter(|r| r.loss == row.loss && r.eta == row.eta && r.epoch == 4)
            .map(|r| r.test_acc.unwrap())
            .collect();
        assert_eq!(finals.len(), row.n_seeds);
        let (mean, std) = mean_std(&finals);
        assert!((mean - row.mean_test_acc).abs() <= 1e-9);
        assert!((std - row.std_test_acc).abs() <= 1e-9);
    }
    assert_eq!(summary[4].loss, LossKind::qce(0.7).unwrap());

    let best = tables::read_summary_csv(out.join("summary_best_epoch.csv")).unwrap();
    for (b, f) in best.iter().zip(&summary) {
        assert!(b.mean_test_acc >= f.mean_test_acc);
    }
    assert!(out.join("test_acc_eta1.svg").exists());
}

#[test]
fn noiseless_rows_match_a_run_without_noise() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "");
    frloss(&["train", "--config", "exp.conf", "--out", "a"], dir.path());
    std::fs::write(
        dir.path().join("exp.conf"),
        std::fs::read_to_string(dir.path().join("exp.conf"))
            .unwrap()
            .replace("etas = 0, 0.4", "etas = 0"),
    )
    .unwrap();
    frloss(&["train", "--config", "exp.conf", "--out", "b"], dir.path());
    let a = tables::read_epoch_csv(dir.path().join("a/epochs.csv")).unwrap();
    let b = tables::read_epoch_csv(dir.path().join("b/epochs.csv")).unwrap();
    let key = |r: &tables::EpochRow| (r.loss.to_string(), r.seed, r.epoch, r.train_loss.to_bits(), r.test_acc);
    let a0: Vec<_> = a.iter().filter(|r| r.eta == 0.0).map(key).collect();
    let b0: Vec<_> = b.iter().map(key).collect();
    assert_eq!(a0, b0);
}

#[test]
fn sequential_and_parallel_outputs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "lr_grid = 0.05, 0.2\ngrid_epochs = 2");
    assert!(frloss(&["train", "--config", "exp.conf", "--out", "p"], dir.path())
        .status
        .success());
    assert!(frloss(
        &["--sequential", "train", "--config", "exp.conf", "--out", "s"],
        dir.path()
    )
    .status
    .success());
    for f in [
        "epochs.csv",
        "summary.csv",
        "runs.csv",
        "lr_grid.csv",
        "lr_selection.csv",
    ] {
        let a = std::fs::read(dir.path().join("p").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("s").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn grid_lr_single_point_is_selected() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "lr_grid = 0.3");
    let o = frloss(&["grid-lr", "--config", "exp.conf"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sel = tables::read_selection_csv(dir.path().join("out/lr_selection.csv")).unwrap();
    assert_eq!(sel.len(), 6);
    assert!(sel.iter().all(|s| s.2 == 0.3));
}

#[test]
fn grid_lr_requires_a_grid() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "");
    assert_eq!(
        frloss(&["grid-lr", "--config", "exp.conf"], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn out_of_regime_noise_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "");
    let text = std::fs::read_to_string(dir.path().join("exp.conf"))
        .unwrap()
        .replace("synthetic.k = 3", "synthetic.k = 2")
        .replace("etas = 0, 0.4", "etas = 0, 0.5");
    std::fs::write(dir.path().join("exp.conf"), text).unwrap();
    let o = frloss(&["train", "--config", "exp.conf"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("regime"));
}

#[test]
fn missing_data_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.conf"), "dataset = mnist\nmnist.dir = nowhere\n").unwrap();
    let o = frloss(&["train", "--config", "m.conf"], dir.path());
    assert_eq!(o.status.code(), Some(3));

    std::fs::write(dir.path().join("bad.csv"), "f0,label\n0.5,x\n").unwrap();
    std::fs::write(
        dir.path().join("c.conf"),
        "dataset = csv\ncsv.train = bad.csv\ncsv.test = bad.csv\n",
    )
    .unwrap();
    let o = frloss(&["train", "--config", "c.conf"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn divergent_runs_are_flagged_and_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "lr.ce = 1e300");
    let o = frloss(&["train", "--config", "exp.conf"], dir.path());
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let runs = tables::read_runs_csv(out.join("runs.csv")).unwrap();
    assert_eq!(runs.iter().filter(|r| r.2).count(), 6);
    let summary = tables::read_summary_csv(out.join("summary.csv")).unwrap();
    assert_eq!(summary.len(), 6);
    assert!(summary
        .iter()
        .filter(|r| r.loss == LossKind::Ce)
        .all(|r| r.n_seeds == 0));
    assert!(summary
        .iter()
        .filter(|r| r.loss != LossKind::Ce)
        .all(|r| r.n_seeds == 3));
}
