use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use frloss::bounds::{bound_curves, CurveRow, Sweep};
use frloss::data::{generate_synthetic, save_csv, SyntheticSpec};
use frloss::experiment::{self, svg::LinePlot, tables, ExperimentSpec};
use frloss::simplex::{fisher_rao_distance, fisher_rao_from_hellinger, hellinger_distance};
use frloss::{Error, Execution, LossKind, ProbVec, Result};

#[derive(Parser)]
#[command(
    name = "frloss",
    version,
    about = "Fisher-Rao and related classification losses under label noise"
)]
struct Cli {
    /// Run independent work items one at a time.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Alpha,
    K,
}

#[derive(Subcommand)]
enum Command {
    /// Noise-robustness bounds A and B over a sweep of alpha or K (eta = alpha (1 - 1/K)).
    Bounds {
        #[arg(long, value_enum, default_value = "alpha")]
        sweep: SweepKind,
        /// Number of classes for the alpha sweep.
        #[arg(long = "K", default_value_t = 10)]
        k: usize,
        /// Alpha for the K sweep.
        #[arg(long, default_value_t = 0.8)]
        alpha: f64,
        /// Explicit alpha values; overrides --points.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        /// Alpha grid size: alpha = i / points for i = 0..points.
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 2)]
        k_min: usize,
        #[arg(long, default_value_t = 100)]
        k_max: usize,
        #[arg(long, value_delimiter = ',', default_value = "fr,hellinger,mse,qce:0.7,mae")]
        losses: Vec<LossKind>,
        #[arg(long, default_value = "bounds.csv")]
        out: PathBuf,
        /// Also write `<prefix>_A.svg` and `<prefix>_B.svg`.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Multi-seed training experiment from a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learning-rate grid search from a config file (uses `lr_grid`).
    GridLr {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fisher-Rao and Hellinger distances between two distributions.
    Distance {
        /// Comma-separated probabilities.
        #[arg(long, allow_hyphen_values = true, required_unless_present = "file")]
        p: Option<String>,
        #[arg(long, allow_hyphen_values = true, required_unless_present = "file")]
        q: Option<String>,
        /// File whose first two non-empty lines are the two distributions.
        #[arg(long, conflicts_with_all = ["p", "q"])]
        file: Option<PathBuf>,
    },
    /// Write a synthetic train/test split as CSV.
    GenData {
        #[arg(long, default_value_t = 8000)]
        n_train: usize,
        #[arg(long, default_value_t = 2000)]
        n_test: usize,
        #[arg(long, default_value_t = 100)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = SyntheticSpec::default().class_sep)]
        class_sep: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for `train.csv` and `test.csv`.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// h(p_y) and |h'(p_y)| sampled on a grid of p_y.
    LossesTable {
        #[arg(long, value_delimiter = ',', default_value = "mae,ce,qce:0.7,fr,hellinger")]
        losses: Vec<LossKind>,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value = "losses_table.csv")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match run(cli.command, exec) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command, exec: Execution) -> Result<u8> {
    match command {
        Command::Bounds {
            sweep,
            k,
            alpha,
            alphas,
            points,
            k_min,
            k_max,
            losses,
            out,
            svg,
        } => {
            let sweep = match sweep {
                SweepKind::Alpha => match alphas {
                    Some(alphas) => Sweep::Alpha { k, alphas },
                    None => Sweep::alpha_grid(k, points),
                },
                SweepKind::K => {
                    if k_min > k_max {
                        return Err(Error::InvalidInput(format!("--k-min {k_min} exceeds --k-max {k_max}")));
                    }
                    Sweep::class_range(alpha, k_min, k_max)
                }
            };
            let rows = bound_curves(&losses, &sweep)?;
            tables::write_bounds_csv(&out, &losses, &rows)?;
            println!("wrote {} rows to {}", rows.len(), out.display());
            if let Some(prefix) = svg {
                let x_label = match sweep {
                    Sweep::Alpha { .. } => "alpha",
                    Sweep::Classes { .. } => "K",
                };
                for (which, pick) in [("A", 0), ("B", 1)] {
                    let path = suffixed(&prefix, &format!("_{which}.svg"));
                    write_bound_svg(&path, which, x_label, &losses, &rows, pick)?;
                    println!("wrote {}", path.display());
                }
            }
            Ok(0)
        }
        Command::Train { config, out } => {
            let spec = load_spec(&config, out)?;
            let outcome = experiment::run_experiment(&spec, exec)?;
            for s in &outcome.selections {
                println!("lr[{} eta={}] = {}", s.loss, s.eta, s.learning_rate);
            }
            println!("final-epoch test accuracy (best-epoch values in summary_best_epoch.csv)");
            println!("{:<12} {:>6} {:>10} {:>10} {:>4}", "loss", "eta", "mean", "std", "n");
            for r in &outcome.summary {
                println!(
                    "{:<12} {:>6} {:>10.4} {:>10.4} {:>4}",
                    r.loss.to_string(),
                    r.eta,
                    r.mean_test_acc,
                    r.std_test_acc,
                    r.n_seeds
                );
            }
            println!("results in {}", outcome.output_dir.display());
            let diverged = outcome.diverged_runs();
            if diverged > 0 {
                eprintln!("warning: {diverged} run(s) diverged; see runs.csv");
                return Ok(4);
            }
            Ok(0)
        }
        Command::GridLr { config, out } => {
            let spec = load_spec(&config, out)?;
            if spec.lr_grid.is_empty() {
                return Err(Error::InvalidSpec("config has no lr_grid".into()));
            }
            let (train, test) = spec.dataset.load()?;
            let selections = experiment::run_grid(&spec, &train, &test, exec)?;
            println!("{:<12} {:>6} {:>10} {:>10}", "loss", "eta", "lr", "test_acc");
            for s in &selections {
                println!(
                    "{:<12} {:>6} {:>10} {:>10.4}",
                    s.loss.to_string(),
                    s.eta,
                    s.learning_rate,
                    s.mean_test_acc
                );
            }
            println!(
                "selection written to {}",
                spec.output_dir.join("lr_selection.csv").display()
            );
            Ok(0)
        }
        Command::Distance { p, q, file } => {
            let (p, q) = match file {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
                    let mut next = || {
                        lines.next().map(str::to_string).ok_or_else(|| {
                            Error::format_at_line(path.display().to_string(), 0, "expected two distributions")
                        })
                    };
                    (next()?, next()?)
                }
                None => (p.expect("required by clap"), q.expect("required by clap")),
            };
            let p = parse_prob(&p)?;
            let q = parse_prob(&q)?;
            let d_fr = fisher_rao_distance(&p, &q)?;
            let d_h = hellinger_distance(&p, &q)?;
            println!("d_fr = {d_fr:.9}");
            println!("d_h = {d_h:.9}");
            println!("4asin(d_h/2) = {:.9}", fisher_rao_from_hellinger(d_h));
            Ok(0)
        }
        Command::GenData {
            n_train,
            n_test,
            m,
            k,
            class_sep,
            seed,
            out_dir,
        } => {
            let spec = SyntheticSpec {
                n_train,
                n_test,
                m,
                k,
                class_sep,
                seed,
            };
            let (train, test) = generate_synthetic(&spec)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            save_csv(&train, out_dir.join("train.csv"))?;
            save_csv(&test, out_dir.join("test.csv"))?;
            println!(
                "wrote {} + {} samples to {}",
                train.len(),
                test.len(),
                out_dir.display()
            );
            Ok(0)
        }
        Command::LossesTable { losses, points, out } => {
            let (header, rows) = tables::losses_table(&losses, points)?;
            tables::write_numeric_csv(&out, &header, &rows)?;
            println!("wrote {} rows to {}", rows.len(), out.display());
            Ok(0)
        }
    }
}

fn load_spec(config: &Path, out: Option<PathBuf>) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::from_file(config)?;
    if let Some(out) = out {
        spec.output_dir = out;
    }
    Ok(spec)
}

fn parse_prob(text: &str) -> Result<ProbVec> {
    let values = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad probability `{}`", s.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    ProbVec::new(values)
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_bound_svg(
    path: &Path,
    which: &str,
    x_label: &str,
    losses: &[LossKind],
    rows: &[CurveRow],
    pick: usize,
) -> Result<()> {
    let mut plot = LinePlot::new(&format!("bound {which}"), x_label, which);
    for (i, loss) in losses.iter().enumerate() {
        let points = rows
            .iter()
            .map(|r| {
                let (a, b) = r.values[i];
                (r.x, if pick == 0 { a } else { b })
            })
            .collect();
        plot.add(&loss.to_string(), points);
    }
    std::fs::write(path, plot.render()).map_err(|e| Error::io(path, e))
}
