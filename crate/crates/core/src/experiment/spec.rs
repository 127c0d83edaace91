use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::data::{self, LabeledDataset, SyntheticSpec};
use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::mlp::MlpConfig;
use crate::noise;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Synthetic(SyntheticSpec),
    Mnist {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        /// Keep only the first `n` training samples.
        train_subset: Option<usize>,
        test_subset: Option<usize>,
    },
    Csv {
        train: PathBuf,
        test: PathBuf,
    },
}

impl DatasetSource {
    /// Loads `(train, test)`; both sets share the same K.
    pub fn load(&self) -> Result<(LabeledDataset, LabeledDataset)> {
        match self {
            DatasetSource::Synthetic(spec) => data::generate_synthetic(spec),
            DatasetSource::Mnist {
                train_images,
                train_labels,
                test_images,
                test_labels,
                train_subset,
                test_subset,
            } => {
                let mut train = data::load_mnist(train_images, train_labels)?;
                let mut test = data::load_mnist(test_images, test_labels)?;
                if let Some(n) = *train_subset {
                    train = train.head(n);
                }
                if let Some(n) = *test_subset {
                    test = test.head(n);
                }
                Ok((train, test))
            }
            DatasetSource::Csv { train, test } => {
                let train = data::load_csv(train)?;
                let test = data::load_csv(test)?;
                let k = train.k().max(test.k());
                Ok((train.with_classes(k)?, test.with_classes(k)?))
            }
        }
    }
}

/// A full multi-seed experiment: every `(loss, eta, seed)` cell is one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dataset: DatasetSource,
    pub losses: Vec<LossKind>,
    pub etas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub hidden: Vec<usize>,
    pub batch_size: usize,
    pub epochs: usize,
    /// Learning rate used when no grid search runs and no per-loss override exists.
    pub learning_rate: f64,
    pub lr_overrides: BTreeMap<String, f64>,
    pub lr_grid: Vec<f64>,
    /// Epochs per grid-search run; `None` means `epochs`.
    pub grid_epochs: Option<usize>,
    /// How many of `seeds` (from the front) each grid point is averaged over.
    pub grid_seeds: usize,
    pub eval_every_epoch: bool,
    pub output_dir: PathBuf,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            dataset: DatasetSource::Synthetic(SyntheticSpec::default()),
            losses: vec![LossKind::Mse, LossKind::Ce, LossKind::Fr, LossKind::Hellinger],
            etas: vec![0.0, 0.5],
            seeds: (0..5).collect(),
            hidden: vec![80, 40, 20],
            batch_size: 20,
            epochs: 20,
            learning_rate: 0.1,
            lr_overrides: BTreeMap::new(),
            lr_grid: Vec::new(),
            grid_epochs: None,
            grid_seeds: 1,
            eval_every_epoch: true,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentSpec {
    /// Checks everything that does not need the data; `k` checks are in [`Self::validate_for`].
    pub fn validate(&self) -> Result<()> {
        if self.losses.is_empty() || self.etas.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidSpec("losses, etas and seeds must be nonempty".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidSpec("hidden layer sizes must be positive".into()));
        }
        if self.batch_size == 0 || self.epochs == 0 || self.grid_epochs == Some(0) {
            return Err(Error::InvalidSpec(
                "batch size and epoch counts must be positive".into(),
            ));
        }
        let rates = std::iter::once(&self.learning_rate)
            .chain(self.lr_overrides.values())
            .chain(&self.lr_grid);
        for &lr in rates {
            if !(lr.is_finite() && lr >= 0.0) {
                return Err(Error::InvalidSpec(format!("bad learning rate {lr}")));
            }
        }
        if self.grid_seeds == 0 {
            return Err(Error::InvalidSpec("grid_seeds must be positive".into()));
        }
        for name in self.lr_overrides.keys() {
            if !self.losses.iter().any(|l| l.to_string() == *name) {
                return Err(Error::InvalidSpec(format!("lr override for unused loss `{name}`")));
            }
        }
        if let DatasetSource::Synthetic(s) = &self.dataset {
            s.validate()?;
        }
        Ok(())
    }

    /// Checks that every noise rate is in the tolerated regime for `k` classes.
    pub fn validate_for(&self, k: usize) -> Result<()> {
        self.validate()?;
        for &eta in &self.etas {
            noise::NoiseSpec::new(eta, 0, k)?;
        }
        Ok(())
    }

    /// Learning rate for a loss when no grid search is used.
    pub fn learning_rate_for(&self, loss: LossKind) -> f64 {
        self.lr_overrides
            .get(&loss.to_string())
            .copied()
            .unwrap_or(self.learning_rate)
    }

    pub fn mlp_config(&self, m: usize, k: usize, loss: LossKind, seed: u64, lr: f64) -> MlpConfig {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(m);
        sizes.extend_from_slice(&self.hidden);
        sizes.push(k);
        MlpConfig {
            layer_sizes: sizes,
            learning_rate: lr,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
            loss,
            eval_every_epoch: self.eval_every_epoch,
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec = Self::parse(&text)?;
        // relative data paths are taken relative to the config file
        if let Some(dir) = path.parent() {
            spec.rebase_paths(dir);
        }
        Ok(spec)
    }

    fn rebase_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        match &mut self.dataset {
            DatasetSource::Synthetic(_) => {}
            DatasetSource::Mnist {
                train_images,
                train_labels,
                test_images,
                test_labels,
                ..
            } => {
                fix(train_images);
                fix(train_labels);
                fix(test_images);
                fix(test_labels);
            }
            DatasetSource::Csv { train, test } => {
                fix(train);
                fix(test);
            }
        }
    }

    /// Parses flat `key = value` text. `#` starts a comment; lists are comma separated.
    ///
    /// Keys: `dataset` (`synthetic`, `mnist`, `csv`), `synthetic.{n_train, n_test, m, k,
    /// class_sep, seed}`, `mnist.{dir, train_images, train_labels, test_images, test_labels,
    /// train_subset, test_subset}`, `csv.{train, test}`, `losses`, `etas`, `seeds`, `hidden`,
    /// `batch_size`, `epochs`, `lr`, `lr.<loss>`, `lr_grid`, `grid_epochs`, `grid_seeds`,
    /// `eval_each_epoch`, `output_dir`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidSpec(format!("line {line_no}: expected `key = value`")))?;
            let key = key.trim().to_ascii_lowercase();
            if entries.iter().any(|(_, k, _)| *k == key) {
                return Err(Error::InvalidSpec(format!("line {line_no}: duplicate key `{key}`")));
            }
            entries.push((line_no, key, value.trim().to_string()));
        }

        let mut spec = ExperimentSpec::default();
        let mut synthetic = SyntheticSpec::default();
        let mut dataset = "synthetic".to_string();
        let mut mnist: BTreeMap<&str, String> = BTreeMap::new();
        let mut csv: BTreeMap<&str, PathBuf> = BTreeMap::new();

        for (line_no, key, value) in &entries {
            let bad = |what: &str| Error::InvalidSpec(format!("line {line_no}: bad {what} `{value}` for `{key}`"));
            let v = value.as_str();
            match key.as_str() {
                "dataset" => dataset = v.to_ascii_lowercase(),
                "synthetic.n_train" => synthetic.n_train = v.parse().map_err(|_| bad("count"))?,
                "synthetic.n_test" => synthetic.n_test = v.parse().map_err(|_| bad("count"))?,
                "synthetic.m" => synthetic.m = v.parse().map_err(|_| bad("count"))?,
                "synthetic.k" => synthetic.k = v.parse().map_err(|_| bad("count"))?,
                "synthetic.class_sep" => synthetic.class_sep = v.parse().map_err(|_| bad("number"))?,
                "synthetic.seed" => synthetic.seed = v.parse().map_err(|_| bad("seed"))?,
                "mnist.dir" | "mnist.train_images" | "mnist.train_labels" | "mnist.test_images"
                | "mnist.test_labels" | "mnist.train_subset" | "mnist.test_subset" => {
                    let field = &key["mnist.".len()..];
                    let field = MNIST_KEYS.iter().find(|k| **k == field).expect("listed above");
                    mnist.insert(field, v.to_string());
                }
                "csv.train" => {
                    csv.insert("train", PathBuf::from(v));
                }
                "csv.test" => {
                    csv.insert("test", PathBuf::from(v));
                }
                "losses" => {
                    spec.losses = parse_list(v, |s| s.parse::<LossKind>().ok()).ok_or_else(|| bad("loss list"))?
                }
                "etas" => spec.etas = parse_list(v, |s| s.parse().ok()).ok_or_else(|| bad("number list"))?,
                "seeds" => spec.seeds = parse_list(v, |s| s.parse().ok()).ok_or_else(|| bad("seed list"))?,
                "hidden" => {
                    spec.hidden = if v.is_empty() {
                        Vec::new()
                    } else {
                        parse_list(v, |s| s.parse().ok()).ok_or_else(|| bad("size list"))?
                    }
                }
                "batch_size" => spec.batch_size = v.parse().map_err(|_| bad("count"))?,
                "epochs" => spec.epochs = v.parse().map_err(|_| bad("count"))?,
                "lr" => spec.learning_rate = v.parse().map_err(|_| bad("number"))?,
                "lr_grid" => spec.lr_grid = parse_list(v, |s| s.parse().ok()).ok_or_else(|| bad("number list"))?,
                "grid_epochs" => spec.grid_epochs = Some(v.parse().map_err(|_| bad("count"))?),
                "grid_seeds" => spec.grid_seeds = v.parse().map_err(|_| bad("count"))?,
                "eval_each_epoch" => spec.eval_every_epoch = parse_bool(v).ok_or_else(|| bad("boolean"))?,
                "output_dir" => spec.output_dir = PathBuf::from(v),
                other => match other.strip_prefix("lr.") {
                    Some(loss) => {
                        let loss: LossKind = loss.parse().map_err(|_| bad("loss name"))?;
                        let lr = v.parse().map_err(|_| bad("number"))?;
                        spec.lr_overrides.insert(loss.to_string(), lr);
                    }
                    None => return Err(Error::InvalidSpec(format!("line {line_no}: unknown key `{other}`"))),
                },
            }
        }

        spec.dataset = match dataset.as_str() {
            "synthetic" => DatasetSource::Synthetic(synthetic),
            "mnist" => mnist_source(&mnist)?,
            "csv" => {
                let get = |k: &str| {
                    csv.get(k)
                        .cloned()
                        .ok_or_else(|| Error::InvalidSpec(format!("csv dataset needs `csv.{k}`")))
                };
                DatasetSource::Csv {
                    train: get("train")?,
                    test: get("test")?,
                }
            }
            other => return Err(Error::InvalidSpec(format!("unknown dataset `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

const MNIST_KEYS: [&str; 7] = [
    "dir",
    "train_images",
    "train_labels",
    "test_images",
    "test_labels",
    "train_subset",
    "test_subset",
];

const MNIST_FILES: [(&str, &str); 4] = [
    ("train_images", "train-images-idx3-ubyte"),
    ("train_labels", "train-labels-idx1-ubyte"),
    ("test_images", "t10k-images-idx3-ubyte"),
    ("test_labels", "t10k-labels-idx1-ubyte"),
];

fn mnist_source(keys: &BTreeMap<&str, String>) -> Result<DatasetSource> {
    let dir = keys.get("dir").map(PathBuf::from);
    let path = |key: &str, file: &str| -> Result<PathBuf> {
        match (keys.get(key), &dir) {
            (Some(p), _) => Ok(PathBuf::from(p)),
            (None, Some(d)) => Ok(d.join(file)),
            (None, None) => Err(Error::InvalidSpec(format!(
                "mnist dataset needs `mnist.{key}` or `mnist.dir`"
            ))),
        }
    };
    let subset = |key: &str| -> Result<Option<usize>> {
        keys.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::InvalidSpec(format!("bad `mnist.{key}` value `{v}`")))
            })
            .transpose()
    };
    let [ti, tl, vi, vl] = MNIST_FILES.map(|(k, f)| path(k, f));
    Ok(DatasetSource::Mnist {
        train_images: ti?,
        train_labels: tl?,
        test_images: vi?,
        test_labels: vl?,
        train_subset: subset("train_subset")?,
        test_subset: subset("test_subset")?,
    })
}

fn parse_list<T>(v: &str, f: impl Fn(&str) -> Option<T>) -> Option<Vec<T>> {
    let items: Option<Vec<T>> = v.split(',').map(|s| f(s.trim())).collect();
    items.filter(|xs| !xs.is_empty())
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}
