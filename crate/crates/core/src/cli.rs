//! Command-line surface. `main.rs` only parses and dispatches to [`run`].

use crate::artifact::write_atomic;
use crate::checkpoint;
use crate::data::{self, Dataset, SplitRule, Splits, SyntheticSpec, Task, PRESETS};
use crate::downstream::{self, fit_and_evaluate, parse_kv, DownstreamResult, MetricsReport, MlpHyper, SplitData};
use crate::error::{Error, Result};
use crate::fusion::{fuse_baseline, FusionConfig, FusionKind};
use crate::iccn::{load_model, train_iccn, IccnConfig, IccnModel, Variant};
use crate::tensor::Tensor;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Parser, Debug)]
#[command(name = "iccn", version, about = "Interaction canonical correlation networks for multimodal sentiment features")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic MMF dataset.
    Gen(GenArgs),
    /// Train an ICCN variant; writes model.ckpt, curves.csv, config.json.
    Train(TrainArgs),
    /// Fit the downstream MLP on frozen embeddings and report metrics.
    Eval(EvalArgs),
    /// Train and evaluate a baseline fusion.
    Baseline(BaselineArgs),
    /// Grid search over ICCN and classifier hyperparameters.
    Grid(GridArgs),
    /// Training curves of the CCA-loss and cosine-loss variants.
    Curves(CurvesArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GenArgs {
    #[arg(long, value_parser = PRESETS)]
    pub preset: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output MMF file.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Per-record sequence lengths (header frame counts of 0).
    #[arg(long)]
    pub variable_length: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    /// Embedding width of K_ta / K_tv, also the number of correlations in the loss.
    #[arg(long, default_value_t = 8)]
    pub loss_dim: usize,
    /// LSTM hidden size (d_a2 = d_v2).
    #[arg(long, default_value_t = 8)]
    pub hidden: usize,
    #[arg(long, default_value_t = 3)]
    pub conv1d_kernel: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ModelArgs {
    fn config(&self, ds: &Dataset, variant: Variant) -> IccnConfig {
        let mut cfg = IccnConfig::desk(ds.dims.d_t, ds.dims.d_a, ds.dims.d_v).with_embedding(self.loss_dim);
        cfg.epochs = self.epochs;
        cfg.lr = self.lr;
        cfg.batch_size = self.batch;
        cfg.lstm_hidden_a = self.hidden;
        cfg.lstm_hidden_v = self.hidden;
        cfg.conv1d_kernel = self.conv1d_kernel;
        cfg.seed = self.seed;
        cfg.variant = variant;
        cfg
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DownstreamArgs {
    /// Hidden width of the downstream MLP.
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    #[arg(long, default_value_t = 100)]
    pub mlp_epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub mlp_lr: f64,
    #[arg(long, default_value_t = 32)]
    pub mlp_batch: usize,
}

impl DownstreamArgs {
    fn hyper(&self, seed: u64) -> MlpHyper {
        MlpHyper {
            hidden: self.hidden,
            hidden_layers: 1,
            lr: self.mlp_lr,
            epochs: self.mlp_epochs,
            batch_size: self.mlp_batch,
            seed,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrainArgs {
    pub data: PathBuf,
    #[arg(long, default_value = "full")]
    pub variant: String,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EvalArgs {
    /// `CHECKPOINT DATA`, or just `DATA` with --predictions.
    #[arg(num_args = 1..=2, required = true)]
    pub inputs: Vec<PathBuf>,
    /// Score a file of predictions (one line per record of the split) instead of a model.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Training run config; defaults to config.json beside the checkpoint.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "test", value_parser = ["train", "val", "test"])]
    pub split: String,
    #[command(flatten)]
    pub downstream: DownstreamArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Defaults to `eval-<split>` beside the checkpoint.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BaselineArgs {
    pub kind: String,
    pub data: PathBuf,
    /// Components kept by the CCA-family solvers (also the DCCA output width).
    #[arg(long)]
    pub loss_dim: Option<usize>,
    #[arg(long, default_value_t = crate::cca::DEFAULT_RIDGE)]
    pub reg: f64,
    /// DCCA epochs.
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    /// DCCA learning rate.
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// DCCA minibatch size.
    #[arg(long, default_value_t = 128)]
    pub batch: usize,
    #[command(flatten)]
    pub downstream: DownstreamArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GridArgs {
    pub data: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [1e-5, 1e-4, 1e-3])]
    pub lr: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [128, 256, 512])]
    pub batch: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [10, 32, 100])]
    pub epochs: Vec<usize>,
    /// Downstream MLP hidden widths.
    #[arg(long, value_delimiter = ',', default_values_t = [64, 181, 512])]
    pub hidden: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [30, 55, 100])]
    pub loss_dim: Vec<usize>,
    /// LSTM hidden size, fixed across the grid.
    #[arg(long, default_value_t = 8)]
    pub lstm_hidden: usize,
    #[arg(long, default_value = "full")]
    pub variant: String,
    #[arg(long, default_value_t = 100)]
    pub mlp_epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CurvesArgs {
    pub data: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub version: String,
    pub args: serde_json::Value,
    /// Fully resolved settings (model config, split rule, ...).
    pub resolved: serde_json::Value,
}

fn write_config(dir: &Path, command: &str, args: &impl Serialize, resolved: serde_json::Value) -> Result<()> {
    let cfg = RunConfig {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        args: serde_json::to_value(args)?,
        resolved,
    };
    let mut text = serde_json::to_string_pretty(&cfg)?;
    text.push('\n');
    write_atomic(&dir.join(CONFIG_FILE), text.as_bytes())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::data(format!("cannot create `{}`: {e}", dir.display())))
}

fn load_splits(path: &Path, seed: u64) -> Result<(Dataset, SplitRule, Splits)> {
    let ds = data::load(path)?;
    if ds.is_empty() {
        return Err(Error::data(format!("dataset `{}` has no records", path.display())));
    }
    let rule = SplitRule::infer(&ds);
    let splits = data::split(&ds, &rule, seed)?;
    for (name, s) in [("train", &splits.train), ("val", &splits.val), ("test", &splits.test)] {
        if s.is_empty() {
            return Err(Error::data(format!("{name} split of `{}` is empty", path.display())));
        }
    }
    Ok((ds, rule, splits))
}

fn split_data(x: Tensor, ds: &Dataset) -> SplitData {
    SplitData { x, y: ds.label_matrix() }
}

fn embed_splits(model: &IccnModel, s: &Splits) -> Result<[SplitData; 3]> {
    Ok([
        split_data(model.extract_embeddings(&s.train)?, &s.train),
        split_data(model.extract_embeddings(&s.val)?, &s.val),
        split_data(model.extract_embeddings(&s.test)?, &s.test),
    ])
}

fn downstream_run(sd: &[SplitData; 3], ds: &Dataset, hyper: &MlpHyper) -> Result<DownstreamResult> {
    fit_and_evaluate(&sd[0], &sd[1], &sd[2], ds.task, &ds.label_names(), hyper)
}

fn report_for<'a>(r: &'a DownstreamResult, split: &str) -> &'a MetricsReport {
    match split {
        "train" => &r.train,
        "val" => &r.val,
        _ => &r.test,
    }
}

/// Runs one parsed command; every artifact is written atomically.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Baseline(a) => cmd_baseline(&a),
        Command::Grid(a) => cmd_grid(&a),
        Command::Curves(a) => cmd_curves(&a),
    }
}

pub fn cmd_gen(a: &GenArgs) -> Result<()> {
    let spec = SyntheticSpec {
        variable_length: a.variable_length,
        ..SyntheticSpec::preset(&a.preset, a.seed)?
    };
    let ds = data::generate(&spec)?;
    if let Some(dir) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    data::write_mmf(&ds, &a.out)?;
    let mut text = serde_json::to_string_pretty(&RunConfig {
        command: "gen".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        args: serde_json::to_value(a)?,
        resolved: serde_json::to_value(&spec)?,
    })?;
    text.push('\n');
    write_atomic(&sidecar(&a.out), text.as_bytes())?;
    println!(
        "wrote {} ({} train / {} val / {} test records)",
        a.out.display(),
        spec.counts[0],
        spec.counts[1],
        spec.counts[2]
    );
    Ok(())
}

/// `data.mmf` -> `data.mmf.config.json`.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".config.json");
    path.with_file_name(name)
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let variant = Variant::parse(&a.variant)?;
    let (ds, rule, splits) = load_splits(&a.data, a.model.seed)?;
    let cfg = a.model.config(&ds, variant);
    cfg.validate()?;
    let (model, curve) = train_iccn(&splits.train, &cfg)?;
    ensure_dir(&a.out)?;
    checkpoint::save(&model.params, &a.out.join(CHECKPOINT_FILE))?;
    write_atomic(&a.out.join("curves.csv"), curve.to_csv().as_bytes())?;
    write_config(
        &a.out,
        "train",
        a,
        serde_json::json!({ "iccn": cfg, "split_rule": rule, "task": ds.task }),
    )?;
    if let (Some(f), Some(l)) = (curve.first(), curve.last()) {
        println!(
            "{variant}: mean canonical correlation {:.4} -> {:.4}, mean cosine {:.4} -> {:.4}",
            f.mean_canonical_correlation, l.mean_canonical_correlation, f.mean_cosine_similarity, l.mean_cosine_similarity
        );
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

/// Reads the model config recorded by `train`.
pub fn read_model_config(path: &Path) -> Result<IccnConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(format!("cannot read run config `{}`: {e}", path.display())))?;
    let run: RunConfig = serde_json::from_str(&text)?;
    let iccn = run
        .resolved
        .get("iccn")
        .ok_or_else(|| Error::data(format!("`{}` holds no model config", path.display())))?;
    Ok(serde_json::from_value(iccn.clone())?)
}

fn read_predictions(path: &Path, width: usize) -> Result<Tensor> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(format!("cannot read predictions `{}`: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::data(format!("predictions line {}: not a number list", i + 1)))?;
        if row.len() != width {
            return Err(Error::data(format!(
                "predictions line {} has {} values, expected {width}",
                i + 1,
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok(data::rows_matrix(rows.into_iter(), width))
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let (report, out, resolved) = if let Some(pred_path) = &a.predictions {
        let [data_path] = a.inputs.as_slice() else {
            return Err(Error::config("eval --predictions takes exactly one DATA argument"));
        };
        let (ds, rule, splits) = load_splits(data_path, a.seed)?;
        let target = splits.by_name(&a.split)?;
        let preds = read_predictions(pred_path, ds.label_width())?;
        if preds.rows() != target.len() {
            return Err(Error::Evaluation(format!(
                "{} predictions for {} records in the {} split",
                preds.rows(),
                target.len(),
                a.split
            )));
        }
        let report = downstream::evaluate(&preds, &target.label_matrix(), ds.task, &ds.label_names())?;
        let out = a
            .out
            .clone()
            .ok_or_else(|| Error::config("eval --predictions requires --out"))?;
        (report, out, serde_json::json!({ "split_rule": rule, "task": ds.task }))
    } else {
        let [ckpt, data_path] = a.inputs.as_slice() else {
            return Err(Error::config("eval takes CHECKPOINT DATA (or --predictions FILE DATA)"));
        };
        let ckpt_dir = ckpt.parent().unwrap_or(Path::new("."));
        let config_path = a.config.clone().unwrap_or_else(|| ckpt_dir.join(CONFIG_FILE));
        let cfg = read_model_config(&config_path)?;
        let model = load_model(&cfg, &checkpoint::load(ckpt)?)?;
        let (ds, rule, splits) = load_splits(data_path, a.seed)?;
        if (ds.dims.d_t, ds.dims.d_a, ds.dims.d_v) != (cfg.d_t, cfg.d_a, cfg.d_v) {
            return Err(Error::contract(format!(
                "dataset dims (t {}, a {}, v {}) do not match the checkpoint ({}, {}, {})",
                ds.dims.d_t, ds.dims.d_a, ds.dims.d_v, cfg.d_t, cfg.d_a, cfg.d_v
            )));
        }
        let sd = embed_splits(&model, &splits)?;
        let hyper = a.downstream.hyper(a.seed);
        let result = downstream_run(&sd, &ds, &hyper)?;
        let out = a.out.clone().unwrap_or_else(|| ckpt_dir.join(format!("eval-{}", a.split)));
        (
            report_for(&result, &a.split).clone(),
            out,
            serde_json::json!({ "iccn": cfg, "mlp": hyper, "split_rule": rule, "task": ds.task }),
        )
    };
    ensure_dir(&out)?;
    let kv = report.to_kv();
    write_atomic(&out.join("metrics.txt"), kv.as_bytes())?;
    write_config(&out, "eval", a, resolved)?;
    print!("{kv}");
    Ok(())
}

pub fn cmd_baseline(a: &BaselineArgs) -> Result<()> {
    let kind = FusionKind::parse(&a.kind)?;
    let (ds, rule, splits) = load_splits(&a.data, a.seed)?;
    let r = a.loss_dim.unwrap_or_else(|| ds.dims.d_a.min(ds.dims.d_v).min(30));
    let mut fusion = FusionConfig::new(r);
    fusion.reg = a.reg;
    fusion.dcca.epochs = a.epochs;
    fusion.dcca.lr = a.lr;
    fusion.dcca.batch_size = a.batch;
    fusion.dcca.seed = a.seed;
    let [tr, va, te] = fuse_baseline(kind, &splits, &fusion)?;
    let sd = [
        split_data(tr, &splits.train),
        split_data(va, &splits.val),
        split_data(te, &splits.test),
    ];
    let hyper = a.downstream.hyper(a.seed);
    let result = downstream_run(&sd, &ds, &hyper)?;
    ensure_dir(&a.out)?;
    let kv = result.test.to_kv();
    write_atomic(&a.out.join("metrics.txt"), kv.as_bytes())?;
    write_atomic(&a.out.join("metrics_val.txt"), result.val.to_kv().as_bytes())?;
    write_config(
        &a.out,
        "baseline",
        a,
        serde_json::json!({
            "kind": kind.as_str(),
            "fusion": fusion,
            "pooling": "frame mean",
            "mlp": hyper,
            "split_rule": rule,
            "task": ds.task,
        }),
    )?;
    print!("{kv}");
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub index: usize,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub hidden: usize,
    pub loss_dim: usize,
}

struct CellOutcome {
    val: Option<MetricsReport>,
    test: Option<MetricsReport>,
    error: Option<String>,
}

/// Cells in enumeration order: lr, batch, epochs, hidden, loss_dim (last fastest).
pub fn enumerate_grid(a: &GridArgs) -> Vec<GridCell> {
    let mut cells = Vec::new();
    for &lr in &a.lr {
        for &batch in &a.batch {
            for &epochs in &a.epochs {
                for &hidden in &a.hidden {
                    for &loss_dim in &a.loss_dim {
                        cells.push(GridCell {
                            index: cells.len(),
                            lr,
                            batch,
                            epochs,
                            hidden,
                            loss_dim,
                        });
                    }
                }
            }
        }
    }
    cells
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

pub fn cmd_grid(a: &GridArgs) -> Result<()> {
    let variant = Variant::parse(&a.variant)?;
    let cells = enumerate_grid(a);
    if cells.is_empty() {
        return Err(Error::config("grid is empty: every axis needs at least one value"));
    }
    let (ds, rule, splits) = load_splits(&a.data, a.seed)?;
    let run_cell = |c: &GridCell| -> Result<(MetricsReport, MetricsReport)> {
        let seed = a.seed ^ c.index as u64;
        let model_args = ModelArgs {
            epochs: c.epochs,
            lr: c.lr,
            batch: c.batch,
            loss_dim: c.loss_dim,
            hidden: a.lstm_hidden,
            conv1d_kernel: 3,
            seed,
        };
        let cfg = model_args.config(&ds, variant);
        let (model, _) = train_iccn(&splits.train, &cfg)?;
        let sd = embed_splits(&model, &splits)?;
        let hyper = MlpHyper {
            hidden: c.hidden,
            epochs: a.mlp_epochs,
            seed,
            ..MlpHyper::default()
        };
        let r = downstream_run(&sd, &ds, &hyper)?;
        Ok((r.val, r.test))
    };
    let outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .map(|c| match run_cell(c) {
            Ok((val, test)) => CellOutcome {
                val: Some(val),
                test: Some(test),
                error: None,
            },
            Err(e) => CellOutcome {
                val: None,
                test: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let mut best: Option<usize> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if let Some(v) = &o.val {
            let better = match best {
                None => true,
                Some(b) => v.selection_score() < outcomes[b].val.as_ref().unwrap().selection_score(),
            };
            if better {
                best = Some(i);
            }
        }
    }
    let mut csv = String::from("cell,lr,batch,epochs,hidden,loss_dim,status,val_selection_score,val_acc2,val_f_score\n");
    for (c, o) in cells.iter().zip(&outcomes) {
        let (score, acc2, f) = match &o.val {
            Some(v) => {
                let f = match v {
                    MetricsReport::Regression(m) => m.f_score,
                    MetricsReport::Emotion(m) => m.f_score.iter().sum::<f64>() / m.f_score.len() as f64,
                };
                (Some(v.selection_score()), Some(v.acc2()), Some(f))
            }
            None => (None, None, None),
        };
        let status = match &o.error {
            None => "ok".to_string(),
            Some(e) => format!("\"error: {}\"", e.replace('"', "'")),
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            c.index,
            c.lr,
            c.batch,
            c.epochs,
            c.hidden,
            c.loss_dim,
            status,
            fmt_opt(score),
            fmt_opt(acc2),
            fmt_opt(f)
        ));
    }
    ensure_dir(&a.out)?;
    write_atomic(&a.out.join("leaderboard.csv"), csv.as_bytes())?;
    write_config(
        &a.out,
        "grid",
        a,
        serde_json::json!({
            "variant": variant,
            "selection": match ds.task {
                Task::SentimentRegression => "min validation MAE, first cell wins ties",
                Task::BinaryEmotion => "max validation mean F-score, first cell wins ties",
            },
            "cell_seed": "seed xor cell index",
            "split_rule": rule,
            "task": ds.task,
        }),
    )?;
    let Some(b) = best else {
        return Err(Error::Config(format!(
            "every grid cell failed; first error: {}",
            outcomes[0].error.as_deref().unwrap_or("unknown")
        )));
    };
    let best_json = serde_json::json!({
        "cell": cells[b],
        "variant": variant,
        "val": outcomes[b].val,
        "test": outcomes[b].test,
    });
    let mut text = serde_json::to_string_pretty(&best_json)?;
    text.push('\n');
    write_atomic(&a.out.join("best-config.json"), text.as_bytes())?;
    println!("best cell {b}: {}", serde_json::to_string(&cells[b])?);
    print!("{}", outcomes[b].test.as_ref().unwrap().to_kv());
    Ok(())
}

pub fn cmd_curves(a: &CurvesArgs) -> Result<()> {
    let (ds, rule, splits) = load_splits(&a.data, a.model.seed)?;
    let cfgs: Vec<IccnConfig> = [Variant::Full, Variant::Cos].iter().map(|v| a.model.config(&ds, *v)).collect();
    ensure_dir(&a.out)?;
    for cfg in &cfgs {
        let (_, curve) = train_iccn(&splits.train, cfg)?;
        let name = format!("curves_{}.csv", cfg.variant.as_str());
        write_atomic(&a.out.join(&name), curve.to_csv().as_bytes())?;
        println!("wrote {}", a.out.join(name).display());
    }
    write_config(
        &a.out,
        "curves",
        a,
        serde_json::json!({ "iccn": cfgs, "split_rule": rule, "task": ds.task }),
    )?;
    Ok(())
}

/// Parses a metrics file into (key, value) pairs.
pub fn read_metrics(path: &Path) -> Result<Vec<(String, String)>> {
    parse_kv(&std::fs::read_to_string(path)?)
}
