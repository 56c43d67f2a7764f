//! Downstream MLP on frozen embeddings and the sentiment/emotion metrics.

use crate::autodiff::Graph;
use crate::data::{Task, LABEL_RANGE};
use crate::error::{Error, Result};
use crate::nn::{Mlp, ParamSet};
use crate::optim::{RmsProp, RmsPropConfig};
use crate::rng::SeededRng;
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Negative,
    Positive,
    Excluded,
}

fn check_range(label: f64) -> Result<()> {
    if !label.is_finite() || label.abs() > LABEL_RANGE {
        return Err(Error::data(format!("label {label} outside [-3, 3]")));
    }
    Ok(())
}

/// [-3, 0) negative, (0, 3] positive, 0 excluded.
pub fn binarize(label: f64) -> Result<Polarity> {
    check_range(label)?;
    Ok(if label < 0.0 {
        Polarity::Negative
    } else if label > 0.0 {
        Polarity::Positive
    } else {
        Polarity::Excluded
    })
}

/// Round half away from zero, shifted to 0..=6.
pub fn seven_class(label: f64) -> Result<usize> {
    check_range(label)?;
    Ok((label.round() + 3.0) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FScoreMode {
    /// Support-weighted mean of the per-class F1.
    #[default]
    Weighted,
    /// F1 of the positive class only.
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_pairs(pairs: impl Iterator<Item = (bool, bool)>) -> Self {
        let mut c = Confusion::default();
        for (pred, truth) in pairs {
            match (pred, truth) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
        let denom = 2 * tp + fp + fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    }

    pub fn f_score(&self, mode: FScoreMode) -> f64 {
        let pos = Self::f1(self.tp, self.fp, self.fn_);
        match mode {
            FScoreMode::Positive => pos,
            FScoreMode::Weighted => {
                let neg = Self::f1(self.tn, self.fn_, self.fp);
                let n_pos = (self.tp + self.fn_) as f64;
                let n_neg = (self.tn + self.fp) as f64;
                (pos * n_pos + neg * n_neg) / (n_pos + n_neg)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub acc2: f64,
    pub f_score: f64,
    pub mae: f64,
    pub acc7: f64,
    pub corr: f64,
    pub n_excluded: usize,
    /// Set when either side has zero variance and `corr` was forced to 0.
    pub corr_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionMetrics {
    pub names: Vec<String>,
    pub acc2: Vec<f64>,
    pub f_score: Vec<f64>,
    pub n_excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MetricsReport {
    Regression(RegressionMetrics),
    Emotion(EmotionMetrics),
}

pub const REGRESSION_KEYS: [&str; 6] = ["acc2", "f_score", "mae", "acc7", "corr", "n_excluded"];

impl MetricsReport {
    /// Flat `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        match self {
            MetricsReport::Regression(m) => {
                if m.corr_degenerate {
                    s.push_str("# corr: zero-variance input, reported as 0\n");
                }
                let _ = writeln!(s, "acc2={}", m.acc2);
                let _ = writeln!(s, "f_score={}", m.f_score);
                let _ = writeln!(s, "mae={}", m.mae);
                let _ = writeln!(s, "acc7={}", m.acc7);
                let _ = writeln!(s, "corr={}", m.corr);
                let _ = writeln!(s, "n_excluded={}", m.n_excluded);
            }
            MetricsReport::Emotion(m) => {
                for (i, name) in m.names.iter().enumerate() {
                    let _ = writeln!(s, "acc2.{name}={}", m.acc2[i]);
                    let _ = writeln!(s, "f_score.{name}={}", m.f_score[i]);
                }
                let _ = writeln!(s, "n_excluded={}", m.n_excluded);
            }
        }
        s
    }

    /// Validation-selection score, lower is better: MAE, or minus mean F.
    pub fn selection_score(&self) -> f64 {
        match self {
            MetricsReport::Regression(m) => m.mae,
            MetricsReport::Emotion(m) => -m.f_score.iter().sum::<f64>() / m.f_score.len() as f64,
        }
    }

    /// Acc-2 (mean over emotions for the emotion task).
    pub fn acc2(&self) -> f64 {
        match self {
            MetricsReport::Regression(m) => m.acc2,
            MetricsReport::Emotion(m) => m.acc2.iter().sum::<f64>() / m.acc2.len() as f64,
        }
    }
}

/// Parses `key=value` lines, skipping blanks and `#` comments.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::data(format!("malformed metrics line `{l}`")))
        })
        .collect()
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        return None;
    }
    Some((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

/// Sentiment metrics. Predictions are clamped to [-3, 3] before binning;
/// MAE and the correlation use raw values.
pub fn evaluate_regression(predictions: &[f64], labels: &[f64], mode: FScoreMode) -> Result<RegressionMetrics> {
    if predictions.len() != labels.len() || labels.is_empty() {
        return Err(Error::Evaluation(format!(
            "need equal non-empty prediction and label lists, got {} and {}",
            predictions.len(),
            labels.len()
        )));
    }
    if let Some(p) = predictions.iter().find(|p| !p.is_finite()) {
        return Err(Error::Evaluation(format!("non-finite prediction {p}")));
    }
    let mut pairs = Vec::with_capacity(labels.len());
    let mut acc7_hits = 0usize;
    let mut excluded = 0usize;
    for (&p, &l) in predictions.iter().zip(labels) {
        let clamped = p.clamp(-LABEL_RANGE, LABEL_RANGE);
        match binarize(l)? {
            Polarity::Excluded => excluded += 1,
            truth => pairs.push((clamped > 0.0, truth == Polarity::Positive)),
        }
        if seven_class(clamped)? == seven_class(l)? {
            acc7_hits += 1;
        }
    }
    if pairs.is_empty() {
        return Err(Error::Evaluation("no usable pairs after excluding zero labels".into()));
    }
    let conf = Confusion::from_pairs(pairs.into_iter());
    let n = labels.len() as f64;
    let mae = predictions.iter().zip(labels).map(|(p, l)| (p - l).abs()).sum::<f64>() / n;
    let corr = pearson(predictions, labels);
    Ok(RegressionMetrics {
        acc2: conf.accuracy(),
        f_score: conf.f_score(mode),
        mae,
        acc7: acc7_hits as f64 / n,
        corr: corr.unwrap_or(0.0),
        n_excluded: excluded,
        corr_degenerate: corr.is_none(),
    })
}

/// Per-emotion binary metrics; a logit > 0 predicts presence.
pub fn evaluate_emotions(logits: &Tensor, labels: &Tensor, names: &[String], mode: FScoreMode) -> Result<EmotionMetrics> {
    if logits.shape() != labels.shape() || logits.rank() != 2 || logits.rows() == 0 {
        return Err(Error::Evaluation(format!(
            "prediction shape {:?} does not match label shape {:?}",
            logits.shape(),
            labels.shape()
        )));
    }
    if names.len() != labels.cols() {
        return Err(Error::Evaluation("one name per emotion column required".into()));
    }
    let mut acc2 = Vec::new();
    let mut f = Vec::new();
    for e in 0..labels.cols() {
        let conf = Confusion::from_pairs((0..labels.rows()).map(|i| (logits.at(i, e) > 0.0, labels.at(i, e) > 0.5)));
        acc2.push(conf.accuracy());
        f.push(conf.f_score(mode));
    }
    Ok(EmotionMetrics {
        names: names.to_vec(),
        acc2,
        f_score: f,
        n_excluded: 0,
    })
}

pub fn evaluate(predictions: &Tensor, labels: &Tensor, task: Task, names: &[String]) -> Result<MetricsReport> {
    match task {
        Task::SentimentRegression => {
            if predictions.len() != labels.len() {
                return Err(Error::Evaluation(format!(
                    "{} predictions for {} labels",
                    predictions.len(),
                    labels.len()
                )));
            }
            Ok(MetricsReport::Regression(evaluate_regression(
                predictions.data(),
                labels.data(),
                FScoreMode::Weighted,
            )?))
        }
        Task::BinaryEmotion => Ok(MetricsReport::Emotion(evaluate_emotions(
            predictions,
            labels,
            names,
            FScoreMode::Weighted,
        )?)),
    }
}

// ---------------------------------------------------------------------------
// Classifier

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpHyper {
    pub hidden: usize,
    pub hidden_layers: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpHyper {
    fn default() -> Self {
        MlpHyper {
            hidden: 64,
            hidden_layers: 1,
            lr: 1e-3,
            epochs: 100,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Tensor) -> Self {
        let (n, d) = (x.rows(), x.cols());
        let mut mean = vec![0.0; d];
        let mut var = vec![0.0; d];
        for i in 0..n {
            for (j, m) in mean.iter_mut().enumerate() {
                *m += x.at(i, j) / n as f64;
            }
        }
        for i in 0..n {
            for j in 0..d {
                var[j] += (x.at(i, j) - mean[j]).powi(2) / n as f64;
            }
        }
        let std = var.iter().map(|v| if *v > 1e-24 { v.sqrt() } else { 1.0 }).collect();
        Standardizer { mean, std }
    }

    pub fn apply(&self, x: &Tensor) -> Tensor {
        let mut out = x.clone();
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                out.set(i, j, (x.at(i, j) - self.mean[j]) / self.std[j]);
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct DownstreamModel {
    pub task: Task,
    pub standardizer: Standardizer,
    pub params: ParamSet,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    mlp: Mlp,
}

impl DownstreamModel {
    /// Raw outputs: sentiment scores or per-emotion logits (n x width).
    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        forward(&self.mlp, &self.params, &self.standardizer.apply(x))
    }
}

fn forward(mlp: &Mlp, params: &ParamSet, x: &Tensor) -> Result<Tensor> {
    let mut g = Graph::new();
    let bound = params.bind(&mut g);
    let xv = g.leaf(x.clone());
    let out = mlp.forward(&mut g, &bound, xv)?;
    Ok(g.value(out).clone())
}

// Loss value and its gradient with respect to the outputs.
fn task_loss(task: Task, out: &Tensor, y: &Tensor) -> (f64, Tensor) {
    let n = out.len() as f64;
    match task {
        Task::SentimentRegression => {
            let loss = out.data().iter().zip(y.data()).map(|(p, t)| (p - t).abs()).sum::<f64>() / n;
            let grad = out.zip_map(y, |p, t| {
                if p > t {
                    1.0 / n
                } else if p < t {
                    -1.0 / n
                } else {
                    0.0
                }
            });
            (loss, grad)
        }
        Task::BinaryEmotion => {
            let softplus = |z: f64| z.max(0.0) + (-z.abs()).exp().ln_1p();
            let loss = out.data().iter().zip(y.data()).map(|(z, t)| softplus(*z) - t * z).sum::<f64>() / n;
            let grad = out.zip_map(y, |z, t| (1.0 / (1.0 + (-z).exp()) - t) / n);
            (loss, grad)
        }
    }
}

/// Trains on (train_x, train_y) and keeps the parameters with the lowest
/// validation loss. Inputs are standardized with train statistics.
pub fn train_mlp(
    train_x: &Tensor,
    train_y: &Tensor,
    val_x: &Tensor,
    val_y: &Tensor,
    task: Task,
    hyper: &MlpHyper,
) -> Result<DownstreamModel> {
    if train_x.rank() != 2 || train_x.rows() == 0 || val_x.rank() != 2 || val_x.rows() == 0 {
        return Err(Error::data("downstream training needs non-empty train and validation splits"));
    }
    if train_x.rows() != train_y.rows() || val_x.rows() != val_y.rows() || train_x.cols() != val_x.cols() || train_y.cols() != val_y.cols() {
        return Err(Error::contract(format!(
            "inconsistent downstream shapes: train {:?}/{:?}, val {:?}/{:?}",
            train_x.shape(),
            train_y.shape(),
            val_x.shape(),
            val_y.shape()
        )));
    }
    if hyper.hidden == 0 || hyper.batch_size == 0 || !(hyper.lr > 0.0) {
        return Err(Error::config("downstream MLP needs hidden >= 1, batch >= 1, lr > 0"));
    }
    let standardizer = Standardizer::fit(train_x);
    let xs = standardizer.apply(train_x);
    let vs = standardizer.apply(val_x);
    let mut widths = vec![train_x.cols()];
    widths.extend(std::iter::repeat_n(hyper.hidden, hyper.hidden_layers));
    widths.push(train_y.cols());
    let mut rng = SeededRng::derive(hyper.seed, 3);
    let mut params = ParamSet::new();
    let mlp = Mlp::new(&mut params, "mlp", &widths, &mut rng);
    let mut opt = RmsProp::new(RmsPropConfig::with_lr(hyper.lr), &params);
    let n = xs.rows();
    let bs = hyper.batch_size.min(n);
    let mut best = (task_loss(task, &forward(&mlp, &params, &vs)?, val_y).0, 0, params.clone());
    for epoch in 1..=hyper.epochs {
        let order = rng.permutation(n);
        for chunk in order.chunks(bs) {
            let xb = Tensor::from_rows(&chunk.iter().map(|&i| xs.row(i).to_vec()).collect::<Vec<_>>());
            let yb = Tensor::from_rows(&chunk.iter().map(|&i| train_y.row(i).to_vec()).collect::<Vec<_>>());
            let mut g = Graph::new();
            let bound = params.bind(&mut g);
            let xv = g.leaf(xb);
            let out = mlp.forward(&mut g, &bound, xv)?;
            let (loss, grad) = task_loss(task, g.value(out), &yb);
            if !loss.is_finite() {
                return Err(Error::Numerical(format!("downstream loss is non-finite at epoch {epoch}")));
            }
            let grads = g.backward(&[(out, grad)])?;
            let grads = bound.gradients(&params, &grads);
            opt.step(&mut params, &grads)?;
        }
        let val_loss = task_loss(task, &forward(&mlp, &params, &vs)?, val_y).0;
        if val_loss < best.0 {
            best = (val_loss, epoch, params.clone());
        }
    }
    Ok(DownstreamModel {
        task,
        standardizer,
        params: best.2,
        best_epoch: best.1,
        best_val_loss: best.0,
        mlp,
    })
}

/// Embeddings and labels for one split.
#[derive(Debug, Clone)]
pub struct SplitData {
    pub x: Tensor,
    pub y: Tensor,
}

#[derive(Debug, Clone)]
pub struct DownstreamResult {
    pub val: MetricsReport,
    pub test: MetricsReport,
    pub train: MetricsReport,
    pub model: DownstreamModel,
}

/// Trains on `train`, selects on `val`, reports every split.
pub fn fit_and_evaluate(
    train: &SplitData,
    val: &SplitData,
    test: &SplitData,
    task: Task,
    names: &[String],
    hyper: &MlpHyper,
) -> Result<DownstreamResult> {
    let model = train_mlp(&train.x, &train.y, &val.x, &val.y, task, hyper)?;
    let report = |s: &SplitData| evaluate(&model.predict(&s.x)?, &s.y, task, names);
    Ok(DownstreamResult {
        train: report(train)?,
        val: report(val)?,
        test: report(test)?,
        model,
    })
}
