//! Utterance records, the synthetic testbed, the MMF container and splits.

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;
use std::path::Path;

pub const MMF_MAGIC: &str = "MMF1";
pub const DEFAULT_EMOTIONS: [&str; 4] = ["happy", "angry", "sad", "neutral"];
pub const LABEL_RANGE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    SentimentRegression,
    BinaryEmotion,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::SentimentRegression => "sentiment-regression",
            Task::BinaryEmotion => "binary-emotion",
        }
    }

    pub fn parse(s: &str) -> Option<Task> {
        match s {
            "sentiment-regression" => Some(Task::SentimentRegression),
            "binary-emotion" => Some(Task::BinaryEmotion),
            _ => None,
        }
    }
}

/// Feature dimensions. A frame count of 0 marks variable-length sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub d_t: usize,
    pub d_a: usize,
    pub l_a: usize,
    pub d_v: usize,
    pub l_v: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceRecord {
    pub id: String,
    /// H_t, length d_t.
    pub text: Vec<f64>,
    /// H_a as [d_a, l_a].
    pub audio: Tensor,
    /// H_v as [d_v, l_v].
    pub video: Tensor,
    /// One value for regression, one 0/1 per emotion otherwise.
    pub label: Vec<f64>,
}

impl UtteranceRecord {
    pub fn audio_len(&self) -> usize {
        self.audio.cols()
    }

    pub fn video_len(&self) -> usize {
        self.video.cols()
    }

    /// Frame-averaged audio.
    pub fn pooled_audio(&self) -> Vec<f64> {
        self.audio.row_means()
    }

    pub fn pooled_video(&self) -> Vec<f64> {
        self.video.row_means()
    }

    /// Regression label, or the first emotion flag.
    pub fn sentiment(&self) -> f64 {
        self.label[0]
    }

    fn check(&self, dims: &Dims) -> std::result::Result<(), String> {
        if self.text.len() != dims.d_t {
            return Err(format!("text width {} != {}", self.text.len(), dims.d_t));
        }
        for (name, t, d, l) in [
            ("audio", &self.audio, dims.d_a, dims.l_a),
            ("video", &self.video, dims.d_v, dims.l_v),
        ] {
            if t.rank() != 2 || t.rows() != d {
                return Err(format!("{name} has shape {:?}, expected {d} rows", t.shape()));
            }
            if t.cols() == 0 || (l != 0 && t.cols() != l) {
                return Err(format!("{name} has {} frames, expected {l}", t.cols()));
            }
        }
        if !self.text.iter().all(|v| v.is_finite()) || !self.audio.is_finite() || !self.video.is_finite() {
            return Err("non-finite feature value".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dims: Dims,
    pub task: Task,
    pub records: Vec<UtteranceRecord>,
}

impl Dataset {
    pub fn new(dims: Dims, task: Task, records: Vec<UtteranceRecord>) -> Result<Self> {
        let ds = Dataset { dims, task, records };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn label_width(&self) -> usize {
        match self.task {
            Task::SentimentRegression => 1,
            Task::BinaryEmotion => self.records.first().map_or(DEFAULT_EMOTIONS.len(), |r| r.label.len()),
        }
    }

    /// Display names of the label columns.
    pub fn label_names(&self) -> Vec<String> {
        match self.task {
            Task::SentimentRegression => vec!["sentiment".into()],
            Task::BinaryEmotion => {
                let w = self.label_width();
                if w == DEFAULT_EMOTIONS.len() {
                    DEFAULT_EMOTIONS.iter().map(|s| s.to_string()).collect()
                } else {
                    (0..w).map(|i| format!("emotion{i}")).collect()
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let width = self.label_width();
        let mut seen = HashSet::new();
        for r in &self.records {
            r.check(&self.dims)
                .map_err(|m| Error::data(format!("record `{}`: {m}", r.id)))?;
            check_label(self.task, &r.label, width).map_err(|m| Error::data(format!("record `{}`: {m}", r.id)))?;
            if !seen.insert(r.id.as_str()) {
                return Err(Error::data(format!("duplicate record id `{}`", r.id)));
            }
        }
        Ok(())
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            dims: self.dims,
            task: self.task,
            records: idx.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// Text features as an n x d_t matrix (one row per record).
    pub fn text_matrix(&self) -> Tensor {
        rows_matrix(self.records.iter().map(|r| r.text.clone()), self.dims.d_t)
    }

    pub fn pooled_audio_matrix(&self) -> Tensor {
        rows_matrix(self.records.iter().map(|r| r.pooled_audio()), self.dims.d_a)
    }

    pub fn pooled_video_matrix(&self) -> Tensor {
        rows_matrix(self.records.iter().map(|r| r.pooled_video()), self.dims.d_v)
    }

    /// Labels as an n x label_width matrix.
    pub fn label_matrix(&self) -> Tensor {
        rows_matrix(self.records.iter().map(|r| r.label.clone()), self.label_width())
    }
}

pub(crate) fn rows_matrix(rows: impl Iterator<Item = Vec<f64>>, width: usize) -> Tensor {
    let data: Vec<f64> = rows.flatten().collect();
    Tensor::matrix(data.len() / width.max(1), width, data)
}

fn check_label(task: Task, label: &[f64], width: usize) -> std::result::Result<(), String> {
    match task {
        Task::SentimentRegression => {
            if label.len() != 1 {
                return Err(format!("expected one sentiment label, got {}", label.len()));
            }
            let l = label[0];
            if !l.is_finite() || l.abs() > LABEL_RANGE {
                return Err(format!("sentiment label {l} outside [-3, 3]"));
            }
        }
        Task::BinaryEmotion => {
            if label.len() != width || width == 0 {
                return Err(format!("expected {width} emotion flags, got {}", label.len()));
            }
            if label.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err("emotion flags must be 0 or 1".into());
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Synthetic testbed

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Nonlinearity {
    Linear,
    Tanh,
    Square,
}

impl Nonlinearity {
    fn apply(&self, x: f64) -> f64 {
        match self {
            Nonlinearity::Linear => x,
            Nonlinearity::Tanh => x.tanh(),
            Nonlinearity::Square => (x * x - 1.0) / std::f64::consts::SQRT_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LabelRule {
    /// w . z
    Linear,
    /// w . z + gamma z_0 u_0, coupling a text-visible factor with a
    /// nonverbal one.
    Interaction { gamma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub preset: String,
    /// Shared latent z, visible in every modality.
    pub latent_dim: usize,
    /// Latent u shared by audio and video only.
    pub nonverbal_dim: usize,
    pub d_t: usize,
    pub d_a: usize,
    pub d_v: usize,
    pub l_a: usize,
    pub l_v: usize,
    /// Draw per-record lengths in [ceil(l/2), l].
    pub variable_length: bool,
    pub noise_text: f64,
    pub noise_audio: f64,
    pub noise_video: f64,
    pub nonlinearity: Nonlinearity,
    pub label_rule: LabelRule,
    pub task: Task,
    /// train, val, test.
    pub counts: [usize; 3],
    pub seed: u64,
}

pub const PRESETS: [&str; 5] = ["toy", "mosi-like", "mosei-like", "iemocap-like", "nonlinear"];

impl SyntheticSpec {
    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        let base = SyntheticSpec {
            preset: name.to_string(),
            latent_dim: 4,
            nonverbal_dim: 2,
            d_t: 16,
            d_a: 8,
            d_v: 6,
            l_a: 20,
            l_v: 15,
            variable_length: false,
            noise_text: 0.3,
            noise_audio: 0.3,
            noise_video: 0.3,
            nonlinearity: Nonlinearity::Tanh,
            label_rule: LabelRule::Interaction { gamma: 1.0 },
            task: Task::SentimentRegression,
            counts: [512, 128, 256],
            seed,
        };
        let full_scale = |counts, l| SyntheticSpec {
            latent_dim: 16,
            nonverbal_dim: 4,
            d_t: 768,
            d_a: 74,
            d_v: 35,
            l_a: l,
            l_v: l,
            counts,
            ..base.clone()
        };
        Ok(match name {
            "toy" => base,
            "mosi-like" => full_scale([1283, 229, 686], 20),
            "mosei-like" => full_scale([16326, 1871, 4659], 8),
            "iemocap-like" => SyntheticSpec {
                task: Task::BinaryEmotion,
                ..full_scale([2717, 789, 938], 20)
            },
            "nonlinear" => SyntheticSpec {
                latent_dim: 2,
                nonverbal_dim: 0,
                d_t: 4,
                d_a: 4,
                d_v: 4,
                l_a: 8,
                l_v: 8,
                noise_text: 0.1,
                noise_audio: 0.1,
                noise_video: 0.1,
                nonlinearity: Nonlinearity::Square,
                label_rule: LabelRule::Linear,
                counts: [500, 100, 500],
                ..base
            },
            other => {
                return Err(Error::config(format!(
                    "unknown preset `{other}`; valid presets: {}",
                    PRESETS.join(", ")
                )))
            }
        })
    }

    pub fn dims(&self) -> Dims {
        Dims {
            d_t: self.d_t,
            d_a: self.d_a,
            l_a: if self.variable_length { 0 } else { self.l_a },
            d_v: self.d_v,
            l_v: if self.variable_length { 0 } else { self.l_v },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 || self.d_t == 0 || self.d_a == 0 || self.d_v == 0 {
            return Err(Error::config("synthetic dims must be >= 1"));
        }
        if self.l_a < 2 || self.l_v < 2 {
            return Err(Error::config("synthetic sequences need at least 2 frames"));
        }
        if [self.noise_text, self.noise_audio, self.noise_video]
            .iter()
            .any(|n| !(*n >= 0.0) || !n.is_finite())
        {
            return Err(Error::config("noise levels must be finite and >= 0"));
        }
        if let LabelRule::Interaction { gamma } = self.label_rule {
            if self.nonverbal_dim == 0 {
                return Err(Error::config("interaction labels need nonverbal_dim >= 1"));
            }
            if !gamma.is_finite() {
                return Err(Error::config("interaction gamma must be finite"));
            }
        }
        Ok(())
    }
}

fn gaussian_matrix(rng: &mut SeededRng, r: usize, c: usize) -> Tensor {
    let s = 1.0 / (c.max(1) as f64).sqrt();
    Tensor::matrix(r, c, (0..r * c).map(|_| rng.normal() * s).collect())
}

fn f32_round(v: f64) -> f64 {
    v as f32 as f64
}

struct Generator<'a> {
    spec: &'a SyntheticSpec,
    a_t: Tensor,
    a_a: Tensor,
    a_v: Tensor,
    /// One readout row per label column.
    w: Tensor,
    scale: Vec<f64>,
}

impl<'a> Generator<'a> {
    fn new(spec: &'a SyntheticSpec) -> Self {
        let mut rng = SeededRng::derive(spec.seed, 0);
        let s_dim = spec.latent_dim + spec.nonverbal_dim;
        let a_t = gaussian_matrix(&mut rng, spec.d_t, spec.latent_dim);
        let a_a = gaussian_matrix(&mut rng, spec.d_a, s_dim);
        let a_v = gaussian_matrix(&mut rng, spec.d_v, s_dim);
        let width = match spec.task {
            Task::SentimentRegression => 1,
            Task::BinaryEmotion => DEFAULT_EMOTIONS.len(),
        };
        let w = Tensor::matrix(
            width,
            spec.latent_dim,
            (0..width * spec.latent_dim).map(|_| rng.normal()).collect(),
        );
        let gamma = match spec.label_rule {
            LabelRule::Linear => 0.0,
            LabelRule::Interaction { gamma } => gamma,
        };
        // z, u ~ N(0, I) and the product term is uncorrelated with w . z.
        let scale = (0..width)
            .map(|e| {
                let sd = (crate::tensor::dot(w.row(e), w.row(e)) + gamma * gamma).sqrt();
                if sd > 0.0 {
                    1.5 / sd
                } else {
                    0.0
                }
            })
            .collect();
        Generator {
            spec,
            a_t,
            a_a,
            a_v,
            w,
            scale,
        }
    }

    fn frames(&self, rng: &mut SeededRng, map: &Tensor, s: &[f64], len: usize, noise: f64) -> Tensor {
        let theta = rng.uniform_range(0.0, 2.0 * PI);
        let k = s.len();
        let mut out = Tensor::zeros(&[map.rows(), len]);
        for j in 0..len {
            let modulated: Vec<f64> = s
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let phase = 2.0 * PI * (j as f64 / len as f64) + theta + 2.0 * PI * i as f64 / k as f64;
                    v * (1.0 + 0.5 * phase.cos())
                })
                .collect();
            for r in 0..map.rows() {
                let pre = crate::tensor::dot(map.row(r), &modulated);
                let v = self.spec.nonlinearity.apply(pre) + noise * rng.normal();
                out.set(r, j, f32_round(v));
            }
        }
        out
    }

    fn record(&self, rng: &mut SeededRng, id: String) -> UtteranceRecord {
        let spec = self.spec;
        let z: Vec<f64> = (0..spec.latent_dim).map(|_| rng.normal()).collect();
        let u: Vec<f64> = (0..spec.nonverbal_dim).map(|_| rng.normal()).collect();
        let text = (0..spec.d_t)
            .map(|i| f32_round(crate::tensor::dot(self.a_t.row(i), &z) + spec.noise_text * rng.normal()))
            .collect();
        let s: Vec<f64> = z.iter().chain(&u).copied().collect();
        let (l_a, l_v) = if spec.variable_length {
            (
                spec.l_a.div_ceil(2) + rng.below(spec.l_a / 2 + 1),
                spec.l_v.div_ceil(2) + rng.below(spec.l_v / 2 + 1),
            )
        } else {
            (spec.l_a, spec.l_v)
        };
        let audio = self.frames(rng, &self.a_a, &s, l_a, spec.noise_audio);
        let video = self.frames(rng, &self.a_v, &s, l_v, spec.noise_video);
        let gamma = match spec.label_rule {
            LabelRule::Linear => 0.0,
            LabelRule::Interaction { gamma } => gamma,
        };
        let label = (0..self.w.rows())
            .map(|e| {
                let inter = if gamma != 0.0 {
                    gamma * z[e % spec.latent_dim] * u[0]
                } else {
                    0.0
                };
                let raw = (crate::tensor::dot(self.w.row(e), &z) + inter) * self.scale[e];
                match spec.task {
                    Task::SentimentRegression => raw.clamp(-LABEL_RANGE, LABEL_RANGE),
                    Task::BinaryEmotion => {
                        if raw > 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    }
                }
            })
            .collect();
        UtteranceRecord {
            id,
            text,
            audio,
            video,
            label,
        }
    }
}

pub const SPLIT_NAMES: [&str; 3] = ["train", "val", "test"];

/// Generates train, val and test records in that order, ids `train-000001`
/// etc. Fully determined by the spec.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let gen = Generator::new(spec);
    let mut rng = SeededRng::derive(spec.seed, 1);
    let mut records = Vec::with_capacity(spec.counts.iter().sum());
    for (name, &count) in SPLIT_NAMES.iter().zip(&spec.counts) {
        for i in 0..count {
            records.push(gen.record(&mut rng, format!("{name}-{:06}", i + 1)));
        }
    }
    Dataset::new(spec.dims(), spec.task, records)
}

// ---------------------------------------------------------------------------
// MMF container

fn push_block(out: &mut Vec<u8>, values: &[f64]) {
    out.extend_from_slice(&((values.len() * 4) as u64).to_le_bytes());
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

pub fn to_mmf_bytes(ds: &Dataset) -> Result<Vec<u8>> {
    ds.validate()?;
    let d = ds.dims;
    let mut out = format!(
        "{MMF_MAGIC} {} {} {} {} {} {} {}\n",
        d.d_t,
        d.d_a,
        d.l_a,
        d.d_v,
        d.l_v,
        ds.len(),
        ds.task.as_str()
    )
    .into_bytes();
    for r in &ds.records {
        if r.id.is_empty() || r.id.contains(char::is_whitespace) {
            return Err(Error::data(format!("record id `{}` must be non-empty without whitespace", r.id)));
        }
        out.extend_from_slice(r.id.as_bytes());
        out.push(b'\n');
        let label: Vec<String> = r.label.iter().map(|v| format!("{v}")).collect();
        out.extend_from_slice(label.join(" ").as_bytes());
        out.push(b'\n');
        push_block(&mut out, &r.text);
        if d.l_a == 0 {
            out.extend_from_slice(&(r.audio_len() as u64).to_le_bytes());
        }
        push_block(&mut out, r.audio.data());
        if d.l_v == 0 {
            out.extend_from_slice(&(r.video_len() as u64).to_le_bytes());
        }
        push_block(&mut out, r.video.data());
    }
    Ok(out)
}

pub fn write_mmf(ds: &Dataset, path: &Path) -> Result<()> {
    crate::artifact::write_atomic(path, &to_mmf_bytes(ds)?)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    record: String,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            record: self.record.clone(),
            offset: self.pos as u64,
            message: message.into(),
        }
    }

    fn line(&mut self) -> Result<&'a str> {
        let rest = &self.bytes[self.pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| self.err("unterminated text line"))?;
        let s = std::str::from_utf8(&rest[..end]).map_err(|_| self.err("text line is not UTF-8"))?;
        self.pos += end + 1;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        let b = self
            .bytes
            .get(self.pos..self.pos + 8)
            .ok_or_else(|| self.err("truncated length field"))?;
        self.pos += 8;
        Ok(u64::from_le_bytes(b.try_into().unwrap()))
    }

    fn block(&mut self, expected: usize, what: &str) -> Result<Vec<f64>> {
        let start = self.pos;
        let n = self.u64()?;
        if n != (expected * 4) as u64 {
            self.pos = start;
            return Err(self.err(format!("{what} block has {n} bytes, expected {}", expected * 4)));
        }
        let body = self
            .bytes
            .get(self.pos..self.pos + expected * 4)
            .ok_or_else(|| self.err(format!("truncated {what} block")))?;
        let mut out = Vec::with_capacity(expected);
        for (i, c) in body.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(c.try_into().unwrap());
            if !v.is_finite() {
                self.pos += i * 4;
                return Err(self.err(format!("non-finite value in {what} block")));
            }
            out.push(v as f64);
        }
        self.pos += expected * 4;
        Ok(out)
    }

    fn frames(&mut self, fixed: usize, what: &str) -> Result<usize> {
        if fixed != 0 {
            return Ok(fixed);
        }
        let l = self.u64()? as usize;
        if l == 0 {
            self.pos -= 8;
            return Err(self.err(format!("{what} sequence has zero frames")));
        }
        Ok(l)
    }
}

pub fn from_mmf_bytes(bytes: &[u8]) -> Result<Dataset> {
    let mut cur = Cursor {
        bytes,
        pos: 0,
        record: "<header>".into(),
    };
    if bytes.is_empty() {
        let dims = Dims {
            d_t: 0,
            d_a: 0,
            l_a: 0,
            d_v: 0,
            l_v: 0,
        };
        return Ok(Dataset {
            dims,
            task: Task::SentimentRegression,
            records: Vec::new(),
        });
    }
    let header = cur.line()?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() != 8 || tok[0] != MMF_MAGIC {
        cur.pos = 0;
        return Err(cur.err(format!("expected `{MMF_MAGIC} d_t d_a l_a d_v l_v count task` header")));
    }
    let nums: Vec<usize> = tok[1..7]
        .iter()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse {
            record: "<header>".into(),
            offset: 0,
            message: "header dimensions must be unsigned integers".into(),
        })?;
    let task = Task::parse(tok[7]).ok_or_else(|| Error::Parse {
        record: "<header>".into(),
        offset: 0,
        message: format!("unknown task `{}`", tok[7]),
    })?;
    let dims = Dims {
        d_t: nums[0],
        d_a: nums[1],
        l_a: nums[2],
        d_v: nums[3],
        l_v: nums[4],
    };
    let count = nums[5];
    let mut records = Vec::with_capacity(count.min(1 << 20));
    let mut ids = HashSet::new();
    let mut label_width = None;
    for k in 0..count {
        cur.record = format!("#{k}");
        let id_start = cur.pos;
        let id = cur.line()?.to_string();
        if id.is_empty() || id.contains(char::is_whitespace) {
            cur.pos = id_start;
            return Err(cur.err("invalid record id line"));
        }
        cur.record = id.clone();
        if !ids.insert(id.clone()) {
            cur.pos = id_start;
            return Err(cur.err("duplicate record id"));
        }
        let label_start = cur.pos;
        let label: Vec<f64> = cur
            .line()?
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| {
                cur.pos = label_start;
                cur.err("label line must hold decimal numbers")
            })?;
        let width = *label_width.get_or_insert(label.len());
        if let Err(m) = check_label(task, &label, width) {
            cur.pos = label_start;
            return Err(cur.err(m));
        }
        let text = cur.block(dims.d_t, "text")?;
        let l_a = cur.frames(dims.l_a, "audio")?;
        let audio = Tensor::matrix(dims.d_a, l_a, cur.block(dims.d_a * l_a, "audio")?);
        let l_v = cur.frames(dims.l_v, "video")?;
        let video = Tensor::matrix(dims.d_v, l_v, cur.block(dims.d_v * l_v, "video")?);
        records.push(UtteranceRecord {
            id,
            text,
            audio,
            video,
            label,
        });
    }
    if cur.pos != bytes.len() {
        cur.record = "<trailer>".into();
        return Err(cur.err(format!("{} trailing bytes after {count} records", bytes.len() - cur.pos)));
    }
    Dataset::new(dims, task, records)
}

pub fn load(path: &Path) -> Result<Dataset> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::data(format!("cannot read dataset `{}`: {e}", path.display())))?;
    from_mmf_bytes(&bytes)
}

// ---------------------------------------------------------------------------
// Splits

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

impl Splits {
    pub fn by_name(&self, name: &str) -> Result<&Dataset> {
        match name {
            "train" => Ok(&self.train),
            "val" => Ok(&self.val),
            "test" => Ok(&self.test),
            other => Err(Error::config(format!("unknown split `{other}` (train, val, test)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitRule {
    /// Shuffled with the seed, then cut; membership keeps file order.
    Fractions([f64; 3]),
    Ids {
        train: Vec<String>,
        val: Vec<String>,
        test: Vec<String>,
    },
    /// From the `train-` / `val-` / `test-` id prefix.
    Prefix,
}

pub const DEFAULT_FRACTIONS: [f64; 3] = [0.6, 0.2, 0.2];

impl SplitRule {
    /// Prefix split when every id carries one, fractions otherwise.
    pub fn infer(ds: &Dataset) -> SplitRule {
        let all_prefixed = !ds.is_empty() && ds.records.iter().all(|r| split_of(&r.id).is_some());
        if all_prefixed {
            SplitRule::Prefix
        } else {
            SplitRule::Fractions(DEFAULT_FRACTIONS)
        }
    }
}

fn split_of(id: &str) -> Option<usize> {
    SPLIT_NAMES
        .iter()
        .position(|p| id.strip_prefix(p).is_some_and(|rest| rest.starts_with('-')))
}

pub fn split(ds: &Dataset, rule: &SplitRule, seed: u64) -> Result<Splits> {
    let n = ds.len();
    let mut parts: [Vec<usize>; 3] = Default::default();
    match rule {
        SplitRule::Fractions(f) => {
            if f.iter().any(|v| !(*v >= 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::data(format!("split fractions {f:?} must be >= 0 and sum to 1")));
            }
            let perm = SeededRng::derive(seed, 2).permutation(n);
            let n_train = (n as f64 * f[0]).round() as usize;
            let n_val = ((n as f64 * f[1]).round() as usize).min(n - n_train);
            parts[0] = perm[..n_train].to_vec();
            parts[1] = perm[n_train..n_train + n_val].to_vec();
            parts[2] = perm[n_train + n_val..].to_vec();
            for p in parts.iter_mut() {
                p.sort_unstable();
            }
        }
        SplitRule::Ids { train, val, test } => {
            let index: HashMap<&str, usize> = ds.records.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
            let mut taken = vec![false; n];
            for (slot, ids) in [train, val, test].into_iter().enumerate() {
                for id in ids {
                    let &i = index
                        .get(id.as_str())
                        .ok_or_else(|| Error::data(format!("split id `{id}` is not in the dataset")))?;
                    if taken[i] {
                        return Err(Error::data(format!("split id `{id}` appears more than once")));
                    }
                    taken[i] = true;
                    parts[slot].push(i);
                }
            }
            if let Some(i) = taken.iter().position(|t| !t) {
                return Err(Error::data(format!(
                    "record `{}` is not assigned to any split",
                    ds.records[i].id
                )));
            }
        }
        SplitRule::Prefix => {
            for (i, r) in ds.records.iter().enumerate() {
                let slot = split_of(&r.id).ok_or_else(|| {
                    Error::data(format!("record id `{}` has no train-/val-/test- prefix", r.id))
                })?;
                parts[slot].push(i);
            }
        }
    }
    Ok(Splits {
        train: ds.subset(&parts[0]),
        val: ds.subset(&parts[1]),
        test: ds.subset(&parts[2]),
    })
}
