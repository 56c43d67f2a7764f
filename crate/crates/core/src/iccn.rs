//! The interaction canonical correlation network and its trainer.

use crate::autodiff::{Graph, Var};
use crate::data::{rows_matrix, Dataset, UtteranceRecord};
use crate::error::{Error, Result};
use crate::loss::{cca_loss, cosine_loss, measure_alignment, CcaLossConfig};
use crate::nn::{Bound, Conv1d, Conv2dBlock, Conv2dSpec, InitRecord, Lstm, Mlp, ParamSet};
use crate::optim::{RmsProp, RmsPropConfig};
use crate::rng::SeededRng;
use crate::tensor::Tensor;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "full")]
    Full,
    #[serde(rename = "no-text")]
    NoText,
    #[serde(rename = "cos")]
    Cos,
    #[serde(rename = "no-text+cos")]
    NoTextCos,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Full, Variant::NoText, Variant::Cos, Variant::NoTextCos];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoText => "no-text",
            Variant::Cos => "cos",
            Variant::NoTextCos => "no-text+cos",
        }
    }

    pub fn parse(s: &str) -> Result<Variant> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown variant `{s}`; valid: full, no-text, cos, no-text+cos")))
    }

    /// Whether the branches go through the text outer product.
    pub fn uses_text(&self) -> bool {
        matches!(self, Variant::Full | Variant::Cos)
    }

    pub fn uses_cosine(&self) -> bool {
        matches!(self, Variant::Cos | Variant::NoTextCos)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IccnConfig {
    pub d_t: usize,
    pub d_a: usize,
    pub d_v: usize,
    pub conv1d_kernel: usize,
    /// conv1d output channels; 0 keeps the input width.
    pub conv1d_channels: usize,
    /// d_a2
    pub lstm_hidden_a: usize,
    /// d_v2
    pub lstm_hidden_v: usize,
    /// Width of K_ta / K_tv.
    pub embed_width: usize,
    /// `None` picks the first default stack that fits d_t x d_2.
    pub conv2d: Option<Conv2dSpec>,
    /// Hidden width of the dense stack used by the no-text variants.
    pub direct_hidden: usize,
    pub loss: CcaLossConfig,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub variant: Variant,
}

impl IccnConfig {
    /// Desk-scale defaults for the given feature widths.
    pub fn desk(d_t: usize, d_a: usize, d_v: usize) -> Self {
        IccnConfig {
            d_t,
            d_a,
            d_v,
            conv1d_kernel: 3,
            conv1d_channels: 0,
            lstm_hidden_a: 8,
            lstm_hidden_v: 8,
            embed_width: 8,
            conv2d: None,
            direct_hidden: 16,
            loss: CcaLossConfig::new(8),
            lr: 1e-3,
            batch_size: 64,
            epochs: 30,
            seed: 0,
            variant: Variant::Full,
        }
    }

    pub fn with_embedding(mut self, width: usize) -> Self {
        self.embed_width = width;
        self.loss.out_dim = width;
        self
    }

    pub fn conv1d_out(&self, input: usize) -> usize {
        if self.conv1d_channels == 0 {
            input
        } else {
            self.conv1d_channels
        }
    }

    pub fn conv2d_spec(&self, d2: usize) -> Result<Conv2dSpec> {
        match &self.conv2d {
            Some(spec) => {
                let mut spec = spec.clone();
                spec.embed_width = self.embed_width;
                spec.output_shape(self.d_t, d2)?;
                Ok(spec)
            }
            None => Conv2dSpec::fitting(self.d_t, d2, self.embed_width),
        }
    }

    /// Width of [K_ta; H_t; K_tv].
    pub fn output_width(&self) -> usize {
        2 * self.embed_width + self.d_t
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("d_t", self.d_t),
            ("d_a", self.d_a),
            ("d_v", self.d_v),
            ("conv1d kernel", self.conv1d_kernel),
            ("lstm hidden (audio)", self.lstm_hidden_a),
            ("lstm hidden (video)", self.lstm_hidden_v),
            ("embedding width", self.embed_width),
            ("direct hidden", self.direct_hidden),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::config(format!("{name} must be >= 1")));
        }
        if self.loss.out_dim == 0 || self.loss.out_dim > self.embed_width {
            return Err(Error::config(format!(
                "loss out_dim {} must be in 1..={}",
                self.loss.out_dim, self.embed_width
            )));
        }
        if self.batch_size <= self.embed_width {
            return Err(Error::config(format!(
                "batch size {} must exceed the embedding width {}",
                self.batch_size, self.embed_width
            )));
        }
        if !(self.lr > 0.0 && self.lr < 1.0) {
            return Err(Error::config(format!("learning rate {} must lie in (0, 1)", self.lr)));
        }
        if self.variant.uses_text() {
            self.conv2d_spec(self.lstm_hidden_a)?;
            self.conv2d_spec(self.lstm_hidden_v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Head {
    Interaction(Conv2dBlock),
    Direct(Mlp),
}

#[derive(Debug, Clone)]
struct Branch {
    conv1d: Conv1d,
    lstm: Lstm,
    head: Head,
}

impl Branch {
    fn new(cfg: &IccnConfig, params: &mut ParamSet, name: &str, d: usize, hidden: usize, rng: &mut SeededRng) -> Result<Self> {
        let c_out = cfg.conv1d_out(d);
        let conv1d = Conv1d::new(params, &format!("{name}.conv1d"), d, c_out, cfg.conv1d_kernel, rng);
        let lstm = Lstm::new(params, &format!("{name}.lstm"), c_out, hidden, rng);
        let head = if cfg.variant.uses_text() {
            let spec = cfg.conv2d_spec(hidden)?;
            Head::Interaction(Conv2dBlock::new(params, &format!("{name}.conv2d"), (cfg.d_t, hidden), &spec, rng)?)
        } else {
            Head::Direct(Mlp::new(
                params,
                &format!("{name}.dense"),
                &[hidden, cfg.direct_hidden, cfg.embed_width],
                rng,
            ))
        };
        Ok(Branch { conv1d, lstm, head })
    }

    /// Returns (H_2, H_t (x) H_2 when the head uses text, K).
    fn forward(&self, g: &mut Graph, p: &Bound, seq: &Tensor, text: Option<Var>, id: &str) -> Result<(Var, Option<Var>, Var)> {
        let x = g.leaf(seq.clone());
        let h1 = self.conv1d.forward(g, p, x).map_err(|e| with_record(e, id))?;
        let h2 = self.lstm.forward(g, p, h1).map_err(|e| with_record(e, id))?;
        match (&self.head, text) {
            (Head::Interaction(block), Some(t)) => {
                let inter = g.outer(t, h2)?;
                let k = block.forward(g, p, inter)?;
                Ok((h2, Some(inter), k))
            }
            (Head::Direct(mlp), _) => Ok((h2, None, mlp.forward(g, p, h2)?)),
            (Head::Interaction(_), None) => Err(Error::contract("interaction head needs the text vector")),
        }
    }
}

fn with_record(e: Error, id: &str) -> Error {
    match e {
        Error::DegenerateInput(m) => Error::DegenerateInput(format!("record `{id}`: {m}")),
        other => other,
    }
}

/// Per-example graph outputs.
pub struct ExampleForward {
    pub graph: Graph,
    pub bound: Bound,
    pub k_ta: Var,
    pub k_tv: Var,
    pub h_ta: Option<Var>,
    pub h_tv: Option<Var>,
}

#[derive(Debug, Clone)]
pub struct IccnModel {
    pub config: IccnConfig,
    pub params: ParamSet,
    audio: Branch,
    video: Branch,
}

impl IccnModel {
    /// Builds the variant's graph structure with freshly initialized weights.
    pub fn build(config: &IccnConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = SeededRng::derive(config.seed, 0);
        let mut params = ParamSet::new();
        let audio = Branch::new(config, &mut params, "audio", config.d_a, config.lstm_hidden_a, &mut rng)?;
        let video = Branch::new(config, &mut params, "video", config.d_v, config.lstm_hidden_v, &mut rng)?;
        params.init = Some(InitRecord {
            scheme: "uniform-fan-in".into(),
            seed: config.seed,
        });
        Ok(IccnModel {
            config: config.clone(),
            params,
            audio,
            video,
        })
    }

    fn check_record(&self, rec: &UtteranceRecord) -> Result<()> {
        let c = &self.config;
        if rec.text.len() != c.d_t || rec.audio.rows() != c.d_a || rec.video.rows() != c.d_v {
            return Err(Error::contract(format!(
                "record `{}` has dims (t {}, a {}, v {}), model expects ({}, {}, {})",
                rec.id,
                rec.text.len(),
                rec.audio.rows(),
                rec.video.rows(),
                c.d_t,
                c.d_a,
                c.d_v
            )));
        }
        Ok(())
    }

    /// Forward pass for one record with the given parameter values.
    pub fn forward_with(&self, params: &ParamSet, rec: &UtteranceRecord) -> Result<ExampleForward> {
        self.check_record(rec)?;
        let mut g = Graph::new();
        let bound = params.bind(&mut g);
        let text = if self.config.variant.uses_text() {
            Some(g.leaf(Tensor::vector(rec.text.clone())))
        } else {
            None
        };
        let (_, h_ta, k_ta) = self.audio.forward(&mut g, &bound, &rec.audio, text, &rec.id)?;
        let (_, h_tv, k_tv) = self.video.forward(&mut g, &bound, &rec.video, text, &rec.id)?;
        Ok(ExampleForward {
            graph: g,
            bound,
            k_ta,
            k_tv,
            h_ta,
            h_tv,
        })
    }

    pub fn forward(&self, rec: &UtteranceRecord) -> Result<ExampleForward> {
        self.forward_with(&self.params, rec)
    }

    /// (H_ta, H_tv) for one record; `None` for the no-text variants.
    pub fn interaction_matrices(&self, rec: &UtteranceRecord) -> Result<Option<(Tensor, Tensor)>> {
        let f = self.forward(rec)?;
        Ok(match (f.h_ta, f.h_tv) {
            (Some(a), Some(v)) => Some((f.graph.value(a).clone(), f.graph.value(v).clone())),
            _ => None,
        })
    }

    /// (K_ta, K_tv) as m x embed matrices, one row per record.
    pub fn branch_outputs(&self, records: &[&UtteranceRecord]) -> Result<(Tensor, Tensor)> {
        self.branch_outputs_with(&self.params, records)
    }

    fn branch_outputs_with(&self, params: &ParamSet, records: &[&UtteranceRecord]) -> Result<(Tensor, Tensor)> {
        let rows: Vec<(Vec<f64>, Vec<f64>)> = records
            .par_iter()
            .map(|r| {
                let f = self.forward_with(params, r)?;
                Ok((f.graph.value(f.k_ta).data().to_vec(), f.graph.value(f.k_tv).data().to_vec()))
            })
            .collect::<Result<_>>()?;
        let e = self.config.embed_width;
        Ok((
            rows_matrix(rows.iter().map(|r| r.0.clone()), e),
            rows_matrix(rows.iter().map(|r| r.1.clone()), e),
        ))
    }

    /// Loss and parameter gradients on one minibatch.
    pub fn batch_loss(&self, params: &ParamSet, records: &[&UtteranceRecord]) -> Result<(f64, Vec<Tensor>)> {
        let forwards: Vec<ExampleForward> = records
            .par_iter()
            .map(|r| self.forward_with(params, r))
            .collect::<Result<_>>()?;
        let e = self.config.embed_width;
        let f_a = rows_matrix(forwards.iter().map(|f| f.graph.value(f.k_ta).data().to_vec()), e);
        let f_v = rows_matrix(forwards.iter().map(|f| f.graph.value(f.k_tv).data().to_vec()), e);
        let (loss, g_v, g_a) = if self.config.variant.uses_cosine() {
            let r = cosine_loss(&f_v, &f_a)?;
            (r.loss, r.grad_fx, r.grad_fy)
        } else {
            let r = cca_loss(&f_v, &f_a, &self.config.loss)?;
            (r.loss, r.grad_fx, r.grad_fy)
        };
        if !loss.is_finite() {
            return Ok((loss, Vec::new()));
        }
        let per_example: Vec<Vec<Tensor>> = forwards
            .par_iter()
            .enumerate()
            .map(|(i, f)| {
                let seeds = [
                    (f.k_ta, Tensor::vector(g_a.row(i).to_vec())),
                    (f.k_tv, Tensor::vector(g_v.row(i).to_vec())),
                ];
                let grads = f.graph.backward(&seeds)?;
                Ok(f.bound.gradients(params, &grads))
            })
            .collect::<Result<_>>()?;
        let mut total: Vec<Tensor> = params.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect();
        for grads in &per_example {
            for (acc, g) in total.iter_mut().zip(grads) {
                acc.add_assign(g);
            }
        }
        Ok((loss, total))
    }

    /// [K_ta; H_t; K_tv] (or [K_a; H_t; K_v] for the no-text variants).
    pub fn extract_embedding(&self, rec: &UtteranceRecord) -> Result<Vec<f64>> {
        let f = self.forward(rec)?;
        let mut out = Vec::with_capacity(self.config.output_width());
        out.extend_from_slice(f.graph.value(f.k_ta).data());
        out.extend_from_slice(&rec.text);
        out.extend_from_slice(f.graph.value(f.k_tv).data());
        Ok(out)
    }

    /// One embedding row per record, in dataset order.
    pub fn extract_embeddings(&self, ds: &Dataset) -> Result<Tensor> {
        let rows: Vec<Vec<f64>> = ds
            .records
            .par_iter()
            .map(|r| self.extract_embedding(r))
            .collect::<Result<_>>()?;
        Ok(rows_matrix(rows.into_iter(), self.config.output_width()))
    }

    /// Whether any example graph contains an outer-product node.
    pub fn has_outer_product(&self, rec: &UtteranceRecord) -> Result<bool> {
        Ok(self.forward(rec)?.graph.has_outer_product())
    }
}

/// Checks the variant and returns the untrained model.
pub fn build_variant(cfg: &IccnConfig) -> Result<IccnModel> {
    IccnModel::build(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epoch: usize,
    pub loss: f64,
    pub mean_canonical_correlation: f64,
    pub mean_cosine_similarity: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub points: Vec<CurvePoint>,
}

pub const CURVE_HEADER: &str = "epoch,loss,mean_canonical_correlation,mean_cosine_similarity";

impl TrainingCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Option<&CurvePoint> {
        self.points.first()
    }

    pub fn last(&self) -> Option<&CurvePoint> {
        self.points.last()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CURVE_HEADER);
        s.push('\n');
        for p in &self.points {
            s.push_str(&format!(
                "{},{},{},{}\n",
                p.epoch, p.loss, p.mean_canonical_correlation, p.mean_cosine_similarity
            ));
        }
        s
    }
}

/// CCA loss and alignment of the branch outputs over `ds`.
pub fn measure(model: &IccnModel, ds: &Dataset) -> Result<CurvePoint> {
    let refs: Vec<&UtteranceRecord> = ds.records.iter().collect();
    let (f_a, f_v) = model.branch_outputs(&refs)?;
    let a = measure_alignment(&f_v, &f_a, &model.config.loss)?;
    Ok(CurvePoint {
        epoch: 0,
        loss: -a.mean_canonical_correlation * model.config.loss.out_dim as f64,
        mean_canonical_correlation: a.mean_canonical_correlation,
        mean_cosine_similarity: a.mean_cosine_similarity,
    })
}

/// Minibatch RMSProp on the variant's loss; the curve gets one full-pass
/// measurement per finished epoch.
pub fn train_iccn(train: &Dataset, cfg: &IccnConfig) -> Result<(IccnModel, TrainingCurve)> {
    let mut model = IccnModel::build(cfg)?;
    let mut curve = TrainingCurve::default();
    if cfg.epochs == 0 {
        return Ok((model, curve));
    }
    let n = train.len();
    if n < cfg.batch_size {
        return Err(Error::MinibatchTooSmall {
            got: n,
            need: cfg.batch_size,
        });
    }
    let mut opt = RmsProp::new(RmsPropConfig::with_lr(cfg.lr), &model.params);
    let mut shuffler = SeededRng::derive(cfg.seed, 1);
    let batches = n / cfg.batch_size;
    let mut remaining = cfg.epochs;
    let mut epoch = 0;
    while remaining > 0 {
        epoch += 1;
        let order = shuffler.permutation(n);
        for b in 0..batches {
            let batch: Vec<&UtteranceRecord> = order[b * cfg.batch_size..(b + 1) * cfg.batch_size]
                .iter()
                .map(|&i| &train.records[i])
                .collect();
            let (loss, grads) = model.batch_loss(&model.params, &batch)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            opt.step(&mut model.params, &grads)?;
        }
        let mut point = measure(&model, train)?;
        point.epoch = epoch;
        if !(point.loss.is_finite() && point.mean_cosine_similarity.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch, batch: batches });
        }
        curve.points.push(point);
        remaining -= 1;
    }
    Ok((model, curve))
}

/// Rebuilds a model from its config and replaces the weights.
pub fn load_model(cfg: &IccnConfig, tensors: &[(String, Tensor)]) -> Result<IccnModel> {
    let mut model = IccnModel::build(cfg)?;
    model.params.load_from(tensors)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, SyntheticSpec};
    use crate::linalg::svd;

    fn tiny_data(seed: u64) -> Dataset {
        generate(&SyntheticSpec {
            counts: [40, 4, 4],
            ..SyntheticSpec::preset("toy", seed).unwrap()
        })
        .unwrap()
    }

    fn tiny_cfg(variant: Variant) -> IccnConfig {
        IccnConfig {
            batch_size: 20,
            epochs: 2,
            variant,
            ..IccnConfig::desk(16, 8, 6).with_embedding(4)
        }
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(Variant::parse(v.as_str()).unwrap(), v);
        }
        assert!(matches!(Variant::parse("bogus"), Err(Error::Config(_))));
    }

    #[test]
    fn interaction_matrices_are_rank_one() {
        let ds = tiny_data(1);
        let model = IccnModel::build(&tiny_cfg(Variant::Full)).unwrap();
        for rec in ds.records.iter().take(5) {
            let (ta, tv) = model.interaction_matrices(rec).unwrap().unwrap();
            assert_eq!(ta.shape(), &[16, 8]);
            for m in [ta, tv] {
                let s = svd(&m).unwrap().s;
                assert!(s[1] < 1e-10 * s[0].max(1e-300) || s[0] < 1e-12);
            }
        }
    }

    #[test]
    fn zero_text_gives_zero_interaction() {
        let ds = tiny_data(2);
        let model = IccnModel::build(&tiny_cfg(Variant::Full)).unwrap();
        let mut rec = ds.records[0].clone();
        rec.text = vec![0.0; 16];
        let (ta, tv) = model.interaction_matrices(&rec).unwrap().unwrap();
        assert_eq!(ta.frobenius_norm(), 0.0);
        assert_eq!(tv.frobenius_norm(), 0.0);
        let mut other = ds.records[1].clone();
        other.text = vec![0.0; 16];
        assert_eq!(model.extract_embedding(&rec).unwrap()[..4], model.extract_embedding(&other).unwrap()[..4]);
    }

    #[test]
    fn no_text_graph_has_no_outer_product() {
        let ds = tiny_data(3);
        let full = IccnModel::build(&tiny_cfg(Variant::Full)).unwrap();
        let plain = IccnModel::build(&tiny_cfg(Variant::NoText)).unwrap();
        assert!(full.has_outer_product(&ds.records[0]).unwrap());
        assert!(!plain.has_outer_product(&ds.records[0]).unwrap());
    }

    #[test]
    fn text_changes_k_ta() {
        let ds = tiny_data(4);
        let model = IccnModel::build(&tiny_cfg(Variant::Full)).unwrap();
        let a = ds.records[0].clone();
        let mut b = a.clone();
        b.text = ds.records[1].text.clone();
        let ea = model.extract_embedding(&a).unwrap();
        let eb = model.extract_embedding(&b).unwrap();
        assert_eq!(ea.len(), 4 + 16 + 4);
        assert_ne!(ea[..4], eb[..4]);
        assert_eq!(ea, model.extract_embedding(&a).unwrap());
    }

    #[test]
    fn zero_epochs_keep_initialization() {
        let ds = tiny_data(5);
        let cfg = IccnConfig {
            epochs: 0,
            ..tiny_cfg(Variant::Full)
        };
        let (model, curve) = train_iccn(&ds, &cfg).unwrap();
        assert!(curve.is_empty());
        assert_eq!(model.params, IccnModel::build(&cfg).unwrap().params);
    }

    #[test]
    fn training_is_deterministic() {
        let ds = tiny_data(6);
        let cfg = tiny_cfg(Variant::Full);
        let (m1, c1) = train_iccn(&ds, &cfg).unwrap();
        let (m2, c2) = train_iccn(&ds, &cfg).unwrap();
        assert_eq!(c1, c2);
        assert_eq!(c1.len(), 2);
        assert_eq!(m1.params, m2.params);
        assert!(m1.params.is_finite());
        assert_eq!(c1.to_csv().lines().count(), 3);
    }

    #[test]
    fn short_sequence_names_record() {
        let ds = tiny_data(7);
        let model = IccnModel::build(&tiny_cfg(Variant::Full)).unwrap();
        let mut rec = ds.records[0].clone();
        rec.audio = Tensor::zeros(&[8, 2]);
        match model.forward(&rec) {
            Err(Error::DegenerateInput(m)) => assert!(m.contains("train-000001"), "{m}"),
            other => panic!("{:?}", other.err()),
        }
    }

    #[test]
    fn config_rejects_small_batch() {
        let cfg = IccnConfig {
            batch_size: 4,
            ..tiny_cfg(Variant::Full)
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
