//! Helpers shared by the gradient suite and the acceptance runner.
#![allow(dead_code)]

use iccn::autodiff::{Graph, Var};
use iccn::data::{generate, SyntheticSpec, UtteranceRecord};
use iccn::gradcheck::{numeric_gradient, numeric_param_gradient, numeric_param_gradient_with_kinks, relative_error, relative_error_masked, DEFAULT_STEP};
use iccn::iccn::{IccnConfig, IccnModel, Variant};
use iccn::loss::{cca_loss, cosine_loss, CcaLossConfig};
use iccn::nn::{Bound, Conv1d, Conv2dBlock, Conv2dSpec, Dense, Lstm, Mlp, ParamSet};
use iccn::rng::SeededRng;
use iccn::{Result, Tensor};

pub const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
pub const LAYER_TOL: f64 = 1e-4;
pub const COMPOSITION_TOL: f64 = 1e-3;
/// Entries whose one-sided slopes differ by more than this straddle a
/// ReLU or max-pool switch and are excluded from the comparison.
pub const KINK_TOL: f64 = 1e-3;

pub fn random(shape: &[usize], rng: &mut SeededRng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.normal()).collect()).unwrap()
}

pub type Forward<'a> = &'a dyn Fn(&mut Graph, &Bound, Var) -> Result<Var>;

/// Scalar probe sum(c * layer(x)); checks parameter and input gradients.
pub fn check_layer(params: &ParamSet, input: &Tensor, fwd: Forward, rng: &mut SeededRng) -> (f64, f64) {
    let out_shape = {
        let mut g = Graph::new();
        let p = params.bind(&mut g);
        let x = g.leaf(input.clone());
        let y = fwd(&mut g, &p, x).unwrap();
        g.value(y).shape().to_vec()
    };
    let c = random(&out_shape, rng);
    let probe = |ps: &ParamSet, xin: &Tensor| -> Result<f64> {
        let mut g = Graph::new();
        let p = ps.bind(&mut g);
        let x = g.leaf(xin.clone());
        let y = fwd(&mut g, &p, x)?;
        Ok(g.value(y).data().iter().zip(c.data()).map(|(a, b)| a * b).sum())
    };
    let mut g = Graph::new();
    let p = params.bind(&mut g);
    let x = g.leaf(input.clone());
    let y = fwd(&mut g, &p, x).unwrap();
    let grads = g.backward(&[(y, c.clone())]).unwrap();
    let analytic_p = p.gradients(params, &grads);
    let analytic_x = grads.get_or_zeros(x, input.shape());
    let numeric_p = numeric_param_gradient(params, DEFAULT_STEP, |ps| probe(ps, input)).unwrap();
    let numeric_x = numeric_gradient(input, DEFAULT_STEP, |xin| probe(params, xin)).unwrap();
    (
        relative_error(&analytic_p, &numeric_p),
        relative_error(&[analytic_x], &[numeric_x]),
    )
}

pub const LAYER_CASES: [&str; 8] = ["dense", "mlp", "conv1d", "lstm", "conv2d", "outer", "cca_loss", "cosine_loss"];

/// Worst relative error (parameters and inputs) of one layer or loss for one seed.
pub fn layer_case(name: &str, seed: u64) -> f64 {
    let mut rng = SeededRng::new(seed);
    let worst = |e: (f64, f64)| e.0.max(e.1);
    match name {
        "dense" => {
            let mut ps = ParamSet::new();
            let l = Dense::new(&mut ps, "d", 5, 3, &mut rng);
            let x = random(&[7, 5], &mut rng);
            worst(check_layer(&ps, &x, &|g, p, x| l.forward(g, p, x), &mut rng))
        }
        "mlp" => {
            let mut ps = ParamSet::new();
            let l = Mlp::new(&mut ps, "m", &[4, 6, 3], &mut rng);
            let x = random(&[9, 4], &mut rng);
            worst(check_layer(&ps, &x, &|g, p, x| l.forward(g, p, x), &mut rng))
        }
        "conv1d" => {
            let mut ps = ParamSet::new();
            let l = Conv1d::new(&mut ps, "c", 4, 3, 3, &mut rng);
            let x = random(&[4, 9], &mut rng);
            worst(check_layer(&ps, &x, &|g, p, x| l.forward(g, p, x), &mut rng))
        }
        "lstm" => {
            let mut ps = ParamSet::new();
            let l = Lstm::new(&mut ps, "l", 3, 4, &mut rng);
            let x = random(&[3, 6], &mut rng);
            worst(check_layer(&ps, &x, &|g, p, x| l.forward(g, p, x), &mut rng))
        }
        "conv2d" => {
            let mut ps = ParamSet::new();
            let spec = Conv2dSpec::fitting(6, 4, 3).unwrap();
            let l = Conv2dBlock::new(&mut ps, "b", (6, 4), &spec, &mut rng).unwrap();
            let x = random(&[6, 4], &mut rng);
            worst(check_layer(&ps, &x, &|g, p, x| l.forward(g, p, x), &mut rng))
        }
        "outer" => {
            let t = random(&[5], &mut rng);
            let a = random(&[6], &mut rng);
            let fwd = |g: &mut Graph, _: &Bound, x: Var| {
                let tv = g.leaf(t.clone());
                g.outer(tv, x)
            };
            check_layer(&ParamSet::new(), &a, &fwd, &mut rng).1
        }
        "cca_loss" => {
            let (m, d1, d2, k) = (40, 4, 3, 3);
            let shared = random(&[m, 2], &mut rng);
            let mut fx = random(&[m, d1], &mut rng);
            let mut fy = random(&[m, d2], &mut rng);
            for i in 0..m {
                for j in 0..2 {
                    fx.set(i, j, fx.at(i, j) * 0.5 + shared.at(i, j));
                    fy.set(i, j, fy.at(i, j) * 0.5 + shared.at(i, j));
                }
            }
            let cfg = CcaLossConfig::new(k);
            let r = cca_loss(&fx, &fy, &cfg).unwrap();
            let nx = numeric_gradient(&fx, DEFAULT_STEP, |p| Ok(cca_loss(p, &fy, &cfg)?.loss)).unwrap();
            let ny = numeric_gradient(&fy, DEFAULT_STEP, |p| Ok(cca_loss(&fx, p, &cfg)?.loss)).unwrap();
            relative_error(&[r.grad_fx, r.grad_fy], &[nx, ny])
        }
        "cosine_loss" => {
            let fx = random(&[12, 5], &mut rng);
            let fy = random(&[12, 5], &mut rng);
            let r = cosine_loss(&fx, &fy).unwrap();
            let nx = numeric_gradient(&fx, DEFAULT_STEP, |p| Ok(cosine_loss(p, &fy)?.loss)).unwrap();
            let ny = numeric_gradient(&fy, DEFAULT_STEP, |p| Ok(cosine_loss(&fx, p)?.loss)).unwrap();
            relative_error(&[r.grad_fx, r.grad_fy], &[nx, ny])
        }
        other => panic!("unknown gradient case {other}"),
    }
}

pub fn composition_batch(seed: u64) -> Vec<UtteranceRecord> {
    let spec = SyntheticSpec {
        d_t: 6,
        d_a: 5,
        d_v: 4,
        l_a: 5,
        l_v: 5,
        counts: [32, 1, 1],
        ..SyntheticSpec::preset("toy", seed).unwrap()
    };
    generate(&spec).unwrap().records.into_iter().take(32).collect()
}

pub fn composition_config(seed: u64, variant: Variant) -> IccnConfig {
    let mut cfg = IccnConfig::desk(6, 5, 4).with_embedding(3);
    cfg.lstm_hidden_a = 4;
    cfg.lstm_hidden_v = 4;
    cfg.batch_size = 32;
    cfg.seed = seed;
    cfg.variant = variant;
    cfg
}

/// Absolute gap below which two gradients agree even if both are ~0 (dead ReLU branch).
pub const ABS_FLOOR: f64 = 1e-8;

pub fn abs_gap(a: &[Tensor], b: &[Tensor]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.sub(y).frobenius_norm().powi(2)).sum::<f64>().sqrt()
}

/// Worst masked relative error, kink fraction and live-case count over
/// [`SEEDS`] x {full, cos}.
pub struct CompositionReport {
    pub worst_rel_err: f64,
    pub max_kink_fraction: f64,
    pub live_cases: usize,
    pub failures: Vec<String>,
}

pub fn composition_check() -> CompositionReport {
    let mut rep = CompositionReport {
        worst_rel_err: 0.0,
        max_kink_fraction: 0.0,
        live_cases: 0,
        failures: Vec::new(),
    };
    for seed in SEEDS {
        let records = composition_batch(seed);
        let refs: Vec<&UtteranceRecord> = records.iter().collect();
        for variant in [Variant::Full, Variant::Cos] {
            let model = IccnModel::build(&composition_config(seed, variant)).unwrap();
            let (_, analytic) = model.batch_loss(&model.params, &refs).unwrap();
            let (numeric, kinks) = numeric_param_gradient_with_kinks(&model.params, DEFAULT_STEP, KINK_TOL, |ps| {
                Ok(model.batch_loss(ps, &refs)?.0)
            })
            .unwrap();
            let flagged = kinks.iter().flatten().filter(|k| **k).count();
            let total: usize = kinks.iter().map(Vec::len).sum();
            let frac = flagged as f64 / total as f64;
            rep.max_kink_fraction = rep.max_kink_fraction.max(frac);
            let err = relative_error_masked(&analytic, &numeric, &kinks);
            let gap = abs_gap(&analytic, &numeric);
            if numeric.iter().map(Tensor::frobenius_norm).sum::<f64>() > 1e-6 {
                rep.live_cases += 1;
                rep.worst_rel_err = rep.worst_rel_err.max(err);
            }
            if !(err < COMPOSITION_TOL || gap < ABS_FLOOR) || frac > 0.01 {
                rep.failures.push(format!("seed {seed} {variant}: rel err {err:.3e}, abs gap {gap:.3e}, kinks {flagged}/{total}"));
            }
        }
    }
    rep
}
