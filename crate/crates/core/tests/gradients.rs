//! Analytic gradients against central finite differences, per layer and for
//! the full ICCN composition.

mod common;

use common::*;

fn check(name: &str) {
    for seed in SEEDS {
        let err = layer_case(name, seed);
        assert!(err < LAYER_TOL, "{name} seed {seed}: rel err {err:.3e}");
    }
}

#[test]
fn dense_gradients() {
    check("dense");
}

#[test]
fn mlp_gradients() {
    check("mlp");
}

#[test]
fn conv1d_gradients() {
    check("conv1d");
}

#[test]
fn lstm_gradients() {
    check("lstm");
}

#[test]
fn conv2d_block_gradients() {
    check("conv2d");
}

#[test]
fn outer_product_gradients() {
    check("outer");
}

#[test]
fn cca_loss_gradients() {
    check("cca_loss");
}

#[test]
fn cosine_loss_gradients() {
    check("cosine_loss");
}

#[test]
fn full_composition_gradients() {
    let rep = composition_check();
    assert!(rep.failures.is_empty(), "{:#?}", rep.failures);
    assert!(rep.live_cases >= 8, "only {} of 10 cases had a non-trivial gradient", rep.live_cases);
}
