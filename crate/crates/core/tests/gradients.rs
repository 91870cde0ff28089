//! Analytic gradients against central finite differences.

mod common;

use common::worst_gradient_error;

#[test]
fn gradients_match_central_differences() {
    for seed in 0..60 {
        for lambda1 in [0.0, 1.0 / 128.0, 2.0] {
            let e = worst_gradient_error(seed, lambda1);
            assert!(e < 1e-4, "seed {seed}, λ₁={lambda1}: relative error {e}");
        }
    }
}
