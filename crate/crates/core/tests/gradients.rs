mod common;

use asdface::model::CuKind;
use common::{loss_errors, model_error, numerics_errors, GRAD_TOL};

const SEEDS: u64 = 20;

#[test]
fn numerics_kernels_match_finite_differences() {
    for seed in 0..SEEDS {
        for (name, err) in numerics_errors(seed) {
            assert!(err < GRAD_TOL, "seed {seed}: {name} rel err {err:e}");
        }
    }
}

#[test]
fn task_losses_match_finite_differences() {
    for seed in 0..SEEDS {
        for (name, err) in loss_errors(seed) {
            assert!(err < GRAD_TOL, "seed {seed}: {name} rel err {err:e}");
        }
    }
}

#[test]
fn full_model_gradient_matches_finite_differences() {
    for cu in CuKind::ALL {
        for seed in 0..SEEDS {
            let err = model_error(cu, seed);
            assert!(err < GRAD_TOL, "{cu} seed {seed}: rel err {err:e}");
        }
    }
}
