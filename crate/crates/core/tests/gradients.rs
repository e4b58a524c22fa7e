mod common;

use common::*;
use milseq::objectives::ObjectiveKind;

const TOL: f64 = 1e-5;

#[test]
fn every_primitive_matches_finite_differences() {
    for (name, primitive, gen) in primitive_cases() {
        for seed in 0..20 {
            let inputs = gen(&mut rng(seed));
            let err = primitive_gradient_error(&primitive, &inputs, seed + 1000);
            assert!(err <= TOL, "{} seed {}: relative error {:e}", name, seed, err);
        }
    }
}

#[test]
fn pooling_derivatives_match_finite_differences() {
    for seed in 0..50 {
        let err = pooling_gradient_error(seed);
        assert!(err <= TOL, "seed {}: {:e}", seed, err);
    }
}

#[test]
fn recorded_bag_loss_matches_direct_loss_derivative() {
    for seed in 0..50 {
        let err = bag_bce_gradient_error(seed);
        assert!(err <= TOL, "seed {}: {:e}", seed, err);
    }
}

#[test]
fn tiny_model_gradients_for_each_objective() {
    for kind in [ObjectiveKind::Max, ObjectiveKind::NoisyOr, ObjectiveKind::Ctc] {
        let mut checked = 0;
        for seed in 0..40 {
            if let Some(err) = tiny_model_gradient_error(kind, seed) {
                assert!(err <= TOL, "{:?} seed {}: {:e}", kind, seed, err);
                checked += 1;
            }
        }
        assert!(checked >= 20, "{:?}: only {} usable draws", kind, checked);
    }
}
