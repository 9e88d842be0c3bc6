//! Exactness of the specialized inner-problem solvers against a generic
//! linear-programming formulation of the same feasible set.

mod common;

use common::{lp_inner, rand_ball, rand_z};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rmdp_core::math;
use rmdp_core::norms::{span, weighted_norm, worst_case_expectation, NormKind, Sense};

#[test]
fn inner_solver_matches_lp_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..500 {
        let n = 2 + (trial % 5); // S in 2..=6
        let kind = if trial % 2 == 0 {
            NormKind::WeightedL1
        } else {
            NormKind::WeightedLInf
        };
        let ball = rand_ball(&mut rng, n, kind);
        let z = rand_z(&mut rng, n);
        let mut lp_vals = [0.0; 2];
        for (k, sense) in [Sense::Min, Sense::Max].into_iter().enumerate() {
            let got = worst_case_expectation(&z, &ball, sense).unwrap();
            let lp = lp_inner(&z, &ball, sense);
            lp_vals[k] = lp;
            assert!(
                (got.value - lp).abs() < 1e-8,
                "trial {trial} {kind:?} {sense:?}: solver {} vs lp {lp}\nball {ball:?}\nz {z:?}",
                got.value
            );

            // Witness feasibility: simplex and norm constraint.
            let mass: f64 = math::sum(&got.witness);
            assert!((mass - 1.0).abs() < 1e-9, "witness mass {mass}");
            assert!(got.witness.iter().all(|&p| p >= -1e-12));
            let diff: Vec<f64> = got
                .witness
                .iter()
                .zip(&ball.nominal)
                .map(|(p, q)| p - q)
                .collect();
            let d = weighted_norm(&diff, &ball.weights, ball.kind);
            assert!(d <= ball.budget + 1e-9, "witness norm {d} > {}", ball.budget);

            // Witness attains the reported value.
            assert!((math::dot(&got.witness, &z) - got.value).abs() < 1e-10);
        }
        // Nominal lies between the two extremes.
        let at_nominal = math::dot(&ball.nominal, &z);
        assert!(lp_vals[0] <= at_nominal + 1e-9 && at_nominal <= lp_vals[1] + 1e-9);

        // Span equals the LP difference.
        let sp = span(&z, &ball).unwrap();
        assert!((sp - (lp_vals[1] - lp_vals[0])).abs() < 1e-8);
    }
}
