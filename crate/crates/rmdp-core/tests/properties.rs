//! Property suites for the norm geometry, the weight/budget optimizers,
//! and the robust solver.

mod common;

use common::{rand_ball, rand_simplex, rand_z};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmdp_core::bayes::{sample_posterior, DirichletPosterior};
use rmdp_core::builder::{
    bayes_budget, bernstein_l1_budget, credible_quantile_index, default_lambda,
    hoeffding_l1_budget, hoeffding_linf_budget, optimize_weights_analytic, optimize_weights_socp,
    WeightVector,
};
use rmdp_core::math;
use rmdp_core::mdp::{policy_evaluate, solve_nominal, TabularMdp, TransitionModel};
use rmdp_core::norms::{
    dual_norm_bound, span, weighted_norm, worst_case_expectation, BallSpec, NormKind, Sense,
};
use rmdp_core::solver::{
    robust_bellman_apply, robust_value_iteration, AmbiguitySet,
};
use rmdp_core::ValueFunction;

fn rand_mdp(
    rng: &mut ChaCha8Rng,
    s_count: usize,
    a_count: usize,
    gamma: f64,
) -> (TabularMdp, TransitionModel) {
    let mut probs = Vec::new();
    let mut rewards = Vec::new();
    for _ in 0..s_count * a_count {
        probs.extend(rand_simplex(rng, s_count));
        for _ in 0..s_count {
            rewards.push(rng.random_range(0.0..1.0));
        }
    }
    let p0 = rand_simplex(rng, s_count);
    let support = vec![true; s_count * a_count * s_count];
    let mdp = TabularMdp::new(s_count, a_count, rewards, gamma, p0, support).unwrap();
    let model = TransitionModel::new(s_count, a_count, probs).unwrap();
    (mdp, model)
}

fn rand_amb(
    rng: &mut ChaCha8Rng,
    model: &TransitionModel,
    kind: NormKind,
    max_budget: f64,
) -> AmbiguitySet {
    let (s_count, a_count) = (model.num_states(), model.num_actions());
    let mut balls = Vec::new();
    for s in 0..s_count {
        for a in 0..a_count {
            let w: Vec<f64> = (0..s_count).map(|_| rng.random_range(0.2..2.0)).collect();
            balls.push(
                BallSpec::new(
                    kind,
                    model.row(s, a).to_vec(),
                    w,
                    rng.random_range(0.0..max_budget),
                )
                .unwrap(),
            );
        }
    }
    AmbiguitySet::new(kind, s_count, a_count, balls).unwrap()
}

#[test]
fn span_bounded_by_dual_norm() {
    // The span along z never exceeds 2 psi ||z - lambda 1||_* for any
    // center lambda.
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..200 {
        let n = 2 + (trial % 5);
        let kind = if trial % 2 == 0 {
            NormKind::WeightedL1
        } else {
            NormKind::WeightedLInf
        };
        let ball = rand_ball(&mut rng, n, kind);
        let z = rand_z(&mut rng, n);
        let sp = span(&z, &ball).unwrap();
        for _ in 0..100 {
            let lambda = rng.random_range(-3.0..3.0);
            let bound = dual_norm_bound(&z, &ball.weights, ball.budget, lambda, kind);
            assert!(
                sp <= bound + 1e-9,
                "span {sp} > bound {bound} at lambda {lambda}"
            );
        }
    }
}

#[test]
fn dual_norm_by_vertex_enumeration() {
    // max { z'x : ||x||_{1,w} = 1 } is attained at a vertex +-e_i / w_i
    // and equals the inverse-weighted sup norm of z.
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for trial in 0..200 {
        let n = 2 + (trial % 5);
        let z = rand_z(&mut rng, n);
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
        let by_vertices = (0..n)
            .map(|i| (1.0 / w[i]) * z[i].abs())
            .fold(0.0f64, f64::max);
        let inv: Vec<f64> = w.iter().map(|wi| 1.0 / wi).collect();
        let dual = weighted_norm(&z, &inv, NormKind::WeightedLInf);
        assert_eq!(by_vertices, dual);
    }
}

#[test]
fn span_monotone_in_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for trial in 0..200 {
        let n = 2 + (trial % 5);
        let kind = if trial % 2 == 0 {
            NormKind::WeightedL1
        } else {
            NormKind::WeightedLInf
        };
        let ball = rand_ball(&mut rng, n, kind);
        let z = rand_z(&mut rng, n);
        let psi2 = ball.budget + rng.random_range(0.0..1.0);
        let bigger = BallSpec::new(kind, ball.nominal.clone(), ball.weights.clone(), psi2).unwrap();
        let s1 = span(&z, &ball).unwrap();
        let s2 = span(&z, &bigger).unwrap();
        assert!(s1 <= s2 + 1e-10, "span not monotone: {s1} vs {s2}");
    }
}

#[test]
fn span_positively_homogeneous() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for trial in 0..100 {
        let n = 2 + (trial % 5);
        let kind = if trial % 2 == 0 {
            NormKind::WeightedL1
        } else {
            NormKind::WeightedLInf
        };
        let ball = rand_ball(&mut rng, n, kind);
        let z = rand_z(&mut rng, n);
        let alpha = rng.random_range(0.0..4.0);
        let scaled: Vec<f64> = z.iter().map(|v| alpha * v).collect();
        let s1 = span(&z, &ball).unwrap();
        let s2 = span(&scaled, &ball).unwrap();
        assert!((alpha * s1 - s2).abs() < 1e-9);
    }
}

/// The closed-form weights minimize the objective their branch is built
/// for — the sum-form gap for L1 balls and the max-form gap for
/// L-infinity balls — over the positive unit sphere.
#[test]
fn analytic_weights_dominate_random_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for trial in 0..200 {
        let n = 3 + (trial % 4);
        let z = rand_z(&mut rng, n);
        let support = vec![true; n];
        let kind = if trial % 2 == 0 {
            NormKind::WeightedL1
        } else {
            NormKind::WeightedLInf
        };
        let lambda = rng.random_range(-2.0..2.0);
        let b: Vec<f64> = z.iter().map(|zi| (zi - lambda).abs()).collect();
        let objective = |w: &[f64]| -> f64 {
            match kind {
                NormKind::WeightedL1 => b.iter().zip(w).map(|(bi, wi)| bi / wi).sum(),
                NormKind::WeightedLInf => {
                    b.iter().zip(w).map(|(bi, wi)| bi / wi).fold(0.0, f64::max)
                }
            }
        };
        let star = optimize_weights_analytic(&z, &support, lambda, kind);
        let best = objective(star.weights());
        for _ in 0..100 {
            let mut w: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in w.iter_mut() {
                *x /= norm;
            }
            let other = objective(&w);
            assert!(
                best <= other + 1e-9,
                "analytic {best} beaten by {other} ({kind:?}, z {z:?}, lambda {lambda})"
            );
        }
    }
}

#[test]
fn produced_weights_have_unit_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    for trial in 0..100 {
        let n = 2 + (trial % 6);
        let z = rand_z(&mut rng, n);
        let support = vec![true; n];
        for kind in [NormKind::WeightedL1, NormKind::WeightedLInf] {
            let lambda = default_lambda(&z, kind);
            let w = optimize_weights_analytic(&z, &support, lambda, kind);
            let norm: f64 = w.weights().iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        let (w, _) = optimize_weights_socp(&z, &support, 0.3);
        let norm: f64 = w.weights().iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}

/// The conic bound with jointly optimized center: agreement with a dense
/// grid plus ternary-search oracle, and dominance over the same objective
/// at the default (median) center.
#[test]
fn socp_matches_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for trial in 0..100 {
        let n = 2 + (trial % 6);
        let z = rand_z(&mut rng, n);
        let support = vec![true; n];
        let psi = rng.random_range(0.01..1.0);
        let (_, bound) = optimize_weights_socp(&z, &support, psi);

        let f = |lambda: f64| -> f64 {
            psi * z
                .iter()
                .map(|zi| (zi - lambda) * (zi - lambda))
                .sum::<f64>()
                .sqrt()
        };
        // Coarse grid, then ternary refinement around the best cell.
        let (zmin, zmax) = z
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let mut best = (zmin, f(zmin));
        let grid = 2000;
        for k in 0..=grid {
            let lam = zmin + (zmax - zmin) * k as f64 / grid as f64;
            let val = f(lam);
            if val < best.1 {
                best = (lam, val);
            }
        }
        let mut lo = best.0 - (zmax - zmin) / grid as f64;
        let mut hi = best.0 + (zmax - zmin) / grid as f64;
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if f(m1) <= f(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let oracle = f(0.5 * (lo + hi));
        assert!((bound - oracle).abs() < 1e-6, "bound {bound} oracle {oracle}");

        // Joint optimization beats the default center.
        let med = default_lambda(&z, NormKind::WeightedL1);
        assert!(bound <= f(med) + 1e-12);
    }
}

#[test]
fn frequentist_budgets_are_monotone_crossings() {
    let mut rng = ChaCha8Rng::seed_from_u64(38);
    for trial in 0..100 {
        let s_count = 2 + (trial % 9); // S <= 10
        let a_count = 1 + (trial % 3);
        let n = rng.random_range(1..10_000u64);
        let delta = rng.random_range(0.01..0.49);
        let mut w: Vec<f64> = (0..s_count).map(|_| rng.random_range(0.05..1.0)).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in w.iter_mut() {
            *x /= norm;
        }
        let mut sorted = w.clone();
        sorted.sort_unstable_by(|a, b| b.total_cmp(a));

        let rhs_linf = |psi: f64| {
            2.0 * (s_count * a_count) as f64
                * w.iter()
                    .map(|wi| (-2.0 * psi * psi * n as f64 / (wi * wi)).exp())
                    .sum::<f64>()
        };
        let rhs_l1 = |psi: f64| {
            2.0 * (s_count * a_count) as f64
                * (0..s_count - 1)
                    .map(|i| {
                        2f64.powi((s_count - 1 - i) as i32)
                            * (-psi * psi * n as f64 / (2.0 * sorted[i] * sorted[i])).exp()
                    })
                    .sum::<f64>()
        };
        let rhs_bern = |psi: f64| {
            2.0 * (s_count * a_count) as f64
                * (0..s_count - 1)
                    .map(|i| {
                        2f64.powi((s_count - 1 - i) as i32)
                            * (-3.0 * psi * psi * n as f64
                                / (6.0 * sorted[i] * sorted[i] + 4.0 * psi * sorted[i]))
                                .exp()
                    })
                    .sum::<f64>()
        };

        let cases: [(f64, &dyn Fn(f64) -> f64); 3] = [
            (hoeffding_linf_budget(n, delta, s_count, a_count, &w), &rhs_linf),
            (hoeffding_l1_budget(n, delta, s_count, a_count, &w), &rhs_l1),
            (bernstein_l1_budget(n, delta, s_count, a_count, &w), &rhs_bern),
        ];
        for (psi, rhs) in cases {
            assert!(rhs(psi) <= delta, "RHS({psi}) = {} > {delta}", rhs(psi));
            assert!(
                rhs((psi - 1e-6).max(0.0)) > delta * (1.0 - 1e-6) || psi == 0.0,
                "crossing not tight at {psi}"
            );
        }
    }
}

#[test]
fn credible_sets_cover_the_quantile_count_exactly() {
    // Counting test: each constructed ball contains at least the
    // order-statistic count of its own construction samples.
    let mut rng = ChaCha8Rng::seed_from_u64(39);
    let (mdp, model) = rand_mdp(&mut rng, 4, 2, 0.9);
    let mut dirichlet = vec![0.0; 4 * 2 * 4];
    for s in 0..4 {
        for a in 0..2 {
            for sp in 0..4 {
                dirichlet[(s * 2 + a) * 4 + sp] = 20.0 * model.row(s, a)[sp] + 0.5;
            }
        }
    }
    let posterior = DirichletPosterior::new(4, 2, dirichlet).unwrap();
    let samples = sample_posterior(&posterior, 250, 17).unwrap();
    let delta = 0.1;
    let kind = NormKind::WeightedL1;
    let weights: Vec<WeightVector> = (0..8)
        .map(|idx| WeightVector::uniform(mdp.support_row(idx / 2, idx % 2)))
        .collect();
    let out = bayes_budget(&samples, &weights, kind, delta).unwrap();
    let need = credible_quantile_index(samples.len(), delta, 4, 2);
    for s in 0..4 {
        for a in 0..2 {
            let (pbar, psi) = &out[s * 2 + a];
            let mut inside = 0;
            for m in samples.models() {
                let diff: Vec<f64> = m
                    .row(s, a)
                    .iter()
                    .zip(pbar)
                    .map(|(x, y)| x - y)
                    .collect();
                if weighted_norm(&diff, weights[s * 2 + a].weights(), kind) <= *psi {
                    inside += 1;
                }
            }
            assert!(inside >= need, "({s},{a}): {inside} < {need}");
        }
    }
}

#[test]
fn robust_operator_is_contraction_and_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for trial in 0..40 {
        let gamma = 0.9;
        let (mdp, model) = rand_mdp(&mut rng, 4, 2, gamma);
        let kind = if trial % 2 == 0 {
            NormKind::WeightedL1
        } else {
            NormKind::WeightedLInf
        };
        let amb = rand_amb(&mut rng, &model, kind, 0.8);
        let u: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
        let v: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
        let lu = robust_bellman_apply(&mdp, &amb, &ValueFunction::new(u.clone()).unwrap()).unwrap();
        let lv = robust_bellman_apply(&mdp, &amb, &ValueFunction::new(v.clone()).unwrap()).unwrap();
        let num = math::sup_norm_diff(&lu.values, &lv.values);
        let den = math::sup_norm_diff(&u, &v);
        assert!(num <= gamma * den + 1e-10, "contraction violated: {num} > {den}");

        // Monotonicity: push v above u elementwise.
        let above: Vec<f64> = u.iter().map(|x| x + rng.random_range(0.0..3.0)).collect();
        let l_above =
            robust_bellman_apply(&mdp, &amb, &ValueFunction::new(above).unwrap()).unwrap();
        for s in 0..4 {
            assert!(lu.values[s] <= l_above.values[s] + 1e-12);
        }
    }
}

#[test]
fn performance_loss_bounded_by_span() {
    // For any model inside the set, the return of the robust policy under
    // that model stays within max span / (1 - gamma) of the robust return.
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for trial in 0..20 {
        let gamma = 0.9;
        let (mdp, model) = rand_mdp(&mut rng, 4, 2, gamma);
        let kind = if trial % 2 == 0 {
            NormKind::WeightedL1
        } else {
            NormKind::WeightedLInf
        };
        let amb = rand_amb(&mut rng, &model, kind, 0.5);
        let tol = 1e-7;
        let sol = robust_value_iteration(&mdp, &amb, tol).unwrap();

        // Max span of the z-vectors at the fixed point.
        let mut max_span = 0.0f64;
        for s in 0..4 {
            for a in 0..2 {
                let rewards = mdp.reward_row(s, a);
                let z: Vec<f64> = (0..4)
                    .map(|sp| rewards[sp] + gamma * sol.value.values[sp])
                    .collect();
                max_span = max_span.max(span(&z, amb.ball(s, a)).unwrap());
            }
        }
        let cap = max_span / (1.0 - gamma) + 1e-5;

        // Sample members of each ball by optimizing random directions.
        for probe in 0..5 {
            let mut probs = Vec::new();
            for s in 0..4 {
                for a in 0..2 {
                    let dir = rand_z(&mut rng, 4);
                    let wc = worst_case_expectation(&dir, amb.ball(s, a), Sense::Min).unwrap();
                    probs.extend(wc.witness);
                }
            }
            // Clean up roundoff so the row passes validation.
            for row in probs.chunks_mut(4) {
                let total: f64 = row.iter().sum();
                for p in row.iter_mut() {
                    *p = p.max(0.0) / total;
                }
                let resid = 1.0 - row.iter().sum::<f64>();
                let imax = (0..4).max_by(|&i, &j| row[i].total_cmp(&row[j])).unwrap();
                row[imax] += resid;
            }
            let inside = TransitionModel::new(4, 2, probs).unwrap();
            let v = policy_evaluate(&mdp, &inside, &sol.policy).unwrap();
            let rho = math::dot(mdp.initial_dist(), &v.values);
            assert!(
                rho - sol.robust_return <= cap,
                "trial {trial} probe {probe}: loss {} > cap {cap}",
                rho - sol.robust_return
            );
            // And the robust return is a lower bound up to tolerance.
            assert!(rho >= sol.robust_return - 1e-4);
        }
    }
}

#[test]
fn nominal_policy_value_dominates_fixed_policies() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..20 {
        let (mdp, model) = rand_mdp(&mut rng, 4, 3, 0.85);
        let tol = 1e-7;
        let (v_opt, _) = solve_nominal(&mdp, &model, tol).unwrap();
        for _ in 0..5 {
            let actions: Vec<usize> = (0..4).map(|_| rng.random_range(0..3)).collect();
            let pi = rmdp_core::Policy::new(actions, 3).unwrap();
            let v = policy_evaluate(&mdp, &model, &pi).unwrap();
            for s in 0..4 {
                assert!(v.values[s] <= v_opt.values[s] + 2.0 * tol);
            }
        }
    }
}
