//! Shared helpers for the integration suites: random instance generators
//! and a generic LP formulation of the inner adversarial problem.

#![allow(dead_code)]

use lp_oracle::{solve, Cmp, Constraint, Problem, Solution};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rmdp_core::norms::{BallSpec, NormKind, Sense};

pub fn rand_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| -f64::ln(rng.random_range(1e-12..1.0)))
        .collect();
    let total: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= total;
    }
    // Compensate the normalization residue on the largest entry so the
    // vector passes the strict simplex validation.
    let resid = 1.0 - v.iter().sum::<f64>();
    let imax = (0..n).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
    v[imax] += resid;
    v
}

/// Random ball, occasionally with an unreachable successor or a degenerate
/// or huge budget.
pub fn rand_ball(rng: &mut ChaCha8Rng, n: usize, kind: NormKind) -> BallSpec {
    let dead = if n > 2 && rng.random_bool(0.3) {
        Some(rng.random_range(0..n))
    } else {
        None
    };
    let m = n - dead.is_some() as usize;
    let reduced = rand_simplex(rng, m);
    let mut nominal = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut k = 0;
    for i in 0..n {
        if dead == Some(i) {
            nominal.push(0.0);
            weights.push(f64::INFINITY);
        } else {
            nominal.push(reduced[k]);
            weights.push(rng.random_range(0.1..2.0));
            k += 1;
        }
    }
    let budget = match rng.random_range(0..10) {
        0 => 0.0,
        1 => 5.0,
        _ => rng.random_range(0.0..1.5),
    };
    BallSpec::new(kind, nominal, weights, budget).unwrap()
}

pub fn rand_z(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
}

/// Generic LP formulation of `opt p' z` over the ball/simplex intersection.
pub fn lp_inner(z: &[f64], ball: &BallSpec, sense: Sense) -> f64 {
    let n = z.len();
    let sign = match sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let mut constraints = Vec::new();
    let nvars = match ball.kind {
        NormKind::WeightedL1 => 2 * n, // p then t >= |p - pbar|
        NormKind::WeightedLInf => n,
    };
    let row = |entries: &[(usize, f64)]| {
        let mut c = vec![0.0; nvars];
        for &(j, v) in entries {
            c[j] = v;
        }
        c
    };
    constraints.push(Constraint {
        coeffs: row(&(0..n).map(|i| (i, 1.0)).collect::<Vec<_>>()),
        cmp: Cmp::Eq,
        rhs: 1.0,
    });
    for i in 0..n {
        if ball.weights[i] == f64::INFINITY {
            constraints.push(Constraint {
                coeffs: row(&[(i, 1.0)]),
                cmp: Cmp::Eq,
                rhs: 0.0,
            });
        }
    }
    match ball.kind {
        NormKind::WeightedL1 => {
            for i in 0..n {
                constraints.push(Constraint {
                    coeffs: row(&[(i, 1.0), (n + i, -1.0)]),
                    cmp: Cmp::Le,
                    rhs: ball.nominal[i],
                });
                constraints.push(Constraint {
                    coeffs: row(&[(i, -1.0), (n + i, -1.0)]),
                    cmp: Cmp::Le,
                    rhs: -ball.nominal[i],
                });
            }
            let budget_row: Vec<(usize, f64)> = (0..n)
                .filter(|&i| ball.weights[i] != f64::INFINITY)
                .map(|i| (n + i, ball.weights[i]))
                .collect();
            constraints.push(Constraint {
                coeffs: row(&budget_row),
                cmp: Cmp::Le,
                rhs: ball.budget,
            });
        }
        NormKind::WeightedLInf => {
            for i in 0..n {
                if ball.weights[i] == f64::INFINITY {
                    continue;
                }
                let slack = ball.budget / ball.weights[i];
                constraints.push(Constraint {
                    coeffs: row(&[(i, 1.0)]),
                    cmp: Cmp::Le,
                    rhs: ball.nominal[i] + slack,
                });
                if ball.nominal[i] - slack > 0.0 {
                    constraints.push(Constraint {
                        coeffs: row(&[(i, 1.0)]),
                        cmp: Cmp::Ge,
                        rhs: ball.nominal[i] - slack,
                    });
                }
            }
        }
    }
    let mut objective = vec![0.0; nvars];
    for i in 0..n {
        objective[i] = sign * z[i];
    }
    match solve(&Problem {
        objective,
        constraints,
    }) {
        Solution::Optimal { value, .. } => sign * value,
        other => panic!("inner LP not optimal: {other:?}"),
    }
}
