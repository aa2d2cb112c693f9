//! Concave maximization over the probability simplex with a Frank-Wolfe
//! gap certificate.
//!
//! The solver is Frank-Wolfe with away steps and exact line search on each
//! segment. Iterates stay feasible by construction and the reported gap
//! `max_k d_k H(lambda) - lambda . grad H(lambda)` upper-bounds the
//! suboptimality of the returned point whenever the objective is concave.

use crate::{Error, Result};

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SimplexWeights {
    lambda: Vec<f64>,
}

impl SimplexWeights {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidArgument(
                "SimplexWeights: empty weight vector".into(),
            ));
        }
        if lambda.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvalidArgument(
                "SimplexWeights: entries must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = lambda.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "SimplexWeights: entries sum to {sum}, expected 1"
            )));
        }
        Ok(Self { lambda })
    }

    pub fn vertex(n: usize, k: usize) -> Self {
        assert!(k < n);
        let mut lambda = vec![0.0; n];
        lambda[k] = 1.0;
        Self { lambda }
    }

    pub fn barycenter(n: usize) -> Self {
        assert!(n >= 1);
        Self {
            lambda: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambda
    }
}

/// Outcome of a simplex maximization.
#[derive(Debug, Clone)]
pub struct OptimizerResult {
    pub weights: SimplexWeights,
    pub objective: f64,
    pub fw_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn renormalize(lambda: &mut [f64]) {
    for v in lambda.iter_mut() {
        if *v < 1e-15 {
            *v = 0.0;
        }
    }
    let sum: f64 = lambda.iter().sum();
    for v in lambda.iter_mut() {
        *v /= sum;
    }
}

/// Maximize a concave differentiable objective over the simplex of
/// dimension `n`. Stops once the Frank-Wolfe gap drops below `tol`;
/// on budget exhaustion the best iterate is returned with
/// `converged = false`.
pub fn maximize_on_simplex<F, G>(
    objective: F,
    gradient: G,
    n: usize,
    tol: f64,
    max_iter: usize,
) -> Result<OptimizerResult>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    if n == 0 {
        return Err(Error::InvalidArgument(
            "maximize_on_simplex: N must be >= 1".into(),
        ));
    }
    if n == 1 {
        let weights = SimplexWeights::vertex(1, 0);
        let objective = objective(weights.as_slice());
        return Ok(OptimizerResult {
            weights,
            objective,
            fw_gap: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    let mut lambda = vec![1.0 / n as f64; n];
    let mut iterations = 0;
    let mut fw_gap = f64::INFINITY;

    while iterations < max_iter {
        let grad = gradient(&lambda);
        let base = dot(&grad, &lambda);

        let mut s = 0;
        for k in 1..n {
            if grad[k] > grad[s] {
                s = k;
            }
        }
        fw_gap = grad[s] - base;
        if fw_gap <= tol {
            break;
        }

        // away vertex: worst active coordinate
        let mut v = None;
        for k in 0..n {
            if lambda[k] > 0.0 && v.map_or(true, |j: usize| grad[k] < grad[j]) {
                v = Some(k);
            }
        }
        let v = v.expect("simplex point has an active coordinate");
        let away_improvement = base - grad[v];

        // direction d and its step cap
        let (dir_vertex, toward, gamma_max) = if fw_gap >= away_improvement {
            (s, true, 1.0)
        } else {
            (v, false, lambda[v] / (1.0 - lambda[v]))
        };

        let step_point = |gamma: f64, out: &mut Vec<f64>| {
            out.clear();
            out.extend(lambda.iter().map(|&l| {
                if toward {
                    (1.0 - gamma) * l
                } else {
                    (1.0 + gamma) * l
                }
            }));
            if toward {
                out[dir_vertex] += gamma;
            } else {
                out[dir_vertex] -= gamma;
                if out[dir_vertex] < 0.0 {
                    out[dir_vertex] = 0.0;
                }
            }
        };

        // exact line search: bisect on the directional derivative
        let mut scratch = Vec::with_capacity(n);
        let dir_deriv = |gamma: f64, scratch: &mut Vec<f64>| {
            step_point(gamma, scratch);
            let g = gradient(scratch);
            let mut d = 0.0;
            for k in 0..n {
                let dk = if toward {
                    (if k == dir_vertex { 1.0 } else { 0.0 }) - lambda[k]
                } else {
                    lambda[k] - (if k == dir_vertex { 1.0 } else { 0.0 })
                };
                d += g[k] * dk;
            }
            d
        };

        let gamma = if dir_deriv(gamma_max, &mut scratch) >= 0.0 {
            gamma_max
        } else {
            let (mut lo, mut hi) = (0.0, gamma_max);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if dir_deriv(mid, &mut scratch) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };

        step_point(gamma, &mut scratch);
        lambda = scratch;
        renormalize(&mut lambda);
        iterations += 1;
    }

    let converged = fw_gap <= tol;
    let weights = SimplexWeights::new(lambda)?;
    let objective = objective(weights.as_slice());
    Ok(OptimizerResult {
        weights,
        objective,
        fw_gap: fw_gap.max(0.0),
        iterations,
        converged,
    })
}

/// Maximum discrepancy between analytic and central finite-difference
/// directional derivatives along the feasible directions `e_j - e_i`.
pub fn gradient_check<F, G>(
    objective: F,
    gradient: G,
    lambda: &SimplexWeights,
    h_step: f64,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let l = lambda.as_slice();
    if l.iter().any(|&v| v < h_step) {
        return Err(Error::Precondition(
            "gradient_check: point must be interior (entries >= h_step)".into(),
        ));
    }
    let grad = gradient(l);
    let mut worst: f64 = 0.0;
    for i in 0..l.len() {
        for j in 0..l.len() {
            if i == j {
                continue;
            }
            let mut plus = l.to_vec();
            plus[j] += h_step;
            plus[i] -= h_step;
            let mut minus = l.to_vec();
            minus[j] -= h_step;
            minus[i] += h_step;
            let fd = (objective(&plus) - objective(&minus)) / (2.0 * h_step);
            worst = worst.max((fd - (grad[j] - grad[i])).abs());
        }
    }
    Ok(worst)
}
