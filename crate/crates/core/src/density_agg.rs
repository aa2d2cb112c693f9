//! The D-procedure: mass-conserving aggregation `f^D_lambda =
//! exp(t_lambda - psi_lambda) h` of density estimators, with weights chosen
//! by maximizing the penalized empirical criterion `H^D_n` over the simplex.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::measures::{
    self, Domain, GridFunction, LogProfile,
};
use crate::simplex_opt::{self, OptimizerResult, SimplexWeights};
use crate::{Error, Result};

/// Exponentially tilt the reference density: `exp(u) h / \int exp(u) h`.
/// Always a valid probability density for finite `u`.
pub fn tilt_density(u: &GridFunction) -> GridFunction {
    let h = u.domain().h_value();
    let unnorm = u.map(|v| v.exp() * h);
    let mass = measures::integrate(&unnorm);
    unnorm.map(|v| v / mass)
}

/// A validated bank of density estimators with their log-profiles.
#[derive(Debug, Clone)]
pub struct DensityBank {
    estimators: Vec<GridFunction>,
    profiles: Vec<LogProfile>,
    k_bound: f64,
}

impl DensityBank {
    pub fn new(estimators: Vec<GridFunction>) -> Result<Self> {
        if estimators.is_empty() {
            return Err(Error::InvalidBank("bank must be non-empty".into()));
        }
        let domain = estimators[0].domain();
        let mut profiles = Vec::with_capacity(estimators.len());
        let mut k_bound: f64 = 0.0;
        for (k, f) in estimators.iter().enumerate() {
            if f.domain() != domain {
                return Err(Error::InvalidBank(format!(
                    "estimator {k} lives on a different grid"
                )));
            }
            if !f.is_strictly_positive() {
                return Err(Error::InvalidBank(format!(
                    "estimator {k} is not strictly positive"
                )));
            }
            let profile = measures::log_decompose(f)?;
            if (profile.m - 1.0).abs() > 1e-8 {
                return Err(Error::InvalidBank(format!(
                    "estimator {k} has mass {}, expected 1",
                    profile.m
                )));
            }
            if profile.psi < -1e-9 {
                return Err(Error::InvalidBank(format!(
                    "estimator {k} has negative psi = {}",
                    profile.psi
                )));
            }
            k_bound = k_bound.max(profile.t.sup_norm());
            profiles.push(profile);
        }
        Ok(Self {
            estimators,
            profiles,
            k_bound,
        })
    }

    /// Build a bank from raw log-tilts: each `u` becomes the density
    /// `exp(u) h / \int exp(u) h`.
    pub fn from_tilts(tilts: &[GridFunction]) -> Result<Self> {
        Self::new(tilts.iter().map(tilt_density).collect())
    }

    pub fn len(&self) -> usize {
        self.estimators.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn domain(&self) -> Domain {
        self.estimators[0].domain()
    }

    pub fn estimator(&self, k: usize) -> &GridFunction {
        &self.estimators[k]
    }

    pub fn profile(&self, k: usize) -> &LogProfile {
        &self.profiles[k]
    }

    /// `K = max_k ||t_k||_inf`.
    pub fn k_bound(&self) -> f64 {
        self.k_bound
    }

    /// Smallest eigenvalue of the Gram matrix `(<t_j, t_k>_{L2(h)})`,
    /// a linear-independence diagnostic (zero means tied estimators).
    pub fn gram_min_eigenvalue(&self) -> f64 {
        let n = self.len();
        let gram = DMatrix::from_fn(n, n, |j, k| {
            let prod = self.profiles[j].t.zip_map(&self.profiles[k].t, |a, b| a * b);
            measures::integrate_against_h(&prod)
        });
        SymmetricEigen::new(gram)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

/// An i.i.d. sample from a density on the bank's domain.
#[derive(Debug, Clone)]
pub struct IidSample {
    domain: Domain,
    points: Vec<f64>,
}

impl IidSample {
    pub fn new(domain: Domain, points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidSample("sample must be non-empty".into()));
        }
        if let Some(&bad) = points.iter().find(|&&x| !domain.contains(x) || !x.is_finite()) {
            return Err(Error::InvalidSample(format!(
                "sample point {bad} outside the domain"
            )));
        }
        Ok(Self { domain, points })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `<p, I_n> = (1/n) sum_i p(X_i)`, evaluated by linear interpolation.
    pub fn pair(&self, p: &GridFunction) -> f64 {
        self.points.iter().map(|&x| p.interp(x)).sum::<f64>() / self.points.len() as f64
    }
}

/// `t_lambda = sum_k lambda_k t_k`.
pub fn t_lambda(lambda: &SimplexWeights, bank: &DensityBank) -> GridFunction {
    assert_eq!(lambda.len(), bank.len());
    let m = bank.domain().grid_size() + 1;
    let mut values = vec![0.0; m];
    for (k, &w) in lambda.as_slice().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (acc, &v) in values.iter_mut().zip(bank.profile(k).t.values()) {
            *acc += w * v;
        }
    }
    GridFunction::from_values(bank.domain(), values).expect("finite combination")
}

/// `psi_lambda = log \int exp(t_lambda) h`.
pub fn psi_lambda(lambda: &SimplexWeights, bank: &DensityBank) -> f64 {
    psi_of_t(&t_lambda(lambda, bank))
}

fn psi_of_t(t: &GridFunction) -> f64 {
    measures::integrate_against_h(&t.map(f64::exp)).ln()
}

/// The D-aggregate `f^D_lambda = exp(t_lambda - psi_lambda) h`.
pub fn f_d_lambda(lambda: &SimplexWeights, bank: &DensityBank) -> GridFunction {
    let t = t_lambda(lambda, bank);
    let psi = psi_of_t(&t);
    let h = bank.domain().h_value();
    t.map(|v| (v - psi).exp() * h)
}

/// `pen^D(lambda) = sum_k lambda_k psi_k - psi_lambda`; non-negative by
/// convexity of `psi`.
pub fn pen_d(lambda: &SimplexWeights, bank: &DensityBank) -> f64 {
    let mix: f64 = lambda
        .as_slice()
        .iter()
        .enumerate()
        .map(|(k, &w)| w * bank.profile(k).psi)
        .sum();
    mix - psi_lambda(lambda, bank)
}

/// `H^D_n(lambda) = <t_lambda, I_n> - psi_lambda - pen^D(lambda)/2`.
pub fn criterion_hd(lambda: &SimplexWeights, bank: &DensityBank, sample: &IidSample) -> f64 {
    let s: Vec<f64> = (0..bank.len()).map(|k| sample.pair(&bank.profile(k).t)).collect();
    hd_from_cache(lambda.as_slice(), bank, &s).0
}

/// Gradient of `H^D_n`:
/// `d_k = <t_k, I_n> - <t_k, f^D_lambda>/2 - psi_k/2`.
pub fn criterion_hd_gradient(
    lambda: &SimplexWeights,
    bank: &DensityBank,
    sample: &IidSample,
) -> Vec<f64> {
    let s: Vec<f64> = (0..bank.len()).map(|k| sample.pair(&bank.profile(k).t)).collect();
    hd_gradient_from_cache(lambda.as_slice(), bank, &s)
}

/// `(H^D_n(lambda), psi_lambda)` from precomputed sample means
/// `s_k = <t_k, I_n>`.
fn hd_from_cache(lambda: &[f64], bank: &DensityBank, s: &[f64]) -> (f64, f64) {
    let mut pairing = 0.0;
    let mut psi_mix = 0.0;
    for (k, &w) in lambda.iter().enumerate() {
        pairing += w * s[k];
        psi_mix += w * bank.profile(k).psi;
    }
    let psi = psi_of_t(&combine_t(lambda, bank));
    (pairing - 0.5 * psi - 0.5 * psi_mix, psi)
}

fn combine_t(lambda: &[f64], bank: &DensityBank) -> GridFunction {
    let m = bank.domain().grid_size() + 1;
    let mut values = vec![0.0; m];
    for (k, &w) in lambda.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (acc, &v) in values.iter_mut().zip(bank.profile(k).t.values()) {
            *acc += w * v;
        }
    }
    GridFunction::from_values(bank.domain(), values).expect("finite combination")
}

fn hd_gradient_from_cache(lambda: &[f64], bank: &DensityBank, s: &[f64]) -> Vec<f64> {
    let t = combine_t(lambda, bank);
    let psi = psi_of_t(&t);
    let h = bank.domain().h_value();
    let f_lam = t.map(|v| (v - psi).exp() * h);
    (0..bank.len())
        .map(|k| {
            let inner = measures::integrate(&bank.profile(k).t.zip_map(&f_lam, |a, b| a * b));
            s[k] - 0.5 * inner - 0.5 * bank.profile(k).psi
        })
        .collect()
}

fn run_optimizer<F, G>(objective: F, gradient: G, n: usize, tol: f64) -> Result<OptimizerResult>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let result = simplex_opt::maximize_on_simplex(objective, gradient, n, tol, 5000)?;
    if !result.converged {
        return Err(Error::NonConvergence(Box::new(result)));
    }
    Ok(result)
}

/// Run the D-procedure: maximize `H^D_n` and return the selected weights
/// and the aggregate density.
pub fn aggregate_density(
    bank: &DensityBank,
    sample: &IidSample,
    tol: f64,
) -> Result<(SimplexWeights, GridFunction)> {
    let s: Vec<f64> = (0..bank.len()).map(|k| sample.pair(&bank.profile(k).t)).collect();
    let result = run_optimizer(
        |l| hd_from_cache(l, bank, &s).0,
        |l| hd_gradient_from_cache(l, bank, &s),
        bank.len(),
        tol,
    )?;
    let f_hat = f_d_lambda(&result.weights, bank);
    Ok((result.weights, f_hat))
}

/// The S-criterion driven by the i.i.d. pairing `<g_lambda, I_n> =
/// (1/n) sum g_lambda(X_i)`, with the result renormalized to unit mass.
/// Generally selects different weights than the D-procedure.
pub fn normalized_s_aggregate(
    bank: &DensityBank,
    sample: &IidSample,
    tol: f64,
) -> Result<(SimplexWeights, GridFunction)> {
    let u: Vec<f64> = (0..bank.len()).map(|k| sample.pair(&bank.profile(k).g)).collect();
    let h = bank.domain().h_value();
    let combine_g = |lambda: &[f64]| -> GridFunction {
        let m = bank.domain().grid_size() + 1;
        let mut values = vec![0.0; m];
        for (k, &w) in lambda.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (acc, &v) in values.iter_mut().zip(bank.profile(k).g.values()) {
                *acc += w * v;
            }
        }
        GridFunction::from_values(bank.domain(), values).expect("finite combination")
    };
    let objective = |l: &[f64]| -> f64 {
        let g = combine_g(l);
        let m_lam = measures::integrate_against_h(&g.map(f64::exp));
        let mut pairing = 0.0;
        let mut m_mix = 0.0;
        for (k, &w) in l.iter().enumerate() {
            pairing += w * u[k];
            m_mix += w * bank.profile(k).m;
        }
        pairing - 0.5 * m_lam - 0.5 * m_mix
    };
    let gradient = |l: &[f64]| -> Vec<f64> {
        let g = combine_g(l);
        let f_lam = g.map(|v| v.exp() * h);
        (0..bank.len())
            .map(|k| {
                let inner = measures::integrate(&bank.profile(k).g.zip_map(&f_lam, |a, b| a * b));
                u[k] - 0.5 * inner - 0.5 * bank.profile(k).m
            })
            .collect()
    };
    let result = run_optimizer(objective, gradient, bank.len(), tol)?;
    let g_hat = combine_g(result.weights.as_slice());
    let f_s = g_hat.map(|v| v.exp() * h);
    let mass = measures::integrate(&f_s);
    Ok((result.weights, f_s.map(|v| v / mass)))
}
