//! The S-procedure: aggregation `f^S_lambda = exp(g_lambda) h` of spectral
//! density estimators on `[-pi, pi]`, with weights selected by maximizing
//! the penalized Whittle-type criterion `H^S_n` from a stationary Gaussian
//! sample. The empirical pairing `<l, I_n>` is evaluated in its exact
//! matrix form `(1/n) x^T T_n(l) x`, contracted through the symbol's
//! Fourier coefficients.

use crate::fourier;
use crate::measures::{self, Domain, DomainKind, GridFunction, LogProfile};
use crate::simplex_opt::{self, OptimizerResult, SimplexWeights};
use crate::{Error, Result};

/// A validated bank of spectral density estimators.
#[derive(Debug, Clone)]
pub struct SpectralBank {
    estimators: Vec<GridFunction>,
    profiles: Vec<LogProfile>,
    k_bound: f64,
    r: f64,
    sobolev_bound: f64,
}

impl SpectralBank {
    pub fn new(estimators: Vec<GridFunction>, r: f64, sobolev_bound: f64) -> Result<Self> {
        if estimators.is_empty() {
            return Err(Error::InvalidBank("bank must be non-empty".into()));
        }
        if r <= 0.5 {
            return Err(Error::InvalidBank("r must exceed 1/2".into()));
        }
        let domain = estimators[0].domain();
        if domain.kind() != DomainKind::SymmetricPi {
            return Err(Error::InvalidBank(
                "spectral estimators must live on [-pi, pi]".into(),
            ));
        }
        let k_max = domain.grid_size() / 4;
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
            if !profile.g.is_even(1e-6) {
                return Err(Error::InvalidBank(format!("estimator {k}: g is not even")));
            }
            let s = fourier::sobolev_norm(&profile.g, r, k_max)?;
            if s.norm > sobolev_bound + 1e-6 {
                return Err(Error::InvalidBank(format!(
                    "estimator {k}: ||g||_2,r = {} exceeds the declared bound {}",
                    s.norm, sobolev_bound
                )));
            }
            k_bound = k_bound.max(profile.g.sup_norm());
            profiles.push(profile);
        }
        Ok(Self {
            estimators,
            profiles,
            k_bound,
            r,
            sobolev_bound,
        })
    }

    /// Build a bank from raw even log-ratios: each `g` becomes `exp(g) h`.
    pub fn from_logs(logs: &[GridFunction], r: f64, sobolev_bound: f64) -> Result<Self> {
        let estimators = logs
            .iter()
            .map(|g| {
                let h = g.domain().h_value();
                g.map(|v| v.exp() * h)
            })
            .collect();
        Self::new(estimators, r, sobolev_bound)
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

    /// `K = max_k ||g_k||_inf`.
    pub fn k_bound(&self) -> f64 {
        self.k_bound
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn sobolev_bound(&self) -> f64 {
        self.sobolev_bound
    }
}

/// One realization of a stationary centered Gaussian sequence.
#[derive(Debug, Clone)]
pub struct GaussianPath {
    x: Vec<f64>,
}

impl GaussianPath {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidSample("path must be non-empty".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSample("non-finite path entry".into()));
        }
        Ok(Self { x })
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `gamma_hat_j = (1/n) sum_{i=1}^{n-j} x_i x_{i+j}`.
pub fn empirical_autocov(x: &GaussianPath, j: usize) -> Result<f64> {
    let n = x.len();
    if j >= n {
        return Err(Error::InvalidArgument(format!(
            "empirical_autocov: lag {j} out of range for n = {n}"
        )));
    }
    let v = x.values();
    Ok((0..n - j).map(|i| v[i] * v[i + j]).sum::<f64>() / n as f64)
}

/// Tabulate the periodogram
/// `I_n(x) = gamma_hat_0 / 2pi + (1/pi) sum_j gamma_hat_j cos(jx)`
/// on `domain`, truncated at the grid's anti-aliasing index.
pub fn periodogram_in(x: &GaussianPath, domain: Domain) -> Result<GridFunction> {
    if domain.kind() != DomainKind::SymmetricPi {
        return Err(Error::InvalidArgument(
            "periodogram_in: expected a [-pi, pi] domain".into(),
        ));
    }
    let j_max = (x.len() - 1).min(domain.grid_size() / 4);
    let gammas: Vec<f64> = (0..=j_max)
        .map(|j| empirical_autocov(x, j))
        .collect::<Result<_>>()?;
    let pi = std::f64::consts::PI;
    Ok(GridFunction::from_fn(domain, |y| {
        let mut acc = gammas[0] / (2.0 * pi);
        for (j, &g) in gammas.iter().enumerate().skip(1) {
            acc += g * (j as f64 * y).cos() / pi;
        }
        acc
    }))
}

/// The exact quadratic-form pairing `<l, I_n> = (1/n) x^T T_n(l) x`,
/// contracted through the cosine coefficients of `l`:
/// `c_0 gamma_hat_0 + 2 sum_{j>=1} c_j gamma_hat_j`.
pub fn pairing_in(l: &GridFunction, x: &GaussianPath) -> Result<f64> {
    if l.domain().kind() != DomainKind::SymmetricPi {
        return Err(Error::InvalidArgument(
            "pairing_in: expected a [-pi, pi] symbol".into(),
        ));
    }
    let j_max = (x.len() - 1).min(l.domain().grid_size() / 4);
    let mut acc = fourier::cosine_coefficient(l, 0) * empirical_autocov(x, 0)?;
    for j in 1..=j_max {
        acc += 2.0 * fourier::cosine_coefficient(l, j) * empirical_autocov(x, j)?;
    }
    Ok(acc)
}

fn combine_g(lambda: &[f64], bank: &SpectralBank) -> GridFunction {
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
}

/// `g_lambda = sum_k lambda_k g_k`.
pub fn g_lambda(lambda: &SimplexWeights, bank: &SpectralBank) -> GridFunction {
    assert_eq!(lambda.len(), bank.len());
    combine_g(lambda.as_slice(), bank)
}

/// The S-aggregate `f^S_lambda = exp(g_lambda) h`.
pub fn f_s_lambda(lambda: &SimplexWeights, bank: &SpectralBank) -> GridFunction {
    let h = bank.domain().h_value();
    g_lambda(lambda, bank).map(|v| v.exp() * h)
}

/// `m_lambda = \int exp(g_lambda) h`.
pub fn m_lambda_s(lambda: &SimplexWeights, bank: &SpectralBank) -> f64 {
    measures::integrate_against_h(&g_lambda(lambda, bank).map(f64::exp))
}

/// `pen^S(lambda) = sum_k lambda_k m_k - m_lambda`.
pub fn pen_s(lambda: &SimplexWeights, bank: &SpectralBank) -> f64 {
    let mix: f64 = lambda
        .as_slice()
        .iter()
        .enumerate()
        .map(|(k, &w)| w * bank.profile(k).m)
        .sum();
    mix - m_lambda_s(lambda, bank)
}

/// `H^S_n(lambda) = <g_lambda, I_n> - m_lambda/2 - (sum_k lambda_k m_k)/2`.
pub fn criterion_hs(
    lambda: &SimplexWeights,
    bank: &SpectralBank,
    x: &GaussianPath,
) -> Result<f64> {
    let p: Vec<f64> = (0..bank.len())
        .map(|k| pairing_in(&bank.profile(k).g, x))
        .collect::<Result<_>>()?;
    Ok(hs_from_cache(lambda.as_slice(), bank, &p))
}

fn hs_from_cache(lambda: &[f64], bank: &SpectralBank, p: &[f64]) -> f64 {
    let mut pairing = 0.0;
    let mut m_mix = 0.0;
    for (k, &w) in lambda.iter().enumerate() {
        pairing += w * p[k];
        m_mix += w * bank.profile(k).m;
    }
    let m_lam = measures::integrate_against_h(&combine_g(lambda, bank).map(f64::exp));
    pairing - 0.5 * m_lam - 0.5 * m_mix
}

/// Gradient of `H^S_n`:
/// `d_k = <g_k, I_n> - (\int g_k f^S_lambda)/2 - m_k/2`.
pub fn criterion_hs_gradient(
    lambda: &SimplexWeights,
    bank: &SpectralBank,
    x: &GaussianPath,
) -> Result<Vec<f64>> {
    let p: Vec<f64> = (0..bank.len())
        .map(|k| pairing_in(&bank.profile(k).g, x))
        .collect::<Result<_>>()?;
    Ok(hs_gradient_from_cache(lambda.as_slice(), bank, &p))
}

fn hs_gradient_from_cache(lambda: &[f64], bank: &SpectralBank, p: &[f64]) -> Vec<f64> {
    let h = bank.domain().h_value();
    let f_lam = combine_g(lambda, bank).map(|v| v.exp() * h);
    (0..bank.len())
        .map(|k| {
            let inner = measures::integrate(&bank.profile(k).g.zip_map(&f_lam, |a, b| a * b));
            p[k] - 0.5 * inner - 0.5 * bank.profile(k).m
        })
        .collect()
}

/// Run the S-procedure: maximize `H^S_n` and return the selected weights
/// and the aggregate spectral density.
pub fn aggregate_spectral(
    bank: &SpectralBank,
    x: &GaussianPath,
    tol: f64,
) -> Result<(SimplexWeights, GridFunction)> {
    let p: Vec<f64> = (0..bank.len())
        .map(|k| pairing_in(&bank.profile(k).g, x))
        .collect::<Result<_>>()?;
    let result: OptimizerResult = simplex_opt::maximize_on_simplex(
        |l| hs_from_cache(l, bank, &p),
        |l| hs_gradient_from_cache(l, bank, &p),
        bank.len(),
        tol,
        5000,
    )?;
    if !result.converged {
        return Err(Error::NonConvergence(Box::new(result)));
    }
    let f_hat = f_s_lambda(&result.weights, bank);
    Ok((result.weights, f_hat))
}

/// Expected periodogram `f_bar_n(x) = sum_{|j|<n} (1 - |j|/n) (gamma_j/2pi)
/// cos(jx)` of an even spectral density, from its true covariances.
pub fn expected_periodogram(f_true: &GridFunction, n: usize) -> Result<GridFunction> {
    let domain = f_true.domain();
    let j_max = (n - 1).min(domain.grid_size() / 4);
    // gamma_j = \int f cos(jx) dx = 2 pi a_j for even f
    let gammas: Vec<f64> = (0..=j_max)
        .map(|j| 2.0 * std::f64::consts::PI * fourier::cosine_coefficient(f_true, j))
        .collect();
    let pi = std::f64::consts::PI;
    Ok(GridFunction::from_fn(domain, |y| {
        let mut acc = gammas[0] / (2.0 * pi);
        for (j, &g) in gammas.iter().enumerate().skip(1) {
            acc += (1.0 - j as f64 / n as f64) * g * (j as f64 * y).cos() / pi;
        }
        acc
    }))
}

/// Bias functional `B_n(g_lambda - g_{k*}) = <g_lambda - g_{k*},
/// f_bar_n - f>`, computed from the true covariances of `f_true`.
pub fn bias_diagnostic(
    bank: &SpectralBank,
    f_true: &GridFunction,
    lambda: &SimplexWeights,
    k_star: usize,
    n: usize,
) -> Result<f64> {
    if f_true.domain() != bank.domain() {
        return Err(Error::InvalidArgument(
            "bias_diagnostic: truth must share the bank's grid".into(),
        ));
    }
    let ell = g_lambda(lambda, bank).zip_map(&bank.profile(k_star).g, |a, b| a - b);
    let f_bar = expected_periodogram(f_true, n)?;
    let diff = f_bar.zip_map(f_true, |a, b| a - b);
    Ok(measures::integrate(&ell.zip_map(&diff, |a, b| a * b)))
}
