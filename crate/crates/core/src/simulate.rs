//! Samplers and lower-bound hypercube families.
//!
//! Sampling covers i.i.d. draws from a tabulated density (inversion of the
//! piecewise-linear CDF) and stationary Gaussian paths (dense Cholesky of
//! the covariance `2 pi T_n(f)`). The hypercube builders construct the two
//! codeword-indexed perturbation families whose Hellinger-separation and
//! KL-budget certificates back the minimax lower bounds.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::density_agg::IidSample;
use crate::fourier;
use crate::measures::{self, Domain, GridFunction};
use crate::spectral_agg::GaussianPath;
use crate::{Error, Result};

/// Seed plus replicate stream; identical specs reproduce identical output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Draw `n` i.i.d. points from a tabulated density by inverting its
/// piecewise-linear CDF.
pub fn sample_iid(f: &GridFunction, n: usize, spec: RngSpec) -> Result<IidSample> {
    if !f.is_nonnegative() {
        return Err(Error::InvalidArgument(
            "sample_iid: density must be non-negative".into(),
        ));
    }
    let domain = f.domain();
    let m = domain.grid_size();
    let step = domain.step();
    // trapezoid cumulative, normalized to a proper CDF
    let mut cdf = Vec::with_capacity(m + 1);
    cdf.push(0.0);
    for i in 0..m {
        let inc = 0.5 * (f.values()[i] + f.values()[i + 1]) * step;
        cdf.push(cdf[i] + inc);
    }
    let total = cdf[m];
    if total <= 0.0 {
        return Err(Error::InvalidArgument("sample_iid: zero total mass".into()));
    }
    for c in cdf.iter_mut() {
        *c /= total;
    }

    let mut rng = spec.rng();
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let i = cdf.partition_point(|&c| c <= u).saturating_sub(1).min(m - 1);
        let w = cdf[i + 1] - cdf[i];
        let frac = if w > 0.0 { (u - cdf[i]) / w } else { 0.5 };
        points.push(domain.node(i) + frac * step);
    }
    IidSample::new(domain, points)
}

/// Stationary Gaussian sampler with a cached Cholesky factor of
/// `2 pi T_n(f)`; reuse it across replicates.
#[derive(Debug, Clone)]
pub struct GaussianProcessSampler {
    chol: DMatrix<f64>,
}

impl GaussianProcessSampler {
    pub fn new(f: &GridFunction, n: usize) -> Result<Self> {
        if n == 0 || n > 4096 {
            return Err(Error::InvalidArgument(format!(
                "GaussianProcessSampler: path length {n} outside 1..=4096"
            )));
        }
        // boundary zeros are fine: the Toeplitz matrix of a nonnegative,
        // non-degenerate symbol is still positive definite, and the
        // Cholesky factorization below rejects anything that is not
        if !f.is_nonnegative() {
            return Err(Error::InvalidArgument(
                "GaussianProcessSampler: spectral density must be nonnegative".into(),
            ));
        }
        if !f.is_even(1e-9) {
            return Err(Error::InvalidArgument(
                "GaussianProcessSampler: spectral density must be even".into(),
            ));
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let sigma = fourier::toeplitz_build(&f.map(|v| two_pi * v), n)?;
        let chol = sigma.cholesky_factor()?;
        Ok(Self { chol })
    }

    pub fn n(&self) -> usize {
        self.chol.nrows()
    }

    pub fn sample(&self, spec: RngSpec) -> GaussianPath {
        let mut rng = spec.rng();
        let n = self.chol.nrows();
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &self.chol * z;
        GaussianPath::new(x.iter().cloned().collect()).expect("finite Gaussian draw")
    }
}

/// One-shot convenience wrapper around [`GaussianProcessSampler`].
pub fn sample_gaussian_path(f: &GridFunction, n: usize, spec: RngSpec) -> Result<GaussianPath> {
    Ok(GaussianProcessSampler::new(f, n)?.sample(spec))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum HypercubeKind {
    Density,
    Spectral,
}

/// A codeword-indexed perturbation family with separation certificates.
#[derive(Debug, Clone)]
pub struct HypercubeFamily {
    pub kind: HypercubeKind,
    /// Hypercube dimension: smallest `D` with `2^{D/8} >= N`.
    pub d: usize,
    /// `T` for the density family, `s` for the spectral family.
    pub amplitude: f64,
    pub codewords: Vec<Vec<u8>>,
    pub members: Vec<GridFunction>,
    pub n: usize,
    pub x_dev: f64,
    /// Which Sobolev-membership branch fired (spectral only).
    pub branch: Option<String>,
}

fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn smallest_hypercube_dim(n_members: usize) -> usize {
    let mut d = 1;
    while (d as f64 / 8.0).exp2() < n_members as f64 {
        d += 1;
    }
    d
}

impl HypercubeFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn beta_prime(&self) -> f64 {
        match self.kind {
            HypercubeKind::Density => 2f64.powf(-17.0 / 2.0) / 3.0,
            HypercubeKind::Spectral => 8f64.powf(-5.0 / 2.0) / 3.0,
        }
    }

    fn log_n_plus_x(&self) -> f64 {
        (self.len() as f64).ln() + self.x_dev
    }

    /// Required pairwise separation `4 beta' (log N + x) / n`.
    pub fn hellinger_threshold(&self) -> f64 {
        4.0 * self.beta_prime() * self.log_n_plus_x() / self.n as f64
    }

    /// KL budget `(log N + x) / 3` for the n-sample distributions.
    pub fn kl_budget(&self) -> f64 {
        self.log_n_plus_x() / 3.0
    }

    /// Squared Hellinger distance between members `i` and `j`. For the
    /// piecewise-constant density family this is evaluated in closed form
    /// (grid quadrature would smear the jumps); the smooth spectral family
    /// uses Simpson quadrature.
    pub fn pairwise_hellinger_sq(&self, i: usize, j: usize) -> f64 {
        match self.kind {
            HypercubeKind::Density => {
                let sigma = hamming(&self.codewords[i], &self.codewords[j]) as f64;
                let u = self.amplitude / self.d as f64;
                let a = ((1.0 + u).sqrt() - 1.0).powi(2) + ((1.0 - u).sqrt() - 1.0).powi(2);
                sigma * a / (2.0 * self.d as f64)
            }
            HypercubeKind::Spectral => measures::hellinger_sq(&self.members[i], &self.members[j]),
        }
    }

    /// KL divergence of member `i`'s n-sample distribution from the
    /// reference member's. Density: `n KL(f_i || f_1)` in closed form.
    /// Spectral: the Gaussian bound `(n/2) ||2 pi f_i - 1||^2_{L2(h)}`,
    /// which dominates `-log det(T_n(2 pi f_i)) / 2`.
    pub fn kl_to_reference(&self, i: usize) -> f64 {
        match self.kind {
            HypercubeKind::Density => {
                let w = self.codewords[i].iter().filter(|&&b| b == 1).count() as f64;
                let u = self.amplitude / self.d as f64;
                let b = (1.0 + u) * (1.0 + u).ln() + (1.0 - u) * (1.0 - u).ln();
                self.n as f64 * w * b / (2.0 * self.d as f64)
            }
            HypercubeKind::Spectral => {
                let two_pi = 2.0 * std::f64::consts::PI;
                let centered = self.members[i].map(|v| two_pi * v - 1.0);
                0.5 * self.n as f64 * measures::l2h_norm_sq(&centered)
            }
        }
    }

    /// For a spectral member, the exact Gaussian KL `-log det / 2` at a
    /// (possibly capped) path length, together with its lemma bound
    /// `n_check ||2 pi f - 1||^2_{L2(h)} / 2`. The exact value must not
    /// exceed the bound.
    pub fn gaussian_kl_check(&self, i: usize, n_check: usize) -> Result<(f64, f64)> {
        if self.kind != HypercubeKind::Spectral {
            return Err(Error::InvalidArgument(
                "gaussian_kl_check applies to spectral families".into(),
            ));
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let symbol = self.members[i].map(|v| two_pi * v);
        let (logdet, bound) = fourier::toeplitz_logdet_bound_check(&symbol, n_check)?;
        Ok((-0.5 * logdet, -0.5 * bound))
    }
}

/// Select `n_words` binary codewords of length `d` with pairwise Hamming
/// distance at least `ceil(d/4)`, the first being all zeros. Exhaustive
/// greedy scan for `d <= 16`, randomized greedy beyond.
pub fn select_codewords(d: usize, n_words: usize, spec: RngSpec) -> Result<Vec<Vec<u8>>> {
    if (d as f64 / 8.0).exp2() < n_words as f64 {
        return Err(Error::CodewordSearch(format!(
            "2^(d/8) = 2^({d}/8) < {n_words} requested words"
        )));
    }
    let min_dist = d.div_ceil(4);
    let mut chosen: Vec<Vec<u8>> = vec![vec![0; d]];
    let admissible =
        |cand: &[u8], chosen: &[Vec<u8>]| chosen.iter().all(|c| hamming(c, cand) >= min_dist);

    if d <= 16 {
        for v in 1u64..(1u64 << d) {
            if chosen.len() == n_words {
                break;
            }
            let cand: Vec<u8> = (0..d).map(|b| ((v >> b) & 1) as u8).collect();
            if admissible(&cand, &chosen) {
                chosen.push(cand);
            }
        }
    } else {
        let mut rng = spec.rng();
        let mut attempts = 0usize;
        while chosen.len() < n_words {
            attempts += 1;
            if attempts > 200_000 {
                return Err(Error::CodewordSearch(format!(
                    "no admissible word after {attempts} attempts (found {})",
                    chosen.len()
                )));
            }
            let cand: Vec<u8> = (0..d).map(|_| rng.random_range(0..2u8)).collect();
            if admissible(&cand, &chosen) {
                chosen.push(cand);
            }
        }
    }
    if chosen.len() < n_words {
        return Err(Error::CodewordSearch(format!(
            "exhaustive scan found only {} of {n_words} words",
            chosen.len()
        )));
    }
    Ok(chosen)
}

/// Build the density lower-bound family on `[0, 1]`: `f^delta(y) = 1 +
/// sum_j delta_j alpha_j(y)` with blockwise `+-T/D` square bumps and
/// `T = D sqrt((log N + x) / 3n)`.
pub fn build_density_hypercube(
    n_members: usize,
    l: f64,
    n: usize,
    x: f64,
    spec: RngSpec,
) -> Result<HypercubeFamily> {
    if n_members < 2 {
        return Err(Error::InvalidArgument("need at least 2 members".into()));
    }
    let log_term = (n_members as f64).ln() + x;
    let gap = 1.0 - (-l).exp();
    if log_term / n as f64 >= 3.0 * gap * gap {
        return Err(Error::Precondition(format!(
            "(log N + x)/n = {} is not below 3(1 - e^-L)^2 = {}",
            log_term / n as f64,
            3.0 * gap * gap
        )));
    }
    let d = smallest_hypercube_dim(n_members);
    let t_amp = d as f64 * (log_term / (3.0 * n as f64)).sqrt();
    let u = t_amp / d as f64;
    let codewords = select_codewords(d, n_members, spec)?;

    // jumps must land on Simpson panel boundaries: grid a multiple of 4D
    let grid = 4 * d * (512usize).div_ceil(4 * d);
    let domain = Domain::unit(grid)?;
    let cells_per_half = grid / (2 * d);
    let members = codewords
        .iter()
        .map(|delta| {
            // value of the bump on half-block k2 (0..2D)
            let half_value = |k2: usize| -> f64 {
                let block = k2 / 2;
                let sign = if k2 % 2 == 0 { 1.0 } else { -1.0 };
                sign * u * delta[block] as f64
            };
            let values = (0..=grid)
                .map(|i| {
                    let k2 = i / cells_per_half;
                    if i % cells_per_half != 0 {
                        1.0 + half_value(k2)
                    } else if i == 0 {
                        1.0 + half_value(0)
                    } else if i == grid {
                        1.0 + half_value(2 * d - 1)
                    } else {
                        // jump node: average of the two one-sided limits
                        1.0 + 0.5 * (half_value(k2 - 1) + half_value(k2))
                    }
                })
                .collect();
            GridFunction::from_values(domain, values)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(HypercubeFamily {
        kind: HypercubeKind::Density,
        d,
        amplitude: t_amp,
        codewords,
        members,
        n,
        x_dev: x,
        branch: None,
    })
}

/// `zeta(x) = exp(-1 / (x (pi/2 - x)))` on `(0, pi/2)`, zero outside.
pub fn zeta_bump(x: f64) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    if x <= 0.0 || x >= half_pi {
        0.0
    } else {
        (-1.0 / (x * (half_pi - x))).exp()
    }
}

/// The mean-zero bump on `[0, pi]`: `zeta` on the first half, its negated
/// copy on the second half. `||phi||_inf = exp(-16/pi^2)`, `int phi = 0`.
pub fn phi_bump(x: f64) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    if x <= half_pi {
        zeta_bump(x)
    } else {
        -zeta_bump(x - half_pi)
    }
}

/// `\int_0^pi phi^2`, by Simpson at the requested resolution.
pub fn phi_sq_integral(cells: usize) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let h = half_pi / cells as f64;
    let mut acc = 0.0;
    for i in 1..cells {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        let z = zeta_bump(i as f64 * h);
        acc += w * z * z;
    }
    2.0 * acc * h / 3.0
}

/// Sup norm of the p-th derivative of `phi` (equivalently of `zeta`),
/// by central finite differences on a fine scan of `(0, pi/2)`.
pub fn phi_derivative_sup(p: usize) -> Result<f64> {
    if p == 0 {
        return Ok((-16.0 / std::f64::consts::PI.powi(2)).exp());
    }
    if p > 4 {
        return Err(Error::InvalidArgument(
            "phi_derivative_sup: derivatives up to order 4 are supported".into(),
        ));
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    let h = 1e-3;
    let stencil = |x: f64| -> f64 {
        let f = |k: f64| zeta_bump(x + k * h);
        match p {
            1 => (f(1.0) - f(-1.0)) / (2.0 * h),
            2 => (f(1.0) - 2.0 * f(0.0) + f(-1.0)) / (h * h),
            3 => (f(2.0) - 2.0 * f(1.0) + 2.0 * f(-1.0) - f(-2.0)) / (2.0 * h.powi(3)),
            _ => (f(2.0) - 4.0 * f(1.0) + 6.0 * f(0.0) - 4.0 * f(-1.0) + f(-2.0)) / h.powi(4),
        }
    };
    let scan = 8000;
    let mut sup: f64 = 0.0;
    for i in 1..scan {
        sup = sup.max(stencil(i as f64 * half_pi / scan as f64).abs());
    }
    Ok(sup)
}

/// The derivative-composition constant: `||g^{(p)}||_{L2(h)} <= s C_p D^p`
/// for the log of any family member, via the product-form expansion of the
/// p-th derivative of a logarithm with the denominator bounded below by 1/2.
pub fn composition_constant(p: usize) -> Result<f64> {
    if p == 0 {
        return Ok(2.0);
    }
    // partitions k of p as (k_1, ..., k_p) with sum l*k_l = p
    let partitions: Vec<Vec<usize>> = match p {
        1 => vec![vec![1]],
        2 => vec![vec![2, 0], vec![0, 1]],
        3 => vec![vec![3, 0, 0], vec![1, 1, 0], vec![0, 0, 1]],
        4 => vec![
            vec![4, 0, 0, 0],
            vec![2, 1, 0, 0],
            vec![0, 2, 0, 0],
            vec![1, 0, 1, 0],
            vec![0, 0, 0, 1],
        ],
        _ => {
            return Err(Error::InvalidArgument(
                "composition_constant: orders up to 4 are supported".into(),
            ))
        }
    };
    let factorial = |m: usize| (1..=m).product::<usize>() as f64;
    let mut total = 0.0;
    for k in &partitions {
        let k_bar: usize = k.iter().sum();
        let mut term = factorial(p) * factorial(k_bar);
        for (l, &kl) in k.iter().enumerate() {
            if kl == 0 {
                continue;
            }
            term /= factorial(kl);
            term *= (phi_derivative_sup(l + 1)? / factorial(l + 1)).powi(kl as i32);
        }
        total += term;
    }
    Ok(2.0 * total)
}

/// The Sobolev-membership amplitude cap `s_{r,L}` and its branch label.
fn spectral_amplitude_cap(r: f64, l: f64, n_members: usize) -> Result<(f64, f64, String)> {
    let c_r = fourier::c_r(r)?;
    let log2r = 2f64.ln().powf(r);
    let integer_r = (r - r.round()).abs() < 1e-12 && r >= 1.0;
    let (comp, branch) = if integer_r {
        (
            composition_constant(r.round() as usize)?,
            format!("integer r = {}", r.round() as usize),
        )
    } else {
        let lo = r.floor() as usize;
        let hi = lo + 1;
        let c = composition_constant(hi)?.powf(r - lo as f64)
            * composition_constant(lo)?.powf(hi as f64 - r);
        (c, format!("Holder interpolation between orders {lo} and {hi}"))
    };
    let c_bar_rl = (log2r / 2.0)
        .min(log2r * l / (8f64.sqrt() * c_r))
        .min(log2r * l / (2f64.sqrt() * c_r * 16f64.powf(r) * comp));
    let s_cap = (n_members as f64).ln().powf(-r) * c_bar_rl;
    Ok((s_cap, c_bar_rl, branch))
}

/// Build the spectral lower-bound family on `[-pi, pi]`:
/// `2 pi f^delta_s(y) = 1 + s sum_j delta_j phi(D|y| - (j-1) pi)`.
pub fn build_spectral_hypercube(
    n_members: usize,
    r: f64,
    l: f64,
    n: usize,
    x: f64,
    spec: RngSpec,
) -> Result<HypercubeFamily> {
    if n_members < 2 {
        return Err(Error::InvalidArgument("need at least 2 members".into()));
    }
    let log_term = (n_members as f64).ln() + x;
    let int_phi_sq = phi_sq_integral(200_000);
    let (s_cap, c_bar_rl, branch) = spectral_amplitude_cap(r, l, n_members)?;
    let c_rl = 3.0 * c_bar_rl * c_bar_rl * int_phi_sq / (2.0 * std::f64::consts::PI);
    let cond = c_rl / (n_members as f64).ln().powf(2.0 * r);
    if log_term / n as f64 >= cond {
        return Err(Error::Precondition(format!(
            "(log N + x)/n = {} is not below C(r,L)/log(N)^2r = {cond}",
            log_term / n as f64
        )));
    }
    let s = (2.0 * std::f64::consts::PI / (3.0 * int_phi_sq)).sqrt()
        * (log_term / n as f64).sqrt();
    debug_assert!(s <= s_cap + 1e-12 && s <= 0.5);

    let d = smallest_hypercube_dim(n_members);
    let codewords = select_codewords(d, n_members, spec)?;
    let domain = Domain::symmetric_pi(2048)?;
    let pi = std::f64::consts::PI;
    let two_pi = 2.0 * pi;
    let members = codewords
        .iter()
        .map(|delta| {
            GridFunction::from_fn(domain, |y| {
                let z = y.abs() * d as f64;
                // phi(D|y| - (j-1)pi) is supported on one block only
                let j = ((z / pi).floor() as usize).min(d - 1);
                let bump = delta[j] as f64 * phi_bump(z - j as f64 * pi);
                (1.0 + s * bump) / two_pi
            })
        })
        .collect();

    Ok(HypercubeFamily {
        kind: HypercubeKind::Spectral,
        d,
        amplitude: s,
        codewords,
        members,
        n,
        x_dev: x,
        branch: Some(branch),
    })
}
