//! Monte Carlo harness: config-driven oracle-inequality experiments,
//! replicate-wise deviation decompositions, lower-bound audits and the
//! report writers used by the CLI.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::density_agg::{self, DensityBank};
use crate::fourier;
use crate::measures::{self, Domain, GridFunction};
use crate::simplex_opt::SimplexWeights;
use crate::simulate::{self, GaussianProcessSampler, HypercubeFamily, HypercubeKind, RngSpec};
use crate::spectral_agg::{self, SpectralBank};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Density,
    Spectral,
}

/// A Monte Carlo experiment description, loaded from a flat TOML file.
/// Unknown keys are rejected.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    /// Truth generator, e.g. `"exp-sin:0.8"`, `"cos:0.5"`, or
    /// `"hypercube:<L>"` / `"hypercube:<r>:<L>"` for lower-bound audits.
    pub truth: String,
    /// Bank generators, each relative to the truth (e.g. `"truth"`,
    /// `"tilt-sin:0.3:2"`). Empty for audits.
    pub bank: Vec<String>,
    pub n: usize,
    #[serde(rename = "N")]
    pub n_bank: usize,
    pub x_dev: f64,
    pub replicates: usize,
    pub seed: u64,
    pub grid_size: usize,
    pub tol: f64,
    pub output_path: String,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: Self =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate_common()?;
        Ok(cfg)
    }

    fn validate_common(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        if self.x_dev <= 0.0 {
            return Err(Error::Config("x_dev must be > 0".into()));
        }
        if self.tol <= 0.0 {
            return Err(Error::Config("tol must be > 0".into()));
        }
        Ok(())
    }

    fn validate_bank(&self) -> Result<()> {
        if self.bank.len() != self.n_bank {
            return Err(Error::Config(format!(
                "bank has {} generators but N = {}",
                self.bank.len(),
                self.n_bank
            )));
        }
        Ok(())
    }
}

fn parse_parts(spec: &str) -> (&str, Vec<f64>) {
    let mut it = spec.split(':');
    let name = it.next().unwrap_or("");
    let params = it.filter_map(|p| p.parse::<f64>().ok()).collect();
    (name, params)
}

fn bad_generator(kind: &str, spec: &str) -> Error {
    Error::Config(format!("unknown {kind} generator '{spec}'"))
}

/// Build the truth density on `[0, 1]` from its generator string.
pub fn density_truth(domain: Domain, spec: &str) -> Result<GridFunction> {
    let (name, p) = parse_parts(spec);
    match (name, p.as_slice()) {
        ("uniform", []) => Ok(GridFunction::reference(domain)),
        ("exp-sin", [a]) => {
            let a = *a;
            Ok(density_agg::tilt_density(&GridFunction::from_fn(
                domain,
                |x| a * (2.0 * std::f64::consts::PI * x).sin(),
            )))
        }
        _ => Err(bad_generator("density truth", spec)),
    }
}

/// Build a density bank of perturbations of the truth.
pub fn density_bank(truth: &GridFunction, specs: &[String]) -> Result<DensityBank> {
    let g_truth = measures::log_decompose(truth)?.g;
    let domain = truth.domain();
    let two_pi = 2.0 * std::f64::consts::PI;
    let tilts = specs
        .iter()
        .map(|spec| {
            let (name, p) = parse_parts(spec);
            let bump = match (name, p.as_slice()) {
                ("truth", []) => GridFunction::constant(domain, 0.0),
                ("tilt-sin", [a, k]) => {
                    let (a, k) = (*a, *k);
                    GridFunction::from_fn(domain, |x| a * (two_pi * k * x).sin())
                }
                ("tilt-cos", [a, k]) => {
                    let (a, k) = (*a, *k);
                    GridFunction::from_fn(domain, |x| a * (two_pi * k * x).cos())
                }
                ("tilt-linear", [a]) => {
                    let a = *a;
                    GridFunction::from_fn(domain, |x| a * (x - 0.5))
                }
                _ => return Err(bad_generator("density bank", spec)),
            };
            Ok(g_truth.zip_map(&bump, |a, b| a + b))
        })
        .collect::<Result<Vec<_>>>()?;
    DensityBank::from_tilts(&tilts)
}

/// Build the truth spectral density on `[-pi, pi]`.
pub fn spectral_truth(domain: Domain, spec: &str) -> Result<GridFunction> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let (name, p) = parse_parts(spec);
    match (name, p.as_slice()) {
        ("white", []) => Ok(GridFunction::reference(domain)),
        ("cos", [a]) => {
            let a = *a;
            if a.abs() >= 1.0 {
                return Err(Error::Config("cos amplitude must be in (-1, 1)".into()));
            }
            Ok(GridFunction::from_fn(domain, |x| {
                (1.0 + a * x.cos()) / two_pi
            }))
        }
        _ => Err(bad_generator("spectral truth", spec)),
    }
}

/// Build a spectral bank of even log-perturbations of the truth. The
/// declared Sobolev bound is the measured maximum over the members.
pub fn spectral_bank(truth: &GridFunction, specs: &[String], r: f64) -> Result<SpectralBank> {
    let g_truth = measures::log_decompose(truth)?.g;
    let domain = truth.domain();
    let logs = specs
        .iter()
        .map(|spec| {
            let (name, p) = parse_parts(spec);
            let bump = match (name, p.as_slice()) {
                ("truth", []) => GridFunction::constant(domain, 0.0),
                ("log-cos", [a, k]) => {
                    let (a, k) = (*a, *k);
                    GridFunction::from_fn(domain, |x| a * (k * x).cos())
                }
                ("scale", [c]) => GridFunction::constant(domain, *c),
                _ => return Err(bad_generator("spectral bank", spec)),
            };
            Ok(g_truth.zip_map(&bump, |a, b| a + b))
        })
        .collect::<Result<Vec<_>>>()?;
    let k_max = domain.grid_size() / 4;
    let mut bound: f64 = 0.0;
    for g in &logs {
        bound = bound.max(fourier::sobolev_norm(g, r, k_max)?.norm);
    }
    SpectralBank::from_logs(&logs, r, bound)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub excess_kl: f64,
    pub threshold: f64,
    pub violated: bool,
    pub weights: Vec<f64>,
    /// Slack of the replicate-wise bias/variance inequality:
    /// `bias + max_k V_n(e_k) - excess_kl` (negative means violated).
    pub proposition_slack: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TheoremConstants {
    pub k: f64,
    pub l: f64,
    pub beta: f64,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct OracleReport {
    pub problem: Problem,
    pub constants: TheoremConstants,
    pub threshold: f64,
    pub violation_rate: f64,
    /// Statistical bound `e^-x + 3 sqrt(e^-x (1 - e^-x) / replicates)`.
    pub violation_bound: f64,
    pub proposition_violations: usize,
    pub min_excess_kl: f64,
    pub all_checks_passed: bool,
    pub runtime_seconds: f64,
    pub version: String,
    pub config: ExperimentConfig,
    #[serde(skip)]
    pub per_replicate: Vec<ReplicateRow>,
}

pub const PROPOSITION_SLACK: f64 = 1e-8;

fn version_string() -> String {
    format!("logagg {}", env!("CARGO_PKG_VERSION"))
}

fn violation_bound(x: f64, replicates: usize) -> f64 {
    let p = (-x).exp();
    p + 3.0 * (p * (1.0 - p) / replicates as f64).sqrt()
}

fn finish_report(
    problem: Problem,
    constants: TheoremConstants,
    threshold: f64,
    rows: Vec<ReplicateRow>,
    cfg: &ExperimentConfig,
    started: std::time::Instant,
) -> OracleReport {
    let violations = rows.iter().filter(|r| r.violated).count();
    let violation_rate = violations as f64 / rows.len() as f64;
    let bound = violation_bound(cfg.x_dev, rows.len());
    let proposition_violations = rows
        .iter()
        .filter(|r| r.proposition_slack < -PROPOSITION_SLACK)
        .count();
    let min_excess = rows.iter().map(|r| r.excess_kl).fold(f64::INFINITY, f64::min);
    let all_checks_passed =
        violation_rate <= bound && proposition_violations == 0 && min_excess >= -crate::TOL_QUADRATURE;
    OracleReport {
        problem,
        constants,
        threshold,
        violation_rate,
        violation_bound: bound,
        proposition_violations,
        min_excess_kl: min_excess,
        all_checks_passed,
        runtime_seconds: started.elapsed().as_secs_f64(),
        version: version_string(),
        config: cfg.clone(),
        per_replicate: rows,
    }
}

/// Bias term and per-vertex variance terms of the replicate-wise
/// oracle-inequality decomposition.
#[derive(Debug, Clone)]
pub struct DeviationDecomposition {
    pub bias: f64,
    pub variance_terms: Vec<f64>,
}

impl DeviationDecomposition {
    pub fn bound(&self) -> f64 {
        self.bias
            + self
                .variance_terms
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Density decomposition: the empirical measure is unbiased, so the bias
/// term is exactly zero and
/// `V_n(e_k) = <t_k - t_k*, I_n - f> - (e^-6K / 4) ||t_k - t_k*||^2`.
pub fn decompose_deviation_density(
    bank: &DensityBank,
    truth: &GridFunction,
    sample: &density_agg::IidSample,
    k_star: usize,
) -> DeviationDecomposition {
    let k = bank.k_bound();
    let quad = (-6.0 * k).exp() / 4.0;
    let variance_terms = (0..bank.len())
        .map(|j| {
            let diff = bank.profile(j).t.zip_map(&bank.profile(k_star).t, |a, b| a - b);
            let pop = measures::integrate(&diff.zip_map(truth, |a, b| a * b));
            sample.pair(&diff) - pop - quad * measures::l2h_norm_sq(&diff)
        })
        .collect();
    DeviationDecomposition {
        bias: 0.0,
        variance_terms,
    }
}

/// Spectral decomposition with the expected periodogram as the centering:
/// bias `B_n(g_hat - g_k*)` plus
/// `V_n(e_k) = <g_k - g_k*, I_n - f_bar_n> - (e^-3K / 4) ||g_k - g_k*||^2`.
pub fn decompose_deviation_spectral(
    bank: &SpectralBank,
    truth: &GridFunction,
    x: &spectral_agg::GaussianPath,
    weights: &SimplexWeights,
    k_star: usize,
    n: usize,
) -> Result<DeviationDecomposition> {
    let bias = spectral_agg::bias_diagnostic(bank, truth, weights, k_star, n)?;
    let f_bar = spectral_agg::expected_periodogram(truth, n)?;
    let k = bank.k_bound();
    let quad = (-3.0 * k).exp() / 4.0;
    let variance_terms = (0..bank.len())
        .map(|j| {
            let diff = bank.profile(j).g.zip_map(&bank.profile(k_star).g, |a, b| a - b);
            let pop = measures::integrate(&diff.zip_map(&f_bar, |a, b| a * b));
            Ok(spectral_agg::pairing_in(&diff, x)? - pop - quad * measures::l2h_norm_sq(&diff))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeviationDecomposition {
        bias,
        variance_terms,
    })
}

fn best_in_bank(truth: &GridFunction, estimators: &[&GridFunction]) -> Result<(usize, f64)> {
    let mut k_star = 0;
    let mut best = f64::INFINITY;
    for (k, f_k) in estimators.iter().enumerate() {
        let d = measures::kl_divergence(truth, f_k)?;
        if d < best {
            best = d;
            k_star = k;
        }
    }
    Ok((k_star, best))
}

/// Run the density oracle-inequality experiment described by `config`.
pub fn run_density_oracle(cfg: &ExperimentConfig) -> Result<OracleReport> {
    if cfg.problem != Problem::Density {
        return Err(Error::Config("config problem is not 'density'".into()));
    }
    cfg.validate_bank()?;
    let started = std::time::Instant::now();
    let domain = Domain::unit(cfg.grid_size)?;
    let truth = density_truth(domain, &cfg.truth)?;
    let bank = density_bank(&truth, &cfg.bank)?;
    let estimators: Vec<&GridFunction> = (0..bank.len()).map(|k| bank.estimator(k)).collect();
    let (k_star, min_kl) = best_in_bank(&truth, &estimators)?;

    let k = bank.k_bound();
    let l = measures::log_decompose(&truth)?.t.sup_norm();
    let beta = 2.0 * (6.0 * k + 2.0 * l).exp() + 4.0 * k / 3.0;
    let threshold = beta * ((cfg.n_bank as f64).ln() + cfg.x_dev) / cfg.n as f64;

    let rows = (0..cfg.replicates)
        .into_par_iter()
        .map(|rep| -> Result<ReplicateRow> {
            let spec = RngSpec::new(cfg.seed, rep as u64);
            let sample = simulate::sample_iid(&truth, cfg.n, spec)?;
            let (weights, f_hat) = density_agg::aggregate_density(&bank, &sample, cfg.tol)?;
            let excess_kl = measures::kl_divergence(&truth, &f_hat)? - min_kl;
            let decomposition = decompose_deviation_density(&bank, &truth, &sample, k_star);
            Ok(ReplicateRow {
                replicate: rep,
                excess_kl,
                threshold,
                violated: excess_kl > threshold,
                weights: weights.as_slice().to_vec(),
                proposition_slack: decomposition.bound() - excess_kl,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let constants = TheoremConstants {
        k,
        l,
        beta,
        alpha: None,
    };
    Ok(finish_report(
        Problem::Density,
        constants,
        threshold,
        rows,
        cfg,
        started,
    ))
}

/// Smoothness order used for the spectral experiments.
pub const SPECTRAL_R: f64 = 1.0;

/// Run the spectral oracle-inequality experiment described by `config`.
pub fn run_spectral_oracle(cfg: &ExperimentConfig) -> Result<OracleReport> {
    if cfg.problem != Problem::Spectral {
        return Err(Error::Config("config problem is not 'spectral'".into()));
    }
    cfg.validate_bank()?;
    let started = std::time::Instant::now();
    let domain = Domain::symmetric_pi(cfg.grid_size)?;
    let truth = spectral_truth(domain, &cfg.truth)?;
    let r = SPECTRAL_R;
    let bank = spectral_bank(&truth, &cfg.bank, r)?;
    let estimators: Vec<&GridFunction> = (0..bank.len()).map(|k| bank.estimator(k)).collect();
    let (k_star, min_kl) = best_in_bank(&truth, &estimators)?;

    let k = bank.k_bound();
    let l = measures::log_decompose(&truth)?.g.sup_norm();
    let beta = 4.0 * (k * l.exp() + (2.0 * l + 3.0 * k).exp());
    // the measured Sobolev norm of the truth stands in for the smoothness
    // constant of the expected-periodogram error
    let m_f = fourier::sobolev_norm(&truth, r, cfg.grid_size / 4)?.norm;
    let alpha = 4.0 * k * m_f / fourier::c_r(r)?;
    let threshold =
        beta * ((cfg.n_bank as f64).ln() + cfg.x_dev) / cfg.n as f64 + alpha / cfg.n as f64;

    let sampler = GaussianProcessSampler::new(&truth, cfg.n)?;
    let rows = (0..cfg.replicates)
        .into_par_iter()
        .map(|rep| -> Result<ReplicateRow> {
            let spec = RngSpec::new(cfg.seed, rep as u64);
            let path = sampler.sample(spec);
            let (weights, f_hat) = spectral_agg::aggregate_spectral(&bank, &path, cfg.tol)?;
            let excess_kl = measures::kl_divergence(&truth, &f_hat)? - min_kl;
            let decomposition =
                decompose_deviation_spectral(&bank, &truth, &path, &weights, k_star, cfg.n)?;
            Ok(ReplicateRow {
                replicate: rep,
                excess_kl,
                threshold,
                violated: excess_kl > threshold,
                weights: weights.as_slice().to_vec(),
                proposition_slack: decomposition.bound() - excess_kl,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let constants = TheoremConstants {
        k,
        l,
        beta,
        alpha: Some(alpha),
    };
    Ok(finish_report(
        Problem::Spectral,
        constants,
        threshold,
        rows,
        cfg,
        started,
    ))
}

/// Dispatch on the configured problem.
pub fn run_oracle(cfg: &ExperimentConfig) -> Result<OracleReport> {
    match cfg.problem {
        Problem::Density => run_density_oracle(cfg),
        Problem::Spectral => run_spectral_oracle(cfg),
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CertificateRow {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// True when the value respects the bound in the certificate's
    /// direction, with relative slack 1e-6.
    pub ok: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct AuditReport {
    pub problem: Problem,
    pub d: usize,
    pub amplitude: f64,
    pub branch: Option<String>,
    pub certificates: Vec<CertificateRow>,
    pub all_checks_passed: bool,
    pub runtime_seconds: f64,
    pub version: String,
}

const CERT_SLACK: f64 = 1e-6;

fn cert_ge(name: String, value: f64, bound: f64) -> CertificateRow {
    let ok = value >= bound * (1.0 - CERT_SLACK) - 1e-15;
    CertificateRow {
        name,
        value,
        bound,
        ok,
    }
}

fn cert_le(name: String, value: f64, bound: f64) -> CertificateRow {
    let ok = value <= bound * (1.0 + CERT_SLACK) + 1e-15;
    CertificateRow {
        name,
        value,
        bound,
        ok,
    }
}

fn family_certificates(fam: &HypercubeFamily, r: Option<f64>, l: f64) -> Result<Vec<CertificateRow>> {
    let mut certs = Vec::new();
    let h_bound = fam.hellinger_threshold();
    for i in 0..fam.len() {
        for j in i + 1..fam.len() {
            certs.push(cert_ge(
                format!("hellinger_sq[{i},{j}]"),
                fam.pairwise_hellinger_sq(i, j),
                h_bound,
            ));
        }
    }
    let budget = fam.kl_budget();
    for i in 1..fam.len() {
        certs.push(cert_le(format!("kl[{i}]"), fam.kl_to_reference(i), budget));
    }
    if fam.kind == HypercubeKind::Spectral {
        let r = r.expect("spectral audit carries r");
        let c_r = fourier::c_r(r)?;
        let two_pi = 2.0 * std::f64::consts::PI;
        let k_max = fam.members[0].domain().grid_size() / 4;
        for (i, m) in fam.members.iter().enumerate() {
            let g = m.map(|v| (v * two_pi).ln());
            certs.push(cert_le(
                format!("sobolev[{i}]"),
                fourier::sobolev_norm(&g, r, k_max)?.norm,
                l / c_r,
            ));
        }
        // exact Gaussian KL against its quadratic bound at a capped length
        let n_check = fam.n.min(512);
        for i in 1..fam.len() {
            let (exact, bound) = fam.gaussian_kl_check(i, n_check)?;
            certs.push(cert_le(format!("gaussian_kl[{i}]@{n_check}"), exact, bound));
        }
    }
    Ok(certs)
}

/// Build the hypercube family named by the config's `truth` field
/// (`"hypercube:<L>"` or `"hypercube:<r>:<L>"`) and verify every
/// separation and budget certificate.
pub fn run_lower_bound_audit(cfg: &ExperimentConfig) -> Result<AuditReport> {
    let started = std::time::Instant::now();
    let (name, p) = parse_parts(&cfg.truth);
    if name != "hypercube" {
        return Err(Error::Config(
            "audit expects truth = \"hypercube:<L>\" or \"hypercube:<r>:<L>\"".into(),
        ));
    }
    let spec = RngSpec::new(cfg.seed, 0);
    let (fam, r, l) = match (cfg.problem, p.as_slice()) {
        (Problem::Density, [l]) => (
            simulate::build_density_hypercube(cfg.n_bank, *l, cfg.n, cfg.x_dev, spec)?,
            None,
            *l,
        ),
        (Problem::Spectral, [r, l]) => (
            simulate::build_spectral_hypercube(cfg.n_bank, *r, *l, cfg.n, cfg.x_dev, spec)?,
            Some(*r),
            *l,
        ),
        _ => {
            return Err(Error::Config(
                "hypercube parameters do not match the problem".into(),
            ))
        }
    };
    let certificates = family_certificates(&fam, r, l)?;
    let all_checks_passed = certificates.iter().all(|c| c.ok);
    Ok(AuditReport {
        problem: cfg.problem,
        d: fam.d,
        amplitude: fam.amplitude,
        branch: fam.branch.clone(),
        certificates,
        all_checks_passed,
        runtime_seconds: started.elapsed().as_secs_f64(),
        version: version_string(),
    })
}

/// Write `<out>/replicates.csv` with one row per replicate.
pub fn write_replicates_csv(dir: &Path, report: &OracleReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut file = fs::File::create(dir.join("replicates.csv"))?;
    let n_weights = report
        .per_replicate
        .first()
        .map_or(0, |r| r.weights.len());
    let mut header = String::from("replicate,excess_kl,threshold,violated");
    for k in 1..=n_weights {
        header.push_str(&format!(",w{k}"));
    }
    writeln!(file, "{header}")?;
    for row in &report.per_replicate {
        let mut line = format!(
            "{},{},{},{}",
            row.replicate, row.excess_kl, row.threshold, row.violated
        );
        for w in &row.weights {
            line.push_str(&format!(",{w}"));
        }
        writeln!(file, "{line}")?;
    }
    Ok(())
}

/// Write `<out>/report.json`.
pub fn write_report_json<T: serde::Serialize>(dir: &Path, report: &T) -> Result<()> {
    fs::create_dir_all(dir)?;
    let file = fs::File::create(dir.join("report.json"))?;
    serde_json::to_writer_pretty(file, report)
        .map_err(|e| Error::Config(format!("report serialization: {e}")))?;
    Ok(())
}

/// Write `<out>/certificates.csv` for an audit.
pub fn write_certificates_csv(dir: &Path, report: &AuditReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut file = fs::File::create(dir.join("certificates.csv"))?;
    writeln!(file, "name,value,bound,ok")?;
    for c in &report.certificates {
        writeln!(file, "{},{},{},{}", c.name, c.value, c.bound, c.ok)?;
    }
    Ok(())
}

/// Quick invariant battery for `agg selftest`. Returns the per-check
/// outcomes as `(name, passed)` pairs.
pub fn selftest() -> Result<Vec<(String, bool)>> {
    let mut results = Vec::new();
    let mut check = |name: &str, ok: bool| results.push((name.to_string(), ok));

    // KL and Hellinger identities on a tilted density
    let d = Domain::unit(256)?;
    let p = density_agg::tilt_density(&GridFunction::from_fn(d, |x| {
        0.6 * (2.0 * std::f64::consts::PI * x).sin()
    }));
    let q = density_agg::tilt_density(&GridFunction::from_fn(d, |x| 0.4 * (x - 0.5)));
    check(
        "kl_self_zero",
        measures::kl_divergence(&p, &p)?.abs() <= 1e-12,
    );
    check(
        "hellinger_below_kl",
        measures::hellinger_sq(&p, &q) <= measures::kl_divergence(&p, &q)? + 1e-9,
    );
    let profile = measures::log_decompose(&p)?;
    check(
        "t_centered",
        measures::integrate_against_h(&profile.t).abs() <= 1e-9,
    );
    check(
        "psi_in_range",
        profile.psi >= -1e-12 && profile.psi <= profile.t.sup_norm() + 1e-12,
    );

    // Toeplitz identity T_n(1) = I
    let s = Domain::symmetric_pi(128)?;
    let t = fourier::toeplitz_build(&GridFunction::constant(s, 1.0), 6)?;
    let dense = t.to_dense();
    let identity_ok = (0..6).all(|i| {
        (0..6).all(|j| {
            let expect = if i == j { 1.0 } else { 0.0 };
            (dense[(i, j)] - expect).abs() <= 1e-12
        })
    });
    check("toeplitz_identity", identity_ok);

    // pairing closed form on a short path
    let path = spectral_agg::GaussianPath::new(vec![0.3, -1.0, 0.7, 1.4])?;
    let two_cos = GridFunction::from_fn(s, |y| 2.0 * y.cos());
    check(
        "pairing_two_cos",
        (spectral_agg::pairing_in(&two_cos, &path)?
            - 2.0 * spectral_agg::empirical_autocov(&path, 1)?)
        .abs()
            <= 1e-10,
    );

    // optimizer certificate on a quadratic with known maximizer
    let target = [0.2, 0.3, 0.5];
    let r = crate::simplex_opt::maximize_on_simplex(
        |l| {
            -l.iter()
                .zip(&target)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        },
        |l| l.iter().zip(&target).map(|(a, b)| -2.0 * (a - b)).collect(),
        3,
        1e-10,
        2000,
    )?;
    let opt_ok = r.converged
        && r.weights
            .as_slice()
            .iter()
            .zip(&target)
            .all(|(a, b)| (a - b).abs() <= 1e-5);
    check("simplex_optimizer", opt_ok);

    // sampler determinism
    let spec = RngSpec::new(1234, 5);
    let s1 = simulate::sample_iid(&p, 50, spec)?;
    let s2 = simulate::sample_iid(&p, 50, spec)?;
    check("iid_determinism", s1.points() == s2.points());
    let g1 = simulate::sample_gaussian_path(&GridFunction::reference(s), 32, spec)?;
    let g2 = simulate::sample_gaussian_path(&GridFunction::reference(s), 32, spec)?;
    check("gaussian_determinism", g1.values() == g2.values());

    // a tiny end-to-end density aggregation with the truth in the bank
    let bank = density_bank(
        &p,
        &[
            "truth".to_string(),
            "tilt-sin:0.5:2".to_string(),
            "tilt-linear:0.8".to_string(),
        ],
    )?;
    let sample = simulate::sample_iid(&p, 400, RngSpec::new(7, 0))?;
    let (_, f_hat) = density_agg::aggregate_density(&bank, &sample, 1e-9)?;
    let excess = measures::kl_divergence(&p, &f_hat)?;
    check("density_aggregation_excess_nonneg", excess >= -1e-9);

    Ok(results)
}
