//! Acceptance gate: one test per release criterion, each ending with a
//! single PASS line. Run with `cargo test --test acceptance`.

use std::path::{Path, PathBuf};
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use logagg::density_agg::{self, DensityBank};
use logagg::fourier;
use logagg::harness::{self, ExperimentConfig};
use logagg::measures::{self, Domain, GridFunction};
use logagg::simplex_opt::{self, SimplexWeights};
use logagg::simulate::{self, GaussianProcessSampler, RngSpec};
use logagg::spectral_agg::{self, SpectralBank};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn random_simplex(rng: &mut ChaCha12Rng, n: usize) -> SimplexWeights {
    let raw: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().ln()).collect();
    let sum: f64 = raw.iter().sum();
    SimplexWeights::new(raw.iter().map(|v| v / sum).collect()).unwrap()
}

fn random_tilt(rng: &mut ChaCha12Rng, domain: Domain) -> GridFunction {
    let a = rng.random_range(-1.0..1.0);
    let b = rng.random_range(-1.0..1.0);
    let c = rng.random_range(-1.0..1.0);
    GridFunction::from_fn(domain, |x| {
        a * (TWO_PI * x).sin() + b * (TWO_PI * x).cos() + c * (x - 0.5)
    })
}

fn random_density_bank(rng: &mut ChaCha12Rng, domain: Domain, n: usize) -> DensityBank {
    let tilts: Vec<GridFunction> = (0..n).map(|_| random_tilt(rng, domain)).collect();
    DensityBank::from_tilts(&tilts).unwrap()
}

fn random_spectral_bank(rng: &mut ChaCha12Rng, domain: Domain, n: usize) -> SpectralBank {
    let logs: Vec<GridFunction> = (0..n)
        .map(|_| {
            let a = rng.random_range(-0.5..0.5);
            let b = rng.random_range(-0.3..0.3);
            GridFunction::from_fn(domain, |x| a * x.cos() + b * (2.0 * x).cos())
        })
        .collect();
    let k_max = domain.grid_size() / 4;
    let bound = logs
        .iter()
        .map(|g| fourier::sobolev_norm(g, 1.0, k_max).unwrap().norm)
        .fold(0.0f64, f64::max);
    SpectralBank::from_logs(&logs, 1.0, bound).unwrap()
}

#[test]
fn criterion_01_identity_suites() {
    let start = std::time::Instant::now();
    let domain = Domain::unit(128).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    for _ in 0..1000 {
        let p = density_agg::tilt_density(&random_tilt(&mut rng, domain));
        let q = density_agg::tilt_density(&random_tilt(&mut rng, domain));

        assert!(measures::kl_divergence(&p, &p).unwrap().abs() <= 1e-9);
        let kl = measures::kl_divergence(&p, &q).unwrap();
        assert!(measures::hellinger_sq(&p, &q) <= kl + 1e-9);

        // lower bound on KL through the sup norm of the log ratio
        let log_ratio = p.zip_map(&q, |a, b| (a / b).ln());
        let quad = measures::integrate(&p.zip_map(&log_ratio, |f, l| f * l * l));
        assert!(kl >= 0.5 * (-log_ratio.sup_norm()).exp() * quad - 1e-9);

        // log-profile inequalities for a non-normalized positive function
        let scale: f64 = rng.random_range(-0.7..0.7);
        let f = p.map(|v| v * scale.exp());
        let profile = measures::log_decompose(&f).unwrap();
        let g_sup = profile.g.sup_norm();
        assert!(measures::integrate_against_h(&profile.t).abs() <= 1e-9);
        assert!(profile.m <= g_sup.exp() + 1e-9);
        assert!(profile.psi.abs() <= g_sup + 1e-9);
        assert!(profile.t.sup_norm() <= 2.0 * g_sup + 1e-9);
        assert!(profile.psi + profile.m.ln() <= profile.t.sup_norm() + 1e-9);
    }
    assert!(start.elapsed().as_secs_f64() < 30.0);
    println!("PASS criterion 1: identity suites (1000 instances)");
}

#[test]
fn criterion_02_bias_variance_identity() {
    let domain = Domain::unit(128).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(102);
    for _ in 0..1000 {
        let bank = random_density_bank(&mut rng, domain, 3);
        let lambda = random_simplex(&mut rng, 3);
        let ell = random_tilt(&mut rng, domain);
        let t_lam = density_agg::t_lambda(&lambda, &bank);
        let lhs: f64 = lambda
            .as_slice()
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                w * measures::l2h_norm_sq(&bank.profile(k).t.zip_map(&ell, |a, b| a - b))
            })
            .sum();
        let cross: f64 = lambda
            .as_slice()
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                w * measures::l2h_norm_sq(&t_lam.zip_map(&bank.profile(k).t, |a, b| a - b))
            })
            .sum();
        let rhs = measures::l2h_norm_sq(&t_lam.zip_map(&ell, |a, b| a - b)) + cross;
        assert!((lhs - rhs).abs() <= 1e-9, "identity off by {}", lhs - rhs);
    }
    println!("PASS criterion 2: bias-variance identity (1000 triples)");
}

#[test]
fn criterion_03_strong_concavity() {
    let mut rng = ChaCha12Rng::seed_from_u64(103);
    let unit = Domain::unit(128).unwrap();
    for i in 0..50 {
        let bank = random_density_bank(&mut rng, unit, 3);
        let truth = density_agg::tilt_density(&random_tilt(&mut rng, unit));
        let sample = simulate::sample_iid(&truth, 80, RngSpec::new(103, i)).unwrap();
        let (lambda_hat, f_hat) = density_agg::aggregate_density(&bank, &sample, 1e-10).unwrap();
        let h_hat = density_agg::criterion_hd(&lambda_hat, &bank, &sample);
        for _ in 0..100 {
            let probe = random_simplex(&mut rng, 3);
            let h = density_agg::criterion_hd(&probe, &bank, &sample);
            let f_probe = density_agg::f_d_lambda(&probe, &bank);
            let d = measures::kl_divergence(&f_hat, &f_probe).unwrap();
            assert!(h_hat - h >= 0.5 * d - 1e-6, "slack {}", h_hat - h - 0.5 * d);
        }
    }

    let sym = Domain::symmetric_pi(128).unwrap();
    let white = GridFunction::reference(sym);
    for i in 0..50 {
        let bank = random_spectral_bank(&mut rng, sym, 3);
        let path = simulate::sample_gaussian_path(&white, 64, RngSpec::new(203, i)).unwrap();
        let (lambda_hat, f_hat) = spectral_agg::aggregate_spectral(&bank, &path, 1e-10).unwrap();
        let h_hat = spectral_agg::criterion_hs(&lambda_hat, &bank, &path).unwrap();
        for _ in 0..100 {
            let probe = random_simplex(&mut rng, 3);
            let h = spectral_agg::criterion_hs(&probe, &bank, &path).unwrap();
            let f_probe = spectral_agg::f_s_lambda(&probe, &bank);
            let d = measures::kl_divergence(&f_hat, &f_probe).unwrap();
            assert!(h_hat - h >= 0.5 * d - 1e-6, "slack {}", h_hat - h - 0.5 * d);
        }
    }
    println!("PASS criterion 3: strong concavity (50 D + 50 S instances, 100 probes each)");
}

#[test]
fn criterion_04_optimizer_grid_equivalence() {
    let domain = Domain::unit(128).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(104);
    for i in 0..20 {
        let bank = random_density_bank(&mut rng, domain, 3);
        let truth = density_agg::tilt_density(&random_tilt(&mut rng, domain));
        let sample = simulate::sample_iid(&truth, 60, RngSpec::new(104, i)).unwrap();
        let (lambda_hat, _) = density_agg::aggregate_density(&bank, &sample, 1e-9).unwrap();
        let h_hat = density_agg::criterion_hd(&lambda_hat, &bank, &sample);

        let mut grid_max = f64::NEG_INFINITY;
        for a in 0..=100usize {
            for b in 0..=(100 - a) {
                let c = 100 - a - b;
                let probe = SimplexWeights::new(vec![
                    a as f64 / 100.0,
                    b as f64 / 100.0,
                    c as f64 / 100.0,
                ])
                .unwrap();
                grid_max = grid_max.max(density_agg::criterion_hd(&probe, &bank, &sample));
            }
        }
        assert!(h_hat >= grid_max - 1e-3, "gap {}", grid_max - h_hat);

        let interior = SimplexWeights::new(vec![0.3, 0.3, 0.4]).unwrap();
        let err = simplex_opt::gradient_check(
            |l| {
                let w = SimplexWeights::new(l.to_vec()).unwrap();
                density_agg::criterion_hd(&w, &bank, &sample)
            },
            |l| {
                let w = SimplexWeights::new(l.to_vec()).unwrap();
                density_agg::criterion_hd_gradient(&w, &bank, &sample)
            },
            &interior,
            1e-5,
        )
        .unwrap();
        assert!(err <= 1e-5, "gradient mismatch {err}");
    }
    println!("PASS criterion 4: optimizer matches 0.01-step simplex grid (20 instances)");
}

#[test]
fn criterion_05_toeplitz_suite() {
    let sym = Domain::symmetric_pi(256).unwrap();

    let identity = fourier::toeplitz_build(&GridFunction::constant(sym, 1.0), 8)
        .unwrap()
        .to_dense();
    for i in 0..8 {
        for j in 0..8 {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((identity[(i, j)] - expect).abs() <= 1e-12);
        }
    }

    let mut rng = ChaCha12Rng::seed_from_u64(105);
    let n = 32;
    for _ in 0..100 {
        // admissible symbol: mean one, range inside [1/2, 3/2]
        let raw: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let scale = 0.45 * rng.random::<f64>() / raw.iter().map(|a| a.abs()).sum::<f64>();
        let coefs: Vec<f64> = raw.iter().map(|a| a * scale).collect();
        let ell = GridFunction::from_fn(sym, |x| {
            1.0 + coefs
                .iter()
                .enumerate()
                .map(|(j, a)| a * ((j + 1) as f64 * x).cos())
                .sum::<f64>()
        });
        let t = fourier::toeplitz_build(&ell, n).unwrap();

        let trace_expected = n as f64 * measures::integrate_against_h(&ell);
        assert!((t.trace() - trace_expected).abs() <= 1e-8);
        let dense = t.to_dense();
        let trace_sq: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| dense[(i, j)] * dense[(j, i)])
            .sum();
        assert!(trace_sq <= n as f64 * measures::l2h_norm_sq(&ell) + 1e-8);

        let eigs = t.eigenvalues();
        assert!(eigs.first().unwrap() >= &(ell.min_value() - 1e-8));
        assert!(eigs.last().unwrap() <= &(ell.max_value() + 1e-8));

        let (logdet, bound) = fourier::toeplitz_logdet_bound_check(&ell, n).unwrap();
        assert!(logdet >= bound - 1e-9, "logdet {logdet} < bound {bound}");

        // pairing: coefficient contraction vs the quadratic form
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
        let path = spectral_agg::GaussianPath::new(x.clone()).unwrap();
        let contracted = spectral_agg::pairing_in(&ell, &path).unwrap();
        let quad = t.quadratic_form(&x) / n as f64;
        assert!((contracted - quad).abs() <= 1e-8);
    }
    println!("PASS criterion 5: Toeplitz suite (identity, traces, eigenvalues, logdet, pairing)");
}

#[test]
fn criterion_06_density_oracle_experiment() {
    let cfg = ExperimentConfig::load(&config_path("density_oracle.toml")).unwrap();
    assert_eq!(cfg.replicates, 500);
    assert_eq!(cfg.n, 500);
    let report = harness::run_density_oracle(&cfg).unwrap();
    assert!(report.violation_rate <= 0.05, "rate {}", report.violation_rate);
    assert_eq!(report.proposition_violations, 0);
    assert!(report.all_checks_passed);
    assert!(report.runtime_seconds < 300.0);
    println!(
        "PASS criterion 6: density oracle, violation_rate {} over 500 replicates",
        report.violation_rate
    );
}

#[test]
fn criterion_07_spectral_oracle_experiment() {
    let cfg = ExperimentConfig::load(&config_path("spectral_oracle.toml")).unwrap();
    assert_eq!(cfg.replicates, 300);
    assert_eq!(cfg.n, 1024);
    let report = harness::run_spectral_oracle(&cfg).unwrap();
    assert!(report.violation_rate <= 0.05, "rate {}", report.violation_rate);
    for row in &report.per_replicate {
        assert!(
            row.proposition_slack >= -harness::PROPOSITION_SLACK,
            "replicate {} slack {}",
            row.replicate,
            row.proposition_slack
        );
    }
    assert!(report.all_checks_passed);
    assert!(report.runtime_seconds < 600.0);
    println!(
        "PASS criterion 7: spectral oracle, violation_rate {} over 300 replicates",
        report.violation_rate
    );
}

#[test]
fn criterion_08_bias_scaling() {
    let sym = Domain::symmetric_pi(256).unwrap();
    let truth = harness::spectral_truth(sym, "cos:0.5").unwrap();
    let bank = harness::spectral_bank(
        &truth,
        &["truth".to_string(), "log-cos:0.3:1".to_string()],
        1.0,
    )
    .unwrap();
    let lambda = SimplexWeights::vertex(2, 1);
    let bias: Vec<f64> = [64usize, 128, 256]
        .iter()
        .map(|&n| {
            spectral_agg::bias_diagnostic(&bank, &truth, &lambda, 0, n)
                .unwrap()
                .abs()
        })
        .collect();
    for w in bias.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
    }
    println!(
        "PASS criterion 8: |B_n| halves as n doubles ({:.3e}, {:.3e}, {:.3e})",
        bias[0], bias[1], bias[2]
    );
}

#[test]
fn criterion_09_lower_bound_audits() {
    let density = harness::run_lower_bound_audit(
        &ExperimentConfig::load(&config_path("audit_density.toml")).unwrap(),
    )
    .unwrap();
    assert!(density.all_checks_passed);
    assert_eq!(density.d, 32);

    let spectral = harness::run_lower_bound_audit(
        &ExperimentConfig::load(&config_path("audit_spectral.toml")).unwrap(),
    )
    .unwrap();
    assert!(spectral.all_checks_passed);
    assert!(spectral
        .certificates
        .iter()
        .filter(|c| c.name.starts_with("sobolev"))
        .count()
        == 16);
    println!(
        "PASS criterion 9: lower-bound audits ({} + {} certificates)",
        density.certificates.len(),
        spectral.certificates.len()
    );
}

#[test]
fn criterion_10_gaussian_sampler_covariances() {
    let sym = Domain::symmetric_pi(256).unwrap();
    let f = GridFunction::from_fn(sym, |x| (1.0 + x.cos()) / TWO_PI);
    let n = 64usize;
    let paths = 10_000usize;
    let sampler = GaussianProcessSampler::new(&f, n).unwrap();

    let mut sums = [0.0f64; 3];
    let mut sq_sums = [0.0f64; 3];
    for k in 0..paths {
        let path = sampler.sample(RngSpec::new(110, k as u64));
        for j in 0..3 {
            let g = spectral_agg::empirical_autocov(&path, j).unwrap();
            sums[j] += g;
            sq_sums[j] += g * g;
        }
    }
    // centers are the means of the biased estimator: (1 - j/n) gamma_j
    let centers = [1.0, 0.5 * (1.0 - 1.0 / n as f64), 0.0];
    for j in 0..3 {
        let mean = sums[j] / paths as f64;
        let var = sq_sums[j] / paths as f64 - mean * mean;
        let sigma = (var / paths as f64).sqrt();
        assert!(
            (mean - centers[j]).abs() <= 4.0 * sigma,
            "lag {j}: mean {mean}, center {}, sigma {sigma}",
            centers[j]
        );
    }
    println!("PASS criterion 10: sampler autocovariances within 4-sigma bands");
}

fn normalized_report(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("report.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v.as_object_mut().unwrap().remove("runtime_seconds");
    v["config"].as_object_mut().unwrap().remove("output_path");
    v
}

#[test]
fn criterion_11_determinism() {
    let exe = env!("CARGO_BIN_EXE_agg");
    let cfg = config_path("density_oracle.toml");
    let base = std::env::temp_dir().join("logagg-acceptance-determinism");
    let dirs: Vec<PathBuf> = ["a", "b", "c"].iter().map(|s| base.join(s)).collect();
    let threads = ["1", "1", "8"];
    for (dir, t) in dirs.iter().zip(threads) {
        let status = Command::new(exe)
            .arg("run")
            .arg(&cfg)
            .args(["--threads", t, "--quiet"])
            .arg("--out")
            .arg(dir)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let csv: Vec<Vec<u8>> = dirs
        .iter()
        .map(|d| std::fs::read(d.join("replicates.csv")).unwrap())
        .collect();
    assert_eq!(csv[0], csv[1], "same-seed serial runs differ");
    assert_eq!(csv[0], csv[2], "serial and 8-thread runs differ");
    let reports: Vec<serde_json::Value> = dirs.iter().map(|d| normalized_report(d)).collect();
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
    println!("PASS criterion 11: byte-identical replicates across seeds and thread counts");
}
