//! Acceptance suite: one test per acceptance criterion, each printing its
//! own pass/fail line through the harness. Criteria are serialized by a
//! mutex so the stated runtime budgets are measured without contention
//! from sibling tests.

use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::sync::{Mutex, PoisonError};
use std::time::{Duration, Instant};

use ridges::density::{manifold_oracle, silverman_bandwidth, DensityModel, GaussComponent};
use ridges::experiments::{
    bandwidth_sweep, bias_experiment, rate_experiment, BiasConfig, RateConfig, RateReference,
};
use ridges::geometry::{hausdorff, manifold_probes, ManifoldSpec, ManifoldWeight, PointCloud};
use ridges::mat::{dist, norm, Mat};
use ridges::ridge::{
    integral_curve, path_diagnostics, scms_run, scms_step, surf, PointStatus, SurfConfig,
};
use ridges::rng::SplitMix64;
use ridges::spectral::{operator_norm_sym, perturbation_bounds, spectral_frame};
use ridges::synth::HiddenManifoldModel;

static SERIAL: Mutex<()> = Mutex::new(());

fn serialized() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(PoisonError::into_inner)
}

fn check_budget(started: Instant, budget: Duration, label: &str) {
    let elapsed = started.elapsed();
    assert!(
        elapsed <= budget,
        "{label}: runtime {elapsed:?} exceeded budget {budget:?}"
    );
}

fn circle_spec() -> ManifoldSpec {
    ManifoldSpec::circle(vec![0.0, 0.0], 3.0).unwrap()
}

fn circle_data_model(seed: u64) -> HiddenManifoldModel {
    HiddenManifoldModel::new(
        circle_spec(),
        ManifoldWeight::Uniform,
        0.5,
        1.0,
        vec![(-6.0, 6.0), (-6.0, 6.0)],
        seed,
    )
    .unwrap()
}

fn aniso_gaussian() -> DensityModel {
    // covariance diag(4, 1)
    DensityModel::mixture(vec![GaussComponent::diagonal(
        1.0,
        vec![0.0, 0.0],
        vec![2.0, 1.0],
    )])
    .unwrap()
}

// --- finite-difference oracles (independent of the analytic path) ------

fn fd_gradient(model: &DensityModel, x: &[f64], step: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += step;
            xm[k] -= step;
            (model.density(&xp).unwrap() - model.density(&xm).unwrap()) / (2.0 * step)
        })
        .collect()
}

fn fd_hessian(model: &DensityModel, x: &[f64], step: f64) -> Mat {
    let d = x.len();
    let f = |y: &[f64]| model.density(y).unwrap();
    let f0 = f(x);
    let mut h = Mat::zeros(d, d);
    for k in 0..d {
        for l in k..d {
            let v = if k == l {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[k] += step;
                xm[k] -= step;
                (f(&xp) - 2.0 * f0 + f(&xm)) / (step * step)
            } else {
                let mut pp = x.to_vec();
                let mut pm = x.to_vec();
                let mut mp = x.to_vec();
                let mut mm = x.to_vec();
                pp[k] += step;
                pp[l] += step;
                pm[k] += step;
                pm[l] -= step;
                mp[k] -= step;
                mp[l] += step;
                mm[k] -= step;
                mm[l] -= step;
                (f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (4.0 * step * step)
            };
            h[(k, l)] = v;
            h[(l, k)] = v;
        }
    }
    h
}

fn fd_hprime(model: &DensityModel, x: &[f64], step: f64) -> Mat {
    let d = x.len();
    let mut hp = Mat::zeros(d * d, d);
    for j in 0..d {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += step;
        xm[j] -= step;
        let hplus = model.eval(&xp, false).unwrap().hess;
        let hminus = model.eval(&xm, false).unwrap().hess;
        for l in 0..d {
            for k in 0..d {
                hp[(k + d * l, j)] = (hplus[(k, l)] - hminus[(k, l)]) / (2.0 * step);
            }
        }
    }
    hp
}

#[test]
fn criterion_01_derivative_correctness() {
    let _guard = serialized();
    let started = Instant::now();
    let mut rng = SplitMix64::new(101);
    for dim in [1usize, 2, 3] {
        // random kde
        let mut pc = PointCloud::empty(dim).unwrap();
        for _ in 0..50 {
            let p: Vec<f64> = (0..dim).map(|_| rng.next_range(-1.0, 1.0)).collect();
            pc.push(&p).unwrap();
        }
        let kde = DensityModel::kde(pc, 0.7).unwrap();
        // random mixture with both isotropic and diagonal components
        let mut comps = vec![
            GaussComponent::isotropic(0.5, vec![0.25; dim], 0.9),
            GaussComponent::diagonal(
                0.5,
                vec![-0.25; dim],
                (0..dim).map(|k| 0.6 + 0.2 * k as f64).collect(),
            ),
        ];
        comps[0].mean[0] = -0.5;
        let mix = DensityModel::mixture(comps).unwrap();

        for model in [&kde, &mix] {
            for _ in 0..20 {
                let x: Vec<f64> = (0..dim).map(|_| rng.next_range(-1.0, 1.0)).collect();
                let info = model.eval(&x, true).unwrap();
                let step = 1e-4;
                let g_fd = fd_gradient(model, &x, step);
                assert!(
                    dist(&info.g, &g_fd) / norm(&info.g).max(1e-8) <= 1e-5,
                    "gradient mismatch at dim {dim}"
                );
                let h_fd = fd_hessian(model, &x, step);
                assert!(
                    info.hess.sub(&h_fd).max_abs() / info.hess.max_abs().max(1e-8) <= 1e-5,
                    "hessian mismatch at dim {dim}"
                );
                let hp = info.hprime.as_ref().unwrap();
                let hp_fd = fd_hprime(model, &x, step);
                assert!(
                    hp.sub(&hp_fd).max_abs() / hp.max_abs().max(1e-8) <= 1e-3,
                    "hprime mismatch at dim {dim}"
                );
            }
        }
    }
    check_budget(started, Duration::from_secs(10), "criterion 1");
}

#[test]
fn criterion_02_ridge_fixed_points_on_circle_data() {
    let _guard = serialized();
    let started = Instant::now();
    // n = 1000, r = 3, sigma = 0.5, 25% density threshold, Silverman
    // bandwidth; single-threaded
    let data = circle_data_model(7).sample(1000).unwrap();
    let mut config = SurfConfig::new(1);
    config.threshold_frac = 0.25;
    config.step_tol = 1e-9;
    let est = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| surf(&data, &config).unwrap());
    let non_denoised: Vec<_> = est
        .records
        .iter()
        .filter(|r| !matches!(r.status, PointStatus::Denoised))
        .collect();
    let good = non_denoised
        .iter()
        .filter(|r| {
            matches!(r.status, PointStatus::Converged { .. })
                && r.diagnostics
                    .as_ref()
                    .map(|d| d.grad_ratio <= 1e-5 && d.lambda_next < 0.0)
                    .unwrap_or(false)
        })
        .count();
    let fraction = good as f64 / non_denoised.len() as f64;
    eprintln!(
        "criterion 2: {good}/{} non-denoised points at ||G||/||g|| <= 1e-5 with negative lambda ({fraction:.4})",
        non_denoised.len()
    );
    assert!(fraction >= 0.99, "fraction {fraction} below 0.99");
    check_budget(started, Duration::from_secs(60), "criterion 2");
}

#[test]
fn criterion_03_surrogate_bias_scaling() {
    let _guard = serialized();
    let started = Instant::now();
    let circle = circle_spec();
    let cfg = BiasConfig::new(vec![0.4, 0.2, 0.1]);
    let report = bias_experiment(&circle, &cfg).unwrap();
    assert!(report.cells.iter().all(|c| !c.failed));
    let slope = report.fitted_slope.expect("3 settings").slope;
    eprintln!("criterion 3: bias log-log slope {slope:.4}");
    assert!(
        (1.5..=2.5).contains(&slope),
        "slope {slope} outside [1.5, 2.5]"
    );
    // strictly inward recovered radii for every sigma
    for &sigma in &[0.4, 0.2, 0.1] {
        let oracle = manifold_oracle(&circle, ManifoldWeight::Uniform, sigma, 1024).unwrap();
        let starts = manifold_probes(&circle, 128).unwrap();
        let est = scms_run(&oracle, &starts, &SurfConfig::new(1)).unwrap();
        let ridge = est.ridge_points();
        assert!(!ridge.is_empty());
        for p in ridge.iter() {
            assert!(
                norm(p) < 3.0,
                "sigma {sigma}: destination at radius {} not inward",
                norm(p)
            );
        }
    }
    check_budget(started, Duration::from_secs(120), "criterion 3");
}

#[test]
fn criterion_04_consistency_in_sample_size() {
    let _guard = serialized();
    let started = Instant::now();
    let model = circle_data_model(11);
    let cfg = RateConfig {
        n_grid: vec![500, 2000, 8000],
        replications: 5,
        surf: {
            let mut c = SurfConfig::new(1);
            c.bandwidth = Some(0.4);
            c.threshold_frac = 0.25;
            c
        },
        reference: RateReference::OracleRidge {
            quadrature: 512,
            starts: 512,
        },
        delta_restrict: None,
    };
    let report = rate_experiment(&model, &cfg).unwrap();
    let medians: Vec<f64> = report
        .summary
        .iter()
        .map(|s| s.median.expect("no failed settings"))
        .collect();
    let slope = report.fitted_slope.expect("3 settings").slope;
    eprintln!("criterion 4: medians {medians:?}, slope {slope:.4}");
    assert!(
        medians[0] > medians[1] && medians[1] > medians[2],
        "medians not strictly decreasing: {medians:?}"
    );
    assert!(slope < 0.0, "slope {slope} not negative");
    assert!(
        (0.2..=0.8).contains(&slope.abs()),
        "|slope| {} outside [0.2, 0.8]",
        slope.abs()
    );
    check_budget(started, Duration::from_secs(600), "criterion 4");
}

#[test]
fn criterion_05_stability_under_weight_jitter() {
    let _guard = serialized();
    let started = Instant::now();
    let circle = circle_spec();
    let m = 512;
    let sigma = 0.5;
    let positions = manifold_probes(&circle, m).unwrap();
    let build = |delta: f64| -> DensityModel {
        let raw: Vec<f64> = (0..m)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                1.0 + delta * (3.0 * theta).cos()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        DensityModel::mixture(
            raw.iter()
                .zip(positions.iter())
                .map(|(&w, p)| GaussComponent::isotropic(w / total, p.to_vec(), sigma))
                .collect(),
        )
        .unwrap()
    };
    let starts = manifold_probes(&circle, 256).unwrap();
    let mut config = SurfConfig::new(1);
    config.step_tol = 1e-10;
    let ridge_of = |model: &DensityModel| -> PointCloud {
        scms_run(model, &starts, &config).unwrap().ridge_points()
    };
    let base = ridge_of(&build(0.0));
    let mut distances = Vec::new();
    for delta in [0.04, 0.02, 0.01] {
        let jittered = ridge_of(&build(delta));
        distances.push(hausdorff(&base, &jittered).unwrap());
    }
    eprintln!("criterion 5: Hausdorff vs jitter {distances:?}");
    assert!(
        distances[0] > distances[1] && distances[1] > distances[2],
        "not monotone decreasing: {distances:?}"
    );
    check_budget(started, Duration::from_secs(60), "criterion 5");
}

#[test]
fn criterion_06_solver_cross_validation() {
    let _guard = serialized();
    let started = Instant::now();
    let circle_oracle = manifold_oracle(&circle_spec(), ManifoldWeight::Uniform, 0.5, 512).unwrap();
    let gauss = aniso_gaussian();
    let mut rng = SplitMix64::new(606);
    let scms_destination = |model: &DensityModel, x0: &[f64]| -> Vec<f64> {
        let mut x = x0.to_vec();
        for _ in 0..3000 {
            let next = scms_step(model, &x, 1, true).unwrap();
            let moved = dist(&next, &x);
            x = next;
            if moved <= 1e-11 {
                break;
            }
        }
        x
    };
    for model_idx in 0..2 {
        let model = if model_idx == 0 {
            &circle_oracle
        } else {
            &gauss
        };
        for trial in 0..50 {
            let x0 = if model_idx == 0 {
                let theta = rng.next_range(0.0, std::f64::consts::TAU);
                let r = rng.next_range(2.5, 3.5);
                vec![r * theta.cos(), r * theta.sin()]
            } else {
                vec![rng.next_range(-3.0, 3.0), rng.next_range(0.1, 1.5)]
            };
            let via_scms = scms_destination(model, &x0);
            let curve = integral_curve(model, &x0, 1, true, 0.005, 1e-9, 20.0).unwrap();
            assert!(
                !curve.truncated,
                "model {model_idx} trial {trial} truncated"
            );
            let gap = dist(&via_scms, &curve.destination);
            assert!(
                gap <= 1e-3,
                "model {model_idx} trial {trial}: solver gap {gap}"
            );
        }
    }
    check_budget(started, Duration::from_secs(60), "criterion 6");
}

#[test]
fn criterion_07_quadratic_behavior_along_paths() {
    let _guard = serialized();
    let started = Instant::now();
    let model = manifold_oracle(&circle_spec(), ManifoldWeight::Uniform, 0.5, 512).unwrap();
    let mut rng = SplitMix64::new(707);
    let mut checked = 0;
    while checked < 20 {
        let theta = rng.next_range(0.0, std::f64::consts::TAU);
        let r = rng.next_range(2.55, 3.45);
        let x0 = [r * theta.cos(), r * theta.sin()];
        let curve = integral_curve(&model, &x0, 1, false, 0.005, 1e-9, 10.0).unwrap();
        if curve.samples.len() < 3 {
            continue; // started too close to the ridge
        }
        // beta = |lambda_{d+1}| at the destination, asserted at beta/8:
        // safety factor 0.5 on the (beta/4) lower bound
        let diag = path_diagnostics(&curve, &model, 0.5).unwrap();
        assert_eq!(*diag.xi.last().unwrap(), 0.0, "xi(0) must be exactly 0");
        assert!(diag.monotone, "xi not monotone along path {checked}");
        assert!(
            diag.quadratic_lb_ok,
            "quadratic lower bound failed on path {checked}"
        );
        checked += 1;
    }
    check_budget(started, Duration::from_secs(60), "criterion 7");
}

#[test]
fn criterion_08_matrix_perturbation_suite() {
    let _guard = serialized();
    let started = Instant::now();
    let mut rng = SplitMix64::new(808);
    for dim in 2..=6usize {
        let mut done = 0;
        while done < 500 {
            let mut h = Mat::zeros(dim, dim);
            for i in 0..dim {
                for j in i..dim {
                    let v = rng.next_range(-2.0, 2.0);
                    h[(i, j)] = v;
                    h[(j, i)] = v;
                }
            }
            let d = 1 + (rng.next_u64() % (dim as u64 - 1)) as usize;
            let frame = spectral_frame(&vec![0.0; dim], &h, d).unwrap();
            if frame.eigengap < 1e-3 {
                continue;
            }
            let mut e = Mat::zeros(dim, dim);
            for i in 0..dim {
                for j in i..dim {
                    let v = rng.next_range(-1.0, 1.0);
                    e[(i, j)] = v;
                    e[(j, i)] = v;
                }
            }
            let scale = 0.25 * frame.eigengap * rng.next_f64() / operator_norm_sym(&e).max(1e-12);
            let ht = h.add(&e.scale(scale));
            let b = perturbation_bounds(&h, &ht, d).unwrap();
            assert!(
                b.weyl_lhs <= b.weyl_rhs + 1e-12,
                "Weyl violated at dim {dim}: {} > {}",
                b.weyl_lhs,
                b.weyl_rhs
            );
            assert!(
                b.dk_lhs <= b.dk_rhs + 1e-12,
                "Davis-Kahan violated at dim {dim}: {} > {}",
                b.dk_lhs,
                b.dk_rhs
            );
            done += 1;
        }
    }
    check_budget(started, Duration::from_secs(10), "criterion 8");
}

#[test]
fn criterion_09_bandwidth_phase_transition() {
    let _guard = serialized();
    let started = Instant::now();
    let data = circle_data_model(7).sample(1000).unwrap();
    let silverman = silverman_bandwidth(&data).unwrap();
    let h_grid = vec![silverman, silverman / 2.0, silverman / 4.0, silverman / 8.0];
    let mut config = SurfConfig::new(1);
    config.threshold_frac = 0.25;
    let truth = circle_spec();
    let report = bandwidth_sweep(&data, &h_grid, &config, 0.25, Some(&truth)).unwrap();
    let comps: Vec<usize> = report
        .cells
        .iter()
        .map(|c| c.components.expect("no failed cells"))
        .collect();
    eprintln!("criterion 9: silverman {silverman:.4}, components {comps:?}");
    assert_eq!(
        comps[0], 1,
        "expected one component at the Silverman bandwidth"
    );
    assert!(
        comps[3] > 1,
        "expected fragmentation at Silverman/8, got {} component(s)",
        comps[3]
    );
    check_budget(started, Duration::from_secs(180), "criterion 9");
}

#[test]
fn criterion_10_principal_component_reduction() {
    let _guard = serialized();
    let started = Instant::now();
    let model = aniso_gaussian();
    let mut rng = SplitMix64::new(1010);
    let mut mesh = PointCloud::empty(2).unwrap();
    for _ in 0..100 {
        mesh.push(&[rng.next_range(-3.0, 3.0), rng.next_range(-1.5, 1.5)])
            .unwrap();
    }
    let est = scms_run(&model, &mesh, &SurfConfig::new(1)).unwrap();
    let mut worst = 0.0_f64;
    for r in &est.records {
        assert!(matches!(r.status, PointStatus::Converged { .. }));
        worst = worst.max(r.destination.as_ref().unwrap()[1].abs());
    }
    eprintln!("criterion 10: max |minor coordinate| {worst:e}");
    assert!(worst <= 1e-5, "max |minor coordinate| {worst} above 1e-5");
    check_budget(started, Duration::from_secs(5), "criterion 10");
}

#[test]
fn criterion_11_cli_determinism() {
    let _guard = serialized();
    let dir = std::env::temp_dir().join(format!("ridges-acceptance-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let bin = env!("CARGO_BIN_EXE_ridges");
    let run = |args: &[&str]| {
        let out = Command::new(bin).args(args).output().expect("binary runs");
        assert!(
            out.status.success(),
            "command {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    let artifacts = |tag: &str, threads: &str| -> Vec<PathBuf> {
        let points = dir.join(format!("p{tag}.csv"));
        let ridge = dir.join(format!("r{tag}.csv"));
        let rate = dir.join(format!("rate{tag}.json"));
        run(&[
            "--threads",
            threads,
            "generate",
            "--model",
            "circle",
            "--sigma",
            "0.5",
            "--eta",
            "0.95",
            "--n",
            "600",
            "--seed",
            "4242",
            "--out",
            points.to_str().unwrap(),
        ]);
        run(&[
            "--threads",
            threads,
            "surf",
            "--input",
            points.to_str().unwrap(),
            "--threshold",
            "0.25",
            "--out",
            ridge.to_str().unwrap(),
        ]);
        run(&[
            "--threads",
            threads,
            "rate",
            "--n-grid",
            "80,160,320",
            "--reps",
            "2",
            "--seed",
            "99",
            "--bandwidth",
            "0.5",
            "--out",
            rate.to_str().unwrap(),
        ]);
        vec![
            points.clone(),
            dir.join(format!("p{tag}.csv.manifest.json")),
            ridge.clone(),
            dir.join(format!("r{tag}.csv.diagnostics.json")),
            rate,
        ]
    };
    let first = artifacts("1", "1");
    let second = artifacts("2", "2");
    for (a, b) in first.iter().zip(&second) {
        assert_eq!(
            fs::read(a).unwrap(),
            fs::read(b).unwrap(),
            "artifacts differ: {a:?} vs {b:?}"
        );
    }
    eprintln!(
        "criterion 11: {} artifact pairs byte-identical",
        first.len()
    );
}
