mod common;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stagewise::baseline::GbConfig;
use stagewise::engine::{sbdr_fit, FitConfig, MethodConfig};
use stagewise::simlab::{
    evaluate, gen_covariates, replicate_data, run_scenario, CovariateDesign, Method, MetricsRow, ScenarioSpec,
    SimData, Truth,
};
use stagewise::{Family, ParamVector};

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn independent_covariates() {
    let x = gen_covariates(10_000, 8, 0.0, 1).unwrap();
    for i in 0..8 {
        for j in 0..i {
            let c = corr(&x.column(i).to_vec(), &x.column(j).to_vec());
            assert!(c.abs() < 0.1, "({i},{j}) {c}");
        }
    }
}

#[test]
fn neighbouring_columns_correlate_before_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = CovariateDesign::new(10, 0.7, &mut rng).unwrap();
    let x = d.draw(10_000, &mut rng);
    // Output column j holds original column perm[j]; undo that.
    let mut orig = [0; 10];
    for (j, &p) in d.perm().iter().enumerate() {
        orig[p] = j;
    }
    for p in 1..10 {
        let c = corr(&x.column(orig[p]).to_vec(), &x.column(orig[p - 1]).to_vec());
        assert!((c - 0.7).abs() < 0.05, "neighbours {p}: {c}");
    }
    let c = corr(&x.column(orig[0]).to_vec(), &x.column(orig[2]).to_vec());
    assert!((c - 0.49).abs() < 0.05, "lag 2: {c}");
}

fn constant_design(n: usize, value: f64) -> Array2<f64> {
    Array2::from_elem((n, 6), value)
}

#[test]
fn normal_at_zero_is_standard() {
    let truth = Truth::standard(Family::Normal).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sim = SimData::generate(&truth, constant_design(100_000, 0.0), &mut rng).unwrap();
    let n = sim.n() as f64;
    let m = sim.y.iter().sum::<f64>() / n;
    let v = sim.y.iter().map(|y| (y - m).powi(2)).sum::<f64>() / n;
    assert!(m.abs() < 0.01 && (v - 1.0).abs() < 0.015, "{m} {v}");
}

#[test]
fn zanbi_zero_share_at_origin() {
    let truth = Truth::standard(Family::ZaNegBin).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sim = SimData::generate(&truth, constant_design(100_000, 0.0), &mut rng).unwrap();
    let zeros = sim.y.iter().filter(|y| **y == 0.0).count() as f64 / sim.n() as f64;
    let expected = 1.0 / (1.0 + 0.5f64.exp());
    assert!((expected - 0.3775).abs() < 1e-4);
    assert!((zeros - expected).abs() < 0.005, "{zeros}");
}

#[test]
fn gamma_variance_per_design_point() {
    let truth = Truth::standard(Family::Gamma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for v in [-0.5, 0.0, 0.4] {
        let raw = constant_design(50_000, v);
        let sim = SimData::generate(&truth, raw, &mut rng).unwrap();
        let theta = sim.theta(Family::Gamma, 0);
        let (mu, sigma) = (theta.0[0], theta.0[1]);
        let n = sim.n() as f64;
        let m = sim.y.iter().sum::<f64>() / n;
        let var = sim.y.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1.0);
        let target = mu * mu * sigma * sigma;
        assert!((m - mu).abs() / mu < 0.02, "mean {m} vs {mu}");
        assert!((var - target).abs() / target < 0.06, "var {var} vs {target}");
    }
}

fn small_spec(family: Family) -> ScenarioSpec {
    ScenarioSpec {
        family,
        nobs: 300,
        nnoise: 4,
        reps: 3,
        n_valid: 500,
        methods: vec![Method::BsCf, Method::Gb],
        fit: FitConfig { t_max: 200, kappa_clamp: true, ..FitConfig::default() },
        gb: GbConfig { t_max: 100, folds: 3, ..GbConfig::default() },
        crps_draws: 50,
        seed: 17,
        ..ScenarioSpec::default()
    }
}

#[test]
fn truth_coefficients_have_zero_rmse() {
    let spec = small_spec(Family::Normal);
    let (truth, train, valid) = replicate_data(&spec, 0).unwrap();
    let ds = train.dataset(Family::Normal).unwrap();
    let mut fit = sbdr_fit(Family::Normal, &ds, &FitConfig { t_max: 5, refit: false, ..FitConfig::default() }).unwrap();
    // Express the truth on the standardised scale.
    let st = fit.stats.clone();
    for (k, eff) in truth.effects.iter().enumerate() {
        let b = &mut fit.coefficients.beta[k];
        b.iter_mut().for_each(|v| *v = 0.0);
        b[0] = truth.intercepts[k];
        for &(j, c) in eff {
            b[j + 1] = c * st.sd[j];
            b[0] += c * st.mean[j];
        }
    }
    let ev = evaluate(&fit, &truth, &valid, 50, 0).unwrap();
    assert!(ev.rmse.iter().all(|r| *r < 1e-12), "{:?}", ev.rmse);
    assert_eq!(ev.tp, vec![4, 4]);
    assert_eq!(ev.fp, vec![0, 0]);
}

#[test]
fn intercept_only_rmse_is_spread_around_constant() {
    let spec = small_spec(Family::Normal);
    let (truth, train, valid) = replicate_data(&spec, 1).unwrap();
    let ds = train.dataset(Family::Normal).unwrap();
    let cfg = FitConfig { kappa: stagewise::engine::Kappa::Fixed(0.999), t_max: 5, refit: false, ..FitConfig::default() };
    let fit = sbdr_fit(Family::Normal, &ds, &cfg).unwrap();
    assert!(fit.final_state().df() == 0);
    let ev = evaluate(&fit, &truth, &valid, 50, 0).unwrap();
    let b0 = fit.final_state().beta[0][0];
    let n = valid.n() as f64;
    let oracle = (valid.eta[0].iter().map(|e| (b0 - e).powi(2)).sum::<f64>() / n).sqrt();
    assert!((ev.rmse[0] - oracle).abs() < 1e-12);
    assert_eq!(ev.tp.iter().sum::<usize>(), 0);
}

fn untimed(rows: &[MetricsRow]) -> Vec<MetricsRow> {
    rows.iter().cloned().map(|mut r| {
        r.elapsed = 0.0;
        r
    }).collect()
}

#[test]
fn scenario_rows_and_reproducibility() {
    let spec = small_spec(Family::ZaNegBin);
    let a = run_scenario(&spec).unwrap();
    assert_eq!(a.rows.len(), 6);
    let order: Vec<(usize, Method)> = a.rows.iter().map(|r| (r.replication, r.method)).collect();
    assert_eq!(order[..2], [(0, Method::BsCf), (0, Method::Gb)]);
    for r in &a.rows {
        assert!(!r.failed, "{:?}", r.error);
        assert!(r.tp <= 10 && r.fp <= 3 * (6 + 4) - 10);
        let truth = Truth::standard(Family::ZaNegBin).unwrap().active();
        for k in 0..3 {
            assert!(r.tp_per[k] <= truth[k].len());
        }
    }
    let b = run_scenario(&spec).unwrap();
    assert_eq!(untimed(&a.rows), untimed(&b.rows));
    assert_eq!(a.summary.len(), 2);
    assert_eq!(a.summary[0].reps, 3);
}

#[test]
fn failed_replications_are_flagged() {
    let spec = ScenarioSpec {
        nobs: 12,
        nnoise: 0,
        reps: 2,
        methods: vec![Method::Gb, Method::Bs],
        gb: GbConfig { folds: 20, t_max: 10, ..GbConfig::default() },
        fit: FitConfig { t_max: 20, ..FitConfig::default() },
        n_valid: 50,
        ..ScenarioSpec::default()
    };
    let res = run_scenario(&spec).unwrap();
    assert_eq!(res.rows.len(), 4);
    assert!(res.rows.iter().filter(|r| r.method == Method::Gb).all(|r| r.failed && r.error.is_some()));
    assert!(res.rows.iter().filter(|r| r.method == Method::Bs).all(|r| !r.failed));
    assert_eq!(res.summary[0].failed, 2);
    assert!(res.summary[0].tp.is_nan());
}

#[test]
fn metrics_csv_has_per_parameter_columns() {
    let spec = ScenarioSpec { reps: 1, methods: vec![Method::Cf], ..small_spec(Family::Gamma) };
    let res = run_scenario(&spec).unwrap();
    let mut buf = Vec::new();
    stagewise::simlab::write_metrics_csv(Family::Gamma, &res.rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let head = text.lines().next().unwrap();
    assert!(head.contains("rmse_mu,rmse_sigma") && head.contains("tp_mu") && head.ends_with("error"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn generated_parameters_follow_the_links() {
    let truth = Truth::standard(Family::ZaNegBin).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let raw = Array2::from_shape_fn((1, 6), |(_, j)| 0.1 * j as f64);
    let sim = SimData::generate(&truth, raw, &mut rng).unwrap();
    let x = |j: usize| 0.1 * j as f64;
    let mu = (0.5 + 0.5 * x(0) - x(2) + 0.75 * x(4) + 0.75 * x(5)).exp();
    let theta: ParamVector = sim.theta(Family::ZaNegBin, 0);
    assert!((theta.0[0] - mu).abs() < 1e-12);
}

/// In a p > n ZANBI design, deselection after cross-validated gradient
/// boosting leaves one parameter without any covariate while correlation
/// filtering finds a true effect for every parameter. Pinned seed.
#[test]
fn deselection_starves_a_parameter_that_filtering_recovers() {
    let spec = ScenarioSpec {
        family: Family::ZaNegBin,
        nobs: 1000,
        nnoise: 1200,
        reps: 1,
        n_valid: 1000,
        methods: vec![Method::VarDes, Method::BsCf],
        gb: GbConfig { t_max: 1000, folds: 5, ..GbConfig::default() },
        crps_draws: 50,
        seed: 0,
        ..ScenarioSpec::default()
    };
    let res = run_scenario(&spec).unwrap();
    let vd = &res.rows[0];
    let cf = &res.rows[1];
    assert_eq!(vd.method, Method::VarDes);
    assert!(!vd.failed && !cf.failed);
    let starved: Vec<usize> = (0..3).filter(|&k| vd.tp_per[k] + vd.fp_per[k] == 0).collect();
    assert_eq!(starved, vec![1], "VarDes per-parameter TP {:?} FP {:?}", vd.tp_per, vd.fp_per);
    assert!(cf.tp_per.iter().all(|&t| t >= 1), "BS+CF TP {:?}", cf.tp_per);
}

#[test]
fn boosting_results_carry_their_config() {
    let spec = small_spec(Family::Normal);
    let (_, train, _) = replicate_data(&spec, 0).unwrap();
    let ds = train.dataset(Family::Normal).unwrap();
    let fit = spec.fit_method(Method::VarDes, &ds, 3).unwrap();
    assert!(matches!(fit.config, MethodConfig::Boosting(_)));
    assert_eq!(fit.method, "VarDes");
}
