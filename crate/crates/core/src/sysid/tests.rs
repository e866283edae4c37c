use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use super::benchmark::{random_feedback_free_system, TABLE_DIMS};
use super::*;
use crate::fixtures;
use crate::simulation::{SimConfig, Simulate};

const SMALL: Dims = Dims { n: 3, p1: 1, p2: 2, p: 1, q: 1 };

fn small_system() -> TriangularJointModel {
    random_feedback_free_system(SMALL, 17).unwrap()
}

fn par_for(case: Case, sys: &TriangularJointModel) -> Parameterization {
    let dims = Dims { n: sys.n(), p1: sys.p1, p2: sys.p2, p: sys.p, q: sys.q };
    build_parameterization(case, dims, Some(FixedBlocks::of(sys))).unwrap()
}

fn data(sys: &TriangularJointModel, n: usize, seed: u64) -> Trajectory {
    sys.assemble().unwrap().simulate(&SimConfig::new(n, seed)).unwrap()
}

fn gaussian(len: usize, scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..len).map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect()
}

fn entry_par() -> Parameterization {
    entry_parameterization(fixtures::exact_triangular(), 0, 1).unwrap()
}

#[test]
fn table_parameter_counts() {
    let fixed = FixedBlocks {
        a22: Matrix::zeros(6, 6),
        k22: Matrix::zeros(6, 2),
        c22: Matrix::zeros(2, 6),
        q22: Matrix::identity(2, 2),
    };
    let count = |case| build_parameterization(case, TABLE_DIMS, Some(fixed.clone())).unwrap().theta_dim;
    assert_eq!(count(Case::PredFull), 156);
    assert_eq!(count(Case::GenFull), 150);
    assert_eq!(count(Case::PredPartial), 96);
    assert_eq!(count(Case::GenPartial), 90);
}

#[test]
fn partial_cases_need_fixed_blocks() {
    for case in [Case::PredPartial, Case::GenPartial] {
        assert!(matches!(build_parameterization(case, TABLE_DIMS, None), Err(Error::MissingFixedBlocks)));
    }
    let wrong = FixedBlocks {
        a22: Matrix::zeros(5, 5),
        k22: Matrix::zeros(6, 2),
        c22: Matrix::zeros(2, 6),
        q22: Matrix::identity(2, 2),
    };
    assert!(build_parameterization(Case::GenPartial, TABLE_DIMS, Some(wrong)).is_err());
    assert!(build_parameterization(Case::PredFull, TABLE_DIMS, None).is_ok());
}

#[test]
fn encode_decode_round_trip() {
    let sys = random_feedback_free_system(TABLE_DIMS, 3).unwrap();
    for (i, case) in Case::TABLE.into_iter().enumerate() {
        let par = par_for(case, &sys);
        let theta = gaussian(par.theta_dim, 1.0, i as u64);
        let model = par.decode(&theta).unwrap();
        assert_eq!(par.encode(&model).unwrap(), theta, "{}", case.name());
        assert_eq!(par.decode(&par.encode(&model).unwrap()).unwrap(), model);
    }
    let par = entry_par();
    let m = par.decode(&[0.3]).unwrap();
    assert_eq!(par.encode(&m).unwrap(), vec![0.3]);
}

#[test]
fn decoding_rejects_bad_vectors() {
    let par = entry_par();
    assert!(par.decode(&[f64::NAN]).is_err());
    assert!(par.decode(&[1.0, 2.0]).is_err());
    let data = data(&fixtures::exact_triangular(), 50, 1);
    assert_eq!(objective(&par, &[f64::INFINITY], &data), f64::INFINITY);
}

#[test]
fn known_triangular_models_encode_to_themselves() {
    let sys = small_system();
    for case in [Case::PredPartial, Case::GenPartial] {
        let par = par_for(case, &sys);
        let theta = par.encode_triangular(&sys).unwrap();
        match par.decode(&theta).unwrap() {
            ParamModel::PartialEstimator(t) => {
                assert_eq!(t.a(), sys.a());
                assert_eq!(t.q12, sys.q12);
            }
            ParamModel::Generator { a, k, c } => {
                assert_eq!((a, k, c), (sys.a(), sys.k(), sys.c()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

#[test]
fn single_entry_estimator_is_affine_in_theta() {
    let par = entry_parameterization(fixtures::triangular_printed(), 0, 1).unwrap();
    let data = data(&fixtures::exact_triangular(), 10, 1);
    for theta in [-1.0, 0.0, 0.81, 2.0] {
        let m = par.decode(&[theta]).unwrap();
        let (_, est) = estimator_for(&par, &m, &data).unwrap();
        assert!((est.atil[(0, 1)] - (theta - 2.48)).abs() < 0.02);
        // (K12 + K11 D₀) C22 = (−0.71 − 0.7)(−1.76) exactly.
        assert!((est.atil[(0, 1)] - (theta - 2.4816)).abs() < 1e-12);
    }
}

#[test]
fn lower_left_entry_is_not_a_parameter() {
    assert!(entry_parameterization(fixtures::exact_triangular(), 1, 0).is_err());
}

#[test]
fn entry_objective_at_truth_matches_closed_form() {
    let sys = fixtures::exact_triangular();
    let par = entry_par();
    let data = data(&sys, 100_000, 12);
    let got = objective(&par, &[0.81], &data);
    let expected = estimator::error_statistics(&sys).unwrap().residual_cov.trace();
    assert!((got - expected).abs() < 0.05 * expected, "{got} vs {expected}");
}

#[test]
fn zero_predictor_objective_is_second_moment() {
    let sys = small_system();
    let par = par_for(Case::PredFull, &sys);
    let data = data(&sys, 500, 3);
    let got = objective(&par, &vec![0.0; par.theta_dim], &data);
    assert!((got - data.y.second_moment().trace()).abs() < 1e-12 * got);
}

#[test]
fn unstable_estimator_is_penalized() {
    let sys = small_system();
    let par = par_for(Case::PredFull, &sys);
    let data = data(&sys, 200, 3);
    let mut theta = vec![0.0; par.theta_dim];
    theta[0] = 1.5;
    let stable = {
        let mut th = theta.clone();
        th[0] = STABILITY_LIMIT;
        objective(&par, &th, &data)
    };
    let got = objective(&par, &theta, &data);
    assert!((got - stable - STABILITY_PENALTY * (1.5 - STABILITY_LIMIT)).abs() < 1e-9);
    assert!(fit_loss(&par, &theta, &data).is_none());
}

fn check_gradient(par: &Parameterization, theta: &[f64], data: &Trajectory) {
    let (_, grad) = fit_loss(par, theta, data).expect("stable point");
    let h = 1e-6;
    for i in 0..theta.len() {
        let mut up = theta.to_vec();
        let mut down = theta.to_vec();
        up[i] += h;
        down[i] -= h;
        let fd = (fit_loss(par, &up, data).unwrap().0 - fit_loss(par, &down, data).unwrap().0) / (2.0 * h);
        let scale = 1.0 + fd.abs();
        assert!((grad[i] - fd).abs() < 1e-5 * scale, "{} θ[{i}]: {} vs {fd}", par.case.name(), grad[i]);
    }
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let sys = small_system();
    let data = data(&sys, 300, 9);
    for (i, case) in Case::TABLE.into_iter().enumerate() {
        let par = par_for(case, &sys);
        let theta = gaussian(par.theta_dim, 0.2, 40 + i as u64);
        check_gradient(&par, &theta, &data);
    }
    check_gradient(&entry_par(), &[0.5], &self::data(&fixtures::exact_triangular(), 300, 2));
}

#[test]
fn one_parameter_identification_recovers_truth() {
    let sys = fixtures::exact_triangular();
    let par = entry_par();
    let cfg = IdentifyConfig { restarts: 0, initial: Some(vec![0.0]), ..IdentifyConfig::default() };
    let fit = identify(&par, &data(&sys, 1000, 5), &cfg).unwrap();
    assert!((fit.theta[0] - 0.81).abs() < 0.1, "{}", fit.theta[0]);
    assert!(fit.converged);
    assert!(!fit.overparameterized);
}

#[test]
fn start_at_exact_fit_is_stationary() {
    let sys = fixtures::exact_triangular();
    let par = entry_par();
    let mut data = data(&sys, 400, 5);
    let est = estimator::synthesize(&sys).unwrap();
    data.y = estimator::filter(&est, &data.w, None).unwrap();
    let cfg = IdentifyConfig { restarts: 0, initial: Some(vec![0.81]), ..IdentifyConfig::default() };
    let fit = identify(&par, &data, &cfg).unwrap();
    assert_eq!(fit.iterations, 0);
    assert_eq!(fit.theta, vec![0.81]);
    assert!(fit.training_mse < 1e-20);
}

#[test]
fn infeasible_starts_fail() {
    let par = entry_par();
    let data = data(&fixtures::exact_triangular(), 50, 1);
    let cfg = IdentifyConfig { restarts: 0, initial: Some(vec![0.81]), ..IdentifyConfig::default() };
    let par_unstable = entry_parameterization(fixtures::exact_triangular(), 0, 0).unwrap();
    let bad = IdentifyConfig { initial: Some(vec![1.5]), ..cfg.clone() };
    assert!(matches!(identify(&par_unstable, &data, &bad), Err(Error::IdentificationFailure { .. })));
    assert!(identify(&par, &data, &cfg).is_ok());
}

#[test]
fn every_case_learns_a_small_system() {
    let sys = small_system();
    let train = data(&sys, 2000, 21);
    let valid = data(&sys, 20_000, 22);
    let optimal = estimator::synthesize(&sys).unwrap();
    let (best, _) = validate_estimator(&optimal, &valid, 100).unwrap();
    for case in Case::TABLE {
        let par = par_for(case, &sys);
        let fit = identify(&par, &train, &IdentifyConfig { seed: 4, ..IdentifyConfig::default() }).unwrap();
        let (mse, vaf) = validate_estimator(&fit.estimator, &valid, 100).unwrap();
        assert!(mse >= best * 0.98, "{}: {mse} < {best}", case.name());
        assert!(mse <= best * 1.1, "{}: {mse} vs optimal {best}", case.name());
        assert_eq!(vaf.len(), 1);
        assert!(fit.training_mse.is_finite());
    }
}

#[test]
fn truth_is_locally_optimal_at_large_n() {
    let sys = small_system();
    let data = data(&sys, 10_000, 30);
    let par = par_for(Case::PredPartial, &sys);
    let truth = par.encode_triangular(&sys).unwrap();
    let at_truth = objective(&par, &truth, &data);
    for k in 0..20 {
        let delta = gaussian(par.theta_dim, 0.05, 100 + k);
        let moved: Vec<f64> = truth.iter().zip(&delta).map(|(a, b)| a + b).collect();
        let there = objective(&par, &moved, &data);
        assert!(at_truth <= there + 3.0 * at_truth / (data.len() as f64).sqrt(), "{at_truth} vs {there}");
    }
}

#[test]
fn tiny_training_set_is_flagged() {
    let sys = small_system();
    let par = par_for(Case::PredFull, &sys);
    let train = data(&sys, 10, 1);
    let fit = identify(&par, &train, &IdentifyConfig { restarts: 1, ..IdentifyConfig::default() }).unwrap();
    assert!(fit.overparameterized);
}
