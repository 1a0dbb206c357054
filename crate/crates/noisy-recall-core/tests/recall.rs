use noisy_recall_core::generator::{construct_subspace_model, corrupt, sample_external_error};
use noisy_recall_core::recall::{
    cluster_satisfied, constraint_update, intra_cluster_correct, pattern_update, sequential_peeling,
};
use noisy_recall_core::{rng, Cluster, GeneratorSpec, NetworkModel, NoiseSpec, PatternBasis, PeelingLimits, Thresholds};
use proptest::prelude::*;

fn default_model() -> (NetworkModel, PatternBasis) {
    construct_subspace_model(&GeneratorSpec::default()).unwrap()
}

fn thresholds(model: &NetworkModel, phi: f64) -> Thresholds {
    Thresholds::new(0.45, phi, model.eta()).unwrap()
}

#[test]
fn missed_detection_rate_of_a_single_row() {
    let c = Cluster::new(0, vec![0, 1], 1, vec![0.5, -0.5]).unwrap();
    let th = Thresholds::new(0.45, 0.8, 0.5).unwrap();
    let noise = NoiseSpec::internal(0.0, 0.3);
    let mut rng = rng::from_seed(7);
    // h = 0.5 + u stays below 0.45 iff u < -0.05: probability 0.25 / 0.6
    let trials = 200_000;
    let silent = (0..trials).filter(|_| cluster_satisfied(&c, &[2, 1], &th, &noise, &mut rng)).count();
    let rate = silent as f64 / trials as f64;
    assert!((rate - 0.25 / 0.6).abs() < 0.01, "rate {rate}");
    // a clean state can never fire since nu < psi
    assert!((0..10_000).all(|_| cluster_satisfied(&c, &[3, 3], &th, &noise, &mut rng)));
}

#[test]
fn toy_cluster_corrects_one_error() {
    // x0 = x1 = x2 as a cycle of three rows; every member has degree two
    let w = vec![0.5, -0.5, 0.0, 0.0, 0.5, -0.5, 0.5, 0.0, -0.5];
    let c = Cluster::new(0, vec![0, 1, 2], 3, w).unwrap();
    let th = Thresholds::new(0.45, 0.99, 0.5).unwrap();
    let noise = NoiseSpec::noiseless();
    let mut rng = rng::from_seed(1);
    let truth = [4u32, 4, 4];
    for j in 0..3 {
        for d in [-1i32, 1] {
            let mut x = truth;
            x[j] = (x[j] as i32 + d) as u32;
            assert!(intra_cluster_correct(&c, &mut x, 8, &th, &noise, 1, &mut rng));
            assert_eq!(x, truth, "error at {j} ({d})");
        }
    }
    // two errors of the same sign look like one error of the opposite sign
    let mut x = [5u32, 5, 4];
    intra_cluster_correct(&c, &mut x, 8, &th, &noise, 10, &mut rng);
    assert_eq!(x, [5, 5, 5]);
}

#[test]
fn single_error_per_cluster_is_corrected() {
    let (model, basis) = default_model();
    let th = thresholds(&model, 0.99);
    let noise = NoiseSpec::noiseless();
    let mut rng = rng::from_seed(21);
    let trials = 4000;
    let mut ok = 0;
    let mut local = Vec::new();
    for t in 0..trials {
        let x = basis.sample(&mut rng);
        let c = &model.clusters()[t % model.l()];
        c.gather(&x, &mut local);
        let truth = local.clone();
        let j = rng::index(&mut rng, c.n_members());
        local[j] = if rng::coin(&mut rng, 0.5) { local[j] + 1 } else { local[j] - 1 };
        let sat = intra_cluster_correct(c, &mut local, model.q(), &th, &noise, 10, &mut rng);
        ok += (sat && local == truth) as usize;
    }
    let rate = ok as f64 / trials as f64;
    assert!(rate >= 0.99, "single error success {rate}");
}

#[test]
fn two_errors_fail_far_more_often_than_one() {
    let (model, basis) = default_model();
    let th = thresholds(&model, 0.99);
    let noise = NoiseSpec::noiseless();
    let mut rng = rng::from_seed(22);
    let trials = 2000;
    let mut fails = [0usize; 2];
    let mut local = Vec::new();
    for (e, fail) in fails.iter_mut().enumerate() {
        for t in 0..trials {
            let x = basis.sample(&mut rng);
            let c = &model.clusters()[t % model.l()];
            c.gather(&x, &mut local);
            let truth = local.clone();
            for j in rng::sample_distinct(&mut rng, c.n_members(), e + 1) {
                local[j] = if rng::coin(&mut rng, 0.5) { local[j] + 1 } else { local[j] - 1 };
            }
            intra_cluster_correct(c, &mut local, model.q(), &th, &noise, 10, &mut rng);
            *fail += (local != truth) as usize;
        }
    }
    assert!(fails[1] > 10 * fails[0].max(1), "failures {fails:?}");
}

#[test]
fn stored_pattern_is_a_fixed_point_under_safe_noise() {
    let (model, basis) = default_model();
    let th = thresholds(&model, 0.8);
    let noise = NoiseSpec::internal(0.4, 0.3);
    assert!(th.is_safe(&noise));
    let mut rng = rng::from_seed(3);
    for _ in 0..50 {
        let x = basis.sample(&mut rng);
        let out = sequential_peeling(&model, &x, &x, &th, &noise, PeelingLimits::default(), &mut rng);
        assert_eq!(out.final_state, x);
        assert!(!out.declared_failure);
        assert_eq!(out.outer_iterations, 1);
        assert!(out.per_cluster_converged.iter().all(|&c| c));
    }
}

#[test]
fn success_is_monotone_in_the_outer_budget() {
    let (model, basis) = default_model();
    let th = thresholds(&model, 0.8);
    let noise = NoiseSpec::new(0.3, 0.2, 0.1, 1).unwrap();
    let budgets = [1, 2, 3, 5, 10, 20, 40];
    for trial in 0..30u64 {
        let mut prev = false;
        for &t_outer in &budgets {
            // identical streams make shorter runs exact prefixes of longer ones
            let mut rng = rng::stream(9, 0, trial);
            let x = basis.sample(&mut rng);
            let z = sample_external_error(model.n(), &noise, &mut rng);
            let y = corrupt(&x, &z, model.q());
            let limits = PeelingLimits { t_max: 10, t_outer };
            let out = sequential_peeling(&model, &x, &y, &th, &noise, limits, &mut rng);
            let success = !out.declared_failure;
            assert!(success || !prev, "trial {trial}: success lost at T = {t_outer}");
            prev = success;
        }
    }
}

#[test]
fn identical_streams_give_identical_outcomes() {
    let (model, basis) = default_model();
    let th = thresholds(&model, 0.8);
    let noise = NoiseSpec::new(0.2, 0.2, 0.125, 1).unwrap();
    let run = || {
        let mut rng = rng::stream(5, 3, 8);
        let x = basis.sample(&mut rng);
        let z = sample_external_error(model.n(), &noise, &mut rng);
        let y = corrupt(&x, &z, model.q());
        sequential_peeling(&model, &x, &y, &th, &noise, PeelingLimits::default(), &mut rng)
    };
    assert_eq!(run(), run());
}

#[test]
fn noiseless_success_ends_on_a_zero_syndrome_state() {
    let (model, basis) = default_model();
    let th = thresholds(&model, 0.99);
    let noise = NoiseSpec::new(0.0, 0.0, 0.1, 1).unwrap();
    let mut rng = rng::from_seed(17);
    for _ in 0..40 {
        let x = basis.sample(&mut rng);
        let z = sample_external_error(model.n(), &noise, &mut rng);
        let y = corrupt(&x, &z, model.q());
        let out = sequential_peeling(&model, &x, &y, &th, &noise, PeelingLimits::default(), &mut rng);
        assert_eq!(out.symbol_errors, out.final_state.iter().zip(&x).filter(|(a, b)| a != b).count());
        assert_eq!(out.pattern_error, out.symbol_errors > 0);
        if !out.declared_failure {
            assert!(model.max_syndrome(&out.final_state) < th.psi);
        }
    }
}

proptest! {
    #[test]
    fn pattern_update_moves_at_most_one_step(x in 0u32..16, g in -3.0f64..3.0, phi in 0.05f64..1.0) {
        let v = pattern_update(x, g, phi, 16);
        prop_assert!(v < 16);
        prop_assert!((v as i64 - x as i64).abs() <= 1);
        if g.abs() < phi {
            prop_assert_eq!(v, x);
        }
    }

    #[test]
    fn constraint_update_is_a_three_level_quantizer(h in -3.0f64..3.0, psi in 0.05f64..1.0) {
        let y = constraint_update(h, psi);
        prop_assert_eq!(y, if h >= psi { 1 } else if h < -psi { -1 } else { 0 });
    }

    #[test]
    fn unsatisfied_clusters_keep_their_state(seed in 0u64..1000) {
        // a cluster whose correction fails must not write into the global state
        let c = Cluster::new(0, vec![0, 1], 1, vec![0.5, -0.5]).unwrap();
        let model = NetworkModel::new(2, 4, 1, 0.5, vec![c]).unwrap();
        let th = Thresholds::new(0.45, 0.99, 0.5).unwrap();
        let mut rng = rng::from_seed(seed);
        let limits = PeelingLimits { t_max: 1, t_outer: 1 };
        // saturated at both ends: no update can satisfy the row
        let out = sequential_peeling(&model, &[3, 0], &[3, 0], &th, &NoiseSpec::noiseless(), limits, &mut rng);
        prop_assert!(out.declared_failure);
        prop_assert_eq!(out.final_state, vec![3, 0]);
    }
}
