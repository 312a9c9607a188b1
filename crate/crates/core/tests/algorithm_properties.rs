use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use randstab::{
    draw_feedback, estimation_error, preset_benchmark, run, run_sf, run_sp, AlgoConfig, Algorithm,
    Arithmetic, Error, NoiseModel, RunSeeds,
};

const BOTH: [Algorithm; 2] = [Algorithm::StochasticFeedback, Algorithm::StochasticParameter];

#[test]
fn episodes_partition_the_horizon() {
    let (plant, costs) = preset_benchmark();
    let noise = NoiseModel::standard(3);
    for algo in BOTH {
        for arithmetic in [Arithmetic::Extended, Arithmetic::Double] {
            let cfg = AlgoConfig::new(algo, 10, 3, 1.0).with_arithmetic(arithmetic);
            let res = run(&plant, &noise, &costs, &cfg, &RunSeeds::new(1)).unwrap();
            assert_eq!(res.episode_ranges, vec![0..3, 3..6, 6..9]);
            assert_eq!(res.gains_applied.len(), 3);
            assert!(res.episode_estimates.iter().all(|e| e.sample_count == 3));
            assert!(res.theta_hat.is_some());
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let (plant, costs) = preset_benchmark();
    let noise = NoiseModel::standard(3);
    for algo in BOTH {
        let cfg = AlgoConfig::new(algo, 600, 4, 1.0);
        let a = run(&plant, &noise, &costs, &cfg, &RunSeeds::new(42)).unwrap();
        let b = run(&plant, &noise, &costs, &cfg, &RunSeeds::new(42)).unwrap();
        assert_eq!(a.theta_hat, b.theta_hat);
        assert_eq!(a.gains_applied, b.gains_applied);
        assert_eq!(a.redraw_count, b.redraw_count);
    }
}

#[test]
fn episode_draws_use_independent_streams() {
    let (plant, costs) = preset_benchmark();
    let noise = NoiseModel::standard(3);
    for algo in BOTH {
        let cfg = AlgoConfig::new(algo, 90, 3, 1.0);
        let seeds = RunSeeds::new(7);
        let base = run(&plant, &noise, &costs, &cfg, &seeds).unwrap();
        let altered = run(&plant, &noise, &costs, &cfg, &seeds.clone().with_episode_seed(1, 12345)).unwrap();
        assert_eq!(base.gains_applied[0], altered.gains_applied[0]);
        assert_ne!(base.gains_applied[1], altered.gains_applied[1]);
        assert_eq!(base.gains_applied[2], altered.gains_applied[2]);
    }
}

#[test]
fn feedback_gains_are_the_seeded_draws() {
    let (plant, _) = preset_benchmark();
    let noise = NoiseModel::standard(3);
    let seeds = RunSeeds::new(3);
    let res = run_sf(&plant, &noise, &AlgoConfig::new(Algorithm::StochasticFeedback, 30, 3, 2.0), &seeds).unwrap();
    for (i, gain) in res.gains_applied.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds.episode_seed(i));
        assert_eq!(gain, &draw_feedback(&mut rng, 2.0, 3, 3));
    }
}

#[test]
fn parameter_gains_solve_the_sampled_riccati_equations() {
    let (plant, costs) = preset_benchmark();
    let noise = NoiseModel::standard(3);
    let cfg = AlgoConfig::new(Algorithm::StochasticParameter, 60, 3, 1.0);
    let res = run_sp(&plant, &noise, &costs, &cfg, &RunSeeds::new(8)).unwrap();
    assert_eq!(res.sampled_parameters.len(), 3);
    for (theta, gain) in res.sampled_parameters.iter().zip(&res.gains_applied) {
        let sol = randstab::solve_dare(theta, &costs, &Default::default()).unwrap();
        assert!((&sol.gain - gain).norm() < 1e-12);
    }
}

#[test]
fn zero_sigma_parameter_draws_are_rank_deficient() {
    let (plant, costs) = preset_benchmark();
    let cfg = AlgoConfig::new(Algorithm::StochasticParameter, 300, 3, 0.0);
    let err = run_sp(&plant, &NoiseModel::standard(3), &costs, &cfg, &RunSeeds::new(0));
    assert!(matches!(err, Err(Error::RankDeficientBasis { .. })));
}

#[test]
fn single_episode_is_a_config_error() {
    let (plant, costs) = preset_benchmark();
    for algo in BOTH {
        let cfg = AlgoConfig::new(algo, 300, 1, 1.0);
        let err = run(&plant, &NoiseModel::standard(3), &costs, &cfg, &RunSeeds::new(0));
        assert!(matches!(err, Err(Error::Config(_))));
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn longer_horizons_learn_better() {
    let (plant, costs) = preset_benchmark();
    let noise = NoiseModel::standard(3);
    for algo in BOTH {
        let errors = |horizon| {
            median(
                (0..20)
                    .map(|rep| {
                        let cfg = AlgoConfig::new(algo, horizon, 5, 1.0);
                        let res = run(&plant, &noise, &costs, &cfg, &RunSeeds::new(500 + rep)).unwrap();
                        res.theta_hat
                            .map(|t| estimation_error(&t, &plant).unwrap())
                            .unwrap_or(f64::INFINITY)
                    })
                    .collect(),
            )
        };
        let (short, long) = (errors(200), errors(2000));
        assert!(long < short, "{algo}: T=2000 {long} vs T=200 {short}");
    }
}

#[test]
fn arithmetic_modes_agree_before_growth() {
    let (plant, costs) = preset_benchmark();
    let noise = NoiseModel::standard(3);
    for algo in BOTH {
        let cfg = AlgoConfig::new(algo, 45, 3, 0.3);
        let ext = run(&plant, &noise, &costs, &cfg, &RunSeeds::new(21)).unwrap();
        let dbl = run(&plant, &noise, &costs, &cfg.clone().with_arithmetic(Arithmetic::Double), &RunSeeds::new(21)).unwrap();
        let (a, b) = (ext.theta_hat.unwrap(), dbl.theta_hat.unwrap());
        assert!(estimation_error(&a, &b).unwrap() < 1e-8, "{algo}");
    }
}

#[test]
fn large_feedback_scale_overflows() {
    let (plant, costs) = preset_benchmark();
    let cfg = AlgoConfig::new(Algorithm::StochasticFeedback, 1600, 4, 50.0);
    let res = run(&plant, &NoiseModel::standard(3), &costs, &cfg, &RunSeeds::new(2)).unwrap();
    assert!(res.overflow);
    assert!(res.theta_hat.is_none());
    assert!(res.peak_log10_state_norm > 2000.0);
}

#[test]
fn overflow_cap_is_configurable() {
    let (plant, costs) = preset_benchmark();
    let cfg = AlgoConfig::new(Algorithm::StochasticFeedback, 600, 3, 1.0)
        .with_overflow_cap(randstab::StateCap::new(1e3).unwrap());
    let res = run(&plant, &NoiseModel::standard(3), &costs, &cfg, &RunSeeds::new(4)).unwrap();
    if res.overflow {
        assert!(res.peak_log10_state_norm > 3.0);
        assert!(res.episode_ranges.iter().map(|r| r.len()).sum::<usize>() < 600);
    } else {
        assert!(res.peak_log10_state_norm <= 3.0);
    }
}

#[test]
fn draw_feedback_is_column_major() {
    let mut a = ChaCha8Rng::seed_from_u64(0);
    let mut b = ChaCha8Rng::seed_from_u64(0);
    let wide = draw_feedback(&mut a, 1.0, 2, 3);
    let cols: Vec<DMatrix<f64>> = (0..3).map(|_| draw_feedback(&mut b, 1.0, 2, 1)).collect();
    for (j, col) in cols.iter().enumerate() {
        assert_eq!(wide.column(j), col.column(0));
    }
}
