use kklab_core::stochastic::{
    ensemble_moments, integrate_sde, paper_moment_formula, sample_path, time_grid, Convention, NoiseModel,
};
use statrs::distribution::{ContinuousCDF, Normal};

fn noise(sigma2: f64, convention: Convention) -> NoiseModel {
    NoiseModel::new(0.0, sigma2, convention, 20_240_601, 1e-3).unwrap()
}

#[test]
fn undamped_ito_paths_are_log_normal() {
    let (sigma2, t_end) = (0.15, 1.0);
    let noise = noise(sigma2, Convention::Ito);
    let grid = time_grid(noise.dt, t_end);
    let mut logs: Vec<f64> = (0..2000)
        .map(|p| integrate_sde(&noise, 0.0, 1.0, p, &grid).unwrap().k.last().unwrap().ln())
        .collect();
    logs.sort_by(f64::total_cmp);
    // ln k(T) ~ N(−σ²T, 2σ²T) for dk = k dW with ⟨dW²⟩ = 2σ² dt
    let law = Normal::new(-sigma2 * t_end, (2.0 * sigma2 * t_end).sqrt()).unwrap();
    let n = logs.len() as f64;
    let d = logs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = law.cdf(x);
            (f - i as f64 / n).abs().max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max);
    // 1% critical value of the one-sample KS statistic
    assert!(d < 1.63 / n.sqrt(), "KS statistic {d}");
}

#[test]
fn thread_count_does_not_change_results() {
    let noise = noise(0.25, Convention::Ito);
    let grid = time_grid(noise.dt, 0.5);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| ensemble_moments(&noise, 0.1, 1.0, &grid, 3000).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.mean_k2.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.mean_k2.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    assert_eq!(a.se_k2.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.se_k2.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    assert_eq!(a.survived, b.survived);
}

#[test]
fn paths_depend_only_on_seed_and_index() {
    let noise = noise(0.05, Convention::Stratonovich);
    let grid = time_grid(noise.dt, 0.2);
    let later = sample_path(&noise, 7, &grid).unwrap();
    let _ = sample_path(&noise, 3, &grid).unwrap();
    assert_eq!(sample_path(&noise, 7, &grid).unwrap(), later);
    assert_ne!(sample_path(&noise, 8, &grid).unwrap(), later);
    let var = later.iter().map(|d| d * d).sum::<f64>() / later.len() as f64;
    assert!((var / (2.0 * 0.05 * 1e-3) - 1.0).abs() < 0.3);
}

#[test]
fn conventions_separate_growth_rates() {
    let sigma2 = 0.25;
    let grid: Vec<f64> = vec![0.0, 1.0];
    for (conv, rate) in [(Convention::Ito, 2.0), (Convention::Stratonovich, 4.0)] {
        let stats = ensemble_moments(&noise(sigma2, conv), 0.0, 1.0, &grid, 20_000).unwrap();
        let expected = (rate * sigma2).exp();
        assert!((stats.mean_k2[1] - expected).abs() < 4.0 * stats.se_k2[1], "{conv:?}: {} vs {expected}", stats.mean_k2[1]);
    }
}

#[test]
fn second_moment_dominates_squared_mean() {
    let noise = noise(0.15, Convention::Ito);
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
    let stats = ensemble_moments(&noise, 0.1, 1.0, &grid, 1000).unwrap();
    for (m, m2) in stats.mean_k.iter().zip(&stats.mean_k2) {
        assert!(*m2 >= m * m - 1e-12);
    }
    assert_eq!(stats.survived_paths(), 1000);
}

#[test]
fn damped_ensemble_sits_near_the_closed_law() {
    let noise = noise(0.15, Convention::Ito);
    let stats = ensemble_moments(&noise, 0.01, 1.0, &[0.0, 1.0], 20_000).unwrap();
    let formula = paper_moment_formula(0.15, 0.01, 1.0, 1.0).unwrap().value;
    assert!((stats.mean_k2[1] - formula).abs() < 4.0 * stats.se_k2[1] + 0.005);
}
