use revkde::chains::{
    center, exact_lag_covariance, random_reversible_chain, simulate_path, Chain, ChainSpec, Marginal,
};
use revkde::clt_harness::check_clt_conditions;
use revkde::dependence::h_k_function;
use revkde::estimator::{expected_kde, kde_evaluate, BandwidthSchedule};
use revkde::kernels::Kernel;
use revkde::numerics::RngStream;

#[test]
fn metropolis_moments() {
    let chain = ChainSpec::Metropolis {
        target: "std_normal".into(),
        proposal_sd: 2.4,
        burn_in: None,
    }
    .build()
    .unwrap();
    let path = simulate_path(&chain, 1_000_000, RngStream::new(8, 0)).unwrap();
    let n = path.len() as f64;
    let mean = path.iter().sum::<f64>() / n;
    let var = path.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 0.02, "mean {mean}");
    assert!((var - 1.0).abs() < 0.05, "variance {var}");
}

#[test]
fn ergodic_averages_of_centered_functions() {
    let n = 200_000;
    for i in 0..5u64 {
        let fc = random_reversible_chain(3 + i as usize, RngStream::new(21, i)).unwrap();
        let g = center(&fc, &fc.tabulate(|x| x.cos() + 0.5 * x));
        // asymptotic variance var + 2 sum_k cov_k
        let mut sigma2 = exact_lag_covariance(&fc, &g, 0).unwrap();
        for k in 1..400 {
            sigma2 += 2.0 * exact_lag_covariance(&fc, &g, k).unwrap();
        }
        let values = fc.values().to_vec();
        let chain = Chain::Finite(fc);
        let path = simulate_path(&chain, n, RngStream::new(22, i)).unwrap();
        let avg = path
            .iter()
            .map(|x| g[values.iter().position(|v| v == x).unwrap()])
            .sum::<f64>()
            / n as f64;
        let se = (sigma2 / n as f64).sqrt();
        assert!(avg.abs() < 4.0 * se, "chain {i}: average {avg}, standard error {se}");
    }
}

#[test]
fn kde_mean_over_replicates_matches_expectation() {
    let chain = ChainSpec::Ar1 { rho: 0.5 }.build().unwrap();
    let k = Kernel::gaussian();
    let (n, b, x) = (2000, 0.3, 0.5);
    let vals: Vec<f64> = (1..=500u64)
        .map(|r| {
            let path = simulate_path(&chain, n, RngStream::new(31, r)).unwrap();
            kde_evaluate(&path, &k, b, &[x]).unwrap().values[0]
        })
        .collect();
    let m = vals.iter().sum::<f64>() / 500.0;
    let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 499.0).sqrt();
    let e = expected_kde(&Marginal::StdNormal, &k, b, x).unwrap();
    assert!(
        (m - e).abs() < 3.0 * sd / 500f64.sqrt(),
        "mean {m}, expected {e}, sd {sd}"
    );
}

#[test]
fn gaussian_h_vanishes_far_out() {
    let chain = ChainSpec::Ar1 { rho: 0.9 }.build().unwrap();
    for lag in [1, 3] {
        let h = h_k_function(&chain, lag).unwrap();
        for (u, v) in [
            (8.0, 0.0),
            (-8.0, 0.0),
            (0.0, 8.0),
            (0.0, -8.0),
            (8.0, 8.0),
            (-8.0, -8.0),
        ] {
            let value: f64 = h.eval(u, v);
            assert!(value.abs() < 1e-13, "H({u}, {v}) = {value}");
        }
    }
}

#[test]
fn covariance_condition_nonnegative_on_random_chains() {
    let schedule = BandwidthSchedule::new(1.0, 0.22).unwrap();
    for i in 0..20u64 {
        let fc = random_reversible_chain(2 + (i as usize % 8), RngStream::new(41, i)).unwrap();
        let x = fc.values()[0];
        let sweep = check_clt_conditions(
            &Chain::Finite(fc),
            &Kernel::gaussian(),
            &[(x, 1.0), (x + 0.5, -0.7)],
            &[100, 1000, 10_000],
            schedule,
        )
        .unwrap();
        for r in &sweep.reports {
            assert!(r.neglcov_value >= 0.0, "chain {i} n {}: {}", r.n, r.neglcov_value);
            assert!(r.secondcond_value >= 0.0);
        }
    }
}
