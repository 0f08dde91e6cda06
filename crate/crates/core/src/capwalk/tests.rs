use rand::Rng;

use super::*;
use crate::rng::{from_seed, stream};
use crate::sphere::{tau_of, BetaDist, CapSampler, UnitVector};
use crate::stats::{ks_critical, ks_statistic};

#[test]
fn zero_steps_return_start() {
    let x0 = UnitVector::basis(12, 3).unwrap();
    assert_eq!(cap_walk(&x0, 0.1, 0, &mut from_seed(0)).unwrap(), x0);
}

#[test]
fn one_full_sphere_step_is_uniform() {
    let d = 20;
    let x0 = UnitVector::basis(d, 0).unwrap();
    let walk = CapWalk::new(d, 1.0).unwrap();
    let mut rng = from_seed(1);
    let proj: Vec<f64> = (0..10_000).map(|_| walk.step(&x0, &mut rng).dot(&x0)).collect();
    let cdf = beta_cdf(d).unwrap();
    assert!(ks_statistic(&proj, cdf) < ks_critical(proj.len(), 0.01));
}

#[test]
fn one_step_matches_conditional_law() {
    let (d, p) = (60, 0.02);
    let x0 = UnitVector::basis(d, 5).unwrap();
    let walk = CapWalk::new(d, p).unwrap();
    let tau = walk.tau();
    let b = BetaDist::new(d).unwrap();
    let mut rng = from_seed(2);
    let proj: Vec<f64> = (0..20_000).map(|_| walk.step(&x0, &mut rng).dot(&x0)).collect();
    assert!(proj.iter().all(|&x| x >= tau));
    let cdf = |x: f64| (p - b.tail(x.min(1.0)).unwrap()) / p;
    assert!(ks_statistic(&proj, cdf) < ks_critical(proj.len(), 0.01));
}

#[test]
fn brownian_basics() {
    let x0 = UnitVector::basis(10, 0).unwrap();
    let path = brownian_sphere(&x0, 0.0, 0.001, &mut from_seed(0)).unwrap();
    assert_eq!(path.positions, vec![x0.clone()]);
    let path = brownian_sphere(&x0, 0.05, 0.001, &mut from_seed(0)).unwrap();
    assert_eq!(path.times.len(), 51);
    assert!(path.positions.iter().all(|v| (crate::sphere::norm(v.coords()) - 1.0).abs() < 1e-9));
    assert!(path.times.windows(2).all(|w| w[1] > w[0]));
    let err = brownian_sphere(&x0, 0.05, 0.05, &mut from_seed(0)).unwrap_err();
    assert!(matches!(err, crate::Error::Stability { .. }));
}

#[test]
fn brownian_mean_overlap() {
    let (d, t) = (50, 0.01);
    let dt = 0.002 / (d as f64 - 1.0);
    let r = bm_concentration_check(d, t, dt, 4000, &[0.05, 0.1, 0.2], 17).unwrap();
    assert!(r.mean_pass, "{r:?}");
    assert!(r.pass);
}

#[test]
fn histogram_edge_cases() {
    let axis = UnitVector::basis(8, 0).unwrap();
    let samples = vec![axis.clone(); 50];
    let m = project_1d(&samples, &axis, 20).unwrap();
    assert_eq!(m.weights[19], 1.0);
    assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(tv_to_uniform(&m).unwrap() > 0.99);
    assert!(project_1d(&[], &axis, 20).is_err());
    assert!(project_1d(&samples, &axis, 5).is_err());
}

#[test]
fn cap_samples_are_one_minus_p_from_uniform() {
    let (d, p) = (30, 0.1);
    let tau = tau_of(p, d).unwrap().tau;
    let s = CapSampler::new(d, tau).unwrap();
    let mut rng = from_seed(4);
    let proj: Vec<f64> = (0..100_000).map(|_| s.sample_projection(&mut rng)).collect();
    let m = Projected1DMeasure::from_projections(&proj, d, 100).unwrap();
    let below = ((tau + 1.0) * 50.0).floor() as usize;
    assert!(m.weights[..below].iter().all(|&w| w == 0.0));
    let tv = tv_to_uniform(&m).unwrap();
    assert!((tv - 0.9).abs() < 0.02, "{tv}");
}

#[test]
fn half_sphere_walk_mixes_fast() {
    let x0 = UnitVector::basis(40, 0).unwrap();
    let fit = fit_decay_rate(&x0, 0.5, 3, 20_000, 50, 8).unwrap();
    assert!(fit.rows[0].tv_estimate > 0.95);
    // one step from a point mass is uniform on a hemisphere: TV = 1 - p
    assert!((fit.rows[1].tv_estimate - 0.5).abs() < 0.02, "{:?}", fit.rows);
    assert!(fit.rows[2].tv_estimate <= fit.noise_floor + 0.05, "{:?}", fit.rows);
}

#[test]
fn decomposition_examples() {
    let d = 25;
    let uniform = StepFunction { breaks: vec![-1.0], values: vec![1.0] };
    let m = cap_decomposition(&uniform, d).unwrap();
    assert_eq!(m.thresholds, vec![-1.0]);
    assert!((m.masses[0] - 1.0).abs() < 1e-12);

    let p = 0.2;
    let tau = tau_of(p, d).unwrap().tau;
    let cap = StepFunction { breaks: vec![-1.0, tau], values: vec![0.0, 1.0 / p] };
    let m = cap_decomposition(&cap, d).unwrap();
    assert_eq!(m.thresholds, vec![tau]);
    assert!((m.masses[0] - 1.0).abs() < 1e-9);

    let bad = StepFunction { breaks: vec![-1.0, 0.0], values: vec![1.5, 0.5] };
    assert!(matches!(cap_decomposition(&bad, d), Err(crate::Error::NotMonotone { index: 1 })));
}

#[test]
fn random_step_function_round_trip() {
    let d = 15;
    let mut rng = from_seed(6);
    let mut breaks: Vec<f64> = (0..9).map(|_| rng.random_range(-0.95..0.95)).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.insert(0, -1.0);
    let mut values: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
    values.sort_by(f64::total_cmp);
    let raw = StepFunction { breaks: breaks.clone(), values: values.clone() };
    let z = raw.integral(d).unwrap();
    let ell = StepFunction { breaks, values: values.iter().map(|v| v / z).collect() };
    let m = cap_decomposition(&ell, d).unwrap();
    assert!((m.masses.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    for (i, &x) in ell.breaks.iter().enumerate() {
        assert!((m.reconstruct(x).unwrap() - ell.values[i]).abs() < 1e-8);
    }
}

#[test]
fn dominance_examples() {
    let d = 30;
    let draw = |p: f64, phase: &str| -> Vec<f64> {
        let s = CapSampler::new(d, tau_of(p, d).unwrap().tau).unwrap();
        let mut rng = stream(3, phase, 0);
        (0..20_000).map(|_| s.sample_projection(&mut rng)).collect()
    };
    let small = draw(0.01, "a");
    let big = draw(0.1, "b");
    assert!(dominance_check_projections(&small, &big).unwrap().holds);
    assert!(!dominance_check_projections(&big, &small).unwrap().holds);
    let again = draw(0.01, "c");
    assert!(dominance_check_projections(&small, &again).unwrap().holds);
    assert!(dominance_check_projections(&again, &small).unwrap().holds);
    assert!(dominance_check_projections(&small[..10], &big).is_err());
}
