use phaseforge::posterior::holevo_variance;
use phaseforge::rng::stream;
use phaseforge::{DisplacementDesign, Outcome, PhasePosterior, ProbeSpec};
use rand_distr::{Distribution, Normal};
use std::f64::consts::{PI, TAU};

const QUADRATURE: usize = 1_000_000;

// independent bucket likelihood p(n | φ) for a flat design
fn bucket(lambda: f64, pnr: usize, n: usize) -> f64 {
    let mut p = (-lambda).exp();
    let mut head = 0.0;
    for k in 0..pnr {
        if k > 0 {
            p *= lambda / k as f64;
        }
        if k == n {
            return p;
        }
        head += p;
    }
    1.0 - head
}

fn mean_photons(a: f64, b: f64, theta: f64, phi: f64) -> f64 {
    let (re, im) = (a * phi.cos() - b * theta.cos(), a * phi.sin() - b * theta.sin());
    re * re + im * im
}

// midpoint rule over [0, 2π), returning the average of f
fn average(f: impl Fn(f64) -> f64) -> f64 {
    let h = TAU / QUADRATURE as f64;
    (0..QUADRATURE).map(|i| f((i as f64 + 0.5) * h)).sum::<f64>() / QUADRATURE as f64
}

fn von_mises(grid: usize, kappa: f64, mu: f64) -> PhasePosterior {
    PhasePosterior::from_density(grid, |phi| (kappa * (phi - mu).cos()).exp()).unwrap()
}

// I1(x)/I0(x) from power series
fn bessel_ratio(x: f64) -> f64 {
    let series = |order: i32| {
        let (mut term, mut sum) = ((x / 2.0).powi(order), 0.0);
        for k in 0..60 {
            sum += term;
            term *= (x / 2.0).powi(2) / ((k + 1) as f64 * (k + 1 + order) as f64);
        }
        sum
    };
    series(1) / series(0)
}

#[test]
fn uniform_prior() {
    let p = PhasePosterior::uniform(8).unwrap();
    assert!(p.weights().iter().all(|w| *w == 0.125));
    let p = PhasePosterior::uniform(1024).unwrap();
    assert!((p.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    assert!((p.entropy() - (1024f64).ln()).abs() < 1e-12);
    assert!(PhasePosterior::uniform(100).is_err());
    assert!(PhasePosterior::uniform(4).is_err());
}

#[test]
fn update_matches_quadrature_posterior() {
    let spec = ProbeSpec::new(1.0, 2, 3).unwrap();
    let design = DisplacementDesign::new(0.0, 1.0).unwrap();
    let a = spec.step_amplitude();
    let n = 1024;
    let prior = PhasePosterior::uniform(n).unwrap();
    let post = prior.bayes_update(&spec, &design, Outcome::new(1, 3).unwrap()).unwrap();

    let likelihood = |phi: f64| bucket(mean_photons(a, 1.0, 0.0, phi), 3, 1);
    let evidence = average(likelihood);
    let worst = (0..n)
        .map(|j| {
            let density = likelihood(prior.grid_phase(j)) / (evidence * TAU);
            (post.weights()[j] - density * TAU / n as f64).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "sup error {worst}");
}

#[test]
fn zero_displacement_and_nulling_updates() {
    let spec = ProbeSpec::new(1.0, 1, 1).unwrap();
    let prior = von_mises(256, 3.0, 1.0);
    let post = prior
        .bayes_update(&spec, &DisplacementDesign::none(), Outcome::new(0, 1).unwrap())
        .unwrap();
    for (a, b) in post.weights().iter().zip(prior.weights()) {
        assert!((a - b).abs() < 1e-15);
    }

    let theta0 = 1.0;
    let uniform = PhasePosterior::uniform(1024).unwrap();
    let nulling = DisplacementDesign::new(theta0, spec.step_amplitude()).unwrap();
    let post = uniform
        .bayes_update(&spec, &nulling, Outcome::new(0, 1).unwrap())
        .unwrap();
    assert!((post.map_estimate() - theta0).abs() < 1e-3);
}

#[test]
fn map_and_sharpness_of_von_mises() {
    let p = von_mises(1024, 50.0, 1.3);
    assert!((p.map_estimate() - 1.3).abs() < TAU / 1024.0);
    let p = von_mises(1024, 2.0, 0.4);
    let oracle = bessel_ratio(2.0);
    assert!((oracle - 0.697775).abs() < 1e-6);
    assert!((p.circular_moment().magnitude - oracle).abs() < 1e-4);
    assert!((p.circular_moment().angle - 0.4).abs() < 1e-9);
}

#[test]
fn holevo_variance_examples() {
    assert_eq!(holevo_variance(&[0.0; 16]).unwrap(), 0.0);
    assert_eq!(holevo_variance(&[0.0, PI]).unwrap(), f64::INFINITY);
    assert!(holevo_variance(&[]).is_err());

    let sigma = 0.1;
    let samples = 100_000;
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut rng = stream(7, 0);
    let errors: Vec<f64> = (0..samples).map(|_| normal.sample(&mut rng)).collect();
    let v = holevo_variance(&errors).unwrap();
    // delta-method standard error of 1/R² − 1
    let n = samples as f64;
    let r = errors.iter().map(|d| d.cos()).sum::<f64>() / n;
    let sd = (errors.iter().map(|d| (d.cos() - r).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let se = 2.0 / r.powi(3) * sd / n.sqrt();
    let expected = (sigma * sigma as f64).exp() - 1.0;
    assert!((v - expected).abs() < 3.0 * se, "{v} vs {expected} (se {se})");
}

#[test]
fn information_identities() {
    let spec = ProbeSpec::new(1.5, 3, 2).unwrap();
    let prior = von_mises(512, 4.0, 2.0);

    let info = prior.info_functionals(&spec, &DisplacementDesign::none()).unwrap();
    assert!(info.mutual_information.abs() < 1e-12);
    assert!(info.expected_kl.abs() < 1e-12);

    let point = PhasePosterior::point_mass(512, 77).unwrap();
    let design = DisplacementDesign::new(0.3, 0.8).unwrap();
    let info = point.info_functionals(&spec, &design).unwrap();
    assert!(info.mutual_information.abs() < 1e-12);
    assert!(info.kl_per_outcome.iter().all(|k| k.abs() < 1e-12));

    let info = prior.info_functionals(&spec, &design).unwrap();
    assert!((info.mutual_information - info.expected_kl).abs() < 1e-9);
    assert!(info.mutual_information > 0.0);
}

#[test]
fn mutual_information_matches_quadrature() {
    let spec = ProbeSpec::new(1.0, 1, 1).unwrap();
    let design = DisplacementDesign::new(0.0, 1.0).unwrap();
    let prior = PhasePosterior::uniform(1024).unwrap();
    let info = prior.info_functionals(&spec, &design).unwrap();

    let p = |n: usize, phi: f64| bucket(mean_photons(1.0, 1.0, 0.0, phi), 1, n);
    let xlogx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    let oracle: f64 = (0..2)
        .map(|n| average(|phi| xlogx(p(n, phi))) - xlogx(average(|phi| p(n, phi))))
        .sum();
    assert!(
        (info.mutual_information - oracle).abs() < 1e-6,
        "{} vs {oracle}",
        info.mutual_information
    );
}

#[test]
fn updates_commute() {
    let spec = ProbeSpec::new(2.0, 5, 3).unwrap();
    let steps = [
        (DisplacementDesign::new(0.3, 0.9).unwrap(), 1),
        (DisplacementDesign::new(2.1, 0.4).unwrap(), 0),
        (DisplacementDesign::new(4.0, 1.3).unwrap(), 3),
        (DisplacementDesign::new(5.5, 0.7).unwrap(), 2),
    ];
    let run = |order: &[usize]| {
        let mut p = PhasePosterior::uniform(512).unwrap();
        for &i in order {
            let (design, count) = steps[i];
            p = p.bayes_update(&spec, &design, Outcome::new(count, 3).unwrap()).unwrap();
        }
        p
    };
    let forward = run(&[0, 1, 2, 3]);
    let shuffled = run(&[2, 0, 3, 1]);
    for (a, b) in forward.weights().iter().zip(shuffled.weights()) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn map_is_stable_under_grid_refinement() {
    let spec = ProbeSpec::new(2.0, 6, 2).unwrap();
    let record = [
        (DisplacementDesign::new(0.3, 0.9).unwrap(), 1),
        (DisplacementDesign::new(2.1, 0.4).unwrap(), 0),
        (DisplacementDesign::new(4.0, 1.3).unwrap(), 2),
        (DisplacementDesign::new(1.0, 0.8).unwrap(), 0),
        (DisplacementDesign::new(5.2, 0.6).unwrap(), 1),
    ];
    let map = |grid: usize| {
        let mut p = PhasePosterior::uniform(grid).unwrap();
        for (design, count) in record {
            p = p.bayes_update(&spec, &design, Outcome::new(count, 2).unwrap()).unwrap();
        }
        p.map_estimate()
    };
    let (coarse, fine) = (map(1024), map(2048));
    let gap = (coarse - fine).abs().min(TAU - (coarse - fine).abs());
    assert!(gap < TAU / 1024.0, "{coarse} vs {fine}");
}
