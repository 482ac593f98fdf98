use phaseforge::model::{outcome_pmf, poisson_mean, sample_outcome};
use phaseforge::rng::stream;
use phaseforge::{DisplacementDesign, ProbeSpec};
use std::f64::consts::PI;

// independent Poisson pmf by explicit products
fn poisson(lambda: f64, k: usize) -> f64 {
    let mut p = (-lambda).exp();
    for i in 1..=k {
        p *= lambda / i as f64;
    }
    p
}

/// A spec/design pair whose mean photon number is `lambda` at every phase.
fn flat(lambda: f64, pnr: usize) -> (ProbeSpec, DisplacementDesign) {
    (
        ProbeSpec::from_mean_photons(lambda, 1, pnr).unwrap(),
        DisplacementDesign::none(),
    )
}

#[test]
fn poisson_mean_examples() {
    let spec = ProbeSpec::new(1.0, 1, 1).unwrap();
    let phi = 0.7;
    let aligned = DisplacementDesign::new(phi, 1.0).unwrap();
    assert_eq!(poisson_mean(&spec, &aligned, phi), 0.0);
    let anti = DisplacementDesign::new(phi + PI, 1.0).unwrap();
    assert!((poisson_mean(&spec, &anti, phi) - 4.0).abs() < 1e-12);
    let spec = ProbeSpec::new(2.0, 4, 1).unwrap();
    assert!((poisson_mean(&spec, &DisplacementDesign::none(), 1.0) - 1.0).abs() < 1e-15);
}

#[test]
fn pmf_examples() {
    let (spec, design) = flat(0.0, 3);
    assert_eq!(outcome_pmf(&spec, &design, 0.3), vec![1.0, 0.0, 0.0, 0.0]);

    for lambda in [1e-6, 0.3, 2.0, 17.0] {
        let (spec, design) = flat(lambda, 1);
        let pmf = outcome_pmf(&spec, &design, 0.0);
        assert!((pmf[0] - (-lambda).exp()).abs() < 1e-15);
        assert!((pmf[1] - (-(-lambda).exp_m1())).abs() < 1e-15);
    }

    let (spec, design) = flat(2.0, 3);
    let pmf = outcome_pmf(&spec, &design, 0.0);
    let head: Vec<f64> = (0..3).map(|k| poisson(2.0, k)).collect();
    let tail: f64 = (3..200).map(|k| poisson(2.0, k)).sum();
    for k in 0..3 {
        assert!((pmf[k] - head[k]).abs() < 1e-15);
    }
    assert!((pmf[3] - tail).abs() < 1e-15);
    let expected = [0.135335, 0.270671, 0.270671, 0.323324];
    for (p, e) in pmf.iter().zip(expected) {
        assert!((p - e).abs() < 5e-7, "{p} vs {e}");
    }
}

#[test]
fn wide_alphabet_matches_untruncated_poisson() {
    for lambda in [0.0, 0.01, 1.0, 5.5, 12.0, 20.0] {
        let (spec, design) = flat(lambda, 200);
        let pmf = outcome_pmf(&spec, &design, 0.0);
        for (k, p) in pmf.iter().take(200).enumerate() {
            assert!((p - poisson(lambda, k)).abs() < 1e-12, "lambda {lambda}, k {k}");
        }
        assert!(pmf[200] < 1e-12);
    }
}

#[test]
fn large_mean_tail_stays_accurate() {
    // log-domain oracle for λ far beyond the factorial table
    let lambda = 800.0_f64;
    let (spec, design) = flat(lambda, 3);
    let pmf = outcome_pmf(&spec, &design, 0.0);
    for (k, p) in pmf.iter().take(3).enumerate() {
        let ln = -lambda + k as f64 * lambda.ln() - statrs::function::gamma::ln_gamma(k as f64 + 1.0);
        assert!(*p == 0.0 || (p.ln() - ln).abs() < 1e-9, "k {k}");
    }
    assert!((pmf[3] - 1.0).abs() < 1e-15);

    // small overflow probability: 1 − head would lose every digit
    let (spec, design) = flat(1e-4, 3);
    let pmf = outcome_pmf(&spec, &design, 0.0);
    let tail: f64 = (3..30).map(|k| poisson(1e-4, k)).sum();
    assert!((pmf[3] / tail - 1.0).abs() < 1e-10);
}

#[test]
fn multinomial_frequencies_within_four_sigma() {
    let (spec, design) = flat(2.0, 3);
    let pmf = outcome_pmf(&spec, &design, 0.0);
    let mut rng = stream(2024, 0);
    let draws = 1_000_000;
    let mut counts = [0usize; 4];
    for _ in 0..draws {
        counts[sample_outcome(&spec, &design, 0.0, &mut rng).count()] += 1;
    }
    for (k, &c) in counts.iter().enumerate() {
        let n = draws as f64;
        let sigma = (n * pmf[k] * (1.0 - pmf[k])).sqrt();
        assert!((c as f64 - n * pmf[k]).abs() < 4.0 * sigma, "outcome {k}: {c}");
    }
}

#[test]
fn sampling_is_deterministic_and_nulling_gives_zero() {
    let spec = ProbeSpec::from_mean_photons(3.0, 2, 4).unwrap();
    let design = DisplacementDesign::new(1.0, 0.9).unwrap();
    let a: Vec<usize> = {
        let mut rng = stream(99, 0);
        (0..100)
            .map(|_| sample_outcome(&spec, &design, 2.0, &mut rng).count())
            .collect()
    };
    let b: Vec<usize> = {
        let mut rng = stream(99, 0);
        (0..100)
            .map(|_| sample_outcome(&spec, &design, 2.0, &mut rng).count())
            .collect()
    };
    assert_eq!(a, b);

    let nulling = DisplacementDesign::new(2.0, spec.step_amplitude()).unwrap();
    let mut rng = stream(5, 0);
    for _ in 0..1000 {
        assert_eq!(sample_outcome(&spec, &nulling, 2.0, &mut rng).count(), 0);
    }
}
