use phaseforge::baselines::{
    cpm_asymptotic, cpm_exact, heterodyne_variance, mkii_asymptotic, nongaussian_asymptotic, qcrb, BaselineRow,
    MKII_AT_MPN1,
};

// canonical sharpness by direct recurrence on the Poisson amplitudes
fn canonical_oracle(alpha_sq: f64) -> f64 {
    let mut amplitude = (-alpha_sq / 2.0).exp();
    let mut s = 0.0;
    for n in 0..2000 {
        let next = amplitude * (alpha_sq / (n + 1) as f64).sqrt();
        s += amplitude * next;
        amplitude = next;
    }
    1.0 / (s * s) - 1.0
}

fn a(alpha_sq: f64) -> f64 {
    alpha_sq.sqrt()
}

#[test]
fn closed_form_examples() {
    assert!((qcrb(a(1.0)).unwrap() - 0.25).abs() < 1e-15);
    assert!((qcrb(a(4.0)).unwrap() - 0.0625).abs() < 1e-15);
    assert!((qcrb(a(10.0)).unwrap() - 0.025).abs() < 1e-15);
    assert!((heterodyne_variance(a(1.0)).unwrap() - 0.5).abs() < 1e-15);
    assert!((heterodyne_variance(a(2.0)).unwrap() - 0.25).abs() < 1e-15);
    assert!((mkii_asymptotic(2.0).unwrap() - 0.078125).abs() < 1e-15);
    assert_eq!(MKII_AT_MPN1, 0.767);
    assert!((cpm_asymptotic(1.0).unwrap() - 0.40625).abs() < 1e-15);
    assert!((cpm_asymptotic(a(10.0)).unwrap() - 0.0265625).abs() < 1e-15);
    assert!((nongaussian_asymptotic(a(10.0)).unwrap() - 0.0302).abs() < 1e-12);
    assert!((nongaussian_asymptotic(a(100.0)).unwrap() - 0.002552).abs() < 1e-12);
    assert!(qcrb(0.0).is_err());
    for alpha_sq in [0.5, 3.0, 40.0] {
        let ratio = heterodyne_variance(a(alpha_sq)).unwrap() / qcrb(a(alpha_sq)).unwrap();
        assert!((ratio - 2.0).abs() < 1e-12);
        let excess = cpm_asymptotic(a(alpha_sq)).unwrap() - qcrb(a(alpha_sq)).unwrap();
        assert!((excess - 5.0 / (32.0 * alpha_sq * alpha_sq)).abs() < 1e-14);
    }
    let big = a(1e8);
    assert!((mkii_asymptotic(big).unwrap() / qcrb(big).unwrap() - 1.0).abs() < 1e-3);
}

#[test]
fn canonical_variance_matches_recurrence() {
    for alpha_sq in [0.1, 1.0, 2.0, 5.0, 20.0, 100.0, 400.0] {
        let (v, oracle) = (cpm_exact(a(alpha_sq)), canonical_oracle(alpha_sq));
        // 1/S² − 1 cancels as S → 1, so allow an absolute floor
        assert!(
            (v - oracle).abs() < 1e-12 + 1e-10 * oracle,
            "{alpha_sq}: {v} vs {oracle}"
        );
    }
    assert!((cpm_exact(1.0) - 0.673).abs() < 1e-3);
    assert_eq!(cpm_exact(0.0), f64::INFINITY);
}

#[test]
fn canonical_variance_approaches_asymptote() {
    let gaps: Vec<f64> = [5.0, 10.0, 20.0, 50.0]
        .iter()
        .map(|&a2| (cpm_exact(a(a2)) / cpm_asymptotic(a(a2)).unwrap() - 1.0).abs())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[2] < 0.01);
}

#[test]
fn bounds_are_ordered_above_two_photons() {
    for i in 0..200 {
        let alpha = a(2.0 + 0.5 * i as f64);
        let (q, c, h) = (
            qcrb(alpha).unwrap(),
            cpm_exact(alpha),
            heterodyne_variance(alpha).unwrap(),
        );
        assert!(q < c && c < h, "α² = {}", alpha * alpha);
    }
}

#[test]
#[ignore = "known conflict: cpm_exact(1) = 0.673 exceeds the heterodyne value 0.5; see notes/decisions.md"]
fn bounds_are_ordered_from_one_photon() {
    for i in 0..200 {
        let alpha = a(1.0 + 0.5 * i as f64);
        let (q, c, h) = (
            qcrb(alpha).unwrap(),
            cpm_exact(alpha),
            heterodyne_variance(alpha).unwrap(),
        );
        assert!(q < c && c < h, "α² = {}", alpha * alpha);
    }
}

#[test]
fn baselines_decrease_with_alpha() {
    let rows: Vec<BaselineRow> = (1..100).map(|i| BaselineRow::new(0.3 * i as f64).unwrap()).collect();
    for w in rows.windows(2) {
        let (x, y) = (w[0], w[1]);
        assert!(y.qcrb < x.qcrb && y.heterodyne < x.heterodyne && y.mkii_asymptotic < x.mkii_asymptotic);
        assert!(y.cpm_exact < x.cpm_exact && y.cpm_asymptotic < x.cpm_asymptotic);
        assert!(y.nongaussian_asymptotic < x.nongaussian_asymptotic);
    }
}
