use phaseforge::baselines::BaselineTable;
use phaseforge::io::{
    fmt_real, peek_kind, read_baselines, read_curve, read_json, read_records, read_sweep, read_trials, write_baselines,
    write_curve, write_json, write_steps, write_sweep, write_trials, FormatError, SweepRow, TableKind,
};
use phaseforge::strategy::run_ensemble;
use phaseforge::{DesignPolicy, EnsembleOptions, ProbeSpec};

fn ensemble() -> phaseforge::strategy::Ensemble {
    let spec = ProbeSpec::from_mean_photons(1.5, 7, 3).unwrap();
    let options = EnsembleOptions {
        grid_size: 128,
        bootstrap_resamples: 50,
        ..EnsembleOptions::new(12, 4)
    };
    run_ensemble(&spec, &DesignPolicy::default(), &options).unwrap()
}

fn bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), FormatError>) -> Vec<u8> {
    let mut out = Vec::new();
    f(&mut out).unwrap();
    out
}

#[test]
fn records_round_trip_through_csv() {
    let e = ensemble();
    let trials = bytes(|o| write_trials(o, &e.records));
    let steps = bytes(|o| write_steps(o, &e.records));
    assert_eq!(read_records(&trials[..], &steps[..]).unwrap(), e.records);
    let rows = read_trials(&trials[..]).unwrap();
    assert_eq!(rows.len(), 12);
    let text = String::from_utf8(trials).unwrap();
    assert_eq!(peek_kind(&text).unwrap(), TableKind::Trials);
    assert_eq!(text.lines().count(), 14);
}

#[test]
fn summaries_round_trip() {
    let e = ensemble();
    let curve = bytes(|o| write_curve(o, &e.result.per_step));
    assert_eq!(read_curve(&curve[..]).unwrap(), e.result.per_step);

    let rows = vec![SweepRow {
        alpha_sq: 1.5,
        steps: 7,
        pnr: 3,
        trials: 12,
        holevo_variance: e.result.holevo_variance,
        holevo_stderr: e.result.holevo_stderr,
    }];
    let sweep = bytes(|o| write_sweep(o, &rows));
    assert_eq!(read_sweep(&sweep[..]).unwrap(), rows);

    let table = BaselineTable::new(&[1.0, 2.5, 30.0]).unwrap();
    let csv = bytes(|o| write_baselines(o, &table));
    assert_eq!(read_baselines(&csv[..]).unwrap(), table);

    let json = bytes(|o| write_json(o, "summary", &e.result));
    let back: phaseforge::EnsembleResult = read_json(&json[..], "summary").unwrap();
    assert_eq!(back, e.result);
}

#[test]
fn reals_keep_seventeen_digits() {
    for x in [std::f64::consts::PI, 1e-300, -2.5e17, 0.1 + 0.2] {
        let s = fmt_real(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
        let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
        assert_eq!(mantissa.len(), 17, "{s}");
    }
}

#[test]
fn unknown_versions_and_kinds_are_rejected() {
    let e = ensemble();
    let curve = String::from_utf8(bytes(|o| write_curve(o, &e.result.per_step))).unwrap();
    let future = curve.replacen(" v1", " v2", 1);
    assert!(matches!(
        read_curve(future.as_bytes()),
        Err(FormatError::Schema { line: 1, .. })
    ));
    assert!(matches!(
        read_sweep(curve.as_bytes()),
        Err(FormatError::Schema { line: 1, .. })
    ));
    assert!(matches!(peek_kind(""), Err(FormatError::Schema { line: 1, .. })));

    let broken = curve.replacen("\n1,", "\nfirst,", 1);
    match read_curve(broken.as_bytes()) {
        Err(FormatError::Schema { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }

    let json = String::from_utf8(bytes(|o| write_json(o, "summary", &e.result))).unwrap();
    let future = json.replacen("\"schema_version\": 1", "\"schema_version\": 9", 1);
    assert!(read_json::<_, phaseforge::EnsembleResult>(future.as_bytes(), "summary").is_err());
    assert!(read_json::<_, phaseforge::EnsembleResult>(json.as_bytes(), "fits").is_err());
}
