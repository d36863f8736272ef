use std::io::Write;

use gridfreq::scenario::{preset_table, ConfigFile};
use gridfreq::{load_config, preset, Controller, Error, Preset, StorageKind, SweepSpec};

fn write(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn ei_preset_matches_table_2() {
    let (sc, devices) = preset("EI").unwrap();
    assert_eq!(sc.loss_mw, 4500.0);
    assert_eq!((sc.pv_fraction, sc.wind_fraction), (0.65, 0.15));
    let t = preset_table(Preset::Ei).unwrap();
    assert_eq!(t.load_mw, 560_000.0);
    assert_eq!(t.activation_hz, 59.85);
    assert_eq!(t.step_delay_s, 0.5);
    assert_eq!(t.alpha, 0.85);
    let d = &devices[0];
    assert_eq!(d.kind, StorageKind::Hpes);
    assert_eq!((d.p_max_mw, d.e_max_mws, d.soc_mws), (3100.0, 31_000.0, 31_000.0));
    match &d.controller {
        Controller::Droop(c) => assert_eq!((c.droop_ratio, c.t_filter_s), (0.025, 0.5)),
        other => panic!("expected droop, got {other:?}"),
    }
}

#[test]
fn ercot_preset_matches_table_3() {
    let (sc, devices) = preset("ERCOT").unwrap();
    assert_eq!(sc.loss_mw, 2750.0);
    let t = preset_table(Preset::Ercot).unwrap();
    assert_eq!(t.load_mw, 75_000.0);
    assert_eq!((t.activation_hz, t.step_delay_s, t.alpha), (59.55, 0.5, 0.85));
    let d = &devices[0];
    assert_eq!((d.p_max_mw, d.e_max_mws), (2630.0, 26_300.0));
    match &d.controller {
        Controller::Droop(c) => assert_eq!(c.droop_ratio, 0.05),
        other => panic!("expected droop, got {other:?}"),
    }
}

#[test]
fn unknown_preset_name_is_an_error() {
    assert!(matches!(preset("WECC"), Err(Error::UnknownPreset(_))));
}

#[test]
fn preset_only_file_gives_table_defaults() {
    let f = write(r#"{"preset": "EI"}"#);
    let study = load_config(f.path()).unwrap();
    let (sc, devices) = preset("EI").unwrap();
    assert_eq!(study.scenario, sc);
    assert_eq!(study.devices, devices);
    assert!(study.sweep.is_none());
}

#[test]
fn no_synchronous_share_is_rejected() {
    let f = write(r#"{"preset": "EI", "pv_fraction": 0.9, "wind_fraction": 0.15}"#);
    assert!(matches!(load_config(f.path()), Err(Error::InvalidScenario(_))));
}

#[test]
fn missing_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("absent.json");
    assert!(matches!(load_config(&path), Err(Error::ConfigNotFound(p)) if p == path));
}

#[test]
fn parse_errors_carry_a_line() {
    let f = write("{\n  \"preset\": \"EI\",\n  \"dt_s\": ,\n}");
    match load_config(f.path()) {
        Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn explicit_config_round_trips() {
    let f = write(
        r#"{"preset": "ERCOT", "control": "step", "storage_kind": "hees", "loss_mw": 2000,
            "sweep": {"kind": "duration", "values": [5, 10, 20, 40]}}"#,
    );
    let study = load_config(f.path()).unwrap();
    assert_eq!(study.sweep, Some(SweepSpec::Duration { values: vec![5.0, 10.0, 20.0, 40.0] }));

    let json = study.to_config().to_json();
    let again = ConfigFile::parse(&json).unwrap().into_study().unwrap();
    assert_eq!(again, study);
    assert_eq!(again.to_config().to_json(), json);
}
