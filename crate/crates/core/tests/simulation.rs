use gridfreq::scenario::{build_model, preset_base_grid, preset_scenario, preset_table, table_device};
use gridfreq::{compute_metrics, run_simulation, ControlMode, Preset, Scenario, StorageKind};

fn ei(loss_mw: f64) -> (gridfreq::GridModel, Scenario) {
    let sc = Scenario { loss_mw, ..preset_scenario(Preset::Ei).unwrap() };
    let model = build_model(&sc, &preset_base_grid(Preset::Ei).unwrap()).unwrap();
    (model, sc)
}

#[test]
fn zero_loss_stays_at_nominal() {
    let (model, sc) = ei(0.0);
    let trace = run_simulation(&model, &sc, &[]).unwrap();
    assert!(trace.freq_hz.iter().all(|&f| f == 60.0));
    assert_eq!(trace.t_s[0], 0.0);
    assert_eq!(trace.len(), 6001);
}

#[test]
fn baseline_declines_to_one_nadir_then_recovers() {
    let (model, sc) = ei(4500.0);
    let trace = run_simulation(&model, &sc, &[]).unwrap();
    let m = compute_metrics(&trace).unwrap();
    assert!(m.second_nadir.is_none());
    assert!(m.nadir_time_s > sc.loss_time_s);
    let k = trace.t_s.iter().position(|&t| t >= m.nadir_time_s).unwrap();
    let start = (sc.loss_time_s / sc.dt_s).round() as usize;
    assert!(trace.freq_hz[start..=k].windows(2).all(|w| w[1] <= w[0]));
    assert!(m.settling_hz > m.nadir_hz + 0.01);
    assert!(m.settling_hz < 60.0);
}

#[test]
fn identical_inputs_give_identical_traces() {
    let (model, sc) = ei(4500.0);
    let table = preset_table(Preset::Ei).unwrap();
    let devices: Vec<_> = table_device(&table, ControlMode::Step, StorageKind::Hpes, &model).into_iter().collect();
    let a = run_simulation(&model, &sc, &devices).unwrap();
    let b = run_simulation(&model, &sc, &devices).unwrap();
    assert_eq!(a, b);
}

#[test]
fn halving_dt_barely_moves_the_baseline_nadir() {
    let (model, sc) = ei(4500.0);
    let coarse = compute_metrics(&run_simulation(&model, &sc, &[]).unwrap()).unwrap();
    let fine_sc = Scenario { dt_s: sc.dt_s / 2.0, ..sc };
    let fine = compute_metrics(&run_simulation(&model, &fine_sc, &[]).unwrap()).unwrap();
    assert!((coarse.nadir_hz - fine.nadir_hz).abs() < 1e-4);
}

#[test]
fn hpes_step_drops_to_zero_after_ten_seconds_at_full_power() {
    let (model, sc) = ei(4500.0);
    let table = preset_table(Preset::Ei).unwrap();
    let mut devices: Vec<_> = table_device(&table, ControlMode::Step, StorageKind::Hpes, &model).into_iter().collect();
    if let gridfreq::Controller::Step(c) = &mut devices[0].controller {
        c.override_power_mw = Some(3100.0);
    }
    let trace = run_simulation(&model, &sc, &devices).unwrap();
    let active = trace.device_power_mw[0].iter().filter(|&&p| p > 0.0).count();
    assert_eq!(active, 1000);
    assert_eq!(*trace.device_soc_mws[0].last().unwrap(), 0.0);
}

#[test]
fn ufls_sheds_load_only_when_enabled() {
    let sc = preset_scenario(Preset::Ercot).unwrap();
    let base = preset_base_grid(Preset::Ercot).unwrap();
    let model = build_model(&sc, &base).unwrap();
    let off = run_simulation(&model, &sc, &[]).unwrap();
    assert!(off.load_fraction.iter().all(|&l| l == 1.0));
    assert!(off.ufls_trips.is_empty());

    let sc_on = Scenario { ufls_enabled: true, ..sc };
    let model_on = build_model(&sc_on, &base).unwrap();
    let on = run_simulation(&model_on, &sc_on, &[]).unwrap();
    assert_eq!(on.ufls_trips.first().map(|t| t.0), Some(0));
    assert!((on.load_fraction.last().unwrap() - 0.95).abs() < 1e-12);
    let m_on = compute_metrics(&on).unwrap();
    assert!(m_on.ufls_triggered);
    assert!(m_on.nadir_hz > compute_metrics(&off).unwrap().nadir_hz);
}
