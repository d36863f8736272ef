//! Time-domain simulation driver.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{rk4_step, GridModel};
use crate::scenario::Scenario;
use crate::storage::{controller_update, Measurement, StorageDevice};

/// Uniformly sampled simulation output. Sample `i` is taken at `i * dt_s`.
///
/// Device power at sample `i` is the output held over `[t_i, t_i + dt)`;
/// state of charge is the energy remaining at `t_i`, before that step's draw.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub f_nominal: f64,
    pub dt_s: f64,
    pub t_s: Vec<f64>,
    pub freq_hz: Vec<f64>,
    /// Windowed ROCOF of the system-level filtered frequency.
    pub rocof_hz_per_s: Vec<f64>,
    pub mech_power_mw: Vec<f64>,
    pub load_fraction: Vec<f64>,
    /// Per device, per sample.
    pub device_power_mw: Vec<Vec<f64>>,
    pub device_soc_mws: Vec<Vec<f64>>,
    pub device_p_max_mw: Vec<f64>,
    pub device_e_max_mws: Vec<f64>,
    /// Initial energy of each device, MW*s.
    pub device_initial_soc_mws: Vec<f64>,
    /// `(stage index, trip time)` for every UFLS stage that operated.
    pub ufls_trips: Vec<(usize, f64)>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.t_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_s.is_empty()
    }

    /// Total storage output at sample `i`, MW.
    pub fn es_power_mw(&self, i: usize) -> f64 {
        self.device_power_mw.iter().map(|p| p[i]).sum()
    }

    /// Total stored energy at sample `i`, MW*s.
    pub fn es_soc_mws(&self, i: usize) -> f64 {
        self.device_soc_mws.iter().map(|s| s[i]).sum()
    }

    /// Trapezoidal integral of a device's output over the trace, MW*s.
    pub fn device_energy_mws(&self, device: usize) -> f64 {
        trapezoid(&self.device_power_mw[device], self.dt_s)
    }

    pub fn es_energy_mws(&self) -> f64 {
        (0..self.device_power_mw.len())
            .map(|d| self.device_energy_mws(d))
            .sum()
    }
}

pub(crate) fn trapezoid(values: &[f64], dt: f64) -> f64 {
    values.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum()
}

#[derive(Debug, Clone, Copy)]
struct StageTimer {
    below_since: Option<f64>,
    tripped: bool,
}

/// Simulate a contingency on `model` with the given storage fleet.
///
/// Controllers and the contingency are sampled once per step and held across
/// the RK4 sub-steps. The input devices are not modified; each run works on
/// its own copies.
pub fn run_simulation(model: &GridModel, scenario: &Scenario, devices: &[StorageDevice]) -> Result<Trace> {
    model.validate()?;
    scenario.validate()?;
    for d in devices {
        d.validate(model.f_nominal)?;
    }

    let dt = scenario.dt_s;
    let steps = (scenario.duration_s / dt).round() as usize;
    if steps == 0 {
        return Err(Error::field("duration_s", "shorter than one step"));
    }
    let n = steps + 1;

    let mut devices: Vec<StorageDevice> = devices.to_vec();
    let mut meters = devices
        .iter()
        .map(|d| {
            Measurement::new(
                model.f_nominal,
                d.controller.filter_time_constant_s(),
                scenario.rocof_window_s,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut system_meter = Measurement::new(
        model.f_nominal,
        scenario.measurement_filter_s,
        scenario.rocof_window_s,
    )?;
    let mut stages = vec![
        StageTimer {
            below_since: None,
            tripped: false
        };
        model.ufls.len()
    ];

    let mut trace = Trace {
        f_nominal: model.f_nominal,
        dt_s: dt,
        t_s: Vec::with_capacity(n),
        freq_hz: Vec::with_capacity(n),
        rocof_hz_per_s: Vec::with_capacity(n),
        mech_power_mw: Vec::with_capacity(n),
        load_fraction: Vec::with_capacity(n),
        device_power_mw: vec![Vec::with_capacity(n); devices.len()],
        device_soc_mws: vec![Vec::with_capacity(n); devices.len()],
        device_p_max_mw: devices.iter().map(|d| d.p_max_mw).collect(),
        device_e_max_mws: devices.iter().map(|d| d.e_max_mws).collect(),
        device_initial_soc_mws: devices.iter().map(|d| d.soc_mws).collect(),
        ufls_trips: Vec::new(),
    };

    let loss_start = scenario.loss_time_s - 1e-9 * dt;
    let mut state = model.initial_state();

    for i in 0..n {
        let t = i as f64 * dt;
        state.t = t;

        system_meter.update(state.freq_hz, t, dt)?;
        for (stage_idx, (stage, timer)) in model.ufls.iter().zip(stages.iter_mut()).enumerate() {
            if timer.tripped {
                continue;
            }
            if system_meter.filtered_hz < stage.threshold_hz {
                let since = *timer.below_since.get_or_insert(t);
                if t - since >= stage.delay_s - 1e-9 {
                    timer.tripped = true;
                    state.load_remaining_fraction *= 1.0 - stage.shed_fraction;
                    trace.ufls_trips.push((stage_idx, t));
                }
            } else {
                timer.below_since = None;
            }
        }

        let mut storage_mw = 0.0;
        for (k, (device, meter)) in devices.iter_mut().zip(meters.iter_mut()).enumerate() {
            meter.update(state.freq_hz, t, dt)?;
            trace.device_soc_mws[k].push(device.soc_mws);
            let p = controller_update(device, meter, model.f_nominal, t, dt);
            trace.device_power_mw[k].push(p);
            storage_mw += p;
        }

        trace.t_s.push(t);
        trace.freq_hz.push(state.freq_hz);
        trace.rocof_hz_per_s.push(system_meter.rocof_hz_per_s);
        trace.mech_power_mw.push(state.mech_power_mw);
        trace.load_fraction.push(state.load_remaining_fraction);

        if i == steps {
            break;
        }
        let loss = if t >= loss_start { scenario.loss_mw } else { 0.0 };
        let injection = storage_mw - loss;
        state = rk4_step(model, &state, dt, |_| injection)?;
    }
    Ok(trace)
}
