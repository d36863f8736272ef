//! Energy-storage devices and their primary frequency controllers.
//!
//! Two control laws are provided:
//!
//! * **Droop**: the PLL frequency is low-pass filtered and the deviation below
//!   nominal is scaled by a gain, like a governor with droop `droop_ratio` on
//!   the device rating.
//! * **Step**: once the filtered frequency crosses an activation threshold and
//!   a confirmation delay has elapsed, the contingency size is estimated from
//!   the ROCOF and a constant injection is held until the energy runs out:
//!
//! ```text
//! P_step = alpha * 2 * H_sys * |ROCOF| / f_N * C_sys
//! ```
//!
//! Devices only discharge. Output is zero-order held over one simulation step
//! and the state of charge is debited by `P * dt`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StorageKind {
    /// High-energy-density storage (chemical batteries): tens of minutes to hours.
    Hees,
    /// High-power-density storage (super capacitors): seconds of support.
    Hpes,
}

impl StorageKind {
    /// Default discharge horizon at rated power, s.
    pub fn default_duration_s(self) -> f64 {
        match self {
            StorageKind::Hees => 3600.0,
            StorageKind::Hpes => 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroopController {
    /// Per-unit droop on the device rating: full output at a deviation of
    /// `droop_ratio * f_nominal`.
    pub droop_ratio: f64,
    /// Low-pass filter time constant T_1, s.
    pub t_filter_s: f64,
    #[serde(default)]
    pub deadband_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum StepPhase {
    #[default]
    Armed,
    Confirming {
        started_at_s: f64,
    },
    Active {
        p_step_mw: f64,
    },
    Exhausted,
}

impl StepPhase {
    pub fn label(&self) -> &'static str {
        match self {
            StepPhase::Armed => "armed",
            StepPhase::Confirming { .. } => "confirming",
            StepPhase::Active { .. } => "active",
            StepPhase::Exhausted => "exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepController {
    /// Response-contingency ratio, 0 < alpha < 1.
    pub alpha: f64,
    pub activation_hz: f64,
    pub delay_s: f64,
    /// The controller's belief of the system inertia constant, s.
    pub assumed_inertia_s: f64,
    /// The controller's belief of the system MVA capacity.
    pub assumed_capacity_mva: f64,
    /// Measurement filter time constant, s.
    #[serde(default = "default_filter_s")]
    pub t_filter_s: f64,
    /// Fixed step magnitude, MW. Replaces the ROCOF estimate when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub override_power_mw: Option<f64>,
    #[serde(skip)]
    pub phase: StepPhase,
}

fn default_filter_s() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Controller {
    Droop(DroopController),
    Step(StepController),
}

impl Controller {
    pub fn filter_time_constant_s(&self) -> f64 {
        match self {
            Controller::Droop(c) => c.t_filter_s,
            Controller::Step(c) => c.t_filter_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageDevice {
    pub kind: StorageKind,
    /// Converter power limit, MW.
    pub p_max_mw: f64,
    /// Energy capacity, MW*s.
    pub e_max_mws: f64,
    /// Remaining energy, MW*s.
    pub soc_mws: f64,
    /// Linear ramp-out time before the energy runs out, s. Zero drops the
    /// output instantaneously at exhaustion.
    #[serde(default)]
    pub ramp_out_s: f64,
    pub controller: Controller,
}

impl StorageDevice {
    pub fn validate(&self, f_nominal: f64) -> Result<()> {
        if !(self.p_max_mw.is_finite() && self.p_max_mw >= 0.0) {
            return Err(Error::field("p_max_mw", "must be finite and >= 0"));
        }
        if !(self.e_max_mws.is_finite() && self.e_max_mws >= 0.0) {
            return Err(Error::field("e_max_mws", "must be finite and >= 0"));
        }
        if !(self.soc_mws >= 0.0 && self.soc_mws <= self.e_max_mws) {
            return Err(Error::field("soc_mws", "must lie in [0, e_max_mws]"));
        }
        if !(self.ramp_out_s.is_finite() && self.ramp_out_s >= 0.0) {
            return Err(Error::field("ramp_out_s", "must be >= 0"));
        }
        match &self.controller {
            Controller::Droop(c) => {
                if !(c.droop_ratio.is_finite() && c.droop_ratio > 0.0) {
                    return Err(Error::field("controller.droop_ratio", "must be > 0"));
                }
                if !(c.t_filter_s.is_finite() && c.t_filter_s > 0.0) {
                    return Err(Error::field("controller.t_filter_s", "must be > 0"));
                }
                if !(c.deadband_hz.is_finite() && c.deadband_hz >= 0.0) {
                    return Err(Error::field("controller.deadband_hz", "must be >= 0"));
                }
            }
            Controller::Step(c) => {
                if !(c.alpha > 0.0 && c.alpha < 1.0) {
                    return Err(Error::field("controller.alpha", "must lie in (0, 1)"));
                }
                if !(c.activation_hz.is_finite() && c.activation_hz < f_nominal) {
                    return Err(Error::field("controller.activation_hz", "must be below f_nominal"));
                }
                if !(c.delay_s.is_finite() && c.delay_s >= 0.0) {
                    return Err(Error::field("controller.delay_s", "must be >= 0"));
                }
                if !(c.assumed_inertia_s.is_finite() && c.assumed_inertia_s > 0.0) {
                    return Err(Error::field("controller.assumed_inertia_s", "must be > 0"));
                }
                if !(c.assumed_capacity_mva.is_finite() && c.assumed_capacity_mva > 0.0) {
                    return Err(Error::field("controller.assumed_capacity_mva", "must be > 0"));
                }
                if !(c.t_filter_s.is_finite() && c.t_filter_s > 0.0) {
                    return Err(Error::field("controller.t_filter_s", "must be > 0"));
                }
                if let Some(p) = c.override_power_mw {
                    if !(p.is_finite() && p >= 0.0) {
                        return Err(Error::field("controller.override_power_mw", "must be >= 0"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn step_phase(&self) -> Option<StepPhase> {
        match &self.controller {
            Controller::Step(c) => Some(c.phase),
            Controller::Droop(_) => None,
        }
    }
}

/// Frequency measurement chain: first-order PLL filter and a trailing-window
/// least-squares ROCOF estimator on the filtered signal.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub t_filter_s: f64,
    pub window_s: f64,
    pub raw_hz: f64,
    pub filtered_hz: f64,
    pub rocof_hz_per_s: f64,
    /// True while the history does not yet span a full window.
    pub warming_up: bool,
    history: VecDeque<(f64, f64)>,
}

pub const DEFAULT_ROCOF_WINDOW_S: f64 = 0.25;

impl Measurement {
    pub fn new(initial_hz: f64, t_filter_s: f64, window_s: f64) -> Result<Self> {
        if !(window_s.is_finite() && window_s > 0.0) {
            return Err(Error::field("window_s", "must be > 0"));
        }
        if !(t_filter_s.is_finite() && t_filter_s > 0.0) {
            return Err(Error::field("t_filter_s", "must be > 0"));
        }
        Ok(Self {
            t_filter_s,
            window_s,
            raw_hz: initial_hz,
            filtered_hz: initial_hz,
            rocof_hz_per_s: 0.0,
            warming_up: true,
            history: VecDeque::new(),
        })
    }

    /// First-order lag update `y += dt / T_1 * (u - y)`. Returns the new output.
    pub fn filter_frequency(&mut self, raw_hz: f64, dt: f64) -> f64 {
        self.raw_hz = raw_hz;
        self.filtered_hz += dt / self.t_filter_s * (raw_hz - self.filtered_hz);
        self.filtered_hz
    }

    /// Least-squares slope of the filtered frequency over the trailing window.
    /// Returns 0 and sets `warming_up` until the history spans `window_s`.
    pub fn estimate_rocof(&mut self) -> Result<f64> {
        let (Some(first), Some(last)) = (self.history.front(), self.history.back()) else {
            self.warming_up = true;
            self.rocof_hz_per_s = 0.0;
            return Ok(0.0);
        };
        let span = last.0 - first.0;
        if self.history.len() < 2 || span < self.window_s * (1.0 - 1e-9) {
            self.warming_up = true;
            self.rocof_hz_per_s = 0.0;
            return Ok(0.0);
        }
        self.warming_up = false;
        let (a, b) = self.history.as_slices();
        let slope = least_squares_slope(a.iter().chain(b.iter()).copied())?;
        self.rocof_hz_per_s = slope;
        Ok(slope)
    }

    /// Filter a new raw sample taken at time `t`, append it to the history and
    /// refresh the ROCOF estimate.
    pub fn update(&mut self, raw_hz: f64, t: f64, dt: f64) -> Result<f64> {
        let filtered = self.filter_frequency(raw_hz, dt);
        self.history.push_back((t, filtered));
        let horizon = t - self.window_s * (1.0 + 1e-9);
        // Keep the newest sample at or before the window start so the span
        // covers the full window.
        while self.history.len() > 2 && self.history[1].0 <= horizon {
            self.history.pop_front();
        }
        self.estimate_rocof()?;
        Ok(filtered)
    }
}

/// Ordinary least-squares slope of `y` against `t`.
pub fn least_squares_slope<I>(samples: I) -> Result<f64>
where
    I: IntoIterator<Item = (f64, f64)>,
    I::IntoIter: Clone,
{
    let it = samples.into_iter();
    let n = it.clone().count();
    if n < 2 {
        return Err(Error::NumericDomain("slope needs at least two samples".into()));
    }
    let nf = n as f64;
    let (st, sy) = it.clone().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / nf, sy / nf);
    let (sxy, sxx) = it.fold((0.0, 0.0), |(a, b), (t, y)| {
        let dt = t - mt;
        (a + dt * (y - my), b + dt * dt)
    });
    if sxx <= f64::EPSILON * mt.abs().max(1.0) * nf {
        return Err(Error::NumericDomain(
            "degenerate ROCOF window: all timestamps identical".into(),
        ));
    }
    Ok(sxy / sxx)
}

/// Droop output: `(f_N - f_filt - deadband) / (droop_ratio * f_N) * p_max`,
/// clamped to `[0, p_max]`.
pub fn droop_command(ctrl: &DroopController, p_max_mw: f64, f_nominal: f64, filtered_hz: f64) -> f64 {
    let deviation = (f_nominal - filtered_hz - ctrl.deadband_hz).max(0.0);
    (deviation / (ctrl.droop_ratio * f_nominal) * p_max_mw).clamp(0.0, p_max_mw)
}

/// Step magnitude before any converter limit, MW:
/// `alpha * 2 * H * |rocof| / f_N * C`.
pub fn step_magnitude_unclamped(
    alpha: f64,
    inertia_s: f64,
    rocof_hz_per_s: f64,
    f_nominal: f64,
    capacity_mva: f64,
) -> f64 {
    alpha * 2.0 * inertia_s * (rocof_hz_per_s.abs() / f_nominal) * capacity_mva
}

impl StepController {
    /// Step magnitude from the controller's system beliefs, limited to the
    /// converter rating. A configured override takes precedence.
    pub fn step_magnitude(&self, rocof_hz_per_s: f64, f_nominal: f64, p_max_mw: f64) -> f64 {
        let raw = match self.override_power_mw {
            Some(p) => p,
            None => step_magnitude_unclamped(
                self.alpha,
                self.assumed_inertia_s,
                rocof_hz_per_s,
                f_nominal,
                self.assumed_capacity_mva,
            ),
        };
        raw.clamp(0.0, p_max_mw)
    }

    fn command(&mut self, meas: &Measurement, f_nominal: f64, p_max_mw: f64, t: f64) -> f64 {
        if let StepPhase::Armed = self.phase {
            if meas.filtered_hz < self.activation_hz {
                self.phase = StepPhase::Confirming { started_at_s: t };
            }
        }
        if let StepPhase::Confirming { started_at_s } = self.phase {
            if t - started_at_s >= self.delay_s - 1e-9 {
                let rocof = meas.rocof_hz_per_s;
                self.phase = if rocof < 0.0 && !meas.warming_up {
                    StepPhase::Active {
                        p_step_mw: self.step_magnitude(rocof, f_nominal, p_max_mw),
                    }
                } else {
                    // Frequency is not falling: contingency not confirmed.
                    StepPhase::Armed
                };
            }
        }
        match self.phase {
            StepPhase::Active { p_step_mw } => p_step_mw,
            _ => 0.0,
        }
    }
}

/// Advance a device's controller by one major step and debit its energy.
///
/// Must be called once per step after the measurement has been updated for
/// time `t`. Returns the power held over `[t, t + dt)`, MW.
pub fn controller_update(device: &mut StorageDevice, meas: &Measurement, f_nominal: f64, t: f64, dt: f64) -> f64 {
    let p_max = device.p_max_mw;
    let command = match &mut device.controller {
        Controller::Droop(c) => droop_command(c, p_max, f_nominal, meas.filtered_hz),
        Controller::Step(c) => c.command(meas, f_nominal, p_max, t),
    };
    let mut power = command.clamp(0.0, p_max);

    if device.ramp_out_s > 0.0 && power > 0.0 {
        // A linear ramp from P to 0 over ramp_out_s consumes P * ramp_out_s / 2.
        power = power.min((2.0 * device.soc_mws * power / device.ramp_out_s).sqrt());
    }

    let draw = power * dt;
    let exhausted = if device.soc_mws <= 0.0 {
        power = 0.0;
        true
    } else if draw >= device.soc_mws - 1e-9 * device.e_max_mws {
        power = device.soc_mws / dt;
        device.soc_mws = 0.0;
        true
    } else {
        device.soc_mws -= draw;
        false
    };

    if exhausted {
        if let Controller::Step(c) = &mut device.controller {
            if matches!(c.phase, StepPhase::Active { .. }) {
                c.phase = StepPhase::Exhausted;
            }
        }
    }
    power
}

#[cfg(test)]
mod tests {
    use super::*;

    fn droop(p_max: f64, e_max: f64) -> StorageDevice {
        StorageDevice {
            kind: StorageKind::Hpes,
            p_max_mw: p_max,
            e_max_mws: e_max,
            soc_mws: e_max,
            ramp_out_s: 0.0,
            controller: Controller::Droop(DroopController {
                droop_ratio: 0.025,
                t_filter_s: 0.5,
                deadband_hz: 0.0,
            }),
        }
    }

    fn step(p_max: f64, e_max: f64) -> StorageDevice {
        StorageDevice {
            kind: StorageKind::Hpes,
            p_max_mw: p_max,
            e_max_mws: e_max,
            soc_mws: e_max,
            ramp_out_s: 0.0,
            controller: Controller::Step(StepController {
                alpha: 0.85,
                activation_hz: 59.85,
                delay_s: 0.5,
                assumed_inertia_s: 1.0,
                assumed_capacity_mva: 560_000.0,
                t_filter_s: 0.5,
                override_power_mw: None,
                phase: StepPhase::Armed,
            }),
        }
    }

    #[test]
    fn filter_fixed_point() {
        let mut m = Measurement::new(59.9, 0.5, 0.25).unwrap();
        assert_eq!(m.filter_frequency(59.9, 0.01), 59.9);
    }

    #[test]
    fn filter_unit_step_after_one_time_constant() {
        let mut m = Measurement::new(0.0, 0.5, 0.25).unwrap();
        let mut y = 0.0;
        for _ in 0..50 {
            y = m.filter_frequency(1.0, 0.01);
        }
        let exact = 1.0 - (-1.0f64).exp();
        assert!(((y - exact) / exact).abs() < 0.01, "y = {y}");
    }

    #[test]
    fn filter_ramp_lag_is_slope_times_time_constant() {
        let mut m = Measurement::new(0.0, 0.5, 0.25).unwrap();
        let slope = -0.2;
        let dt = 0.001;
        let mut u = 0.0;
        for i in 1..=20_000 {
            u = slope * i as f64 * dt;
            m.filter_frequency(u, dt);
        }
        let lag = m.filtered_hz - u;
        // Discrete Euler lag is m * (T_1 - dt); continuous lag is m * T_1.
        assert!((lag - (-slope) * 0.5).abs() < 1e-3, "lag = {lag}");
    }

    #[test]
    fn rocof_of_a_line() {
        let samples: Vec<(f64, f64)> = (0..26).map(|i| {
            let t = 1.0 + i as f64 * 0.01;
            (t, 60.0 - 0.2 * t)
        }).collect();
        let s = least_squares_slope(samples.iter().copied()).unwrap();
        assert!((s + 0.2).abs() < 1e-9);
        let flat: Vec<(f64, f64)> = samples.iter().map(|&(t, _)| (t, 60.0)).collect();
        assert_eq!(least_squares_slope(flat).unwrap(), 0.0);
    }

    #[test]
    fn rocof_of_a_noisy_line() {
        let samples = (0..26).map(|i| {
            let t = 1.0 + i as f64 * 0.01;
            let noise = if i % 2 == 0 { 1e-3 } else { -1e-3 };
            (t, 60.0 - 0.2 * t + noise)
        });
        let s = least_squares_slope(samples).unwrap();
        assert!((s + 0.2).abs() <= 0.01, "slope = {s}");
    }

    #[test]
    fn rocof_degenerate_window_errors() {
        let r = least_squares_slope(vec![(1.0, 60.0), (1.0, 59.9), (1.0, 59.8)]);
        assert!(matches!(r, Err(Error::NumericDomain(_))));
    }

    #[test]
    fn measurement_warms_up_before_full_window() {
        let mut m = Measurement::new(60.0, 0.5, 0.25).unwrap();
        let dt = 0.01;
        for i in 0..25 {
            m.update(60.0 - 0.01 * i as f64, i as f64 * dt, dt).unwrap();
            assert!(m.warming_up);
            assert_eq!(m.rocof_hz_per_s, 0.0);
        }
        m.update(59.75, 0.25, dt).unwrap();
        assert!(!m.warming_up);
        assert!(m.rocof_hz_per_s < 0.0);
    }

    #[test]
    fn droop_examples() {
        let c = DroopController {
            droop_ratio: 0.025,
            t_filter_s: 0.5,
            deadband_hz: 0.0,
        };
        assert_eq!(droop_command(&c, 3100.0, 60.0, 60.0), 0.0);
        assert!((droop_command(&c, 3100.0, 60.0, 59.85) - 310.0).abs() < 1e-9);
        assert_eq!(droop_command(&c, 3100.0, 60.0, 57.0), 3100.0);
        assert_eq!(droop_command(&c, 3100.0, 60.0, 60.2), 0.0);

        let banded = DroopController { deadband_hz: 0.036, ..c };
        assert_eq!(droop_command(&banded, 3100.0, 60.0, 59.97), 0.0);
        assert!(droop_command(&banded, 3100.0, 60.0, 59.9) > 0.0);
    }

    #[test]
    fn step_magnitude_examples() {
        let Controller::Step(mut c) = step(3100.0, 31_000.0).controller else { unreachable!() };
        assert_eq!(c.step_magnitude(0.0, 60.0, 3100.0), 0.0);
        let raw = step_magnitude_unclamped(0.85, 1.0, -0.241_071_428_571_428_57, 60.0, 560_000.0);
        assert!(((raw - 3825.0) / 3825.0).abs() < 1e-9);
        assert_eq!(c.step_magnitude(-0.241_071_428_571_428_57, 60.0, 3100.0), 3100.0);

        c.assumed_inertia_s = 2.0;
        let doubled = step_magnitude_unclamped(0.85, 2.0, -0.1, 60.0, 560_000.0);
        let single = step_magnitude_unclamped(0.85, 1.0, -0.1, 60.0, 560_000.0);
        assert!((doubled - 2.0 * single).abs() < 1e-9);
        assert!((c.step_magnitude(-0.1, 60.0, 1e9) - doubled).abs() < 1e-9);

        c.override_power_mw = Some(5000.0);
        assert_eq!(c.step_magnitude(-0.1, 60.0, 3100.0), 3100.0);
        c.override_power_mw = Some(1000.0);
        assert_eq!(c.step_magnitude(-0.5, 60.0, 3100.0), 1000.0);
    }

    fn falling_measurement(f: f64) -> Measurement {
        let mut m = Measurement::new(60.0, 0.5, 0.25).unwrap();
        m.filtered_hz = f;
        m.rocof_hz_per_s = -0.2;
        m.warming_up = false;
        m
    }

    #[test]
    fn step_stays_armed_above_threshold() {
        let mut d = step(3100.0, 31_000.0);
        let m = falling_measurement(59.9);
        for i in 0..1000 {
            assert_eq!(controller_update(&mut d, &m, 60.0, i as f64 * 0.01, 0.01), 0.0);
        }
        assert_eq!(d.step_phase(), Some(StepPhase::Armed));
        assert_eq!(d.soc_mws, 31_000.0);
    }

    #[test]
    fn step_confirms_after_delay_then_exhausts() {
        let p_step = 0.85 * 2.0 * 1.0 * (0.2 / 60.0) * 560_000.0;
        let mut d = step(5000.0, p_step * 10.0);
        let m = falling_measurement(59.8);
        let dt = 0.01;
        let mut active_steps = 0;
        let mut outputs = Vec::new();
        for i in 0..2000 {
            let t = i as f64 * dt;
            let p = controller_update(&mut d, &m, 60.0, t, dt);
            outputs.push(p);
            if p > 0.0 {
                active_steps += 1;
            }
            if i < 50 {
                assert_eq!(p, 0.0, "still confirming at t = {t}");
                assert!(matches!(d.step_phase(), Some(StepPhase::Confirming { .. })));
            }
        }
        assert!((outputs[50] - p_step).abs() < 1e-9);
        assert_eq!(active_steps, 1000);
        assert_eq!(d.step_phase(), Some(StepPhase::Exhausted));
        assert_eq!(d.soc_mws, 0.0);
        assert!(outputs[1050..].iter().all(|&p| p == 0.0));
    }

    #[test]
    fn step_rearms_when_frequency_not_falling() {
        let mut d = step(3100.0, 31_000.0);
        let mut m = falling_measurement(59.8);
        m.rocof_hz_per_s = 0.05;
        for i in 0..=50 {
            controller_update(&mut d, &m, 60.0, i as f64 * 0.01, 0.01);
        }
        assert_eq!(d.step_phase(), Some(StepPhase::Armed));
    }

    #[test]
    fn hees_does_not_exhaust_within_a_minute() {
        let mut d = step(3100.0, 3100.0 * StorageKind::Hees.default_duration_s());
        d.kind = StorageKind::Hees;
        let m = falling_measurement(59.8);
        for i in 0..6000 {
            controller_update(&mut d, &m, 60.0, i as f64 * 0.01, 0.01);
        }
        assert!(matches!(d.step_phase(), Some(StepPhase::Active { .. })));
        assert!(d.soc_mws > 0.0);
    }

    #[test]
    fn droop_drains_exactly_to_zero() {
        let mut d = droop(3100.0, 100.0);
        let m = falling_measurement(59.0);
        let dt = 0.01;
        let mut used = 0.0;
        for i in 0..1000 {
            let p = controller_update(&mut d, &m, 60.0, i as f64 * dt, dt);
            assert!((0.0..=3100.0).contains(&p));
            used += p * dt;
        }
        assert!((used - 100.0).abs() < 1e-9);
        assert_eq!(d.soc_mws, 0.0);
    }

    #[test]
    fn ramp_out_spreads_the_withdrawal() {
        let mut d = droop(3100.0, 2000.0);
        d.ramp_out_s = 1.0;
        let m = falling_measurement(58.5);
        let dt = 0.01;
        let mut powers = Vec::new();
        for i in 0..300 {
            powers.push(controller_update(&mut d, &m, 60.0, i as f64 * dt, dt));
        }
        let max_drop = powers.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
        assert!(max_drop < 3100.0 / 2.0, "largest single-step drop {max_drop}");
        assert!(powers.iter().all(|&p| (0.0..=3100.0).contains(&p)));
    }

    #[test]
    fn validation_rejects_bad_alpha() {
        let mut d = step(3100.0, 31_000.0);
        if let Controller::Step(c) = &mut d.controller {
            c.alpha = 1.0;
        }
        assert!(d.validate(60.0).is_err());
        assert!(step(3100.0, 31_000.0).validate(60.0).is_ok());
        let mut d = droop(3100.0, 10.0);
        d.soc_mws = 11.0;
        assert!(d.validate(60.0).is_err());
    }
}
