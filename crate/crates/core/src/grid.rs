//! Aggregated single-bus frequency dynamics.
//!
//! The interconnection is reduced to one equivalent rotating mass (the swing
//! equation on the system MVA base) and one equivalent reheat steam
//! governor-turbine fleet:
//!
//! ```text
//! df/dt      = f_N * dP / (2 * H * C)
//! dP         = P_mech + P_inj + P_shed - D * L_rem * (f - f_N)
//! dvalve/dt  = (-(f - f_N) / (R * f_N) - valve) / T_g
//! dreheat/dt = (valve - reheat) / T_rh
//! P_mech     = clamp(M * (F_H * valve + (1 - F_H) * reheat), 0, headroom)
//! ```
//!
//! States are advanced with a classical fixed-step RK4 scheme. External
//! injections (storage output, contingency loss) are supplied through a
//! callback evaluated at the sub-step times.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GovernorFleet {
    /// Governor-responsive capacity, MVA.
    pub responsive_mva: f64,
    /// Permanent droop R, per unit.
    pub droop_pu: f64,
    /// Valve/servo time constant, s.
    pub t_governor_s: f64,
    /// Reheater time constant, s.
    pub t_reheat_s: f64,
    /// High-pressure turbine power fraction F_H.
    pub hp_fraction: f64,
    /// Maximum additional mechanical power the fleet can deliver, MW.
    pub headroom_mw: f64,
}

impl GovernorFleet {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("governor.responsive_mva", self.responsive_mva),
            ("governor.droop_pu", self.droop_pu),
            ("governor.t_governor_s", self.t_governor_s),
            ("governor.t_reheat_s", self.t_reheat_s),
            ("governor.hp_fraction", self.hp_fraction),
            ("governor.headroom_mw", self.headroom_mw),
        ] {
            if !v.is_finite() {
                return Err(Error::field(name, "must be finite"));
            }
        }
        if self.droop_pu <= 0.0 {
            return Err(Error::field("governor.droop_pu", "must be > 0"));
        }
        if self.t_governor_s <= 0.0 {
            return Err(Error::field("governor.t_governor_s", "must be > 0"));
        }
        if self.t_reheat_s <= 0.0 {
            return Err(Error::field("governor.t_reheat_s", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.hp_fraction) {
            return Err(Error::field("governor.hp_fraction", "must lie in [0, 1]"));
        }
        if self.headroom_mw < 0.0 {
            return Err(Error::field("governor.headroom_mw", "must be >= 0"));
        }
        if self.responsive_mva < 0.0 {
            return Err(Error::field("governor.responsive_mva", "must be >= 0"));
        }
        Ok(())
    }

    /// Mechanical power deviation produced by the given internal states, MW.
    pub fn mech_power_mw(&self, valve_pu: f64, reheat_pu: f64) -> f64 {
        let raw = self.responsive_mva
            * (self.hp_fraction * valve_pu + (1.0 - self.hp_fraction) * reheat_pu);
        raw.clamp(0.0, self.headroom_mw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UflsStage {
    pub threshold_hz: f64,
    /// Fraction of the *remaining* load disconnected when the stage trips.
    pub shed_fraction: f64,
    /// Time the filtered frequency must stay below the threshold, s.
    pub delay_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridModel {
    pub f_nominal: f64,
    pub capacity_mva: f64,
    /// Average inertia constant on `capacity_mva`, s.
    pub inertia_s: f64,
    pub load_mw: f64,
    /// Load frequency sensitivity, fraction of connected load per Hz.
    pub damping_pu_per_hz: f64,
    pub governor: GovernorFleet,
    /// Under-frequency load-shedding stages, ordered by decreasing threshold.
    /// Empty when shedding is disabled.
    #[serde(default)]
    pub ufls: Vec<UflsStage>,
}

impl GridModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("f_nominal", self.f_nominal),
            ("capacity_mva", self.capacity_mva),
            ("inertia_s", self.inertia_s),
            ("load_mw", self.load_mw),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::field(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.damping_pu_per_hz.is_finite() && self.damping_pu_per_hz >= 0.0) {
            return Err(Error::field("damping_pu_per_hz", "must be finite and >= 0"));
        }
        self.governor.validate()?;
        let mut previous = f64::INFINITY;
        for (i, stage) in self.ufls.iter().enumerate() {
            let field = |f: &str| format!("ufls[{i}].{f}");
            if !(stage.threshold_hz.is_finite() && stage.threshold_hz < self.f_nominal) {
                return Err(Error::field(field("threshold_hz"), "must be below f_nominal"));
            }
            if stage.threshold_hz >= previous {
                return Err(Error::field(
                    field("threshold_hz"),
                    "stage thresholds must be strictly decreasing",
                ));
            }
            if !(stage.shed_fraction > 0.0 && stage.shed_fraction <= 1.0) {
                return Err(Error::field(field("shed_fraction"), "must lie in (0, 1]"));
            }
            if !(stage.delay_s.is_finite() && stage.delay_s >= 0.0) {
                return Err(Error::field(field("delay_s"), "must be >= 0"));
            }
            previous = stage.threshold_hz;
        }
        Ok(())
    }

    /// Initial equilibrium: nominal frequency, governors at their set points.
    pub fn initial_state(&self) -> SystemState {
        SystemState {
            t: 0.0,
            freq_hz: self.f_nominal,
            gov_valve_pu: 0.0,
            gov_reheat_pu: 0.0,
            mech_power_mw: 0.0,
            load_remaining_fraction: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub t: f64,
    pub freq_hz: f64,
    pub gov_valve_pu: f64,
    pub gov_reheat_pu: f64,
    /// Fleet mechanical power deviation, MW. Derived from the governor states.
    pub mech_power_mw: f64,
    pub load_remaining_fraction: f64,
}

impl SystemState {
    fn check_finite(&self) -> Result<()> {
        ensure_finite("t", self.t)?;
        ensure_finite("freq_hz", self.freq_hz)?;
        ensure_finite("gov_valve_pu", self.gov_valve_pu)?;
        ensure_finite("gov_reheat_pu", self.gov_reheat_pu)?;
        ensure_finite("load_remaining_fraction", self.load_remaining_fraction)
    }
}

/// Time derivatives of the integrated states.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateRates {
    pub freq_hz_per_s: f64,
    pub valve_per_s: f64,
    pub reheat_per_s: f64,
}

/// Net accelerating power at the bus, MW, for an external injection
/// (storage output minus contingency loss).
pub fn net_power_mw(model: &GridModel, state: &SystemState, injection_mw: f64) -> f64 {
    let mech = model
        .governor
        .mech_power_mw(state.gov_valve_pu, state.gov_reheat_pu);
    let shed = model.load_mw * (1.0 - state.load_remaining_fraction);
    let damping = model.damping_pu_per_hz
        * model.load_mw
        * state.load_remaining_fraction
        * (state.freq_hz - model.f_nominal);
    mech + injection_mw + shed - damping
}

/// Swing equation on the system base: `df/dt = f_N * dP / (2 H C)`, Hz/s.
///
/// `injection_mw` is every external injection seen by the bus (storage output
/// minus contingency loss). Governor mechanical power, shed load and load
/// damping are taken from `state`.
pub fn swing_derivative(model: &GridModel, state: &SystemState, injection_mw: f64) -> Result<f64> {
    state.check_finite()?;
    ensure_finite("injection_mw", injection_mw)?;
    let dp = net_power_mw(model, state, injection_mw);
    Ok(model.f_nominal * dp / (2.0 * model.inertia_s * model.capacity_mva))
}

/// Valve and reheat lag rates of the governor fleet, per unit per second.
pub fn governor_derivatives(model: &GridModel, state: &SystemState) -> Result<(f64, f64)> {
    state.check_finite()?;
    let gov = &model.governor;
    let target = -(state.freq_hz - model.f_nominal) / (gov.droop_pu * model.f_nominal);
    let valve = (target - state.gov_valve_pu) / gov.t_governor_s;
    let reheat = (state.gov_valve_pu - state.gov_reheat_pu) / gov.t_reheat_s;
    Ok((valve, reheat))
}

fn rates(model: &GridModel, state: &SystemState, injection_mw: f64) -> Result<StateRates> {
    let freq_hz_per_s = swing_derivative(model, state, injection_mw)?;
    let (valve_per_s, reheat_per_s) = governor_derivatives(model, state)?;
    Ok(StateRates {
        freq_hz_per_s,
        valve_per_s,
        reheat_per_s,
    })
}

fn advance(state: &SystemState, k: &StateRates, h: f64) -> SystemState {
    SystemState {
        t: state.t + h,
        freq_hz: state.freq_hz + h * k.freq_hz_per_s,
        gov_valve_pu: state.gov_valve_pu + h * k.valve_per_s,
        gov_reheat_pu: state.gov_reheat_pu + h * k.reheat_per_s,
        ..*state
    }
}

/// One classical fourth-order Runge-Kutta step of length `dt`.
///
/// `injection` is called with the absolute sub-step time and must return the
/// external injection in MW. The load fraction is held constant over the
/// step; load-shedding actions are applied between steps.
pub fn rk4_step<F>(model: &GridModel, state: &SystemState, dt: f64, mut injection: F) -> Result<SystemState>
where
    F: FnMut(f64) -> f64,
{
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::NumericDomain(format!("dt must be finite and > 0, got {dt}")));
    }
    let t = state.t;
    let half = 0.5 * dt;

    let k1 = rates(model, state, injection(t))?;
    let s2 = advance(state, &k1, half);
    let k2 = rates(model, &s2, injection(t + half))?;
    let s3 = advance(state, &k2, half);
    let k3 = rates(model, &s3, injection(t + half))?;
    let s4 = advance(state, &k3, dt);
    let k4 = rates(model, &s4, injection(t + dt))?;

    let combine = |a: f64, b: f64, c: f64, d: f64| dt / 6.0 * (a + 2.0 * b + 2.0 * c + d);
    let mut next = SystemState {
        t: t + dt,
        freq_hz: state.freq_hz
            + combine(
                k1.freq_hz_per_s,
                k2.freq_hz_per_s,
                k3.freq_hz_per_s,
                k4.freq_hz_per_s,
            ),
        gov_valve_pu: state.gov_valve_pu
            + combine(k1.valve_per_s, k2.valve_per_s, k3.valve_per_s, k4.valve_per_s),
        gov_reheat_pu: state.gov_reheat_pu
            + combine(k1.reheat_per_s, k2.reheat_per_s, k3.reheat_per_s, k4.reheat_per_s),
        mech_power_mw: 0.0,
        load_remaining_fraction: state.load_remaining_fraction,
    };
    next.mech_power_mw = model
        .governor
        .mech_power_mw(next.gov_valve_pu, next.gov_reheat_pu);

    if next.check_finite().is_err() || !next.mech_power_mw.is_finite() {
        return Err(Error::SimulationAborted {
            t: next.t,
            reason: format!(
                "non-finite state after step (f = {}, valve = {}, reheat = {})",
                next.freq_hz, next.gov_valve_pu, next.gov_reheat_pu
            ),
        });
    }
    Ok(next)
}
