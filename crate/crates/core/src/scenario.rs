//! Scenario presets, renewable-penetration derating and configuration files.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GovernorFleet, GridModel, UflsStage};
use crate::storage::{
    Controller, DroopController, StepController, StepPhase, StorageDevice, StorageKind,
    DEFAULT_ROCOF_WINDOW_S,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "EI", alias = "ei")]
    Ei,
    #[serde(rename = "ERCOT", alias = "ercot")]
    Ercot,
    #[serde(rename = "Custom", alias = "custom")]
    Custom,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Ei => "EI",
            Preset::Ercot => "ERCOT",
            Preset::Custom => "Custom",
        })
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ei" => Ok(Preset::Ei),
            "ercot" => Ok(Preset::Ercot),
            "custom" => Ok(Preset::Custom),
            _ => Err(Error::UnknownPreset(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlMode {
    None,
    Droop,
    Step,
}

impl FromStr for ControlMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(ControlMode::None),
            "droop" => Ok(ControlMode::Droop),
            "step" => Ok(ControlMode::Step),
            _ => Err(Error::field("control", format!("unknown control `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub preset: Preset,
    pub pv_fraction: f64,
    pub wind_fraction: f64,
    /// Generation lost at `loss_time_s`, MW.
    pub loss_mw: f64,
    pub loss_time_s: f64,
    pub dt_s: f64,
    pub duration_s: f64,
    pub ufls_enabled: bool,
    pub rocof_window_s: f64,
    /// Time constant of the system-level frequency measurement used for the
    /// ROCOF trace and UFLS relays, s.
    pub measurement_filter_s: f64,
}

impl Scenario {
    pub fn synchronous_share(&self) -> f64 {
        1.0 - self.pv_fraction - self.wind_fraction
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("pv_fraction", self.pv_fraction), ("wind_fraction", self.wind_fraction)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::field(name, "must lie in [0, 1]"));
            }
        }
        if self.synchronous_share() <= 0.0 {
            return Err(Error::InvalidScenario(format!(
                "pv_fraction + wind_fraction = {} leaves no synchronous generation",
                self.pv_fraction + self.wind_fraction
            )));
        }
        if !(self.loss_mw.is_finite() && self.loss_mw >= 0.0) {
            return Err(Error::field("loss_mw", "must be finite and >= 0"));
        }
        if !(self.loss_time_s.is_finite() && self.loss_time_s >= 0.0) {
            return Err(Error::field("loss_time_s", "must be >= 0"));
        }
        if !(self.dt_s.is_finite() && self.dt_s > 0.0) {
            return Err(Error::field("dt_s", "must be > 0"));
        }
        if !(self.duration_s.is_finite() && self.duration_s > self.loss_time_s) {
            return Err(Error::field("duration_s", "must exceed loss_time_s"));
        }
        if !(self.rocof_window_s.is_finite() && self.rocof_window_s > 0.0) {
            return Err(Error::field("rocof_window_s", "must be > 0"));
        }
        if !(self.measurement_filter_s.is_finite() && self.measurement_filter_s > 0.0) {
            return Err(Error::field("measurement_filter_s", "must be > 0"));
        }
        Ok(())
    }

    /// Same scenario with a different renewable mix.
    pub fn with_penetration(&self, pv_fraction: f64, wind_fraction: f64) -> Scenario {
        Scenario {
            pv_fraction,
            wind_fraction,
            ..self.clone()
        }
    }
}

/// Derate a base (all-synchronous) grid for the scenario's renewable share.
///
/// Renewables run at their maximum power point: they displace synchronous
/// units but add no inertia, no governor response and no headroom. With the
/// synchronous share `s = 1 - pv - wind`, the inertia constant, responsive
/// capacity and headroom all scale by `s`.
pub fn build_model(scenario: &Scenario, base: &GridModel) -> Result<GridModel> {
    scenario.validate()?;
    base.validate()?;
    let s = scenario.synchronous_share();
    let mut model = base.clone();
    model.inertia_s = base.inertia_s * s;
    model.governor.responsive_mva = base.governor.responsive_mva * s;
    model.governor.headroom_mw = base.governor.headroom_mw * s;
    if !scenario.ufls_enabled {
        model.ufls.clear();
    }
    Ok(model)
}

/// Storage and control parameters of one interconnection study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetTable {
    pub load_mw: f64,
    pub loss_mw: f64,
    pub p_max_mw: f64,
    /// Energy capacity of the energy-limited device, MW*s.
    pub e_max_mws: f64,
    pub droop_ratio: f64,
    pub t_filter_s: f64,
    pub activation_hz: f64,
    pub step_delay_s: f64,
    pub alpha: f64,
}

pub const EI_TABLE: PresetTable = PresetTable {
    load_mw: 560_000.0,
    loss_mw: 4_500.0,
    p_max_mw: 3_100.0,
    e_max_mws: 3_100.0 * 10.0,
    droop_ratio: 0.025,
    t_filter_s: 0.5,
    activation_hz: 59.85,
    step_delay_s: 0.5,
    alpha: 0.85,
};

pub const ERCOT_TABLE: PresetTable = PresetTable {
    load_mw: 75_000.0,
    loss_mw: 2_750.0,
    p_max_mw: 2_630.0,
    e_max_mws: 2_630.0 * 10.0,
    droop_ratio: 0.05,
    t_filter_s: 0.5,
    activation_hz: 59.55,
    step_delay_s: 0.5,
    alpha: 0.85,
};

/// Equivalent synchronous fleet of a preset before renewable derating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FleetCalibration {
    /// Inertia constant with no renewables, s.
    pub base_inertia_s: f64,
    /// Governor-responsive capacity as a fraction of system capacity.
    pub responsive_share: f64,
    /// Governor headroom as a fraction of responsive capacity.
    pub headroom_fraction: f64,
    pub droop_pu: f64,
    pub t_governor_s: f64,
    pub t_reheat_s: f64,
    pub hp_fraction: f64,
}

/// Textbook single-machine reheat fleet.
pub const DEFAULT_FLEET: FleetCalibration = FleetCalibration {
    base_inertia_s: 5.0,
    responsive_share: 1.0,
    headroom_fraction: 0.1,
    droop_pu: 0.05,
    t_governor_s: 0.2,
    t_reheat_s: 8.0,
    hp_fraction: 0.3,
};

/// Eastern Interconnection equivalent: a thin responsive fleet with a fast
/// high-pressure stage, so storage carries a visible share of the deficit.
pub const EI_FLEET: FleetCalibration = FleetCalibration {
    responsive_share: 0.3,
    headroom_fraction: 0.3,
    hp_fraction: 0.7,
    ..DEFAULT_FLEET
};

/// ERCOT equivalent: heavier rotating mass per MW of load and a larger
/// responsive fleet.
pub const ERCOT_FLEET: FleetCalibration = FleetCalibration {
    base_inertia_s: 20.0,
    responsive_share: 1.25,
    headroom_fraction: 0.2,
    ..DEFAULT_FLEET
};

/// Default UFLS program, used only when shedding is enabled.
pub fn default_ufls() -> Vec<UflsStage> {
    vec![
        UflsStage { threshold_hz: 59.3, shed_fraction: 0.05, delay_s: 0.1 },
        UflsStage { threshold_hz: 58.9, shed_fraction: 0.10, delay_s: 0.1 },
        UflsStage { threshold_hz: 58.5, shed_fraction: 0.10, delay_s: 0.1 },
    ]
}

impl FleetCalibration {
    /// All-synchronous grid serving `load_mw` with capacity equal to load.
    pub fn base_grid(&self, load_mw: f64) -> GridModel {
        let responsive = load_mw * self.responsive_share;
        GridModel {
            f_nominal: 60.0,
            capacity_mva: load_mw,
            inertia_s: self.base_inertia_s,
            load_mw,
            damping_pu_per_hz: 0.0,
            governor: GovernorFleet {
                responsive_mva: responsive,
                droop_pu: self.droop_pu,
                t_governor_s: self.t_governor_s,
                t_reheat_s: self.t_reheat_s,
                hp_fraction: self.hp_fraction,
                headroom_mw: responsive * self.headroom_fraction,
            },
            ufls: default_ufls(),
        }
    }
}

pub fn preset_table(preset: Preset) -> Result<PresetTable> {
    match preset {
        Preset::Ei => Ok(EI_TABLE),
        Preset::Ercot => Ok(ERCOT_TABLE),
        Preset::Custom => Err(Error::UnknownPreset("Custom has no parameter table".into())),
    }
}

pub fn preset_fleet(preset: Preset) -> Result<FleetCalibration> {
    match preset {
        Preset::Ei => Ok(EI_FLEET),
        Preset::Ercot => Ok(ERCOT_FLEET),
        Preset::Custom => Err(Error::UnknownPreset("Custom has no fleet calibration".into())),
    }
}

/// Base grid (no renewables) of a preset interconnection.
pub fn preset_base_grid(preset: Preset) -> Result<GridModel> {
    let table = preset_table(preset)?;
    Ok(preset_fleet(preset)?.base_grid(table.load_mw))
}

/// Default scenario of a preset: 65% PV + 15% wind, RCC loss at t = 1 s,
/// 60 s at dt = 0.01 s, UFLS disabled.
pub fn preset_scenario(preset: Preset) -> Result<Scenario> {
    let table = preset_table(preset)?;
    Ok(Scenario {
        name: preset.to_string(),
        preset,
        pv_fraction: 0.65,
        wind_fraction: 0.15,
        loss_mw: table.loss_mw,
        loss_time_s: 1.0,
        dt_s: 0.01,
        duration_s: 60.0,
        ufls_enabled: false,
        rocof_window_s: DEFAULT_ROCOF_WINDOW_S,
        measurement_filter_s: table.t_filter_s,
    })
}

/// One aggregated storage device with the table's parameters.
///
/// The step controller's system beliefs are taken from `model`, i.e. the
/// controller is given accurate inertia and capacity information.
pub fn table_device(
    table: &PresetTable,
    control: ControlMode,
    kind: StorageKind,
    model: &GridModel,
) -> Option<StorageDevice> {
    let controller = match control {
        ControlMode::None => return None,
        ControlMode::Droop => Controller::Droop(DroopController {
            droop_ratio: table.droop_ratio,
            t_filter_s: table.t_filter_s,
            deadband_hz: 0.0,
        }),
        ControlMode::Step => Controller::Step(StepController {
            alpha: table.alpha,
            activation_hz: table.activation_hz,
            delay_s: table.step_delay_s,
            assumed_inertia_s: model.inertia_s,
            assumed_capacity_mva: model.capacity_mva,
            t_filter_s: table.t_filter_s,
            override_power_mw: None,
            phase: StepPhase::Armed,
        }),
    };
    let e_max = match kind {
        StorageKind::Hpes => table.e_max_mws,
        StorageKind::Hees => table.p_max_mw * kind.default_duration_s(),
    };
    Some(StorageDevice {
        kind,
        p_max_mw: table.p_max_mw,
        e_max_mws: e_max,
        soc_mws: e_max,
        ramp_out_s: 0.0,
        controller,
    })
}

/// Preset scenario plus its aggregated droop-controlled HPES device.
pub fn preset(name: &str) -> Result<(Scenario, Vec<StorageDevice>)> {
    let p: Preset = name.parse()?;
    if p == Preset::Custom {
        return Err(Error::UnknownPreset(name.to_string()));
    }
    let study = Study::from_preset(p, ControlMode::Droop, StorageKind::Hpes)?;
    Ok((study.scenario, study.devices))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SweepSpec {
    /// Energy capacities, MW*s. Each point sets `e_max` and the initial SoC.
    Capacity { values: Vec<f64> },
    /// Discharge durations, s, for step-controlled devices.
    Duration { values: Vec<f64> },
    /// Renewable penetration levels; PV share = level - wind share.
    Penetration { values: Vec<f64> },
}

/// A fully specified study: scenario, base grid, storage fleet, optional sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub scenario: Scenario,
    pub base_grid: GridModel,
    pub devices: Vec<StorageDevice>,
    pub sweep: Option<SweepSpec>,
}

impl Study {
    pub fn from_preset(preset: Preset, control: ControlMode, kind: StorageKind) -> Result<Study> {
        let scenario = preset_scenario(preset)?;
        let base_grid = preset_base_grid(preset)?;
        let model = build_model(&scenario, &base_grid)?;
        let table = preset_table(preset)?;
        Ok(Study {
            devices: table_device(&table, control, kind, &model).into_iter().collect(),
            scenario,
            base_grid,
            sweep: None,
        })
    }

    pub fn model(&self) -> Result<GridModel> {
        build_model(&self.scenario, &self.base_grid)
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.model()?;
        for d in &self.devices {
            d.validate(model.f_nominal)?;
        }
        match &self.sweep {
            Some(SweepSpec::Capacity { values }) | Some(SweepSpec::Duration { values }) => {
                if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::field("sweep.values", "must be a non-empty list of positive numbers"));
                }
                if values.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::field("sweep.values", "must be strictly ascending"));
                }
            }
            Some(SweepSpec::Penetration { values })
                if values.is_empty() || values.iter().any(|v| !(0.0..1.0).contains(v)) =>
            {
                return Err(Error::field("sweep.values", "penetration levels must lie in [0, 1)"));
            }
            Some(SweepSpec::Penetration { .. }) | None => {}
        }
        Ok(())
    }

    /// Fully explicit configuration describing this study.
    pub fn to_config(&self) -> ConfigFile {
        let s = &self.scenario;
        ConfigFile {
            name: Some(s.name.clone()),
            preset: s.preset,
            pv_fraction: Some(s.pv_fraction),
            wind_fraction: Some(s.wind_fraction),
            loss_mw: Some(s.loss_mw),
            loss_time_s: Some(s.loss_time_s),
            dt_s: Some(s.dt_s),
            duration_s: Some(s.duration_s),
            ufls_enabled: Some(s.ufls_enabled),
            rocof_window_s: Some(s.rocof_window_s),
            measurement_filter_s: Some(s.measurement_filter_s),
            base_grid: Some(self.base_grid.clone()),
            control: None,
            storage_kind: None,
            devices: Some(self.devices.clone()),
            sweep: self.sweep.clone(),
        }
    }
}

/// On-disk study description (JSON). Every field except `preset` is optional
/// and overrides the preset default. Units: MW, MW*s, Hz, s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub preset: Preset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pv_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wind_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_mw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_time_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ufls_enabled: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rocof_window_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement_filter_s: Option<f64>,
    /// All-synchronous grid before derating. Required for `Custom`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_grid: Option<GridModel>,
    /// Builds the preset's table device with this controller.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage_kind: Option<StorageKind>,
    /// Explicit storage fleet; excludes `control` / `storage_kind`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub devices: Option<Vec<StorageDevice>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile> {
        serde_json::from_str(text).map_err(|e| Error::ConfigParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Resolve overrides against the preset and validate every invariant.
    pub fn into_study(self) -> Result<Study> {
        let custom = self.preset == Preset::Custom;
        let mut scenario = if custom {
            Scenario {
                name: "Custom".into(),
                preset: Preset::Custom,
                pv_fraction: 0.0,
                wind_fraction: 0.0,
                loss_mw: 0.0,
                loss_time_s: 1.0,
                dt_s: 0.01,
                duration_s: 60.0,
                ufls_enabled: false,
                rocof_window_s: DEFAULT_ROCOF_WINDOW_S,
                measurement_filter_s: 0.5,
            }
        } else {
            preset_scenario(self.preset)?
        };
        macro_rules! apply {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field { scenario.$field = v; }
            )*};
        }
        apply!(
            pv_fraction,
            wind_fraction,
            loss_mw,
            loss_time_s,
            dt_s,
            duration_s,
            ufls_enabled,
            rocof_window_s,
            measurement_filter_s
        );
        if let Some(name) = self.name {
            scenario.name = name;
        }

        let base_grid = match (self.base_grid, custom) {
            (Some(g), _) => g,
            (None, false) => preset_base_grid(self.preset)?,
            (None, true) => {
                return Err(Error::field("base_grid", "required for the Custom preset"));
            }
        };
        let model = build_model(&scenario, &base_grid)?;

        let devices = match self.devices {
            Some(devices) => {
                if self.control.is_some() || self.storage_kind.is_some() {
                    return Err(Error::field(
                        "devices",
                        "cannot be combined with `control` or `storage_kind`",
                    ));
                }
                devices
            }
            None => {
                let control = self.control.unwrap_or(ControlMode::Droop);
                let kind = self.storage_kind.unwrap_or(StorageKind::Hpes);
                if custom && control != ControlMode::None {
                    return Err(Error::field(
                        "devices",
                        "the Custom preset needs an explicit device list",
                    ));
                }
                if custom {
                    Vec::new()
                } else {
                    let table = preset_table(self.preset)?;
                    table_device(&table, control, kind, &model).into_iter().collect()
                }
            }
        };

        let study = Study {
            scenario,
            base_grid,
            devices,
            sweep: self.sweep,
        };
        study.validate()?;
        Ok(study)
    }
}

/// Read, parse and validate a study configuration file.
pub fn load_config(path: &Path) -> Result<Study> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::ConfigNotFound(path.to_path_buf()));
        }
        Err(e) => return Err(e.into()),
    };
    ConfigFile::parse(&text)?.into_study()
}
