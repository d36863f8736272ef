//! Frequency-response metrics and storage sensitivity sweeps.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridModel;
use crate::scenario::{build_model, Scenario, Study, SweepSpec};
use crate::sim::{run_simulation, Trace};
use crate::storage::{Controller, StorageDevice};

/// Minimum rise between two dips for them to count as separate nadirs, Hz.
pub const NADIR_PROMINENCE_HZ: f64 = 0.005;
/// Length of the tail averaged into the settling frequency, s.
pub const SETTLING_WINDOW_S: f64 = 5.0;
/// Largest first/second nadir gap accepted as a crossover, Hz.
pub const CROSSOVER_TOLERANCE_HZ: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalNadir {
    pub time_s: f64,
    pub hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub nadir_hz: f64,
    pub nadir_time_s: f64,
    pub first_nadir: Option<LocalNadir>,
    pub second_nadir: Option<LocalNadir>,
    /// Mean frequency over the final settling window.
    pub settling_hz: f64,
    /// Set when the trace is shorter than the settling window.
    pub settling_window_truncated: bool,
    pub min_rocof_hz_per_s: f64,
    /// Trapezoidal storage energy over the trace, MW*s.
    pub energy_used_mws: f64,
    pub peak_power_mw: f64,
    pub ufls_triggered: bool,
}

impl Metrics {
    /// True when the global nadir is the later of two distinct dips.
    pub fn nadir_is_second(&self) -> bool {
        self.second_nadir
            .is_some_and(|n| n.time_s == self.nadir_time_s && n.hz == self.nadir_hz)
    }
}

/// Significant local minima of `values`, in time order.
///
/// A dip counts when the signal falls at least `prominence` below the
/// preceding peak (or the start of the trace) and, unless it is the final
/// dip, rises again by at least `prominence` afterwards.
pub fn local_minima(values: &[f64], prominence: f64) -> Vec<usize> {
    let mut minima = Vec::new();
    let Some(&first) = values.first() else {
        return minima;
    };
    let mut seeking_min = true;
    let mut last_peak = first;
    let mut run_min = (0usize, first);
    let mut run_max = (0usize, first);

    for (i, &v) in values.iter().enumerate() {
        if seeking_min {
            if v < run_min.1 {
                run_min = (i, v);
            } else if v >= run_min.1 + prominence {
                if last_peak - run_min.1 >= prominence {
                    minima.push(run_min.0);
                }
                seeking_min = false;
                run_max = (i, v);
            }
        } else if v > run_max.1 {
            run_max = (i, v);
        } else if v <= run_max.1 - prominence {
            last_peak = run_max.1;
            seeking_min = true;
            run_min = (i, v);
        }
    }
    if seeking_min && last_peak - run_min.1 >= prominence {
        minima.push(run_min.0);
    }
    minima
}

pub fn compute_metrics(trace: &Trace) -> Result<Metrics> {
    if trace.is_empty() {
        return Err(Error::EmptySeries);
    }
    let f = &trace.freq_hz;
    let t = &trace.t_s;

    let mut nadir_idx = 0;
    for (i, &v) in f.iter().enumerate() {
        if v < f[nadir_idx] {
            nadir_idx = i;
        }
    }

    let mut dips = local_minima(f, NADIR_PROMINENCE_HZ);
    // Keep the two deepest, reported in time order.
    dips.sort_by(|&a, &b| f[a].total_cmp(&f[b]).then(a.cmp(&b)));
    dips.truncate(2);
    dips.sort_unstable();
    let as_nadir = |i: usize| LocalNadir { time_s: t[i], hz: f[i] };

    let t_end = *t.last().expect("non-empty");
    let tail_start = t_end - SETTLING_WINDOW_S;
    let truncated = t[0] > tail_start + 1e-9;
    let tail: Vec<f64> = t
        .iter()
        .zip(f)
        .filter(|(&ti, _)| ti >= tail_start - 1e-9)
        .map(|(_, &v)| v)
        .collect();
    let settling_hz = tail.iter().sum::<f64>() / tail.len() as f64;

    let min_rocof = trace
        .rocof_hz_per_s
        .iter()
        .copied()
        .fold(0.0, f64::min);
    let peak_power = (0..trace.len())
        .map(|i| trace.es_power_mw(i))
        .fold(0.0, f64::max);

    Ok(Metrics {
        nadir_hz: f[nadir_idx],
        nadir_time_s: t[nadir_idx],
        first_nadir: dips.first().map(|&i| as_nadir(i)),
        second_nadir: dips.get(1).map(|&i| as_nadir(i)),
        settling_hz,
        settling_window_truncated: truncated,
        min_rocof_hz_per_s: min_rocof,
        energy_used_mws: trace.es_energy_mws(),
        peak_power_mw: peak_power,
        ufls_triggered: !trace.ufls_trips.is_empty(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least-squares line through `(x, y)` pairs.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - (intercept + slope * a)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    /// Energy capacity, MW*s.
    Capacity,
    /// Discharge duration, s.
    Duration,
    /// Renewable penetration, fraction.
    Penetration,
}

impl SweepParameter {
    pub fn column(&self) -> &'static str {
        match self {
            SweepParameter::Capacity => "e_max_mws",
            SweepParameter::Duration => "duration_s",
            SweepParameter::Penetration => "penetration",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn nadirs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.metrics.nadir_hz).collect()
    }

    pub fn nadir_times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.metrics.nadir_time_s).collect()
    }

    /// Consecutive nadir changes, Hz.
    pub fn nadir_increments(&self) -> Vec<f64> {
        self.nadirs().windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn nadir_non_decreasing(&self) -> bool {
        self.nadir_increments().iter().all(|&d| d >= -1e-12)
    }

    pub fn nadir_strictly_decreasing(&self) -> bool {
        self.nadir_increments().iter().all(|&d| d < 0.0)
    }

    /// Last nadir increment over the first; small values indicate saturation.
    pub fn saturation_ratio(&self) -> Option<f64> {
        let inc = self.nadir_increments();
        match (inc.first(), inc.last()) {
            (Some(&first), Some(&last)) if first > 0.0 => Some(last / first),
            _ => None,
        }
    }

    /// Index of the highest nadir (first one on ties).
    pub fn argmax(&self) -> Option<usize> {
        let nadirs = self.nadirs();
        (0..nadirs.len()).reduce(|best, i| if nadirs[i] > nadirs[best] { i } else { best })
    }

    pub fn argmax_is_interior(&self) -> bool {
        self.argmax()
            .is_some_and(|i| i > 0 && i + 1 < self.points.len())
    }

    /// `|first - second|` local nadir gap at the argmax point, Hz.
    pub fn crossover_gap(&self) -> Option<f64> {
        let m = &self.points[self.argmax()?].metrics;
        Some((m.first_nadir?.hz - m.second_nadir?.hz).abs())
    }

    /// Indices `i` where the global nadir switches between the first and the
    /// second dip going from point `i` to point `i + 1`.
    pub fn nadir_time_jumps(&self) -> Vec<usize> {
        self.points
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0].metrics.nadir_is_second() != w[1].metrics.nadir_is_second())
            .map(|(i, _)| i)
            .collect()
    }

    /// Linear fit of nadir time against the swept value over `range`.
    pub fn nadir_time_fit(&self, range: std::ops::Range<usize>) -> Option<LinearFit> {
        let x = &self.values()[range.clone()];
        let y = &self.nadir_times()[range];
        linear_fit(x, y)
    }
}

fn check_ascending(values: &[f64], min_points: usize) -> Result<()> {
    if values.len() < min_points {
        return Err(Error::field(
            "sweep.values",
            format!("need at least {min_points} points, got {}", values.len()),
        ));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::field("sweep.values", "values must be positive"));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::field("sweep.values", "values must be strictly ascending"));
    }
    Ok(())
}

fn run_points<F>(parameter: SweepParameter, values: &[f64], run: F) -> Result<SweepResult>
where
    F: Fn(f64) -> Result<Trace> + Sync,
{
    let points = values
        .par_iter()
        .map(|&value| {
            run(value)
                .and_then(|trace| compute_metrics(&trace))
                .map(|metrics| SweepPoint { value, metrics })
                .map_err(|e| Error::Sweep {
                    value,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { parameter, points })
}

/// One run per energy capacity; every device starts full at `e_max`.
pub fn sweep_capacity(
    model: &GridModel,
    scenario: &Scenario,
    devices: &[StorageDevice],
    e_values: &[f64],
) -> Result<SweepResult> {
    check_ascending(e_values, 4)?;
    if devices.is_empty() {
        return Err(Error::field("devices", "capacity sweep needs a storage device"));
    }
    run_points(SweepParameter::Capacity, e_values, |e| {
        let fleet: Vec<StorageDevice> = devices
            .iter()
            .map(|d| StorageDevice {
                e_max_mws: e,
                soc_mws: e,
                ..d.clone()
            })
            .collect();
        run_simulation(model, scenario, &fleet)
    })
}

/// One run per discharge duration `T_d`: step devices get a fixed magnitude
/// `min(e_max / T_d, p_max)` in place of the ROCOF estimate.
pub fn sweep_duration(
    model: &GridModel,
    scenario: &Scenario,
    devices: &[StorageDevice],
    durations_s: &[f64],
) -> Result<SweepResult> {
    check_ascending(durations_s, 3)?;
    if !devices
        .iter()
        .any(|d| matches!(d.controller, Controller::Step(_)))
    {
        return Err(Error::field("devices", "duration sweep needs a step-controlled device"));
    }
    run_points(SweepParameter::Duration, durations_s, |duration| {
        let fleet: Vec<StorageDevice> = devices
            .iter()
            .map(|d| {
                let mut d = d.clone();
                let magnitude = (d.e_max_mws / duration).min(d.p_max_mw);
                if let Controller::Step(c) = &mut d.controller {
                    c.override_power_mw = Some(magnitude);
                }
                d
            })
            .collect();
        run_simulation(model, scenario, &fleet)
    })
}

/// One run per renewable penetration level. The wind share is held at the
/// scenario's value and PV makes up the rest; step controllers are given the
/// derated system inertia and capacity of each level.
pub fn sweep_penetration(
    base: &GridModel,
    scenario: &Scenario,
    devices: &[StorageDevice],
    levels: &[f64],
) -> Result<SweepResult> {
    if levels.is_empty() {
        return Err(Error::field("sweep.values", "need at least one level"));
    }
    run_points(SweepParameter::Penetration, levels, |level| {
        let pv = level - scenario.wind_fraction;
        if pv < 0.0 {
            return Err(Error::InvalidScenario(format!(
                "penetration {level} is below the wind share {}",
                scenario.wind_fraction
            )));
        }
        let sc = scenario.with_penetration(pv, scenario.wind_fraction);
        let model = build_model(&sc, base)?;
        let fleet: Vec<StorageDevice> = devices
            .iter()
            .map(|d| {
                let mut d = d.clone();
                if let Controller::Step(c) = &mut d.controller {
                    c.assumed_inertia_s = model.inertia_s;
                    c.assumed_capacity_mva = model.capacity_mva;
                }
                d
            })
            .collect();
        run_simulation(&model, &sc, &fleet)
    })
}

/// Run the sweep described by `spec` on a resolved study.
pub fn sweep_study(study: &Study, spec: &SweepSpec) -> Result<SweepResult> {
    match spec {
        SweepSpec::Capacity { values } => sweep_capacity(&study.model()?, &study.scenario, &study.devices, values),
        SweepSpec::Duration { values } => sweep_duration(&study.model()?, &study.scenario, &study.devices, values),
        SweepSpec::Penetration { values } => {
            sweep_penetration(&study.base_grid, &study.scenario, &study.devices, values)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_from(freq: Vec<f64>, dt: f64) -> Trace {
        let n = freq.len();
        Trace {
            f_nominal: 60.0,
            dt_s: dt,
            t_s: (0..n).map(|i| i as f64 * dt).collect(),
            freq_hz: freq,
            rocof_hz_per_s: vec![0.0; n],
            mech_power_mw: vec![0.0; n],
            load_fraction: vec![1.0; n],
            device_power_mw: vec![],
            device_soc_mws: vec![],
            device_p_max_mw: vec![],
            device_e_max_mws: vec![],
            device_initial_soc_mws: vec![],
            ufls_trips: vec![],
        }
    }

    /// Piecewise-linear interpolation through `(t, f)` knots at spacing `dt`.
    fn piecewise(knots: &[(f64, f64)], dt: f64, end: f64) -> Vec<f64> {
        let n = (end / dt).round() as usize + 1;
        (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                let k = knots
                    .windows(2)
                    .find(|w| t <= w[1].0 + 1e-12)
                    .unwrap_or(&knots[knots.len() - 2..]);
                let (t0, f0) = k[0];
                let (t1, f1) = k[1];
                f0 + (f1 - f0) * ((t - t0) / (t1 - t0)).clamp(0.0, 1.0)
            })
            .collect()
    }

    #[test]
    fn constant_trace() {
        let m = compute_metrics(&trace_from(vec![60.0; 601], 0.1)).unwrap();
        assert_eq!(m.nadir_hz, 60.0);
        assert_eq!(m.nadir_time_s, 0.0);
        assert!(m.first_nadir.is_none());
        assert!(m.second_nadir.is_none());
        assert_eq!(m.settling_hz, 60.0);
    }

    #[test]
    fn two_dips_are_reported_in_time_order() {
        let f = piecewise(
            &[(0.0, 60.0), (5.0, 59.7), (12.0, 59.8), (20.0, 59.72), (30.0, 59.85)],
            0.01,
            30.0,
        );
        let m = compute_metrics(&trace_from(f, 0.01)).unwrap();
        let first = m.first_nadir.unwrap();
        let second = m.second_nadir.unwrap();
        assert!((first.hz - 59.7).abs() < 1e-9 && (first.time_s - 5.0).abs() < 1e-9);
        assert!((second.hz - 59.72).abs() < 1e-9 && (second.time_s - 20.0).abs() < 1e-9);
        assert!((m.nadir_hz - 59.7).abs() < 1e-9);
        assert!(!m.nadir_is_second());
    }

    #[test]
    fn shallow_recovery_merges_dips() {
        let f = piecewise(
            &[(0.0, 60.0), (5.0, 59.7), (12.0, 59.702), (20.0, 59.72), (30.0, 59.85)],
            0.01,
            30.0,
        );
        let m = compute_metrics(&trace_from(f, 0.01)).unwrap();
        assert!(m.first_nadir.is_some());
        assert!(m.second_nadir.is_none());
    }

    #[test]
    fn only_two_deepest_dips_are_kept() {
        let f = piecewise(
            &[
                (0.0, 60.0),
                (2.0, 59.9),
                (4.0, 59.95),
                (6.0, 59.8),
                (8.0, 59.9),
                (10.0, 59.85),
                (12.0, 59.95),
            ],
            0.01,
            12.0,
        );
        let m = compute_metrics(&trace_from(f, 0.01)).unwrap();
        assert!((m.first_nadir.unwrap().time_s - 6.0).abs() < 1e-9);
        assert!((m.second_nadir.unwrap().time_s - 10.0).abs() < 1e-9);
    }

    #[test]
    fn short_trace_settles_over_available_tail() {
        let m = compute_metrics(&trace_from(vec![60.0, 59.9, 59.8], 1.0)).unwrap();
        assert!(m.settling_window_truncated);
        assert!((m.settling_hz - 59.9).abs() < 1e-12);
    }

    #[test]
    fn empty_trace_errors() {
        assert!(matches!(
            compute_metrics(&trace_from(vec![], 0.01)),
            Err(Error::EmptySeries)
        ));
    }

    #[test]
    fn fit_of_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let fit = linear_fit(&x, &y).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_inputs_are_checked() {
        assert!(check_ascending(&[1.0, 2.0, 3.0], 4).is_err());
        assert!(check_ascending(&[1.0, 3.0, 2.0, 4.0], 4).is_err());
        assert!(check_ascending(&[1.0, 2.0, 3.0, 4.0], 4).is_ok());
    }
}
