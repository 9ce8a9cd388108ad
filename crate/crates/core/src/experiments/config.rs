//! Experiment configuration files and the bundled presets.
//!
//! Files are TOML with `[beam]`, `[controller]`, `[filter]`, `[simulation]`
//! and `[sweep]` sections. Unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::beam_model::{self, BeamParams, SensorKind};
use crate::error::{Error, Result};
use crate::filters::FilterSpec;
use crate::rcac::{build_target_model, RcacConfig};
use crate::simulation::{LoopMode, SimConfig};

/// Feedback/conditioning combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Case {
    /// Displacement measurement, gain filter.
    #[serde(rename = "disp")]
    Disp,
    /// Acceleration measurement, low-pass filter.
    #[serde(rename = "acc-lp")]
    AccLowPass,
    /// Acceleration measurement, displacement-estimation filter.
    #[serde(rename = "acc-est")]
    AccDispEst,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::Disp, Case::AccLowPass, Case::AccDispEst];

    pub fn name(self) -> &'static str {
        match self {
            Case::Disp => "disp",
            Case::AccLowPass => "acc-lp",
            Case::AccDispEst => "acc-est",
        }
    }

    /// Bundled configuration for this case.
    pub fn preset(self) -> ExperimentConfig {
        let text = match self {
            Case::Disp => include_str!("../../presets/disp.toml"),
            Case::AccLowPass => include_str!("../../presets/acc-lp.toml"),
            Case::AccDispEst => include_str!("../../presets/acc-est.toml"),
        };
        ExperimentConfig::from_toml(text).expect("bundled preset parses")
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Case::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown case `{s}` (disp, acc-lp, acc-est)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub l_c: usize,
    pub p0: f64,
    #[serde(rename = "R_u")]
    pub r_u: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// Target-model sign, ±1.
    #[serde(rename = "N")]
    pub sign: i8,
    pub d_f: usize,
    pub alpha_f: f64,
    /// Target-model frequency; defaults to the disturbance frequency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_f: Option<f64>,
}

fn default_t_sim() -> f64 {
    1e-4
}

fn default_t_s() -> f64 {
    2.5e-3
}

fn default_t_end() -> f64 {
    30.0
}

fn default_t_enable() -> f64 {
    2.5
}

fn default_theta_stride() -> usize {
    10
}

fn default_mode() -> LoopMode {
    LoopMode::ClosedLoop
}

fn default_spectrum_window() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub feedback: SensorKind,
    pub i_u: usize,
    pub i_d: usize,
    pub i_y: usize,
    pub f_dist: f64,
    #[serde(rename = "T_sim", default = "default_t_sim")]
    pub t_sim: f64,
    #[serde(rename = "T_s", default = "default_t_s")]
    pub t_s: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_t_enable")]
    pub t_enable: f64,
    #[serde(default = "default_mode")]
    pub mode: LoopMode,
    #[serde(default)]
    pub early_exit: bool,
    #[serde(default = "default_theta_stride")]
    pub theta_stride: usize,
    /// Trailing span used for spectra [s].
    #[serde(default = "default_spectrum_window")]
    pub spectrum_window: f64,
}

/// Per-cell `(d_f, R_u)` override.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellOverride {
    pub f_dist: f64,
    pub i_u: usize,
    pub d_f: usize,
    #[serde(rename = "R_u")]
    pub r_u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub case: Case,
    pub i_u: Vec<usize>,
    pub f_dist: Vec<f64>,
    #[serde(default)]
    pub cells: Vec<CellOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub beam: BeamParams,
    pub controller: ControllerSection,
    pub filter: FilterSpec,
    pub simulation: SimulationSection,
    pub sweep: SweepSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.beam.validate()?;
        self.filter.validate()?;
        if self.controller.sign != 1 && self.controller.sign != -1 {
            return Err(Error::invalid("N", "must be +1 or -1"));
        }
        for o in &self.sweep.cells {
            let known_f = self.sweep.f_dist.contains(&o.f_dist);
            if !known_f || !self.sweep.i_u.contains(&o.i_u) {
                return Err(Error::Config(format!(
                    "override (f_dist = {}, i_u = {}) is outside the sweep grid",
                    o.f_dist, o.i_u
                )));
            }
        }
        Ok(())
    }

    fn override_for(&self, f_dist: f64, i_u: usize) -> Option<&CellOverride> {
        self.sweep
            .cells
            .iter()
            .find(|o| o.f_dist == f_dist && o.i_u == i_u)
    }

    /// Configuration of a single sweep cell: the grid point plus any
    /// per-cell `(d_f, R_u)`.
    pub fn cell(&self, f_dist: f64, i_u: usize) -> ExperimentConfig {
        let mut c = self.clone();
        c.simulation.f_dist = f_dist;
        c.simulation.i_u = i_u;
        if let Some(o) = self.override_for(f_dist, i_u) {
            c.controller.d_f = o.d_f;
            c.controller.r_u = o.r_u;
        }
        c
    }

    pub fn target_frequency(&self) -> f64 {
        self.controller.f_f.unwrap_or(self.simulation.f_dist)
    }

    pub fn rcac_config(&self) -> Result<RcacConfig> {
        let c = &self.controller;
        let target = build_target_model(
            f64::from(c.sign),
            c.d_f,
            self.target_frequency(),
            c.alpha_f,
            self.simulation.t_s,
        )?;
        Ok(RcacConfig::siso(
            c.l_c, c.p0, c.r_u, c.u_min, c.u_max, target,
        ))
    }

    pub fn state_space(&self) -> Result<beam_model::StateSpace> {
        let (_, s) = beam_model::build_beam(&self.beam)?;
        beam_model::build_state_space(&s, self.simulation.i_u, self.simulation.i_d)
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let sim = &self.simulation;
        let ss = self.state_space()?;
        let displacement = beam_model::output_map(&ss, sim.i_y, SensorKind::Displacement)?;
        let acceleration = beam_model::output_map(&ss, sim.i_y, SensorKind::Acceleration)?;
        let cfg = SimConfig {
            state_space: ss,
            displacement,
            acceleration,
            feedback: sim.feedback,
            disturbance_hz: sim.f_dist,
            t_sim: sim.t_sim,
            t_s: sim.t_s,
            t_end: sim.t_end,
            t_enable: sim.t_enable,
            controller: self.rcac_config()?,
            filter: self.filter,
            mode: sim.mode,
            early_exit: sim.early_exit,
            theta_stride: sim.theta_stride,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for case in Case::ALL {
            let p = case.preset();
            assert_eq!(p.sweep.case, case);
            assert_eq!(p.sweep.cells.len(), 16);
            p.sim_config().unwrap();
        }
    }

    #[test]
    fn preset_hyperparameters() {
        let d = Case::Disp.preset();
        assert_eq!(d.controller.l_c, 20);
        assert_eq!(d.controller.sign, -1);
        assert_eq!(d.filter, FilterSpec::Gain { gain: 500.0 });

        let lp = Case::AccLowPass.preset();
        assert_eq!(lp.controller.sign, 1);
        assert_eq!(lp.simulation.feedback, SensorKind::Acceleration);
        let c = lp.cell(60.0, 12);
        assert_eq!((c.controller.d_f, c.controller.r_u), (20, 1.0));

        let est = Case::AccDispEst.preset();
        assert_eq!(est.controller.l_c, 25);
        assert_eq!(est.controller.p0, 0.1);
        let c = est.cell(20.0, 14);
        assert_eq!((c.controller.d_f, c.controller.r_u), (8, 5.0));
    }

    #[test]
    fn unknown_key_rejected() {
        let mut text = include_str!("../../presets/disp.toml").to_string();
        text = text.replace("[beam]\n", "[beam]\nlenght = 0.5\n");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("lenght"), "{err}");
    }

    #[test]
    fn override_outside_grid_rejected() {
        let mut cfg = Case::Disp.preset();
        cfg.sweep.cells.push(CellOverride {
            f_dist: 33.0,
            i_u: 12,
            d_f: 1,
            r_u: 1.0,
        });
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn target_follows_disturbance_by_default() {
        let c = Case::Disp.preset().cell(40.0, 10);
        assert_eq!(c.target_frequency(), 40.0);
        assert_eq!((c.controller.d_f, c.controller.r_u), (9, 0.5));
    }

    #[test]
    fn roundtrip_through_toml() {
        let cfg = Case::AccLowPass.preset();
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn case_names() {
        for c in Case::ALL {
            assert_eq!(c.name().parse::<Case>().unwrap(), c);
        }
        assert!("acc".parse::<Case>().is_err());
    }
}
