//! Run configuration: a sectioned TOML file with unit-suffixed keys.
//!
//! Every section except `resonator`, `search`, `sweep` and `objective` has
//! defaults (the reference device, a lossless output and the 1-11 GHz grid),
//! so a spectrum config can be as short as a `[resonator]` block.

use serde::{Deserialize, Serialize};

use crate::circuit::{derive_device, DeviceParams};
use crate::mixer::{LossModel, PumpConfig};
use crate::optimize::{Objective, ObjectiveKind, SearchSpace};
use crate::sweep::{Design, FrequencyGrid, Metric, SpectrumQuantity};

use super::CliError;

const UA: f64 = 1e-6;
const FF: f64 = 1e-15;
const PF: f64 = 1e-12;
const GHZ: f64 = 1e9;
const MHZ: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub device: DeviceSection,
    #[serde(default)]
    pub pump: PumpSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonator: Option<ResonatorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSection>,
    #[serde(default)]
    pub loss: LossSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceSection {
    pub ic_ua: f64,
    pub cj_ff: f64,
    pub n_cells: i64,
    pub z0_ohm: f64,
}

impl Default for DeviceSection {
    fn default() -> Self {
        Self {
            ic_ua: 2.75,
            cj_ff: 39.5,
            n_cells: 2000,
            z0_ohm: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpSection {
    pub ip_ua: f64,
    pub fp_ghz: f64,
}

impl Default for PumpSection {
    fn default() -> Self {
        Self {
            ip_ua: 1.37,
            fp_ghz: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorSection {
    pub fr_ghz: f64,
    pub cc_ff: f64,
    pub cr_pf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub fr_ghz: f64,
    pub cc_min_ff: f64,
    pub cc_max_ff: f64,
    pub cr_min_pf: f64,
    pub cr_max_pf: f64,
    pub n_cc: usize,
    pub n_cr: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSection {
    #[serde(default = "unity")]
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etas: Option<Vec<f64>>,
}

fn unity() -> f64 {
    1.0
}

impl Default for LossSection {
    fn default() -> Self {
        Self {
            eta: 1.0,
            etas: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub f_start_ghz: f64,
    pub f_stop_ghz: f64,
    pub points: usize,
    pub exclusion_mhz: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        let grid = FrequencyGrid::default_band();
        Self {
            f_start_ghz: grid.start() / GHZ,
            f_stop_ghz: grid.stop() / GHZ,
            points: grid.n_points(),
            exclusion_mhz: grid.exclusion_margin() / MHZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub metrics: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_ghz: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_ghz: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_cc_ff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_cr_pf: Option<f64>,
    /// Second objective kind for a Pareto scan, sharing the fields above.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pareto_with: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            formats: vec!["csv".into(), "svg".into()],
        }
    }
}

fn field_error(field: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {message}"))
}

fn require_positive(field: &str, value: f64) -> Result<f64, CliError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(field_error(field, format!("must be strictly positive (got {value})")))
    }
}

fn require_eta(field: &str, value: f64) -> Result<LossModel, CliError> {
    LossModel::new(value).map_err(|_| field_error(field, format!("must lie in [0, 1] (got {value})")))
}

fn require<T: Copy>(field: &str, value: Option<T>) -> Result<T, CliError> {
    value.ok_or_else(|| field_error(field, "required for this kind"))
}

fn band(field: &str, value: [f64; 2]) -> Result<(f64, f64), CliError> {
    let [lo, hi] = value;
    if lo.is_finite() && hi.is_finite() && lo < hi && lo >= 0.0 {
        Ok((lo * GHZ, hi * GHZ))
    } else {
        Err(field_error(field, format!("expected [low, high] with low < high (got {value:?})")))
    }
}

pub const METRIC_NAMES: [&str; 4] = ["gain", "squeezing", "gain_bandwidth", "squeezing_bandwidth"];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("parse error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Fully resolved configuration (defaults applied) as TOML.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.device_params()?;
        self.pump_config()?;
        self.loss_model()?;
        self.loss_models()?;
        self.frequency_grid()?;
        match (&self.resonator, &self.search) {
            (Some(_), Some(_)) => {
                return Err(field_error(
                    "resonator/search",
                    "give exactly one of [resonator] and [search]",
                ))
            }
            (None, None) => {
                return Err(field_error(
                    "resonator/search",
                    "one of [resonator] or [search] is required",
                ))
            }
            (Some(r), None) => {
                require_positive("resonator.fr_ghz", r.fr_ghz)?;
                require_positive("resonator.cc_ff", r.cc_ff)?;
                require_positive("resonator.cr_pf", r.cr_pf)?;
            }
            (None, Some(s)) => {
                require_positive("search.fr_ghz", s.fr_ghz)?;
                require_positive("search.cc_min_ff", s.cc_min_ff)?;
                require_positive("search.cc_max_ff", s.cc_max_ff)?;
                require_positive("search.cr_min_pf", s.cr_min_pf)?;
                require_positive("search.cr_max_pf", s.cr_max_pf)?;
                if s.cc_min_ff > s.cc_max_ff {
                    return Err(field_error("search.cc_min_ff", "exceeds search.cc_max_ff"));
                }
                if s.cr_min_pf > s.cr_max_pf {
                    return Err(field_error("search.cr_min_pf", "exceeds search.cr_max_pf"));
                }
                if s.n_cc == 0 {
                    return Err(field_error("search.n_cc", "must be at least 1"));
                }
                if s.n_cr == 0 {
                    return Err(field_error("search.n_cr", "must be at least 1"));
                }
            }
        }
        if self.sweep.is_some() {
            self.metrics()?;
        }
        if self.objective.is_some() {
            self.objectives()?;
        }
        for format in &self.output.formats {
            if format != "csv" && format != "svg" {
                return Err(field_error("output.formats", format!("unknown format `{format}`")));
            }
        }
        Ok(())
    }

    pub fn device_params(&self) -> Result<DeviceParams, CliError> {
        let d = &self.device;
        require_positive("device.ic_ua", d.ic_ua)?;
        require_positive("device.cj_ff", d.cj_ff)?;
        require_positive("device.z0_ohm", d.z0_ohm)?;
        let n_cells = u32::try_from(d.n_cells)
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| field_error("device.n_cells", format!("must be a positive integer (got {})", d.n_cells)))?;
        derive_device(d.ic_ua * UA, d.cj_ff * FF, n_cells, d.z0_ohm)
            .map_err(|e| field_error("device", e))
    }

    pub fn pump_config(&self) -> Result<PumpConfig, CliError> {
        let device = self.device_params()?;
        if !(self.pump.ip_ua >= 0.0 && self.pump.ip_ua.is_finite()) {
            return Err(field_error(
                "pump.ip_ua",
                format!("must be non-negative (got {})", self.pump.ip_ua),
            ));
        }
        require_positive("pump.fp_ghz", self.pump.fp_ghz)?;
        PumpConfig::new(&device, self.pump.ip_ua * UA, self.pump.fp_ghz * GHZ)
            .map_err(|_| field_error("pump.ip_ua", "must stay below the critical current"))
    }

    pub fn loss_model(&self) -> Result<LossModel, CliError> {
        require_eta("loss.eta", self.loss.eta)
    }

    pub fn loss_models(&self) -> Result<Option<Vec<LossModel>>, CliError> {
        self.loss
            .etas
            .as_ref()
            .map(|etas| {
                if etas.is_empty() {
                    return Err(field_error("loss.etas", "must not be empty"));
                }
                etas.iter().map(|&e| require_eta("loss.etas", e)).collect()
            })
            .transpose()
    }

    pub fn frequency_grid(&self) -> Result<FrequencyGrid, CliError> {
        let g = &self.grid;
        require_positive("grid.f_start_ghz", g.f_start_ghz)?;
        require_positive("grid.f_stop_ghz", g.f_stop_ghz)?;
        FrequencyGrid::new(
            g.f_start_ghz * GHZ,
            g.f_stop_ghz * GHZ,
            g.points,
            g.exclusion_mhz * MHZ,
        )
        .map_err(|e| field_error("grid", e))
    }

    pub fn design(&self) -> Result<Design, CliError> {
        let resonance_ghz = match (&self.resonator, &self.search) {
            (Some(r), _) => r.fr_ghz,
            (None, Some(s)) => s.fr_ghz,
            (None, None) => return Err(field_error("resonator/search", "missing")),
        };
        Ok(Design {
            device: self.device_params()?,
            pump: self.pump_config()?,
            resonance_hz: resonance_ghz * GHZ,
        })
    }

    /// `(C_c, C_r)` in F from the `[resonator]` block.
    pub fn resonator_point(&self) -> Result<(f64, f64), CliError> {
        let r = self
            .resonator
            .as_ref()
            .ok_or_else(|| field_error("resonator", "this command needs a [resonator] block"))?;
        Ok((r.cc_ff * FF, r.cr_pf * PF))
    }

    fn search_section(&self) -> Result<&SearchSection, CliError> {
        self.search
            .as_ref()
            .ok_or_else(|| field_error("search", "this command needs a [search] block"))
    }

    /// Coarse axes in F, including points beyond the `C_c` constraint.
    pub fn search_axes(&self) -> Result<(Vec<f64>, Vec<f64>), CliError> {
        let s = self.search_section()?;
        Ok((
            linspace(s.cc_min_ff * FF, s.cc_max_ff * FF, s.n_cc),
            linspace(s.cr_min_pf * PF, s.cr_max_pf * PF, s.n_cr),
        ))
    }

    pub fn search_space(&self, design: &Design) -> Result<SearchSpace, super::CliError> {
        let s = self.search_section()?;
        SearchSpace::new(
            design,
            (s.cc_min_ff * FF, s.cc_max_ff * FF),
            (s.cr_min_pf * PF, s.cr_max_pf * PF),
            (s.n_cc, s.n_cr),
        )
        .map_err(super::CliError::from)
    }

    pub fn metrics(&self) -> Result<Vec<Metric>, CliError> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| field_error("sweep", "this command needs a [sweep] block"))?;
        if s.metrics.is_empty() {
            return Err(field_error("sweep.metrics", "must list at least one metric"));
        }
        let grid = self.frequency_grid()?;
        s.metrics
            .iter()
            .map(|name| {
                Ok(match name.as_str() {
                    "gain" | "squeezing" => {
                        let f = require_positive(
                            "sweep.frequency_ghz",
                            require("sweep.frequency_ghz", s.frequency_ghz)?,
                        )? * GHZ;
                        if name == "gain" {
                            Metric::GainAt { frequency: f }
                        } else {
                            Metric::AbsSqueezingAt { frequency: f }
                        }
                    }
                    "gain_bandwidth" | "squeezing_bandwidth" => Metric::Bandwidth {
                        quantity: if name == "gain_bandwidth" {
                            SpectrumQuantity::Gain
                        } else {
                            SpectrumQuantity::AbsSqueezing
                        },
                        threshold_db: require("sweep.threshold_db", s.threshold_db)?,
                        band: band("sweep.band_ghz", require("sweep.band_ghz", s.band_ghz)?)?,
                        grid,
                    },
                    other => {
                        return Err(field_error(
                            "sweep.metrics",
                            format!("unknown metric `{other}`; expected one of {METRIC_NAMES:?}"),
                        ))
                    }
                })
            })
            .collect()
    }

    fn objective_of(&self, field: &str, kind: &str) -> Result<Objective, CliError> {
        let o = self
            .objective
            .as_ref()
            .ok_or_else(|| field_error("objective", "this command needs an [objective] block"))?;
        let frequency = || -> Result<f64, CliError> {
            Ok(require_positive(
                "objective.frequency_ghz",
                require("objective.frequency_ghz", o.frequency_ghz)?,
            )? * GHZ)
        };
        let bandwidth = |quantity| -> Result<ObjectiveKind, CliError> {
            Ok(ObjectiveKind::BandwidthAboveThreshold {
                quantity,
                threshold_db: require("objective.threshold_db", o.threshold_db)?,
                band: band("objective.band_ghz", require("objective.band_ghz", o.band_ghz)?)?,
                grid: self.frequency_grid()?,
            })
        };
        let kind = match kind {
            "gain" => ObjectiveKind::GainAtFrequency {
                frequency: frequency()?,
            },
            "squeezing" => ObjectiveKind::AbsSqueezingAtFrequency {
                frequency: frequency()?,
            },
            "gain_bandwidth" => bandwidth(SpectrumQuantity::Gain)?,
            "squeezing_bandwidth" => bandwidth(SpectrumQuantity::AbsSqueezing)?,
            "paraboloid" => ObjectiveKind::Paraboloid {
                center: (
                    require("objective.center_cc_ff", o.center_cc_ff)? * FF,
                    require("objective.center_cr_pf", o.center_cr_pf)? * PF,
                ),
            },
            other => {
                return Err(field_error(
                    field,
                    format!("unknown objective `{other}`; expected one of {METRIC_NAMES:?} or \"paraboloid\""),
                ))
            }
        };
        Ok(Objective::new(kind, self.loss_model()?))
    }

    /// Primary objective and the optional Pareto partner.
    pub fn objectives(&self) -> Result<(Objective, Option<Objective>), CliError> {
        let o = self
            .objective
            .as_ref()
            .ok_or_else(|| field_error("objective", "this command needs an [objective] block"))?;
        let primary = self.objective_of("objective.kind", &o.kind)?;
        let secondary = o
            .pareto_with
            .as_deref()
            .map(|kind| self.objective_of("objective.pareto_with", kind))
            .transpose()?;
        Ok((primary, secondary))
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}
