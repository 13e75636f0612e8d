//! Run configuration: one TOML file per run, nested blocks per
//! subsystem, every value either explicit or filled by a documented
//! default during normalization. A normalized config serializes to a
//! complete file that parses back to itself, so persisted configs are
//! seed-complete provenance for their outputs.

use serde::{Deserialize, Serialize};
use std::path::Path;

use superlum_core::channel::{Probability, ProbabilityMatrix};
use superlum_core::geometry::{ApparatusGeometry, GeometrySpec};
use superlum_core::optics::{Distinguishability, PhysicsHypothesis};
use superlum_core::protocol::{BootstrapConfig, CycleSchedule, WaitingRule};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunBlock,
    pub geometry: GeometryBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<HypothesisBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimation: Option<EstimationBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
}

impl Default for RunBlock {
    fn default() -> Self {
        Self {
            master_seed: default_seed(),
            out_dir: default_out_dir(),
        }
    }
}

fn default_seed() -> u64 {
    1
}

fn default_out_dir() -> String {
    ".".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub signal_leg: f64,
    pub idler_leg: f64,
    pub pump_arm: f64,
    #[serde(default)]
    pub detector_response_coeff: f64,
    #[serde(default = "default_one")]
    pub pump_intensity: f64,
    #[serde(default)]
    pub raise_time: f64,
    #[serde(default)]
    pub electronics_lag: f64,
    #[serde(default = "default_one")]
    pub light_speed: f64,
}

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisBlock {
    /// "null" or "signaling".
    pub kind: String,
    #[serde(default)]
    pub dark_rate: f64,
    /// Explicit bright rate; alternatively give `pair_rate` and the
    /// bright rate defaults to half of it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bright_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal_speed: Option<f64>,
    /// "identity", "power", or "step".
    #[serde(default = "default_map")]
    pub distinguishability: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

fn default_map() -> String {
    "identity".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleBlock {
    pub action: f64,
    pub standby_levels: Vec<f64>,
    pub cycles_per_level: usize,
    /// Fixed waiting duration. Mutually exclusive with `waiting_sum`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub waiting: Option<f64>,
    /// Constant-sum rule: `r/V + w` equals this for every probed speed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub waiting_sum: Option<f64>,
    pub probe_speeds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationBlock {
    /// Detection window for the channel estimate.
    pub window: f64,
    #[serde(default = "default_threshold")]
    pub threshold: u32,
    #[serde(default = "default_channel_cycles")]
    pub channel_cycles: usize,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default = "default_significance")]
    pub significance: f64,
    #[serde(default = "default_relative_width")]
    pub veff_relative_width: f64,
}

fn default_threshold() -> u32 {
    1
}

fn default_channel_cycles() -> usize {
    4000
}

fn default_resamples() -> usize {
    1000
}

fn default_significance() -> f64 {
    0.01
}

fn default_relative_width() -> f64 {
    0.02
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelBlock {
    /// p01.
    pub false_alarm: f64,
    /// p11.
    pub hit: f64,
    pub prior: f64,
    pub signal_speed: f64,
    #[serde(default = "default_one")]
    pub light_speed: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_epsilon() -> f64 {
    1e-9
}

fn default_max_steps() -> usize {
    1_000_000
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        Ok(config.normalized())
    }

    /// Fills derivable fields so the config is self-contained. Applying
    /// it twice changes nothing.
    pub fn normalized(mut self) -> Self {
        if let Some(h) = self.hypothesis.as_mut() {
            if h.bright_rate.is_none() {
                // Half the down-conversion pair rate is recordable when
                // the paths are fully distinguishable.
                h.bright_rate = h.pair_rate.map(|pairs| pairs / 2.0);
            }
        }
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn geometry(&self) -> Result<ApparatusGeometry, CliError> {
        let g = &self.geometry;
        ApparatusGeometry::new(GeometrySpec {
            signal_leg: g.signal_leg,
            idler_leg: g.idler_leg,
            pump_arm: g.pump_arm,
            detector_response_coeff: g.detector_response_coeff,
            pump_intensity: g.pump_intensity,
            raise_time: g.raise_time,
            electronics_lag: g.electronics_lag,
            light_speed: g.light_speed,
        })
        .map_err(|e| CliError::Validation(format!("geometry: {e}")))
    }

    pub fn hypothesis(&self) -> Result<PhysicsHypothesis, CliError> {
        let block = self
            .hypothesis
            .as_ref()
            .ok_or_else(|| CliError::Validation("missing [hypothesis] block".into()))?;
        let invalid = |msg: String| CliError::Validation(format!("hypothesis: {msg}"));
        match block.kind.as_str() {
            "null" => PhysicsHypothesis::null(block.dark_rate).map_err(|e| invalid(e.to_string())),
            "signaling" => {
                let bright = block
                    .bright_rate
                    .ok_or_else(|| invalid("signaling needs bright_rate or pair_rate".into()))?;
                let speed = block
                    .signal_speed
                    .ok_or_else(|| invalid("signaling needs signal_speed".into()))?;
                let map = match block.distinguishability.as_str() {
                    "identity" => Distinguishability::Identity,
                    "power" => Distinguishability::Power {
                        exponent: block
                            .exponent
                            .ok_or_else(|| invalid("power map needs exponent".into()))?,
                    },
                    "step" => Distinguishability::Step {
                        threshold: block
                            .threshold
                            .ok_or_else(|| invalid("step map needs threshold".into()))?,
                    },
                    other => {
                        return Err(invalid(format!(
                            "unknown distinguishability map \"{other}\""
                        )))
                    }
                };
                PhysicsHypothesis::signaling(speed, block.dark_rate, bright, map)
                    .map_err(|e| invalid(e.to_string()))
            }
            other => Err(invalid(format!(
                "kind must be \"null\" or \"signaling\", got \"{other}\""
            ))),
        }
    }

    pub fn schedule(&self, cycles_override: Option<usize>) -> Result<CycleSchedule, CliError> {
        let block = self
            .schedule
            .as_ref()
            .ok_or_else(|| CliError::Validation("missing [schedule] block".into()))?;
        let waiting = match (block.waiting, block.waiting_sum) {
            (Some(_), Some(_)) => {
                return Err(CliError::Validation(
                    "schedule: waiting and waiting_sum are mutually exclusive".into(),
                ))
            }
            (Some(w), None) => WaitingRule::Fixed(w),
            (None, Some(total)) => WaitingRule::ConstantSum { total },
            (None, None) => WaitingRule::Fixed(0.0),
        };
        CycleSchedule::new(
            block.action,
            block.standby_levels.clone(),
            cycles_override.unwrap_or(block.cycles_per_level),
            waiting,
            block.probe_speeds.clone(),
        )
        .map_err(|e| CliError::Validation(format!("schedule: {e}")))
    }

    pub fn estimation(&self) -> Result<&EstimationBlock, CliError> {
        let block = self
            .estimation
            .as_ref()
            .ok_or_else(|| CliError::Validation("missing [estimation] block".into()))?;
        if !(block.significance > 0.0 && block.significance < 0.5) {
            return Err(CliError::Validation(format!(
                "estimation: significance {} must lie in (0, 0.5)",
                block.significance
            )));
        }
        if !block.veff_relative_width.is_finite() || block.veff_relative_width <= 0.0 {
            return Err(CliError::Validation(
                "estimation: veff_relative_width must be positive".into(),
            ));
        }
        Ok(block)
    }

    pub fn bootstrap(&self, seed: u64) -> Result<BootstrapConfig, CliError> {
        let block = self.estimation()?;
        Ok(BootstrapConfig {
            resamples: block.bootstrap_resamples,
            significance: block.significance,
            seed,
        })
    }

    pub fn channel_matrix(
        &self,
    ) -> Result<(ProbabilityMatrix, Probability, &ChannelBlock), CliError> {
        let block = self
            .channel
            .as_ref()
            .ok_or_else(|| CliError::Validation("missing [channel] block".into()))?;
        let matrix = ProbabilityMatrix::new(block.false_alarm, block.hit)
            .map_err(|e| CliError::Validation(format!("channel: {e}")))?;
        let prior = Probability::new(block.prior)
            .map_err(|e| CliError::Validation(format!("channel prior: {e}")))?;
        if !block.epsilon.is_finite() || block.epsilon <= 0.0 {
            return Err(CliError::Validation(
                "channel: epsilon must be positive".into(),
            ));
        }
        Ok((matrix, prior, block))
    }
}
