use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keyrate::{generation_probability, round_duration_s};
use crate::noise::MemoryModel;

pub const DEFAULT_ATTENUATION_LENGTH_KM: f64 = 22.0;
pub const DEFAULT_MAX_ROUNDS: u64 = 1_000_000_000;

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchMode {
    /// Patch central gaps only when the scope spans more than four segments.
    #[default]
    Limited,
    /// Patch from four segments upwards.
    Unlimited,
}

impl PatchMode {
    /// A central gap is patched iff the scope has more segments than this.
    pub fn min_segments(self) -> u32 {
        match self {
            PatchMode::Limited => 4,
            PatchMode::Unlimited => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PatchMode::Limited => "limited",
            PatchMode::Unlimited => "unlimited",
        }
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Merging-based: grows 1D clusters with fusions and patches gaps.
    #[default]
    Mb,
    /// Swapping-based: nested entanglement swapping.
    Sb,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Mb => "mb",
            Protocol::Sb => "sb",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mb" => Ok(Protocol::Mb),
            "sb" => Ok(Protocol::Sb),
            _ => Err(Error::param("protocol", format!("`{s}` is neither `mb` nor `sb`"))),
        }
    }
}

/// Physical and protocol parameters of a chain.
///
/// Exactly one of `total_distance_km` and `segment_length_km` must be set.
/// When `generation_probability` is absent it is derived from the segment
/// length as `exp(-L0 / attenuation_length_km)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(default)]
    pub protocol: Protocol,
    /// Nesting levels; the chain has `2^levels` segments.
    pub levels: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_distance_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_length_km: Option<f64>,
    pub dephasing_time_s: f64,
    /// Success probability of every merge and swap.
    pub merge_probability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation_probability: Option<f64>,
    #[serde(default = "default_attenuation")]
    pub attenuation_length_km: f64,
    #[serde(default = "default_growth_limit")]
    pub growth_limit: u32,
    #[serde(default)]
    pub patching: PatchMode,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: u64,
}

fn default_attenuation() -> f64 {
    DEFAULT_ATTENUATION_LENGTH_KM
}

fn default_growth_limit() -> u32 {
    1
}

fn default_samples() -> u64 {
    10_000
}

fn default_max_rounds() -> u64 {
    DEFAULT_MAX_ROUNDS
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            protocol: Protocol::Mb,
            levels: 3,
            total_distance_km: Some(100.0),
            segment_length_km: None,
            dephasing_time_s: 10.0,
            merge_probability: 0.5,
            generation_probability: None,
            attenuation_length_km: DEFAULT_ATTENUATION_LENGTH_KM,
            growth_limit: default_growth_limit(),
            patching: PatchMode::Limited,
            samples: default_samples(),
            seed: 0,
            max_rounds: DEFAULT_MAX_ROUNDS,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("{v} must be positive and finite")))
    }
}

fn probability(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("{v} is not in (0, 1]")))
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=20).contains(&self.levels) {
            return Err(Error::param("levels", format!("{} is not in 1..=20", self.levels)));
        }
        match (self.total_distance_km, self.segment_length_km) {
            (Some(d), None) => positive("total_distance_km", d)?,
            (None, Some(l)) => positive("segment_length_km", l)?,
            (Some(_), Some(_)) => {
                return Err(Error::param(
                    "total_distance_km",
                    "set either total_distance_km or segment_length_km, not both",
                ))
            }
            (None, None) => {
                return Err(Error::param(
                    "total_distance_km",
                    "one of total_distance_km or segment_length_km is required",
                ))
            }
        }
        positive("dephasing_time_s", self.dephasing_time_s)?;
        probability("merge_probability", self.merge_probability)?;
        if let Some(p) = self.generation_probability {
            probability("generation_probability", p)?;
        } else {
            positive("attenuation_length_km", self.attenuation_length_km)?;
        }
        if self.samples == 0 {
            return Err(Error::param("samples", "at least one sample is required"));
        }
        if self.max_rounds == 0 {
            return Err(Error::param("max_rounds", "must be positive"));
        }
        if self.growth_limit > 16 {
            return Err(Error::param(
                "growth_limit",
                format!("{} is unreasonably large", self.growth_limit),
            ));
        }
        Ok(())
    }

    pub fn segments(&self) -> u32 {
        1 << self.levels
    }

    pub fn segment_length_km(&self) -> f64 {
        match (self.segment_length_km, self.total_distance_km) {
            (Some(l), _) => l,
            (None, Some(d)) => d / f64::from(self.segments()),
            (None, None) => f64::NAN,
        }
    }

    pub fn total_distance_km(&self) -> f64 {
        self.segment_length_km() * f64::from(self.segments())
    }

    pub fn generation_probability(&self) -> f64 {
        self.generation_probability
            .unwrap_or_else(|| generation_probability(self.segment_length_km(), self.attenuation_length_km))
    }

    pub fn round_duration_s(&self) -> f64 {
        round_duration_s(self.segment_length_km())
    }

    pub fn memory_model(&self) -> Result<MemoryModel> {
        MemoryModel::new(self.dephasing_time_s, self.round_duration_s())
    }

    pub fn sampler_params(&self) -> Result<SamplerParams> {
        self.validate()?;
        SamplerParams::new(
            self.generation_probability(),
            self.merge_probability,
            self.growth_limit,
            self.patching.min_segments(),
            self.max_rounds,
        )
    }
}

/// What the samplers need to know, with everything already resolved.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SamplerParams {
    pub generation_probability: f64,
    pub merge_probability: f64,
    pub growth_limit: u32,
    /// Central gaps are patched iff the scope has more segments than this.
    pub patch_min_segments: u32,
    /// Cap on the total number of generation rounds drawn for one sample.
    pub max_rounds: u64,
}

impl SamplerParams {
    pub fn new(p_gen: f64, p: f64, growth_limit: u32, patch_min_segments: u32, max_rounds: u64) -> Result<Self> {
        probability("generation_probability", p_gen)?;
        probability("merge_probability", p)?;
        Ok(SamplerParams {
            generation_probability: p_gen,
            merge_probability: p,
            growth_limit,
            patch_min_segments,
            max_rounds,
        })
    }

    /// Parameters with patching switched off entirely.
    pub fn without_patching(p_gen: f64, p: f64) -> Result<Self> {
        Self::new(p_gen, p, 0, u32::MAX, DEFAULT_MAX_ROUNDS)
    }

    pub fn with_mode(p_gen: f64, p: f64, growth_limit: u32, mode: PatchMode) -> Result<Self> {
        Self::new(p_gen, p, growth_limit, mode.min_segments(), DEFAULT_MAX_ROUNDS)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn minimal_json_uses_defaults() {
        let cfg: ProtocolConfig = serde_json::from_str(
            r#"{"levels": 4, "total_distance_km": 352, "dephasing_time_s": 10, "merge_probability": 0.5}"#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.segments(), 16);
        assert_relative_eq!(cfg.segment_length_km(), 22.0);
        assert_relative_eq!(cfg.generation_probability(), (-1.0f64).exp(), max_relative = 1e-15);
        assert_eq!(cfg.patching, PatchMode::Limited);
        assert_eq!(cfg.growth_limit, 1);
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg = ProtocolConfig {
            merge_probability: 1.5,
            ..ProtocolConfig::default()
        };
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("merge_probability"), "{err}");
        cfg.merge_probability = 0.5;
        cfg.segment_length_km = Some(1.0);
        assert!(cfg.validate().is_err());
        cfg.total_distance_km = None;
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let r: std::result::Result<ProtocolConfig, _> = serde_json::from_str(
            r#"{"levels": 2, "total_distance_km": 10, "dephasing_time_s": 1, "merge_probability": 1, "colour": 3}"#,
        );
        assert!(r.is_err());
    }

    #[test]
    fn round_duration_is_the_heralding_time() {
        let cfg = ProtocolConfig {
            levels: 1,
            total_distance_km: Some(2.0),
            ..ProtocolConfig::default()
        };
        assert_relative_eq!(cfg.round_duration_s(), 1e-5, max_relative = 1e-12);
    }
}
