//! Receiver noise figures: Friis cascades and the composite values used to
//! penalize each architecture's SNR.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// A two-port stage of an RF chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfStage {
    pub label: String,
    pub gain_db: f64,
    pub nf_db: f64,
}

impl RfStage {
    pub fn new(label: impl Into<String>, gain_db: f64, nf_db: f64) -> Result<Self> {
        if !(nf_db >= 0.0) || !nf_db.is_finite() {
            return Err(Error::invalid("nf_db", format!("must be finite and >= 0, got {nf_db}")));
        }
        if !gain_db.is_finite() {
            return Err(Error::invalid("gain_db", "must be finite"));
        }
        Ok(Self {
            label: label.into(),
            gain_db,
            nf_db,
        })
    }

    /// Passive stage: loss equal to its noise figure.
    pub fn passive(label: impl Into<String>, nf_db: f64) -> Result<Self> {
        Self::new(label, -nf_db, nf_db)
    }
}

/// Ordered cascade of stages, antenna side first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NoiseStageChain {
    pub stages: Vec<RfStage>,
}

impl NoiseStageChain {
    pub fn new(stages: Vec<RfStage>) -> Self {
        Self { stages }
    }

    pub fn total_gain_db(&self) -> f64 {
        self.stages.iter().map(|s| s.gain_db).sum()
    }
}

/// Composite noise figure of `chain` in dB:
/// `F = F1 + Σ_{k≥2} (F_k - 1) / (G_1 ⋯ G_{k-1})`.
pub fn friis_composite_nf(chain: &NoiseStageChain) -> Result<f64> {
    let first = chain
        .stages
        .first()
        .ok_or_else(|| Error::invalid("chain", "needs at least one stage"))?;
    for s in &chain.stages {
        RfStage::new(s.label.clone(), s.gain_db, s.nf_db)?;
    }
    let mut total = db_to_linear(first.nf_db);
    let mut gain = db_to_linear(first.gain_db);
    for s in &chain.stages[1..] {
        total += (db_to_linear(s.nf_db) - 1.0) / gain;
        gain *= db_to_linear(s.gain_db);
    }
    Ok(linear_to_db(total))
}

/// Receiver architectures compared in the rate study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    FullyDigital,
    AntennaSelection,
    PsHybrid,
    SwitchHybrid,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [
        Architecture::FullyDigital,
        Architecture::AntennaSelection,
        Architecture::PsHybrid,
        Architecture::SwitchHybrid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::FullyDigital => "fully_digital",
            Architecture::AntennaSelection => "antenna_selection",
            Architecture::PsHybrid => "ps_hybrid",
            Architecture::SwitchHybrid => "switch_hybrid",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::invalid("architecture", format!("unknown architecture `{s}`")))
    }
}

/// Composite receiver noise figures in dB at 2-5 GHz.
pub fn preset_nf(arch: Architecture) -> f64 {
    match arch {
        Architecture::FullyDigital | Architecture::AntennaSelection => 5.1,
        Architecture::PsHybrid => 5.7,
        Architecture::SwitchHybrid => 7.2,
    }
}

/// Preset lookup by tag name.
pub fn preset_nf_by_name(tag: &str) -> Result<f64> {
    tag.parse().map(preset_nf)
}

/// SNR after the receiver noise figure, all in dB.
pub fn apply_nf_penalty(snr_db: f64, nf_db: f64) -> f64 {
    snr_db - nf_db
}

/// Example component catalog for building cascades. Passive parts have a
/// loss equal to their noise figure.
pub fn example_catalog() -> Vec<RfStage> {
    let stage = |label: &str, gain_db: f64, nf_db: f64| RfStage {
        label: label.to_string(),
        gain_db,
        nf_db,
    };
    vec![
        stage("lna", 22.0, 5.0),
        stage("mixer", 0.0, 12.0),
        stage("combiner", -1.0, 1.0),
        stage("divider", -1.0, 1.0),
        stage("switch", -1.5, 1.5),
        stage("phase_shifter", -4.0, 4.0),
        stage("vga", 4.0, 4.0),
    ]
}
