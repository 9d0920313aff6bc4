//! JSON run configuration shared by all command-line subcommands.
//!
//! ```json
//! {
//!   "system": { "N": 64, "U": 3, "NRF": 3, "NQ": 4 },
//!   "sweep": { "n_list": [64, 128], "snr_db_list": [0, 10], "nq_list": [2, 4],
//!              "nu_pairs": [[128, 4], [256, 8]] },
//!   "run": { "trials": 500, "seed": 1, "samples": 100000, "threads": 4 },
//!   "architectures": [ { "name": "switch_hybrid", "combiner": "ZF" } ],
//!   "nf": { "mode": "preset", "chain": [ { "label": "lna", "gain_db": 22, "nf_db": 5 } ] },
//!   "output": { "path": "out.csv", "format": "csv" }
//! }
//! ```
//!
//! Every section is optional and falls back to the experiment defaults.
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::combining::SelectionMode;
use crate::error::{Error, Result};
use crate::experiments::{ArchitectureSpec, ExperimentConfig, ExperimentKind, NfMode, OutputFormat};
use crate::rfchain::{NoiseStageChain, RfStage};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(rename = "N")]
    pub n_antennas: Option<usize>,
    #[serde(rename = "U")]
    pub n_users: Option<usize>,
    #[serde(rename = "NRF")]
    pub n_rf_chains: Option<usize>,
    #[serde(rename = "NQ")]
    pub n_quant: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n_list: Option<Vec<usize>>,
    pub snr_db_list: Option<Vec<f64>>,
    pub nq_list: Option<Vec<usize>>,
    pub nu_pairs: Option<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureEntry {
    pub name: String,
    pub combiner: SelectionMode,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NfSection {
    pub mode: Option<NfMode>,
    pub chain: Option<Vec<RfStage>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

/// The whole configuration document.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub run: RunSection,
    pub architectures: Option<Vec<ArchitectureEntry>>,
    #[serde(default)]
    pub nf: NfSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            // serde_json reports the offending key inside the message
            Error::config(field_hint(&e.to_string()), e.to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(
                "config",
                format!("cannot read {}: {e}", path.display()),
            )
        })?;
        Self::from_json(&text)
    }

    /// Experiment parameters for `kind`: defaults overridden by this file.
    pub fn experiment(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::defaults(kind);
        let s = &self.system;
        if let Some(v) = s.n_antennas {
            cfg.n_antennas = v;
        }
        if let Some(v) = s.n_users {
            cfg.n_users = v;
            if s.n_rf_chains.is_none() {
                cfg.n_rf_chains = v;
            }
        }
        if let Some(v) = s.n_rf_chains {
            cfg.n_rf_chains = v;
        }
        if let Some(v) = s.n_quant {
            cfg.n_quant = v;
        }
        if kind == ExperimentKind::SnrRatioConvergence {
            // the convergence study serves one user only
            cfg.n_users = 1;
            cfg.n_rf_chains = cfg.n_rf_chains.max(1);
        }
        let w = &self.sweep;
        if let Some(v) = &w.n_list {
            cfg.n_list = v.clone();
        }
        if let Some(v) = &w.snr_db_list {
            cfg.snr_db_list = v.clone();
        }
        if let Some(v) = &w.nq_list {
            cfg.nq_list = v.clone();
        }
        if let Some(v) = &w.nu_pairs {
            cfg.nu_pairs = v.clone();
        }
        let r = &self.run;
        if let Some(v) = r.trials {
            cfg.trials = v;
        }
        if let Some(v) = r.seed {
            cfg.seed = v;
        }
        if let Some(v) = r.samples {
            cfg.samples = v;
        }
        if let Some(list) = &self.architectures {
            cfg.architectures = list
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    e.name
                        .parse()
                        .map(|a| ArchitectureSpec::new(a, e.combiner))
                        .map_err(|_| {
                            Error::config(
                                format!("architectures[{i}].name"),
                                format!("unknown architecture `{}`", e.name),
                            )
                        })
                })
                .collect::<Result<_>>()?;
        }
        if let Some(m) = self.nf.mode {
            cfg.nf_mode = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The cascade in `nf.chain`.
    pub fn chain(&self) -> Result<NoiseStageChain> {
        let stages = self
            .nf
            .chain
            .clone()
            .filter(|c| !c.is_empty())
            .ok_or_else(|| Error::config("nf.chain", "must list at least one stage"))?;
        for (i, s) in stages.iter().enumerate() {
            RfStage::new(s.label.clone(), s.gain_db, s.nf_db)
                .map_err(|e| Error::config(format!("nf.chain[{i}]"), e.to_string()))?;
        }
        Ok(NoiseStageChain::new(stages))
    }

    pub fn threads(&self) -> Result<Option<usize>> {
        match self.run.threads {
            Some(0) => Err(Error::config("run.threads", "must be at least 1")),
            t => Ok(t),
        }
    }
}

fn field_hint(msg: &str) -> String {
    // "unknown field `foo`, expected ..." or "missing field `bar`"
    msg.split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "config".to_string())
}
