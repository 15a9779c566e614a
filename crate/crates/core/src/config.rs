//! On-disk run configuration (TOML) and the serde helper for fields that
//! may be infinite.
//!
//! A run file has a `[scenario]` table (grid, emitters, geometry, optional
//! RIS weights, channels, SNR, seed) and an optional `[recovery]` table.
//! `inf` is a valid TOML float, so `snr_db = inf` and `pulse_len_s = inf`
//! are written literally. JSON has no infinity; there these fields are the
//! string `"inf"`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eval::RecoverySpec;
use crate::scene::Scenario;
use crate::{Error, Result};

/// Serialize non-finite floats as `"inf"` / `"-inf"`; accept a number or
/// one of those strings.
pub mod maybe_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.trim() {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                other => other
                    .parse()
                    .map_err(|_| serde::de::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub recovery: RecoverySpec,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.recovery.validate(&self.scenario.grid)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let reason = e.message().to_string();
            let field = e
                .span()
                .map(|s| locate_key(text, s.start))
                .unwrap_or_else(|| "config".into());
            Error::config(field, reason)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("run config is always representable in TOML")
    }
}

/// Dotted table path and key of the line holding byte offset `at`.
fn locate_key(text: &str, at: usize) -> String {
    let mut table = String::new();
    let mut key = String::new();
    let mut offset = 0;
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            table = trimmed
                .trim_matches(|c| c == '[' || c == ']')
                .trim()
                .to_string();
            key.clear();
        } else if let Some((k, _)) = trimmed.split_once('=') {
            key = k.trim().to_string();
        }
        offset += line.len() + 1;
        if offset > at {
            break;
        }
    }
    match (table.is_empty(), key.is_empty()) {
        (true, true) => "config".into(),
        (true, false) => key,
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}

/// Annotated example run file.
pub const EXAMPLE_TOML: &str = r#"# NYFR run configuration.
# Topology: give [scenario.ris] for the RIS swarm (exactly one channel);
# omit it for the decentralized swarm (one geometry position per channel).

[scenario]
snr_db = 0.0          # in-pulse SNR; inf disables noise
seed = 7

[scenario.grid]
f_s_hz = 4e9          # ADC / LO centre rate
zones = 4             # Z
n = 800               # measurements per channel
f_start_hz = 2e9      # must be (M - 1/2) * f_s

[scenario.geometry]
positions_m = [0.0, 0.0, 0.0]
beta_rad = 0.0

[[scenario.channels]]
f_s_hz = 4e9
a_theta = 1.0
f_theta_hz = 10e6
drift_s = 0.0

[[scenario.channels]]
f_s_hz = 4e9
a_theta = 30.0
f_theta_hz = 10e6

[[scenario.channels]]
f_s_hz = 4e9
a_theta = 30.0
f_theta_hz = 30e6

[[scenario.emitters]]
kind = "monopulse"    # cw | monopulse | bpsk | lfm
carrier_hz = 9.3e9
amplitude = 1.0
phase0_rad = 0.0
pulse_start_s = 20e-9
pulse_len_s = 150e-9  # inf for cw
azimuth_rad = 0.2     # (-pi/3, pi/3]

[[scenario.emitters]]
kind = "lfm"
carrier_hz = 13.1e9
chirp_bw_hz = 20e6
pulse_start_s = 0.0
pulse_len_s = 200e-9

[recovery]
mode = "sparse"       # sparse | block_sparse
max_support = 8       # atoms or blocks
# residual_tol = 0.3  # fixed relative stop; default derives it from the noise level
kappa = 1.0           # discrepancy factor for the noise-derived stop
block_len = 10        # bins per block (block_sparse only)
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_parses_and_roundtrips() {
        let cfg = RunConfig::from_toml_str(EXAMPLE_TOML).unwrap();
        assert_eq!(cfg.scenario.channels.len(), 3);
        assert_eq!(cfg.scenario.emitters[1].chirp_bw_hz, 20e6);
        let again = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn infinite_fields() {
        let text = EXAMPLE_TOML.replace("snr_db = 0.0", "snr_db = inf");
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.scenario.snr_db, f64::INFINITY);
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"snr_db\":\"inf\""));
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        assert!(RunConfig::from_toml_str(&cfg.to_toml_string()).is_ok());
    }

    #[test]
    fn bad_f_start_names_field() {
        let text = EXAMPLE_TOML.replace("f_start_hz = 2e9", "f_start_hz = 1e9");
        match RunConfig::from_toml_str(&text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "grid.f_start_hz"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn type_error_names_key() {
        let text = EXAMPLE_TOML.replace("zones = 4 ", "zones = \"four\" ");
        match RunConfig::from_toml_str(&text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "scenario.grid.zones"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn out_of_span_carrier_names_emitter() {
        let text = EXAMPLE_TOML.replace("carrier_hz = 9.3e9", "carrier_hz = 19e9");
        match RunConfig::from_toml_str(&text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "emitters[0].carrier_hz"),
            other => panic!("{other:?}"),
        }
    }
}
