use std::fmt;
use std::path::Path;

use mothersolve::suite::SuiteConfig;
use mothersolve::Params;
use serde::{Deserialize, Deserializer, Serialize};

use crate::Failure;

/// A number kept as the decimal text it was written with; TOML numbers and
/// strings are both accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct Dec {
    text: String,
    value: f64,
}

impl Dec {
    pub fn parse(text: &str) -> Result<Self, String> {
        let t = text.trim();
        let value: f64 = t.parse().map_err(|_| format!("not a decimal number: {text:?}"))?;
        if !value.is_finite() {
            return Err(format!("not a finite number: {text:?}"));
        }
        Ok(Dec { text: t.to_string(), value })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

impl From<f64> for Dec {
    fn from(x: f64) -> Self {
        Dec { text: x.to_string(), value: x }
    }
}

impl fmt::Display for Dec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Serialize for Dec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Dec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(i64),
            Float(f64),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Text(s) => s,
            Raw::Int(i) => i.to_string(),
            Raw::Float(x) => x.to_string(),
        };
        Dec::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Samples {
    /// Points on the droplet boundary.
    pub boundary: usize,
    /// Points per trajectory after arclength resampling.
    pub trajectory: usize,
    /// Points of the μ0 density table.
    pub density: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Samples { boundary: 256, trajectory: 200, density: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub ratio_band: [Dec; 2],
    pub point_fraction: Dec,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { ratio_band: [Dec::from(1.4), Dec::from(2.6)], point_fraction: Dec::from(0.8) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    /// Multiplies ρ before the curve invariants are checked; 1 leaves it alone.
    pub rho_factor: Dec,
    /// Criteria to run; empty runs all.
    pub only: Vec<u32>,
    pub duality_ns: Vec<u32>,
    pub partition_ns: Vec<u32>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { rho_factor: Dec::from(1.0), only: Vec::new(), duality_ns: vec![2, 3, 4], partition_ns: vec![4, 8] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub q0: Dec,
    pub q1: Dec,
    pub w: Vec<Dec>,
    pub n_list: Vec<u32>,
    pub r0: Vec<i64>,
    /// Working digits for the polynomial layer; unset uses 40 + 3n.
    pub precision: Option<u32>,
    pub precision_bump: u32,
    /// Probe jitter radius relative to |z1 − z2|; applied only with --seed.
    pub jitter: Dec,
    pub samples: Samples,
    pub tolerances: Tolerances,
    pub verify: VerifyOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            q0: Dec::from(1.0),
            q1: Dec::from(1.0),
            w: vec![Dec::from(0.5), Dec::from(1.0), Dec::from(2.0)],
            n_list: vec![10, 20, 40],
            r0: vec![0, 1],
            precision: None,
            precision_bump: 20,
            jitter: Dec::from(0.01),
            samples: Samples::default(),
            tolerances: Tolerances::default(),
            verify: VerifyOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))
    }

    /// Checks everything that does not need the spectral curve.
    pub fn validate(&self) -> Result<(), Failure> {
        if self.w.is_empty() {
            return Err(Failure::Usage("the w list is empty".into()));
        }
        if self.n_list.is_empty() {
            return Err(Failure::Usage("the N list is empty".into()));
        }
        if self.n_list.contains(&0) {
            return Err(Failure::Usage("N must be positive".into()));
        }
        if self.r0.is_empty() {
            return Err(Failure::Usage("the r0 list is empty".into()));
        }
        for w in &self.w {
            Params::geometry(self.q0.value(), self.q1.value(), w.value()).map_err(|e| Failure::Usage(format!("w = {w}: {e}")))?;
        }
        for &nn in &self.n_list {
            for &r0 in &self.r0 {
                let n = nn as i64 + r0;
                if n < 0 {
                    return Err(Failure::Usage(format!("degree N + r0 = {n} is negative")));
                }
                Params::new(self.q0.value(), self.q1.value(), self.w[0].value(), nn, n)
                    .map_err(|e| Failure::Usage(format!("N = {nn}, r0 = {r0}: {e}")))?;
            }
        }
        let s = &self.samples;
        if s.boundary < 16 || s.trajectory < 2 || s.density < 2 {
            return Err(Failure::Usage("sample counts must be at least 16 (boundary) and 2 (others)".into()));
        }
        if !(self.jitter.value() >= 0.0) {
            return Err(Failure::Usage("jitter must be non-negative".into()));
        }
        if self.precision == Some(0) {
            return Err(Failure::Usage("precision must be positive".into()));
        }
        Ok(())
    }

    /// Acceptance-suite settings; the last N only serves as the top of the ratio pairs.
    pub fn suite(&self) -> Result<SuiteConfig, Failure> {
        if self.n_list.len() < 2 {
            return Err(Failure::Usage("verify needs at least two N values for the rate tests".into()));
        }
        let mut ns = self.n_list.clone();
        ns.sort_unstable();
        ns.dedup();
        let cfg = SuiteConfig {
            q0: self.q0.value(),
            q1: self.q1.value(),
            ws: self.w.iter().map(Dec::value).collect(),
            field_ns: ns.clone(),
            norm_ns: ns[..ns.len() - 1].to_vec(),
            r0s: self.r0.clone(),
            duality_ns: self.verify.duality_ns.clone(),
            partition_ns: self.verify.partition_ns.clone(),
            digits: self.precision,
            precision_bump: self.precision_bump,
            ratio_band: [self.tolerances.ratio_band[0].value(), self.tolerances.ratio_band[1].value()],
            point_fraction: self.tolerances.point_fraction.value(),
            rho_factor: self.verify.rho_factor.value(),
            only: self.verify.only.clone(),
        };
        cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_keep_their_text() {
        let cfg: RunConfig = toml::from_str("q0 = \"1.000\"\nq1 = 2\nw = [0.5, \"1.25\"]").unwrap();
        assert_eq!(cfg.q0.text(), "1.000");
        assert_eq!(cfg.q1.value(), 2.0);
        assert_eq!(cfg.w[1].value(), 1.25);
        assert_eq!(serde_json::to_string(&cfg.w).unwrap(), "[\"0.5\",\"1.25\"]");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("q2 = 1").is_err());
    }

    #[test]
    fn empty_lists_are_usage_errors() {
        let cfg = RunConfig { n_list: vec![], ..RunConfig::default() };
        assert!(matches!(cfg.validate(), Err(Failure::Usage(_))));
        let cfg = RunConfig { n_list: vec![10], ..RunConfig::default() };
        assert!(cfg.validate().is_ok());
        assert!(matches!(cfg.suite(), Err(Failure::Usage(_))));
    }

    #[test]
    fn default_suite_matches_library_default() {
        assert_eq!(RunConfig::default().suite().unwrap(), SuiteConfig::default());
    }
}
