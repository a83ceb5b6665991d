//! Flat key-value config format shared by the CLI and the file
//! interfaces: `key = value` lines, `#` comments, unknown keys rejected
//! against a per-command schema.

use crate::error::{EngineError, Result};
use crate::hypercube::KrausSpec;
use num_complex::Complex;
use std::collections::BTreeMap;

#[derive(Clone, Debug, Default)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(EngineError::InvalidInput(format!(
                    "config line {}: expected `key = value`, got {raw:?}",
                    lineno + 1
                )));
            };
            let key = k.trim().to_string();
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(EngineError::InvalidInput(format!("duplicate key {key:?}")));
            }
        }
        Ok(ConfigMap { entries })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Reject any key not in `allowed`.
    pub fn check_schema(&self, allowed: &[&str]) -> Result<()> {
        for k in self.entries.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(EngineError::InvalidInput(format!(
                    "unknown config key {k:?} (allowed: {})",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| EngineError::InvalidInput(format!("key {key:?}: bad number {v:?}"))),
        }
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| EngineError::InvalidInput(format!("key {key:?}: bad integer {v:?}"))),
        }
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| EngineError::InvalidInput(format!("key {key:?}: bad integer {v:?}"))),
        }
    }

    /// Comma-separated floats.
    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| {
                        EngineError::InvalidInput(format!("key {key:?}: bad list entry {s:?}"))
                    })
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

/// Keys of the KrausSpec file interface.
pub const KRAUS_KEYS: &[&str] =
    &["n", "mu", "phi", "nbar", "step_angles", "initial_center_re", "initial_center_im"];

pub fn kraus_from_config(cfg: &ConfigMap) -> Result<KrausSpec<f64>> {
    let n = cfg
        .get_usize("n")?
        .ok_or_else(|| EngineError::InvalidInput("missing key `n`".into()))?;
    let mu = cfg
        .get_f64("mu")?
        .ok_or_else(|| EngineError::InvalidInput("missing key `mu`".into()))?;
    let mut spec = KrausSpec::new(n, mu);
    if let Some(phi) = cfg.get_f64("phi")? {
        spec.phi = phi;
    }
    if let Some(nbar) = cfg.get_f64("nbar")? {
        spec.nbar = nbar;
    }
    if let Some(angles) = cfg.get_list("step_angles")? {
        spec.step_angles = Some(angles);
    }
    let re = cfg.get_f64("initial_center_re")?.unwrap_or(0.0);
    let im = cfg.get_f64("initial_center_im")?.unwrap_or(0.0);
    spec.initial_center = Complex::new(re, im);
    spec.validate()?;
    Ok(spec)
}

pub fn kraus_to_config(spec: &KrausSpec<f64>) -> ConfigMap {
    let mut cfg = ConfigMap::default();
    cfg.set("n", spec.order);
    cfg.set("mu", spec.mu);
    cfg.set("phi", spec.phi);
    cfg.set("nbar", spec.nbar);
    if let Some(a) = &spec.step_angles {
        cfg.set(
            "step_angles",
            a.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
        );
    }
    cfg.set("initial_center_re", spec.initial_center.re);
    cfg.set("initial_center_im", spec.initial_center.im);
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut spec = KrausSpec::new(3, 2.5);
        spec.nbar = 0.7;
        spec.step_angles = Some(vec![1.0, 1.1, 1.2]);
        spec.initial_center = Complex::new(0.25, -0.5);
        let text = kraus_to_config(&spec).to_text();
        let back = kraus_from_config(&ConfigMap::parse(&text).unwrap()).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn unknown_keys_rejected() {
        let cfg = ConfigMap::parse("n = 2\nmu = 1.0\nbogus = 3\n").unwrap();
        assert!(cfg.check_schema(KRAUS_KEYS).is_err());
        assert!(cfg.check_schema(&["n", "mu", "bogus"]).is_ok());
    }

    #[test]
    fn comments_and_errors() {
        let cfg = ConfigMap::parse("# comment\nn = 2 # inline\nmu = 6.0\n").unwrap();
        assert_eq!(cfg.get_usize("n").unwrap(), Some(2));
        assert!(ConfigMap::parse("n 2\n").is_err());
        assert!(ConfigMap::parse("n = 2\nn = 3\n").is_err());
        let bad = ConfigMap::parse("n = x\n").unwrap();
        assert!(bad.get_usize("n").is_err());
    }
}
