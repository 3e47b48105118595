//! Resource caps and defaults: built-in values, then an optional key=value
//! config file, then `SMOOTH_ROUGH_*` environment variables.

use std::path::Path;

use smooth_rough::ResourceCaps;

use crate::CliError;

pub const ENV_PREFIX: &str = "SMOOTH_ROUGH_";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settings {
    pub caps: ResourceCaps,
    pub tol: f64,
    pub truncation_x: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            caps: ResourceCaps::default(),
            tol: 1e-6,
            truncation_x: 1_000_000,
        }
    }
}

pub const KEYS: [&str; 7] = [
    "max_x",
    "max_enumeration",
    "max_breakpoints",
    "max_u",
    "max_truncation_x",
    "tol",
    "truncation_x",
];

pub fn parse_count(key: &str, v: &str) -> Result<u64, CliError> {
    let v = v.trim();
    v.parse::<u64>()
        .ok()
        .or_else(|| {
            v.parse::<f64>()
                .ok()
                .filter(|f| f.fract() == 0.0 && *f >= 0.0 && *f < 1.8e19)
                .map(|f| f as u64)
        })
        .ok_or_else(|| CliError::Usage(format!("{key} must be a non-negative integer, got {v:?}")))
}

fn parse_real(key: &str, v: &str) -> Result<f64, CliError> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|f| f.is_finite() && *f > 0.0)
        .ok_or_else(|| CliError::Usage(format!("{key} must be a positive number, got {v:?}")))
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "max_x" => self.caps.max_x = parse_count(key, value)?,
            "max_enumeration" => self.caps.max_enumeration = parse_count(key, value)? as usize,
            "max_breakpoints" => self.caps.max_breakpoints = parse_count(key, value)? as usize,
            "max_u" => self.caps.max_u = parse_real(key, value)?,
            "max_truncation_x" => self.caps.max_truncation_x = parse_count(key, value)?,
            "tol" => self.tol = parse_real(key, value)?,
            "truncation_x" => self.truncation_x = parse_count(key, value)?,
            _ => return Err(CliError::Usage(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }

    /// Lines `key = value`; blank lines and `#` comments are skipped.
    pub fn apply_file_contents(&mut self, text: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn apply_env<F: Fn(&str) -> Option<String>>(&mut self, lookup: F) -> Result<(), CliError> {
        for key in KEYS {
            if let Some(v) = lookup(&format!("{ENV_PREFIX}{}", key.to_uppercase())) {
                self.set(key, &v)?;
            }
        }
        Ok(())
    }

    pub fn load(config: Option<&Path>) -> Result<Self, CliError> {
        let mut s = Self::default();
        if let Some(path) = config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            s.apply_file_contents(&text)?;
        }
        s.apply_env(|k| std::env::var(k).ok())?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layering() {
        let mut s = Settings::default();
        s.apply_file_contents("# caps\nmax_x = 1000\n\ntol=1e-4 # loose\n").unwrap();
        assert_eq!(s.caps.max_x, 1000);
        assert_eq!(s.tol, 1e-4);
        s.apply_env(|k| (k == "SMOOTH_ROUGH_MAX_X").then(|| "2e3".to_string()))
            .unwrap();
        assert_eq!(s.caps.max_x, 2000);
        assert!(s.apply_file_contents("bogus = 1").is_err());
        assert!(s.apply_file_contents("max_x").is_err());
        assert!(s.apply_file_contents("tol = -1").is_err());
    }
}
