//! Flat key-value settings: defaults < config file < command line.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use crate::Failure;

/// Every key a config file may contain. Each has a `--kebab-case` flag.
pub const KEYS: &[&str] = &[
    // shared
    "out",
    "grid",
    "seed",
    "threads",
    "phase_tol",
    "max_levels",
    "quadrature_tol",
    "quadrature_max_nodes",
    // dephasing
    "theta",
    "omega",
    "gamma",
    "gamma_over_omega",
    "coupling",
    "mode_frequency",
    "horizon",
    // spin bath
    "delta",
    "s_n",
    "delta_over_s_n",
    "px0",
    "py0",
    "pz0",
    "quadrature",
    "nodes",
    // sweep
    "model",
    "axis1",
    "axis2",
    // verify
    "surface_grid",
];

#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Reads a flat TOML file. Tables, arrays and unknown keys are rejected.
    pub fn from_file(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|m| Failure::Usage(format!("{}: {m}", path.display())))
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| e.message().to_string())?;
        let mut values = BTreeMap::new();
        for (key, value) in table {
            if !KEYS.contains(&key.as_str()) {
                return Err(format!("unknown key '{key}'"));
            }
            let text = match value {
                toml::Value::String(s) => s,
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(f) => f.to_string(),
                toml::Value::Boolean(b) => b.to_string(),
                _ => return Err(format!("key '{key}' must be a plain value")),
            };
            values.insert(key, text);
        }
        Ok(Self { values })
    }

    /// Command-line values win over whatever is already present.
    pub fn overlay(&mut self, pairs: impl IntoIterator<Item = (&'static str, Option<String>)>) {
        for (key, value) in pairs {
            debug_assert!(KEYS.contains(&key), "flag {key} missing from KEYS");
            if let Some(v) = value {
                self.values.insert(key.to_string(), v);
            }
        }
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>, Failure> {
        self.text(key)
            .map(|s| parse_number(s).map_err(|m| Failure::Usage(format!("{key}: {m}"))))
            .transpose()
    }

    pub fn count(&self, key: &str) -> Result<Option<u64>, Failure> {
        self.text(key)
            .map(|s| {
                s.trim().parse::<u64>().map_err(|_| {
                    Failure::Usage(format!("{key}: expected a non-negative integer, got '{s}'"))
                })
            })
            .transpose()
    }

    /// Numeric values of the given keys that are set.
    pub fn numbers(&self, keys: &[&str]) -> Result<BTreeMap<String, f64>, Failure> {
        let mut out = BTreeMap::new();
        for &k in keys {
            if let Some(v) = self.number(k)? {
                out.insert(k.to_string(), v);
            }
        }
        Ok(out)
    }
}

/// A real number, optionally in units of π: `0.25`, `1e-3`, `0.5pi`, `-pi`, `2π`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let stripped = t.strip_suffix("pi").or_else(|| t.strip_suffix('π'));
    let value = match stripped {
        Some(m) => {
            let m = m.trim_end_matches('*').trim();
            let factor = match m {
                "" | "+" => 1.0,
                "-" => -1.0,
                _ => m
                    .parse::<f64>()
                    .map_err(|_| format!("'{s}' is not a number"))?,
            };
            factor * PI
        }
        None => t
            .parse::<f64>()
            .map_err(|_| format!("'{s}' is not a number"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_in_units_of_pi() {
        assert_eq!(parse_number("0.5pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_number("-pi").unwrap(), -PI);
        assert_eq!(parse_number("2π").unwrap(), 2.0 * PI);
        assert_eq!(parse_number(" 1e-3 ").unwrap(), 1e-3);
        assert_eq!(parse_number("0.25*pi").unwrap(), 0.25 * PI);
        assert!(parse_number("pie").is_err());
        assert!(parse_number("inf").is_err());
    }

    #[test]
    fn command_line_beats_file() {
        let mut s = Settings::from_toml("theta = \"0.25pi\"\nomega = 2\n").unwrap();
        s.overlay([("theta", Some("0.5pi".to_string())), ("gamma", None)]);
        assert_eq!(s.number("theta").unwrap(), Some(0.5 * PI));
        assert_eq!(s.number("omega").unwrap(), Some(2.0));
        assert_eq!(s.number("gamma").unwrap(), None);
    }

    #[test]
    fn rejects_unknown_and_nested_keys() {
        assert!(Settings::from_toml("thetta = 1").is_err());
        assert!(Settings::from_toml("[model]\ntheta = 1").is_err());
        assert!(Settings::from_toml("theta = [1, 2]").is_err());
    }
}
