//! Flat `key = value` configuration files and cone-angle parsing.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::str::FromStr;

/// Settings read from a config file; command-line flags take precedence.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }

    /// One `key = value` per line; `#` starts a comment, blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
            values.insert(normalize_key(key.trim()), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize_key(key)).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| format!("config key {key}: {e}")))
            .transpose()
    }
}

/// `r_min`, `r-min` and `rMin` all name the same key.
fn normalize_key(key: &str) -> String {
    let mut out = String::new();
    for ch in key.chars() {
        match ch {
            '-' => out.push('_'),
            c if c.is_ascii_uppercase() => {
                out.push('_');
                out.push(c.to_ascii_lowercase());
            }
            c => out.push(c),
        }
    }
    out
}

/// Radians from "pi", "pi/2", "3pi/4", "3*pi/4", "2.5" and similar.
pub fn parse_theta(text: &str) -> Result<f64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    if s.is_empty() {
        return Err("empty angle".into());
    }
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a, Some(b)),
        None => (s.as_str(), None),
    };
    let den = match den {
        Some(d) => d.parse::<f64>().map_err(|_| format!("bad denominator in angle '{text}'"))?,
        None => 1.0,
    };
    let value = if let Some(coef) = num.strip_suffix("pi") {
        let coef = coef.strip_suffix('*').unwrap_or(coef);
        let c = match coef {
            "" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| format!("bad coefficient in angle '{text}'"))?,
        };
        c * PI
    } else {
        num.parse::<f64>().map_err(|_| format!("cannot parse angle '{text}'"))?
    };
    let theta = value / den;
    if !theta.is_finite() {
        return Err(format!("angle '{text}' is not finite"));
    }
    Ok(theta)
}
