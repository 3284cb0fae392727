//! Flat `key=value` configuration.
//!
//! Keys address fields of the algorithm configs: `descent.*`, `explore.*`
//! and `postprocess.*` go to the MOLE sub-configs, `mole.*` and `mogsa.*` to
//! the top-level ones. Values are parsed by the type of the field they
//! replace.

use std::fs;
use std::path::Path;

use mole_core::mogsa::MogsaConfig;
use mole_core::{MoleConfig, Mop};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub mole: MoleConfig,
    pub mogsa: MogsaConfig,
}

impl AlgoConfig {
    pub fn for_problem(mop: &Mop) -> Self {
        Self {
            mole: MoleConfig::for_problem(mop),
            mogsa: MogsaConfig::for_problem(mop),
        }
    }
}

/// Reads `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(
            parse_assignment(line).map_err(|e| CliError::Usage(format!("line {}: {e}", n + 1)))?,
        );
    }
    Ok(out)
}

pub fn parse_assignment(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err(format!("empty key in '{s}'"));
    }
    Ok((k.to_string(), v.to_string()))
}

pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

fn path_for(key: &str) -> Option<Vec<&str>> {
    let parts: Vec<&str> = key.split('.').collect();
    match parts.as_slice() {
        [scope @ ("descent" | "explore" | "postprocess"), field] => {
            Some(vec!["mole", scope, field])
        }
        [scope @ ("mole" | "mogsa"), field] => Some(vec![scope, field]),
        _ => None,
    }
}

/// Applies the assignments in order; later ones win.
pub fn apply_overrides(
    config: &AlgoConfig,
    assignments: &[(String, String)],
) -> Result<AlgoConfig, CliError> {
    let mut tree = serde_json::to_value(config).expect("configs serialize");
    for (key, raw) in assignments {
        let unknown = || CliError::Usage(format!("unknown config key '{key}'"));
        let path = path_for(key).ok_or_else(unknown)?;
        let mut slot = &mut tree;
        for p in &path {
            slot = slot.get_mut(*p).ok_or_else(unknown)?;
        }
        let bad =
            |what: &str| CliError::Usage(format!("config key '{key}' expects {what}, got '{raw}'"));
        *slot = match slot {
            Value::Bool(_) => Value::Bool(raw.parse().map_err(|_| bad("true or false"))?),
            Value::Number(n) if n.is_u64() => Value::from(
                raw.parse::<u64>()
                    .map_err(|_| bad("a non-negative integer"))?,
            ),
            Value::Number(_) => {
                let v: f64 = raw.parse().map_err(|_| bad("a number"))?;
                serde_json::Number::from_f64(v)
                    .map(Value::Number)
                    .ok_or_else(|| bad("a finite number"))?
            }
            _ => return Err(unknown()),
        };
    }
    let out: AlgoConfig = serde_json::from_value(tree)
        .map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
    out.mole.validate()?;
    out.mogsa.validate()?;
    Ok(out)
}
