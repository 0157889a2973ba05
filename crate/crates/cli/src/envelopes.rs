//! Committed envelopes: bounds on experiment metrics, keyed by
//! `<experiment id>.<metric>`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::read_text;
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
    /// Where the bound comes from: an exact identity, a closed form, or a
    /// pilot run with its grid.
    pub origin: String,
}

impl Envelope {
    pub fn admits(&self, v: f64) -> bool {
        v.is_finite() && self.min.is_none_or(|m| v >= m) && self.max.is_none_or(|m| v <= m)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelopes {
    pub version: u32,
    pub entries: BTreeMap<String, Envelope>,
}

impl Envelopes {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        serde_json::from_str(&read_text(path)?).map_err(|e| CliError::io(path, e))
    }

    /// Violations of the envelopes registered for `id`, plus a missing-metric
    /// message for every registered metric that was not reported.
    pub fn check(&self, id: &str, metrics: &BTreeMap<String, f64>) -> Vec<String> {
        let prefix = format!("{id}.");
        let mut out = Vec::new();
        for (key, env) in self.entries.range(prefix.clone()..) {
            let Some(metric) = key.strip_prefix(&prefix) else { break };
            match metrics.get(metric) {
                None => out.push(format!("{key}: metric not reported")),
                Some(v) if !env.admits(*v) => out.push(format!(
                    "{key} = {v:e} outside [{}, {}]",
                    env.min.map_or("-inf".to_string(), |m| format!("{m:e}")),
                    env.max.map_or("inf".to_string(), |m| format!("{m:e}"))
                )),
                Some(_) => {}
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_uses_only_matching_prefix() {
        let mut entries = BTreeMap::new();
        entries.insert(
            "a.x".to_string(),
            Envelope {
                min: None,
                max: Some(1.0),
                origin: "test".into(),
            },
        );
        entries.insert(
            "ab.x".to_string(),
            Envelope {
                min: Some(5.0),
                max: None,
                origin: "test".into(),
            },
        );
        let env = Envelopes { version: 1, entries };
        let mut m = BTreeMap::new();
        m.insert("x".to_string(), 0.5);
        assert!(env.check("a", &m).is_empty());
        assert_eq!(env.check("ab", &m).len(), 1);
        assert_eq!(env.check("a", &BTreeMap::new()).len(), 1);
        assert!(env.check("c", &m).is_empty());
    }
}
