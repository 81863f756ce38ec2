//! Toolkit configuration file.
//!
//! ```toml
//! rules = "rules.toml"        # optional; bundled rules otherwise
//! timezone = "+10:00"         # offset used to cut post timestamps into days
//!
//! [call_format]
//! delimiter = ","
//! columns = { date = "CALL_DATE", disposition_code = "DISPOSITION" }
//!
//! [defaults]
//! max_lag = 7
//! period = 7
//! alphabet_size = 5
//! threshold = 0.3
//! ```

use std::path::{Path, PathBuf};

use chrono::FixedOffset;
use serde::{Deserialize, Serialize};

use crate::analysis::Defaults;
use crate::ingest::{CallFormat, RuleSet};
use crate::Error;

pub const CACHE_ENV: &str = "COUPLING_CACHE";
pub const CONFIG_ENV: &str = "COUPLING_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Rule file; relative paths resolve against the config file.
    pub rules: Option<PathBuf>,
    pub timezone: String,
    pub call_format: CallFormat,
    /// Delimiter for delimited post files.
    pub post_delimiter: char,
    pub defaults: Defaults,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            rules: None,
            timezone: "+00:00".into(),
            call_format: CallFormat::default(),
            post_delimiter: ',',
            defaults: Defaults::default(),
        }
    }
}

impl Config {
    pub fn from_path(path: &Path) -> Result<Config, Error> {
        let text = std::fs::read_to_string(path)?;
        let mut config: Config = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        if let (Some(rules), Some(dir)) = (&config.rules, path.parent()) {
            if rules.is_relative() {
                config.rules = Some(dir.join(rules));
            }
        }
        config.zone()?;
        Ok(config)
    }

    /// The fixed UTC offset posts are bucketed in.
    pub fn zone(&self) -> Result<FixedOffset, Error> {
        parse_offset(&self.timezone)
    }

    pub fn rule_set(&self) -> Result<RuleSet, Error> {
        match &self.rules {
            Some(path) => Ok(RuleSet::from_path(path)?),
            None => Ok(RuleSet::default()),
        }
    }
}

/// Parses `UTC`, `Z`, `+10:00`, `-0330` or `+10`.
pub fn parse_offset(raw: &str) -> Result<FixedOffset, Error> {
    let s = raw.trim();
    if s.eq_ignore_ascii_case("utc") || s == "Z" {
        return Ok(FixedOffset::east_opt(0).expect("zero offset"));
    }
    let bad = || Error::Config(format!("bad timezone offset `{raw}`"));
    let (sign, rest) = match s.as_bytes().first() {
        Some(b'+') => (1, &s[1..]),
        Some(b'-') => (-1, &s[1..]),
        _ => return Err(bad()),
    };
    let digits: String = rest.chars().filter(|c| *c != ':').collect();
    let (h, m) = match digits.len() {
        1 | 2 => (digits.parse::<i32>().map_err(|_| bad())?, 0),
        4 => (digits[..2].parse::<i32>().map_err(|_| bad())?, digits[2..].parse::<i32>().map_err(|_| bad())?),
        _ => return Err(bad()),
    };
    if m >= 60 {
        return Err(bad());
    }
    FixedOffset::east_opt(sign * (h * 3600 + m * 60)).ok_or_else(bad)
}
