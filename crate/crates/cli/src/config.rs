//! Flat `key = value` config files. Keys match the long flag names; `_` and
//! `-` are interchangeable. Blank lines and `#` comments are skipped.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use birkhoff_core::experiments::sigma_range;
use birkhoff_core::Error;

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

fn invalid(msg: String) -> Error {
    Error::InvalidInput(msg)
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, Error> {
        match path {
            None => Ok(Self::default()),
            Some(p) => Self::parse(&std::fs::read_to_string(p)?),
        }
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut values = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                invalid(format!("config line {}: expected key = value", lineno + 1))
            })?;
            values.insert(k.trim().replace('_', "-"), v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    /// Reject keys the subcommand does not understand, so typos are not
    /// silently ignored.
    pub fn check_keys(&self, known: &[&str]) -> Result<(), Error> {
        let mut unknown: Vec<&str> = self
            .values
            .keys()
            .map(String::as_str)
            .filter(|k| !known.contains(k))
            .collect();
        unknown.sort_unstable();
        match unknown.first() {
            None => Ok(()),
            Some(k) => Err(invalid(format!("unknown config key '{k}'"))),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// The flag value if given, otherwise the file value.
    pub fn pick<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, Error>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.raw(key).map(|v| parse_value(key, v)).transpose()
    }

    pub fn pick_or<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, Error>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.pick(key, flag)?.unwrap_or(default))
    }

    /// A switch is on if the flag is set or the file says `true`.
    pub fn switch(&self, key: &str, flag: bool) -> Result<bool, Error> {
        Ok(flag || self.pick::<bool>(key, None)?.unwrap_or(false))
    }

    /// Comma-separated list; a non-empty flag list replaces the file list.
    pub fn list(&self, key: &str, flag: &[String]) -> Vec<String> {
        if !flag.is_empty() {
            return flag.to_vec();
        }
        self.raw(key)
            .map(|v| v.split(',').map(|s| s.trim().to_string()).collect())
            .unwrap_or_default()
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, Error>
where
    T::Err: std::fmt::Display,
{
    v.parse()
        .map_err(|e| invalid(format!("bad value '{v}' for {key}: {e}")))
}

pub fn parse_usizes(key: &str, items: &[String]) -> Result<Vec<usize>, Error> {
    items.iter().map(|s| parse_value(key, s)).collect()
}

/// Each item is a single value or an inclusive `lo:hi:step` range.
pub fn parse_sigmas(items: &[String]) -> Result<Vec<f64>, Error> {
    let mut out = Vec::new();
    for item in items {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(parse_value("sigma", v)?),
            [lo, hi, step] => out.extend(sigma_range(
                parse_value("sigma", lo)?,
                parse_value("sigma", hi)?,
                parse_value("sigma", step)?,
            )?),
            _ => {
                return Err(invalid(format!(
                    "bad sigma '{item}': use a value or lo:hi:step"
                )))
            }
        }
    }
    Ok(out)
}
