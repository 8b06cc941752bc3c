//! Plain `key = value` settings files.

use std::collections::BTreeMap;
use std::str::FromStr;

pub const KEYS: [&str; 16] = [
    "preset", "k", "q", "kstar", "qstar", "elems", "slabs", "T", "omega", "precond", "lambda", "tol", "maxiter",
    "levels", "preconds", "residual-log",
];

#[derive(Debug, Default, Clone)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected 'key = value'", no + 1))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(format!("line {}: unknown key '{key}'", no + 1));
            }
            values.insert(key.to_string(), value.trim().trim_matches('"').to_string());
        }
        Ok(Self { values })
    }

    pub fn read(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// The flag value if given, else the parsed file value.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| format!("invalid value '{v}' for {key}: {e}")),
        }
    }
}

/// Parses `"a,b;c,d"` into intervals.
pub fn parse_intervals(s: &str) -> Result<Vec<[f64; 2]>, String> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|part| {
            let nums: Vec<f64> = part
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| format!("bad interval '{part}': {e}")))
                .collect::<Result<_, _>>()?;
            match nums[..] {
                [a, b] => Ok([a, b]),
                _ => Err(format!("interval '{part}' needs exactly two endpoints")),
            }
        })
        .collect()
}

/// Parses a comma separated list.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|e| format!("bad list entry '{v}': {e}")))
        .collect()
}
