//! Flat `key = value` option resolution: built-in defaults, then an optional
//! config file, then command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// One accepted key and its default, if it has one.
pub type KeySpec = (&'static str, Option<&'static str>);

#[derive(Debug, Clone)]
pub struct Options {
    command: &'static str,
    values: BTreeMap<&'static str, String>,
}

fn normalize(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('-', "_")
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are ignored.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected `key = value`, got `{raw}`", i + 1))?;
        let key = normalize(k);
        if key.is_empty() {
            bail!("config line {}: empty key", i + 1);
        }
        out.push((key, v.trim().to_owned()));
    }
    Ok(out)
}

impl Options {
    /// Merges defaults, config file entries and flags. Any key outside
    /// `spec` is rejected, whether it comes from the file or a flag.
    pub fn resolve(
        command: &'static str,
        spec: &[KeySpec],
        config: Option<&Path>,
        flags: &[(&'static str, Option<String>)],
    ) -> Result<Self> {
        let lookup = |key: &str| spec.iter().find(|(k, _)| *k == key).map(|(k, _)| *k);
        let mut values: BTreeMap<&'static str, String> =
            spec.iter().filter_map(|(k, d)| d.map(|d| (*k, d.to_owned()))).collect();
        if let Some(path) = config {
            let text =
                fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
            for (key, value) in parse_config(&text)? {
                let k =
                    lookup(&key).ok_or_else(|| anyhow!("unknown key `{key}` for `{command}` in {}", path.display()))?;
                values.insert(k, value);
            }
        }
        for (name, value) in flags {
            if let Some(v) = value {
                let k = lookup(name)
                    .ok_or_else(|| anyhow!("flag --{} does not apply to `{command}`", name.replace('_', "-")))?;
                values.insert(k, v.clone());
            }
        }
        Ok(Self { command, values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parse<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow!("invalid value `{v}` for {key}: {e}"))
            })
            .transpose()
    }

    pub fn require<T>(&self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.parse(key)?
            .ok_or_else(|| anyhow!("`{}` needs --{}", self.command, key.replace('_', "-")))
    }

    /// Comma-separated list.
    pub fn list<T>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<T>()
                            .map_err(|e| anyhow!("invalid entry `{s}` in {key}: {e}"))
                    })
                    .collect()
            })
            .transpose()
    }

    /// Inclusive range written `lo:hi` or `lo,hi`.
    pub fn range(&self, key: &str) -> Result<Option<(usize, usize)>> {
        let Some(v) = self.get(key) else { return Ok(None) };
        let (lo, hi) = v
            .split_once(':')
            .or_else(|| v.split_once(','))
            .ok_or_else(|| anyhow!("{key} must look like `lo:hi`, got `{v}`"))?;
        let lo: usize = lo
            .trim()
            .parse()
            .map_err(|e| anyhow!("invalid {key} lower bound: {e}"))?;
        let hi: usize = hi
            .trim()
            .parse()
            .map_err(|e| anyhow!("invalid {key} upper bound: {e}"))?;
        if lo > hi {
            bail!("{key} lower bound {lo} exceeds upper bound {hi}");
        }
        Ok(Some((lo, hi)))
    }

    /// Fully resolved options, for the manifest.
    pub fn entries(&self) -> impl Iterator<Item = (&'static str, &str)> {
        self.values.iter().map(|(k, v)| (*k, v.as_str()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &[KeySpec] = &[("n", Some("251")), ("theta_m", Some("0.9")), ("out", None)];

    #[test]
    fn flags_override_file_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "# comment\nn = 13\ntheta-m = 0.5 # trailing\n\n").unwrap();
        let o = Options::resolve("gen", SPEC, Some(&cfg), &[("n", Some("17".into())), ("out", None)]).unwrap();
        assert_eq!(o.get("n"), Some("17"));
        assert_eq!(o.get("theta_m"), Some("0.5"));
        assert_eq!(o.get("out"), None);
        assert_eq!(o.require::<usize>("n").unwrap(), 17);
        assert!(o.require::<String>("out").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "bogus = 1\n").unwrap();
        assert!(Options::resolve("gen", SPEC, Some(&cfg), &[]).is_err());
        assert!(Options::resolve("gen", SPEC, None, &[("corpus", Some("x".into()))]).is_err());
        assert!(parse_config("no equals sign").is_err());
    }

    #[test]
    fn lists_and_ranges() {
        let spec: &[KeySpec] = &[
            ("grid", Some("0.1, 0.5,0.9")),
            ("r", Some("128:512")),
            ("bad", Some("9:3")),
        ];
        let o = Options::resolve("x", spec, None, &[]).unwrap();
        assert_eq!(o.list::<f64>("grid").unwrap().unwrap(), vec![0.1, 0.5, 0.9]);
        assert_eq!(o.range("r").unwrap(), Some((128, 512)));
        assert!(o.range("bad").is_err());
        assert_eq!(o.range("missing").unwrap(), None);
    }
}
