use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// `key = value` pairs from a UTF-8 config file. Blank lines and lines
/// starting with `#` are skipped.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got `{line}`", n + 1)))?;
            let key = k.trim().replace('_', "-");
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", n + 1)));
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", n + 1)));
            }
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Parsed value for `key`. Keys may be written with `-` or `_`.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::Config(format!("key `{key}`: cannot parse `{v}`: {e}")))
            })
            .transpose()
    }

    /// Boolean switch: `true`/`false`, `1`/`0`, `yes`/`no`.
    pub fn flag(&self, key: &str) -> Result<Option<bool>> {
        self.raw(key)
            .map(|v| match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                other => Err(Error::Config(format!("key `{key}`: expected a boolean, got `{other}`"))),
            })
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let c = ConfigFile::parse("# run\nscale = 4\n\nbuffer_size=2\nheads= oracle \n").unwrap();
        assert_eq!(c.get::<usize>("scale").unwrap(), Some(4));
        assert_eq!(c.get::<usize>("buffer-size").unwrap(), Some(2));
        assert_eq!(c.raw("heads"), Some("oracle"));
        assert_eq!(c.get::<f64>("sigma").unwrap(), None);
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(ConfigFile::parse("scale 4"), Err(Error::Config(_))));
        assert!(ConfigFile::parse("=4").is_err());
        assert!(ConfigFile::parse("a=1\na=2").is_err());
        let c = ConfigFile::parse("scale=four\ndump-masks=maybe").unwrap();
        assert!(c.get::<usize>("scale").is_err());
        assert!(c.flag("dump-masks").is_err());
    }

    #[test]
    fn flags() {
        let c = ConfigFile::parse("a=true\nb=0\nc=yes").unwrap();
        assert_eq!(c.flag("a").unwrap(), Some(true));
        assert_eq!(c.flag("b").unwrap(), Some(false));
        assert_eq!(c.flag("c").unwrap(), Some(true));
        assert_eq!(c.flag("d").unwrap(), None);
    }
}
